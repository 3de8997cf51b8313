"""Implementations of the four CLI commands.

Each ``run_*`` function takes a :class:`RunConfig` and an output directory,
writes its artifacts and returns ``(rows, exit_code)``.  Work is split into
independent cells evaluated by a thread pool whose ``map`` preserves input
order, so the bytes written never depend on the number of threads.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import relu
from .compiler import CompileSpec, check_bounds, compile_mlp, expected_depth, metadata, realized_problem
from .config import ConfigError, RunConfig
from .mlp import (
    MlpParams,
    ResourceLimitError,
    mlp_error_bound,
    evaluate,
    gaussian_moment_bound,
    mc_samples,
    node_count,
    sizing_rules,
    sizing_constant,
)
from .problems import make_builtin, scalar_function
from .pwl import clipped_approx, clipped_grid, width_bound
from .randtree import RandTree

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_CEILING = 4

SOLVE_COLUMNS = {
    "d": "spatial dimension",
    "x": "every coordinate of the evaluation point equals this value",
    "t": "evaluation time",
    "n": "recursion level",
    "M": "Monte Carlo base sample count",
    "runs": "independent realizations averaged",
    "estimate": "mean of the realizations",
    "reference": "reference solution value",
    "abs_error": "|estimate - reference|",
    "rmse": "root-mean-square error of single realizations against the reference",
    "rmse_stderr": "standard error of rmse (delta method; nan when runs = 1)",
    "error_bound": "theoretical L2 error bound for one realization with exact f and g",
    "within_bound": "rmse <= error_bound",
}

COMPILE_COLUMNS = {
    "d": "spatial dimension",
    "n": "recursion level",
    "M": "Monte Carlo base sample count",
    "seed": "master seed of the random tree",
    "depth": "number of affine layers of the compiled network",
    "depth_expected": "n (len(dims f) - 1) + len(dims g)",
    "width_max": "largest hidden width",
    "width_bound": "c (3M)^n",
    "param_count": "weights plus biases",
    "max_rel_error": "max |realize - evaluate| / max(1, |evaluate|) over the check points",
    "equivalence_ok": "max_rel_error <= tolerance",
    "bounds_ok": "depth matches and width within bound",
    "network": "file name of the serialized network",
}

PIPELINE_COLUMNS = {
    "d": "spatial dimension",
    "eps": "target L2 accuracy",
    "c_d_formula": "the constant c_d from its closed-form expression",
    "N_formula": "level N sized with c_d_formula",
    "delta_formula": "perturbation size sized with c_d_formula",
    "c_d": "constant actually used for sizing (config c_d)",
    "n": "level used for the build",
    "M": "sample count used for the build",
    "delta": "accuracy of the f network, eps / (4 B d^p c_d)",
    "f_width": "hidden width of the f network",
    "depth": "number of affine layers of the compiled network",
    "width": "largest hidden width of the compiled network",
    "width_bound": "c (3M)^n",
    "param_count": "weights plus biases of the compiled network",
    "l2_error": "Monte Carlo estimate of the L2(nu_d) error against the reference",
    "l2_stderr": "standard error of l2_error",
    "error_ok": "l2_error + 2 l2_stderr <= eps",
    "bounds_ok": "depth and width formulas hold",
    "slope_eps": "least-squares slope of log param_count vs log(1/eps) at this d",
    "slope_bound": "4 + 2 alpha + beta + gamma with gamma = 1",
    "within_fit": "slope_eps is finite and <= slope_bound",
    "status": "ok, or skipped when the ceiling would be exceeded",
}

INTERP_COLUMNS = {
    "function": "scalar function name",
    "L": "Lipschitz constant",
    "f0_abs": "|f(0)|",
    "q": "growth exponent of the weight 1 + |x|^q",
    "eps": "target weighted accuracy",
    "R": "clipping radius",
    "N": "number of grid intervals",
    "width": "hidden width of the network",
    "width_bound": "closed-form width bound",
    "weighted_error": "max |f - net| / (1 + |x|^q) over the samples",
    "error_ok": "weighted_error <= eps",
    "width_ok": "width <= width_bound",
}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(columns))
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def write_json(path: Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _pmap(fn, cells, threads: int):
    if threads <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, cells))


def _builtin(cfg: RunConfig, d: int):
    try:
        return make_builtin(cfg.problem, d, **cfg.problem_params)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


# solve


def run_solve(cfg: RunConfig, out: Path):
    levels = cfg.solve_levels()
    for d in cfg.d:
        _builtin(cfg, d)  # surface config errors before any work
    for n, M in levels:
        if cfg.runs * node_count(n, M) > cfg.ceiling:
            raise ResourceLimitError(
                f"{cfg.runs} runs at n={n}, M={M} need {cfg.runs * node_count(n, M)} evaluations,"
                f" ceiling is {cfg.ceiling}"
            )
    cells = [(d, x, n, M) for d in cfg.d for x in cfg.points for n, M in levels]

    def cell(key):
        d, xv, n, M = key
        b = _builtin(cfg, d)
        prob = b.problem
        if not 0 <= cfg.t < prob.T:
            raise ConfigError(f"t={cfg.t} must lie in [0, T={prob.T})")
        x = np.full(d, xv)
        tree = RandTree(cfg.seed, d)
        samples = mc_samples(prob, n, M, cfg.t, x, cfg.runs, tree, ceiling=None)
        ref = b.reference(cfg.t, x)
        sq = (samples - ref) ** 2
        rmse = float(np.sqrt(sq.mean()))
        if cfg.runs > 1 and rmse > 0:
            stderr = float(sq.std(ddof=1) / math.sqrt(cfg.runs) / (2 * rmse))
        else:
            stderr = float("nan")
        # the recursion from time t is the horizon-(T - t) problem started at 0
        shifted = replace(prob, T=prob.T - cfg.t)
        moment = gaussian_moment_bound(d, prob.p, prob.q, shifted.T)
        bound = mlp_error_bound(shifted, max(n, 1), M, 0.0, x, moment)
        return {
            "d": d, "x": xv, "t": cfg.t, "n": n, "M": M, "runs": cfg.runs,
            "estimate": float(samples.mean()), "reference": ref,
            "abs_error": abs(float(samples.mean()) - ref), "rmse": rmse, "rmse_stderr": stderr,
            "error_bound": bound, "within_bound": rmse <= bound,
        }

    rows = _pmap(cell, cells, cfg.threads)
    write_csv(out / "report.csv", SOLVE_COLUMNS, rows)
    return rows, EXIT_OK


# compile


def _net_from_spec(spec: dict, d_in: int, default_fn: str, q: float, eps: float, what: str) -> relu.Network:
    kind = spec.get("kind", "clipped")
    try:
        if kind == "clipped":
            f = scalar_function(spec.get("function", default_fn))
            return clipped_approx(f, float(spec.get("q", q)), float(spec.get("eps", eps)))
        if kind == "identity":
            return relu.identity_net(int(spec.get("H", 1)))
        if kind == "random":
            rng = np.random.default_rng(int(spec.get("seed", 0)))
            widths = [d_in] + [int(w) for w in spec.get("widths", [4])] + [1]
            return relu.Network(
                (rng.normal(size=(k, j)) / math.sqrt(j), rng.normal(size=k)) for j, k in zip(widths, widths[1:])
            )
        if kind == "file":
            return relu.load(spec["path"])
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"bad {what} specification {spec!r}: {exc}")
    raise ConfigError(f"unknown {what} kind {kind!r}")


def compile_nets(cfg: RunConfig, d: int):
    opts = cfg.compile
    b = _builtin(cfg, d)
    eps = float(opts.get("f_eps", 0.25))
    net_f = _net_from_spec(opts.get("net_f", {}), 1, b.problem.f.name, b.problem.q, eps, "net_f")
    if "net_g" in opts:
        net_g = _net_from_spec(opts["net_g"], d, "", b.problem.q, eps, "net_g")
    elif b.family is not None:
        net_g = b.family.network(d)
    else:
        raise ConfigError(f"problem {cfg.problem!r} has no exact terminal-value network; set compile.net_g")
    if net_f.d_in != 1 or net_f.d_out != 1:
        raise ConfigError("net_f must be scalar to scalar")
    if net_g.d_in != d or net_g.d_out != 1:
        raise ConfigError(f"net_g must map R^{d} to R")
    return b, net_f, net_g


def run_compile(cfg: RunConfig, out: Path):
    opts = cfg.compile
    n = int(opts.get("n", cfg.n if cfg.n is not None else 2))
    M = int(opts.get("M", cfg.M if cfg.M is not None else 2))
    points = int(opts.get("points", 100))
    tol = float(opts.get("tol", 1e-9))
    if n < 0 or M < 1 or points < 1:
        raise ConfigError("compile needs n >= 0, M >= 1 and points >= 1")
    if node_count(n, M) > cfg.ceiling:
        raise ResourceLimitError(f"n={n}, M={M} needs {node_count(n, M)} nodes, ceiling is {cfg.ceiling}")
    nets = {d: compile_nets(cfg, d) for d in cfg.d}

    def cell(d):
        b, net_f, net_g = nets[d]
        T = b.problem.T
        if not 0 <= cfg.t <= T:
            raise ConfigError(f"t={cfg.t} must lie in [0, T={T}]")
        c = max(2, net_f.dims.supnorm(), net_g.dims.supnorm())
        spec = CompileSpec(net_f, net_g, n, M, cfg.t, T, RandTree(cfg.seed, d), c, ceiling=cfg.ceiling)
        psi = compile_mlp(spec)
        bounds = check_bounds(psi, spec)
        prob = realized_problem(spec, q=b.problem.q)
        xs = np.random.default_rng([cfg.seed, d]).normal(size=(points, d))
        direct = evaluate(prob, MlpParams(n, M, cfg.t, spec.theta), xs, spec.tree, ceiling=None)
        net_vals = psi(xs)[:, 0]
        err = float(np.max(np.abs(net_vals - direct) / np.maximum(1.0, np.abs(direct))))
        name = f"network_d{d}.json"
        relu.save(psi, out / name)
        meta = metadata(psi, spec)
        meta.update(bounds.as_dict())
        meta.update(max_rel_error=err, tolerance=tol, equivalence_ok=err <= tol, check_points=points,
                    problem=cfg.problem, f_dims=list(net_f.dims), g_dims=list(net_g.dims))
        write_json(out / f"network_d{d}.meta.json", meta)
        return {
            "d": d, "n": n, "M": M, "seed": cfg.seed, "depth": bounds.depth,
            "depth_expected": expected_depth(spec), "width_max": bounds.width_max,
            "width_bound": bounds.width_bound, "param_count": bounds.param_count,
            "max_rel_error": err, "equivalence_ok": err <= tol, "bounds_ok": bounds.ok(), "network": name,
        }

    rows = _pmap(cell, list(cfg.d), cfg.threads)
    write_csv(out / "report.csv", COMPILE_COLUMNS, rows)
    ok = all(r["equivalence_ok"] and r["bounds_ok"] for r in rows)
    return rows, EXIT_OK if ok else EXIT_CHECK


# pipeline


def measure_samples(cfg: RunConfig, d: int, stream: int) -> np.ndarray:
    if cfg.measure == "points":
        pts = np.array(cfg.measure_points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != d:
            raise ConfigError(f"measure points must all have dimension {d}")
        return pts
    return np.random.default_rng([cfg.seed, d, stream]).random((cfg.measure_samples, d))


def measure_moment(cfg: RunConfig, d: int, power: float) -> float:
    """``(int ||x||^power nu_d(dx))^(1/power)``, bounded by sqrt(d) on the unit cube."""
    if cfg.measure == "points":
        norms = np.linalg.norm(np.array(cfg.measure_points, dtype=np.float64), axis=1)
        return float(np.mean(norms**power) ** (1 / power))
    return math.sqrt(d)


def _fit_slope(xs, ys) -> float:
    if len(xs) < 2 or len(set(xs)) < 2:
        return float("nan")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def run_pipeline(cfg: RunConfig, out: Path):
    cells = [(d, eps) for d in cfg.d for eps in cfg.eps]
    builtins = {d: _builtin(cfg, d) for d in cfg.d}
    for d, b in builtins.items():
        if b.family is None:
            raise ConfigError(f"problem {cfg.problem!r} has no terminal-value network family")
        if cfg.measure == "points":
            measure_samples(cfg, d, 0)

    def cell(key):
        d, eps = key
        b = builtins[d]
        prob, fam = b.problem, b.family
        c_formula = sizing_constant(prob, measure_moment(cfg, d, 2 * prob.p * prob.q))
        N_formula, delta_formula = sizing_rules(prob, eps, c_formula)
        c_d = c_formula if cfg.c_d == "formula" else float(cfg.c_d)
        N, delta = sizing_rules(prob, eps, c_d)
        n = cfg.n if cfg.n is not None else N
        M = cfg.M if cfg.M is not None else N
        row = {
            "d": d, "eps": eps, "c_d_formula": c_formula, "N_formula": N_formula,
            "delta_formula": delta_formula, "c_d": c_d, "n": n, "M": M, "delta": delta,
        }
        f_width = clipped_grid(prob.f, prob.q, delta).N + 1
        row["f_width"] = f_width
        nodes = node_count(n, M)
        if nodes * f_width > cfg.ceiling:
            row.update(status="skipped", depth=0, width=0, width_bound=0.0, param_count=0,
                       l2_error=float("nan"), l2_stderr=float("nan"), error_ok=False, bounds_ok=False)
            return row
        net_f = clipped_approx(prob.f, prob.q, delta)
        net_g = fam.network(d)
        c = max(2, net_f.dims.supnorm(), net_g.dims.supnorm())
        spec = CompileSpec(net_f, net_g, n, M, 0.0, prob.T, RandTree(cfg.seed, d), c, ceiling=None)
        psi = compile_mlp(spec)
        bounds = check_bounds(psi, spec)
        xs = measure_samples(cfg, d, cells.index(key))
        approx = psi(xs)[:, 0]
        ref = np.array([b.reference(0.0, x) for x in xs])
        sq = (approx - ref) ** 2
        l2 = float(np.sqrt(sq.mean()))
        if len(sq) > 1 and l2 > 0:
            se = float(sq.std(ddof=1) / math.sqrt(len(sq)) / (2 * l2))
        else:
            se = 0.0
        row.update(
            status="ok", depth=bounds.depth, width=bounds.width_max, width_bound=bounds.width_bound,
            param_count=bounds.param_count, l2_error=l2, l2_stderr=se,
            error_ok=l2 + 2 * se <= eps, bounds_ok=bounds.ok(),
        )
        return row

    rows = _pmap(cell, cells, cfg.threads)

    fam = builtins[cfg.d[0]].family
    slope_bound = 4 + 2 * fam.alpha + fam.beta + 1
    summary = {"slope_bound": slope_bound, "slope_eps": {}, "slope_d": {}}
    for d in cfg.d:
        done = [r for r in rows if r["d"] == d and r["status"] == "ok"]
        slope = _fit_slope([1 / r["eps"] for r in done], [r["param_count"] for r in done])
        summary["slope_eps"][str(d)] = slope
        for r in rows:
            if r["d"] == d:
                r.update(slope_eps=slope, slope_bound=slope_bound,
                         within_fit=math.isfinite(slope) and slope <= slope_bound)
    for eps in cfg.eps:
        done = [r for r in rows if r["eps"] == eps and r["status"] == "ok"]
        summary["slope_d"][repr(eps)] = _fit_slope([r["d"] for r in done], [r["param_count"] for r in done])
    summary["skipped"] = sum(r["status"] == "skipped" for r in rows)
    write_csv(out / "report.csv", PIPELINE_COLUMNS, rows)
    write_json(out / "summary.json", summary)
    done = [r for r in rows if r["status"] == "ok"]
    ok = all(r["error_ok"] and r["bounds_ok"] for r in done)
    if len(done) >= 2 and len({r["eps"] for r in done}) >= 2:
        ok = ok and all(r["within_fit"] for r in done)
    return rows, EXIT_OK if ok else EXIT_CHECK


# interp


def run_interp(cfg: RunConfig, out: Path):
    opts = cfg.interp
    names = opts.get("function", "sin")
    names = names if isinstance(names, list) else [names]
    q = float(opts.get("q", 2.0))
    eps = float(opts.get("eps", cfg.eps[0]))
    samples = int(opts.get("samples", 10_000))
    if not q > 1 or not 0 < eps < 1 or samples < 2:
        raise ConfigError("interp needs q > 1, 0 < eps < 1 and samples >= 2")
    try:
        fns = [scalar_function(name) for name in names]
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]))

    def cell(f):
        grid = clipped_grid(f, q, eps)
        net = clipped_approx(f, q, eps)
        R = grid.b
        xs = np.linspace(-4 * R, 4 * R, samples)
        werr = float(np.max(np.abs(f(xs) - net(xs[:, None])[:, 0]) / (1 + np.abs(xs) ** q)))
        wb = width_bound(f, q, eps)
        width = net.dims[1]
        name = f"interp_{f.name}.json"
        relu.save(net, out / name)
        return {
            "function": f.name, "L": f.L, "f0_abs": f.f0_abs, "q": q, "eps": eps, "R": R, "N": grid.N,
            "width": width, "width_bound": wb, "weighted_error": werr,
            "error_ok": werr <= eps, "width_ok": width <= wb,
        }

    rows = _pmap(cell, fns, cfg.threads)
    write_csv(out / "report.csv", INTERP_COLUMNS, rows)
    ok = all(r["error_ok"] and r["width_ok"] for r in rows)
    return rows, EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "solve": (run_solve, SOLVE_COLUMNS),
    "compile": (run_compile, COMPILE_COLUMNS),
    "pipeline": (run_pipeline, PIPELINE_COLUMNS),
    "interp": (run_interp, INTERP_COLUMNS),
}
