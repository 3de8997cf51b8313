"""JSON run configuration shared by all CLI subcommands."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .mlp import DEFAULT_CEILING


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_KNOWN_KEYS = {
    "problem", "d", "eps", "n", "M", "levels", "t", "points", "runs", "seed",
    "ceiling", "measure", "measure_samples", "c_d", "compile", "interp", "threads",
}


@dataclass(frozen=True)
class RunConfig:
    problem: str = "ode-exp"
    problem_params: dict = field(default_factory=dict)
    d: tuple = (1,)
    eps: tuple = (0.5,)
    n: int | None = None
    M: int | None = None
    levels: tuple = ()
    t: float = 0.0
    points: tuple = (0.0,)
    runs: int = 1
    seed: int = 0
    ceiling: int = DEFAULT_CEILING
    measure: str = "cube"
    measure_points: tuple = ()
    measure_samples: int = 64
    c_d: object = "formula"
    compile: dict = field(default_factory=dict)
    interp: dict = field(default_factory=dict)
    threads: int = 1

    def solve_levels(self) -> list[tuple[int, int]]:
        if self.levels:
            return [tuple(lv) for lv in self.levels]
        if self.n is not None:
            return [(self.n, self.M if self.M is not None else self.n)]
        return [(k, k) for k in (1, 2, 3)]


def _int_list(value, name):
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError(f"{name} must be a nonempty list")
    try:
        out = tuple(int(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must contain integers, got {value!r}")
    if any(float(v) != float(o) for v, o in zip(values, out)):
        raise ConfigError(f"{name} must contain integers, got {value!r}")
    return out


def _float_list(value, name):
    values = value if isinstance(value, list) else [value]
    if not values:
        raise ConfigError(f"{name} must be a nonempty list")
    try:
        return tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must contain numbers, got {value!r}")


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    kw = {}
    problem = doc.get("problem", "ode-exp")
    if isinstance(problem, dict):
        problem = dict(problem)
        if "name" not in problem:
            raise ConfigError("problem object needs a 'name'")
        kw["problem"] = str(problem.pop("name"))
        kw["problem_params"] = problem
    else:
        kw["problem"] = str(problem)
    if "d" in doc:
        kw["d"] = _int_list(doc["d"], "d")
        if min(kw["d"]) < 1:
            raise ConfigError("dimensions must be >= 1")
    if "eps" in doc:
        kw["eps"] = _float_list(doc["eps"], "eps")
        if any(not 0 < e <= 1 for e in kw["eps"]):
            raise ConfigError("every eps must lie in (0, 1]")
    for key in ("n", "M"):
        if doc.get(key) is not None:
            (kw[key],) = _int_list(doc[key], key)
    if kw.get("n", 0) < 0 or kw.get("M", 1) < 1:
        raise ConfigError("need n >= 0 and M >= 1")
    if "levels" in doc:
        levels = doc["levels"]
        if not isinstance(levels, list) or not levels:
            raise ConfigError("levels must be a nonempty list of [n, M] pairs")
        kw["levels"] = tuple(_int_list(lv, "levels entry") for lv in levels)
        if any(len(lv) != 2 or lv[0] < 0 or lv[1] < 1 for lv in kw["levels"]):
            raise ConfigError("levels entries must be [n >= 0, M >= 1]")
    if "t" in doc:
        kw["t"] = float(doc["t"])
    if "points" in doc:
        kw["points"] = _float_list(doc["points"], "points")
    for key in ("runs", "seed", "ceiling", "measure_samples", "threads"):
        if key in doc:
            (kw[key],) = _int_list(doc[key], key)
    if kw.get("runs", 1) < 1 or kw.get("measure_samples", 1) < 1 or kw.get("threads", 1) < 1:
        raise ConfigError("runs, measure_samples and threads must be >= 1")
    if "measure" in doc:
        measure = doc["measure"]
        if measure == "cube":
            kw["measure"] = "cube"
        elif isinstance(measure, dict) and "points" in measure:
            pts = measure["points"]
            if not isinstance(pts, list) or not pts:
                raise ConfigError("measure points must be a nonempty list")
            kw["measure"] = "points"
            kw["measure_points"] = tuple(tuple(float(v) for v in p) for p in pts)
        else:
            raise ConfigError("measure must be 'cube' or {'points': [[...], ...]}")
    if "c_d" in doc:
        c_d = doc["c_d"]
        if c_d != "formula":
            try:
                c_d = float(c_d)
            except (TypeError, ValueError):
                raise ConfigError(f"c_d must be 'formula' or a number >= 1, got {c_d!r}")
            if c_d < 1:
                raise ConfigError("c_d must be >= 1")
        kw["c_d"] = c_d
    for key in ("compile", "interp"):
        if key in doc:
            if not isinstance(doc[key], dict):
                raise ConfigError(f"{key} must be an object")
            kw[key] = dict(doc[key])
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    return parse_config(doc)


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
