"""Experiment configuration: parsing, validation, object construction.

Configs are JSON with nested blocks.  Rational-valued fields accept strings
like "1/3" (parsed exactly) as well as plain integers.  Validation errors
carry the dotted path of the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .operators import (
    ConstantMap,
    GeodesicPull,
    Indicator,
    ProxFamily,
    ResolventFamily,
    ScaledL1,
    ShrinkTowardRoot,
    SquaredDistance,
)
from .schedules import (
    Schedule,
    harmonic_schedule,
    power34_schedule,
    power_decay_schedule,
    shifted_harmonic_schedule,
)
from .spaces import Ball, Box, EuclideanSpace, TreePoint, TripodSpace, WholeSpace

__all__ = ["ConfigError", "Experiment", "load_experiment", "parse_experiment"]


class ConfigError(ValueError):
    """Invalid configuration; message carries the dotted field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(obj: dict, path: str, key: str, required: bool = True, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required field")
        return default
    return obj[key]


def _rational(value, path: str) -> Fraction:
    try:
        if isinstance(value, str):
            return Fraction(value)
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, float) and value == int(value):
            return Fraction(int(value))
    except (ValueError, ZeroDivisionError):
        pass
    raise ConfigError(path, f"expected an exact rational (int or 'p/q' string), got {value!r}")


def _positive_int(value, path: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(path, f"expected a positive integer, got {value!r}")
    return value


@dataclass
class Experiment:
    """Validated experiment: constructed objects plus raw knob values."""

    space: Union[EuclideanSpace, TripodSpace]
    family: Union[ProxFamily, ResolventFamily]
    contraction: Union[ConstantMap, GeodesicPull]
    schedule: Schedule
    x0: object
    z: object
    iterations: int
    k_max: int
    tm_indices: List[int]
    rates: List[Union[str, dict]]
    metastability: Optional[dict]
    slack: float
    eps_fp: float
    metric_tol: float
    seed: int
    partial_ok: bool
    output_dir: Optional[Path]
    overrides: dict
    axioms: dict
    raw: dict


def _parse_point(space, value, path: str):
    if isinstance(space, EuclideanSpace):
        if not isinstance(value, list) or len(value) != space.dim:
            raise ConfigError(path, f"expected {space.dim} coordinates")
        try:
            return space.point([float(v) for v in value])
        except (TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc))
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(path, "expected [branch, t] for a tree point")
    branch, t = value
    if not isinstance(branch, int) or branch < 0 or branch >= space.branches:
        raise ConfigError(path, f"branch must be an integer in [0,{space.branches})")
    if not isinstance(t, (int, float)) or t < 0:
        raise ConfigError(path, "tree coordinate must be a number >= 0")
    return space.point(branch, float(t))


def _parse_subset(space_kind: str, dim: Optional[int], block, path: str):
    if block is None:
        return WholeSpace()
    kind = _get(block, path, "kind")
    if kind == "whole":
        return WholeSpace()
    if kind == "ball":
        radius = _get(block, path, "radius")
        if not isinstance(radius, (int, float)) or radius <= 0:
            raise ConfigError(f"{path}.radius", "must be a positive number")
        center = _get(block, path, "center")
        if space_kind == "euclidean":
            c = np.asarray([float(v) for v in center], dtype=float)
            if c.shape != (dim,):
                raise ConfigError(f"{path}.center", f"expected {dim} coordinates")
        else:
            c = TreePoint(int(center[0]), float(center[1]))
        return Ball(c, float(radius))
    if kind == "box":
        if space_kind != "euclidean":
            raise ConfigError(f"{path}.kind", "box subsets require a euclidean space")
        lo = np.asarray([float(v) for v in _get(block, path, "lo")], dtype=float)
        hi = np.asarray([float(v) for v in _get(block, path, "hi")], dtype=float)
        if lo.shape != (dim,) or hi.shape != (dim,):
            raise ConfigError(path, f"box bounds must have {dim} coordinates")
        if np.any(lo > hi):
            raise ConfigError(path, "box lower bound exceeds upper bound")
        return Box(lo, hi)
    raise ConfigError(f"{path}.kind", f"unknown subset kind {kind!r}")


def _parse_space(block, path: str = "space"):
    kind = _get(block, path, "kind")
    if kind == "euclidean":
        dim = _positive_int(_get(block, path, "dim"), f"{path}.dim")
        subset = _parse_subset("euclidean", dim, block.get("subset"), f"{path}.subset")
        return EuclideanSpace(dim, subset)
    if kind == "tripod":
        branches = _positive_int(_get(block, path, "branches"), f"{path}.branches")
        if branches < 2:
            raise ConfigError(f"{path}.branches", "need at least 2 branches")
        subset = _parse_subset("tripod", None, block.get("subset"), f"{path}.subset")
        return TripodSpace(branches, subset)
    raise ConfigError(f"{path}.kind", f"unknown space kind {kind!r}")


def _parse_schedule(block, path: str = "schedule") -> Schedule:
    preset = _get(block, path, "preset")
    if preset == "harmonic":
        return harmonic_schedule(_rational(_get(block, path, "alpha", default="0",
                                                required=False), f"{path}.alpha"))
    if preset == "power34":
        return power34_schedule()
    if preset == "shifted_harmonic":
        return shifted_harmonic_schedule(
            _rational(_get(block, path, "alpha", default="0", required=False),
                      f"{path}.alpha"),
            _rational(_get(block, path, "alpha_floor"), f"{path}.alpha_floor"))
    if preset == "power_decay":
        p = _positive_int(_get(block, path, "p"), f"{path}.p")
        q = _positive_int(_get(block, path, "q"), f"{path}.q")
        if p >= q:
            raise ConfigError(path, f"exponent p/q must lie in (0,1), got {p}/{q}")
        return power_decay_schedule(p, q)
    raise ConfigError(f"{path}.preset",
                      f"unknown preset {preset!r}; valid: harmonic, power34, "
                      f"shifted_harmonic, power_decay")


def _parse_objective(block, space, path: str):
    kind = _get(block, path, "kind")
    if kind == "squared_distance":
        return SquaredDistance(_parse_point(space, _get(block, path, "b"), f"{path}.b"))
    if kind == "l1":
        c = block.get("c", 1.0)
        if not isinstance(c, (int, float)) or c <= 0:
            raise ConfigError(f"{path}.c", "scale must be a positive number")
        return ScaledL1(float(c))
    if kind == "indicator":
        space_kind = "euclidean" if isinstance(space, EuclideanSpace) else "tripod"
        dim = space.dim if isinstance(space, EuclideanSpace) else None
        region = _parse_subset(space_kind, dim, _get(block, path, "region"),
                               f"{path}.region")
        if isinstance(region, WholeSpace):
            raise ConfigError(f"{path}.region", "indicator region must be ball or box")
        return Indicator(region)
    raise ConfigError(f"{path}.kind", f"unknown objective kind {kind!r}")


def _parse_family(block, space, schedule: Schedule, path: str = "family"):
    kind = _get(block, path, "kind")
    z = _parse_point(space, _get(block, path, "z"), f"{path}.z")
    if kind == "prox":
        objective = _parse_objective(_get(block, path, "objective"), space,
                                     f"{path}.objective")
        return ProxFamily(objective, schedule.lambdas, z)
    if kind == "resolvent_nonexp":
        map_block = _get(block, path, "map")
        map_kind = _get(map_block, f"{path}.map", "kind")
        if map_kind == "shrink_toward_root":
            c = map_block.get("c", 1.0)
            T = ShrinkTowardRoot(float(c))
        else:
            raise ConfigError(f"{path}.map.kind", f"unknown map kind {map_kind!r}")
        return ResolventFamily(T, schedule.lambdas, z)
    raise ConfigError(f"{path}.kind", f"unknown family kind {kind!r}")


def _parse_contraction(block, space, path: str = "contraction"):
    kind = _get(block, path, "kind")
    u = _parse_point(space, _get(block, path, "u"), f"{path}.u")
    if kind == "constant":
        return ConstantMap(u)
    if kind == "geodesic_pull":
        factor = _rational(_get(block, path, "factor"), f"{path}.factor")
        if not 0 <= factor < 1:
            raise ConfigError(f"{path}.factor", f"must lie in [0,1), got {factor}")
        return GeodesicPull(u, float(factor))
    raise ConfigError(f"{path}.kind", f"unknown contraction kind {kind!r}")


def parse_experiment(raw: dict, base_dir: Optional[Path] = None) -> Experiment:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    space = _parse_space(_get(raw, "<root>", "space"))
    schedule = _parse_schedule(_get(raw, "<root>", "schedule"))
    family = _parse_family(_get(raw, "<root>", "family"), space, schedule)
    contraction = _parse_contraction(_get(raw, "<root>", "contraction"), space)
    x0 = _parse_point(space, _get(raw, "<root>", "x0"), "x0")

    iterations = _positive_int(raw.get("iterations", 1000), "iterations")
    k_max = raw.get("k_max", 50)
    if not isinstance(k_max, int) or k_max < 0:
        raise ConfigError("k_max", "must be a nonnegative integer")

    tm_indices = raw.get("tm_indices", [])
    if not isinstance(tm_indices, list) or not all(
            isinstance(m, int) and m >= 0 for m in tm_indices):
        raise ConfigError("tm_indices", "must be a list of naturals")

    rates = raw.get("rates", [])
    if not isinstance(rates, list):
        raise ConfigError("rates", "must be a list of rate identifiers")

    tol = raw.get("tolerances", {})
    slack = float(tol.get("slack", 1e-9))
    eps_fp = float(tol.get("eps_fp", 1e-10))
    metric_tol = float(tol.get("metric_tol", 1e-9))

    meta = raw.get("metastability")
    if meta is not None and not isinstance(meta, dict):
        raise ConfigError("metastability", "must be an object")

    out_dir = raw.get("output_dir")
    if out_dir is not None:
        out_dir = Path(out_dir)
        if base_dir is not None and not out_dir.is_absolute():
            out_dir = base_dir / out_dir

    return Experiment(
        space=space, family=family, contraction=contraction, schedule=schedule,
        x0=x0, z=family.z, iterations=iterations, k_max=k_max,
        tm_indices=list(tm_indices), rates=list(rates), metastability=meta,
        slack=slack, eps_fp=eps_fp, metric_tol=metric_tol,
        seed=int(raw.get("seed", 0)), partial_ok=bool(raw.get("partial_ok", False)),
        output_dir=out_dir, overrides=raw.get("overrides", {}),
        axioms=raw.get("axioms", {}), raw=raw,
    )


def load_experiment(path: Union[str, Path]) -> Experiment:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("<file>", f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON in {path}: {exc}")
    return parse_experiment(raw, base_dir=path.parent)
