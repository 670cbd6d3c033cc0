"""Sequential space-filling hyperparameter search.

Each round lays a shifted rank-1 lattice over the current search box and
evaluates the objective at every point; the next round shrinks the box
around the incumbent best and repeats.  The lattice generator uses the
generalized golden ratio so consecutive points fill the box evenly in any
dimension; the per-round shift is drawn from a seeded generator, keeping the
whole search deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import ConfigError, DataError

logger = logging.getLogger(__name__)

PARAM_FLOAT = "float"
PARAM_INT = "int"
PARAM_CAT = "cat"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    lo: float = 0.0
    hi: float = 1.0
    choices: tuple = ()

    def validate(self) -> None:
        if self.kind in (PARAM_FLOAT, PARAM_INT):
            if not self.lo < self.hi:
                raise ConfigError(f"parameter {self.name}: empty range [{self.lo}, {self.hi}]")
        elif self.kind == PARAM_CAT:
            if not self.choices:
                raise ConfigError(f"parameter {self.name}: empty choice set")
        else:
            raise ConfigError(f"parameter {self.name}: unknown kind {self.kind!r}")


@dataclass
class TracePoint:
    round: int
    index: int
    params: dict
    objective: float | None
    error: str = ""


@dataclass
class TuneResult:
    best_params: dict
    best_objective: float
    trace: list[TracePoint] = field(default_factory=list)


def _lattice_alpha(dim: int) -> np.ndarray:
    # Generalized golden ratio: unique positive root of x**(d+1) = x + 1.
    x = 2.0
    for _ in range(64):
        x = (1.0 + x) ** (1.0 / (dim + 1))
    return np.array([(1.0 / x) ** (j + 1) % 1.0 for j in range(dim)])


def lattice_points(n: int, dim: int, shift: np.ndarray) -> np.ndarray:
    """n shifted lattice points in the unit cube."""
    alpha = _lattice_alpha(dim)
    idx = np.arange(1, n + 1)[:, None]
    return (shift[None, :] + idx * alpha[None, :]) % 1.0


def _materialize(u: float, spec: ParamSpec, lo: float, hi: float):
    if spec.kind == PARAM_CAT:
        # Stratified index mapping over the full (unshrunk) choice set.
        k = len(spec.choices)
        return spec.choices[min(int(u * k), k - 1)]
    value = lo + u * (hi - lo)
    if spec.kind == PARAM_INT:
        return int(round(value))
    return value


def sequd_search(
    objective: Callable[[dict], float],
    space: Sequence[ParamSpec],
    n_rounds: int = 5,
    points_per_round: int = 20,
    shrink: float = 0.5,
    seed: int = 0,
) -> TuneResult:
    """Minimize ``objective`` over the declared space.

    Round r lays its design over a box of edge ``initial_edge * shrink**(r-1)``
    centered on the incumbent best and clipped to the declared bounds.
    A point whose evaluation raises is recorded as failed and skipped; a
    round in which every point fails aborts the search.
    """
    if n_rounds < 1 or points_per_round < 2:
        raise ConfigError("need n_rounds >= 1 and points_per_round >= 2")
    if not 0.0 < shrink < 1.0:
        raise ConfigError(f"shrink must lie in (0, 1), got {shrink}")
    if not space:
        raise ConfigError("empty search space")
    for spec in space:
        spec.validate()

    rng = np.random.Generator(np.random.PCG64(seed))
    dim = len(space)
    center = {s.name: 0.5 * (s.lo + s.hi) for s in space if s.kind != PARAM_CAT}
    best_params: dict | None = None
    best_value = np.inf
    trace: list[TracePoint] = []

    for rnd in range(1, n_rounds + 1):
        boxes = {}
        for s in space:
            if s.kind == PARAM_CAT:
                continue
            edge = (s.hi - s.lo) * shrink ** (rnd - 1)
            lo = max(s.lo, center[s.name] - 0.5 * edge)
            hi = min(s.hi, center[s.name] + 0.5 * edge)
            boxes[s.name] = (lo, hi)
        design = lattice_points(points_per_round, dim, rng.random(dim))
        any_ok = False
        for i, row in enumerate(design):
            params = {}
            for j, s in enumerate(space):
                lo, hi = boxes.get(s.name, (s.lo, s.hi))
                params[s.name] = _materialize(float(row[j]), s, lo, hi)
            try:
                value = float(objective(params))
            except Exception as exc:  # noqa: BLE001 - objective is user code
                trace.append(TracePoint(rnd, i, params, None, error=str(exc)))
                logger.debug("tune point failed: %s (%s)", params, exc)
                continue
            any_ok = True
            trace.append(TracePoint(rnd, i, params, value))
            if value < best_value:
                best_value = value
                best_params = dict(params)
        if not any_ok:
            raise DataError(f"tuning round {rnd}: every objective evaluation failed")
        for s in space:
            if s.kind != PARAM_CAT and best_params is not None:
                center[s.name] = float(best_params[s.name])
    assert best_params is not None
    return TuneResult(best_params=best_params, best_objective=best_value, trace=trace)
