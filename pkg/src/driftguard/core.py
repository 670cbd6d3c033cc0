"""Shared domain types and residual primitives.

Everything downstream (channels, detectors, pipeline, evaluation) speaks in
terms of these types: one timestamped observation, the per-step verdict about
it, and ground-truth event labels for synthetic streams.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration (unknown key, bad value, inconsistent settings)."""


class DataError(ValueError):
    """Malformed input data (schema mismatch, missing column, empty window)."""


class DegenerateWindowError(ValueError):
    """A regression window that cannot be fitted (rank deficiency etc.)."""


class DecisionKind(str, Enum):
    TRAINING = "training"
    NORMAL = "normal"
    WARNING = "warning"
    OUTLIER = "outlier"
    DRIFT_ABRUPT = "drift_abrupt"
    DRIFT_INCREMENTAL = "drift_incremental"

    @property
    def is_drift(self) -> bool:
        return self in (DecisionKind.DRIFT_ABRUPT, DecisionKind.DRIFT_INCREMENTAL)


class EventKind(str, Enum):
    """Ground-truth event labels for synthetic streams."""

    OUTLIER = "outlier"
    DRIFT_ABRUPT = "abrupt"
    DRIFT_INCREMENTAL = "incremental"


@dataclass(frozen=True)
class Sample:
    """One observation: time index, feature vector and scalar target."""

    t: int
    x: np.ndarray
    y: float


@dataclass(frozen=True)
class Decision:
    """Per-step verdict.

    ``about_t`` is the index the verdict concerns.  In monitoring mode the
    verdict about step t is only emitted once step t+1 has been seen (one-step
    lag); training verdicts concern the sample itself.
    """

    kind: DecisionKind
    about_t: int


@dataclass(frozen=True)
class GroundTruthEvent:
    t: int
    kind: EventKind


@dataclass
class DecisionLog:
    """One decision per processed sample, plus per-step model predictions.

    ``predictions[t]`` is the model's prediction for sample t (in-sample
    fitted value for training spans, NaN where no fit ever covered t).
    """

    decisions: list[Decision]
    predictions: np.ndarray
    y: np.ndarray
    d: int
    config_fingerprint: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.decisions)

    def kinds(self) -> list[DecisionKind]:
        return [dec.kind for dec in self.decisions]

    def decisions_of(self, *kinds: DecisionKind) -> list[Decision]:
        wanted = set(kinds)
        return [dec for dec in self.decisions if dec.kind in wanted]


def config_fingerprint(text: str) -> str:
    """Stable fingerprint of a canonical configuration string."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def absolute_residual(y: float, x: np.ndarray, beta: np.ndarray) -> float:
    """|y - (intercept + x . beta_features)| for a coefficient vector with the
    intercept stored in component 0."""
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or x.ndim != 1 or beta.shape[0] != x.shape[0] + 1:
        raise DataError(
            f"coefficient/feature dimension mismatch: beta has {beta.shape[0]} "
            f"components, x has {x.shape[0]} (expected {x.shape[0] + 1} with intercept)"
        )
    return abs(y - (beta[0] + float(x @ beta[1:])))


def residual_stats(residuals: np.ndarray) -> tuple[float, float]:
    """Mean and population standard deviation of signed residuals.

    The deviation is mean-centered and divides by the sequence length (not
    length-1): downstream thresholds of the form mu + q*sigma presume a
    centered scale estimate.
    """
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size == 0:
        raise DataError("residual_stats requires a nonempty residual sequence")
    mu = float(np.mean(residuals))
    sigma = float(np.sqrt(np.mean((residuals - mu) ** 2)))
    return mu, sigma
