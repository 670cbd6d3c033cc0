"""Channel II: the EWMAD-DT detector.

The detector tracks an exponentially weighted deviation of the absolute
residuals routed into it:

    S <- (1 - tau) * S + tau * (R - Rbar)

where Rbar is the running mean of the routed residuals since the last reset.
The monitored statistic is S corrected by its running minimum, compared
against a dynamic threshold proportional to Rbar.  On a firing, the sign of
the k-th order difference of Rbar separates rising-residual onsets from the
stabilization that marks the end of an incremental transition; onsets are
held in a single pending slot so the following detection epoch can finalize
their type retroactively.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .core import DataError, DecisionKind

THRESHOLD_FORM_INSTANT = "instant"
THRESHOLD_FORM_SMOOTHED = "smoothed"


class DriftType(str, Enum):
    ABRUPT = "abrupt"
    INCREMENTAL_START = "incremental_start"
    INCREMENTAL_END = "incremental_end"
    SLOW = "slow"  # used by the lagged-moving-average baseline only


@dataclass(frozen=True)
class DriftSignal:
    fired: bool
    type: DriftType | None = None
    statistic: float = 0.0
    threshold: float = 0.0


NO_SIGNAL = DriftSignal(fired=False)


@dataclass(frozen=True)
class PendingResolution:
    """What the caller must do with the pending onset and the new firing.

    ``retype_to``: final kind for the previously pending onset (None if there
    was none).  ``emit``: decision kind for the new firing (None when the
    firing is absorbed).  ``becomes_pending``: the new firing awaits
    retroactive typing.
    """

    retype_to: DecisionKind | None
    emit: DecisionKind | None
    becomes_pending: bool


def resolve_pending(pending_exists: bool, fired_type: DriftType) -> PendingResolution:
    """Finalize drift types across consecutive detection epochs.

    An onset immediately followed (next detection epoch) by an
    incremental-end firing was the start of an incremental drift; the end
    firing itself is absorbed.  Every other pending onset finalizes as
    abrupt.  An end firing with nothing pending is absorbed silently.
    """
    old = DecisionKind.DRIFT_ABRUPT if pending_exists else None
    if fired_type is DriftType.ABRUPT:
        return PendingResolution(retype_to=old, emit=DecisionKind.DRIFT_ABRUPT, becomes_pending=False)
    if fired_type is DriftType.INCREMENTAL_START:
        return PendingResolution(retype_to=old, emit=DecisionKind.DRIFT_ABRUPT, becomes_pending=True)
    if fired_type is DriftType.INCREMENTAL_END:
        retype = DecisionKind.DRIFT_INCREMENTAL if pending_exists else None
        return PendingResolution(retype_to=retype, emit=None, becomes_pending=False)
    raise DataError(f"cannot resolve drift type {fired_type!r}")


class EwmadState:
    """EWMAD-DT statistics plus hyperparameters.

    One instance per stream; value-semantic, single writer.  ``update`` does
    not self-reset on a firing: the caller decides when to call ``reset``
    (the pending-onset marker survives resets so retroactive typing works).
    """

    def __init__(
        self,
        tau: float = 0.1,
        xi: float = 0.3,
        k: int = 10,
        threshold_form: str = THRESHOLD_FORM_INSTANT,
    ) -> None:
        if not 0.0 < tau <= 1.0:
            raise DataError(f"tau must lie in (0, 1], got {tau}")
        if not 0.0 < xi < 1.0:
            raise DataError(f"xi must lie in (0, 1), got {xi}")
        if k < 1:
            raise DataError(f"difference order k must be >= 1, got {k}")
        if threshold_form not in (THRESHOLD_FORM_INSTANT, THRESHOLD_FORM_SMOOTHED):
            raise DataError(f"unknown threshold form {threshold_form!r}")
        self.tau = tau
        self.xi = xi
        self.k = k
        self.threshold_form = threshold_form
        self.S = 0.0
        self.run_min = 0.0
        self.t_prime = 0
        self.sum_R = 0.0
        self.theta = 0.0
        self.mean_history: deque[float] = deque(maxlen=k + 1)
        self.pending_onset = False

    # -- detector protocol -------------------------------------------------

    def set_reference(self, mu_abs: float, sigma: float) -> None:
        # Self-normalizing via the dynamic threshold; references unused.
        pass

    def update(self, r: float) -> DriftSignal:
        return ewmad_update(self, r)

    def reset(self) -> None:
        ewmad_reset(self)

    # -- serialization -----------------------------------------------------

    def snapshot(self) -> dict:
        return {
            "tau": self.tau,
            "xi": self.xi,
            "k": self.k,
            "threshold_form": self.threshold_form,
            "S": self.S,
            "run_min": self.run_min,
            "t_prime": self.t_prime,
            "sum_R": self.sum_R,
            "theta": self.theta,
            "mean_history": list(self.mean_history),
            "pending_onset": self.pending_onset,
        }

    @classmethod
    def from_snapshot(cls, record: dict) -> EwmadState:
        state = cls(
            tau=record["tau"],
            xi=record["xi"],
            k=record["k"],
            threshold_form=record["threshold_form"],
        )
        state.S = record["S"]
        state.run_min = record["run_min"]
        state.t_prime = record["t_prime"]
        state.sum_R = record["sum_R"]
        state.theta = record["theta"]
        state.mean_history.extend(record["mean_history"])
        state.pending_onset = record["pending_onset"]
        return state


def ewmad_update(state: EwmadState, r: float) -> DriftSignal:
    """Advance the detector by one routed residual magnitude.

    Fires when the min-corrected statistic reaches the dynamic threshold.
    The caller is responsible for resetting after a firing.
    """
    if r < 0:
        raise DataError("drift channel consumes absolute residuals, got a negative value")
    prev_rbar = state.sum_R / state.t_prime if state.t_prime > 0 else 0.0
    state.t_prime += 1
    state.sum_R += r
    rbar = state.sum_R / state.t_prime
    state.mean_history.append(rbar)
    state.S = (1.0 - state.tau) * state.S + state.tau * (r - rbar)
    state.run_min = min(state.run_min, state.S)
    stat = state.S - state.run_min
    if state.threshold_form == THRESHOLD_FORM_INSTANT:
        threshold = state.xi * rbar
    else:
        # EWMA-smoothed variant, seeded with the first running mean.
        state.theta = rbar if state.t_prime == 1 else (1.0 - state.tau) * state.theta + state.tau * prev_rbar
        threshold = state.xi * state.theta
    if stat >= threshold:
        return DriftSignal(
            fired=True,
            type=classify_drift_type(state),
            statistic=stat,
            threshold=threshold,
        )
    return DriftSignal(fired=False, statistic=stat, threshold=threshold)


def classify_drift_type(state: EwmadState) -> DriftType:
    """Type a firing by the k-th order difference of the running mean.

    Rising means indicate an onset (provisionally abrupt, possibly retyped
    to incremental later); falling or flat means mark the stabilization at
    the end of an incremental transition.  Firings too early for the
    difference to exist count as abrupt.
    """
    if state.t_prime <= state.k or len(state.mean_history) <= state.k:
        return DriftType.ABRUPT
    diff = state.mean_history[-1] - state.mean_history[0]
    if diff > 0:
        return DriftType.INCREMENTAL_START
    return DriftType.INCREMENTAL_END


def ewmad_reset(state: EwmadState) -> EwmadState:
    """Zero all statistics; the pending-onset marker survives."""
    state.S = 0.0
    state.run_min = 0.0
    state.t_prime = 0
    state.sum_R = 0.0
    state.theta = 0.0
    state.mean_history.clear()
    return state
