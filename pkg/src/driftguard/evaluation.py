"""Detection scoring and regression-error metrics.

Drift detections are matched to ground truth greedily: each true drift, in
time order, claims the earliest unmatched detection inside its tolerance
window [t, t + c] (incremental truths get the transition length added, since
their type is only confirmed once the transition ends).  Unmatched truths are
misses, unmatched detections are false alarms, and repeated alarms inside an
already-claimed window count against the detector.  Outliers match on their
exact index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import DataError, Decision, DecisionKind, DecisionLog, EventKind, GroundTruthEvent

ZERO_TARGET_GUARD = 1e-12

_DECISION_TO_EVENT = {
    DecisionKind.DRIFT_ABRUPT: EventKind.DRIFT_ABRUPT,
    DecisionKind.DRIFT_INCREMENTAL: EventKind.DRIFT_INCREMENTAL,
}


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


class Match(NamedTuple):
    truth_index: int
    detection_index: int
    delay: int


@dataclass
class MatchResult:
    matches: list[Match]
    unmatched_truth: list[int]
    unmatched_detections: list[int]

    @property
    def delays(self) -> list[int]:
        return [m.delay for m in self.matches]


def match_detections(
    truth: Sequence[GroundTruthEvent],
    detected: Sequence[Decision],
    c: int,
    inc_slack: int = 0,
) -> MatchResult:
    """Greedy earliest-match of drift detections to true drifts.

    Both inputs are re-sorted by time; each detection claims at most one
    truth.  ``inc_slack`` widens the window of incremental truths to
    [t, t + inc_slack + c].
    """
    truth = sorted(truth, key=lambda e: e.t)
    detected = sorted(detected, key=lambda d: d.about_t)
    taken = [False] * len(detected)
    matches: list[Match] = []
    unmatched_truth: list[int] = []
    for ti, event in enumerate(truth):
        upper = event.t + c
        if event.kind is EventKind.DRIFT_INCREMENTAL:
            upper += inc_slack
        found = None
        for di, det in enumerate(detected):
            if taken[di] or det.about_t < event.t:
                continue
            if det.about_t > upper:
                break
            found = di
            break
        if found is None:
            unmatched_truth.append(ti)
        else:
            taken[found] = True
            matches.append(Match(ti, found, detected[found].about_t - event.t))
    unmatched = [di for di, used in enumerate(taken) if not used]
    return MatchResult(matches, unmatched_truth, unmatched)


def f1(cm: ConfusionMatrix) -> float:
    """Harmonic mean of precision and recall; 0 by convention when tp == 0."""
    if cm.tp == 0:
        return 0.0
    precision = cm.tp / (cm.tp + cm.fp)
    recall = cm.tp / (cm.tp + cm.fn)
    return 2.0 * precision * recall / (precision + recall)


def mean_delay(delays: Sequence[int]) -> float | None:
    """Average detection delay over matched drifts; None when nothing matched
    (absence is meaningful, zero would fake perfection)."""
    if len(delays) == 0:
        return None
    return float(np.mean(delays))


class MapeResult(NamedTuple):
    value: float
    used: int
    skipped: int


def mape(y: np.ndarray, y_hat: np.ndarray, mask: np.ndarray) -> MapeResult:
    """Mean of |y - y_hat| / |y| over masked-in indices.

    Indices with |y| below the zero guard are skipped and counted.
    """
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if not (y.shape == y_hat.shape == mask.shape):
        raise DataError("mape: y, y_hat and mask must have identical shape")
    if not np.any(mask):
        raise DataError("mape: empty mask")
    usable = mask & (np.abs(y) >= ZERO_TARGET_GUARD)
    skipped = int(np.sum(mask) - np.sum(usable))
    if not np.any(usable):
        raise DataError("mape: all masked-in targets fall below the zero guard")
    value = float(np.mean(np.abs(y[usable] - y_hat[usable]) / np.abs(y[usable])))
    return MapeResult(value=value, used=int(np.sum(usable)), skipped=skipped)


def mape_star(y: np.ndarray, y_hat: np.ndarray, decisions: Sequence[Decision]) -> MapeResult:
    """MAPE over the samples surviving detection-based exclusion.

    Excluded: training spans (no valid model yet) and every index decided
    Warning, Outlier or any drift kind.
    """
    y = np.asarray(y, dtype=float)
    if len(decisions) != y.shape[0]:
        raise DataError("mape_star: one decision per sample required")
    mask = np.zeros(y.shape[0], dtype=bool)
    t0 = min(d.about_t for d in decisions)
    for dec in decisions:
        if dec.kind is DecisionKind.NORMAL:
            mask[dec.about_t - t0] = True
    if not np.any(mask):
        raise DataError("mape_star: no valid indices left after exclusions")
    return mape(y, np.asarray(y_hat, dtype=float), mask)


@dataclass
class EvalReport:
    per_class: dict[str, ConfusionMatrix]
    f1: dict[str, float]
    mean_delay: float | None
    mape: float | None
    mape_star: float | None
    mape_skipped: int = 0
    mape_star_skipped: int = 0
    decision_counts: dict[str, int] = field(default_factory=dict)
    runtime_seconds: float | None = None

    def flat(self) -> dict:
        """Flat metric record for CSV/JSON serialization (no runtime: wall
        clock would break byte-identical reruns)."""
        row: dict = {}
        for name in ("mape", "mape_star"):
            value = getattr(self, name)
            row[name] = "" if value is None else value
        row["mape_skipped"] = self.mape_skipped
        row["mape_star_skipped"] = self.mape_star_skipped
        row["mean_delay"] = "" if self.mean_delay is None else self.mean_delay
        for cls in sorted(self.f1):
            row[f"f1_{cls}"] = self.f1[cls]
        for cls in sorted(self.per_class):
            cm = self.per_class[cls]
            for k, v in cm.as_dict().items():
                row[f"{cls}_{k}"] = v
        for kind in DecisionKind:
            row[f"n_{kind.value}"] = self.decision_counts.get(kind.value, 0)
        return row


def _typed_matrices(
    truth: Sequence[GroundTruthEvent],
    detected: Sequence[Decision],
    result: MatchResult,
    n_steps: int,
) -> dict[str, ConfusionMatrix]:
    """Type-aware scoring on top of the temporal matching: a matched pair
    with disagreeing types counts FP for the detected type and FN for the
    true one."""
    truth = sorted(truth, key=lambda e: e.t)
    detected = sorted(detected, key=lambda d: d.about_t)
    cms = {
        "abrupt": ConfusionMatrix(),
        "incremental": ConfusionMatrix(),
    }
    key = {
        EventKind.DRIFT_ABRUPT: "abrupt",
        EventKind.DRIFT_INCREMENTAL: "incremental",
    }
    for m in result.matches:
        true_kind = key[truth[m.truth_index].kind]
        det_kind = key[_DECISION_TO_EVENT[detected[m.detection_index].kind]]
        if true_kind == det_kind:
            cms[true_kind].tp += 1
        else:
            cms[det_kind].fp += 1
            cms[true_kind].fn += 1
    for ti in result.unmatched_truth:
        cms[key[truth[ti].kind]].fn += 1
    for di in result.unmatched_detections:
        cms[key[_DECISION_TO_EVENT[detected[di].kind]]].fp += 1
    for cm in cms.values():
        cm.tn = n_steps - cm.tp - cm.fp - cm.fn
    return cms


def evaluate_log(
    log: DecisionLog,
    truth: Sequence[GroundTruthEvent] | None,
    c: int = 100,
    inc_slack: int = 0,
    include_warnings_as_outliers: bool = False,
) -> EvalReport:
    """Assemble the full report for one pipeline run.

    Without ground truth only the regression-error metrics are filled.
    """
    n = len(log)
    counts: dict[str, int] = {}
    for dec in log.decisions:
        counts[dec.kind.value] = counts.get(dec.kind.value, 0) + 1

    finite = np.isfinite(log.predictions)
    mape_value = mape_skip = None
    star_value = star_skip = None
    if np.any(finite):
        res = mape(log.y, np.where(finite, log.predictions, 0.0), finite)
        mape_value, mape_skip = res.value, res.skipped
    try:
        res = mape_star(log.y, np.where(finite, log.predictions, 0.0), log.decisions)
        star_value, star_skip = res.value, res.skipped
    except DataError:
        star_value, star_skip = None, 0

    per_class: dict[str, ConfusionMatrix] = {}
    f1s: dict[str, float] = {}
    delay = None
    if truth is not None:
        drift_truth = [e for e in truth if e.kind is not EventKind.OUTLIER]
        drift_detected = [d for d in log.decisions if d.kind.is_drift]
        result = match_detections(drift_truth, drift_detected, c, inc_slack)
        drift_cm = ConfusionMatrix(
            tp=len(result.matches),
            fp=len(result.unmatched_detections),
            fn=len(result.unmatched_truth),
        )
        drift_cm.tn = n - drift_cm.tp - drift_cm.fp - drift_cm.fn
        per_class["drift"] = drift_cm
        per_class.update(_typed_matrices(drift_truth, drift_detected, result, n))
        delay = mean_delay(result.delays)

        outlier_truth = {e.t for e in truth if e.kind is EventKind.OUTLIER}
        wanted = {DecisionKind.OUTLIER}
        if include_warnings_as_outliers:
            wanted.add(DecisionKind.WARNING)
        outlier_detected = {d.about_t for d in log.decisions if d.kind in wanted}
        o_tp = len(outlier_truth & outlier_detected)
        outlier_cm = ConfusionMatrix(
            tp=o_tp,
            fp=len(outlier_detected - outlier_truth),
            fn=len(outlier_truth - outlier_detected),
        )
        outlier_cm.tn = n - outlier_cm.tp - outlier_cm.fp - outlier_cm.fn
        per_class["outlier"] = outlier_cm
        f1s = {cls: f1(cm) for cls, cm in per_class.items()}

    return EvalReport(
        per_class=per_class,
        f1=f1s,
        mean_delay=delay,
        mape=mape_value,
        mape_star=star_value,
        mape_skipped=mape_skip or 0,
        mape_star_skipped=star_skip or 0,
        decision_counts=counts,
    )
