"""Stream orchestration: window fits, dual-channel routing, decisions.

Phases: while Collecting, samples are buffered and emit Training verdicts;
once the window is full the learner is fitted, residual statistics and
outlier thresholds are computed and the drift detector is reset and warmed
with the window's own residual magnitudes.  While Monitoring, the verdict
about step t-1 is emitted after seeing step t: the outlier channel resolves
isolated warning-level residuals, everything else is routed into the drift
detector.  A detector firing emits the drift verdict for t-1, restarts
collection from the current sample, and (for the typed detector) may
retroactively finalize the previous onset's type.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import regressors
from .baselines import AdwinDetector, DsaDetector, KswinDetector, PageHinkleyDetector
from .core import (
    ConfigError,
    DataError,
    Decision,
    DecisionKind,
    DecisionLog,
    DegenerateWindowError,
    Sample,
    absolute_residual,
    config_fingerprint,
    residual_stats,
)
from .drift_channel import DriftType, EwmadState, resolve_pending
from .outlier_channel import (
    NO_FLAGS,
    THRESHOLD_MODE_EXACT,
    channel1_decide,
    flags_for,
    thresholds_from_stats,
)
from .regressors import RegressorSpec, predict

logger = logging.getLogger(__name__)

DETECTOR_NAMES = ("ewmad_dt", "ph", "adwin", "kswin", "dsa")


class Phase(Enum):
    COLLECTING = "collecting"
    MONITORING = "monitoring"


@dataclass(frozen=True)
class PipelineConfig:
    window: int = 200
    regressor: RegressorSpec = field(default_factory=RegressorSpec)
    detector: str = "ewmad_dt"
    detector_params: dict = field(default_factory=dict)
    alpha_warning: float = 0.05
    alpha_confirm: float = 0.01
    threshold_mode: str = THRESHOLD_MODE_EXACT
    channel1: bool = True
    scale_by_sigma: bool = True
    warm_start: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.window < 2:
            raise ConfigError(f"window must be at least 2, got {self.window}")
        if not 0 < self.alpha_confirm < self.alpha_warning < 1:
            raise ConfigError(
                "alphas must satisfy 0 < alpha_confirm < alpha_warning < 1, got "
                f"confirm={self.alpha_confirm}, warning={self.alpha_warning}"
            )
        if self.detector not in DETECTOR_NAMES:
            raise ConfigError(
                f"unknown detector {self.detector!r}; choose one of {DETECTOR_NAMES}"
            )
        self.regressor.validate()

    def fingerprint(self) -> str:
        record = asdict(self)
        record["regressor"]["kind"] = self.regressor.kind.value
        return config_fingerprint(json.dumps(record, sort_keys=True))


def build_detector(config: PipelineConfig):
    p = dict(config.detector_params)
    name = config.detector
    if name == "ewmad_dt":
        return EwmadState(
            tau=p.get("tau", 0.1),
            xi=p.get("xi", 0.3),
            k=int(p.get("k", 10)),
            threshold_form=p.get("threshold_form", "instant"),
        )
    if name == "ph":
        return PageHinkleyDetector(
            delta=p.get("delta", 0.1),
            threshold=p.get("threshold", 10.0),
            scale_by_sigma=config.scale_by_sigma,
        )
    if name == "adwin":
        return AdwinDetector(
            delta=p.get("delta", 0.002), max_buckets=int(p.get("max_buckets", 5))
        )
    if name == "kswin":
        return KswinDetector(
            alpha=p.get("alpha", 0.005),
            window_size=int(p.get("window", 100)),
            stat_size=int(p.get("stat_size", 30)),
            seed=config.seed,
        )
    if name == "dsa":
        return DsaDetector(
            kappa=p.get("kappa", 0.5),
            h_abrupt=p.get("h_abrupt", 10.0),
            h_slow=p.get("h_slow", 0.5),
            short_window=int(p.get("short_window", 30)),
            lag=int(p.get("lag", 60)),
            scale_by_sigma=config.scale_by_sigma,
        )
    raise ConfigError(f"unknown detector {name!r}")


class Pipeline:
    """Single-stream, single-writer processing state."""

    def __init__(self, config: PipelineConfig) -> None:
        config.validate()
        self.config = config
        self.detector = build_detector(config)
        self._typed = config.detector == "ewmad_dt"
        self.phase = Phase.COLLECTING
        self._buffer: list[Sample] = []
        self._fit: regressors.FitResult | None = None
        self._thresholds = None
        self._prev: tuple[int, float, object] | None = None
        self._pending_idx: int | None = None
        self._decisions: list[Decision] = []
        self._pred: dict[int, float] = {}
        self._y: list[float] = []
        self._t0: int | None = None
        self._next_t: int | None = None
        self._d: int | None = None
        self._fit_count = 0
        self._finalized = False

    # -- public API ---------------------------------------------------------

    def process(self, sample: Sample) -> list[Decision]:
        """Consume one sample; returns the decisions emitted by this step.

        Drift decisions are provisional in type: the log entry may be
        retyped when the following detection epoch resolves it.
        """
        if self._finalized:
            raise DataError("pipeline already finalized")
        self._admit(sample)
        before = len(self._decisions)
        if self.phase is Phase.COLLECTING:
            self._collect(sample)
        else:
            self._monitor(sample)
        return self._decisions[before:]

    def finalize(self) -> list[Decision]:
        """Emit the terminal no-op verdict for the last monitored sample."""
        before = len(self._decisions)
        if not self._finalized:
            if self._prev is not None:
                prev_t, _, _ = self._prev
                self._emit(DecisionKind.NORMAL, prev_t)
                self._prev = None
            self._finalized = True
        return self._decisions[before:]

    def to_log(self) -> DecisionLog:
        if not self._finalized:
            self.finalize()
        n = len(self._y)
        t0 = self._t0 or 0
        predictions = np.full(n, np.nan)
        for t, value in self._pred.items():
            predictions[t - t0] = value
        return DecisionLog(
            decisions=list(self._decisions),
            predictions=predictions,
            y=np.asarray(self._y, dtype=float),
            d=self._d or 0,
            config_fingerprint=self.config.fingerprint(),
            meta={"t0": t0, "fits": self._fit_count},
        )

    # -- internals ----------------------------------------------------------

    def _admit(self, sample: Sample) -> None:
        if self._next_t is None:
            self._t0 = sample.t
            self._d = len(sample.x)
            if self.config.window < self._d + 2:
                raise ConfigError(
                    f"window {self.config.window} too small for d={self._d} "
                    f"(need at least d+2)"
                )
        elif sample.t != self._next_t:
            raise DataError(
                f"non-consecutive time index: expected {self._next_t}, got {sample.t}"
            )
        elif len(sample.x) != self._d:
            raise DataError(
                f"feature dimension changed from {self._d} to {len(sample.x)}"
            )
        self._next_t = sample.t + 1
        self._y.append(float(sample.y))

    def _emit(self, kind: DecisionKind, about_t: int) -> int:
        self._decisions.append(Decision(kind, about_t))
        return len(self._decisions) - 1

    def _collect(self, sample: Sample) -> None:
        self._buffer.append(sample)
        self._emit(DecisionKind.TRAINING, sample.t)
        if len(self._buffer) == self.config.window:
            self._fit_window()

    def _fit_window(self) -> None:
        X = np.stack([s.x for s in self._buffer])
        y = np.asarray([s.y for s in self._buffer], dtype=float)
        t_lo, t_hi = self._buffer[0].t, self._buffer[-1].t
        fit_seed = int(
            np.random.SeedSequence([self.config.seed, self._fit_count]).generate_state(1)[0]
        )
        try:
            self._fit = regressors.fit(self.config.regressor, X, y, seed=fit_seed)
        except DegenerateWindowError as exc:
            raise DegenerateWindowError(
                f"window [{t_lo}, {t_hi}] could not be fitted: {exc}"
            ) from exc
        mu, sigma = residual_stats(self._fit.residuals)
        self._thresholds = thresholds_from_stats(
            mu,
            sigma,
            self.config.window,
            alpha_warning=self.config.alpha_warning,
            alpha_confirm=self.config.alpha_confirm,
            mode=self.config.threshold_mode,
        )
        for s, fitted in zip(self._buffer, self._fit.fitted):
            self._pred[s.t] = float(fitted)

        abs_res = np.abs(self._fit.residuals)
        self.detector.reset()
        self.detector.set_reference(float(np.mean(abs_res)), sigma)
        if self.config.warm_start:
            self._replay(abs_res)

        self._fit_count += 1
        self._buffer = []
        self._prev = None
        self.phase = Phase.MONITORING

    def _replay(self, abs_res: np.ndarray) -> None:
        # Warming the detector with the window's own residual magnitudes is
        # what lets the end of an incremental transition fire: after a
        # mid-transition refit those magnitudes decrease and then flatten,
        # pulling the running mean down until the corrected statistic crosses
        # the threshold.  Replay firings emit no decisions; an end-type
        # firing may still finalize a pending onset retroactively.
        for r in abs_res:
            signal = self.detector.update(float(r))
            if signal.fired:
                if (
                    self._typed
                    and signal.type is DriftType.INCREMENTAL_END
                    and self._pending_idx is not None
                ):
                    self._retype_pending(DecisionKind.DRIFT_INCREMENTAL)
                self.detector.reset()

    def _retype_pending(self, kind: DecisionKind) -> None:
        old = self._decisions[self._pending_idx]
        self._decisions[self._pending_idx] = Decision(kind, old.about_t)
        self._pending_idx = None
        if self._typed:
            self.detector.pending_onset = False

    def _monitor(self, sample: Sample) -> None:
        beta = self._fit.beta
        r = absolute_residual(sample.y, sample.x, beta)
        self._pred[sample.t] = predict(beta, sample.x)
        flags = flags_for(r, self._thresholds) if self.config.channel1 else NO_FLAGS

        if self._prev is None:
            self._prev = (sample.t, r, flags)
            return

        prev_t, prev_r, prev_flags = self._prev
        verdict = None
        if self.config.channel1:
            prev_was_drift = bool(
                self._decisions and self._decisions[-1].kind.is_drift
            )
            verdict = channel1_decide(prev_flags, flags, prev_was_drift)
        if verdict is not None:
            self._emit(verdict, prev_t)
            self._prev = (sample.t, r, flags)
            return

        signal = self.detector.update(prev_r)
        if not signal.fired:
            self._emit(DecisionKind.NORMAL, prev_t)
            self._prev = (sample.t, r, flags)
            return

        self._handle_live_fire(signal, prev_t)
        # Restart collection from the sample that exposed the drift.
        self.phase = Phase.COLLECTING
        self._prev = None
        self._buffer = []
        self._collect(sample)

    def _handle_live_fire(self, signal, prev_t: int) -> None:
        if self._typed:
            resolution = resolve_pending(self._pending_idx is not None, signal.type)
            if (
                resolution.retype_to is DecisionKind.DRIFT_INCREMENTAL
                and self._pending_idx is not None
            ):
                self._retype_pending(DecisionKind.DRIFT_INCREMENTAL)
            if resolution.emit is None:
                # Absorbed end-of-transition firing: the reset still runs but
                # no separate drift is reported.
                self._emit(DecisionKind.NORMAL, prev_t)
                self._pending_idx = None
                self.detector.pending_onset = False
                return
            idx = self._emit(resolution.emit, prev_t)
            self._pending_idx = idx if resolution.becomes_pending else None
            self.detector.pending_onset = resolution.becomes_pending
            return
        if signal.type is DriftType.SLOW:
            self._emit(DecisionKind.DRIFT_INCREMENTAL, prev_t)
        else:
            self._emit(DecisionKind.DRIFT_ABRUPT, prev_t)


def run_stream(samples, config: PipelineConfig) -> DecisionLog:
    """Batch driver: one decision per sample, final verdict included."""
    pipeline = Pipeline(config)
    count = 0
    for sample in samples:
        pipeline.process(sample)
        count += 1
    if count == 0:
        raise DataError("run_stream requires a nonempty sample sequence")
    pipeline.finalize()
    return pipeline.to_log()
