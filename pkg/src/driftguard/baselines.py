"""Reference drift detectors consuming the same routed-residual feed.

Page-Hinkley, adaptive windowing (ADWIN), KS-windowing (KSWIN) and a
CUSUM + lagged-moving-average hybrid (DSA).  Each exposes the common
detector protocol: ``update(r) -> DriftSignal``, ``reset()``,
``set_reference(mu_abs, sigma)``.  Detectors whose thresholds live on the
residual scale (PH, DSA) can interpret their parameters as multiples of the
reference sigma installed at model-fit time.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .core import DataError
from .drift_channel import NO_SIGNAL, DriftSignal, DriftType


class PageHinkleyDetector:
    """Cumulative deviation from the running mean, corrected by its minimum.

    Fires when cum_diff - min(cum_diff) exceeds ``threshold``; ``delta`` is
    the allowed per-step difference that suppresses small fluctuations.
    """

    def __init__(
        self,
        delta: float = 0.1,
        threshold: float = 10.0,
        scale_by_sigma: bool = False,
    ) -> None:
        self.delta = float(delta)
        self.threshold = float(threshold)
        self.scale_by_sigma = scale_by_sigma
        self._sigma_ref = 1.0
        self.reset()

    def set_reference(self, mu_abs: float, sigma: float) -> None:
        if self.scale_by_sigma and sigma > 0:
            self._sigma_ref = sigma

    def reset(self) -> None:
        self.count = 0
        self.mean = 0.0
        self.cum_diff = 0.0
        self.run_min = 0.0

    @property
    def statistic(self) -> float:
        return self.cum_diff - self.run_min

    def update(self, r: float) -> DriftSignal:
        if r < 0:
            raise DataError("page-hinkley consumes absolute residuals")
        scale = self._sigma_ref if self.scale_by_sigma else 1.0
        self.count += 1
        self.mean += (r - self.mean) / self.count
        self.cum_diff += r - self.mean - self.delta * scale
        self.run_min = min(self.run_min, self.cum_diff)
        stat = self.cum_diff - self.run_min
        threshold = self.threshold * scale
        if stat > threshold:
            return DriftSignal(fired=True, type=None, statistic=stat, threshold=threshold)
        return DriftSignal(fired=False, statistic=stat, threshold=threshold)


class _Bucket:
    __slots__ = ("total", "size")

    def __init__(self, total: float, size: int) -> None:
        self.total = total
        self.size = size


class AdwinDetector:
    """Adaptive windowing with exponential bucketing.

    Keeps at most ``max_buckets`` buckets per size level (2^level elements
    each) and scans the bucket boundaries newest-to-oldest; when two sides of
    a split differ by more than the Hoeffding cut, the older side is dropped
    and a drift is reported.
    """

    def __init__(self, delta: float = 0.002, max_buckets: int = 5) -> None:
        if not 0.0 < delta < 1.0:
            raise DataError(f"adwin delta must lie in (0, 1), got {delta}")
        self.delta = float(delta)
        self.max_buckets = int(max_buckets)
        self.reset()

    def set_reference(self, mu_abs: float, sigma: float) -> None:
        pass

    def reset(self) -> None:
        self._levels: list[list[_Bucket]] = [[]]
        self.total = 0.0
        self.width = 0

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    def update(self, r: float) -> DriftSignal:
        if not math.isfinite(r):
            raise DataError("adwin requires finite inputs")
        self._levels[0].append(_Bucket(float(r), 1))
        self.total += r
        self.width += 1
        self._compress()
        return self._detect()

    def _compress(self) -> None:
        level = 0
        while level < len(self._levels):
            if len(self._levels[level]) > self.max_buckets:
                if level + 1 == len(self._levels):
                    self._levels.append([])
                b0, b1 = self._levels[level][0], self._levels[level][1]
                del self._levels[level][:2]
                self._levels[level + 1].append(_Bucket(b0.total + b1.total, b0.size + b1.size))
            level += 1

    def _cut(self, n0: int, n1: int) -> float:
        m = 1.0 / (1.0 / n0 + 1.0 / n1)
        return math.sqrt(math.log(4.0 * self.width / self.delta) / (2.0 * m))

    def _detect(self) -> DriftSignal:
        if self.width < 2:
            return NO_SIGNAL
        recent_total = 0.0
        recent_size = 0
        # Newest buckets live at level 0, appended at the back.
        for level in range(len(self._levels)):
            for bucket in reversed(self._levels[level]):
                recent_total += bucket.total
                recent_size += bucket.size
                old_size = self.width - recent_size
                if old_size <= 0:
                    continue
                old_total = self.total - recent_total
                diff = abs(recent_total / recent_size - old_total / old_size)
                cut = self._cut(old_size, recent_size)
                if diff > cut:
                    self._drop_oldest(old_size)
                    self.total = recent_total
                    self.width = recent_size
                    return DriftSignal(fired=True, type=None, statistic=diff, threshold=cut)
        return NO_SIGNAL

    def _drop_oldest(self, count: int) -> None:
        remaining = count
        for level in range(len(self._levels) - 1, -1, -1):
            row = self._levels[level]
            while row and remaining >= row[0].size:
                remaining -= row[0].size
                row.pop(0)
        # Splits align with bucket boundaries, so the drop is always exact.
        if remaining:
            raise AssertionError("adwin drop did not align with bucket boundaries")


def ks_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov distance of empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


class KswinDetector:
    """KS test between the newest residuals and a uniform subsample of the
    older window contents; fires when the KS distance exceeds
    sqrt(-ln(alpha) / stat_size)."""

    def __init__(
        self,
        alpha: float = 0.005,
        window_size: int = 100,
        stat_size: int = 30,
        seed: int = 0,
    ) -> None:
        if not 0.0 < alpha < 1.0:
            raise DataError(f"kswin alpha must lie in (0, 1), got {alpha}")
        if stat_size * 2 > window_size:
            raise DataError("kswin requires stat_size <= window_size / 2")
        self.alpha = float(alpha)
        self.window_size = int(window_size)
        self.stat_size = int(stat_size)
        self.seed = int(seed)
        self.threshold = math.sqrt(-math.log(self.alpha) / self.stat_size)
        self.reset()

    def set_reference(self, mu_abs: float, sigma: float) -> None:
        pass

    def reset(self) -> None:
        self.window: deque[float] = deque(maxlen=self.window_size)
        self._rng = np.random.Generator(np.random.PCG64(self.seed))

    def update(self, r: float) -> DriftSignal:
        if not math.isfinite(r):
            raise DataError("kswin requires finite inputs")
        self.window.append(float(r))
        if len(self.window) < self.window_size:
            return NO_SIGNAL
        values = np.asarray(self.window)
        recent = values[-self.stat_size :]
        pool = values[: -self.stat_size]
        picks = self._rng.choice(pool.size, size=self.stat_size, replace=False)
        d = ks_distance(recent, pool[picks])
        if d > self.threshold:
            # Keep only the newest segment; the window refills before the
            # next test can run.
            self.window = deque(recent.tolist(), maxlen=self.window_size)
            return DriftSignal(fired=True, type=None, statistic=d, threshold=self.threshold)
        return DriftSignal(fired=False, statistic=d, threshold=self.threshold)


class DsaDetector:
    """CUSUM for abrupt shifts plus lagged moving averages for slow drifts.

    ``kappa``/``h_abrupt``/``h_slow`` are multiples of the reference sigma
    when ``scale_by_sigma`` is set; the CUSUM reference mean is frozen at
    model-fit time via ``set_reference``.
    """

    def __init__(
        self,
        kappa: float = 0.5,
        h_abrupt: float = 10.0,
        h_slow: float = 0.5,
        short_window: int = 30,
        lag: int = 60,
        scale_by_sigma: bool = False,
    ) -> None:
        if short_window < 1 or lag < 1:
            raise DataError("dsa windows must be positive")
        self.kappa = float(kappa)
        self.h_abrupt = float(h_abrupt)
        self.h_slow = float(h_slow)
        self.short_window = int(short_window)
        self.lag = int(lag)
        self.scale_by_sigma = scale_by_sigma
        self._mu_ref = 0.0
        self._sigma_ref = 1.0
        self.reset()

    def set_reference(self, mu_abs: float, sigma: float) -> None:
        self._mu_ref = mu_abs
        if self.scale_by_sigma and sigma > 0:
            self._sigma_ref = sigma

    def reset(self) -> None:
        self.cusum = 0.0
        self._values: deque[float] = deque(maxlen=self.short_window + self.lag)

    def update(self, r: float) -> DriftSignal:
        if r < 0:
            raise DataError("dsa consumes absolute residuals")
        scale = self._sigma_ref if self.scale_by_sigma else 1.0
        self.cusum = max(0.0, self.cusum + (r - self._mu_ref - self.kappa * scale))
        abrupt = self.cusum > self.h_abrupt * scale

        slow = False
        slow_stat = 0.0
        self._values.append(float(r))
        if len(self._values) == self._values.maxlen:
            vals = list(self._values)
            recent = sum(vals[-self.short_window :]) / self.short_window
            lagged = sum(vals[: self.short_window]) / self.short_window
            slow_stat = recent - lagged
            slow = slow_stat > self.h_slow * scale

        if abrupt:
            return DriftSignal(
                fired=True,
                type=DriftType.ABRUPT,
                statistic=self.cusum,
                threshold=self.h_abrupt * scale,
            )
        if slow:
            return DriftSignal(
                fired=True,
                type=DriftType.SLOW,
                statistic=slow_stat,
                threshold=self.h_slow * scale,
            )
        return DriftSignal(fired=False, statistic=self.cusum, threshold=self.h_abrupt * scale)
