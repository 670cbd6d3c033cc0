"""Channel I: residual confidence bounds and the warning/confirmed-outlier rule.

A residual magnitude is graded against two bounds derived from the training
window's residual statistics: a warning level (95% by default) and a
confirmed-outlier level (99%).  A verdict is only reached when the residual
at the *next* step has returned below the warning level; sustained
exceedances are deliberately left unresolved so they flow into the drift
channel instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DataError, DecisionKind
from .tstat import student_t_quantile

THRESHOLD_MODE_EXACT = "exact_t"
THRESHOLD_MODE_APPROX = "paper_approx"

# Large-window approximations to the 95%/99% bounds.
APPROX_WARNING_MULT = 2.0
APPROX_CONFIRM_MULT = 2.6


@dataclass(frozen=True)
class OutlierThresholds:
    warning_upper: float
    confirm_upper: float
    mu_hat: float
    sigma_hat: float
    w: int

    def __post_init__(self):
        if self.sigma_hat >= 0 and self.confirm_upper < self.warning_upper:
            raise DataError("confirm level below warning level")


@dataclass(frozen=True)
class ChannelFlags:
    warning: bool
    outlier: bool


NO_FLAGS = ChannelFlags(warning=False, outlier=False)


def prci_upper(mu_hat: float, sigma_hat: float, w: int, alpha: float) -> float:
    """Upper bound of the residual confidence interval at level 1 - alpha.

    mu + t_{1-alpha/2, w-1} * sigma * sqrt(1 + 1/w), with the t quantile
    computed by the in-house incomplete-beta inversion.
    """
    if w < 2:
        raise DataError("prci_upper requires a window of at least 2 residuals")
    if not 0.0 < alpha < 1.0:
        raise DataError(f"alpha must lie in (0, 1), got {alpha}")
    if sigma_hat < 0:
        raise DataError("sigma_hat must be nonnegative")
    q = student_t_quantile(1.0 - alpha / 2.0, float(w - 1))
    return mu_hat + q * sigma_hat * math.sqrt(1.0 + 1.0 / w)


def thresholds_from_stats(
    mu_hat: float,
    sigma_hat: float,
    w: int,
    alpha_warning: float = 0.05,
    alpha_confirm: float = 0.01,
    mode: str = THRESHOLD_MODE_EXACT,
) -> OutlierThresholds:
    if mode == THRESHOLD_MODE_EXACT:
        warning = prci_upper(mu_hat, sigma_hat, w, alpha_warning)
        confirm = prci_upper(mu_hat, sigma_hat, w, alpha_confirm)
    elif mode == THRESHOLD_MODE_APPROX:
        warning = mu_hat + APPROX_WARNING_MULT * sigma_hat
        confirm = mu_hat + APPROX_CONFIRM_MULT * sigma_hat
    else:
        raise DataError(f"unknown threshold mode {mode!r}")
    return OutlierThresholds(
        warning_upper=warning,
        confirm_upper=confirm,
        mu_hat=mu_hat,
        sigma_hat=sigma_hat,
        w=w,
    )


def flags_for(residual_abs: float, thresholds: OutlierThresholds) -> ChannelFlags:
    if residual_abs < 0:
        raise DataError("residual magnitude must be nonnegative")
    return ChannelFlags(
        warning=residual_abs > thresholds.warning_upper,
        outlier=residual_abs > thresholds.confirm_upper,
    )


def channel1_decide(
    prev_flags: ChannelFlags,
    curr_flags: ChannelFlags,
    prev_was_drift: bool,
) -> DecisionKind | None:
    """Adjudicate step t-1 once step t is visible.

    A warning at t-1 that has returned below the warning level at t resolves
    as Warning (Outlier when the confirmed level was also exceeded).  Any
    other pattern returns None: the t-1 residual must be routed to the drift
    channel.
    """
    if prev_flags.warning and not curr_flags.warning and not prev_was_drift:
        if prev_flags.outlier:
            return DecisionKind.OUTLIER
        return DecisionKind.WARNING
    return None
