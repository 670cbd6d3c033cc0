"""Windowed linear regression learners.

All learners share the same contract: they consume a raw design matrix
``X`` (w rows, d feature columns) and target vector ``y``, fit a linear model
with an explicit intercept, and return a :class:`FitResult` whose ``beta``
stores the intercept in component 0.  ``residuals`` is always exactly
``y - fitted`` and ``fitted`` is always the row-wise linear prediction.

Randomized learners (Theil-Sen for d > 1, RANSAC) draw their subsets against
a canonical lexicographic ordering of the rows, so the fitted model is
invariant under row permutation for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import DataError, DegenerateWindowError

MAD_CONSISTENCY = 1.4826
_IRLS_WEIGHT_FLOOR = 1e-12


class RegressorKind(str, Enum):
    OLS = "ols"
    HUBER = "huber"
    THEIL_SEN = "theil_sen"
    RANSAC = "ransac"
    THETA_IPOD = "theta_ipod"


@dataclass(frozen=True)
class RegressorSpec:
    """Learner choice plus hyperparameters.

    When ``scale_relative`` is true, ``huber_delta``, ``ransac_threshold`` and
    ``ipod_lambda`` are multiples of a robust residual scale (MAD * 1.4826 of
    an OLS pre-fit); otherwise they are absolute.
    """

    kind: RegressorKind = RegressorKind.HUBER
    scale_relative: bool = True
    huber_delta: float = 1.35
    n_subsets: int = 300
    ransac_min_samples: int = 0  # 0 -> d + 1
    ransac_threshold: float = 3.0
    ransac_max_trials: int = 100
    ipod_lambda: float = 3.0
    ipod_threshold: str = "hard"
    max_iter: int = 100
    tol: float = 1e-8

    def validate(self) -> None:
        if self.huber_delta <= 0 or self.ransac_threshold <= 0 or self.ipod_lambda <= 0:
            raise DataError("regressor thresholds must be positive")
        if self.tol <= 0:
            raise DataError("tol must be positive")
        if self.max_iter < 1:
            raise DataError("max_iter must be at least 1")
        if self.ipod_threshold not in ("hard", "soft"):
            raise DataError(f"unknown ipod threshold kind {self.ipod_threshold!r}")


@dataclass
class FitResult:
    beta: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    outlier_support: frozenset[int] | None = None
    iterations: int = 1
    converged: bool = True
    objective_trace: tuple[float, ...] = field(default_factory=tuple)


def predict(beta: np.ndarray, x: np.ndarray) -> float:
    """intercept + x . beta_features"""
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    if beta.shape[0] != x.shape[0] + 1:
        raise DataError(
            f"predict: beta has {beta.shape[0]} components, x has {x.shape[0]}"
        )
    return float(beta[0] + x @ beta[1:])


def robust_scale(values: np.ndarray) -> float:
    """MAD-based scale estimate (consistent for the normal distribution)."""
    values = np.asarray(values, dtype=float)
    return MAD_CONSISTENCY * float(np.median(np.abs(values - np.median(values))))


def canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row indices sorted lexicographically by (x0, ..., x{d-1}, y)."""
    keys = [np.asarray(y, dtype=float)]
    for j in range(X.shape[1] - 1, -1, -1):
        keys.append(X[:, j])
    return np.lexsort(keys)


def _augment(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("design matrix must be 2-dimensional")
    return np.column_stack([np.ones(X.shape[0]), X])


def _check_window(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DataError(f"incompatible window shapes X{X.shape}, y{y.shape}")
    if X.shape[0] < X.shape[1] + 1:
        raise DegenerateWindowError(
            f"window of {X.shape[0]} rows too small for {X.shape[1]} features"
        )
    return X, y


def _lstsq(A: np.ndarray, b: np.ndarray, context: str) -> np.ndarray:
    beta, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < A.shape[1]:
        raise DegenerateWindowError(
            f"{context}: design matrix is rank deficient (rank {rank} < {A.shape[1]})"
        )
    return beta


def _result(X_aug: np.ndarray, y: np.ndarray, beta: np.ndarray, **kw) -> FitResult:
    fitted = X_aug @ beta
    return FitResult(beta=beta, fitted=fitted, residuals=y - fitted, **kw)


def fit_ols(X: np.ndarray, y: np.ndarray) -> FitResult:
    """Ordinary least squares baseline (non-robust reference)."""
    X, y = _check_window(X, y)
    A = _augment(X)
    beta = _lstsq(A, y, "ols")
    return _result(A, y, beta)


def huber_objective(residuals: np.ndarray, delta: float) -> float:
    r = np.abs(residuals)
    quad = r <= delta
    return float(
        np.sum(0.5 * residuals[quad] ** 2) + np.sum(delta * r[~quad] - 0.5 * delta**2)
    )


def fit_huber(
    X: np.ndarray,
    y: np.ndarray,
    delta: float,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> FitResult:
    """Huber regression via iteratively reweighted least squares.

    Quadratic loss for residuals up to ``delta``, linear beyond; IRLS weights
    are floored to avoid blowup at exact-fit points.
    """
    X, y = _check_window(X, y)
    if delta <= 0:
        raise DataError("huber delta must be positive")
    A = _augment(X)
    beta = _lstsq(A, y, "huber init")
    trace = [huber_objective(y - A @ beta, delta)]
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        r = y - A @ beta
        absr = np.maximum(np.abs(r), _IRLS_WEIGHT_FLOOR)
        w = np.where(absr <= delta, 1.0, delta / absr)
        sw = np.sqrt(w)
        beta_new = _lstsq(A * sw[:, None], y * sw, "huber irls")
        trace.append(huber_objective(y - A @ beta_new, delta))
        step = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        if step < tol:
            converged = True
            break
    return _result(
        A,
        y,
        beta,
        iterations=iterations,
        converged=converged,
        objective_trace=tuple(trace),
    )


def fit_theilsen(
    X: np.ndarray,
    y: np.ndarray,
    n_subsets: int = 300,
    seed: int = 0,
) -> FitResult:
    """Theil-Sen estimator.

    d=1: median of all pairwise slopes with distinct x, intercept =
    median(y - slope*x).  d>1: exact fits on random (d+1)-row subsets drawn
    against the canonical row order, coordinatewise median of coefficients.
    """
    X, y = _check_window(X, y)
    d = X.shape[1]
    A = _augment(X)
    if d == 1:
        x = X[:, 0]
        dx = np.subtract.outer(x, x)
        dy = np.subtract.outer(y, y)
        iu = np.triu_indices(len(x), k=1)
        dx, dy = dx[iu], dy[iu]
        keep = dx != 0.0
        if not np.any(keep):
            raise DegenerateWindowError("theil-sen: all x values identical")
        slope = float(np.median(dy[keep] / dx[keep]))
        intercept = float(np.median(y - slope * x))
        beta = np.array([intercept, slope])
        return _result(A, y, beta)

    order = canonical_order(X, y)
    rng = np.random.Generator(np.random.PCG64(seed))
    solutions = []
    for _ in range(n_subsets):
        pick = order[rng.choice(len(y), size=d + 1, replace=False)]
        sub = A[pick]
        try:
            coef = np.linalg.solve(sub, y[pick])
        except np.linalg.LinAlgError:
            continue
        solutions.append(coef)
    if not solutions:
        raise DegenerateWindowError("theil-sen: every sampled subset was singular")
    beta = np.median(np.asarray(solutions), axis=0)
    return _result(A, y, beta, iterations=len(solutions))


def fit_ransac(
    X: np.ndarray,
    y: np.ndarray,
    min_samples: int,
    residual_threshold: float,
    max_trials: int = 100,
    seed: int = 0,
) -> FitResult:
    """RANSAC: repeated minimal-subset fits, keep the largest consensus set.

    Returns an OLS refit on the inlier set of the best candidate; the refit
    is iterated while the inlier count grows so the returned model never has
    fewer inliers than any sampled candidate.
    """
    X, y = _check_window(X, y)
    d = X.shape[1]
    if min_samples < d + 1:
        raise DataError(f"ransac min_samples must be at least d+1 = {d + 1}")
    if residual_threshold <= 0:
        raise DataError("ransac residual_threshold must be positive")
    A = _augment(X)
    order = canonical_order(X, y)
    rng = np.random.Generator(np.random.PCG64(seed))

    best_count = -1
    best_inliers: np.ndarray | None = None
    trials = 0
    for trials in range(1, max_trials + 1):
        pick = order[rng.choice(len(y), size=min_samples, replace=False)]
        sub = A[pick]
        coef, _, rank, _ = np.linalg.lstsq(sub, y[pick], rcond=None)
        if rank < A.shape[1]:
            continue
        inliers = np.abs(y - A @ coef) <= residual_threshold
        count = int(np.sum(inliers))
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < min_samples:
        raise DegenerateWindowError(
            f"ransac: no candidate reached {min_samples} inliers "
            f"in {max_trials} trials (best {max(best_count, 0)})"
        )

    inliers = best_inliers
    beta = _lstsq(A[inliers], y[inliers], "ransac refit")
    count = int(np.sum(np.abs(y - A @ beta) <= residual_threshold))
    # Refit can only be accepted while it keeps (or grows) the consensus set.
    while count > best_count:
        best_count = count
        inliers = np.abs(y - A @ beta) <= residual_threshold
        beta_new = _lstsq(A[inliers], y[inliers], "ransac refit")
        count = int(np.sum(np.abs(y - A @ beta_new) <= residual_threshold))
        if count >= best_count:
            beta = beta_new
    return _result(A, y, beta, iterations=trials)


def _ipod_threshold(z: np.ndarray, lam: float, kind: str) -> np.ndarray:
    if kind == "hard":
        return np.where(np.abs(z) > lam, z, 0.0)
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def _ipod_penalty(gamma: np.ndarray, lam: float, kind: str) -> float:
    g = np.abs(gamma)
    if kind == "hard":
        return float(np.sum(np.where(g <= lam, lam * g - 0.5 * g**2, 0.5 * lam**2)))
    return float(lam * np.sum(g))


def ipod_objective(
    X: np.ndarray, y: np.ndarray, beta: np.ndarray, gamma: np.ndarray, lam: float, kind: str
) -> float:
    A = _augment(X)
    return float(0.5 * np.sum((y - A @ beta - gamma) ** 2)) + _ipod_penalty(
        gamma, lam, kind
    )


def fit_ipod(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    threshold_kind: str = "hard",
    max_iter: int = 100,
    tol: float = 1e-8,
) -> FitResult:
    """Outlier-shift regression: y = X beta + gamma + noise with sparse gamma.

    Alternates an OLS fit of (X, y - gamma) with elementwise thresholding of
    the working residuals; the penalized objective is non-increasing across
    iterations.  Nonzero gamma components mark in-window outliers.  Starts
    from a Huber pre-fit so heavily contaminated windows do not mask.
    """
    X, y = _check_window(X, y)
    if lam <= 0:
        raise DataError("ipod lambda must be positive")
    if threshold_kind not in ("hard", "soft"):
        raise DataError(f"unknown threshold kind {threshold_kind!r}")
    A = _augment(X)

    beta = _lstsq(A, y, "ipod init")
    scale = robust_scale(y - A @ beta)
    if scale > 0:
        beta = fit_huber(X, y, 1.35 * scale, max_iter=max_iter, tol=tol).beta
    gamma = np.zeros(len(y))
    trace = [ipod_objective(X, y, beta, gamma, lam, threshold_kind)]
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        beta_new = _lstsq(A, y - gamma, "ipod beta step")
        gamma_new = _ipod_threshold(y - A @ beta_new, lam, threshold_kind)
        trace.append(ipod_objective(X, y, beta_new, gamma_new, lam, threshold_kind))
        step = max(
            float(np.max(np.abs(beta_new - beta))),
            float(np.max(np.abs(gamma_new - gamma))),
        )
        beta, gamma = beta_new, gamma_new
        if step < tol:
            converged = True
            break
    support = frozenset(int(i) for i in np.flatnonzero(gamma != 0.0))
    return _result(
        A,
        y,
        beta,
        outlier_support=support,
        iterations=iterations,
        converged=converged,
        objective_trace=tuple(trace),
    )


def fit(spec: RegressorSpec, X: np.ndarray, y: np.ndarray, seed: int = 0) -> FitResult:
    """Dispatch on the learner spec, resolving scale-relative thresholds."""
    spec.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if spec.kind is RegressorKind.OLS:
        return fit_ols(X, y)
    if spec.kind is RegressorKind.THEIL_SEN:
        return fit_theilsen(X, y, n_subsets=spec.n_subsets, seed=seed)

    scale = 1.0
    if spec.scale_relative:
        scale = max(robust_scale(fit_ols(X, y).residuals), 1e-12)
    if spec.kind is RegressorKind.HUBER:
        return fit_huber(
            X, y, spec.huber_delta * scale, max_iter=spec.max_iter, tol=spec.tol
        )
    if spec.kind is RegressorKind.RANSAC:
        min_samples = spec.ransac_min_samples or X.shape[1] + 1
        return fit_ransac(
            X,
            y,
            min_samples=min_samples,
            residual_threshold=spec.ransac_threshold * scale,
            max_trials=spec.ransac_max_trials,
            seed=seed,
        )
    if spec.kind is RegressorKind.THETA_IPOD:
        return fit_ipod(
            X,
            y,
            lam=spec.ipod_lambda * scale,
            threshold_kind=spec.ipod_threshold,
            max_iter=spec.max_iter,
            tol=spec.tol,
        )
    raise DataError(f"unknown regressor kind {spec.kind!r}")
