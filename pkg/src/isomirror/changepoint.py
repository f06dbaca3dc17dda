"""Single slope-change detection for a curve sampled at increasing days.

The model is continuous piecewise linear::

    psi(t) = beta0 + beta1 * t + beta * (t - t_star)_+

``grid_breakpoint`` searches ``t_star`` exhaustively, ``segmented_fit``
refines it by iterative linearization, and ``cusum_slope_detect`` is a
permutation-calibrated CUSUM test on the finite-difference slopes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write
from .errors import DomainError, InsufficientDataError

MIN_POINTS = 5
MIN_SEGMENT = 2
HALVINGS = 20


@dataclass
class PiecewiseLinearFit:
    beta0: float
    beta1: float
    beta: float
    t_star: float
    rss: float
    fitted: np.ndarray
    rss_line: float = float("nan")
    iterations: int = 0
    flags: tuple = ()

    @property
    def post_slope(self) -> float:
        return self.beta1 + self.beta


@dataclass
class SlopeTestResult:
    statistic: float
    threshold: float
    detected: bool
    estimated_index: int
    estimated_day: float
    level: float
    n_perm: int
    seed: int
    no_signal: bool = False
    null_statistics: np.ndarray = field(default=None, repr=False)


def _check(days, psi):
    t = np.asarray(days, dtype=float)
    y = np.asarray(psi, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise DomainError("days and psi must be 1-D of equal length")
    if t.size < MIN_POINTS:
        raise InsufficientDataError(t.size, MIN_POINTS)
    if np.any(np.diff(t) <= 0):
        raise DomainError("days must be strictly increasing")
    return t, y


def _ols(X, y):
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return coef, float(resid @ resid), rank


def line_rss(days, psi) -> float:
    t, y = np.asarray(days, float), np.asarray(psi, float)
    return _ols(np.column_stack([np.ones_like(t), t]), y)[1]


def candidate_breakpoints(days) -> np.ndarray:
    """Days and midpoints strictly between the second and the second-to-last day."""
    t = np.asarray(days, dtype=float)
    cands = np.sort(np.concatenate([t, (t[:-1] + t[1:]) / 2]))
    ok = (cands > t[MIN_SEGMENT - 1]) & (cands < t[-MIN_SEGMENT])
    return cands[ok]


def _fit_at(t, y, t_star):
    X = np.column_stack([np.ones_like(t), t, np.maximum(t - t_star, 0.0)])
    coef, rss, rank = _ols(X, y)
    return coef, rss, rank, X @ coef


def grid_breakpoint(days, psi) -> PiecewiseLinearFit:
    """Breakpoint minimizing the residual sum of squares over the candidate grid.

    Ties go to the earliest candidate.
    """
    t, y = _check(days, psi)
    best = None
    for c in candidate_breakpoints(t):
        coef, rss, rank, fitted = _fit_at(t, y, c)
        if rank < 3:
            continue
        if best is None or rss < best[1]:
            best = (c, rss, coef, fitted)
    if best is None:
        raise InsufficientDataError(t.size, MIN_POINTS)
    c, rss, coef, fitted = best
    return PiecewiseLinearFit(
        float(coef[0]), float(coef[1]), float(coef[2]), float(c), rss, fitted,
        rss_line=line_rss(t, y),
    )


def segmented_fit(days, psi, t_init=None, max_iter: int = 30, tol: float = 1e-8) -> PiecewiseLinearFit:
    """Iteratively linearized breakpoint estimate.

    Each step regresses ``psi`` on ``1, t, (t - t*)_+, -I(t > t*)`` and moves
    ``t*`` by the ratio of the last two coefficients. The estimate is kept
    inside the candidate range of :func:`grid_breakpoint` (two points on each
    side); ending on that boundary after leaving it is flagged ``clamped``.
    Without ``t_init`` the iteration starts from :func:`grid_breakpoint`.
    A step that would increase the residual sum of squares is halved until
    it does not. A vanishing slope change falls back to :func:`grid_breakpoint`.
    """
    t, y = _check(days, psi)
    cands = candidate_breakpoints(t)
    lo, hi = cands[0], cands[-1]
    if t_init is None:
        t_init = grid_breakpoint(t, y).t_star
    if not (t[0] < t_init < t[-1]):
        raise DomainError(f"t_init={t_init} is not inside ({t[0]}, {t[-1]})")
    psi_star = float(min(max(t_init, lo), hi))
    current = _fit_at(t, y, psi_star)[1]
    flags = []
    clamped = False
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        u = np.maximum(t - psi_star, 0.0)
        v = -(t > psi_star).astype(float)
        X = np.column_stack([np.ones_like(t), t, u, v])
        coef, _, rank = _ols(X, y)
        beta, gamma = coef[2], coef[3]
        if rank < 4 or abs(beta) < 1e-12 * max(np.abs(coef[:2]).max(), 1.0):
            fit = grid_breakpoint(t, y)
            fit.flags = fit.flags + ("fallback_grid",)
            fit.iterations = it
            return fit
        step = gamma / beta
        # step halving: accept the first trial that does not increase the rss
        for _ in range(HALVINGS):
            new = psi_star + step
            clamped = not (lo <= new <= hi)
            new = min(max(new, lo), hi)
            rss_new = _fit_at(t, y, new)[1]
            if rss_new <= current:
                break
            step /= 2
        else:
            converged = True
            break
        delta = abs(new - psi_star)
        psi_star, current = new, rss_new
        if delta < tol:
            converged = True
            break
    if clamped:
        flags.append("clamped")
    if not converged:
        flags.append("max_iter")
    coef, rss, _, fitted = _fit_at(t, y, psi_star)
    return PiecewiseLinearFit(
        float(coef[0]), float(coef[1]), float(coef[2]), psi_star, rss, fitted,
        rss_line=line_rss(t, y), iterations=it, flags=tuple(flags),
    )


def _cusum_stat(slopes: np.ndarray) -> np.ndarray:
    """CUSUM statistics for one or many slope sequences along the last axis."""
    centered = slopes - slopes.mean(axis=-1, keepdims=True)
    sd = slopes.std(axis=-1, ddof=1)
    partial = np.abs(np.cumsum(centered, axis=-1))
    return partial.max(axis=-1) / (sd * np.sqrt(slopes.shape[-1]))


def cusum_slope_detect(days, psi, n_perm: int = 999, level: float = 0.05, seed: int = 0) -> SlopeTestResult:
    """Test for a change in slope with a CUSUM of finite-difference slopes.

    The threshold is the ``1 - level`` quantile of the statistic over
    ``n_perm`` random reorderings of the slope sequence.
    """
    t, y = _check(days, psi)
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if n_perm < 1:
        raise DomainError("n_perm must be >= 1")
    slopes = np.diff(y) / np.diff(t)
    scale = max(np.abs(slopes).max(), 1e-300)
    if slopes.std(ddof=1) <= 1e-12 * scale or not np.any(slopes != slopes[0]):
        return SlopeTestResult(0.0, float("inf"), False, -1, float("nan"), level, n_perm, seed, True)
    centered = slopes - slopes.mean()
    partial = np.abs(np.cumsum(centered))
    stat = float(_cusum_stat(slopes))
    k = int(np.argmax(partial))
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(slopes, (n_perm, 1)), axis=1)
    null = _cusum_stat(perms)
    threshold = float(np.quantile(null, 1 - level))
    return SlopeTestResult(
        stat, threshold, stat > threshold, k, float(t[k + 1]), level, n_perm, seed, False, null
    )


# ------------------------------------------------------------- reports


def write_fit_report(fits: dict, path) -> None:
    """One row per method with the fitted parameters."""
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "beta0", "beta1", "beta", "t_star", "rss", "rss_line", "iterations", "flags"])
        for name, f in fits.items():
            w.writerow([
                name, repr(f.beta0), repr(f.beta1), repr(f.beta), repr(f.t_star),
                repr(f.rss), repr(f.rss_line), f.iterations, ";".join(f.flags),
            ])


def write_fitted_values(days, psi, fits: dict, path) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "psi"] + [f"fitted_{name}" for name in fits])
        for i, (d, p) in enumerate(zip(days, psi)):
            w.writerow([d, repr(float(p))] + [repr(float(f.fitted[i])) for f in fits.values()])


def write_detector_report(res: SlopeTestResult, path) -> None:
    rows = [
        ("statistic", repr(res.statistic)),
        ("threshold", repr(res.threshold)),
        ("level", repr(res.level)),
        ("n_perm", res.n_perm),
        ("seed", res.seed),
        ("detected", str(res.detected).lower()),
        ("no_signal", str(res.no_signal).lower()),
        ("estimated_index", res.estimated_index),
        ("estimated_day", repr(res.estimated_day)),
    ]
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
