"""Scaling-law fits on transport traces and extreme statistics of the asymmetry walk."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import FitDomainError, InsufficientRangeError
from .lattice import CumulativeWalk

MIN_POINTS = 10
DEFAULT_TAIL = 0.4


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float
    window: tuple
    stderr: float = float("nan")
    n_points: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SinaiFit:
    quartic: ScalingFit  # linear regression of y on (ln t)^4: exponent holds the slope
    log_power: ScalingFit  # y ~ (ln t)^alpha


def _ols(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = coef
    resid = y - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    n = x.size
    sxx = float(np.sum((x - x.mean()) ** 2))
    se = np.sqrt(ss_res / (n - 2) / sxx) if n > 2 and sxx > 0 else float("nan")
    return float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)), float(se)


def _series(trace, field):
    times = np.asarray(trace.times, dtype=float)
    y = np.asarray(getattr(trace, field), dtype=float)
    clean = int(getattr(trace, "clean_until", times.size))
    return times[:clean], y[:clean]


def default_window(times) -> tuple:
    """Last 40% of the positive-time points."""
    t = np.asarray(times)
    t = t[t > 0]
    if t.size == 0:
        raise FitDomainError("no positive times to fit")
    k = max(int(np.ceil(DEFAULT_TAIL * t.size)), 1)
    return float(t[-k]), float(t[-1])


def _select(times, y, window):
    if window is None:
        window = default_window(times)
    lo, hi = window
    sel = (times >= lo) & (times <= hi) & (times > 0)
    return times[sel], y[sel], (float(lo), float(hi))


def fit_power(trace, field: str = "d2", window=None, absolute: bool = False) -> ScalingFit:
    """Least-squares line through ``(ln t, ln y)``; the slope is the exponent.

    Only the boundary-clean part of the trace is used.  ``absolute`` fits
    ``|y|`` (drift of either sign).
    """
    times, y = _series(trace, field)
    t, y, window = _select(times, y, window)
    if absolute:
        y = np.abs(y)
    if t.size < MIN_POINTS:
        raise FitDomainError(f"need at least {MIN_POINTS} points in the window, got {t.size}")
    if np.any(y <= 0):
        raise FitDomainError(f"{field} has nonpositive values inside the fit window")
    slope, intercept, r2, se = _ols(np.log(t), np.log(y))
    return ScalingFit(slope, float(np.exp(intercept)), r2, (float(t[0]), float(t[-1])), se, int(t.size))


def fit_sinai(trace, window=None, field: str = "d2", min_decades: float = 2.0) -> SinaiFit:
    """Two Sinai diagnostics: ``y`` against ``(ln t)^4`` and the exponent of ``y ~ (ln t)^alpha``."""
    times, y = _series(trace, field)
    if window is None:
        lo, hi = default_window(times)
        window = (min(lo, hi / 10**min_decades), hi)
    t, y, window = _select(times, y, window)
    t_y = y[t > 1.0]
    t = t[t > 1.0]
    if t.size < MIN_POINTS:
        raise FitDomainError(f"need at least {MIN_POINTS} points with t > 1 in the window, got {t.size}")
    if np.log10(t[-1] / t[0]) < min_decades - 1e-9:
        raise InsufficientRangeError(
            f"window spans {np.log10(t[-1] / t[0]):.2f} decades; the Sinai fit needs {min_decades}"
        )
    if np.any(t_y <= 0):
        raise FitDomainError(f"{field} has nonpositive values inside the fit window")
    win = (float(t[0]), float(t[-1]))
    lt = np.log(t)
    slope, intercept, r2, se = _ols(lt**4, t_y)
    quartic = ScalingFit(slope, intercept, r2, win, se, int(t.size))
    a, c, r2b, seb = _ols(np.log(lt), np.log(t_y))
    return SinaiFit(quartic=quartic, log_power=ScalingFit(a, float(np.exp(c)), r2b, win, seb, int(t.size)))


def walk_extremes(walk: CumulativeWalk, atol: float = 1e-9) -> dict:
    """Global minimizers and maximizers of ``X_n`` (1-based sites, index order).

    Values within ``atol`` of the extreme count as ties, so sequences like
    ``(0, h, 0, h)`` report both minima despite rounding in the prefix sums.
    """
    X = np.asarray(walk.X)
    lo, hi = X.min(), X.max()
    return {
        "argmin": [int(i) + 1 for i in np.flatnonzero(X <= lo + atol)],
        "argmax": [int(i) + 1 for i in np.flatnonzero(X >= hi - atol)],
        "min": float(lo),
        "max": float(hi),
    }
