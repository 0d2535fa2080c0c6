"""Rate fits for field-energy time series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateFit:
    rate: float
    intercept: float
    n_points: int
    times: tuple
    log_values: tuple


def _parabolic_peak(t, y, i):
    # vertex of the parabola through three equally spaced samples
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0:
        return t[i], y1
    s = 0.5 * (y0 - y2) / denom
    h = t[i + 1] - t[i]
    return t[i] + s * h, y1 - 0.25 * (y0 - y2) * s


def peak_rate(t, energy, t_min: float = 0.0, t_max: float = np.inf) -> RateFit:
    """Exponential rate of an oscillating positive series from its local maxima.

    Maxima are located by parabolic interpolation of ``log(energy)`` and a
    straight line is fitted through them; the slope is the energy rate.
    """
    t = np.asarray(t, dtype=float)
    y = np.log(np.maximum(np.asarray(energy, dtype=float), np.finfo(float).tiny))
    pts = []
    for i in range(1, len(t) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1] and t_min <= t[i] <= t_max:
            pts.append(_parabolic_peak(t, y, i))
    if len(pts) < 2:
        raise ValueError(f"need at least two maxima in [{t_min}, {t_max}], found {len(pts)}")
    tp, yp = np.array(pts).T
    slope, intercept = np.polyfit(tp, yp, 1)
    return RateFit(float(slope), float(intercept), len(tp), tuple(tp), tuple(yp))


def window_rate(t, energy, t_min: float, t_max: float) -> RateFit:
    """Least-squares slope of ``log(energy)`` over a time window (monotone growth)."""
    t = np.asarray(t, dtype=float)
    y = np.log(np.asarray(energy, dtype=float))
    m = (t >= t_min) & (t <= t_max)
    if m.sum() < 2:
        raise ValueError("window contains fewer than two samples")
    slope, intercept = np.polyfit(t[m], y[m], 1)
    return RateFit(float(slope), float(intercept), int(m.sum()), tuple(t[m]), tuple(y[m]))


def observed_order(h, err) -> np.ndarray:
    """Pairwise convergence orders ``log(e_i/e_{i+1}) / log(h_i/h_{i+1})``."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])
