"""Contour functionals.

A functional maps a variable-length 1-D descriptor contour to a single
scalar. This module implements the fixed inventory of 51 functionals
(extrema, distribution statistics, crossing rates, peak and segment
structure, polynomial regression fits, and cosine-transform coefficients)
in a frozen, documented order so that feature indices remain stable
across runs.

Conventions, fixed here for reproducibility:

* relative positions are index/(N-1), defined as 0 for N == 1
* quantiles interpolate linearly at rank (N-1)*q
* moments use the population divisor N; skewness/kurtosis are the
  standardized central moments, 0 when the variance is below 1e-24
* crossing counts use strict sign products ((x_i-L)*(x_{i+1}-L) < 0)
  and are divided by N
* peaks are strict interior local maxima; plateaus and endpoints do not
  count
* the segment counter re-anchors whenever the contour moves more than
  0.25*range away from the current anchor value
* regression fits run over t = 0..N-1; the quadratic term is dropped for
  N <= 2; reported errors are the mean squared and mean absolute residual
* cosine transform is the orthonormal type-II DCT; coefficients with
  k >= N are 0
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

VARIANCE_GUARD = 1e-24
CENTROID_GUARD = 1e-24

FUNCTIONAL_NAMES: tuple[str, ...] = (
    # extremes
    "max", "min", "maxpos", "minpos",
    # ranges and offsets from the mean
    "range", "max_minus_mean", "min_minus_mean",
    # means
    "mean", "quadmean",
    # absolute / non-zero means
    "absmean", "nzmean",
    # percentage of non-zero values
    "nzfrac",
    # quartiles, inter-quartile ranges, upper percentiles
    "quartile1", "quartile2", "quartile3",
    "iqr21", "iqr32", "iqr31",
    "pctl95", "pctl98",
    # moments
    "stddev", "variance", "kurtosis", "skewness",
    # contour centroid
    "centroid",
    # crossing rates
    "zcr", "mcr",
    # level times
    "downleveltime25", "upleveltime75",
    # rise / fall
    "risetime", "falltime",
    # peak structure
    "numpeaks", "meanpeakdist",
    "peakmean", "peakmean_minus_mean",
    # segment structure
    "numsegments",
    # linear regression
    "linreg_m", "linreg_b", "linreg_qerr", "linreg_aerr",
    # quadratic regression
    "quadreg_a", "quadreg_b", "quadreg_c", "quadreg_qerr", "quadreg_aerr",
    # cosine transform
    "dct0", "dct1", "dct2", "dct3", "dct4", "dct5",
)

N_FUNCTIONALS = len(FUNCTIONAL_NAMES)

FUNCTIONAL_INDEX: dict[str, int] = {name: i for i, name in enumerate(FUNCTIONAL_NAMES)}


class EmptyContourError(ValueError):
    """Raised when a functional is applied to a zero-length contour."""


def _as_contour(contour) -> np.ndarray:
    x = np.asarray(contour, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyContourError("functionals are undefined on an empty contour")
    return x


def _quantile(sorted_vals: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile at rank (N-1)*q on pre-sorted data."""
    n = sorted_vals.shape[0]
    pos = (n - 1) * q
    lo = int(math.floor(pos))
    frac = pos - lo
    if frac == 0.0:
        return float(sorted_vals[lo])
    return float(sorted_vals[lo] + (sorted_vals[lo + 1] - sorted_vals[lo]) * frac)


def _crossings(x: np.ndarray, level: float) -> int:
    d = x - level
    return int(np.count_nonzero(d[:-1] * d[1:] < 0.0))


def peak_statistics(contour) -> tuple[int, float, float, float]:
    """Count strict local maxima and summarise them.

    Returns (count, mean inter-peak distance, mean peak value,
    mean peak value minus contour mean). Distances are index differences.
    The distance is 0 with fewer than 2 peaks; the value statistics are 0
    with no peaks. Endpoints are never peaks.
    """
    x = _as_contour(contour)
    n = x.size
    if n < 3:
        return 0, 0.0, 0.0, 0.0
    interior = x[1:-1]
    mask = (interior > x[:-2]) & (interior > x[2:])
    idx = np.nonzero(mask)[0] + 1
    count = int(idx.size)
    if count == 0:
        return 0, 0.0, 0.0, 0.0
    mean_val = float(x[idx].mean())
    mean_dist = float(np.diff(idx).mean()) if count >= 2 else 0.0
    return count, mean_dist, mean_val, mean_val - float(x.mean())


def segment_count(contour) -> int:
    """Number of segments under 0.25*range anchor-reset thresholding.

    A new segment starts (and the anchor moves) whenever the contour
    departs from the current anchor by more than a quarter of the total
    range. A constant contour is a single segment.
    """
    x = _as_contour(contour)
    rng = float(x.max() - x.min())
    if rng <= 0.0:
        return 1
    threshold = 0.25 * rng
    anchor = float(x[0])
    segments = 1
    for v in x[1:]:
        if abs(float(v) - anchor) > threshold:
            segments += 1
            anchor = float(v)
    return segments


def fit_linear_regression(contour) -> tuple[float, float, float, float]:
    """Least-squares line m*t + b over t = 0..N-1.

    Returns (m, b, mean squared residual, mean absolute residual).
    N == 1 degenerates to a constant fit with zero error.
    """
    x = _as_contour(contour)
    n = x.size
    if n == 1:
        return 0.0, float(x[0]), 0.0, 0.0
    t = np.arange(n, dtype=np.float64)
    tbar = (n - 1) / 2.0
    tc = t - tbar
    xbar = float(x.mean())
    m = float(np.dot(tc, x - xbar) / np.dot(tc, tc))
    b = xbar - m * tbar
    resid = x - (m * t + b)
    return m, b, float(np.mean(resid * resid)), float(np.mean(np.abs(resid)))


def fit_quadratic_regression(contour) -> tuple[float, float, float, float, float]:
    """Least-squares parabola a*t^2 + b*t + c over t = 0..N-1.

    Returns (a, b, c, mean squared residual, mean absolute residual).
    For N <= 2 the quadratic term is 0 and the fit reduces in order.
    The solve runs on t rescaled to [-1, 1] to keep the system well
    conditioned for long contours; coefficients are mapped back exactly.
    """
    x = _as_contour(contour)
    n = x.size
    if n == 1:
        return 0.0, 0.0, float(x[0]), 0.0, 0.0
    if n == 2:
        m, b, qerr, aerr = fit_linear_regression(x)
        return 0.0, m, b, qerr, aerr
    t = np.arange(n, dtype=np.float64)
    alpha = 2.0 / (n - 1)
    s = alpha * t - 1.0
    design = np.column_stack([s * s, s, np.ones(n)])
    coef, _, _, _ = np.linalg.lstsq(design, x, rcond=None)
    a_s, b_s, c_s = (float(v) for v in coef)
    beta = -1.0
    a = a_s * alpha * alpha
    b = 2.0 * a_s * alpha * beta + b_s * alpha
    c = a_s * beta * beta + b_s * beta + c_s
    resid = x - (a * t * t + b * t + c)
    return a, b, c, float(np.mean(resid * resid)), float(np.mean(np.abs(resid)))


@lru_cache(maxsize=1024)
def _dct_basis(n: int) -> np.ndarray:
    """Rows 0..5 of the orthonormal type-II DCT for length n (zero if k >= n)."""
    basis = np.zeros((6, n))
    n_rows = min(6, n)
    k = np.arange(n_rows, dtype=np.float64)
    grid = np.cos(np.pi * (np.arange(n) + 0.5)[None, :] * k[:, None] / n)
    scale = np.where(k == 0, math.sqrt(1.0 / n), math.sqrt(2.0 / n))
    basis[:n_rows] = grid * scale[:, None]
    basis.setflags(write=False)
    return basis


def dct_coefficients(contour, k: int) -> float:
    """Orthonormal type-II DCT coefficient k (0..5) of the contour."""
    if not 0 <= k <= 5:
        raise ValueError(f"coefficient index {k} out of range 0..5")
    x = _as_contour(contour)
    return float(_dct_basis(x.size)[k] @ x)


def apply_functionals(contour) -> np.ndarray:
    """Compute all 51 functionals of a contour, in FUNCTIONAL_NAMES order."""
    x = _as_contour(contour)
    n = x.size
    out = np.empty(N_FUNCTIONALS, dtype=np.float64)

    srt = np.sort(x)
    xmin = float(srt[0])
    xmax = float(srt[-1])
    rng = xmax - xmin
    mean = float(x.mean())

    if n > 1:
        maxpos = float(np.argmax(x)) / (n - 1)
        minpos = float(np.argmin(x)) / (n - 1)
    else:
        maxpos = 0.0
        minpos = 0.0

    out[0] = xmax
    out[1] = xmin
    out[2] = maxpos
    out[3] = minpos
    out[4] = rng
    out[5] = xmax - mean
    out[6] = xmin - mean
    out[7] = mean
    out[8] = math.sqrt(float(np.mean(x * x)))
    out[9] = float(np.mean(np.abs(x)))

    nz = x[x != 0.0]
    out[10] = float(nz.mean()) if nz.size else 0.0
    out[11] = nz.size / n

    q1 = _quantile(srt, 0.25)
    q2 = _quantile(srt, 0.50)
    q3 = _quantile(srt, 0.75)
    out[12] = q1
    out[13] = q2
    out[14] = q3
    out[15] = q2 - q1
    out[16] = q3 - q2
    out[17] = q3 - q1
    out[18] = _quantile(srt, 0.95)
    out[19] = _quantile(srt, 0.98)

    centered = x - mean
    var = float(np.mean(centered * centered))
    out[20] = math.sqrt(var)
    out[21] = var
    if var < VARIANCE_GUARD:
        out[22] = 0.0
        out[23] = 0.0
    else:
        out[22] = float(np.mean(centered**4)) / (var * var)
        out[23] = float(np.mean(centered**3)) / (var * math.sqrt(var))

    total = float(x.sum())
    if abs(total) < CENTROID_GUARD:
        out[24] = 0.0
    else:
        out[24] = float(np.dot(np.arange(n, dtype=np.float64), x)) / total

    out[25] = _crossings(x, 0.0) / n
    out[26] = _crossings(x, mean) / n

    out[27] = int(np.count_nonzero(x < xmin + 0.25 * rng)) / n
    out[28] = int(np.count_nonzero(x > xmin + 0.75 * rng)) / n

    if n > 1:
        diffs = np.diff(x)
        out[29] = int(np.count_nonzero(diffs > 0.0)) / (n - 1)
        out[30] = int(np.count_nonzero(diffs < 0.0)) / (n - 1)
    else:
        out[29] = 0.0
        out[30] = 0.0

    n_peaks, peak_dist, peak_mean, peak_rel = peak_statistics(x)
    out[31] = n_peaks
    out[32] = peak_dist
    out[33] = peak_mean
    out[34] = peak_rel

    out[35] = segment_count(x)

    out[36:40] = fit_linear_regression(x)
    out[40:45] = fit_quadratic_regression(x)
    out[45:51] = _dct_basis(n) @ x
    return out
