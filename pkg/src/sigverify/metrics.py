"""Verification error metrics: threshold sweeps, EER, DET coordinates.

Conventions, fixed across the package:

- higher score = more similar; a trial is accepted when score >= threshold,
  so an impostor score equal to the threshold counts as a false accept;
- the sweep evaluates every distinct score as a candidate threshold;
- EER is reported as (FAR + FRR) / 2 at the threshold minimizing
  |FAR - FRR| (the rates rarely cross exactly on finite score sets); ties
  break toward the smaller midpoint, then the smaller threshold. Breaking
  ties on the midpoint keeps the reported EER invariant under score
  negation with swapped roles, which threshold order alone would not.

DET coordinates are normal deviates of the two error rates. Rates are
clamped to [1/(2n), 1 - 1/(2n)] before the probit so perfectly separated
score sets still yield finite plot points.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class EmptyScoreListError(ValueError):
    """A metric was asked to operate on an empty score list."""


class EerResult(NamedTuple):
    eer: float
    threshold: float


def _validate(genuine, impostor) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(genuine, dtype=float).ravel()
    i = np.asarray(impostor, dtype=float).ravel()
    if g.size == 0 or i.size == 0:
        raise EmptyScoreListError("genuine and impostor score lists must be nonempty")
    return g, i


def sweep_rates(genuine, impostor, thresholds=None):
    """FAR and FRR at each candidate threshold.

    FAR(th) is the fraction of impostor scores >= th; FRR(th) the fraction
    of genuine scores < th. Default candidates are the distinct pooled
    scores in ascending order. Returns (thresholds, far, frr).
    """
    g, i = _validate(genuine, impostor)
    if thresholds is None:
        thresholds = np.unique(np.concatenate([g, i]))
    else:
        thresholds = np.asarray(thresholds, dtype=float)
    g_sorted = np.sort(g)
    i_sorted = np.sort(i)
    far = (i.size - np.searchsorted(i_sorted, thresholds, side="left")) / i.size
    frr = np.searchsorted(g_sorted, thresholds, side="left") / g.size
    return thresholds, far, frr


def compute_eer(genuine, impostor) -> EerResult:
    """Equal error rate and its operating threshold."""
    thresholds, far, frr = sweep_rates(genuine, impostor)
    diffs = np.abs(far - frr)
    mids = (far + frr) / 2.0
    idx = int(np.lexsort((thresholds, mids, diffs))[0])
    return EerResult(eer=float(mids[idx]), threshold=float(thresholds[idx]))


# Rational approximation coefficients for the standard normal quantile
# (P. Acklam's algorithm; relative error below 1.15e-9 over (0, 1)).
_PROBIT_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_PROBIT_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_PROBIT_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_PROBIT_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)
_PROBIT_SPLIT = 0.02425


def probit(p):
    """Standard normal quantile function.

    Vectorized rational approximation with three branches (lower tail,
    central region, upper tail); inputs must lie strictly inside (0, 1).
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("probit domain is the open interval (0, 1)")
    out = np.empty_like(p)

    a, b, c, d = _PROBIT_A, _PROBIT_B, _PROBIT_C, _PROBIT_D
    low = p < _PROBIT_SPLIT
    high = p > 1.0 - _PROBIT_SPLIT
    mid = ~(low | high)

    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        out[mid] = q * num / den
    if np.any(low):
        q = np.sqrt(-2.0 * np.log(p[low]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        out[low] = num / den
    if np.any(high):
        q = np.sqrt(-2.0 * np.log(1.0 - p[high]))
        num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        out[high] = -num / den
    return out if out.ndim else float(out)


def det_points(genuine, impostor, thresholds=None) -> np.ndarray:
    """DET curve coordinates: one (probit(FAR), probit(FRR)) row per
    threshold on the pooled score grid. Always finite thanks to rate
    clamping."""
    g, i = _validate(genuine, impostor)
    thresholds, far, frr = sweep_rates(g, i, thresholds)
    far_c = np.clip(far, 1.0 / (2 * i.size), 1.0 - 1.0 / (2 * i.size))
    frr_c = np.clip(frr, 1.0 / (2 * g.size), 1.0 - 1.0 / (2 * g.size))
    return np.column_stack([probit(far_c), probit(frr_c)])
