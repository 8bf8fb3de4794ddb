"""NSS and Pearson CC as differentiable scores (higher is better).

Signs are applied by the combination layer, not here.
"""
from __future__ import annotations

import numpy as np

from .core import EPS_STD, DegenerateInput, FixationSet, SaliencyError, as_array, check_same_shape
from .result import LossResult

NSS_MODES = ("per_fixation", "paper_sum_over_NM")


def nss_score(pred, fix: FixationSet, mode: str = "per_fixation") -> LossResult:
    """Mean z-score of ``pred`` at the fixations.

    ``paper_sum_over_NM`` divides the summed z-scores by the pixel count
    instead of the fixation count.
    """
    x = as_array(pred, "prediction")
    fix.check_frame(x.shape)
    if len(fix) == 0:
        raise SaliencyError("NSS needs at least one fixation")
    if mode == "per_fixation":
        denom = len(fix)
    elif mode == "paper_sum_over_NM":
        denom = x.size
    else:
        raise SaliencyError(f"unknown nss_mode {mode!r}")
    n = x.size
    mu = x.mean()
    c = x - mu
    sigma = np.sqrt(np.mean(c * c))
    if sigma <= EPS_STD:
        raise DegenerateInput("degenerate prediction: constant map has no NSS")
    rows, cols = fix.index()
    k = len(fix)
    csum = c[rows, cols].sum()
    value = csum / (sigma * denom)
    grad = -(k / n) / sigma - csum * c / (n * sigma**3)
    grad[rows, cols] += 1.0 / sigma
    return LossResult(float(value), grad / denom)


def cc_score(gt, pred) -> LossResult:
    """Pearson correlation between ``gt`` and ``pred`` with its gradient w.r.t. ``pred``."""
    s = as_array(gt, "ground truth")
    x = as_array(pred, "prediction")
    check_same_shape(s, x)
    n = x.size
    cs = s - s.mean()
    cx = x - x.mean()
    ss = np.sqrt(np.mean(cs * cs))
    sx = np.sqrt(np.mean(cx * cx))
    if ss <= EPS_STD or sx <= EPS_STD:
        raise DegenerateInput("degenerate input: CC undefined for a constant map")
    r = np.mean(cs * cx) / (ss * sx)
    grad = cs / (n * ss * sx) - r * cx / (n * sx * sx)
    return LossResult(float(np.clip(r, -1.0, 1.0)), grad)
