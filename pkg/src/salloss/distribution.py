"""Distribution-based losses: KLD, Bhattacharyya, (weighted) BCE, focal, NLL.

KLD, BHAT and NLL take strictly positive probability maps.  Use
:func:`through_distribution` to evaluate them on raw maps; it applies
:func:`~salloss.core.normalize_distribution` and chains its Jacobian.
The cross-entropy family works on per-pixel probabilities in [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    FixationSet,
    SaliencyError,
    as_array,
    check_same_shape,
    distribution_backward,
    normalize_distribution,
)
from .result import LossResult

EPS_CLAMP = 1e-7
WBCE_PRESETS = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
KL_DIRECTIONS = ("as_written", "ground_truth_first")


@dataclass(frozen=True)
class WbceParams:
    w: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.w < 1.0:
            raise SaliencyError(f"W-BCE weight must lie in (0, 1), got {self.w}")


@dataclass(frozen=True)
class FocalParams:
    gamma: float = 2.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise SaliencyError(f"focal gamma must be >= 0, got {self.gamma}")


def _positive_pair(gt, pred):
    s = as_array(gt, "ground truth")
    p = as_array(pred, "prediction")
    check_same_shape(s, p)
    if np.any(s <= 0) or np.any(p <= 0):
        raise SaliencyError("distribution losses need strictly positive maps")
    return s, p


def kld(gt, pred, direction: str = "as_written") -> LossResult:
    """KL divergence.

    ``as_written`` is sum(pred * log(pred / gt)), prediction first.
    ``ground_truth_first`` is the usual benchmark direction sum(gt * log(gt / pred)).
    """
    s, p = _positive_pair(gt, pred)
    if direction == "as_written":
        r = np.log(p / s)
        return LossResult(float(np.sum(p * r)), r + 1.0)
    if direction == "ground_truth_first":
        return LossResult(float(np.sum(s * np.log(s / p))), -s / p)
    raise SaliencyError(f"unknown kl_direction {direction!r}")


def bhat(gt, pred) -> LossResult:
    """Negated Bhattacharyya coefficient, so that lower is better."""
    s, p = _positive_pair(gt, pred)
    return LossResult(-float(np.sum(np.sqrt(s * p))), -0.5 * np.sqrt(s / p))


def _probability_pair(gt, pred):
    s = as_array(gt, "ground truth")
    p = as_array(pred, "prediction")
    check_same_shape(s, p)
    return s, np.clip(p, EPS_CLAMP, 1.0 - EPS_CLAMP)


def bce(gt, pred) -> LossResult:
    s, p = _probability_pair(gt, pred)
    value = -np.sum(s * np.log(p) + (1.0 - s) * np.log1p(-p))
    return LossResult(float(value), (p - s) / (p * (1.0 - p)))


def wbce(gt, pred, params: WbceParams = WbceParams()) -> LossResult:
    s, p = _probability_pair(gt, pred)
    w = params.w
    value = -np.sum(w * s * np.log(p) + (1.0 - w) * (1.0 - s) * np.log1p(-p))
    grad = -(w * s / p - (1.0 - w) * (1.0 - s) / (1.0 - p))
    return LossResult(float(value), grad)


def focal(gt, pred, params: FocalParams = FocalParams()) -> LossResult:
    """Focal loss modulated by powers of the prediction itself.

    The positive term is weighted by ``1 - pred**gamma`` and the negative
    term by ``pred**gamma``.  With ``gamma = 0`` the positive term vanishes,
    so this does not reduce to BCE.
    """
    s, p = _probability_pair(gt, pred)
    g = params.gamma
    pg = p**g
    lp = np.log(p)
    lq = np.log1p(-p)
    value = -np.sum((1.0 - pg) * s * lp + pg * (1.0 - s) * lq)
    dpg = g * p ** (g - 1.0) if g != 0 else np.zeros_like(p)
    grad = -(-dpg * s * lp + (1.0 - pg) * s / p + dpg * (1.0 - s) * lq - pg * (1.0 - s) / (1.0 - p))
    return LossResult(float(value), grad)


def nll(pred, fix: FixationSet) -> LossResult:
    p = as_array(pred, "prediction")
    fix.check_frame(p.shape)
    if len(fix) == 0:
        raise SaliencyError("NLL needs at least one fixation")
    rows, cols = fix.index()
    vals = p[rows, cols]
    if np.any(vals <= 0):
        raise SaliencyError("NLL needs a strictly positive prediction at fixations")
    k = len(fix)
    grad = np.zeros_like(p)
    grad[rows, cols] = -1.0 / (k * vals)
    return LossResult(-float(np.mean(np.log(vals))), grad)


def through_distribution(loss: Callable[..., LossResult], gt, pred, **kwargs) -> LossResult:
    """Evaluate a two-map distribution loss on raw maps.

    Both maps are floored and normalised to sum 1; the returned gradient is
    w.r.t. the raw ``pred``.
    """
    res = loss(normalize_distribution(gt), normalize_distribution(pred), **kwargs)
    return LossResult(res.value, distribution_backward(pred, res.gradient))


def nll_raw(pred, fix: FixationSet) -> LossResult:
    res = nll(normalize_distribution(pred), fix)
    return LossResult(res.value, distribution_backward(pred, res.gradient))
