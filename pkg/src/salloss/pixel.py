"""Pixel-wise losses on unit-range maps, averaged over the N*M pixels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SaliencyError, as_array, check_same_shape
from .result import LossResult

MLNET_ALPHA = 1.1
_MLNET_NUM, _MLNET_DEN = 11, 10  # alpha as a ratio, so the weights at S = 0 and 1 are exact
SIG_LAMBDA_PRESETS = (0.25, 0.55, 0.75)


@dataclass(frozen=True)
class SigWeightParams:
    k: float = 10.0
    lam: float = 0.55

    def __post_init__(self):
        if not self.k > 0:
            raise SaliencyError(f"sigmoid steepness must be positive, got {self.k}")
        if not 0.0 <= self.lam <= 1.0:
            raise SaliencyError(f"sigmoid inflection must lie in [0, 1], got {self.lam}")


def _pair(gt, pred):
    s = as_array(gt, "ground truth")
    p = as_array(pred, "prediction")
    check_same_shape(s, p)
    return s, p


def mse(gt, pred) -> LossResult:
    s, p = _pair(gt, pred)
    d = p - s
    return LossResult(float(np.mean(d * d)), 2.0 * d / d.size)


def ead(gt, pred) -> LossResult:
    s, p = _pair(gt, pred)
    d = p - s
    e = np.exp(np.abs(d))
    return LossResult(float(np.mean(e - 1.0)), np.sign(d) * e / d.size)


def ae(gt, pred) -> LossResult:
    s, p = _pair(gt, pred)
    d = p - s
    return LossResult(float(np.mean(np.abs(d))), np.sign(d) / d.size)


def mlnet_weights(gt) -> np.ndarray:
    """1 / (alpha - S), evaluated as 10 / (11 - 10 S)."""
    return _MLNET_DEN / (_MLNET_NUM - _MLNET_DEN * np.asarray(gt, dtype=np.float64))


def sig_weights(gt, params: SigWeightParams = SigWeightParams()) -> np.ndarray:
    s = np.asarray(gt, dtype=np.float64)
    return params.k / (1.0 + np.exp(-params.k * (s - params.lam)))


def weighted_mse(gt, pred, weights) -> LossResult:
    """Squared error with per-pixel weights that depend on the ground truth only."""
    s, p = _pair(gt, pred)
    w = np.asarray(weights, dtype=np.float64)
    d = p - s
    return LossResult(float(np.mean(w * d * d)), 2.0 * w * d / d.size)


def wmse_mlnet(gt, pred) -> LossResult:
    s, p = _pair(gt, pred)
    if np.any(s > 1.0) or np.any(s < 0.0):
        raise SaliencyError("MLNET weighting needs a ground truth in [0, 1]")
    return weighted_mse(s, p, mlnet_weights(s))


def wmse_sig(gt, pred, params: SigWeightParams = SigWeightParams()) -> LossResult:
    s, p = _pair(gt, pred)
    return weighted_mse(s, p, sig_weights(s, params))
