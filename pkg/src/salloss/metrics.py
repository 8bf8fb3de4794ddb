"""Seven-metric saliency evaluation: CC, SIM, AUC-Judd, AUC-Borji, NSS, EMD, KL.

Each metric raises :class:`~salloss.core.DegenerateInput` when it is
undefined; :func:`evaluate_all` turns that into a flag instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (
    EPS_STD,
    DegenerateInput,
    FixationSet,
    SaliencyError,
    as_map,
    check_same_shape,
    normalize_distribution,
)
from .rng import SplitMix64
from .scores import cc_score

EMD_EXACT_LIMIT = 1024
BORJI_SPLITS = 100
BORJI_SEED = 1
METRIC_NAMES = ("cc", "sim", "auc_judd", "auc_borji", "nss", "emd", "kl")


def _pair(gt, pred):
    s = as_map(gt, name="ground truth")
    p = as_map(pred, name="prediction")
    check_same_shape(s, p)
    return s, p


def _sum_normalize(m: np.ndarray, what: str) -> np.ndarray:
    total = m.sum()
    if total <= 0:
        raise DegenerateInput(f"{what}: all-zero map")
    return m / total


def metric_cc(gt, pred) -> float:
    s, p = _pair(gt, pred)
    return cc_score(s, p).value


def metric_sim(gt, pred) -> float:
    s, p = _pair(gt, pred)
    s = _sum_normalize(s, "SIM")
    p = _sum_normalize(p, "SIM")
    return float(np.minimum(s, p).sum())


def _fixated(pred, fix: FixationSet):
    p = as_map(pred, name="prediction")
    fix.check_frame(p.shape)
    if len(fix) == 0:
        raise DegenerateInput("no fixations")
    mask = np.zeros(p.shape, dtype=bool)
    rows, cols = fix.index()
    mask[rows, cols] = True
    pos = p[mask]
    neg = p[~mask]
    if neg.size == 0:
        raise DegenerateInput("every pixel is fixated; no negatives")
    return pos, neg


def _twice_u(pos: np.ndarray, neg_sorted: np.ndarray) -> int:
    """2 * Mann-Whitney U with half credit for ties, as an exact integer."""
    lo = np.searchsorted(neg_sorted, pos, side="left")
    hi = np.searchsorted(neg_sorted, pos, side="right")
    return int(lo.sum()) + int(hi.sum())


def metric_auc_judd(pred, fix: FixationSet) -> float:
    """ROC area with fixated pixels as positives and all others as negatives.

    Equal to the trapezoidal area of the ROC curve swept over every
    distinct saliency value, so tied positive/negative pairs count half.
    """
    pos, neg = _fixated(pred, fix)
    return _twice_u(pos, np.sort(neg)) / (2 * pos.size * neg.size)


def borji_negatives(n_negatives: int, n_fix: int, splits: int, seed: int) -> np.ndarray:
    """Indices into the non-fixated pixels, one row of ``n_fix`` draws per split."""
    rng = SplitMix64(seed)
    return rng.integers(n_negatives, splits * n_fix).reshape(splits, n_fix)


def metric_auc_borji(pred, fix: FixationSet, splits: int = BORJI_SPLITS, seed: int = BORJI_SEED) -> float:
    if splits < 1:
        raise SaliencyError("AUC-Borji needs at least one split")
    pos, neg = _fixated(pred, fix)
    draws = borji_negatives(neg.size, pos.size, splits, seed)
    total = 0
    for row in draws:
        total += _twice_u(pos, np.sort(neg[row]))
    return total / (2 * splits * pos.size * pos.size)


def metric_nss(pred, fix: FixationSet) -> float:
    p = as_map(pred, name="prediction")
    fix.check_frame(p.shape)
    if len(fix) == 0:
        raise DegenerateInput("no fixations")
    sigma = p.std()
    if sigma <= EPS_STD:
        raise DegenerateInput("degenerate prediction: constant map has no NSS")
    rows, cols = fix.index()
    return float(np.mean((p[rows, cols] - p.mean()) / sigma))


@dataclass(frozen=True)
class EmdResult:
    value: float
    approximate: bool
    factor: int = 1


def _downsample_factor(shape, limit: int) -> int:
    h, w = shape
    f = 1
    while math.ceil(h / f) * math.ceil(w / f) > limit:
        f += 1
    return f


def _block_sum(m: np.ndarray, f: int) -> np.ndarray:
    h, w = m.shape
    hb, wb = math.ceil(h / f), math.ceil(w / f)
    padded = np.zeros((hb * f, wb * f))
    padded[:h, :w] = m
    return padded.reshape(hb, f, wb, f).sum(axis=(1, 3))


def pixel_centers(shape, f: int = 1) -> np.ndarray:
    """(x, y) centres of each pixel (or each f x f block) in original pixel units."""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    return np.stack([xs.ravel(), ys.ravel()], axis=1) * float(f) + (f - 1) / 2.0


def emd(gt, pred, exact_limit: int = EMD_EXACT_LIMIT) -> EmdResult:
    """Earth mover's distance between the two maps as unit-mass distributions.

    Ground distance is Euclidean between pixel centres.  Grids above
    ``exact_limit`` pixels are block-summed first and flagged approximate.
    """
    s, p = _pair(gt, pred)
    s = _sum_normalize(s, "EMD")
    p = _sum_normalize(p, "EMD")
    f = _downsample_factor(s.shape, exact_limit)
    if f > 1:
        s, p = _block_sum(s, f), _block_sum(p, f)
    pts = pixel_centers(s.shape, f)
    a, b = s.ravel(), p.ravel()
    ia, ib = np.nonzero(a > 0)[0], np.nonzero(b > 0)[0]
    if np.array_equal(a, b):
        return EmdResult(0.0, f > 1, f)
    diff = pts[ia][:, None, :] - pts[ib][None, :, :]
    cost = np.sqrt(np.sum(diff * diff, axis=2))
    wa, wb = a[ia], b[ib]
    wb = wb * (wa.sum() / wb.sum())
    value, _ = kernels.transport_simplex(wa, wb, cost)
    return EmdResult(max(value, 0.0), f > 1, f)


def metric_emd(gt, pred, exact_limit: int = EMD_EXACT_LIMIT) -> float:
    return emd(gt, pred, exact_limit).value


def metric_kl(gt, pred) -> float:
    """KL(gt || pred) on epsilon-floored, sum-normalised maps."""
    s, p = _pair(gt, pred)
    s = normalize_distribution(s)
    p = normalize_distribution(p)
    return float(np.sum(s * np.log(s / p)))


@dataclass(frozen=True)
class EvalConfig:
    splits: int = BORJI_SPLITS
    seed: int = BORJI_SEED
    emd_exact_limit: int = EMD_EXACT_LIMIT


@dataclass
class MetricReport:
    cc: float = math.nan
    sim: float = math.nan
    auc_judd: float = math.nan
    auc_borji: float = math.nan
    nss: float = math.nan
    emd: float = math.nan
    kl: float = math.nan
    flags: dict[str, str] = field(default_factory=dict)

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def flag_string(self) -> str:
        """Compact ``metric:flag`` list of everything that is not ``ok``."""
        bad = [f"{k}:{v}" for k, v in self.flags.items() if v != "ok"]
        return ";".join(bad) if bad else "ok"


def evaluate_all(gt, pred, fix: FixationSet, config: EvalConfig = EvalConfig()) -> MetricReport:
    """All seven metrics for one image; never raises on degenerate inputs."""
    report = MetricReport()
    calls = {
        "cc": lambda: metric_cc(gt, pred),
        "sim": lambda: metric_sim(gt, pred),
        "auc_judd": lambda: metric_auc_judd(pred, fix),
        "auc_borji": lambda: metric_auc_borji(pred, fix, config.splits, config.seed),
        "nss": lambda: metric_nss(pred, fix),
        "emd": lambda: emd(gt, pred, config.emd_exact_limit),
        "kl": lambda: metric_kl(gt, pred),
    }
    for name, call in calls.items():
        try:
            value = call()
        except DegenerateInput:
            report.flags[name] = "degenerate"
            continue
        except SaliencyError:
            report.flags[name] = "invalid"
            continue
        if isinstance(value, EmdResult):
            report.flags[name] = "approximate" if value.approximate else "ok"
            value = value.value
        else:
            report.flags[name] = "ok"
        setattr(report, name, float(value))
    return report
