"""Slow, independent reference implementations of the evaluation metrics.

These deliberately avoid the vectorised code paths in :mod:`salloss.metrics`:
plain loops, exact fractions for the ROC areas, and a generic LP solver
for the earth mover's distance.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .core import FixationSet, normalize_distribution
from .metrics import borji_negatives


def _flat(m):
    return [float(v) for v in np.asarray(m, dtype=np.float64).ravel()]


def _mean_std(xs):
    n = len(xs)
    mu = math.fsum(xs) / n
    return mu, math.sqrt(math.fsum((x - mu) ** 2 for x in xs) / n)


def cc(gt, pred) -> float:
    a, b = _flat(gt), _flat(pred)
    ma, sa = _mean_std(a)
    mb, sb = _mean_std(b)
    cov = math.fsum((x - ma) * (y - mb) for x, y in zip(a, b)) / len(a)
    return cov / (sa * sb)


def sim(gt, pred) -> float:
    a, b = _flat(gt), _flat(pred)
    ta, tb = math.fsum(a), math.fsum(b)
    return math.fsum(min(x / ta, y / tb) for x, y in zip(a, b))


def nss(pred, fix: FixationSet) -> float:
    xs = _flat(pred)
    mu, sd = _mean_std(xs)
    w = fix.frame[0]
    return math.fsum((xs[y * w + x] - mu) / sd for x, y in fix.points) / len(fix)


def kl(gt, pred) -> float:
    a = _flat(normalize_distribution(gt))
    b = _flat(normalize_distribution(pred))
    return math.fsum(x * math.log(x / y) for x, y in zip(a, b))


def roc_area(pos, neg) -> Fraction:
    """Trapezoidal ROC area from a sweep over every distinct score."""
    pos, neg = list(pos), list(neg)
    thresholds = sorted(set(pos) | set(neg), reverse=True)
    area = Fraction(0)
    tp_prev = fp_prev = Fraction(0)
    for t in thresholds:
        tp = Fraction(sum(1 for v in pos if v >= t), len(pos))
        fp = Fraction(sum(1 for v in neg if v >= t), len(neg))
        area += (fp - fp_prev) * (tp + tp_prev) / 2
        tp_prev, fp_prev = tp, fp
    return area


def _split(pred, fix: FixationSet):
    xs = _flat(pred)
    w = fix.frame[0]
    fixed = {y * w + x for x, y in fix.points}
    pos = [xs[i] for i in sorted(fixed)]
    neg = [xs[i] for i in range(len(xs)) if i not in fixed]
    return pos, neg


def auc_judd(pred, fix: FixationSet) -> float:
    pos, neg = _split(pred, fix)
    return float(roc_area(pos, neg))


def auc_borji(pred, fix: FixationSet, splits: int = 100, seed: int = 1) -> float:
    pos, neg = _split(pred, fix)
    draws = borji_negatives(len(neg), len(pos), splits, seed)
    return float(sum((roc_area(pos, [neg[i] for i in row]) for row in draws), Fraction(0)) / splits)


def emd(gt, pred) -> float:
    """Earth mover's distance as a dense LP over every pixel pair."""
    a = np.asarray(gt, dtype=np.float64)
    b = np.asarray(pred, dtype=np.float64)
    h, w = a.shape
    a = (a / a.sum()).ravel()
    b = (b / b.sum()).ravel()
    n = h * w
    coords = [(i % w, i // w) for i in range(n)]
    cost = np.array([[math.hypot(xa - xb, ya - yb) for xb, yb in coords] for xa, ya in coords])
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n:(i + 1) * n] = 1.0
        a_eq[n + i, i::n] = 1.0
    b_eq = np.concatenate([a, b * (a.sum() / b.sum())])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"LP oracle failed: {res.message}")
    return float(res.fun)
