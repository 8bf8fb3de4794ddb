"""Finite-difference gradient checks and direct-map gradient descent."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .combination import LossCombination, combine
from .core import EPS_FLOOR, FixationSet, SaliencyError, as_array
from .result import LossResult
from .rng import SplitMix64

PROJECTIONS = ("clamp", "renormalize", "none")
KINK_RATIO = 0.05


class OptimizationDiverged(ArithmeticError):
    def __init__(self, message: str, trace: list[float]):
        super().__init__(message)
        self.trace = trace


@dataclass
class GradCheckReport:
    analytic: np.ndarray
    numeric: np.ndarray
    rel_error: np.ndarray
    skipped: np.ndarray  # bool mask of kink-adjacent entries

    @property
    def max_rel_error(self) -> float:
        errs = self.rel_error[~self.skipped]
        return float(errs.max()) if errs.size else 0.0

    @property
    def n_skipped(self) -> int:
        return int(self.skipped.sum())

    def passed(self, tol: float) -> bool:
        return self.max_rel_error <= tol


def relative_error(a, n) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def gradcheck_fn(fn: Callable[[np.ndarray], float], x, analytic, h: float = 1e-5, skip=None) -> GradCheckReport:
    """Central differences of a scalar function of an array, entry by entry.

    An entry is treated as kink-adjacent (and skipped) when its forward and
    backward one-sided slopes disagree by more than 5%, or when ``skip`` marks it.
    """
    x = np.array(x, dtype=np.float64)
    analytic = np.asarray(analytic, dtype=np.float64)
    f0 = fn(x)
    numeric = np.empty_like(x)
    kink = np.zeros(x.shape, dtype=bool)
    flat = x.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(x)
        flat[i] = orig - h
        fm = fn(x)
        flat[i] = orig
        fwd, bwd = (fp - f0) / h, (f0 - fm) / h
        numeric.flat[i] = (fp - fm) / (2.0 * h)
        kink.flat[i] = abs(fwd - bwd) > KINK_RATIO * max(abs(fwd), abs(bwd)) and abs(fwd - bwd) > 1e-9
    if skip is not None:
        kink |= np.asarray(skip, dtype=bool)
    return GradCheckReport(analytic, numeric, relative_error(analytic, numeric), kink)


def gradcheck(spec: LossCombination, gt, pred, fix: FixationSet | None = None, h: float = 1e-5, skip=None) -> GradCheckReport:
    pred = as_array(pred, "prediction")
    res = combine(spec, gt, pred, fix)
    return gradcheck_fn(lambda x: combine(spec, gt, x, fix).value, pred, res.gradient, h, skip)


@dataclass(frozen=True)
class OptimizeConfig:
    step: float = 1.0
    iterations: int = 500
    projection: str = "clamp"
    tol: float = 1e-12
    seed: int = 1
    adaptive: bool = False
    max_halvings: int = 30

    def __post_init__(self):
        if not self.step > 0:
            raise SaliencyError("step size must be positive")
        if self.iterations < 1:
            raise SaliencyError("need at least one iteration")
        if self.projection not in PROJECTIONS:
            raise SaliencyError(f"unknown projection {self.projection!r}")


@dataclass
class OptimizeResult:
    map: np.ndarray
    trace: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


def project(x: np.ndarray, mode: str) -> np.ndarray:
    if mode == "clamp":
        return np.clip(x, 0.0, 1.0)
    if mode == "renormalize":
        y = np.maximum(x, EPS_FLOOR)
        return y / y.sum()
    return x


def initial_map(shape, seed: int, projection: str = "none") -> np.ndarray:
    """0.5 plus seeded uniform noise of amplitude 0.01 (never constant)."""
    u = SplitMix64(seed).uniform(int(np.prod(shape))).reshape(shape)
    return project(0.5 + 0.01 * (2.0 * u - 1.0), projection)


def descend(objective: Callable[[np.ndarray], LossResult], x0, cfg: OptimizeConfig) -> OptimizeResult:
    """Projected gradient descent with backtracking; the trace never increases."""
    x = project(np.array(x0, dtype=np.float64), cfg.projection)
    try:
        cur = objective(x)
    except FloatingPointError as e:
        raise OptimizationDiverged(f"numeric failure at the initial point: {e}", []) from e
    trace = [cur.value]
    if not np.isfinite(cur.value):
        raise OptimizationDiverged("non-finite loss at the initial point", trace)
    step = cfg.step
    converged = False
    for _ in range(cfg.iterations):
        t = step
        accepted = None
        for _ in range(cfg.max_halvings + 1):
            cand = project(x - t * cur.gradient, cfg.projection)
            try:
                res = objective(cand)
            except (SaliencyError, FloatingPointError):
                res = None
            if res is not None and np.isfinite(res.value) and res.value <= cur.value:
                accepted = (cand, res)
                break
            t *= 0.5
        if accepted is None:
            converged = True
            break
        delta = cur.value - accepted[1].value
        x, cur = accepted
        trace.append(cur.value)
        if not np.all(np.isfinite(cur.gradient)):
            raise OptimizationDiverged("non-finite gradient", trace)
        if cfg.adaptive:
            step = 2.0 * t
        if delta <= cfg.tol * max(1.0, abs(cur.value)):
            converged = True
            break
    return OptimizeResult(x, trace, converged)


def optimize_map(spec: LossCombination, gt, fix: FixationSet | None, cfg: OptimizeConfig = OptimizeConfig(), init=None) -> OptimizeResult:
    """Minimise ``spec`` over a free prediction map, starting from seeded noise."""
    s = as_array(gt, "ground truth")
    x0 = initial_map(s.shape, cfg.seed, cfg.projection) if init is None else init
    with np.errstate(divide="raise", invalid="raise", over="raise"):
        return descend(lambda x: combine(spec, s, x, fix), x0, cfg)
