"""Two-layer convolutional saliency net with a sigmoid head, trained by plain GD."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .combination import LossCombination, combine
from .core import FixationSet, SaliencyError, as_array
from .optimize import GradCheckReport, OptimizationDiverged, gradcheck_fn
from .rng import SplitMix64, glorot_conv

PARAM_NAMES = ("w1", "b1", "w2", "b2")
# Parameter derivatives span several decades; at 1e-5 the smallest ones sit
# below the central-difference roundoff floor, so parameter checks step wider
# and exclude ReLU crossings exactly instead.
PARAM_FD_STEP = 3e-5


@dataclass(frozen=True)
class MicroNet:
    w1: np.ndarray  # (8, 1, 3, 3)
    b1: np.ndarray
    w2: np.ndarray  # (1, 8, 3, 3)
    b2: np.ndarray

    @classmethod
    def seeded(cls, seed: int = 1, hidden: int = 8) -> "MicroNet":
        rng = SplitMix64(seed)
        w1 = glorot_conv(rng, hidden, 1, 3)
        w2 = glorot_conv(rng, 1, hidden, 3)
        return cls(w1, np.zeros(hidden), w2, np.zeros(1))

    def params(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def updated(self, grads: dict[str, np.ndarray], step: float) -> "MicroNet":
        return replace(self, **{k: getattr(self, k) - step * grads[k] for k in PARAM_NAMES})

    def forward(self, image):
        x = as_array(image, "input")[None, :, :]
        z1 = kernels.conv2d_forward(np.ascontiguousarray(x), self.w1, self.b1)
        a1 = np.maximum(z1, 0.0)
        z2 = kernels.conv2d_forward(a1, self.w2, self.b2)
        out = 1.0 / (1.0 + np.exp(-z2[0]))
        return out, (x, z1, a1, out)

    def predict(self, image) -> np.ndarray:
        return self.forward(image)[0]

    def backward(self, cache, gout) -> dict[str, np.ndarray]:
        x, z1, a1, out = cache
        gz2 = np.ascontiguousarray((gout * out * (1.0 - out))[None, :, :])
        ga1, dw2, db2 = kernels.conv2d_backward(a1, self.w2, gz2)
        gz1 = np.ascontiguousarray(ga1 * (z1 > 0))
        _, dw1, db1 = kernels.conv2d_backward(x, self.w1, gz1)
        return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}

    def save(self, path) -> None:
        np.savez(path, **self.params())

    @classmethod
    def load(cls, path) -> "MicroNet":
        with np.load(path) as data:
            return cls(*(np.array(data[k], dtype=np.float64) for k in PARAM_NAMES))


@dataclass(frozen=True)
class Sample:
    image: np.ndarray
    gt: np.ndarray
    fix: FixationSet | None = None


def batch_loss(net: MicroNet, data, spec: LossCombination):
    """Mean loss over ``data`` and its gradient w.r.t. every net parameter."""
    total = 0.0
    grads = {k: np.zeros_like(v) for k, v in net.params().items()}
    for sample in data:
        out, cache = net.forward(sample.image)
        res = combine(spec, sample.gt, out, sample.fix)
        total += res.value
        for k, g in net.backward(cache, res.gradient).items():
            grads[k] += g
    n = len(data)
    return total / n, {k: g / n for k, g in grads.items()}


def train_micro(net: MicroNet, data, spec: LossCombination, epochs: int, step: float):
    """Full-batch gradient descent; returns the trained net and per-epoch mean losses."""
    data = list(data)
    if not data:
        raise SaliencyError("training needs at least one sample")
    shape = data[0].gt.shape
    if any(s.gt.shape != shape or np.shape(s.image) != shape for s in data):
        raise SaliencyError("training samples must share one shape")
    curve: list[float] = []
    for _ in range(epochs):
        loss, grads = batch_loss(net, data, spec)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise OptimizationDiverged("non-finite training loss", curve + [loss])
        curve.append(loss)
        net = net.updated(grads, step)
    return net, curve


def _relu_pattern(net: MicroNet, data) -> list[np.ndarray]:
    return [net.forward(s.image)[1][1] > 0 for s in data]


def param_gradcheck(net: MicroNet, data, spec: LossCombination, h: float = PARAM_FD_STEP) -> dict[str, GradCheckReport]:
    """Central differences of ``batch_loss`` over every parameter entry.

    Entries whose +-h perturbation flips any hidden ReLU are skipped, on top
    of the generic one-sided-slope kink test (which catches kinks inside the loss).
    """
    data = list(data)
    _, grads = batch_loss(net, data, spec)
    base = _relu_pattern(net, data)
    reports = {}
    for key in PARAM_NAMES:
        value = getattr(net, key)

        def with_value(v, key=key):
            return replace(net, **{key: v})

        flips = np.zeros(value.shape, dtype=bool)
        probe = value.copy()
        for i in range(probe.size):
            orig = probe.flat[i]
            for d in (h, -h):
                probe.flat[i] = orig + d
                pattern = _relu_pattern(with_value(probe.copy()), data)
                if any(not np.array_equal(a, b) for a, b in zip(pattern, base)):
                    flips.flat[i] = True
            probe.flat[i] = orig
        reports[key] = gradcheck_fn(lambda v: batch_loss(with_value(v.copy()), data, spec)[0],
                                    value, grads[key], h, skip=flips)
    return reports

