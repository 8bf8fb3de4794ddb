"""Deep-feature and Gram-matrix losses over a fixed convolutional extractor.

The default extractor is a seeded random pyramid of 3x3 conv, ReLU and
2x2 average pooling stages.  Real network activations can be loaded with
:func:`load_pyramid` and compared value-only.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .core import SaliencyError, as_array, check_same_shape
from .result import LossResult
from .rng import SplitMix64, glorot_conv

DEFAULT_SEED = 0x5EED
DEFAULT_CHANNELS = (8, 16, 32)
PYRAMID_MAGIC = b"SALPYR1\0"


@dataclass(frozen=True)
class ConvLayer:
    weight: np.ndarray  # (C_out, C_in, k, k)
    bias: np.ndarray  # (C_out,)
    pool: bool = True


@dataclass(frozen=True)
class FeatureExtractor:
    layers: tuple[ConvLayer, ...]
    seed: int | None = None

    @classmethod
    def seeded(cls, seed: int = DEFAULT_SEED, channels=DEFAULT_CHANNELS, in_channels: int = 1):
        rng = SplitMix64(seed)
        layers = []
        c_in = in_channels
        for c_out in channels:
            w = glorot_conv(rng, c_out, c_in, 3)
            layers.append(ConvLayer(w, np.zeros(c_out)))
            c_in = c_out
        return cls(tuple(layers), seed)

    @classmethod
    def identity(cls, kernel: int = 3):
        """One single-channel layer passing the map through (no pooling)."""
        w = np.zeros((1, 1, kernel, kernel))
        w[0, 0, kernel // 2, kernel // 2] = 1.0
        return cls((ConvLayer(w, np.zeros(1), pool=False),))

    @property
    def in_channels(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def min_size(self) -> int:
        return 2 ** sum(layer.pool for layer in self.layers)


@dataclass
class FeaturePyramid:
    layers: list[np.ndarray]  # each (C_j, H_j, W_j)
    _cache: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    def __getitem__(self, j):
        return self.layers[j]


def _pool_forward(a):
    c, h, w = a.shape
    h2, w2 = h // 2, w // 2
    return a[:, : 2 * h2, : 2 * w2].reshape(c, h2, 2, w2, 2).mean(axis=(2, 4))


def _pool_backward(g, shape):
    c, h, w = shape
    out = np.zeros(shape)
    h2, w2 = g.shape[1], g.shape[2]
    out[:, : 2 * h2, : 2 * w2] = np.repeat(np.repeat(g, 2, axis=1), 2, axis=2) / 4.0
    return out


def extract(x, f: FeatureExtractor) -> FeaturePyramid:
    m = as_array(x)
    h, w = m.shape
    if h < f.min_size or w < f.min_size:
        raise SaliencyError(f"map {m.shape} too small for a {len(f.layers)}-layer extractor (need >= {f.min_size})")
    a = np.repeat(m[None, :, :], f.in_channels, axis=0)
    outputs, cache = [], []
    for layer in f.layers:
        z = kernels.conv2d_forward(np.ascontiguousarray(a), layer.weight, layer.bias)
        r = np.maximum(z, 0.0)
        out = _pool_forward(r) if layer.pool else r
        cache.append((a, z))
        outputs.append(out)
        a = out
    return FeaturePyramid(outputs, cache)


def _backward(pyr: FeaturePyramid, f: FeatureExtractor, grads: list[np.ndarray]) -> np.ndarray:
    """Gradient w.r.t. the input map given gradients w.r.t. every layer output."""
    g = np.zeros_like(pyr.layers[-1])
    for j in range(len(f.layers) - 1, -1, -1):
        layer = f.layers[j]
        a, z = pyr._cache[j]
        g = g + grads[j]
        gr = _pool_backward(g, z.shape) if layer.pool else g
        gz = np.ascontiguousarray(gr * (z > 0))
        g, _, _ = kernels.conv2d_backward(a, layer.weight, gz)
    return g.sum(axis=0)


def gram(act) -> np.ndarray:
    a = np.asarray(act, dtype=np.float64)
    c = a.shape[0]
    psi = a.reshape(c, -1)
    return psi @ psi.T / a.size


def df_loss(gt, pred, f: FeatureExtractor) -> LossResult:
    s = as_array(gt, "ground truth")
    p = as_array(pred, "prediction")
    check_same_shape(s, p)
    ps, pp = extract(s, f), extract(p, f)
    value = 0.0
    grads = []
    for a_s, a_p in zip(ps, pp):
        d = a_p - a_s
        value += float(np.sum(d * d)) / d.size
        grads.append(2.0 * d / d.size)
    return LossResult(value, _backward(pp, f, grads))


def gm_loss(gt, pred, f: FeatureExtractor) -> LossResult:
    s = as_array(gt, "ground truth")
    p = as_array(pred, "prediction")
    check_same_shape(s, p)
    ps, pp = extract(s, f), extract(p, f)
    value = 0.0
    grads = []
    for a_s, a_p in zip(ps, pp):
        d = gram(a_p) - gram(a_s)
        value += float(np.sum(d * d))
        c = a_p.shape[0]
        psi = a_p.reshape(c, -1)
        grads.append((4.0 * d @ psi / a_p.size).reshape(a_p.shape))
    return LossResult(value, _backward(pp, f, grads))


def df_value(pyr_gt: FeaturePyramid, pyr_pred: FeaturePyramid) -> float:
    """Deep-feature loss between two precomputed pyramids (no gradient)."""
    _check_pyramids(pyr_gt, pyr_pred)
    return float(sum(np.sum((b - a) ** 2) / a.size for a, b in zip(pyr_gt, pyr_pred)))


def gm_value(pyr_gt: FeaturePyramid, pyr_pred: FeaturePyramid) -> float:
    _check_pyramids(pyr_gt, pyr_pred)
    return float(sum(np.sum((gram(b) - gram(a)) ** 2) for a, b in zip(pyr_gt, pyr_pred)))


def _check_pyramids(a: FeaturePyramid, b: FeaturePyramid) -> None:
    if len(a) != len(b) or any(x.shape != y.shape for x, y in zip(a, b)):
        raise SaliencyError("pyramid shape mismatch")


def save_pyramid(path, pyr: FeaturePyramid) -> None:
    with open(path, "wb") as fh:
        fh.write(PYRAMID_MAGIC)
        fh.write(struct.pack("<I", len(pyr)))
        for a in pyr:
            fh.write(struct.pack("<3I", *a.shape))
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_pyramid(path) -> FeaturePyramid:
    data = Path(path).read_bytes()
    if data[:8] != PYRAMID_MAGIC:
        raise SaliencyError(f"{path}: not a SALPYR1 pyramid file")
    pos = 8
    if len(data) < pos + 4:
        raise SaliencyError(f"{path}: truncated header")
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    layers = []
    for _ in range(count):
        if len(data) < pos + 12:
            raise SaliencyError(f"{path}: truncated layer header")
        c, h, w = struct.unpack_from("<3I", data, pos)
        pos += 12
        nbytes = 8 * c * h * w
        if len(data) < pos + nbytes:
            raise SaliencyError(f"{path}: truncated layer data")
        a = np.frombuffer(data, dtype="<f8", count=c * h * w, offset=pos).astype(np.float64).reshape(c, h, w)
        pos += nbytes
        if not np.all(np.isfinite(a)):
            raise SaliencyError(f"{path}: non-finite activations")
        layers.append(a)
    if pos != len(data):
        raise SaliencyError(f"{path}: {len(data) - pos} trailing bytes")
    return FeaturePyramid(layers)
