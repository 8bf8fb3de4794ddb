"""Synthetic Gaussian-blob saliency data for the desk-scale experiments."""
from __future__ import annotations

import numpy as np

from .core import FixationSet
from .micronet import Sample


def gaussian_blobs(shape, centers, sigmas) -> np.ndarray:
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    out = np.zeros(shape)
    for (cx, cy), s in zip(centers, sigmas):
        out += np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * s * s))
    return out / out.max()


def sample_fixations(density: np.ndarray, count: int, rng: np.random.Generator) -> FixationSet:
    p = density.ravel() / density.sum()
    count = min(count, int(np.count_nonzero(p)))
    idx = rng.choice(p.size, size=count, replace=False, p=p)
    h, w = density.shape
    return FixationSet(tuple((int(i % w), int(i // w)) for i in sorted(idx)), (w, h))


def blob_sample(rng: np.random.Generator, shape=(16, 16), n_fix: int = 5, noise: float = 0.25) -> Sample:
    """One (noisy input, clean blob map, fixations) triple."""
    h, w = shape
    k = int(rng.integers(1, 3))
    centers = [(rng.uniform(0.25 * w, 0.75 * w), rng.uniform(0.25 * h, 0.75 * h)) for _ in range(k)]
    sigmas = rng.uniform(0.1, 0.2, size=k) * min(h, w)
    gt = gaussian_blobs(shape, centers, sigmas)
    image = np.clip(gt + noise * rng.standard_normal(shape), 0.0, 1.0)
    return Sample(image, gt, sample_fixations(gt, n_fix, rng))


def blob_dataset(n: int, seed: int = 1, shape=(16, 16), n_fix: int = 5, noise: float = 0.25) -> list[Sample]:
    rng = np.random.default_rng(seed)
    return [blob_sample(rng, shape, n_fix, noise) for _ in range(n)]
