"""Map and fixation containers shared by the losses and metrics.

Maps are plain 2-D ``float64`` numpy arrays of shape ``(height, width)``,
row-major.  Fixations use the ``(x=column, y=row)`` convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS_FLOOR = 1e-8
EPS_STD = 1e-9


class SaliencyError(ValueError):
    """Raised on invalid maps, fixations or loss inputs."""


class DegenerateInput(SaliencyError):
    """Raised when a score is undefined, e.g. a constant prediction."""


def as_map(values, *, unit_range: bool = False, name: str = "map") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.size == 0:
        raise SaliencyError(f"{name}: expected a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SaliencyError(f"{name}: non-finite values")
    if np.any(arr < 0):
        raise SaliencyError(f"{name}: negative values")
    if unit_range and np.any(arr > 1):
        raise SaliencyError(f"{name}: values above 1 in unit-range mode")
    return arr


def as_array(values, name: str = "map") -> np.ndarray:
    """Lenient conversion for loss inputs: 2-D and finite, sign unchecked."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.size == 0:
        raise SaliencyError(f"{name}: expected a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SaliencyError(f"{name}: non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise SaliencyError(f"dimension mismatch: {a.shape} vs {b.shape}")


@dataclass(frozen=True)
class FixationSet:
    """Distinct fixated pixels inside a ``width`` x ``height`` frame."""

    points: tuple[tuple[int, int], ...]
    frame: tuple[int, int]
    _rows: np.ndarray = field(init=False, repr=False, compare=False)
    _cols: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        width, height = self.frame
        if width < 1 or height < 1:
            raise SaliencyError(f"invalid frame {self.frame}")
        seen = set()
        clean = []
        for x, y in self.points:
            x, y = int(x), int(y)
            if not (0 <= x < width and 0 <= y < height):
                raise SaliencyError(f"fixation ({x}, {y}) outside {width}x{height} frame")
            if (x, y) not in seen:
                seen.add((x, y))
                clean.append((x, y))
        object.__setattr__(self, "points", tuple(clean))
        object.__setattr__(self, "_cols", np.array([p[0] for p in clean], dtype=np.intp))
        object.__setattr__(self, "_rows", np.array([p[1] for p in clean], dtype=np.intp))

    @classmethod
    def from_map(cls, binary) -> "FixationSet":
        arr = np.asarray(binary)
        rows, cols = np.nonzero(arr)
        return cls(tuple(zip(cols.tolist(), rows.tolist())), (arr.shape[1], arr.shape[0]))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.frame[1], self.frame[0])

    def __len__(self) -> int:
        return len(self.points)

    def flat_indices(self) -> np.ndarray:
        return self._rows * self.frame[0] + self._cols

    def index(self) -> tuple[np.ndarray, np.ndarray]:
        """Row and column index arrays for fancy indexing."""
        return self._rows, self._cols

    def check_frame(self, shape: tuple[int, ...]) -> None:
        if tuple(shape) != self.shape:
            raise SaliencyError(f"fixation frame {self.frame} does not match map shape {shape}")


@dataclass(frozen=True)
class MapStats:
    mean: float
    std: float
    min: float
    max: float
    sum: float


def normalize_unit(values) -> np.ndarray:
    m = as_map(values)
    lo, hi = m.min(), m.max()
    if hi == lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def normalize_distribution(values, eps: float = EPS_FLOOR) -> np.ndarray:
    m = as_map(values) + eps
    return m / m.sum()


def distribution_backward(values, grad: np.ndarray, eps: float = EPS_FLOOR) -> np.ndarray:
    """Chain a gradient w.r.t. ``normalize_distribution(values)`` back to ``values``."""
    m = np.asarray(values, dtype=np.float64) + eps
    z = m.sum()
    p = m / z
    return (grad - np.sum(grad * p)) / z


def stats(values) -> MapStats:
    m = as_map(values)
    mean = float(m.mean())
    return MapStats(
        mean=mean,
        std=float(np.sqrt(np.mean((m - mean) ** 2))),
        min=float(m.min()),
        max=float(m.max()),
        sum=float(m.sum()),
    )


def fixation_map(fix: FixationSet) -> np.ndarray:
    out = np.zeros(fix.shape)
    rows, cols = fix.index()
    out[rows, cols] = 1.0
    return out
