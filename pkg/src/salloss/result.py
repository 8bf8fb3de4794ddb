from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LossResult:
    """A scalar loss (or score) and its gradient w.r.t. the prediction."""

    value: float
    gradient: np.ndarray

    def __add__(self, other: "LossResult") -> "LossResult":
        return LossResult(self.value + other.value, self.gradient + other.gradient)

    def scaled(self, c: float) -> "LossResult":
        return LossResult(c * self.value, c * self.gradient)
