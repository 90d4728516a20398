"""Gauss-Legendre rules on [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _gauss_legendre01(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    nodes = (x + 1.0) / 2.0
    weights = w / 2.0
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_legendre01(m: int) -> tuple[np.ndarray, np.ndarray]:
    """``m``-point rule on [0, 1]; exact for polynomials of degree <= 2m - 1."""
    if m < 1:
        raise ValueError("need at least one node")
    return _gauss_legendre01(int(m))


def exact_nodes(degree: int) -> int:
    """Default node count for integrands coming from a degree-``degree`` polynomial.

    The integrands in ``t`` have degree at most ``degree - 1`` even with the
    ``(1 - t)`` weight, so ``ceil((degree + 2) / 2)`` nodes always suffice.
    """
    return max(1, math.ceil((max(degree, 0) + 2) / 2))


def minimal_nodes(degree: int) -> int:
    return max(1, math.ceil((max(degree, 0) + 1) / 2))


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre on [0, 1]; ``nodes == 0`` means choose an exact count."""

    nodes: int = 0

    def __post_init__(self):
        if self.nodes < 0:
            raise ValueError("nodes must be >= 0")

    def resolve(self, degree: int) -> int:
        return self.nodes if self.nodes > 0 else exact_nodes(degree)

    def rule(self, degree: int) -> tuple[np.ndarray, np.ndarray]:
        return gauss_legendre01(self.resolve(degree))

    @classmethod
    def from_config(cls, obj) -> "QuadratureSpec":
        if obj is None:
            return cls()
        return cls(nodes=int(obj.get("nodes", 0)))
