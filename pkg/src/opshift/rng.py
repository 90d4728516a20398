"""Portable seedable random numbers (SplitMix64).

The generator is fully specified so that instances can be reproduced bit for
bit in any language:

* state update: ``state = (state + 0x9E3779B97F4A7C15) mod 2**64``
* output mix: ``z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z ^= z >> 31`` (all mod 2**64)
* uniform double in [0, 1): ``(z >> 11) * 2**-53``
* standard normals: Box-Muller on two consecutive uniforms ``u1, u2``,
  ``r = sqrt(-2 log(1 - u1))``, yielding ``r cos(2 pi u2)`` then ``r sin(2 pi u2)``
* complex normal: real part then imaginary part, each N(0, 1/2)
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int) -> None:
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniforms(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return np.array([low + (high - low) * self.uniform() for _ in range(n)])

    def normals(self, n: int) -> np.ndarray:
        out = []
        while len(out) < n:
            u1, u2 = self.uniform(), self.uniform()
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            out.append(r * math.cos(2.0 * math.pi * u2))
            out.append(r * math.sin(2.0 * math.pi * u2))
        return np.array(out[:n])

    def complex_normals(self, shape) -> np.ndarray:
        size = int(np.prod(shape))
        z = self.normals(2 * size).reshape(size, 2) / math.sqrt(2.0)
        return (z[:, 0] + 1j * z[:, 1]).reshape(shape)

    def spawn(self) -> "SplitMix64":
        return SplitMix64(self.next_u64())

    def sub_seeds(self, n: int) -> list[int]:
        return [self.next_u64() for _ in range(n)]


def haar_unitary(rng: SplitMix64, d: int) -> np.ndarray:
    """Unitary from modified Gram-Schmidt on a complex Gaussian matrix."""
    g = rng.complex_normals((d, d))
    q = np.zeros((d, d), dtype=np.complex128)
    for j in range(d):
        v = g[:, j].copy()
        for i in range(j):
            v = v - (q[:, i].conj() @ v) * q[:, i]
        q[:, j] = v / np.linalg.norm(v)
    return q


def unit_disc_points(rng: SplitMix64, n: int) -> np.ndarray:
    """Points uniform in the closed unit disc (radius sqrt(u), angle 2 pi u')."""
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        r = math.sqrt(rng.uniform())
        a = 2.0 * math.pi * rng.uniform()
        out[i] = r * complex(math.cos(a), math.sin(a))
    return out
