"""Random and fixed problem instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..calculus import POLYDISC, REAL_CUBE, AnalyticFunction, OperatorTuple, random_polynomial
from ..linalg import adjoint
from ..perturbation import PathSpec
from ..rng import SplitMix64, haar_unitary, unit_disc_points
from .config import ConfigError, ExperimentConfig

SELFADJOINT_MODES = ("selfadjoint_shared_basis", "selfadjoint_coupled")


@dataclass(frozen=True, eq=False)
class Instance:
    mode: str
    path: PathSpec
    functions: tuple[AnalyticFunction, ...]
    seed: int

    @property
    def domain_kind(self) -> str:
        return self.functions[0].domain_kind if self.functions else POLYDISC


def counterexample_path() -> PathSpec:
    """``A = diag(1, 0)``, ``V = [[0, 1], [1, 0]]``, path ``(A + sV, A)``."""
    a = np.diag([1.0, 0.0]).astype(complex)
    v = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return PathSpec.from_mats([a, a], [a + v, a])


def counterexample_function() -> AnalyticFunction:
    """``x_1^3 x_2``."""
    return AnalyticFunction.monomial((3, 1), domain_kind=REAL_CUBE)


def shared_basis_path(rng: SplitMix64, n: int, d: int, selfadjoint: bool) -> PathSpec:
    """``A_i = Q D_i Q^*``, ``B_i = Q D'_i Q^*`` with one Haar unitary ``Q``."""
    q = haar_unitary(rng, d)

    def draw():
        diag = rng.uniforms(d, -1.0, 1.0) if selfadjoint else unit_disc_points(rng, d)
        return q @ np.diag(diag) @ adjoint(q)

    a = [draw() for _ in range(n)]
    b = [draw() for _ in range(n)]
    return PathSpec.from_mats(a, b)


def _hermitian_contraction(rng: SplitMix64, d: int) -> np.ndarray:
    w = haar_unitary(rng, d)
    return w @ np.diag(rng.uniforms(d, -1.0, 1.0)) @ adjoint(w)


def _disc(rng: SplitMix64, radius: float, selfadjoint: bool) -> complex:
    if selfadjoint:
        return radius * rng.uniforms(1, -1.0, 1.0)[0]
    return radius * unit_disc_points(rng, 1)[0]


def coupled_path(rng: SplitMix64, n: int, d: int, selfadjoint: bool) -> PathSpec:
    """Blocks where every coordinate is ``alpha Y(t) + beta(t)`` for one Hermitian path ``Y``.

    ``Y(t)`` interpolates two Hermitian contractions, so all coordinates
    commute and are normal along the whole path, while the spectral
    projections of ``X(t)`` do not commute with the increments.  The
    coefficients satisfy ``|alpha| + |beta| <= 1`` at both ends, which keeps
    every coordinate contractive.
    """
    sizes = [d] if d < 4 else [d // 2, d - d // 2]
    a = [np.zeros((d, d), complex) for _ in range(n)]
    b = [np.zeros((d, d), complex) for _ in range(n)]
    start = 0
    for size in sizes:
        y0 = _hermitian_contraction(rng, size)
        y1 = _hermitian_contraction(rng, size)
        eye = np.eye(size)
        blk = slice(start, start + size)
        for i in range(n):
            alpha = _disc(rng, 0.6, selfadjoint)
            room = 1.0 - abs(alpha)
            beta0 = _disc(rng, room, selfadjoint)
            beta1 = _disc(rng, room, selfadjoint)
            a[i][blk, blk] = alpha * y0 + beta0 * eye
            b[i][blk, blk] = alpha * y1 + beta1 * eye
        start += size
    q = haar_unitary(rng, d)
    return PathSpec.from_mats([q @ m @ adjoint(q) for m in a], [q @ m @ adjoint(q) for m in b])


def random_contraction(rng: SplitMix64, d: int) -> np.ndarray:
    """``U diag(s) W`` with Haar ``U, W`` and singular values uniform in [0, 1]."""
    u = haar_unitary(rng, d)
    w = haar_unitary(rng, d)
    return u @ np.diag(rng.uniforms(d)) @ w


def generate_instance(cfg: ExperimentConfig, seed: int, mode: str | None = None) -> Instance:
    mode = mode or cfg.mode
    rng = SplitMix64(seed)
    n, d = cfg.n, cfg.dim
    if mode == "counterexample":
        return Instance(mode, counterexample_path(), (counterexample_function(),), seed)
    if mode in ("normal_shared_basis", "selfadjoint_shared_basis"):
        path = shared_basis_path(rng, n, d, mode.startswith("selfadjoint"))
    elif mode in ("normal_coupled", "selfadjoint_coupled"):
        path = coupled_path(rng, n, d, mode.startswith("selfadjoint"))
    elif mode == "single_contraction":
        path = PathSpec.from_mats([random_contraction(rng, d)], [random_contraction(rng, d)])
    elif mode == "custom":
        path = PathSpec(OperatorTuple(tuple(cfg.A)), OperatorTuple(tuple(cfg.B)))
    else:
        raise ConfigError(f"mode {mode!r} does not describe a single instance")
    kind = REAL_CUBE if mode in SELFADJOINT_MODES else POLYDISC
    funcs = tuple(f for f in cfg.functions if f.arity == path.n)
    if not funcs:
        funcs = tuple(random_polynomial(rng, path.n, cfg.degree, domain_kind=kind) for _ in range(cfg.random_functions))
    return Instance(mode, path, funcs, seed)
