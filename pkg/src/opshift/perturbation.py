"""Derivatives of operator functions along linear paths ``X(s) = A + sV``."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .calculus import AnalyticFunction, CalculusError, OperatorTuple, eval_ordered, partial_derivative
from .linalg import (
    as_matrix,
    certified_norm,
    commutator,
    frobenius_norm,
    identity,
    matrix_power_cache,
    trace,
)
from .quadrature import QuadratureSpec, gauss_legendre01, minimal_nodes
from .rng import SplitMix64


class PerturbationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PathSpec:
    """Linear path between two operator tuples of the same shape."""

    A: OperatorTuple
    B: OperatorTuple

    def __post_init__(self):
        if self.A.n != self.B.n or self.A.dim != self.B.dim:
            raise PerturbationError("endpoint tuples differ in arity or dimension")

    @classmethod
    def from_mats(cls, a: Sequence, b: Sequence, tol: float = 1e-10) -> "PathSpec":
        return cls(OperatorTuple(tuple(a), tol), OperatorTuple(tuple(b), tol))

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def dim(self) -> int:
        return self.A.dim

    @cached_property
    def V(self) -> tuple[np.ndarray, ...]:
        return tuple(as_matrix(b - a, copy=False) for a, b in zip(self.A.mats, self.B.mats))

    def X(self, t: float) -> OperatorTuple:
        return OperatorTuple(tuple(a + t * v for a, v in zip(self.A.mats, self.V)), self.A.tol)

    @cached_property
    def commutativity(self) -> "PathCommutativity":
        return path_commutativity(self.A, self.B)

    @property
    def path_commuting(self) -> bool:
        c = self.commutativity
        return c.equiv_i and c.equiv_ii

    @property
    def endpoints_admissible(self) -> bool:
        return all(x.commuting and x.contractive for x in (self.A, self.B))

    def coordinate(self, j: int) -> "PathSpec":
        """The single-operator path ``A_j -> B_j``."""
        return PathSpec(OperatorTuple((self.A[j],), self.A.tol), OperatorTuple((self.B[j],), self.A.tol))


# ---------------------------------------------------------------------------
# monomials


def monomial_difference(h0: np.ndarray, v: np.ndarray, p: int) -> np.ndarray:
    """``sum_{p0+p1=p-1} (H0+V)^{p0} V H0^{p1}``, which equals ``(H0+V)^p - H0^p``."""
    if p < 1:
        raise PerturbationError("power must be positive")
    h1 = h0 + v
    pw0 = matrix_power_cache(h0, p - 1)
    pw1 = matrix_power_cache(h1, p - 1)
    return sum(pw1[p0] @ v @ pw0[p - 1 - p0] for p0 in range(p))


class _MonomialCache:
    """Powers of ``X`` and first/second path derivatives of ``X^p`` at one point."""

    def __init__(self, x: np.ndarray, v: np.ndarray, max_power: int):
        self.x = x
        self.v = v
        self.pw = matrix_power_cache(x, max(max_power, 0))
        self._d1: dict[int, np.ndarray] = {}
        self._d2: dict[int, np.ndarray] = {}

    def d1(self, p: int) -> np.ndarray:
        if p not in self._d1:
            if p == 0:
                self._d1[p] = np.zeros_like(self.x)
            else:
                self._d1[p] = sum(self.pw[p0] @ self.v @ self.pw[p - 1 - p0] for p0 in range(p))
        return self._d1[p]

    def d2(self, p: int) -> np.ndarray:
        if p not in self._d2:
            if p < 2:
                self._d2[p] = np.zeros_like(self.x)
            else:
                # 2 sum_{p0+p1+p2=p-2} X^p0 V X^p1 V X^p2, inner sum is d1(p-1-p0)
                self._d2[p] = 2 * sum(self.pw[p0] @ self.v @ self.d1(p - 1 - p0) for p0 in range(p - 1))
        return self._d2[p]


def monomial_derivative(h0: np.ndarray, v: np.ndarray, p: int, t: float, order: int = 1) -> np.ndarray:
    """``d^order/ds^order (H0 + sV)^p`` at ``s = t`` via the monomial sums.

    For ``order = 2`` and ``p < 2`` the derivative is identically zero.
    """
    if order not in (1, 2):
        raise PerturbationError("order must be 1 or 2")
    cache = _MonomialCache(h0 + t * v, v, p)
    return cache.d1(p) if order == 1 else cache.d2(p)


# ---------------------------------------------------------------------------
# Gateaux derivatives of multivariate operator functions


@dataclass(frozen=True, eq=False)
class DerivativeReport:
    order: int
    t: float
    value: np.ndarray
    per_term: dict = field(default_factory=dict)

    def reassemble(self) -> np.ndarray:
        if self.order == 1:
            return sum(self.per_term.values(), np.zeros_like(self.value))
        out = np.zeros_like(self.value)
        for (i, j), m in self.per_term.items():
            out = out + (m if i == j else 2 * m)
        return out


def _caches(f: AnalyticFunction, xs: Sequence[np.ndarray], vs: Sequence[np.ndarray]) -> list[_MonomialCache]:
    return [_MonomialCache(x, v, f.partial_degree(j)) for j, (x, v) in enumerate(zip(xs, vs))]


def _ordered(caches, k, lo, hi, eye):
    """``prod_{lo <= m < hi} X_m^{k_m}``."""
    out = eye
    for m in range(lo, hi):
        if k[m]:
            out = out @ caches[m].pw[k[m]]
    return out


def _check_arity(f: AnalyticFunction, path: PathSpec) -> None:
    if f.arity != path.n:
        raise PerturbationError(f"arity mismatch: function has {f.arity}, path has {path.n}")


def first_derivative(f: AnalyticFunction, path: PathSpec, t: float) -> DerivativeReport:
    """``d/ds f(X(s))`` at ``s = t`` as the sum over coordinates ``j`` of

    ``D^j = sum_k c_k T_{<j}(X(t)) (d/ds X_j(s)^{k_j}) T_{>j}(X(t))``.
    """
    _check_arity(f, path)
    xs = path.X(t).mats
    caches = _caches(f, xs, path.V)
    eye = identity(path.dim)
    n = path.n
    per = {j: np.zeros_like(eye) for j in range(n)}
    for k, c in f.coeffs.items():
        for j in range(n):
            if k[j] == 0:
                continue
            per[j] = per[j] + c * (_ordered(caches, k, 0, j, eye) @ caches[j].d1(k[j]) @ _ordered(caches, k, j + 1, n, eye))
    return DerivativeReport(1, float(t), sum(per.values(), np.zeros_like(eye)), per)


def second_derivative(f: AnalyticFunction, path: PathSpec, t: float) -> DerivativeReport:
    """``d^2/ds^2 f(X(s))`` at ``s = t``: ``2 sum_{i<j} D^{ij} + sum_j D^{jj}``."""
    _check_arity(f, path)
    xs = path.X(t).mats
    caches = _caches(f, xs, path.V)
    eye = identity(path.dim)
    n = path.n
    per = {(i, j): np.zeros_like(eye) for i in range(n) for j in range(i, n)}
    for k, c in f.coeffs.items():
        for j in range(n):
            if k[j] >= 2:
                per[(j, j)] = per[(j, j)] + c * (
                    _ordered(caches, k, 0, j, eye) @ caches[j].d2(k[j]) @ _ordered(caches, k, j + 1, n, eye)
                )
            if k[j] == 0:
                continue
            for i in range(j):
                if k[i] == 0:
                    continue
                per[(i, j)] = per[(i, j)] + c * (
                    _ordered(caches, k, 0, i, eye)
                    @ caches[i].d1(k[i])
                    @ _ordered(caches, k, i + 1, j, eye)
                    @ caches[j].d1(k[j])
                    @ _ordered(caches, k, j + 1, n, eye)
                )
    value = np.zeros_like(eye)
    for (i, j), m in per.items():
        value = value + (m if i == j else 2 * m)
    return DerivativeReport(2, float(t), value, per)


def path_value(f: AnalyticFunction, path: PathSpec, s: float) -> np.ndarray:
    """``f(X(s))`` with factors in coordinate order."""
    return eval_ordered(f, path.X(s).mats)


def naive_second_order_trace(f: AnalyticFunction, path: PathSpec, t: float) -> complex:
    """``sum_j Tr( d/ds (df/dz_j)(X(s)) |_{s=t} V_j )``.

    For one variable this equals the trace of the second derivative; for
    several variables it generally does not.
    """
    total = 0j
    for j in range(path.n):
        dj = partial_derivative(f, j)
        total += trace(first_derivative(dj, path, t).value @ path.V[j])
    return total


# ---------------------------------------------------------------------------
# integral identities in t


@dataclass(frozen=True)
class TraceIdentity:
    lhs: complex
    rhs: complex
    nodes: int = 0
    exact: bool = True

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def _nodes_for(f: AnalyticFunction, quad: QuadratureSpec) -> tuple[np.ndarray, np.ndarray, bool]:
    m = quad.resolve(f.degree)
    x, w = gauss_legendre01(m)
    return x, w, m >= minimal_nodes(f.degree)


def ftc_trace(f: AnalyticFunction, path: PathSpec, quad: QuadratureSpec = QuadratureSpec()) -> TraceIdentity:
    """``Tr(f(B) - f(A))`` against the quadrature of ``t -> Tr(d/ds f(X(s))|_t)``.

    ``exact`` is False when the node count is below what polynomial
    exactness needs; the result is still returned.
    """
    _check_arity(f, path)
    lhs = trace(eval_ordered(f, path.B.mats) - eval_ordered(f, path.A.mats))
    x, w, exact = _nodes_for(f, quad)
    rhs = sum(wq * trace(first_derivative(f, path, tq).value) for tq, wq in zip(x, w))
    return TraceIdentity(lhs, complex(rhs), len(x), exact)


def psi(f: AnalyticFunction, path: PathSpec, t: float) -> np.ndarray:
    """``d/ds f(X(s))|_t - d/ds f(X(s))|_0``."""
    return first_derivative(f, path, t).value - first_derivative(f, path, 0.0).value


def taylor_remainder_trace(f: AnalyticFunction, path: PathSpec, quad: QuadratureSpec = QuadratureSpec()) -> TraceIdentity:
    """``Tr(f(B) - f(A) - d/ds f(X(s))|_0)`` against ``int_0^1 (1-t) Tr(d^2/ds^2 f(X(s))|_t) dt``."""
    _check_arity(f, path)
    lhs = trace(
        eval_ordered(f, path.B.mats) - eval_ordered(f, path.A.mats) - first_derivative(f, path, 0.0).value
    )
    x, w, exact = _nodes_for(f, quad)
    rhs = sum(wq * (1 - tq) * trace(second_derivative(f, path, tq).value) for tq, wq in zip(x, w))
    return TraceIdentity(lhs, complex(rhs), len(x), exact)


# ---------------------------------------------------------------------------
# commutativity along the path


@dataclass(frozen=True)
class PathCommutativity:
    equiv_i: bool
    equiv_ii: bool
    max_residual: float
    identity_residual: float

    @property
    def agree(self) -> bool:
        return self.equiv_i == self.equiv_ii


def _pair_tol(tol: float, a: np.ndarray, b: np.ndarray) -> float:
    return tol * max(1.0, frobenius_norm(a) * frobenius_norm(b))


def path_commutator(a: OperatorTuple, b: OperatorTuple, i: int, j: int, t: float) -> np.ndarray:
    """``[A_i + t(B_i - A_i), A_j + t(B_j - A_j)]``."""
    xi = a[i] + t * (b[i] - a[i])
    xj = a[j] + t * (b[j] - a[j])
    return commutator(xi, xj)


def path_commutator_expansion(a: OperatorTuple, b: OperatorTuple, i: int, j: int, t: float) -> np.ndarray:
    """Four-term expansion of the path commutator as a quadratic in ``t``."""
    return (
        (1 - t) ** 2 * commutator(a[i], a[j])
        + t**2 * commutator(b[i], b[j])
        + t * (1 - t) * commutator(a[i], b[j])
        + t * (1 - t) * commutator(b[i], a[j])
    )


def path_commutativity(a: OperatorTuple, b: OperatorTuple, t_grid: int = 5, *, seed: int = 0, tol: float = 1e-10) -> PathCommutativity:
    """Compare the two characterizations of a commuting linear path.

    ``equiv_i``: every grid point ``X(t)`` is a commuting tuple of
    contractions.  ``equiv_ii``: both endpoints are commuting tuples of
    contractions and the increments ``V_j`` pairwise commute.  Since the path
    commutator is quadratic in ``t``, a grid of at least three points decides
    ``equiv_i`` exactly.
    """
    if a.n != b.n or a.dim != b.dim:
        raise PerturbationError("endpoint tuples differ in arity or dimension")
    if t_grid < 3:
        raise PerturbationError("t_grid must be at least 3")
    n = a.n
    worst = 0.0
    ok_i = True
    for t in np.linspace(0.0, 1.0, t_grid):
        xt = OperatorTuple(tuple(a[m] + t * (b[m] - a[m]) for m in range(n)), tol)
        for i in range(n):
            for j in range(i + 1, n):
                h = commutator(xt[i], xt[j])
                thr = _pair_tol(tol, xt[i], xt[j])
                r = certified_norm(h, thr)
                worst = max(worst, r)
                ok_i &= r <= thr
        ok_i &= xt.contractive
    ok_ii = a.commuting and a.contractive and b.commuting and b.contractive
    for i in range(n):
        for j in range(i + 1, n):
            vi, vj = b[i] - a[i], b[j] - a[j]
            thr = _pair_tol(tol, vi, vj)
            ok_ii &= certified_norm(commutator(vi, vj), thr) <= thr
    rng = SplitMix64(seed)
    ident = 0.0
    for _ in range(3):
        t = rng.uniform()
        for i in range(n):
            for j in range(i + 1, n):
                diff = path_commutator(a, b, i, j, t) - path_commutator_expansion(a, b, i, j, t)
                ident = max(ident, frobenius_norm(diff))
    return PathCommutativity(bool(ok_i), bool(ok_ii), worst, ident)


def instance_scale(f: AnalyticFunction, path: PathSpec) -> float:
    """Magnitude used to turn relative tolerances into absolute ones.

    ``d * max(1, sum |c_k| (1 + |k|)^2) * max(1, max_j ||V_j||_F)^2``.
    """
    csum = sum(abs(c) * (1 + sum(k)) ** 2 for k, c in f.coeffs.items())
    vmax = max((frobenius_norm(v) for v in path.V), default=0.0)
    return path.dim * max(1.0, csum) * max(1.0, vmax) ** 2
