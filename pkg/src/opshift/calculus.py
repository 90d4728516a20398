"""Multivariate polynomial functional calculus.

An :class:`AnalyticFunction` is a finitely supported power series
``sum_k c_k z_1^{k_1} ... z_n^{k_n}`` together with the radius ``1 + eps`` of
the polydisc (or real cube) on which it is holomorphic.  Transcendental
functions enter as Taylor truncations whose remainder bound travels in
``tail_bound``.

Coordinates are 0-based throughout the Python API.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import as_matrix, certified_norm, commutator, identity, op_norm
from .quadrature import gauss_legendre01

POLYDISC = "polydisc"
REAL_CUBE = "real_cube"
DOMAIN_KINDS = (POLYDISC, REAL_CUBE)


class CalculusError(ValueError):
    pass


def multi_indices(arity: int, degree: int) -> list[tuple[int, ...]]:
    """All multi-indices of total degree <= ``degree`` in graded lexicographic order."""
    out = [k for k in itertools.product(range(degree + 1), repeat=arity) if sum(k) <= degree]
    out.sort(key=lambda k: (sum(k), tuple(-x for x in k)))
    return out


@dataclass(frozen=True, eq=False)
class AnalyticFunction:
    arity: int
    coeffs: Mapping[tuple[int, ...], complex]
    radius: float = 1.1
    domain_kind: str = POLYDISC
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.arity < 1:
            raise CalculusError("arity must be >= 1")
        if not self.radius > 1.0:
            raise CalculusError("radius must exceed 1")
        if self.domain_kind not in DOMAIN_KINDS:
            raise CalculusError(f"unknown domain kind {self.domain_kind!r}")
        clean: dict[tuple[int, ...], complex] = {}
        for k, c in dict(self.coeffs).items():
            k = tuple(int(x) for x in k)
            if len(k) != self.arity or min(k) < 0:
                raise CalculusError(f"bad multi-index {k} for arity {self.arity}")
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise CalculusError("non-finite coefficient")
            if c != 0:
                clean[k] = clean.get(k, 0) + c
        object.__setattr__(self, "coeffs", clean)

    # -- construction -----------------------------------------------------

    def _like(self, coeffs, tail_bound=None) -> "AnalyticFunction":
        return AnalyticFunction(
            self.arity,
            coeffs,
            radius=self.radius,
            domain_kind=self.domain_kind,
            tail_bound=self.tail_bound if tail_bound is None else tail_bound,
        )

    @classmethod
    def constant(cls, arity: int, c: complex = 1.0, **kw) -> "AnalyticFunction":
        return cls(arity, {(0,) * arity: c}, **kw)

    @classmethod
    def coordinate(cls, arity: int, j: int, **kw) -> "AnalyticFunction":
        k = [0] * arity
        k[j] = 1
        return cls(arity, {tuple(k): 1.0}, **kw)

    @classmethod
    def monomial(cls, k: Sequence[int], c: complex = 1.0, **kw) -> "AnalyticFunction":
        return cls(len(k), {tuple(k): c}, **kw)

    @classmethod
    def univariate(cls, coeffs: Sequence[complex], **kw) -> "AnalyticFunction":
        """From ascending coefficients ``c_0, c_1, ...``."""
        return cls(1, {(m,): c for m, c in enumerate(coeffs)}, **kw)

    @classmethod
    def from_literal(cls, obj) -> "AnalyticFunction":
        """Parse ``[{"k": [...], "re": x, "im": y}, ...]`` or an object with
        ``coeffs`` plus top-level ``domain_kind``/``radius``/``tail_bound``."""
        if isinstance(obj, Mapping):
            terms = obj.get("coeffs")
            kw = {
                "radius": float(obj.get("radius", 1.1)),
                "domain_kind": obj.get("domain_kind", POLYDISC),
                "tail_bound": float(obj.get("tail_bound", 0.0)),
            }
        else:
            terms, kw = obj, {}
        if not terms:
            raise CalculusError("function literal has no terms")
        try:
            coeffs = {}
            for t in terms:
                k = tuple(int(x) for x in t["k"])
                coeffs[k] = coeffs.get(k, 0) + complex(float(t.get("re", 0.0)), float(t.get("im", 0.0)))
            arity = len(next(iter(coeffs)))
        except (KeyError, TypeError, ValueError) as exc:
            raise CalculusError(f"bad function literal: {exc}") from exc
        return cls(arity, coeffs, **kw)

    def to_literal(self) -> dict:
        return {
            "domain_kind": self.domain_kind,
            "radius": self.radius,
            "tail_bound": self.tail_bound,
            "coeffs": [
                {"k": list(k), "re": c.real, "im": c.imag}
                for k, c in sorted(self.coeffs.items(), key=lambda kc: (sum(kc[0]), kc[0]))
            ],
        }

    # -- structure --------------------------------------------------------

    @cached_property
    def degree(self) -> int:
        return max((sum(k) for k in self.coeffs), default=0)

    def partial_degree(self, j: int) -> int:
        return max((k[j] for k in self.coeffs), default=0)

    @cached_property
    def exponents(self) -> np.ndarray:
        if not self.coeffs:
            return np.zeros((0, self.arity), dtype=int)
        return np.array(list(self.coeffs.keys()), dtype=int)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array(list(self.coeffs.values()), dtype=np.complex128)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def growth_certificate(self) -> float:
        """``sum |c_k| (1 + eps)^{|k|}`` plus the truncation tail."""
        return float(sum(abs(c) * self.radius ** sum(k) for k, c in self.coeffs.items())) + self.tail_bound

    @property
    def lipschitz_l1(self) -> float:
        """``sum |c_k| |k|``: Lipschitz constant in the l1 metric on the closed polydisc."""
        return float(sum(abs(c) * sum(k) for k, c in self.coeffs.items()))

    # -- scalar evaluation ------------------------------------------------

    def __call__(self, z) -> np.ndarray | complex:
        z = np.asarray(z, dtype=np.complex128)
        scalar = z.ndim == 1
        pts = z.reshape(-1, self.arity)
        if self.is_zero:
            out = np.zeros(pts.shape[0], dtype=np.complex128)
        else:
            e = self.exponents
            out = np.zeros(pts.shape[0], dtype=np.complex128)
            deg = int(e.max())
            # power tables per coordinate: (points, degree + 1)
            pw = [pts[:, j : j + 1] ** np.arange(deg + 1) for j in range(self.arity)]
            for (k, c) in zip(e, self.values):
                term = np.full(pts.shape[0], c, dtype=np.complex128)
                for j in range(self.arity):
                    if k[j]:
                        term = term * pw[j][:, k[j]]
                out += term
        if scalar:
            return complex(out[0])
        return out.reshape(z.shape[:-1])

    def slice_coeffs(self, j: int, fixed: Sequence[complex]) -> np.ndarray:
        """Ascending coefficients of ``lambda -> f(fixed with slot j replaced by lambda)``."""
        fixed = np.asarray(fixed, dtype=np.complex128)
        out = np.zeros(self.partial_degree(j) + 1, dtype=np.complex128)
        for k, c in self.coeffs.items():
            w = c
            for i, ki in enumerate(k):
                if i != j and ki:
                    w = w * fixed[i] ** ki
            out[k[j]] += w
        return out

    # -- algebra ----------------------------------------------------------

    def _check_compatible(self, other: "AnalyticFunction") -> None:
        if other.arity != self.arity:
            raise CalculusError("arity mismatch")

    def __add__(self, other):
        if isinstance(other, AnalyticFunction):
            self._check_compatible(other)
            c = dict(self.coeffs)
            for k, v in other.coeffs.items():
                c[k] = c.get(k, 0) + v
            return self._like(c, self.tail_bound + other.tail_bound)
        return self + AnalyticFunction.constant(self.arity, other)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, AnalyticFunction):
            self._check_compatible(other)
            c: dict[tuple[int, ...], complex] = {}
            for k1, a in self.coeffs.items():
                for k2, b in other.coeffs.items():
                    k = tuple(x + y for x, y in zip(k1, k2))
                    c[k] = c.get(k, 0) + a * b
            return self._like(c, 0.0 if not (self.tail_bound or other.tail_bound) else math.inf)
        s = complex(other)
        return self._like({k: s * c for k, c in self.coeffs.items()}, abs(s) * self.tail_bound)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"AnalyticFunction(arity={self.arity}, degree={self.degree}, terms={len(self.coeffs)}, {self.domain_kind})"


def random_polynomial(rng, arity: int, degree: int, *, domain_kind: str = POLYDISC, real: bool = False) -> AnalyticFunction:
    """Dense random polynomial of total degree ``degree`` with ``sum |c_k| = 1``."""
    ks = multi_indices(arity, degree)
    if real:
        vals = rng.normals(len(ks)).astype(np.complex128)
    else:
        vals = rng.complex_normals((len(ks),))
    vals = vals / np.sum(np.abs(vals))
    return AnalyticFunction(arity, dict(zip(ks, vals)), domain_kind=domain_kind)


def exp_truncated(order: int, *, radius: float = 1.1, scale: complex = 1.0) -> AnalyticFunction:
    """Taylor truncation of ``exp(scale * z)`` with a certified tail on the disc of ``radius``."""
    r = abs(scale) * radius
    coeffs = {(m,): scale**m / math.factorial(m) for m in range(order + 1)}
    first = r ** (order + 1) / math.factorial(order + 1)
    ratio = r / (order + 2)
    tail = first / (1.0 - ratio) if ratio < 1 else math.inf
    return AnalyticFunction(1, coeffs, radius=radius, tail_bound=tail)


def partial_derivative(f: AnalyticFunction, j: int, times: int = 1) -> AnalyticFunction:
    """Termwise derivative in coordinate ``j`` (applied ``times`` times).

    The truncation tail of a differentiated series is not known, so a nonzero
    ``tail_bound`` becomes ``inf``.
    """
    if not 0 <= j < f.arity:
        raise CalculusError(f"coordinate {j} out of range for arity {f.arity}")
    c = dict(f.coeffs)
    for _ in range(times):
        nxt = {}
        for k, v in c.items():
            if k[j] > 0:
                kk = list(k)
                kk[j] -= 1
                nxt[tuple(kk)] = nxt.get(tuple(kk), 0) + v * k[j]
        c = nxt
    return f._like(c, math.inf if f.tail_bound else 0.0)


def mixed_partial(f: AnalyticFunction, coords: Iterable[int]) -> AnalyticFunction:
    g = f
    for j in coords:
        g = partial_derivative(g, j)
    return g


# ---------------------------------------------------------------------------
# sup norms on the torus / cube


@dataclass(frozen=True)
class SupEstimate:
    lower: float
    pad: float

    @property
    def upper(self) -> float:
        return self.lower + self.pad


def _grid_axis(domain_kind: str, g: int) -> tuple[np.ndarray, float]:
    if domain_kind == POLYDISC:
        ang = 2.0 * np.pi * np.arange(g) / g
        return np.exp(1j * ang), np.pi / g
    return np.linspace(-1.0, 1.0, g).astype(np.complex128), 1.0 / (g - 1)


def grid_values(f: AnalyticFunction, grid_per_dim: int) -> np.ndarray:
    """``f`` on the tensor grid of ``T^n`` or ``[-1, 1]^n``, shape ``(g,) * n``."""
    axis, _ = _grid_axis(f.domain_kind, grid_per_dim)
    n = f.arity
    deg = max(f.degree, 0)
    coeff = np.zeros((deg + 1,) * n, dtype=np.complex128)
    for k, c in f.coeffs.items():
        coeff[k] += c
    powers = axis[:, None] ** np.arange(deg + 1)[None, :]  # (g, deg+1)
    out = coeff
    # contract one coordinate at a time; the contracted axis moves to the end
    for _ in range(n):
        out = np.tensordot(out, powers, axes=([0], [1]))
    return out


def sup_norm_estimate(f: AnalyticFunction, grid_per_dim: int = 256) -> SupEstimate:
    """Grid maximum of ``|f|`` on ``T^n`` (polydisc) or ``[-1, 1]^n`` (real cube).

    ``lower`` is attained by ``f`` and so bounds the true sup from below;
    ``lower + pad`` is a certified upper bound, where ``pad`` combines the
    grid spacing with the l1 Lipschitz constant ``sum |c_k| |k|`` and the
    truncation tail.
    """
    if grid_per_dim < 8:
        raise CalculusError("grid_per_dim must be >= 8")
    if f.is_zero:
        return SupEstimate(0.0, f.tail_bound)
    vals = grid_values(f, grid_per_dim)
    _, h = _grid_axis(f.domain_kind, grid_per_dim)
    return SupEstimate(float(np.max(np.abs(vals))), f.lipschitz_l1 * h + f.tail_bound)


# ---------------------------------------------------------------------------
# operator tuples and the functional calculus


@dataclass(frozen=True, eq=False)
class OperatorTuple:
    """Tuple of same-size square matrices with lazily certified structure flags.

    A flag is certified when the matching residual is at most
    ``tol * max(1, scale)`` with ``scale`` the product of the operator norms
    involved.  Residuals are operator norms, or Frobenius upper bounds when
    those are already below the threshold.
    """

    mats: tuple
    tol: float = 1e-10

    def __post_init__(self):
        mats = tuple(as_matrix(m) for m in self.mats)
        if not mats:
            raise CalculusError("empty operator tuple")
        d = mats[0].shape[0]
        if any(m.shape[0] != d for m in mats):
            raise CalculusError("operators in a tuple must share one dimension")
        object.__setattr__(self, "mats", mats)

    @property
    def n(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return self.mats[0].shape[0]

    def __getitem__(self, j: int) -> np.ndarray:
        return self.mats[j]

    def __iter__(self):
        return iter(self.mats)

    @cached_property
    def norms(self) -> tuple[float, ...]:
        return tuple(op_norm(m) for m in self.mats)

    @cached_property
    def _commuting(self) -> tuple[bool, float]:
        ok, worst = True, 0.0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                thr = self.tol * max(1.0, self.norms[i] * self.norms[j])
                r = certified_norm(commutator(self.mats[i], self.mats[j]), thr)
                ok &= r <= thr
                worst = max(worst, r)
        return ok, worst

    @cached_property
    def _normal(self) -> tuple[bool, float]:
        ok, worst = True, 0.0
        for m, nm in zip(self.mats, self.norms):
            thr = self.tol * max(1.0, nm * nm)
            r = certified_norm(commutator(m, m.conj().T), thr)
            ok &= r <= thr
            worst = max(worst, r)
        return ok, worst

    @cached_property
    def _selfadjoint(self) -> tuple[bool, float]:
        ok, worst = True, 0.0
        for m, nm in zip(self.mats, self.norms):
            thr = self.tol * max(1.0, nm)
            r = certified_norm(m - m.conj().T, thr)
            ok &= r <= thr
            worst = max(worst, r)
        return ok, worst

    @property
    def commuting(self) -> bool:
        return self._commuting[0]

    @property
    def normal(self) -> bool:
        return self._normal[0]

    @property
    def selfadjoint(self) -> bool:
        return self._selfadjoint[0]

    @property
    def contractive(self) -> bool:
        return max(self.norms) <= 1.0 + self.tol

    def certificate(self) -> dict[str, dict]:
        return {
            "commuting": {"flag": self.commuting, "residual": self._commuting[1]},
            "normal": {"flag": self.normal, "residual": self._normal[1]},
            "selfadjoint": {"flag": self.selfadjoint, "residual": self._selfadjoint[1]},
            "contractive": {"flag": self.contractive, "residual": max(0.0, max(self.norms) - 1.0)},
        }


def _horner(groups: dict[tuple[int, ...], complex], mats: Sequence[np.ndarray], m: int, eye: np.ndarray):
    if m == len(mats):
        return sum(groups.values()) * eye
    by_exp: dict[int, dict] = {}
    for k, c in groups.items():
        by_exp.setdefault(k[m], {})[k] = c
    x = mats[m]
    acc = None
    for e in range(max(by_exp), -1, -1):
        inner = _horner(by_exp[e], mats, m + 1, eye) if e in by_exp else None
        if acc is None:
            acc = inner
        else:
            acc = x @ acc
            if inner is not None:
                acc = acc + inner
    return acc


def eval_ordered(f: AnalyticFunction, mats: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_k c_k X_1^{k_1} ... X_n^{k_n}`` with factors in coordinate order.

    Horner in each coordinate, the first coordinate outermost.  No
    commutativity is assumed.
    """
    if len(mats) != f.arity:
        raise CalculusError(f"arity mismatch: function has {f.arity}, tuple has {len(mats)}")
    eye = identity(mats[0].shape[0])
    if f.is_zero:
        return np.zeros_like(eye)
    return _horner(dict(f.coeffs), list(mats), 0, eye)


def eval_function(f: AnalyticFunction, x: OperatorTuple, *, strict: bool = True) -> np.ndarray:
    """Functional calculus ``f(X_1, ..., X_n)``.

    With ``strict`` the tuple must be certified commuting, otherwise the value
    depends on the factor order and is refused.
    """
    if f.arity != x.n:
        raise CalculusError(f"arity mismatch: function has {f.arity}, tuple has {x.n}")
    if strict and not x.commuting:
        raise CalculusError("operator tuple is not certified commuting")
    return eval_ordered(f, x.mats)


def monomial_compress(x: OperatorTuple | Sequence[np.ndarray], k: Sequence[int], start: int = 0) -> np.ndarray:
    """Ordered monomial ``X_start^{k_0} ... X_{n-1}^{k_{n-1-start}}``.

    With ``start = 0`` this is ``X_1^{k_1} ... X_n^{k_n}``; a positive
    ``start`` gives the suffix product over the trailing coordinates.
    """
    mats = x.mats if isinstance(x, OperatorTuple) else tuple(x)
    if len(k) != len(mats) - start or start < 0:
        raise CalculusError("multi-index length does not match the tuple suffix")
    out = identity(mats[0].shape[0])
    for m, e in zip(mats[start:], k):
        for _ in range(int(e)):
            out = out @ m
    return out


# ---------------------------------------------------------------------------
# divided differences


def _coeffs_of(g) -> np.ndarray:
    if isinstance(g, AnalyticFunction):
        if g.arity != 1:
            raise CalculusError("expected a univariate function")
        return g.slice_coeffs(0, [0.0])
    return np.asarray(g, dtype=np.complex128)


def _deflate(desc: np.ndarray, lam: complex) -> np.ndarray:
    """Quotient of ``(h(t) - h(lam)) / (t - lam)`` for descending coefficients."""
    if desc.size <= 1:
        return np.zeros(0, dtype=np.complex128)
    q = np.empty(desc.size - 1, dtype=np.complex128)
    acc = desc[0]
    q[0] = acc
    for i in range(1, desc.size - 1):
        acc = desc[i] + lam * acc
        q[i] = acc
    return q


def divided_difference(g, points: Sequence[complex]) -> complex:
    """Divided difference ``g[l_0, ..., l_r]`` of a univariate polynomial.

    Exact for polynomials: each step replaces ``h(t)`` by the quotient
    ``(h(t) - h(l_m)) / (t - l_m)``, which is the difference quotient for
    distinct points and the derivative branch when points repeat.
    """
    if len(points) == 0:
        raise CalculusError("need at least one point")
    desc = _coeffs_of(g)[::-1].copy()
    for lam in points[:-1]:
        desc = _deflate(desc, complex(lam))
        if desc.size == 0:
            return 0j
    acc = 0j
    z = complex(points[-1])
    for c in desc:
        acc = acc * z + c
    return complex(acc)


def partial_divided_difference(phi: AnalyticFunction, j: int, points: Sequence[complex], fixed: Sequence[complex]) -> complex:
    """Divided difference in coordinate ``j`` with the other coordinates held at ``fixed``.

    ``fixed`` is a full point of length ``arity``; its entry ``j`` is ignored.
    """
    if len(fixed) != phi.arity:
        raise CalculusError("fixed point has the wrong length")
    return divided_difference(phi.slice_coeffs(j, fixed), points)


def delta_operator(phi: AnalyticFunction, steps: Sequence[tuple[int, complex]], point: Sequence[complex]) -> complex:
    """Iterated first-order difference quotients ``Delta_{h_1 e_{c_1}} ... Delta_{h_r e_{c_r}} phi(z)``.

    Evaluated by inclusion-exclusion over the ``2^r`` shifted points.
    """
    z = np.asarray(point, dtype=np.complex128)
    if z.shape != (phi.arity,):
        raise CalculusError("point has the wrong length")
    for c, h in steps:
        if h == 0:
            raise CalculusError("difference step must be nonzero")
        if not 0 <= c < phi.arity:
            raise CalculusError(f"coordinate {c} out of range")
    r = len(steps)
    pts = []
    signs = []
    for mask in itertools.product((0, 1), repeat=r):
        w = z.copy()
        for bit, (c, h) in zip(mask, steps):
            if bit:
                w[c] += h
        pts.append(w)
        signs.append((-1) ** (r - sum(mask)))
    vals = phi(np.array(pts)) if r else np.array([phi(z)])
    denom = np.prod([complex(h) for _, h in steps]) if r else 1.0
    return complex(np.dot(np.array(signs, dtype=float), vals) / denom)


def dd_integral(g, points: Sequence[complex], nodes: int = 32) -> complex:
    """Divided difference via its iterated-integral representation.

    ``g[l_0..l_r] = int_0^1 dt_1 int_0^{t_1} dt_2 ... g^{(r)}(l_r + (l_{r-1} - l_r) t_1
    + ... + (l_0 - l_1) t_r)``, computed with ``nodes``-point Gauss-Legendre
    per level on the simplex.
    """
    c = _coeffs_of(g)
    pts = [complex(p) for p in points]
    r = len(pts) - 1
    poly = np.polynomial.Polynomial(c)
    if r == 0:
        return complex(poly(pts[0]))
    deriv = poly.deriv(r) if c.size > r else np.polynomial.Polynomial([0])
    x, w = gauss_legendre01(nodes)
    total = 0j
    for idx in itertools.product(range(nodes), repeat=r):
        u = x[list(idx)]
        wt = np.prod(w[list(idx)])
        # t_1 = u_1, t_m = t_{m-1} u_m; Jacobian prod_m t_{m-1}
        t = np.cumprod(u)
        jac = np.prod(t[:-1]) if r > 1 else 1.0
        arg = pts[r] + sum((pts[r - m] - pts[r - m + 1]) * t[m - 1] for m in range(1, r + 1))
        total += wt * jac * deriv(arg)
    return complex(total)


def delta_integral(phi: AnalyticFunction, steps: Sequence[tuple[int, complex]], point: Sequence[complex], nodes: int = 16) -> complex:
    """Iterated difference via the box integral of the mixed partial over ``[0, 1]^r``."""
    z = np.asarray(point, dtype=np.complex128)
    dphi = mixed_partial(phi, [c for c, _ in steps])
    r = len(steps)
    if r == 0:
        return complex(phi(z))
    x, w = gauss_legendre01(nodes)
    grids = np.array(list(itertools.product(range(nodes), repeat=r)))
    pts = np.repeat(z[None, :], grids.shape[0], axis=0)
    wts = np.ones(grids.shape[0])
    for i, (c, h) in enumerate(steps):
        pts[:, c] += x[grids[:, i]] * h
        wts *= w[grids[:, i]]
    return complex(np.dot(wts, dphi(pts)))


def monomial_dd_expansion(
    f: AnalyticFunction,
    point: Sequence[complex],
    *,
    j: int,
    h_j: complex,
    i: int | None = None,
    h_i: complex | None = None,
) -> complex:
    """Evaluate the monomial-sum expansions of second-order differences.

    Without ``i``: ``f(.., [z_j + h, z_j + h, z_j], ..)`` as
    ``sum_k c_k sum_{p0+p1+p2 = k_j - 2} (z_j + h)^{p0+p2} z_j^{p1} prod_{m != j} z_m^{k_m}``.

    With ``i != j``: ``Delta_{h_i e_i, h_j e_j} f(z)`` as
    ``sum_k c_k sum_{q0+q1 = k_i-1} sum_{p0+p1 = k_j-1} (z_i+h_i)^{q0} z_i^{q1} (z_j+h_j)^{p0} z_j^{p1} prod_{m != i,j} z_m^{k_m}``.
    """
    z = np.asarray(point, dtype=np.complex128)
    total = 0j
    for k, c in f.coeffs.items():
        rest = c
        for m, km in enumerate(k):
            if m != j and m != i and km:
                rest *= z[m] ** km
        a = z[j] + h_j
        b = z[j]
        if i is None:
            if k[j] < 2:
                continue
            s = 0j
            for p0 in range(k[j] - 1):
                for p1 in range(k[j] - 1 - p0):
                    p2 = k[j] - 2 - p0 - p1
                    s += a ** (p0 + p2) * b**p1
            total += rest * s
        else:
            if i == j:
                raise CalculusError("mixed expansion needs distinct coordinates")
            if k[i] < 1 or k[j] < 1:
                continue
            ai, bi = z[i] + h_i, z[i]
            si = sum(ai**q0 * bi ** (k[i] - 1 - q0) for q0 in range(k[i]))
            sj = sum(a**p0 * b ** (k[j] - 1 - p0) for p0 in range(k[j]))
            total += rest * si * sj
    return complex(total)
