"""Joint spectra of commuting normal tuples and spectral shift measures.

The measures are discrete: every quadrature node ``t_q`` of the path
contributes atoms at joint eigenvalues of ``X(t_q)``.  The trace formulas are
then exact for polynomials up to the quadrature degree.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .calculus import (
    AnalyticFunction,
    OperatorTuple,
    eval_ordered,
    mixed_partial,
    partial_derivative,
    sup_norm_estimate,
)
from .linalg import (
    eigh_jacobi,
    frobenius_norm,
    hermitian_part,
    imaginary_part,
    re_im_trace_bound,
    schatten_norm,
    trace,
)
from .perturbation import PathSpec, TraceIdentity, first_derivative, second_derivative
from .quadrature import QuadratureSpec
from .rng import SplitMix64


class SpectralError(ValueError):
    pass


# ---------------------------------------------------------------------------
# joint diagonalization


@dataclass(frozen=True, eq=False)
class JointSpectrum:
    points: np.ndarray  # (K, n) joint eigenvalue tuples
    projections: np.ndarray  # (K, d, d)
    residual: float

    @property
    def size(self) -> int:
        return len(self.points)

    def ranks(self) -> np.ndarray:
        return np.rint(np.real(np.einsum("kaa->k", self.projections))).astype(int)

    def apply(self, f: AnalyticFunction) -> np.ndarray:
        """``sum_k f(lambda^k) P_k``."""
        vals = np.asarray(f(self.points))
        return np.einsum("k,kab->ab", vals, self.projections)


def _cluster(tuples: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    reps: list[np.ndarray] = []
    for c, lam in enumerate(tuples):
        for g, rep in zip(groups, reps):
            if np.max(np.abs(lam - rep)) <= tol:
                g.append(c)
                break
        else:
            groups.append([c])
            reps.append(lam)
    return groups


def joint_diagonalize(x: OperatorTuple, tol: float = 1e-8, *, seed: int = 0, retries: int = 8) -> JointSpectrum:
    """Joint eigenprojections of a commuting normal tuple.

    A random real combination of the Hermitian and skew parts of all members
    is diagonalized; its eigenbasis is checked against every member.  Joint
    eigenvalues closer than ``tol * max(1, max ||X_i||)`` share a projection.
    """
    if not x.commuting:
        raise SpectralError("tuple is not commuting")
    if not x.normal:
        raise SpectralError("tuple is not normal")
    scale = max(1.0, max(x.norms))
    parts = [p for m in x.mats for p in (hermitian_part(m), imaginary_part(m))]
    rng = SplitMix64(seed)
    accept = 1e-9 * scale
    best = np.inf
    for _ in range(retries):
        coef = rng.uniforms(len(parts), -1.0, 1.0)
        h = sum(c * p for c, p in zip(coef, parts))
        _, u = eigh_jacobi(h)
        lam = np.stack([np.einsum("ai,ab,bi->i", u.conj(), m, u) for m in x.mats], axis=1)
        groups = _cluster(lam, tol * scale)
        points = np.array([lam[g].mean(axis=0) for g in groups])
        projs = np.array([u[:, g] @ u[:, g].conj().T for g in groups])
        res = 0.0
        for i, m in enumerate(x.mats):
            for k in range(len(groups)):
                res = max(res, frobenius_norm(m @ projs[k] - points[k, i] * projs[k]))
        best = min(best, res)
        if res <= accept:
            points.flags.writeable = False
            projs.flags.writeable = False
            return JointSpectrum(points, projs, res)
    raise SpectralError(f"joint diagonalization failed after {retries} attempts (residual {best:.3e})")


# ---------------------------------------------------------------------------
# discrete measures


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite complex measure on C^n given by atoms ``(points[a], weights[a])``.

    ``t_nodes[a]`` records the path parameter that produced the atom.
    """

    label: str
    points: np.ndarray  # (N, n)
    weights: np.ndarray  # (N,)
    t_nodes: np.ndarray  # (N,)

    def __post_init__(self):
        if self.points.ndim != 2 or len(self.points) != len(self.weights) or len(self.weights) != len(self.t_nodes):
            raise SpectralError("inconsistent atom arrays")

    @classmethod
    def empty(cls, label: str, arity: int) -> "DiscreteMeasure":
        return cls(label, np.zeros((0, arity), complex), np.zeros(0, complex), np.zeros(0))

    @property
    def arity(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, g: AnalyticFunction) -> complex:
        if g.arity != self.arity:
            raise SpectralError(f"arity mismatch: function {g.arity}, measure {self.arity}")
        if len(self) == 0:
            return 0j
        return complex(np.sum(self.weights * np.asarray(g(self.points))))

    @property
    def mass(self) -> complex:
        return complex(np.sum(self.weights))

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def max_imag_weight(self) -> float:
        return float(np.max(np.abs(self.weights.imag), initial=0.0))

    def support_radius(self, domain_kind: str = "polydisc") -> float:
        """Largest coordinate modulus, or largest ``|Re|``/``|Im|`` for the cube."""
        if len(self) == 0:
            return 0.0
        if domain_kind == "real_cube":
            return float(max(np.max(np.abs(self.points.real)), np.max(np.abs(self.points.imag))))
        return float(np.max(np.abs(self.points)))

    def marginal(self, j: int) -> "DiscreteMeasure":
        if not 0 <= j < self.arity:
            raise SpectralError(f"coordinate {j} out of range")
        return DiscreteMeasure(f"{self.label}|x{j + 1}", self.points[:, j : j + 1], self.weights, self.t_nodes)

    def scaled(self, c: complex, label: str | None = None) -> "DiscreteMeasure":
        return DiscreteMeasure(label or self.label, self.points, c * self.weights, self.t_nodes)


def combine(terms: Sequence[tuple[complex, DiscreteMeasure]], label: str) -> DiscreteMeasure:
    """Linear combination ``sum c_i m_i`` as a concatenation of atoms."""
    if not terms:
        raise SpectralError("nothing to combine")
    return DiscreteMeasure(
        label,
        np.concatenate([m.points for _, m in terms]),
        np.concatenate([c * m.weights for c, m in terms]),
        np.concatenate([m.t_nodes for _, m in terms]),
    )


# ---------------------------------------------------------------------------
# first order


@dataclass(frozen=True)
class ChainRecord:
    lhs: complex
    per_j: tuple[complex, ...]

    @property
    def residual(self) -> float:
        return abs(self.lhs - sum(self.per_j))


def chain_rule_trace(f: AnalyticFunction, path: PathSpec, t: float) -> ChainRecord:
    """Trace of the first derivative against ``sum_j Tr(V_j (df/dz_j)(X(t)))``."""
    xt = path.X(t)
    if not xt.commuting:
        raise SpectralError(f"X({t}) is not commuting")
    lhs = trace(first_derivative(f, path, t).value)
    per = tuple(trace(v @ eval_ordered(partial_derivative(f, j), xt.mats)) for j, v in enumerate(path.V))
    return ChainRecord(lhs, per)


def _require_measurable(path: PathSpec) -> None:
    if not path.path_commuting:
        raise SpectralError("path is not commuting")


def _node_rule(quad: QuadratureSpec, max_degree: int | None) -> tuple[np.ndarray, np.ndarray]:
    if quad.nodes == 0 and max_degree is None:
        raise SpectralError("automatic node count needs max_degree")
    return quad.rule(max_degree if max_degree is not None else 0)


def _spectra(path: PathSpec, ts: np.ndarray, seed: int) -> list[JointSpectrum]:
    out = []
    for t in ts:
        xt = path.X(float(t))
        if not xt.normal:
            raise SpectralError(f"X({t:.6f}) is not normal")
        out.append(joint_diagonalize(xt, seed=seed))
    return out


def first_order_measures(
    path: PathSpec, quad: QuadratureSpec = QuadratureSpec(), *, max_degree: int | None = None, seed: int = 0
) -> list[DiscreteMeasure]:
    """Measures ``mu_j`` with atoms ``(lambda^k(t_q), w_q Tr(P_k(t_q) V_j))``.

    ``max_degree`` is the largest total degree of functions to be integrated
    exactly; it is required when the node count is automatic.
    """
    _require_measurable(path)
    ts, ws = _node_rule(quad, max_degree)
    spectra = _spectra(path, ts, seed)
    out = []
    for j, v in enumerate(path.V):
        pts, wts, tn = [], [], []
        for t, w, js in zip(ts, ws, spectra):
            pts.append(js.points)
            wts.append(w * np.einsum("kab,ba->k", js.projections, v))
            tn.append(np.full(js.size, t))
        out.append(DiscreteMeasure(f"mu({j + 1})", np.concatenate(pts), np.concatenate(wts), np.concatenate(tn)))
    return out


def verify_first_order(f: AnalyticFunction, path: PathSpec, measures: Sequence[DiscreteMeasure]) -> TraceIdentity:
    """``Tr(f(B) - f(A))`` against ``sum_j int df/dz_j dmu_j``."""
    if f.arity != path.n or len(measures) != path.n:
        raise SpectralError("arity mismatch")
    lhs = trace(eval_ordered(f, path.B.mats) - eval_ordered(f, path.A.mats))
    rhs = sum(m.integrate(partial_derivative(f, j)) for j, m in enumerate(measures))
    return TraceIdentity(lhs, complex(rhs), len(set(measures[0].t_nodes)) if measures else 0)


# ---------------------------------------------------------------------------
# second order


def _pair_traces(js: JointSpectrum, vi: np.ndarray, vj: np.ndarray) -> np.ndarray:
    """``T[k, l] = Tr(P_k V_i P_l V_j)``."""
    pvi = js.projections @ vi
    pvj = js.projections @ vj
    return np.einsum("kab,lba->kl", pvi, pvj)


def second_order_measures(
    path: PathSpec,
    quad: QuadratureSpec = QuadratureSpec(),
    *,
    max_degree: int | None = None,
    seed: int = 0,
    prune: float = 1e-14,
) -> dict[tuple[int, int], DiscreteMeasure]:
    """Measures ``nu_ij`` (``i <= j``) for the Taylor remainder.

    Same-coordinate atoms come from the integral form of the confluent
    divided difference ``g[a, a, b] = int_0^1 s g''(b + (a - b)s) ds``;
    mixed atoms from the box-integral form of the mixed difference between
    joint eigenvalues ``lambda^k`` and ``lambda^l``.  Pairs ``(k, l)`` whose
    trace weight is below ``prune * ||V_i||_F ||V_j||_F`` are dropped.
    """
    _require_measurable(path)
    n = path.n
    for i in range(n):
        for j in range(i + 1, n):
            c = path.V[i] @ path.V[j] - path.V[j] @ path.V[i]
            if frobenius_norm(c) > 1e-10 * max(1.0, frobenius_norm(path.V[i]) * frobenius_norm(path.V[j])):
                raise SpectralError("increments do not commute")
    ts, ws = _node_rule(quad, max_degree)
    ss, vs = _node_rule(quad, max_degree)
    spectra = _spectra(path, ts, seed)
    acc: dict[tuple[int, int], list] = {(i, j): [[], [], []] for i in range(n) for j in range(i, n)}
    for t, w, js in zip(ts, ws, spectra):
        lam = js.points
        for (i, j), (pts, wts, tn) in acc.items():
            tr = _pair_traces(js, path.V[i], path.V[j])
            cut = prune * frobenius_norm(path.V[i]) * frobenius_norm(path.V[j])
            kk, ll = np.nonzero(np.abs(tr) > cut)
            if len(kk) == 0:
                continue
            base = w * (1 - t) * tr[kk, ll]
            if i == j:
                a = lam[kk, j][:, None]
                b = lam[ll, j][:, None]
                p = np.repeat(lam[kk][:, None, :], len(ss), axis=1)
                p[:, :, j] = b + (a - b) * ss[None, :]
                wt = 2 * base[:, None] * (vs * ss)[None, :]
                pts.append(p.reshape(-1, n))
                wts.append(wt.reshape(-1))
            else:
                p0 = lam[kk].copy()
                p0[:, i : j + 1] = lam[ll, i : j + 1]
                di = (lam[kk, i] - lam[ll, i])[:, None, None]
                dj = (lam[kk, j] - lam[ll, j])[:, None, None]
                p = np.repeat(np.repeat(p0[:, None, None, :], len(ss), axis=1), len(ss), axis=2)
                p[:, :, :, i] = p0[:, None, None, i] + di * ss[None, :, None]
                p[:, :, :, j] = p0[:, None, None, j] + dj * ss[None, None, :]
                wt = base[:, None, None] * np.outer(vs, vs)[None, :, :]
                pts.append(p.reshape(-1, n))
                wts.append(wt.reshape(-1))
            tn.append(np.full(len(wts[-1]), t))
    out = {}
    for (i, j), (pts, wts, tn) in acc.items():
        label = f"nu({i + 1},{j + 1})"
        if pts:
            out[(i, j)] = DiscreteMeasure(label, np.concatenate(pts), np.concatenate(wts), np.concatenate(tn))
        else:
            out[(i, j)] = DiscreteMeasure.empty(label, n)
    return out


def verify_second_order(
    f: AnalyticFunction, path: PathSpec, measures: Mapping[tuple[int, int], DiscreteMeasure]
) -> TraceIdentity:
    """Taylor remainder trace against
    ``sum_j int d^2f/dz_j^2 dnu_jj + 2 sum_{i<j} int d^2f/dz_i dz_j dnu_ij``."""
    if f.arity != path.n:
        raise SpectralError("arity mismatch")
    lhs = trace(eval_ordered(f, path.B.mats) - eval_ordered(f, path.A.mats) - first_derivative(f, path, 0.0).value)
    rhs = 0j
    for (i, j), m in measures.items():
        rhs += (1 if i == j else 2) * m.integrate(mixed_partial(f, (i, j)))
    nodes = len(set(next(iter(measures.values())).t_nodes)) if measures else 0
    return TraceIdentity(lhs, complex(rhs), nodes)


def marginal(measure: DiscreteMeasure, j: int) -> DiscreteMeasure:
    return measure.marginal(j)


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class BoundRecord:
    value: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.value

    def holds(self, pad: float = 0.0) -> bool:
        return self.value <= self.bound + pad


def _projections(spec) -> np.ndarray:
    return spec.projections if isinstance(spec, JointSpectrum) else np.asarray(spec)


def partition_trace_bound(spec, v: np.ndarray, v2: np.ndarray | None = None, spec2=None) -> BoundRecord:
    """Sums of traces over a partition of unity by orthogonal projections.

    Without ``v2``: ``sum_k |Tr(P_k V)|`` against ``Tr|Re V| + Tr|Im V|``.
    With ``v2``: ``sum_{k,l} |Tr(P_k V P'_l V2 P_k)|`` against
    ``||V||_2 ||V2||_2``, where ``P'`` comes from ``spec2`` (default ``spec``).
    """
    p = _projections(spec)
    if v2 is None:
        s = float(np.sum(np.abs(np.einsum("kab,ba->k", p, v))))
        return BoundRecord(s, re_im_trace_bound(v))
    q = p if spec2 is None else _projections(spec2)
    pv = p @ v
    qv2 = q @ v2
    # Tr(P_k V Q_l V2 P_k) = Tr(P_k V Q_l V2)
    s = float(np.sum(np.abs(np.einsum("kab,lba->kl", pv, qv2))))
    return BoundRecord(s, schatten_norm(v, 2) * schatten_norm(v2, 2))


def first_order_bounds(f: AnalyticFunction, path: PathSpec, t: float, grid: int = 64) -> list[BoundRecord]:
    """``|Tr(V_j df/dz_j(X(t)))| <= min(||V_j||_1, Tr|Re V_j| + Tr|Im V_j|) * sup|df/dz_j|``."""
    xt = path.X(t)
    out = []
    for j, v in enumerate(path.V):
        dj = partial_derivative(f, j)
        val = abs(trace(v @ eval_ordered(dj, xt.mats)))
        c = min(schatten_norm(v, 1), re_im_trace_bound(v))
        out.append(BoundRecord(val, c * sup_norm_estimate(dj, grid).upper))
    return out


def second_order_bounds(f: AnalyticFunction, path: PathSpec, t: float, grid: int = 64) -> dict[tuple[int, int], BoundRecord]:
    """``|Tr D^{ij}(t)| <= ||V_i||_2 ||V_j||_2 * sup|d^2 f / dz_i dz_j|``."""
    rep = second_derivative(f, path, t)
    out = {}
    for (i, j), m in rep.per_term.items():
        sup = sup_norm_estimate(mixed_partial(f, (i, j)), grid).upper
        c = schatten_norm(path.V[i], 2) * schatten_norm(path.V[j], 2)
        out[(i, j)] = BoundRecord(abs(trace(m)), c * sup)
    return out


# ---------------------------------------------------------------------------
# pairs of self-adjoint operators as one normal operator


def _compose_normal(g: AnalyticFunction) -> AnalyticFunction:
    """``(x1, x2) -> g(x1 + i x2)`` for univariate ``g``."""
    out = AnalyticFunction.constant(2, 0.0)
    z = AnalyticFunction.coordinate(2, 0) + AnalyticFunction.coordinate(2, 1) * 1j
    power = AnalyticFunction.constant(2, 1.0)
    for p in range(g.degree + 1):
        c = g.coeffs.get((p,), 0)
        if c:
            out = out + power * c
        power = power * z
    return out


def normal_pair_formula(
    path: PathSpec,
    f: AnalyticFunction,
    order: int,
    *,
    quad: QuadratureSpec = QuadratureSpec(),
    seed: int = 0,
    measures=None,
) -> TraceIdentity:
    """Trace formulas for ``N(t) = X_1(t) + i X_2(t)`` with self-adjoint coordinates.

    Order 1: ``Tr(f(N(1)) - f(N(0)))`` against ``int f' d(mu_1 + i mu_2)``.
    Order 2: the Taylor remainder of ``f`` along ``N`` against
    ``int f'' d(nu_11 - nu_22 + 2i nu_12)``, evaluated at ``x1 + i x2``.
    """
    if path.n != 2 or f.arity != 1:
        raise SpectralError("needs a pair path and a univariate function")
    if not (path.A.selfadjoint and path.B.selfadjoint):
        raise SpectralError("pair coordinates must be self-adjoint")
    if order not in (1, 2):
        raise SpectralError("order must be 1 or 2")
    na = path.A[0] + 1j * path.A[1]
    nb = path.B[0] + 1j * path.B[1]
    npath = PathSpec.from_mats([na], [nb])
    fa, fb = eval_ordered(f, [na]), eval_ordered(f, [nb])
    dpart = partial_derivative(f, 0, times=order)
    g = _compose_normal(dpart)
    if order == 1:
        mus = measures if measures is not None else first_order_measures(path, quad, max_degree=f.degree, seed=seed)
        lhs = trace(fb - fa)
        m = combine([(1.0, mus[0]), (1j, mus[1])], "mu(1)+i mu(2)")
    else:
        nus = measures if measures is not None else second_order_measures(path, quad, max_degree=f.degree, seed=seed)
        lhs = trace(fb - fa - first_derivative(f, npath, 0.0).value)
        m = combine([(1.0, nus[(0, 0)]), (-1.0, nus[(1, 1)]), (2j, nus[(0, 1)])], "nu(1,1)-nu(2,2)+2i nu(1,2)")
    return TraceIdentity(lhs, m.integrate(g), len(set(m.t_nodes)))


def frozen_coordinate_check(
    path: PathSpec, g: AnalyticFunction, i: int, j: int, order: int, measure: DiscreteMeasure
) -> TraceIdentity:
    """For a coordinate ``i`` held fixed along the path (``A_i = B_i``):
    ``int g(x_i) dmu_j = Tr(g(A_i) V_j)`` (order 1) or
    ``int g(x_i) dnu_jj = Tr(g(A_i) V_j^2) / 2`` (order 2).
    """
    if frobenius_norm(path.V[i]) > 0:
        raise SpectralError(f"coordinate {i} moves along the path")
    gi = eval_ordered(g, [path.A[i]])
    v = path.V[j]
    lhs = trace(gi @ v) if order == 1 else trace(gi @ v @ v) / 2
    return TraceIdentity(lhs, measure.marginal(i).integrate(g), len(set(measure.t_nodes)))


# ---------------------------------------------------------------------------
# CSV export


def measures_csv(measures: Sequence[DiscreteMeasure]) -> str:
    """Rows ``label, t_node, lambda_1_re, lambda_1_im, ..., weight_re, weight_im``."""
    if not measures:
        raise SpectralError("no measures to write")
    n = max(m.arity for m in measures)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["label", "t_node"]
    for j in range(n):
        header += [f"lambda_{j + 1}_re", f"lambda_{j + 1}_im"]
    w.writerow(header + ["weight_re", "weight_im"])
    for m in measures:
        for p, wt, t in zip(m.points, m.weights, m.t_nodes):
            row = [m.label, repr(float(t))]
            for j in range(n):
                z = p[j] if j < m.arity else 0j
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row + [repr(float(wt.real)), repr(float(wt.imag))])
    return buf.getvalue()


def spectral_apply(x: OperatorTuple, f: AnalyticFunction, *, seed: int = 0) -> np.ndarray:
    """``f(X)`` via the joint spectrum; an independent route to ``eval_function``."""
    return joint_diagonalize(x, seed=seed).apply(f)


__all__ = [
    "BoundRecord",
    "ChainRecord",
    "DiscreteMeasure",
    "JointSpectrum",
    "SpectralError",
    "chain_rule_trace",
    "combine",
    "first_order_bounds",
    "first_order_measures",
    "frozen_coordinate_check",
    "joint_diagonalize",
    "marginal",
    "measures_csv",
    "normal_pair_formula",
    "partition_trace_bound",
    "second_order_bounds",
    "second_order_measures",
    "spectral_apply",
    "verify_first_order",
    "verify_second_order",
]
