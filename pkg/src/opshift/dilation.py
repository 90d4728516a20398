"""Unitary power dilations and von Neumann inequality checks."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from typing import Iterator

import numpy as np

from .calculus import AnalyticFunction, OperatorTuple, eval_function, sup_norm_estimate
from .linalg import (
    adjoint,
    as_matrix,
    certified_norm,
    frobenius_norm,
    identity,
    is_contraction,
    op_norm,
    psd_sqrt,
)

MAX_WORDS = 2000
CERT_TOL = 1e-12


class DilationError(ValueError):
    pass


@dataclass(frozen=True)
class DilationCertificate:
    base_dim: int
    dilated_dim: int
    degree: int
    unitarity_residual: float
    compression_residual: float
    normal_residual: float = 0.0
    commuting_residual: float = 0.0
    words_checked: int = 0
    tol: float = CERT_TOL

    @property
    def passed(self) -> bool:
        return max(self.unitarity_residual, self.compression_residual) <= self.tol and max(
            self.normal_residual, self.commuting_residual
        ) <= max(self.tol, 1e-10)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def defect(x: np.ndarray) -> np.ndarray:
    """``(I - X^* X)^{1/2}``."""
    return psd_sqrt(identity(x.shape[0]) - adjoint(x) @ x)


def schaffer_dilation(x, degree: int) -> tuple[np.ndarray, DilationCertificate]:
    """Unitary ``U`` of size ``(N+1) d`` with ``P U^k P = X^k`` for ``k <= N``.

    Block rows: ``[X, 0, ..., 0, D_{X*}]``, ``[D_X, 0, ..., 0, -X*]``, then
    identity blocks shifting down by one.  ``X`` occupies the first block.
    """
    x = as_matrix(x)
    if degree < 1:
        raise DilationError("degree must be at least 1")
    if not is_contraction(x):
        raise DilationError(f"not a contraction (norm {op_norm(x):.6g})")
    d = x.shape[0]
    size = (degree + 1) * d
    u = np.zeros((size, size), dtype=np.complex128)

    def blk(r, c):
        return slice(r * d, (r + 1) * d), slice(c * d, (c + 1) * d)

    u[blk(0, 0)] = x
    u[blk(0, degree)] = psd_sqrt(identity(d) - x @ adjoint(x))
    u[blk(1, 0)] = defect(x)
    u[blk(1, degree)] = -adjoint(x)
    for r in range(2, degree + 1):
        u[blk(r, r - 1)] = identity(d)
    unit = certified_norm(adjoint(u) @ u - identity(size), CERT_TOL)
    comp = 0.0
    uk = identity(size)
    xk = identity(d)
    for _ in range(degree):
        uk = uk @ u
        xk = xk @ x
        comp = max(comp, certified_norm(uk[:d, :d] - xk, CERT_TOL))
    cert = DilationCertificate(d, size, degree, unit, comp, words_checked=degree)
    return u, cert


def words(n: int, max_len: int, cap: int = MAX_WORDS) -> Iterator[tuple[int, ...]]:
    """Words over ``range(n)`` by length, then lexicographically; at most ``cap``."""
    count = 0
    for length in range(1, max_len + 1):
        for w in itertools.product(range(n), repeat=length):
            if count >= cap:
                return
            count += 1
            yield w


def verify_dilation(
    x: OperatorTuple, u: OperatorTuple, embed=None, degree: int = 1, *, strict: bool = False, tol: float = CERT_TOL
) -> DilationCertificate:
    """Check ``E^* U_w E = X_w`` for every word ``w`` of length ``<= degree``.

    ``embed`` is an isometry ``E`` from the base space into the dilation space
    (default: the first ``d`` coordinates).  With ``strict`` a non-normal or
    non-commuting ``U`` raises; otherwise the residuals are recorded and the
    certificate fails.
    """
    if x.n != u.n:
        raise DilationError("tuples differ in arity")
    d, big = x.dim, u.dim
    e = np.eye(big, d, dtype=np.complex128) if embed is None else np.asarray(embed, dtype=np.complex128)
    if e.shape != (big, d):
        raise DilationError(f"embedding has shape {e.shape}, expected {(big, d)}")
    if frobenius_norm(adjoint(e) @ e - identity(d)) > 1e-10:
        raise DilationError("embedding is not an isometry")
    _, nres = u._normal
    _, cres = u._commuting
    if strict and not (u.normal and u.commuting):
        raise DilationError("dilating tuple must be commuting and normal")
    unit = max(certified_norm(adjoint(m) @ m - identity(big), tol) for m in u.mats)
    comp = 0.0
    checked = 0
    # prefix products are reused along the lexicographic enumeration
    ucache: dict[tuple[int, ...], np.ndarray] = {(): e}
    xcache: dict[tuple[int, ...], np.ndarray] = {(): identity(d)}
    ecomp = adjoint(e)
    for w in words(x.n, degree):
        ucache[w] = u[w[0]] @ ucache[w[1:]] if len(w) > 1 else u[w[0]] @ e
        xcache[w] = x[w[0]] @ xcache[w[1:]]
        comp = max(comp, certified_norm(ecomp @ ucache[w] - xcache[w], tol))
        checked += 1
    return DilationCertificate(d, big, degree, unit, comp, nres, cres, checked, tol)


@dataclass(frozen=True)
class VonNeumannRecord:
    op_value: float
    sup_value: float
    status: str

    @property
    def margin(self) -> float:
        return self.sup_value - self.op_value


def vn_status(x: OperatorTuple, domain_kind: str = "polydisc", dilation: DilationCertificate | None = None) -> str:
    """Why the von Neumann inequality is expected to hold for ``x``, if it is."""
    if not (x.commuting and x.contractive):
        return "unverified hypothesis"
    if domain_kind == "real_cube":
        return "certified: self-adjoint" if x.selfadjoint else "unverified hypothesis"
    if x.normal:
        return "certified: normal"
    if x.n == 1:
        return "certified: single contraction"
    if x.n == 2:
        return "certified: commuting pair"
    if dilation is not None and dilation.passed:
        return "certified: supplied dilation"
    return "unverified hypothesis"


def von_neumann_check(
    x: OperatorTuple, f: AnalyticFunction, grid: int = 64, *, dilation: DilationCertificate | None = None
) -> VonNeumannRecord:
    """``||f(X)||`` against the padded grid supremum of ``|f|``."""
    status = vn_status(x, f.domain_kind, dilation)
    op_value = op_norm(eval_function(f, x, strict=x.commuting))
    sup = sup_norm_estimate(f, grid).upper
    return VonNeumannRecord(op_value, sup, status)
