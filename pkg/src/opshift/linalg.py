"""Dense complex matrix primitives.

Every operator in the package is a square ``complex128`` numpy array.  The
functions here never mutate their arguments and return fresh arrays, so they
are safe to call from several threads at once.

Hermitian eigenproblems are solved with a cyclic Jacobi iteration; singular
values come from the Hermitian eigendecomposition of ``A^* A``.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

DEFAULT_RTOL = 1e-10


class LinalgError(ValueError):
    """Raised for malformed matrices or invalid arguments."""


def as_matrix(a, *, copy: bool = True) -> np.ndarray:
    """Validate ``a`` as a square finite complex matrix and return it read-only."""
    m = np.array(a, dtype=np.complex128, copy=copy)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise LinalgError(f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinalgError("matrix has non-finite entries")
    m.flags.writeable = False
    return m


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128)


def _check_same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise LinalgError(f"dimension mismatch: {a.shape} vs {b.shape}")


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Return ``AB - BA``."""
    _check_same(a, b)
    return a @ b - b @ a


def trace(a: np.ndarray) -> complex:
    return complex(np.trace(a))


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """``Re(A) = (A + A^*)/2``."""
    return (a + adjoint(a)) / 2


def imaginary_part(a: np.ndarray) -> np.ndarray:
    """``Im(A) = (A - A^*)/(2i)``, Hermitian."""
    return (a - adjoint(a)) / 2j


# ---------------------------------------------------------------------------
# cyclic Jacobi for Hermitian matrices


def eigh_jacobi(
    h: np.ndarray, *, tol: float = 1e-13, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius mass is at most
    ``tol * ||H||_F``.  Returns ascending eigenvalues and the unitary whose
    columns are the matching eigenvectors.
    """
    a = np.array(h, dtype=np.complex128)
    a = (a + a.conj().T) / 2
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = frobenius_norm(a)
    if scale == 0.0 or n == 1:
        return np.real(np.diag(a)).copy(), v
    threshold = tol * scale
    for _ in range(max_sweeps):
        if frobenius_norm(a - np.diag(np.diag(a))) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                if r < 1e-300 + 1e-18 * (abs(app) + abs(aqq)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                ph = apq / r
                theta = (aqq - app) / (2.0 * r)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cph = ph.conjugate()
                # A <- A G with G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on (p, q)
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * cph * colq
                a[:, q] = s * colp + c * cph * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * ph * rowq
                a[q, :] = s * rowp + c * ph * rowq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * cph * vq
                v[:, q] = s * vp + c * cph * vq
    else:
        raise LinalgError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order].copy(), v[:, order].copy()


def eigvalsh(h: np.ndarray) -> np.ndarray:
    return eigh_jacobi(h)[0]


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values in descending order, from the eigenvalues of ``A^* A``."""
    w = eigvalsh(adjoint(a) @ a)
    return np.sqrt(np.clip(w, 0.0, None))[::-1]


def op_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    a = np.asarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise LinalgError("matrix has non-finite entries")
    if not np.any(a):
        return 0.0
    return float(singular_values(a)[0])


def schatten_norm(a: np.ndarray, p: float) -> float:
    """Schatten ``p``-norm ``(sum sigma_i^p)^(1/p)``; ``p = inf`` is the operator norm."""
    if not p >= 1:
        raise LinalgError(f"Schatten index must be >= 1, got {p}")
    s = singular_values(a)
    if math.isinf(p):
        return float(s[0])
    if p == 1:
        return float(np.sum(s))
    return float(np.sum(s**p) ** (1.0 / p))


def abs_trace(h: np.ndarray) -> float:
    """``Tr|H|`` for Hermitian ``H``: sum of absolute eigenvalues."""
    return float(np.sum(np.abs(eigvalsh(h))))


def re_im_trace_bound(v: np.ndarray) -> float:
    """``Tr|Re V| + Tr|Im V|``."""
    return abs_trace(hermitian_part(v)) + abs_trace(imaginary_part(v))


def is_contraction(a: np.ndarray, tol: float = DEFAULT_RTOL) -> bool:
    if tol < 0:
        raise LinalgError("tolerance must be nonnegative")
    return op_norm(a) <= 1.0 + tol


def psd_sqrt(h: np.ndarray, *, clamp: float = 1e-13) -> np.ndarray:
    """Square root of a positive semidefinite Hermitian matrix.

    Eigenvalues below ``clamp * max(1, lambda_max)`` are treated as zero.
    """
    w, u = eigh_jacobi(h)
    cut = clamp * max(1.0, float(np.max(np.abs(w))))
    if np.min(w) < -1e3 * cut:
        raise LinalgError(f"matrix is not positive semidefinite (min eigenvalue {np.min(w):.3e})")
    w = np.where(w < cut, 0.0, w)
    return (u * np.sqrt(w)) @ adjoint(u)


def matrix_power_cache(x: np.ndarray, k: int) -> list[np.ndarray]:
    """``[I, X, X^2, ..., X^k]``."""
    out = [identity(x.shape[0])]
    for _ in range(k):
        out.append(out[-1] @ x)
    return out


def certified_norm(m: np.ndarray, tol: float) -> float:
    """Operator-norm residual of ``m``, short-circuited by the Frobenius bound.

    When ``||m||_F <= tol`` that value is returned as a certified upper bound on
    ``||m||``; otherwise the exact operator norm is computed.
    """
    f = frobenius_norm(m)
    if f <= tol:
        return f
    return op_norm(m)


# ---------------------------------------------------------------------------
# JSON matrix literals: array of rows, each entry a [re, im] pair


def matrix_from_literal(rows: Sequence[Sequence[Sequence[float]]]) -> np.ndarray:
    try:
        arr = np.array(
            [[complex(float(e[0]), float(e[1])) for e in row] for row in rows],
            dtype=np.complex128,
        )
    except (TypeError, IndexError, ValueError) as exc:
        raise LinalgError(f"bad matrix literal: {exc}") from exc
    return as_matrix(arr, copy=False)


def matrix_to_literal(a: np.ndarray) -> list[list[list[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a)]


def dumps_matrix(a: np.ndarray) -> str:
    return json.dumps(matrix_to_literal(a))


def loads_matrix(s: str) -> np.ndarray:
    return matrix_from_literal(json.loads(s))
