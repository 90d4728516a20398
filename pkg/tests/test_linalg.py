import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opshift.linalg import (
    LinalgError,
    abs_trace,
    as_matrix,
    certified_norm,
    commutator,
    dumps_matrix,
    eigh_jacobi,
    hermitian_part,
    imaginary_part,
    is_contraction,
    loads_matrix,
    matrix_from_literal,
    op_norm,
    psd_sqrt,
    re_im_trace_bound,
    schatten_norm,
    singular_values,
)
from opshift.rng import SplitMix64

from conftest import complex_matrix


def hermitian(rng, d):
    g = complex_matrix(rng, d)
    return (g + g.conj().T) / 2


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8, 16])
def test_jacobi_matches_lapack(d):
    h = hermitian(SplitMix64(d), d)
    w, v = eigh_jacobi(h)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-12)
    np.testing.assert_allclose(v.conj().T @ v, np.eye(d), atol=1e-12)
    np.testing.assert_allclose(h @ v, v * w, atol=1e-12)


def test_jacobi_degenerate_spectrum():
    q = np.linalg.qr(complex_matrix(SplitMix64(3), 6))[0]
    h = q @ np.diag([1, 1, 1, -2, -2, 0.5]) @ q.conj().T
    w, v = eigh_jacobi(h)
    np.testing.assert_allclose(w, [-2, -2, 0.5, 1, 1, 1], atol=1e-12)
    np.testing.assert_allclose(h @ v, v * w, atol=1e-12)


@given(st.integers(0, 2**32), st.integers(1, 7))
def test_singular_values_match_svd(seed, d):
    a = complex_matrix(SplitMix64(seed), d)
    np.testing.assert_allclose(singular_values(a), np.linalg.svd(a, compute_uv=False), atol=1e-10)


def test_schatten_norms_diagonal():
    a = np.diag([3.0, 4.0])
    assert schatten_norm(a, 1) == pytest.approx(7.0)
    assert schatten_norm(a, 2) == pytest.approx(5.0)
    assert schatten_norm(a, np.inf) == pytest.approx(4.0)
    with pytest.raises(LinalgError):
        schatten_norm(a, 0.5)


@given(st.integers(0, 2**32), st.integers(1, 6))
def test_schatten_monotone_in_p(seed, d):
    a = complex_matrix(SplitMix64(seed), d)
    s1, s2, sinf = (schatten_norm(a, p) for p in (1, 2, np.inf))
    assert s1 >= s2 - 1e-12 and s2 >= sinf - 1e-12
    assert s2 == pytest.approx(np.linalg.norm(a), rel=1e-12)


@given(st.integers(0, 2**32), st.integers(1, 6))
def test_trace_norm_below_re_im_bound(seed, d):
    v = complex_matrix(SplitMix64(seed), d)
    np.testing.assert_allclose(hermitian_part(v) + 1j * imaginary_part(v), v, atol=1e-14)
    assert schatten_norm(v, 1) <= re_im_trace_bound(v) + 1e-10


def test_abs_trace_and_op_norm_edge_cases():
    assert op_norm(np.zeros((3, 3))) == 0.0
    assert abs_trace(np.diag([1.0, -2.0, 0.0])) == pytest.approx(3.0)
    assert is_contraction(np.eye(2)) and not is_contraction(1.01 * np.eye(2))


@pytest.mark.parametrize("d", [1, 3, 6])
def test_psd_sqrt(d):
    g = complex_matrix(SplitMix64(10 + d), d)
    p = g @ g.conj().T
    r = psd_sqrt(p)
    np.testing.assert_allclose(r @ r, p, atol=1e-10)
    np.testing.assert_allclose(r, r.conj().T, atol=1e-12)
    with pytest.raises(LinalgError):
        psd_sqrt(-np.eye(d))


def test_certified_norm_short_circuit():
    tiny = 1e-14 * np.ones((3, 3))
    assert certified_norm(tiny, 1e-10) == pytest.approx(3e-14)
    big = np.diag([2.0, 0.0, 0.0])
    assert certified_norm(big, 1e-10) == pytest.approx(2.0)


def test_validation_and_literals():
    with pytest.raises(LinalgError):
        as_matrix(np.ones((2, 3)))
    with pytest.raises(LinalgError):
        as_matrix([[np.nan]])
    with pytest.raises(LinalgError):
        commutator(np.eye(2), np.eye(3))
    with pytest.raises(LinalgError):
        matrix_from_literal([[1.0]])
    a = np.array([[1 + 2j, 0.5], [-1j, 3]])
    assert json.loads(dumps_matrix(a))[0][0] == [1.0, 2.0]
    np.testing.assert_array_equal(loads_matrix(dumps_matrix(a)), a)
    m = as_matrix(a)
    with pytest.raises(ValueError):
        m[0, 0] = 0
