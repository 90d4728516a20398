import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opshift.calculus import (
    REAL_CUBE,
    AnalyticFunction,
    CalculusError,
    OperatorTuple,
    dd_integral,
    delta_integral,
    delta_operator,
    divided_difference,
    eval_function,
    eval_ordered,
    exp_truncated,
    mixed_partial,
    monomial_compress,
    monomial_dd_expansion,
    multi_indices,
    partial_derivative,
    partial_divided_difference,
    random_polynomial,
    sup_norm_estimate,
)
from opshift.rng import SplitMix64, haar_unitary, unit_disc_points

from conftest import commuting_normal_tuple


def brute_dd(g, pts):
    """Recursive definition, derivative branch for repeated points."""
    pts = list(pts)
    if len(pts) == 1:
        return complex(g(np.array([pts[0]])))
    if len(set(pts)) == 1:
        r = len(pts) - 1
        return complex(partial_derivative(g, 0, r)(np.array([pts[0]]))) / math.factorial(r)
    # move a point distinct from the last one to the front
    i = next(i for i, p in enumerate(pts) if p != pts[-1])
    pts[0], pts[i] = pts[i], pts[0]
    return (brute_dd(g, pts[:-1]) - brute_dd(g, pts[1:])) / (pts[0] - pts[-1])


def z(n, j):
    return AnalyticFunction.coordinate(n, j)


# -- the function type ------------------------------------------------------


def test_construction_and_literals():
    f = AnalyticFunction(2, {(3, 1): 1.0, (0, 0): 0.0})
    assert f.degree == 4 and f.coeffs == {(3, 1): 1.0}
    assert f.partial_degree(0) == 3
    lit = {"coeffs": [{"k": [3, 1], "re": 1.0, "im": 0.0}], "domain_kind": "real_cube", "radius": 1.2}
    g = AnalyticFunction.from_literal(lit)
    assert g.domain_kind == REAL_CUBE and g.radius == 1.2
    h = AnalyticFunction.from_literal(g.to_literal())
    assert h.coeffs == g.coeffs
    assert AnalyticFunction.from_literal([{"k": [1], "re": 2, "im": -1}]).coeffs == {(1,): 2 - 1j}
    with pytest.raises(CalculusError):
        AnalyticFunction.from_literal([])
    with pytest.raises(CalculusError):
        AnalyticFunction(2, {(1,): 1.0})


def test_multi_indices_graded():
    ks = multi_indices(2, 2)
    assert ks[0] == (0, 0) and len(ks) == 6
    assert [sum(k) for k in ks] == sorted(sum(k) for k in ks)


def test_polynomial_algebra_pointwise():
    r = SplitMix64(1)
    f, g = random_polynomial(r, 2, 3), random_polynomial(r, 2, 2)
    pts = r.complex_normals((7, 2))
    np.testing.assert_allclose((f * g)(pts), f(pts) * g(pts), atol=1e-13)
    np.testing.assert_allclose((f - g)(pts), f(pts) - g(pts), atol=1e-13)
    np.testing.assert_allclose((2j * f)(pts), 2j * f(pts), atol=1e-13)


def test_exp_truncation_certificate():
    f = exp_truncated(12, radius=1.1)
    assert abs(f(np.array([0.7])) - np.exp(0.7)) <= f.tail_bound
    assert 0 < f.tail_bound < 1e-8


# -- evaluation on tuples -----------------------------------------------------


def test_eval_function_trivial_cases():
    a = np.diag([1.0, 0.0])
    x = OperatorTuple((a, a))
    f = AnalyticFunction.monomial((3, 1))
    np.testing.assert_allclose(eval_function(f, x), a)
    np.testing.assert_allclose(eval_function(AnalyticFunction.constant(2), x), np.eye(2))


def test_eval_function_rejects_bad_input():
    x = OperatorTuple((np.diag([1.0, 0.0]), np.array([[0, 1], [1, 0.0]])))
    with pytest.raises(CalculusError):
        eval_function(AnalyticFunction.monomial((1, 1)), x)
    with pytest.raises(CalculusError):
        eval_function(AnalyticFunction.monomial((1,)), x)
    eval_function(AnalyticFunction.monomial((1, 1)), x, strict=False)


@pytest.mark.parametrize("seed", range(5))
def test_eval_matches_spectral_evaluation(seed):
    r = SplitMix64(seed)
    d = 4
    q = haar_unitary(r, d)
    d1, d2 = unit_disc_points(r, d), unit_disc_points(r, d)
    x = OperatorTuple((q @ np.diag(d1) @ q.conj().T, q @ np.diag(d2) @ q.conj().T))
    f = random_polynomial(r, 2, 5)
    expect = q @ np.diag(f(np.stack([d1, d2], axis=1))) @ q.conj().T
    np.testing.assert_allclose(eval_function(f, x), expect, atol=1e-10)


@given(st.integers(0, 2**32))
def test_eval_is_an_algebra_homomorphism(seed):
    r = SplitMix64(seed)
    x = commuting_normal_tuple(r, 2, 4)
    f, g = random_polynomial(r, 2, 4), random_polynomial(r, 2, 4)
    np.testing.assert_allclose(eval_function(f * g, x), eval_function(f, x) @ eval_function(g, x), atol=1e-10)


@given(st.integers(0, 2**32))
def test_evaluation_order_irrelevant_for_commuting(seed):
    r = SplitMix64(seed)
    x = commuting_normal_tuple(r, 3, 3)
    f = random_polynomial(r, 3, 4)
    rev = AnalyticFunction(3, {k[::-1]: c for k, c in f.coeffs.items()})
    np.testing.assert_allclose(eval_function(f, x), eval_ordered(rev, x.mats[::-1]), atol=1e-11)


@given(st.integers(0, 2**32))
def test_monomial_compress_semigroup(seed):
    r = SplitMix64(seed)
    x = commuting_normal_tuple(r, 3, 4)
    k = tuple(int(v) for v in r.uniforms(3, 0, 4))
    m = tuple(int(v) for v in r.uniforms(3, 0, 4))
    km = tuple(a + b for a, b in zip(k, m))
    np.testing.assert_allclose(monomial_compress(x, k) @ monomial_compress(x, m), monomial_compress(x, km), atol=1e-11)


def test_monomial_compress_trivial():
    x = commuting_normal_tuple(SplitMix64(0), 2, 3)
    np.testing.assert_allclose(monomial_compress(x, (0, 0)), np.eye(3))
    np.testing.assert_allclose(monomial_compress(x, (0, 1)), x[1])
    # suffix form starting at the second coordinate
    np.testing.assert_allclose(monomial_compress(x, (2,), start=1), x[1] @ x[1], atol=1e-14)


def test_operator_tuple_flags():
    x = commuting_normal_tuple(SplitMix64(4), 2, 4, selfadjoint=True)
    assert x.commuting and x.normal and x.selfadjoint and x.contractive
    cert = x.certificate()
    assert all(v["residual"] <= 1e-12 for v in cert.values() if v["residual"] is not None)
    y = OperatorTuple((np.array([[0, 2.0], [0, 0]]),))
    assert not y.normal and not y.contractive and y.commuting


# -- derivatives and sup norms ----------------------------------------------


def test_partial_derivative_examples():
    f = AnalyticFunction.monomial((3, 1))
    assert partial_derivative(f, 0).coeffs == {(2, 1): 3}
    assert partial_derivative(f, 1).coeffs == {(3, 0): 1}
    assert mixed_partial(f, (0, 1)).coeffs == {(2, 0): 3}


@given(st.integers(0, 2**32))
def test_partial_derivative_vs_finite_difference(seed):
    r = SplitMix64(seed)
    f = random_polynomial(r, 3, 5)
    p = r.complex_normals((3,)) * 0.5
    h = 1e-5
    for j in range(3):
        e = np.zeros(3, complex)
        e[j] = h
        fd = (f(p + e) - f(p - e)) / (2 * h)
        exact = partial_derivative(f, j)(p)
        assert abs(fd - exact) <= 1e-8 * max(1.0, abs(exact))


def test_sup_norm_examples():
    assert sup_norm_estimate(z(1, 0), 64).lower == pytest.approx(1.0)
    assert sup_norm_estimate(z(2, 0) + z(2, 1), 64).lower == pytest.approx(2.0)
    with pytest.raises(CalculusError):
        sup_norm_estimate(z(1, 0), 4)


def test_sup_norm_against_sampling():
    f = z(2, 0) * z(2, 0) * z(2, 1) - z(2, 1)
    est = sup_norm_estimate(f, 256)
    rs = np.random.default_rng(0)
    ang = rs.uniform(0, 2 * np.pi, size=(10**6, 2))
    sampled = np.max(np.abs(f(np.exp(1j * ang))))
    assert est.lower >= sampled - 1e-3
    assert est.upper >= sampled


@given(st.integers(0, 2**32))
def test_sup_upper_bound_is_certified(seed):
    r = SplitMix64(seed)
    kind = "real_cube" if seed % 2 else "polydisc"
    f = random_polynomial(r, 2, 5, domain_kind=kind)
    est = sup_norm_estimate(f, 16)
    if kind == "polydisc":
        pts = np.exp(2j * np.pi * r.uniforms(4000).reshape(2000, 2))
    else:
        pts = r.uniforms(4000, -1, 1).reshape(2000, 2).astype(complex)
    assert np.max(np.abs(f(pts))) <= est.upper + 1e-12


# -- divided differences ----------------------------------------------------


def test_divided_difference_examples():
    sq = AnalyticFunction.univariate([0, 0, 1])
    assert divided_difference(sq, [2.0, 5.0]) == pytest.approx(7.0)
    assert divided_difference(sq, [1.0, 1.0]) == pytest.approx(2.0)
    assert divided_difference(sq, [3.0]) == pytest.approx(9.0)


@pytest.mark.parametrize("seed", range(6))
def test_divided_difference_vs_quadrature(seed):
    r = SplitMix64(seed)
    g = random_polynomial(r, 1, 6)
    pts = list(unit_disc_points(r, 3))
    assert abs(divided_difference(g, pts) - dd_integral(g, pts, nodes=32)) <= 1e-9


@given(st.integers(0, 2**32), st.integers(1, 4))
def test_divided_difference_symmetry_and_recursion(seed, r_order):
    r = SplitMix64(seed)
    g = random_polynomial(r, 1, 6)
    pts = list(unit_disc_points(r, r_order + 1))
    if seed % 3 == 0:
        pts[-1] = pts[0]  # confluent
    base = divided_difference(g, pts)
    assert abs(base - brute_dd(g, pts)) <= 1e-9 * max(1.0, abs(base))
    for _ in range(20):
        perm = [pts[int(i)] for i in np.argsort(r.uniforms(len(pts)))]
        assert abs(divided_difference(g, perm) - base) <= 1e-12 * max(1.0, abs(base))


def test_partial_divided_difference_examples():
    f = z(2, 0) * z(2, 1)
    assert partial_divided_difference(f, 1, [0.3, 0.9], [0.25, 0]) == pytest.approx(0.25)
    g = z(2, 0) * z(2, 0)
    assert partial_divided_difference(g, 1, [0.3, 0.9], [0.5, 0]) == 0
    phi = AnalyticFunction.monomial((3, 2))
    got = partial_divided_difference(phi, 0, [0.2, 0.5, 0.5], [0.0, 0.7])
    slice_ = AnalyticFunction.univariate([0, 0, 0, 0.49])
    assert abs(got - brute_dd(slice_, [0.2, 0.5, 0.5])) <= 1e-12


@given(st.integers(0, 2**32), st.integers(1, 3))
def test_divided_difference_factorial_bound(seed, order):
    r = SplitMix64(seed)
    phi = random_polynomial(r, 2, 6)
    pts = list(unit_disc_points(r, order + 1))
    fixed = list(unit_disc_points(r, 2))
    val = abs(partial_divided_difference(phi, 0, pts, fixed))
    sup = sup_norm_estimate(partial_derivative(phi, 0, order), 64).upper
    assert val <= sup / math.factorial(order) + 1e-12


def test_delta_operator_examples():
    f = z(2, 0) * z(2, 1)
    assert delta_operator(f, [(0, 0.3)], [0.1, 0.6]) == pytest.approx(0.6)
    assert delta_operator(f, [(0, 0.3), (1, -0.2j)], [0.1, 0.6]) == pytest.approx(1.0)
    with pytest.raises(CalculusError):
        delta_operator(f, [(0, 0.0)], [0.1, 0.6])


@given(st.integers(0, 2**32))
def test_delta_operator_vs_box_integral(seed):
    r = SplitMix64(seed)
    phi = random_polynomial(r, 2, 4)
    p = unit_disc_points(r, 2) * 0.5
    steps = [(0, 0.3), (1, -0.2j)]
    val = delta_operator(phi, steps, p)
    assert abs(val - delta_integral(phi, steps, p, nodes=8)) <= 1e-10
    assert abs(val - delta_operator(phi, steps[::-1], p)) <= 1e-12


@given(st.integers(0, 2**32))
def test_delta_operator_bound(seed):
    r = SplitMix64(seed)
    phi = random_polynomial(r, 2, 5)
    p = unit_disc_points(r, 2) * 0.5
    h = unit_disc_points(r, 2) * 0.5
    val = abs(delta_operator(phi, [(0, h[0]), (1, h[1])], p))
    assert val <= sup_norm_estimate(mixed_partial(phi, (0, 1)), 64).upper + 1e-12


def test_monomial_expansion_examples():
    sq = AnalyticFunction.monomial((2,))
    assert monomial_dd_expansion(sq, [0.4], j=0, h_j=0.3) == pytest.approx(1.0)
    f = z(2, 0) * z(2, 1)
    assert monomial_dd_expansion(f, [0.4, 0.1], j=1, h_j=0.3, i=0, h_i=0.2) == pytest.approx(1.0)


@given(st.integers(0, 2**32))
def test_monomial_expansions_match_differences(seed):
    r = SplitMix64(seed)
    f = random_polynomial(r, 3, 5)
    p = unit_disc_points(r, 3)
    h = unit_disc_points(r, 2) * 0.5
    same = monomial_dd_expansion(f, p, j=1, h_j=h[0])
    ref = partial_divided_difference(f, 1, [p[1] + h[0], p[1] + h[0], p[1]], p)
    assert abs(same - ref) <= 1e-11
    mixed = monomial_dd_expansion(f, p, j=2, h_j=h[1], i=0, h_i=h[0])
    assert abs(mixed - delta_operator(f, [(0, h[0]), (2, h[1])], p)) <= 1e-11


@pytest.mark.parametrize("n,steps", [(2, [(0, 0.2)]), (3, [(0, 0.1), (1, 0.2), (2, -0.3)])])
def test_delta_permutation_invariance(n, steps):
    phi = random_polynomial(SplitMix64(n), n, 5)
    p = unit_disc_points(SplitMix64(n + 1), n) * 0.5
    vals = [delta_operator(phi, list(s), p) for s in itertools.permutations(steps)]
    assert max(abs(v - vals[0]) for v in vals) <= 1e-12
