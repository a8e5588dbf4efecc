import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from resonant_kg.basis import (BasisKind, eval_hopf_e, eval_spherical_e, hopf_operator_residual,
                               hopf_quadrature, integral_space4, integral_space6, integral_time_product,
                               jacobi, jacobi_derivative, make_basis, omega, omegas,
                               product_rule_indices, quadrature_product_integral, space4_bound,
                               space6_bound, spherical_quadrature)

MOMENTA = [(0, 0), (1, 2), (2, 1), (3, 0), (-2, 5), (0, 1)]


def test_spherical_frequencies():
    assert omegas(BasisKind.spherical(), 4).tolist() == [1, 2, 3, 4, 5]
    assert omega(BasisKind.spherical(), 7) ** 2 == 64


def test_hopf_frequencies():
    k = BasisKind.hopf(1, -2)
    assert [omega(k, j) for j in range(3)] == [4, 6, 8]


def test_spherical_e_matches_sympy_chebyshev():
    x = sp.symbols("x")
    for n in range(6):
        f = sp.lambdify(x, sp.sin((n + 1) * x) / sp.sin(x))
        xs = np.linspace(0.1, 3.0, 9)
        assert np.allclose(eval_spherical_e(n, xs), f(xs), rtol=1e-13, atol=1e-13)


def test_spherical_e_endpoints():
    assert eval_spherical_e(3, np.array([0.0]))[0] == pytest.approx(4.0)
    assert eval_spherical_e(3, np.array([np.pi]))[0] == pytest.approx(-4.0)


def test_spherical_e_is_laplacian_eigenfunction():
    # -(1/sin^2)(d/dx)(sin^2 d/dx) e + e = omega^2 e, checked symbolically
    x = sp.symbols("x")
    for n in range(5):
        e = sp.sin((n + 1) * x) / sp.sin(x)
        lap = sp.diff(sp.sin(x) ** 2 * sp.diff(e, x), x) / sp.sin(x) ** 2
        assert sp.simplify(-lap + e - (n + 1) ** 2 * e) == 0


def test_jacobi_derivative_against_sympy():
    c = sp.symbols("c")
    for n, a, b in [(3, 1, 2), (4, 0, 3), (2, 5, 1)]:
        P = sp.jacobi(n, a, b, c)
        for k in (1, 2):
            f = sp.lambdify(c, sp.diff(P, c, k))
            cs = np.linspace(-0.9, 0.9, 7)
            assert np.allclose(jacobi_derivative(n, a, b, cs, k), f(cs), rtol=1e-12)
        assert np.allclose(jacobi(n, a, b, cs), sp.lambdify(c, P)(cs), rtol=1e-12)


@pytest.mark.parametrize("mu", MOMENTA)
def test_hopf_orthonormal(mu):
    b = make_basis(BasisKind.hopf(*mu), 12, 3)
    assert np.max(np.abs(b.gram() - np.eye(13))) < 1e-10


@pytest.mark.parametrize("mu", MOMENTA)
def test_hopf_eigen_residual(mu):
    kind = BasisKind.hopf(*mu)
    eta = np.linspace(0.02, np.pi / 2 - 0.02, 31)
    for j in range(8):
        r = hopf_operator_residual(j, *mu, eta)
        assert np.max(np.abs(r)) / omega(kind, j) ** 2 < 1e-10


def test_hopf_eigen_residual_symbolic():
    # operator in c = cos 2 eta on (1-c)^{a/2}(1+c)^{b/2} P_j^{(a,b)}
    c = sp.symbols("c")
    for (m1, m2), j in [((1, 2), 2), ((0, 0), 3), ((3, 0), 1)]:
        k = BasisKind.hopf(m1, m2)
        a, b = k.a, k.b
        f = (1 - c) ** sp.Rational(a, 2) * (1 + c) ** sp.Rational(b, 2) * sp.jacobi(j, a, b, c)
        lap = 4 * (1 - c ** 2) * sp.diff(f, c, 2) - 8 * c * sp.diff(f, c) \
            - (2 * a ** 2 / (1 - c) + 2 * b ** 2 / (1 + c)) * f
        expr = sp.simplify((-lap + f - omega(k, j) ** 2 * f) / f)
        assert expr == 0


def test_hopf_e_not_identically_zero():
    eta = np.linspace(0.1, 1.4, 5)
    assert np.any(eval_hopf_e(2, 1, 2, eta) != 0)


def test_spherical_quadrature_exactness():
    q = spherical_quadrature(10)
    # int e_n e_m = delta exact up to degree 2*10 - 1 in cos x
    b = make_basis(BasisKind.spherical(), 9, 1)
    assert np.max(np.abs(b.gram() - np.eye(10))) < 1e-10
    assert q.weights.sum() == pytest.approx(1.0)


def test_hopf_quadrature_mass():
    q = hopf_quadrature(12)
    assert q.weights.sum() == pytest.approx(1.0)


def test_product_rule_pointwise(rng):
    x = rng.uniform(0, np.pi, 64)
    for n, m in itertools.product(range(7), repeat=2):
        lhs = eval_spherical_e(n, x) * eval_spherical_e(m, x)
        rhs = sum(eval_spherical_e(k, x) for k in product_rule_indices(n, m))
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.maximum(1, np.abs(lhs)))


def test_time_integral_values():
    assert integral_time_product([1] * 6) == Fraction(5, 8)
    assert integral_time_product([]) == 2
    assert integral_time_product([0]) == 2
    assert integral_time_product([1, 1]) == 1
    assert integral_time_product([1, 2]) == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=8), st.randoms(use_true_random=False))
def test_time_integral_symmetric_and_quadrature(freqs, r):
    perm = list(freqs)
    r.shuffle(perm)
    assert integral_time_product(freqs) == integral_time_product(perm)
    t = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    f = np.prod([np.cos(k * t) for k in freqs], axis=0)
    # mean over a period times the mass 2 of dt/pi; exact for trig polys
    assert abs(float(integral_time_product(freqs)) - 2 * f.mean()) < 1e-12


def test_space_integrals_small_exhaustive():
    b = make_basis(BasisKind.spherical(), 5, 5)
    for js in itertools.combinations_with_replacement(range(5), 6):
        assert integral_space6(js) == pytest.approx(quadrature_product_integral(b, js), abs=1e-10)
    for js in itertools.combinations_with_replacement(range(5), 4):
        assert integral_space4(js) == pytest.approx(quadrature_product_integral(b, js), abs=1e-10)


def test_known_space_values():
    assert integral_space6((0, 0, 0, 0, 1, 1)) == 1
    assert integral_space4((1, 1, 1, 1)) == 2
    assert integral_space4((0, 0, 0, 0)) == 1


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 40), min_size=6, max_size=6))
def test_space_bounds_property(js):
    I = integral_space6(js)
    assert 0 <= I <= space6_bound(js)
    I4 = integral_space4(js[:4])
    assert 0 <= I4 <= space4_bound(js[:4])


@settings(max_examples=50, deadline=None)
@given(st.permutations([0, 1, 2, 3, 4, 5]))
def test_space6_symmetric(perm):
    js = [2, 3, 3, 5, 6, 7]
    assert integral_space6([js[i] for i in perm]) == integral_space6(js)


def test_hopf_rejects_closed_form():
    with pytest.raises(ValueError):
        integral_space6((0,) * 6, BasisKind.hopf(1, 2))
    with pytest.raises(ValueError):
        integral_space4((0,) * 4, BasisKind.hopf(1, 2))


def test_basis_cache_returns_same_object():
    assert make_basis(BasisKind.spherical(), 8, 5) is make_basis(BasisKind.spherical(), 8, 5)
