"""Eigenstructure tests: every closed form is checked against an
independent oracle (scipy root finding, dense-grid quadrature, or the
package's own adaptive quadrature run on the defining integrals)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson
from scipy.optimize import brentq

from delaypi import (
    PlantParams,
    adaptive_simpson,
    build_basis,
    compute_alpha,
    eigenfunction_matrix,
    eigenfunction_value,
    find_root_rn,
    inner_product,
    inner_products,
    trace_tail,
)

THETAS = [np.pi / 6, np.pi / 4, np.pi / 3, 0.4 * np.pi]


def oracle_root(n: int, theta: float) -> float:
    """Root of r cos r + cot(theta) sin r on (n pi, (n+1) pi) via brentq.

    The polynomial-free form is continuous through the cotangent poles, so
    a plain bracketing solve is a valid independent reference.
    """
    cot = 1.0 / np.tan(theta)

    def g(r):
        return r * np.cos(r) + cot * np.sin(r)

    lo, hi = n * np.pi + 1e-9, (n + 1) * np.pi - 1e-9
    return brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16)


class TestRoots:
    def test_matches_brentq_oracle(self):
        for theta in THETAS:
            for n in (0, 1, 2, 5, 37, 200):
                assert find_root_rn(n, theta) == pytest.approx(
                    oracle_root(n, theta), abs=1e-11)

    def test_quarter_pi_first_root_value(self):
        # Frozen reference: the n = 0 root for theta = pi/4.
        assert find_root_rn(0, np.pi / 4) == pytest.approx(
            2.0287578381104342, abs=1e-12)

    def test_bracketing_and_residual(self):
        for theta in THETAS:
            ns = np.arange(201)
            basis = build_basis(
                PlantParams(a=1.0, b=0.0, c=1.0, theta=theta, h_m=0.5, h_M=1.0),
                201)
            r = basis.r
            assert np.all(r > ns * np.pi)
            assert np.all(r < (ns + 1) * np.pi)
            # Residual of r cot r + cot theta, scaled by max(1, r^2) since
            # the raw residual grows like eps * r^2 near the root.
            g = r / np.tan(r) + 1.0 / np.tan(theta)
            assert np.all(np.abs(g) / np.maximum(1.0, r**2) < 1e-12)

    def test_asymptotic_approach_to_half_integer_grid(self):
        # cot r = -cot(theta)/r -> 0 forces r_n -> (n + 1/2) pi.
        theta = np.pi / 3
        for n in (50, 100, 400):
            r = find_root_rn(n, theta)
            centre = (n + 0.5) * np.pi
            predicted = 1.0 / (np.tan(theta) * centre)
            assert abs(r - centre - predicted) < 2.0 / centre**2

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(min_value=0, max_value=300),
           theta=st.floats(min_value=0.05, max_value=np.pi / 2 - 0.05))
    def test_root_properties(self, n, theta):
        r = find_root_rn(n, theta)
        assert n * np.pi < r < (n + 1) * np.pi
        g = r / np.tan(r) + 1.0 / np.tan(theta)
        assert abs(g) / max(1.0, r * r) < 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            find_root_rn(-1, np.pi / 4)
        with pytest.raises(ValueError):
            find_root_rn(0, 0.0)
        with pytest.raises(ValueError):
            find_root_rn(0, np.pi / 2)


class TestPlantParams:
    def test_validation(self):
        good = dict(a=0.2, b=2.0, c=1.0, theta=np.pi / 3, h_m=0.5, h_M=1.5)
        PlantParams(**good)
        for bad in (dict(a=0.0), dict(a=-1.0), dict(c=0.0),
                    dict(theta=0.0), dict(theta=np.pi / 2),
                    dict(h_m=0.0), dict(h_m=2.0), dict(h_M=0.4)):
            with pytest.raises(ValueError):
                PlantParams(**{**good, **bad})


class TestBasis:
    def test_reference_eigenvalues(self, basis40):
        # First three growth rates of the reference plant, 4-decimal check.
        assert basis40.lam[0] == pytest.approx(2.3005, abs=5e-4)
        assert basis40.lam[1] == pytest.approx(-1.6683, abs=5e-4)
        assert basis40.lam[2] == pytest.approx(-9.5665, abs=5e-4)

    def test_eigenvalue_formula(self, ref_params, basis40):
        lam = ref_params.b + ref_params.c - ref_params.a * basis40.r**2
        np.testing.assert_allclose(basis40.lam, lam, rtol=0, atol=1e-12)

    def test_orthonormality_dense_simpson(self, basis40):
        # Gram matrix of the first 12 modes on an 8001-point Simpson grid.
        xs = np.linspace(0.0, 1.0, 8001)
        E = eigenfunction_matrix(basis40, xs, count=12)
        gram = np.array([[simpson(E[:, i] * E[:, j], x=xs)
                          for j in range(12)] for i in range(12)])
        assert np.max(np.abs(gram - np.eye(12))) < 1e-8

    def test_eigenfunction_solves_equation(self, ref_params, basis40):
        # Second-difference check of a e'' + b e = (b - a r^2) e on a grid.
        xs = np.linspace(0.1, 0.9, 33)
        hstep = 1e-4
        for n in (0, 3, 9):
            e0 = eigenfunction_value(basis40, n, xs)
            epp = (eigenfunction_value(basis40, n, xs + hstep)
                   - 2.0 * e0
                   + eigenfunction_value(basis40, n, xs - hstep)) / hstep**2
            np.testing.assert_allclose(
                epp, -basis40.r[n] ** 2 * e0,
                rtol=1e-5, atol=1e-5 * basis40.r[n] ** 2)

    def test_robin_condition_at_right_end(self, ref_params, basis40):
        # cos(theta) e_n(1) + sin(theta) e_n'(1) = 0.
        kappa = basis40.ed0 / basis40.r
        ed1 = kappa * basis40.r * np.cos(basis40.r)
        resid = (np.cos(ref_params.theta) * basis40.e1
                 + np.sin(ref_params.theta) * ed1)
        assert np.max(np.abs(resid) / basis40.r) < 1e-12

    def test_derivative_at_origin(self, basis40):
        hstep = 1e-6
        for n in (0, 5, 20):
            fd = eigenfunction_value(basis40, n, hstep) / hstep
            assert fd == pytest.approx(basis40.ed0[n], rel=1e-4)


class TestCoefficients:
    def test_gain_identity_exact(self, ref_params, basis40):
        # a_n + lambda_n b_n collapses to a e_n'(0): the closed forms must
        # reproduce it at full precision for every computed mode.
        lhs = basis40.a_n + basis40.lam * basis40.b_n
        rhs = ref_params.a * basis40.ed0
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=0)

    def test_b_n_against_quadrature(self, basis40):
        # b_n = -<(1-x)^2, e_n>.
        for n in (0, 1, 2, 7, 19, 39):
            val = inner_product(lambda x: (1.0 - x) ** 2, basis40, n, tol=1e-12)
            assert basis40.b_n[n] == pytest.approx(-val, abs=1e-8)

    def test_a_n_against_quadrature(self, ref_params, basis40):
        # a_n = <2a + (b+c)(1-x)^2, e_n>  (drift applied to the lift).
        a, bc = ref_params.a, ref_params.b + ref_params.c

        def f(x):
            return 2.0 * a + bc * (1.0 - x) ** 2

        for n in (0, 1, 2, 7, 19, 39):
            val = inner_product(f, basis40, n, tol=1e-12)
            assert basis40.a_n[n] == pytest.approx(val, abs=1e-8)

    def test_inner_product_against_dense_simpson(self, basis40):
        xs = np.linspace(0.0, 1.0, 20001)
        f = xs * (1.0 - xs) ** 2
        for n in (0, 4, 11):
            dense = simpson(f * eigenfunction_value(basis40, n, xs), x=xs)
            adaptive = inner_product(lambda x: x * (1.0 - x) ** 2, basis40, n)
            assert adaptive == pytest.approx(dense, abs=1e-9)

    def test_finite_combination_recovered_exactly(self, basis40):
        # f = 3 e_2 - 0.5 e_7 must project back onto exactly those modes.
        def f(x):
            return (3.0 * eigenfunction_value(basis40, 2, x)
                    - 0.5 * eigenfunction_value(basis40, 7, x))

        coef = inner_products(f, basis40, count=12, tol=1e-12)
        expected = np.zeros(12)
        expected[2], expected[7] = 3.0, -0.5
        np.testing.assert_allclose(coef, expected, rtol=0, atol=1e-10)

    def test_lift_series_at_right_end_cancels(self, basis40, basis80, ref_params):
        # The lift profile vanishes at x = 1, so partial sums of
        # sum_n <(1-x)^2, e_n> e_n(1) must head to zero.
        big = build_basis(ref_params, 201)
        terms = -big.b_n * big.e1
        s20 = terms[:21].sum()
        s200 = terms[:201].sum()
        assert abs(s200) < abs(s20)
        assert abs(s200) < 0.05


class TestAlpha:
    def test_reference_value(self, basis40):
        alpha = compute_alpha(basis40, 1, tol=1e-10)
        assert alpha.value == pytest.approx(0.20771931116, abs=5e-9)
        assert alpha.remainder <= 1e-10 * 10.0 + 1e-9

    def test_remainder_bounds_refinement(self, basis40):
        coarse = compute_alpha(basis40, 1, tol=1e-6)
        fine = compute_alpha(basis40, 1, tol=1e-12)
        assert abs(coarse.value - fine.value) <= coarse.remainder
        assert fine.remainder < coarse.remainder

    def test_tail_difference_identity(self, ref_params):
        # tail(start) - tail(start + 150) == the 150 middle terms, summed
        # directly from the basis arrays.
        big = build_basis(ref_params, 160)
        start = 5
        mid = (big.a_n[start:155] / big.lam[start:155] * big.e1[start:155]).sum()
        t_lo, _, _ = trace_tail(ref_params, start, tol=1e-11)
        t_hi, _, _ = trace_tail(ref_params, 155, tol=1e-11)
        assert t_lo - t_hi == pytest.approx(mid, abs=5e-10)

    def test_tail_terms_alternate_at_depth(self, ref_params):
        # Far terms follow ~(-1)^(n+1) 2 (2a+b+c) / (a r_n^3): signs must
        # alternate once the asymptote dominates.
        big = build_basis(ref_params, 400)
        terms = big.a_n / big.lam * big.e1
        tail = terms[300:]
        assert np.all(tail[:-1] * tail[1:] < 0.0)


class TestQuadratureUtility:
    def test_polynomial_exact(self):
        assert adaptive_simpson(lambda x: x**3, 0.0, 2.0) == pytest.approx(
            4.0, abs=1e-12)

    def test_vector_integrand(self):
        out = adaptive_simpson(
            lambda x: np.stack([np.sin(x), np.cos(x)], axis=1), 0.0, np.pi)
        np.testing.assert_allclose(out, [2.0, 0.0], atol=1e-10)

    def test_empty_interval(self):
        assert adaptive_simpson(np.sin, 1.0, 1.0) == 0.0
