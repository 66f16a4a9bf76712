import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate

from selfsim.errors import DomainError, PoleError, PreconditionError
from selfsim.qseries import (
    QParam,
    basic_phi,
    bilateral_psi,
    psi01_product,
    q_exp_big,
    q_exp_small,
    qbracket,
    qfactorial,
    qpochhammer,
    qpochhammer_seq,
    ramanujan_1psi1_product,
    ramanujan_beta_integral,
)


class TestQParam:
    def test_regimes(self):
        assert QParam(0.5).regime == "sub_unit"
        assert QParam(-0.3).regime == "sub_unit"
        assert QParam(1.0).regime == "unit"
        assert QParam(-1.0).regime == "unit"
        assert QParam(1.5).regime == "super_unit"
        w = QParam(np.exp(2j * np.pi / 3))
        assert w.regime == "root_of_unity" and w.M == 3

    def test_invalid(self):
        with pytest.raises(PreconditionError):
            QParam(0.0)
        with pytest.raises(PreconditionError):
            QParam(0.5, regime="unit")
        with pytest.raises(PreconditionError):
            QParam(np.exp(2j * np.pi / 3), regime="root_of_unity", M=4)


class TestPochhammer:
    def test_empty_product(self):
        assert qpochhammer(3.7, 0.5, 0).value == 1.0

    def test_infinite_vs_direct(self):
        direct = np.prod(1 - 0.5 ** np.arange(1, 201))
        assert qpochhammer(0.5, QParam(0.5), np.inf).value == pytest.approx(direct, rel=1e-15)

    def test_negative_index(self):
        a, q = 0.3, 0.5
        expected = (-q / a) / (1 - q / a)
        assert qpochhammer(a, q, -1).value == pytest.approx(expected, rel=1e-15)
        # (a;q)_{-n} = 1 / (a q^{-n}; q)_n
        for n in range(1, 6):
            inv = qpochhammer(a * q**-n, q, n).value
            assert qpochhammer(a, q, -n).value == pytest.approx(1 / inv, rel=1e-13)

    def test_errors(self):
        with pytest.raises(DomainError):
            qpochhammer(0.3, 1.2, np.inf)
        with pytest.raises(PoleError):
            qpochhammer(0.5, 0.5, -2)  # q/a = 1

    def test_seq(self):
        seq = qpochhammer_seq(0.3, 0.6, 10)
        for n in range(11):
            assert seq[n] == pytest.approx(qpochhammer(0.3, 0.6, n).value, rel=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(
        a=st.floats(-2, 2),
        q=st.floats(-0.95, 0.95).filter(lambda v: abs(v) > 0.05),
        m=st.integers(0, 25),
        n=st.integers(0, 25),
    )
    def test_concatenation(self, a, q, m, n):
        lhs = qpochhammer(a, q, m + n).value
        rhs = qpochhammer(a, q, m).value * qpochhammer(a * q**m, q, n).value
        assert abs(lhs - rhs) <= 1e-13 * max(1.0, abs(lhs))


class TestBracket:
    def test_values(self):
        assert qbracket(0, 0.3) == 0
        assert qfactorial(0, 0.3) == 1
        assert qbracket(2, 0.5) == pytest.approx(1.25, rel=1e-15)
        assert qbracket(3, QParam(1.0)) == 3
        assert qfactorial(5, -1.0) == 120

    def test_monotone_classical_limit(self):
        vals = [qbracket(7, 1 - eps) for eps in (1e-1, 1e-2, 1e-3, 1e-5, 1e-8)]
        assert all(np.diff(vals) > 0)
        assert abs(vals[-1] - 7) < 1e-6

    def test_factorial_limit(self):
        assert qfactorial(10, 1 - 1e-10) == pytest.approx(math.factorial(10), rel=1e-7)


class TestExponentials:
    def test_small_trivial(self):
        assert q_exp_small(0, 0.25).value == 1

    def test_small_dual_forms(self):
        prod = q_exp_small(0.3, 0.25).value
        ser = q_exp_small(0.3, 0.25, form="series").value
        assert abs(prod - ser) < 1e-12

    @pytest.mark.parametrize("z", [0.1, -0.7, 0.5 + 0.3j, 2.5, -4.0])
    def test_small_functional_identity(self, z):
        q2 = 0.25
        assert q_exp_small(z, q2).value * (1 - z) == pytest.approx(q_exp_small(q2 * z, q2).value, rel=1e-13)

    def test_small_pole(self):
        with pytest.raises(PoleError):
            q_exp_small(1 / 0.25**2, 0.25)

    def test_small_series_out_of_domain(self):
        assert not q_exp_small(1.2, 0.25, form="series").in_domain

    def test_big_trivial(self):
        assert q_exp_big(0, 0.25).value == 1

    def test_big_dual_forms(self):
        prod = q_exp_big(1.7, 0.25).value
        ser = q_exp_big(1.7, 0.25, form="series").value
        assert abs(prod - ser) < 1e-12 * abs(prod)

    @pytest.mark.parametrize("z", [0.3, 1.7, -0.4, 3 - 2j])
    def test_big_functional_identity(self, z):
        p = 0.25
        assert q_exp_big(z, p).value == pytest.approx((1 + z) * q_exp_big(p * z, p).value, rel=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(r=st.floats(0, 0.95), t=st.floats(0, 2 * np.pi), q2=st.floats(0.05, 0.8))
    def test_forms_agree_in_unit_disk(self, r, t, q2):
        z = r * np.exp(1j * t)
        for f in (q_exp_small, q_exp_big):
            a, b = f(z, q2).value, f(z, q2, form="series").value
            assert abs(a - b) <= 1e-12 * max(1, abs(a))


class TestBasicPhi:
    def test_trivial(self):
        assert basic_phi([], [], 0.5, 0).value == 1

    def test_1phi0_zero_is_small_exponential(self):
        assert basic_phi([0], [], 0.25, 0.4).value == pytest.approx(q_exp_small(0.4, 0.25).value, rel=1e-14)

    def test_divergent_flagged(self):
        assert not basic_phi([0], [], 0.25, 1.5).in_domain
        assert not basic_phi([0.2, 0.3, 0.4], [0.1], 0.5, 0.1).in_domain

    def test_terminating(self):
        # 2phi1(q^-3, b; c; q, z) terminates after four terms
        q, b, c, z = 0.5, 0.3, 0.7, 2.0
        val = basic_phi([q**-3, b], [c], q, z)
        assert val.in_domain
        direct = sum(
            qpochhammer(q**-3, q, n).value * qpochhammer(b, q, n).value
            / (qpochhammer(q, q, n).value * qpochhammer(c, q, n).value) * z**n
            for n in range(4)
        )
        assert val.value == pytest.approx(direct, rel=1e-14)

    def test_q_binomial_theorem(self):
        # 1phi0(a; q, z) = (az;q)_inf / (z;q)_inf
        a, q, z = 0.4, 0.6, 0.35
        expected = qpochhammer(a * z, q).value / qpochhammer(z, q).value
        assert basic_phi([a], [], q, z).value == pytest.approx(expected, rel=1e-13)

    def test_pole(self):
        with pytest.raises(PoleError):
            basic_phi([0.3], [0.5**-2], 0.5, 0.1)

    def test_error_estimate_a_posteriori(self):
        q, z = 0.7, 0.6
        coarse = basic_phi([0.2], [0.4], q, z, tol=1e-10)
        fine = basic_phi([0.2], [0.4], q, z, tol=1e-18)
        assert abs(coarse.value - fine.value) <= coarse.est_error + 1e-15


class TestBilateral:
    def test_divergence_flag(self):
        # 0psi0 has no convergence annulus
        assert not bilateral_psi([], [], 0.5, 0.3).in_domain

    def test_spec_point_outside_annulus(self):
        # |b/a| = 7/3 > z: the series diverges on the negative side
        assert not bilateral_psi([0.3], [0.7], 0.5, 0.45).in_domain

    def test_ramanujan_sum(self):
        a, b, q, z = 0.7, 0.3, 0.5, 0.45
        val = bilateral_psi([a], [b], q, z)
        assert val.in_domain
        assert val.value == pytest.approx(ramanujan_1psi1_product(a, b, q, z), rel=1e-12)

    def test_complex_arguments(self):
        for a, b, z in [(0.3 + 0.1j, 0.2, 0.8), (0.7, 0.3, 0.45 + 0.2j)]:
            val = bilateral_psi([a], [b], 0.5, z)
            assert abs(val.value - ramanujan_1psi1_product(a, b, 0.5, z)) < 1e-12 * abs(val.value)

    def test_large_terms_near_inner_edge(self):
        # negative-side terms reach ~8e5 while the sum is ~0.3
        a, b, q, z = 0.5658671664924888, -0.19799282490022907, 0.7848492971577409, 0.5347390101240076
        prod = ramanujan_1psi1_product(a, b, q, z)
        assert abs(bilateral_psi([a], [b], q, z).value - prod) < 1e-12 * abs(prod)

    def test_0psi1_product(self):
        b, q, z = 0.3, 0.25, -0.8
        assert bilateral_psi([], [b], q, z).value == pytest.approx(psi01_product(b, q, z), rel=1e-12)

    def test_0psi1_explicit_two_sided(self):
        b, q, z = -0.4, 0.36, -1.1
        direct = 0.0
        for n in range(0, 60):
            direct += (-1) ** n * q ** (n * (n - 1) / 2) * z**n / qpochhammer(b, q, n).value
        # term -m equals (-1/z)^m prod_{k=1..m} (q^k - b)
        term = 1.0
        for m in range(1, 200):
            term *= -(q**m - b) / z
            direct += term
        assert bilateral_psi([], [b], q, z).value == pytest.approx(direct, rel=1e-12)

    def test_error_estimate_a_posteriori(self):
        a, b, q, z = 0.6, 0.2, 0.8, 0.5
        coarse = bilateral_psi([a], [b], q, z, tol=1e-9)
        fine = bilateral_psi([a], [b], q, z, tol=1e-18)
        assert abs(coarse.value - fine.value) <= coarse.est_error + 1e-14 * abs(fine.value)

    @settings(max_examples=100, deadline=None)
    @given(
        a=st.floats(0.2, 3.0),
        b=st.floats(-0.9, 0.9),
        q=st.floats(0.1, 0.8),
        frac=st.floats(0.05, 0.95),
    )
    def test_ramanujan_random(self, a, b, q, frac):
        lo = abs(b / a)
        # skip degenerate points where a product factor vanishes
        assume(lo < 0.9 and min(abs(a - q**k) for k in range(-3, 4)) > 1e-3)
        z = lo + frac * (1 - lo)
        val = bilateral_psi([a], [b], q, z)
        assert val.in_domain
        prod = ramanujan_1psi1_product(a, b, q, z)
        assume(abs(prod) > 1e-3)
        assert abs(val.value - prod) <= 1e-11 * abs(prod)


class TestBetaIntegral:
    def test_closed_vs_quadrature(self):
        closed = ramanujan_beta_integral(0.3, 1.0, 0.25)
        quad = ramanujan_beta_integral(0.3, 1.0, 0.25, method="quadrature")
        assert abs(closed.value - quad.value) < 1e-8 * abs(closed.value)

    def test_independent_quadrature(self):
        # plain scipy quad on the original variable as a second oracle
        tau, c, q2 = -0.4, 2.0, 0.5

        def f(lam):
            return lam**tau / qpochhammer(-lam * q2 / c, q2).value

        val = integrate.quad(f, 0, 1, limit=200)[0] + integrate.quad(f, 1, np.inf, limit=200)[0]
        assert ramanujan_beta_integral(tau, c, q2).value == pytest.approx(val, rel=1e-7)

    def test_integer_pole(self):
        with pytest.raises(PoleError):
            ramanujan_beta_integral(1.0, 1.0, 0.25)

    def test_domain(self):
        with pytest.raises(DomainError):
            ramanujan_beta_integral(-1.5, 1.0, 0.25)
