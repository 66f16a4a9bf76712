import time

import numpy as np
import pytest

from selfsim.chain import ChainParams, closed_forms, hamdek, march_delay, solve_series
from selfsim.errors import PreconditionError
from selfsim.grid import GridFunction
from selfsim.spectral import (
    Ladder,
    algebra_residuals,
    apply_ladder,
    coarsen,
    discretize,
    ladder_overlap,
    lowest_eigenpairs,
    match_levels,
    sign_changes,
    verify_arithmetic,
    verify_geometric,
)


def sampled(fn, lo, hi, n):
    x = np.linspace(lo, hi, n)
    return GridFunction.from_samples(x, fn(x))


@pytest.fixture(scope="module")
def hamdek_states():
    rep, vecs = lowest_eigenpairs(discretize(sampled(hamdek, -12, 12, 4000)), 6)
    return rep, vecs


@pytest.fixture(scope="module")
def chain_states():
    sol = solve_series(ChainParams(1, 0.5, (1.0,)), 120)
    grid = march_delay(sol, 40.0, 0.01)
    rep, vecs = lowest_eigenpairs(discretize(grid.potential()), 4)
    return grid, rep, vecs


class TestEigensolver:
    def test_box(self):
        errs = []
        for n in (101, 201, 401):
            rep, _ = lowest_eigenpairs(discretize(sampled(np.zeros_like, 0, np.pi, n)), 1)
            errs.append(abs(rep.eigenvalues[0] - 1))
        assert errs[-1] < 1e-5
        # second-order convergence
        assert 3.8 < errs[0] / errs[1] < 4.2 and 3.8 < errs[1] / errs[2] < 4.2

    def test_harmonic_oscillator(self):
        rep, vecs = lowest_eigenpairs(discretize(sampled(np.square, -12, 12, 3000)), 5)
        assert np.max(np.abs(rep.eigenvalues - (2 * np.arange(5) + 1))) < 5e-4
        for i, v in enumerate(vecs):
            mirrored = v.values[::-1]
            assert np.allclose(mirrored, (-1) ** i * v.values, atol=1e-9)

    def test_richardson(self):
        e = []
        for n in (751, 1501, 3001):
            rep, _ = lowest_eigenpairs(discretize(sampled(np.square, -12, 12, n)), 3)
            e.append(rep.eigenvalues)
        d1, d2 = np.abs(e[0] - e[1]), np.abs(e[1] - e[2])
        assert np.all(3.5 < d1 / d2) and np.all(d1 / d2 < 4.5)

    def test_residual_orthogonality_nodes(self, hamdek_states):
        rep, vecs = hamdek_states
        assert np.all(rep.per_level_residual < 1e-9)
        for i in range(6):
            assert sign_changes(vecs[i]) == i
            for j in range(i):
                assert abs(vecs[i].inner(vecs[j])) < 1e-8

    def test_preconditions(self):
        op = discretize(sampled(np.square, -1, 1, 50))
        with pytest.raises(PreconditionError):
            lowest_eigenpairs(op, 0)
        with pytest.raises(PreconditionError):
            discretize(sampled(np.square, -1, 1, 50), bc="periodic")
        with pytest.raises(PreconditionError):
            discretize(sampled(np.square, -1, 1, 50), bc="dirichlet_halfline")


class TestHamdek:
    def test_spectrum(self):
        t = time.perf_counter()
        rep, _ = lowest_eigenpairs(discretize(sampled(hamdek, -12, 12, 4000)), 5)
        assert time.perf_counter() - t < 10
        assert np.max(np.abs(rep.eigenvalues - [0, 3, 4, 5, 6])) < 2e-3

    def test_equidistant_tail(self, hamdek_states):
        rep, _ = hamdek_states
        fit = verify_arithmetic(rep.eigenvalues[1:5])
        assert not fit.grid_meta["mismatch"]
        assert fit.fit_params[1] == pytest.approx(1.0, abs=2e-3)

    @pytest.mark.parametrize("name", ["piv_rational_A", "piv_rational_B"])
    def test_algebra(self, hamdek_states, name):
        rep, vecs = hamdek_states
        report = algebra_residuals(closed_forms(name), vecs, rep.eigenvalues)
        assert report.max_residual < 1e-3

    def test_chain_b_annihilates_e3(self, hamdek_states):
        # B+B- = L(L-3)(L-1) vanishes on the E = 3 level
        rep, vecs = hamdek_states
        lad = Ladder(closed_forms("piv_rational_B"))
        # thin the grid before taking six derivatives
        psi = coarsen(vecs[1], 0.03)
        # operator scale prod_k (|E| + |E_k|) = 3 * 6 * 4
        scale = np.prod(3.0 + np.abs(lad.E))
        assert lad.m_plus(lad.m_minus(psi)).norm() < 1e-3 * scale

    def test_chain_a_raises_by_three(self, hamdek_states):
        rep, vecs = hamdek_states
        dist, ratio = ladder_overlap(closed_forms("piv_rational_A"), vecs[0], vecs[1])
        assert dist < 1e-3
        # ||B+ psi_0||^2 = (3 - 0)(3 - 4)(3 - 5)
        assert ratio == pytest.approx(6.0, rel=1e-4)

    def test_intertwining_on_gaussians(self):
        x = np.linspace(-10, 10, 2001)
        for c in (0.0, 0.7):
            g = GridFunction.from_samples(x, np.exp(-((x - c) ** 2)))
            report = algebra_residuals(closed_forms("piv_rational_A"), [g], [0.0])
            assert report.raise_residual[0] < 1e-3

    def test_same_potential_from_both_chains(self):
        x = np.linspace(-12, 12, 4000)
        a = Ladder(closed_forms("piv_rational_A")).potential(x)
        b = Ladder(closed_forms("piv_rational_B")).potential(x)
        assert np.max(np.abs(a - b)) < 1e-12


class TestSingularOscillator:
    def test_half_line_series(self):
        # gamma = 1, beta = 1/2: u = 2/x^2 + x^2/4 + 1/2, E_n = 2n + 3
        e7 = closed_forms("singular_osc", mu0=3.0, mu1=-1.0)
        out = []
        for n in (3000, 6000):
            dx = 12.0 / n
            u = sampled(lambda x: e7.potential(x), dx, 12.0, n)
            rep, _ = lowest_eigenpairs(discretize(u, "dirichlet_halfline"), 4)
            out.append(rep.eigenvalues)
        assert np.max(np.abs(out[1] - (2 * np.arange(4) + 3))) < 1e-3
        assert np.max(np.abs(np.diff(out[1]) - 2.0)) < 1e-3
        # moving the cut-off from dx to dx/2 barely changes the levels
        assert np.max(np.abs(out[0] - out[1])) < 2e-3


class TestModels:
    def test_exact_geometric(self):
        q = 0.6
        E = -(q ** (2 * np.arange(6)))
        fit = verify_geometric(E, q, 1)
        assert np.max(fit.per_level_residual) < 1e-15
        E2 = np.sort(np.concatenate((-(q ** (2 * np.arange(3))), -0.5 * q ** (2 * np.arange(3)))))
        fit = verify_geometric(E2, q, 2)
        assert np.allclose(fit.fit_params, [-1.0, -0.5], rtol=1e-15)

    def test_mismatch_flag(self):
        fit = verify_geometric([-1.0, -0.3, -0.0625], 0.5, 1)
        assert fit.grid_meta["mismatch"]

    def test_needs_enough_levels(self):
        with pytest.raises(PreconditionError):
            verify_geometric([-1.0, -0.25, -0.1], 0.5, 2)

    def test_match_levels(self):
        idx = match_levels([-1.3, -0.34, -0.09, -0.021], [-4 / 3, -1 / 3, -1 / 12])
        assert list(idx) == [0, 1, 2]


class TestChainSpectrum:
    def test_geometric_levels(self, chain_states):
        _, rep, _ = chain_states
        target = -(4 / 3) * 0.25 ** np.arange(3)
        assert np.max(np.abs(rep.eigenvalues[:3] - target) / np.abs(target)) < 1e-3
        fit = verify_geometric(rep.eigenvalues[:3], 0.5, 1)
        assert not fit.grid_meta["mismatch"]

    def test_no_positive_bound_states(self, chain_states):
        _, rep, _ = chain_states
        assert np.all(rep.eigenvalues < 0)

    def test_ladder(self, chain_states):
        grid, rep, vecs = chain_states
        E = rep.eigenvalues
        for n in range(2):
            dist, ratio = ladder_overlap(grid, vecs[n], vecs[n + 1])
            assert dist < 1e-3
            # ||B+ psi_n||^2 = q^2 E_n - E_0
            assert ratio == pytest.approx(0.25 * E[n] - E[0], rel=1e-3)
        down = apply_ladder(grid, vecs[0], "lower")
        assert down.norm() < 1e-3
        # B- shrinks the domain by q
        assert down.x_max == pytest.approx(20.0, abs=0.011)

    def test_algebra(self, chain_states):
        grid, rep, vecs = chain_states
        report = algebra_residuals(grid, vecs[:3], rep.eigenvalues[:3])
        assert report.max_residual < 1e-3

    def test_bad_direction(self, chain_states):
        grid, _, vecs = chain_states
        with pytest.raises(PreconditionError):
            apply_ladder(grid, vecs[0], "sideways")


class TestWeyl:
    def test_harmonic_commutator(self):
        h = closed_forms("harmonic", omega=1.0)
        lad = Ladder(h)
        rep, vecs = lowest_eigenpairs(discretize(sampled(lambda x: lad.potential(x), -12, 12, 3000)), 10)
        assert np.max(np.abs(rep.eigenvalues - np.arange(10))) < 1e-3
        for v in vecs:
            comm = lad.m_minus(lad.m_plus(v)).values - lad.m_plus(lad.m_minus(v)).values
            err = np.sqrt(v.dx * np.sum((comm - v.values)[10:-10] ** 2))
            assert err < 1e-6
