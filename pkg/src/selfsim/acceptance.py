"""The ten acceptance checks, runnable from tests and the command line.

Each check returns a :class:`CheckResult` with the measured figure, the
threshold it is compared against and the wall time.
"""

from dataclasses import dataclass, asdict
import math
import time

import numpy as np

from . import canonical, qseries
from .chain import (
    ChainParams,
    closed_forms,
    hamdek,
    march_delay,
    potential,
    solve_series,
    zero_mode_series,
)
from .coherent import harmonic_limit_check
from .grid import GridFunction
from .pantograph import (
    PantographProblem,
    advanced_exponent,
    analytic_series,
    fit_decay_exponent,
    march_advanced,
)
from .spectral import Ladder, algebra_residuals, discretize, lowest_eigenpairs


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} [{self.number:2d}] {self.name}: {self.value:.3g} (limit {self.threshold:.3g}) {self.detail}".rstrip() + f" [{self.seconds:.2f} s]"

    def as_dict(self):
        return asdict(self)


def _hamdek_basis(k, lo=-12.0, hi=12.0, n=4000):
    x = np.linspace(lo, hi, n)
    return lowest_eigenpairs(discretize(GridFunction.from_samples(x, hamdek(x))), k)


def check_hamdek_spectrum():
    t = time.perf_counter()
    rep, _ = _hamdek_basis(5)
    dt = time.perf_counter() - t
    err = float(np.max(np.abs(rep.eigenvalues - [0, 3, 4, 5, 6])))
    return CheckResult(1, "hamdek spectrum {0,3,4,5,6}", err < 2e-3 and dt < 10, err, 2e-3, dt,
                       "runtime limit 10 s")


def check_geometric_spectrum():
    t = time.perf_counter()
    grid = march_delay(solve_series(ChainParams(1, 0.5, (1.0,)), 120), 40.0, 0.01)
    rep, _ = lowest_eigenpairs(discretize(grid.potential()), 3)
    dt = time.perf_counter() - t
    target = -(4 / 3) * 0.25 ** np.arange(3)
    err = float(np.max(np.abs(rep.eigenvalues - target) / np.abs(target)))
    return CheckResult(2, "geometric spectrum -(4/3) 0.25^n", err < 1e-3 and dt < 60, err, 1e-3, dt,
                       "runtime limit 60 s")


def check_chain_residual():
    t = time.perf_counter()
    worst = 0.0
    for params in (ChainParams(1, 0.5, (1.0,)), ChainParams(2, 0.25, (1.0, 0.5))):
        grid = march_delay(solve_series(params, 120), 40.0, 0.01)
        _, res = grid.residual(0.0, 40.0)
        worst = max(worst, float(np.max(np.abs(res))))
    return CheckResult(3, "chain residual N=1,2 on [0,40]", worst < 1e-8, worst, 1e-8, time.perf_counter() - t)


def check_taylor_values(q=0.5, omega=1.0):
    t = time.perf_counter()
    sol = solve_series(ChainParams(1, q, (omega,)), 40)
    c = sol.coeffs[0]
    u0 = potential(sol, np.array([0.0, 0.1, 0.2])).values[0]
    zm = zero_mode_series(q, omega, 40)
    errs = [
        abs(c[1] - omega / (1 + q * q)),
        abs(c[3] - (q * q - 1) * omega**2 / (3 * (1 + q * q) * (1 + q**4))),
        abs(u0 - 2 * omega / (q**4 - 1)),
        abs(zm.even[2] - omega / (q**4 - 1)),
    ]
    err = float(max(errs))
    return CheckResult(4, "Taylor golden values", err < 1e-14, err, 1e-14, time.perf_counter() - t)


def check_uncertainty(seed=1):
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        a = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        phi = rng.uniform(0, 2 * math.pi)
        m = canonical.moments(canonical.parity_cs(a, phi))
        worst = max(worst, abs(m.delta - canonical.delta_phi_closed(a, phi)))
    sxx = canonical.moments(canonical.yurke_stoler(0.5)).sigma_xx
    err_min = abs(sxx - (1 - math.exp(-1)) / 2)
    err = float(max(worst, err_min))
    return CheckResult(5, "uncertainty closed forms", err < 1e-10, err, 1e-10, time.perf_counter() - t,
                       f"sigma_xx min error {err_min:.2g}")


def check_root_orthonormality():
    t = time.perf_counter()
    worst = 0.0
    for M in (2, 3, 5):
        for a in (0.5, 1.3, 2.0):
            states = [canonical.root_superposition(a, M, l) for l in range(M)]
            G = np.array([[s.inner(r) for r in states] for s in states])
            worst = max(worst, float(np.max(np.abs(G - np.eye(M)))))
    proj = max(float(np.max(np.abs(sum(canonical.fock_projectors(60, M)) - np.eye(61)))) for M in (2, 3, 5))
    passed = worst < 1e-12 and proj < 1e-14
    return CheckResult(6, "root-of-unity orthonormality", passed, worst, 1e-12, time.perf_counter() - t,
                       f"projector sum error {proj:.2g} (limit 1e-14)")


def check_qseries_identities(seed=7, count=100):
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, used = 0.0, 0
    while used < count:
        a, b, q = rng.uniform(0.2, 3.0), rng.uniform(-0.9, 0.9), rng.uniform(0.1, 0.8)
        lo = abs(b / a)
        if lo >= 0.9 or min(abs(a - q**k) for k in range(-3, 4)) < 1e-3:
            continue
        z = lo + rng.uniform(0.05, 0.95) * (1 - lo)
        prod = qseries.ramanujan_1psi1_product(a, b, q, z)
        if abs(prod) < 1e-3:
            continue
        val = qseries.bilateral_psi([a], [b], q, z)
        if not val.in_domain:
            worst = math.inf
        else:
            worst = max(worst, abs(val.value - prod) / abs(prod))
        used += 1
    beta_err = 0.0
    for tau, c, q2 in ((0.3, 1.0, 0.25), (-0.4, 2.0, 0.5), (1.7, 0.5, 0.3)):
        closed = qseries.ramanujan_beta_integral(tau, c, q2).value
        quad = qseries.ramanujan_beta_integral(tau, c, q2, method="quadrature").value
        beta_err = max(beta_err, abs(closed - quad) / abs(closed))
    passed = worst < 1e-11 and beta_err < 1e-8
    return CheckResult(7, "1psi1 sum vs product, q-beta integral", passed, float(worst), 1e-11,
                       time.perf_counter() - t, f"q-beta error {beta_err:.2g} (limit 1e-8)")


def check_ladder_algebra():
    t = time.perf_counter()
    grid = march_delay(solve_series(ChainParams(1, 0.5, (1.0,)), 120), 40.0, 0.01)
    rep, vecs = lowest_eigenpairs(discretize(grid.potential()), 3)
    worst = algebra_residuals(grid, vecs, rep.eigenvalues).max_residual
    hrep, hvecs = _hamdek_basis(6)
    for name in ("piv_rational_A", "piv_rational_B"):
        worst = max(worst, algebra_residuals(closed_forms(name), hvecs, hrep.eigenvalues).max_residual)
    x = np.linspace(-12, 12, 4000)
    pot = float(np.max(np.abs(Ladder(closed_forms("piv_rational_A")).potential(x)
                              - Ladder(closed_forms("piv_rational_B")).potential(x))))
    passed = worst < 1e-3 and pot < 1e-12
    return CheckResult(8, "ladder algebra residuals", passed, float(worst), 1e-3, time.perf_counter() - t,
                       f"rational chains A/B potential gap {pot:.2g} (limit 1e-12)")


def check_pantograph():
    t = time.perf_counter()
    # analytic series: psi' by termwise differentiation vs alpha sqrt(q) psi(qx)
    alpha, q = 1.0, 0.5
    x = np.linspace(0, 5, 51)
    n = np.arange(81)
    # closed-form coefficients q^{n(n-1)/2} (alpha sqrt q)^n / n!
    c = np.exp(0.5 * n * (n - 1) * math.log(q) + n * math.log(alpha * math.sqrt(q))
               - np.array([math.lgamma(k + 1) for k in n]))
    dpsi = np.polynomial.polynomial.polyval(x, c[1:] * n[1:])
    rhs = alpha * math.sqrt(q) * analytic_series(alpha, q, q * x)
    series_err = float(np.max(np.abs(dpsi - rhs) / np.abs(rhs)))
    p = PantographProblem(2.0, 0.5, 1.0, kind="advanced")
    g = march_advanced(p, 0.05, 400.0, 0.02)
    kappa = advanced_exponent(2.0, 0.5, 1.0)
    fit_err = abs(fit_decay_exponent(g, 50, 200) / kappa - 1)
    passed = series_err < 1e-12 and fit_err < 0.05
    return CheckResult(9, "pantograph series and power law", passed, series_err, 1e-12, time.perf_counter() - t,
                       f"exponent error {fit_err:.2%} (limit 5%)")


def check_harmonic_limit():
    t = time.perf_counter()
    worst = 0.0
    for N, l in ((1, 0), (2, 0), (2, 1), (3, 1)):
        rep = harmonic_limit_check(0.9, N, l=l)
        worst = max(worst, float(rep.distance[-1]) if rep.support_ok else math.inf)
    return CheckResult(10, "harmonic degeneration at eps=1e-7", worst < 1e-6, worst, 1e-6, time.perf_counter() - t)


CHECKS = (
    check_hamdek_spectrum,
    check_geometric_spectrum,
    check_chain_residual,
    check_taylor_values,
    check_uncertainty,
    check_root_orthonormality,
    check_qseries_identities,
    check_ladder_algebra,
    check_pantograph,
    check_harmonic_limit,
)


def run_all():
    """Run every check in order; returns the list of results."""
    return [check() for check in CHECKS]
