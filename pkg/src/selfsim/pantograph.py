"""Pantograph-type equations with a scaled argument.

Two first-order equations appear as eigenvalue problems of scaled
derivative operators on the free particle:

* retarded:  psi'(x) = alpha sqrt(q) psi(q x) - beta psi(x)
* advanced:  psi'(x) = -alpha q^{-3/2} psi(x/q) + beta q^{-1} psi(x)

with ``0 < q < 1``.  The retarded equation has a unique solution analytic at
the origin and is marched outward from it.  The advanced equation has no
analytic solutions; a solution is selected by its power-law form at large
``x`` and marched inward.  Bounded solutions of the advanced equation with
``beta = 0`` are given as two-sided Dirichlet series, and normalizable ones
(for any number of factors ``beta_k``) as momentum integrals over a
q-product weight.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from . import _delay
from .errors import DomainError, NumericalFailure, PreconditionError
from .grid import GridFunction
from .qseries import log_qpochhammer, ramanujan_beta_integral

#: relative term size at which the series are cut
TERM_TOL = 1e-18
#: relative residual above which an asymptotic seed is flagged
SEED_TOL = 1e-9


def _check_q(q):
    if not 0 < q < 1:
        raise PreconditionError(f"pantograph equations need 0 < q < 1, got {q}")


@dataclass(frozen=True)
class PantographProblem:
    """One pantograph equation.

    Parameters
    ----------
    alpha : complex
        Eigenvalue of the scaled derivative operator.
    q : float
        Dilation, ``0 < q < 1``.
    beta : float
        Energy shift, ``beta >= 0``.
    kind : {'retarded', 'advanced'}
    gamma : complex
        Value at the origin (retarded kind).
    branch : int
        Branch of the decay exponent (advanced kind); branches differ by
        ``2 pi i / ln q``.
    seed : callable, optional
        Replaces the asymptotic seed of the advanced kind.  Called with an
        array of abscissae, it must return solution values there.
    """

    alpha: complex
    q: float
    beta: float = 0.0
    kind: str = "retarded"
    gamma: complex = 1.0
    branch: int = 0
    seed: object = None

    def __post_init__(self):
        _check_q(self.q)
        if not self.beta >= 0:
            raise PreconditionError("beta must be non-negative")
        if self.kind not in ("retarded", "advanced"):
            raise PreconditionError(f"unknown kind {self.kind!r}")
        a = complex(self.alpha)
        object.__setattr__(self, "alpha", a.real if a.imag == 0 else a)

    @property
    def kappa(self):
        """Decay exponent of the advanced kind, ``q^kappa = sqrt(q) beta / alpha``."""
        return advanced_exponent(self.alpha, self.q, self.beta, self.branch)

    def rhs(self, psi, psi_scaled):
        """Right-hand side from ``psi(x)`` and the scaled-argument value."""
        a, q, b = self.alpha, self.q, self.beta
        if self.kind == "retarded":
            return a * math.sqrt(q) * psi_scaled - b * psi
        return -a * q**-1.5 * psi_scaled + b / q * psi


@dataclass(frozen=True)
class MarchedSolution(GridFunction):
    """Grid solution of a pantograph equation with seed diagnostics."""

    seed_residual: float = 0.0
    seed_consistent: bool = True


def advanced_exponent(alpha, q, beta, branch=0):
    """Exponent kappa of ``x^-kappa`` solutions of the advanced equation."""
    _check_q(q)
    if not beta > 0:
        raise PreconditionError("the power-law exponent needs beta > 0")
    if alpha == 0:
        raise PreconditionError("alpha must be nonzero")
    lq = math.log(q)
    k = np.log(complex(math.sqrt(q) * beta / alpha)) / lq + 2j * math.pi * branch / lq
    return k.real if k.imag == 0 else complex(k)


# analytic solution of the retarded equation

def taylor_coeffs(alpha, q, beta, order, gamma=1.0):
    """Taylor coefficients at 0 of the retarded equation's solution.

    ``(n+1) c_{n+1} = (alpha q^{n+1/2} - beta) c_n``.
    """
    c = np.empty(order + 1, dtype=complex)
    c[0] = gamma
    sq = math.sqrt(q)
    for n in range(order):
        c[n + 1] = (alpha * sq * q**n - beta) * c[n] / (n + 1)
    return c


def analytic_series(alpha, q, x, order=None):
    """Solution of ``psi' = alpha sqrt(q) psi(qx)`` with ``psi(0) = 1``.

    ``sum_n q^{n(n-1)/2} (alpha sqrt(q) x)^n / n!``.  Without ``order`` the
    sum runs until the terms fall below ``TERM_TOL`` relative to the largest
    one and keep shrinking.
    """
    _check_q(q)
    x = np.asarray(x)
    z = alpha * math.sqrt(q) * x
    term = np.ones_like(z, dtype=complex)
    total = term.copy()
    peak = np.abs(term)
    n = 0
    while True:
        term = term * z * q**n / (n + 1)
        n += 1
        total = total + term
        mag = np.abs(term)
        peak = np.maximum(peak, mag)
        if order is not None:
            if n >= order:
                break
        elif np.all(mag <= TERM_TOL * peak) and n > 2:
            break
    if np.isrealobj(x) and np.isreal(alpha):
        total = total.real
    return total if total.ndim else total[()]


# marching

def march_retarded(problem, x_max, step=0.01, rtol=1e-13, atol=1e-16):
    """March the retarded equation outward from ``x = 0``.

    The first grid points come from the Taylor series; afterwards each
    segment reads ``psi(qx)`` from a spline of finished values.

    Returns
    -------
    MarchedSolution
        Grid on ``[0, x_max]``.
    """
    if problem.kind != "retarded":
        raise PreconditionError("march_retarded needs a retarded problem")
    if not x_max > 0 or not step > 0:
        raise PreconditionError("x_max and step must be positive")
    n = int(round(x_max / step)) + 1
    nodes = step * np.arange(n)
    m = 8
    if n <= m:
        raise PreconditionError("grid too short for the seed segment")
    c = taylor_coeffs(problem.alpha, problem.q, problem.beta, 60, problem.gamma)
    seed = np.polynomial.polynomial.polyval(nodes[:m], c)
    if np.isreal(problem.alpha) and np.isreal(problem.gamma):
        seed = seed.real
    q = problem.q

    def rhs(x, y, hist):
        return problem.rhs(y, hist(q * x))

    Y, _ = _delay.march(
        nodes, seed[:, None], seed[:, None], rhs,
        lambda xs, Y, hist: Y,
        lambda x_last: x_last / q,
        rtol=rtol, atol=atol,
    )
    return MarchedSolution(0.0, step, Y[:, 0])


class AsymptoticSeed:
    """Large-x expansion ``x^-kappa sum_k c_k x^-k`` of the advanced equation.

    ``c_k = -(kappa + k - 1) q c_{k-1} / (beta (1 - q^k))``; the series is
    asymptotic, so it is cut at its smallest term for the abscissa ``X``.
    """

    def __init__(self, problem, X, max_terms=400):
        self.kappa = problem.kappa
        q, b = problem.q, problem.beta
        c = [1.0 + 0j]
        mags = [1.0]
        for k in range(1, max_terms):
            c.append(-(self.kappa + k - 1) * q * c[-1] / (b * (1 - q**k)))
            mags.append(abs(c[-1]) * X ** -k)
            if mags[-1] > mags[-2] and k > 2:
                c.pop()
                mags.pop()
                break
            if mags[-1] < 1e-18:
                break
        self.coeffs = np.array(c)
        self.truncation = mags[-1]

    def __call__(self, x, deriv=False):
        x = np.asarray(x, dtype=float)
        k = np.arange(self.coeffs.size)
        p = self.kappa + k
        powers = x[..., None] ** (-p)
        if deriv:
            return (self.coeffs * -p * powers).sum(axis=-1) / x
        return (self.coeffs * powers).sum(axis=-1)


def _seed_values(problem, x):
    """Seed values and a relative residual of the seed on ``x``."""
    q = problem.q
    if problem.seed is None:
        s = AsymptoticSeed(problem, float(np.min(x)))
        psi, dpsi, far = s(x), s(x, deriv=True), s(x / q)
    else:
        fine = np.linspace(x.min(), x.max(), 8 * x.size)
        spl = _delay.history_spline(fine, np.asarray(problem.seed(fine)))
        psi, dpsi = spl(x), spl.derivative()(x)
        far = np.asarray(problem.seed(x / q))
    res = dpsi - problem.rhs(psi, far)
    scale = np.abs(dpsi) + np.abs(problem.rhs(psi, far)) + np.abs(psi) * problem.beta / q
    return psi, float(np.max(np.abs(res) / scale))


def march_advanced(problem, x_min, x_max, step=0.01, rtol=1e-13, atol=1e-300):
    """March the advanced equation inward from a power-law seed.

    The seed fills the band ``[q x_max, x_max]``; below it every segment
    reads ``psi(x/q)`` from a spline of values at larger ``x``.

    Parameters
    ----------
    problem : PantographProblem
        Advanced kind with ``beta > 0``.
    x_min, x_max : float
        ``0 < x_min < q x_max``.

    Returns
    -------
    MarchedSolution
        Grid on ``[x_min, x_max]`` (ascending) with the seed residual and a
        consistency flag (residual below ``SEED_TOL``).
    """
    if problem.kind != "advanced":
        raise PreconditionError("march_advanced needs an advanced problem")
    q = problem.q
    if not 0 < x_min < q * x_max:
        raise PreconditionError("need 0 < x_min < q x_max")
    n = int(round((x_max - x_min) / step)) + 1
    step = (x_max - x_min) / (n - 1)
    nodes = x_max - step * np.arange(n)
    m = int(np.sum(nodes >= q * x_max - 1e-12 * x_max))
    if m < 8:
        raise PreconditionError("seed band holds fewer than 8 grid points")
    seed, seed_res = _seed_values(problem, nodes[:m])
    if np.isrealobj(problem.alpha) and problem.branch == 0 and problem.seed is None:
        seed = seed.real

    def rhs(x, y, hist):
        return problem.rhs(y, hist(x / q))

    Y, _ = _delay.march(
        nodes, seed[:, None], seed[:, None], rhs,
        lambda xs, Y, hist: Y,
        lambda x_last: q * x_last,
        rtol=rtol, atol=atol,
    )
    return MarchedSolution(float(nodes[-1]), step, Y[::-1, 0], seed_res, seed_res < SEED_TOL)


def residual(problem, grid, margin=10):
    """Pointwise relative residual of a grid solution.

    The derivative and the scaled-argument values come from a degree-7
    spline; points within ``margin`` nodes of an edge and points whose scaled
    argument leaves the grid are skipped.

    Returns
    -------
    x, rel : ndarray
    """
    q = problem.q
    spl = grid.spline()
    x = grid.x[margin:-margin]
    far = x * q if problem.kind == "retarded" else x / q
    keep = (far >= grid.x0) & (far <= grid.x_max)
    x, far = x[keep], far[keep]
    if x.size == 0:
        raise PreconditionError("no interior points with scaled argument on the grid")
    psi, dpsi, psi_far = spl(x), spl.derivative()(x), spl(far)
    rhs = problem.rhs(psi, psi_far)
    scale = np.abs(dpsi) + np.abs(rhs) + np.abs(problem.beta * psi)
    return x, np.abs(dpsi - rhs) / np.maximum(scale, 1e-300)


def fit_decay_exponent(grid, lo, hi):
    """Least-squares exponent kappa of ``|psi| ~ x^-kappa`` on ``[lo, hi]``."""
    part = grid.restrict(lo, hi)
    x, v = part.x, np.abs(part.values)
    if x[0] <= 0 or np.any(v == 0):
        raise PreconditionError("log-log fit needs positive x and nonzero values")
    slope = np.polyfit(np.log(x), np.log(v), 1)[0]
    return float(-slope)


# Dirichlet series for beta = 0

def _dirichlet_terms(alpha, q, b, n):
    z = b / (1j * alpha)
    logc = 0.5 * n * (n + 2) * math.log(q) + n * np.log(z)
    return logc


def dirichlet_series(alpha, q, b, n_range, x, a=1.0, derivative=False):
    """Bounded solution of ``psi'(x) = -alpha q^{-3/2} psi(x/q)``.

    ``a exp(ln^2(b/(i alpha)) / (2 ln q)) sum_n q^{n(n+2)/2} (b/(i alpha))^n
    exp(i b q^n x)`` over ``|n| <= n_range``.

    Parameters
    ----------
    alpha : complex
        Nonzero.
    b : float
        Positive frequency scale.
    n_range : int or None
        Truncation; ``None`` uses 60.  The terms at the ends must be below
        ``TERM_TOL`` relative to the largest one, otherwise the range is
        widened (up to 4000).
    derivative : bool
        Return ``psi'`` instead (termwise).
    """
    _check_q(q)
    if alpha == 0:
        raise PreconditionError("alpha must be nonzero")
    if not b > 0:
        raise PreconditionError("b must be positive")
    N = 60 if n_range is None else int(n_range)
    while True:
        n = np.arange(-N, N + 1)
        logc = _dirichlet_terms(alpha, q, b, n)
        mag = logc.real
        if max(mag[0], mag[-1]) - mag.max() < math.log(TERM_TOL) or N >= 4000:
            break
        N *= 2
    z = b / (1j * alpha)
    pref = a * np.exp(np.log(z) ** 2 / (2 * math.log(q)))
    keep = mag - mag.max() > math.log(TERM_TOL) - 20
    n, logc = n[keep], logc[keep]
    freq = b * q ** n.astype(float)
    coef = np.exp(logc)
    if derivative:
        coef = coef * 1j * freq
    x = np.asarray(x, dtype=float)
    out = pref * (np.exp(1j * np.multiply.outer(x, freq)) @ coef)
    return out if out.ndim else out[()]


# normalizable states as momentum integrals

def _momentum_exponent(alpha, q, betas, s):
    """``d_s = (ln(rho / (alpha q^{3/2})) + 2 pi i s) / ln q^2`` with arg alpha in [0, 2 pi)."""
    rho = float(np.prod(betas))
    alpha = complex(alpha)
    arg = math.atan2(alpha.imag, alpha.real) % (2 * math.pi)
    log_alpha = math.log(abs(alpha)) + 1j * arg
    return (math.log(rho) - log_alpha - 1.5 * math.log(q) + 2j * math.pi * s) / (2 * math.log(q))


def norm_exponent(alpha, q, betas):
    """tau = ln(rho / (|alpha| q)) / ln q."""
    rho = float(np.prod(betas))
    return math.log(rho / (abs(alpha) * q)) / math.log(q)


def norm_integral(alpha, q, betas, method="auto"):
    """``int_0^inf lam^tau dlam / prod_k (-lam q^2/beta_k^2; q^2)_inf``.

    One factor uses the q-beta closed form (quadrature at integer tau).
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    tau = norm_exponent(alpha, q, betas)
    if not tau > -1:
        raise DomainError("normalization integral diverges (|alpha| <= rho)")
    if betas.size == 1 and method in ("auto", "closed", "quadrature"):
        m = method
        if m == "auto":
            m = "quadrature" if abs(tau - round(tau)) < 1e-9 else "closed"
        return float(ramanujan_beta_integral(tau, betas[0] ** 2, q * q, method=m).value)
    q2 = q * q

    def g(t):
        lam = math.exp(t)
        logd = sum(log_qpochhammer(-lam * q2 / bk**2, q2).real for bk in betas)
        return math.exp((tau + 1) * t - logd)

    t_lo = math.log(1e-22) / (tau + 1)
    t_hi = 5.0
    while g(t_hi) > 1e-22 * g(0.0):
        t_hi += 2.0
    val, _ = integrate.quad(g, t_lo, t_hi, epsabs=0, epsrel=1e-12, limit=400)
    return val


def _fourier_integral(alpha, q, betas, s, x, sign, multiplier=None, tol=1e-12):
    """``2 int_0^inf p^{2d+1} m(p) e^{i sign p x} dp / prod_k (i sign q p/beta_k; q)_inf``.

    The ray is rotated to ``p = r e^{i theta}`` with theta = +-pi/4 so the
    exponential decays; the integral runs over ``t = ln r``.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    d = _momentum_exponent(alpha, q, betas, s)
    if not d.real > -1:
        raise DomainError("momentum integral diverges at p = 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=complex)
    for side in (1.0, -1.0):
        idx = np.nonzero(x >= 0)[0] if side > 0 else np.nonzero(x < 0)[0]
        if idx.size == 0:
            continue
        theta = sign * side * math.pi / 4
        rot = np.exp(1j * theta)
        xs = x[idx]

        def weight(t):
            p = np.exp(t) * rot
            logd = sum(log_qpochhammer(1j * sign * q * p / bk, q) for bk in betas)
            w = 2 * np.exp((2 * d + 2) * (t + 1j * theta) - logd)
            if multiplier is not None:
                w = w * multiplier(p)
            return w, p

        t_lo = math.log(1e-17) / (2 * d.real + 2) - 2
        peak = max(abs(weight(t)[0]) for t in np.linspace(t_lo, 5, 60))
        t_hi = 2.0
        while abs(weight(t_hi)[0]) > 1e-18 * peak:
            t_hi += 1.0

        def f(t):
            w, p = weight(t)
            return w * np.exp(1j * sign * p * xs)

        val, err = integrate.quad_vec(f, t_lo, t_hi, epsabs=1e-300, epsrel=tol, norm="max", limit=2000)
        if not np.all(np.isfinite(val)):
            raise NumericalFailure("momentum quadrature produced non-finite values")
        out[idx] = val
    return out


def free_cs_quadrature(alpha, q, beta_list, s, x, sign=1, normalize=True):
    """Normalizable solution of the advanced (generalized) pantograph equation.

    ``C / sqrt(4 pi) int_0^inf lam^{d_s} e^{+-i sqrt(lam) x} dlam /
    prod_k (+-i q sqrt(lam)/beta_k; q)_inf``, which solves
    ``prod_k (-d/dx + beta_k) psi(qx) = alpha q^{-1/2} psi(x)``.

    Parameters
    ----------
    alpha : complex
        ``|alpha| > rho = prod beta_k``.
    beta_list : sequence of float
        Positive shifts.
    s : int
        Index of the linearly independent solutions.
    sign : {1, -1}
        Positive or negative momenta.
    normalize : bool
        Multiply by ``C`` so the state has unit L2 norm.

    Raises
    ------
    DomainError
        For ``|alpha| <= rho``.
    """
    _check_q(q)
    betas = np.atleast_1d(np.asarray(beta_list, dtype=float))
    if betas.size == 0 or np.any(betas <= 0):
        raise PreconditionError("beta_list needs positive entries")
    if sign not in (1, -1):
        raise PreconditionError("sign must be +1 or -1")
    if not abs(alpha) > np.prod(betas):
        raise DomainError(f"|alpha| = {abs(alpha)} is outside the normalizable window |alpha| > {np.prod(betas)}")
    vals = _fourier_integral(alpha, q, betas, int(s), x, sign) / math.sqrt(4 * math.pi)
    if normalize:
        vals = vals / math.sqrt(norm_integral(alpha, q, betas))
    return vals if np.ndim(x) else vals[0]


def generalized_residual(alpha, q, beta_list, s, x, sign=1):
    """Residual of ``prod_k (-d/dx + beta_k) psi(qx) = alpha q^{-1/2} psi(x)``
    relative to ``max |alpha q^{-1/2} psi|`` over the samples.

    The left side is a separate momentum integral (the operator becomes the
    factor ``prod_k (beta_k - i sign q p)`` at argument ``qx``), so the check
    exercises the quadrature rather than an algebraic identity.
    """
    betas = np.atleast_1d(np.asarray(beta_list, dtype=float))
    x = np.asarray(x, dtype=float)

    def mult(p):
        return np.prod([bk - 1j * sign * q * p for bk in betas], axis=0)

    lhs = _fourier_integral(alpha, q, betas, s, q * x, sign, multiplier=mult)
    rhs = alpha * q**-0.5 * _fourier_integral(alpha, q, betas, s, x, sign)
    # branches s != 0 are exponentially small on one side of the origin,
    # so the error is measured against the largest sampled value
    return np.abs(lhs - rhs) / max(np.max(np.abs(rhs)), 1e-300)
