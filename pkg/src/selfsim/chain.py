"""Self-similar dressing chains.

A chain of superpotentials ``f_0..f_{N-1}`` obeys

    (f_j + f_{j+1})' + f_j^2 - f_{j+1}^2 = mu_j,   j = 0..N-1,

closed by ``f_N(x) = q f_0(q x)``.  The Schroedinger operators
``L_j = -d^2/dx^2 + f_j^2 - f_j' + lambda_j`` with ``lambda_{j+1} - lambda_j = mu_j``
are then related by ``x -> q x`` scaling, which produces N geometric series
of bound states.

This module builds the chain as a power series around the origin, extends
it to large |x| by marching the delay system, and provides the rational
closed-form chains of the equidistant (q = 1) case.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from . import _delay
from .errors import NumericalFailure, PoleError, PreconditionError, ResonanceError
from .grid import GridFunction
from .qseries import QParam, as_qparam

PARITIES = ("antisymmetric", "general", "singular")


@dataclass(frozen=True)
class ChainParams:
    """Parameters of a q-closed chain.

    Parameters
    ----------
    N : int
        Period of the closure.
    q : float or QParam
        Real scaling factor, ``0 < |q| <= 1``.
    mu : sequence of float
        Chain constants ``mu_0..mu_{N-1}``.
    parity : {'antisymmetric', 'general', 'singular'}
        Odd superpotentials (``f_j(0) = 0``), given values ``f_j(0)``, or the
        N = 2 family with a simple pole of residue ``+-a`` at the origin.
    seeds : sequence of float, optional
        ``f_j(0)`` for ``parity='general'``.
    a : float, optional
        Pole residue for ``parity='singular'``.
    """

    N: int
    q: float
    mu: tuple
    parity: str = "antisymmetric"
    seeds: tuple = None
    a: float = None
    l_shift: float = 0.0

    def __post_init__(self):
        qp = as_qparam(self.q)
        if isinstance(qp.q, complex):
            raise PreconditionError("chains are built for real q only")
        if not 0 < abs(qp.q) <= 1:
            raise PreconditionError("chains need 0 < |q| <= 1")
        object.__setattr__(self, "q", float(qp.q))
        if self.N < 1:
            raise PreconditionError("N must be at least 1")
        mu = tuple(float(m) for m in self.mu)
        if len(mu) != self.N:
            raise PreconditionError(f"expected {self.N} chain constants, got {len(mu)}")
        object.__setattr__(self, "mu", mu)
        if self.parity not in PARITIES:
            raise PreconditionError(f"parity must be one of {PARITIES}")
        if self.l_shift != 0:
            raise PreconditionError("only the fixed-point frame l = 0 is supported")
        if self.parity == "general":
            if self.seeds is None or len(self.seeds) != self.N:
                raise PreconditionError("general parity needs N seed values f_j(0)")
            object.__setattr__(self, "seeds", tuple(float(s) for s in self.seeds))
        if self.parity == "singular":
            if self.N != 2 or self.a is None:
                raise PreconditionError("singular chains need N = 2 and a pole residue a")

    @property
    def qparam(self):
        return QParam(self.q)

    @property
    def omega(self):
        return float(sum(self.mu))


def chain_constants(mu, q):
    """``lambda_0..lambda_N`` (lambda_0 = 0), omega, nu = omega/(1-q^2) and
    the first-period energies ``E_k = lambda_k - nu``."""
    lam = np.concatenate(([0.0], np.cumsum(mu)))
    omega = float(lam[-1])
    if abs(q) == 1:
        nu = math.inf
        E = np.full(len(mu), -math.inf)
    else:
        nu = omega / (1 - q * q)
        E = lam[:-1] - nu
    return lam, omega, nu, E


@dataclass(frozen=True)
class ChainSolution:
    """Power series of a chain around the origin.

    ``coeffs[j, k]`` is the coefficient of ``x^k`` in ``f_j``;
    ``residues[j]`` the coefficient of ``1/x`` (singular family only).
    """

    params: ChainParams
    coeffs: np.ndarray
    residues: np.ndarray
    lam: np.ndarray
    omega: float
    nu: float
    E: np.ndarray
    radius_est: float
    divergent: bool = False

    @property
    def N(self):
        return self.params.N

    @property
    def q(self):
        return self.params.q

    @property
    def order(self):
        return self.coeffs.shape[1] - 1

    def mu_extended(self, k):
        """``mu_k`` for any k >= 0, using ``mu_{j+N} = q^2 mu_j``."""
        j, period = k % self.N, k // self.N
        return self.params.mu[j] * self.q ** (2 * period)

    def closure_coeffs(self):
        """Series of ``f_N(x) = q f_0(qx)``."""
        k = np.arange(self.order + 1)
        return self.q ** (k + 1) * self.coeffs[0]

    def f(self, j, x):
        x = np.asarray(x, dtype=float)
        if j == self.N:
            return self.q * self.f(0, self.q * x)
        out = P.polyval(x, self.coeffs[j])
        if self.residues[j] != 0:
            out = out + self.residues[j] / x
        return out

    def fprime(self, j, x):
        x = np.asarray(x, dtype=float)
        if j == self.N:
            return self.q**2 * self.fprime(0, self.q * x)
        out = P.polyval(x, P.polyder(self.coeffs[j]))
        if self.residues[j] != 0:
            out = out - self.residues[j] / x**2
        return out

    def series_residual(self):
        """Coefficients of the chain equations' left minus right sides, up to
        the order fully determined by the truncated series.  Column ``k``
        holds the coefficient of ``x^{k-2}``, so the first two columns carry
        the ``1/x^2`` and ``1/x`` terms of the singular family."""
        K = self.order
        res = list(self.residues) + [self.residues[0]]
        fs = [self.coeffs[j] for j in range(self.N)] + [self.closure_coeffs()]

        def laurent(j):
            # coefficients of x^{k-2}
            c = np.zeros(K + 3)
            c[2:] = fs[j]
            c[1] += res[j]
            return c

        def shifted_square(c):
            # c encodes x^{k-2}; its square in the same encoding
            return np.convolve(c, c)[2 : K + 2]

        out = []
        for j in range(self.N):
            s = laurent(j) + laurent(j + 1)
            k = np.arange(K)
            # derivative of x^{k-1} lands on x^{k-2}
            d = (k - 1) * s[1 : K + 1]
            r = d + shifted_square(laurent(j)) - shifted_square(laurent(j + 1))
            r[2] -= self.params.mu[j]
            out.append(r)
        return np.array(out)


def _series_radius(coeffs, window=20):
    """Root-test radius from the last ``window`` nonzero coefficients, and a
    flag for super-geometric growth."""
    K = coeffs.shape[1] - 1
    radii = []
    slopes = []
    for c in coeffs:
        ks = np.arange(max(1, K - window + 1), K + 1)
        nz = ks[np.abs(c[ks]) > 1e-300]
        if nz.size < 2:
            continue
        r = np.abs(c[nz]) ** (-1.0 / nz)
        radii.append(np.median(r))
        slopes.append(np.polyfit(np.log(nz), np.log(r), 1)[0])
    if not radii:
        return math.inf, False
    radius = float(min(radii))
    # radius estimates falling like 1/k signal a divergent series
    divergent = bool(min(slopes) < -0.7)
    return radius, divergent


def solve_series(params, order=120):
    """Power-series solution of the closed chain through ``x^order``.

    Matching powers of x in the chain equations with ``f_N(x) = q f_0(qx)``
    gives, for the coefficients ``y_j`` of ``x^{m+1}``,

        y_j + y_{j+1} = r_j,  y_{N-1} + q^{m+2} y_0 = r_{N-1},

    with ``r_j = (mu_j delta_{m0} - [f_j^2]_m + [f_{j+1}^2]_m)/(m+1)``; the
    cyclic system is solved through the alternating sum of the r_j.

    Raises
    ------
    ResonanceError
        When ``1 + (-1)^{N-1} q^{m+2}`` vanishes and the alternating sum
        does not.
    """
    if params.parity == "singular":
        return solve_singular_n2_series(params.mu[0], params.mu[1], params.a, params.q, order)
    if order > 400:
        raise PreconditionError("order is capped at 400")
    N, q, mu = params.N, params.q, params.mu
    b = np.zeros((N, order + 1))
    if params.parity == "general":
        b[:, 0] = params.seeds
    qpow = q ** np.arange(order + 3)
    for m in range(order):
        sq = np.empty(N + 1)
        for j in range(N):
            sq[j] = np.dot(b[j, : m + 1], b[j, m::-1])
        bN = qpow[1 : m + 2] * b[0, : m + 1]
        sq[N] = np.dot(bN, bN[::-1])
        r = -sq[:N] + sq[1:]
        if m == 0:
            r = r + np.asarray(mu)
        r /= m + 1
        den = 1 + (-1) ** (N - 1) * qpow[m + 2]
        num = np.dot((-1.0) ** np.arange(N), r)
        if abs(den) < 1e-14:
            if abs(num) > 1e-12 * max(1.0, np.max(np.abs(r))):
                raise ResonanceError(f"resonant recursion at order {m + 1} (q={q})")
            y0 = 0.0
        else:
            y0 = num / den
        y = np.empty(N)
        y[0] = y0
        if N > 1:
            y[N - 1] = r[N - 1] - qpow[m + 2] * y0
            for j in range(N - 2, 0, -1):
                y[j] = r[j] - y[j + 1]
        b[:, m + 1] = y
    if not np.all(np.isfinite(b)):
        raise NumericalFailure("series coefficients overflowed")
    lam, omega, nu, E = chain_constants(mu, q)
    radius, divergent = _series_radius(b)
    return ChainSolution(params, b, np.zeros(N), lam, omega, nu, E, radius, divergent)


def singular_pole_set(imax=50):
    """Excluded residues ``+-(2i-1)/2`` of the singular N = 2 recursion."""
    v = np.array([(2 * i - 1) / 2 for i in range(1, imax + 1)])
    return np.concatenate((-v[::-1], v))


def solve_singular_n2_series(mu0, mu1, a, q, order=120):
    """N = 2 chain with ``f_0 = a/x + sum b_i x^{2i-1}``,
    ``f_1 = -a/x + sum c_i x^{2i-1}``.

    For i >= 2 the pair (b_i, c_i) solves

        b_i + c_i = S_1 = sum_{j<i} (c_j c_{i-j} - b_j b_{i-j}) / (2i-1+2a),
        q^{2i} b_i + c_i = S_2 = sum_{j<i} (q^{2i} b_j b_{i-j} - c_j c_{i-j}) / (2i-1-2a).

    At q = 1 the series truncates for the residue with
    ``mu0/(1+2a) = mu1/(1-2a)``, giving the singular oscillator chain.
    """
    q = float(as_qparam(q).q)
    imax = order // 2 + 1
    if np.min(np.abs(singular_pole_set(imax + 1) - a)) < 1e-12:
        raise PoleError(f"residue a={a} hits a pole of the recursion")
    b = np.zeros(imax + 1)
    c = np.zeros(imax + 1)
    u0, u1 = mu0 / (1 + 2 * a), mu1 / (1 - 2 * a)
    if abs(1 - q * q) < 1e-14:
        if abs(u0 - u1) > 1e-12 * max(1, abs(u0)):
            raise NumericalFailure("singular series diverges at q = 1 unless mu0/(1+2a) = mu1/(1-2a)")
        b[1] = c[1] = u0 / 2
    else:
        b[1] = (u0 - u1) / (1 - q * q)
        c[1] = (u1 - q * q * u0) / (1 - q * q)
    for i in range(2, imax + 1):
        cc = np.dot(c[1:i], c[i - 1 : 0 : -1])
        bb = np.dot(b[1:i], b[i - 1 : 0 : -1])
        q2i = q ** (2 * i)
        s1 = (cc - bb) / (2 * i - 1 + 2 * a)
        s2 = (q2i * bb - cc) / (2 * i - 1 - 2 * a)
        den = 1 - q2i
        if abs(den) < 1e-14:
            if abs(s1 - s2) > 1e-12:
                raise NumericalFailure("singular series diverges at q = 1")
            b[i] = 0.0
        else:
            b[i] = (s1 - s2) / den
        c[i] = s1 - b[i]
    K = 2 * imax - 1
    coeffs = np.zeros((2, K + 1))
    coeffs[0, 1::2] = b[1:]
    coeffs[1, 1::2] = c[1:]
    params = ChainParams(2, q, (mu0, mu1), parity="singular", a=a)
    lam, omega, nu, E = chain_constants(params.mu, q)
    radius, divergent = _series_radius(coeffs)
    return ChainSolution(params, coeffs, np.array([a, -a], dtype=float), lam, omega, nu, E, radius, divergent)


def seed_extent(solution, tol=1e-17):
    """Largest |x| where the truncated series is trusted: half the estimated
    radius, and no farther than where the last coefficient drops below tol."""
    x = 0.5 * solution.radius_est
    K = solution.order
    last = np.max(np.abs(solution.coeffs[:, K - 1 :]))
    if last > 0:
        x = min(x, (tol / last) ** (1.0 / K))
    return float(x)


@dataclass(frozen=True)
class ChainGrid:
    """Marched chain on the symmetric grid ``[-x_max, x_max]``."""

    solution: ChainSolution
    x: np.ndarray
    f: np.ndarray
    x_seed: float

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    def grid_function(self, j):
        return GridFunction(float(self.x[0]), self.dx, self.f[j])

    def spline(self, j, k=7):
        return _delay.history_spline(self.x, self.f[j], k=k)

    def jet(self, j, x, order):
        """Spline values of ``f_j`` and its first ``order`` derivatives on ``x``."""
        sp = self.spline(j)
        return np.array([sp(x, nu=m) for m in range(order + 1)])

    def f_at(self, j, x):
        """Interpolated ``f_j``; ``j = N`` gives ``q f_0(qx)``."""
        if j == self.solution.N:
            return self.solution.q * self.spline(0)(self.solution.q * np.asarray(x))
        return self.spline(j)(x)

    def residual(self, lo=0.0, hi=None, margin=10):
        """Pointwise chain residual on grid nodes in ``[lo, hi]``.

        Derivatives come from an independent degree-7 spline of the output
        grid; ``margin`` nodes next to the grid ends are skipped.
        """
        sol = self.solution
        N, q = sol.N, sol.q
        hi = self.x[-1] if hi is None else hi
        sel = np.arange(margin, self.x.size - margin)
        sel = sel[(self.x[sel] >= lo - 1e-12) & (self.x[sel] <= hi + 1e-12)]
        xs = self.x[sel]
        splines = [self.spline(j) for j in range(N)]
        vals = [s(xs) for s in splines] + [q * splines[0](q * xs)]
        ders = [s.derivative()(xs) for s in splines] + [q * q * splines[0].derivative()(q * xs)]
        res = np.empty((N, xs.size))
        for j in range(N):
            res[j] = ders[j] + ders[j + 1] + vals[j] ** 2 - vals[j + 1] ** 2 - sol.params.mu[j]
        return xs, res

    def potential(self, j=0, shift=True):
        """``u_j = f_j^2 - f_j' + lambda_j`` on the grid, minus nu when ``shift``."""
        s = self.spline(j)
        u = self.f[j] ** 2 - s.derivative()(self.x) + self.solution.lam[j]
        if shift:
            u = u - self.solution.nu
        return GridFunction(float(self.x[0]), self.dx, u)


def march_delay(solution, x_max, step=0.01, rtol=1e-13, atol=1e-15):
    """Extend a regular chain series to ``[-x_max, x_max]`` by marching.

    The unknowns are ``G_j = f_j + f_{j+1}`` (with ``f_N = q f_0(qx)``), whose
    derivatives ``mu_j - f_j^2 + f_{j+1}^2`` contain no derivative of a
    delayed term.  The ``f_j`` are recovered from G by back-substitution.
    Odd chains are marched for x > 0 and mirrored; otherwise both half-lines
    are marched together, which also covers negative q.
    """
    p = solution.params
    if p.parity == "singular":
        raise PreconditionError("marching needs a series that is regular at the origin")
    N, q, mu = p.N, p.q, np.asarray(p.mu)
    qa = abs(q)
    if not qa < 1:
        raise PreconditionError("marching needs |q| < 1")
    if solution.divergent:
        raise NumericalFailure("series flagged divergent; cannot seed the march")
    x_seed = seed_extent(solution)
    n_half = int(round(x_max / step))
    s = step * np.arange(n_half + 1)
    m = int(math.floor(x_seed / step + 1e-9)) + 1
    if m < 9:
        raise PreconditionError(f"step {step} too coarse for the series radius (seed extent {x_seed:.3g})")
    if m >= s.size:
        m = s.size
    branches = (1.0,) if p.parity == "antisymmetric" else (1.0, -1.0)
    nb = len(branches)
    sign_q = 1.0 if q > 0 else -1.0
    # history column read by branch b at q*x
    src = [branches.index(br * sign_q) if (br * sign_q) in branches else 0 for br in branches]
    odd_mirror = p.parity == "antisymmetric" and q < 0

    def unpack(sv, yb, f0_delayed):
        """f_0..f_N on one branch from its G values."""
        f = np.empty(N + 1)
        f[N] = q * f0_delayed
        f[N - 1] = yb[N - 1] - f[N]
        for j in range(N - 2, -1, -1):
            f[j] = yb[j] - f[j + 1]
        return f

    def delayed(hist, sv, b):
        val = hist(qa * sv)[src[b]]
        # odd chain at negative q: f_0(q x) = -f_0(|q| x)
        return -val if odd_mirror else val

    def rhs(sv, y, hist):
        out = np.empty_like(y)
        for b, br in enumerate(branches):
            yb = y[b * N : (b + 1) * N]
            f = unpack(sv, yb, delayed(hist, sv, b))
            out[b * N : (b + 1) * N] = br * (mu - f[:N] ** 2 + f[1:] ** 2)
        return out

    def derive(svs, Y, hist):
        H = np.empty((svs.size, nb))
        for i, sv in enumerate(svs):
            for b in range(nb):
                H[i, b] = unpack(sv, Y[i, b * N : (b + 1) * N], delayed(hist, sv, b))[0]
        return H

    # seed from the series
    seed_state = np.empty((m, nb * N))
    seed_hist = np.empty((m, nb))
    for b, br in enumerate(branches):
        xs = br * s[:m]
        fv = np.array([solution.f(j, xs) for j in range(N + 1)])
        seed_state[:, b * N : (b + 1) * N] = (fv[:N] + fv[1:]).T
        seed_hist[:, b] = fv[0]
    Y, H = _delay.march(s, seed_state, seed_hist, rhs, derive, lambda sv: sv / qa, rtol=rtol, atol=atol)

    # reconstruct every f_j from the final f_0 history
    hist = _delay.history_spline(s, H)
    F = np.empty((nb, N, s.size))
    for b, br in enumerate(branches):
        for i, sv in enumerate(s):
            if i < m:
                F[b, :, i] = [solution.f(j, br * sv) for j in range(N)]
            else:
                F[b, :, i] = unpack(sv, Y[i, b * N : (b + 1) * N], delayed(hist, sv, b))[:N]
    if nb == 1:
        neg = -F[0][:, :0:-1]
    else:
        neg = F[1][:, :0:-1]
    x = np.concatenate((-s[:0:-1], s))
    f = np.concatenate((neg, F[0]), axis=1)
    return ChainGrid(solution, x, f, x_seed)


def potential(source, x=None, j=0, shift=True):
    """``u(x) = f_j^2 - f_j' + lambda_j - nu`` as a GridFunction.

    ``source`` is a :class:`ChainSolution` (evaluated on ``x`` from the
    series) or a :class:`ChainGrid`.
    """
    if isinstance(source, ChainGrid):
        return source.potential(j, shift)
    x = np.asarray(x, dtype=float)
    u = source.f(j, x) ** 2 - source.fprime(j, x) + source.lam[j]
    if shift and np.isfinite(source.nu):
        u = u - source.nu
    return GridFunction.from_samples(x, u)


# closed forms for q = 1

class Rational:
    """Ratio of two polynomials, closed under +, -, * and differentiation."""

    def __init__(self, num, den=(1.0,)):
        self.num = num if isinstance(num, P.Polynomial) else P.Polynomial(num)
        self.den = den if isinstance(den, P.Polynomial) else P.Polynomial(den)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.num(x) / self.den(x)

    def deriv(self, m=1):
        r = self
        for _ in range(m):
            r = Rational(r.num.deriv() * r.den - r.num * r.den.deriv(), r.den * r.den)
        return r

    def _lift(self, other):
        return other if isinstance(other, Rational) else Rational([float(other)])

    def __add__(self, other):
        o = self._lift(other)
        if self.den == o.den:
            return Rational(self.num + o.num, self.den)
        return Rational(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return Rational(-self.num, self.den)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __mul__(self, other):
        o = self._lift(other)
        return Rational(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ClosedChain:
    """Exact chain with ``f_{j+N} = f_j`` (q = 1) and rational superpotentials."""

    name: str
    mu: tuple
    rationals: tuple
    singular_at_zero: bool = False
    q: float = 1.0

    @property
    def N(self):
        return len(self.mu)

    @property
    def lam(self):
        return np.concatenate(([0.0], np.cumsum(self.mu)))

    @property
    def omega(self):
        return float(sum(self.mu))

    @property
    def E(self):
        """Ladder energies ``lambda_0..lambda_{N-1}`` (no nu shift at q = 1)."""
        return self.lam[:-1]

    def f(self, j, x):
        return self.rationals[j % self.N](x)

    def fprime(self, j, x):
        return self.rationals[j % self.N].deriv()(x)

    def jet(self, j, x, order):
        """``f_j`` and its first ``order`` derivatives on ``x``."""
        r = self.rationals[j % self.N]
        out = [r(x)]
        for _ in range(order):
            r = r.deriv()
            out.append(r(x))
        return np.array(out)

    def potential(self, x, j=0):
        """``f_j^2 - f_j' + lambda_j`` (no nu shift at q = 1)."""
        x = np.asarray(x, dtype=float)
        return self.f(j, x) ** 2 - self.fprime(j, x) + self.lam[j]

    def chain_residual(self, x):
        x = np.asarray(x, dtype=float)
        return np.array([
            self.fprime(j, x) + self.fprime(j + 1, x) + self.f(j, x) ** 2 - self.f(j + 1, x) ** 2 - self.mu[j]
            for j in range(self.N)
        ])

    def grid(self, x, j=0):
        x = np.asarray(x, dtype=float)
        if self.singular_at_zero and np.any(np.abs(x) < 1e-12):
            raise PreconditionError("grid contains the singular point x = 0")
        return GridFunction.from_samples(x, self.f(j, x))


def hamdek(x):
    """``4/(x^2+1) - 8/(x^2+1)^2 + x^2/4 + 3/2``."""
    x = np.asarray(x, dtype=float)
    s = x * x + 1
    return 4 / s - 8 / s**2 + 0.25 * x * x + 1.5


# x/2 + 2x/(x^2+1)
_RAT0 = Rational([0.0, 5.0, 0.0, 1.0], [2.0, 0.0, 2.0])


def closed_forms(name, omega=1.0, mu0=3.0, mu1=1.0):
    """Exact q = 1 chains.

    Parameters
    ----------
    name : {'harmonic', 'singular_osc', 'piv_rational_A', 'piv_rational_B'}
        ``harmonic``: N = 1, f = omega x/2.  ``singular_osc``: N = 2,
        f_{0,1} = +-gamma/x + beta x.  ``piv_rational_A``: N = 3 rational
        chain with mu = (4, 1, -2).  ``piv_rational_B``: N = 3 chain with
        mu = (3, -2, 0) for the same Hamiltonian.
    """
    if name == "harmonic":
        return ClosedChain(name, (omega,), (Rational([0.0, omega / 2]),))
    if name == "singular_osc":
        g, be = singular_osc_constants(mu0, mu1)
        return ClosedChain(
            name,
            (mu0, mu1),
            (Rational([g, 0.0, be], [0.0, 1.0]), Rational([-g, 0.0, be], [0.0, 1.0])),
            singular_at_zero=g != 0,
        )
    if name == "piv_rational_A":
        return ClosedChain(
            name,
            (4.0, 1.0, -2.0),
            (
                _RAT0,
                Rational([-2.0, 0.0, 1.0], [0.0, 2.0]),
                Rational([2.0, 0.0, -1.0, 0.0, 1.0], [0.0, 2.0, 0.0, 2.0]),
            ),
            singular_at_zero=True,
        )
    if name == "piv_rational_B":
        return ClosedChain(name, (3.0, -2.0, 0.0), (_RAT0, Rational([0.0, 0.5]), -_RAT0))
    raise PreconditionError(f"unknown closed form {name!r}")


def singular_osc_constants(mu0, mu1):
    """``gamma = (mu0-mu1)/(2(mu0+mu1))`` and ``beta = (mu0+mu1)/4``."""
    return (mu0 - mu1) / (2 * (mu0 + mu1)), (mu0 + mu1) / 4


def piv_residual(f, df, d2f, x, mu):
    """Residual of the PIV equation for ``f``, omega = sum(mu)."""
    x = np.asarray(x, dtype=float)
    w = sum(mu)
    F, F1, F2 = f(x), df(x), d2f(x)
    rhs = F1**2 / (2 * F) + 1.5 * F**3 + 2 * w * x * F**2 + (0.5 * w * w * x * x + mu[2] - mu[0]) * F - mu[1] ** 2 / (2 * F)
    return F2 - rhs


def piv_partners(f, df, mu):
    """``f_1, f_2`` of an N = 3, q = 1 chain from ``f = f_0 - omega x/2``:
    ``-f/2 -+ (f' + mu_1)/(2f)``."""
    f, df = np.asarray(f), np.asarray(df)
    t = (df + mu[1]) / (2 * f)
    return -0.5 * f - t, -0.5 * f + t


# N = 2, q = -1 reduction

@dataclass(frozen=True)
class N2QMinus1:
    x: np.ndarray
    fs: np.ndarray
    gs: np.ndarray
    fa: np.ndarray
    ga: np.ndarray
    sigma: float
    tau: float

    def invariants(self):
        """``f_a + g_a - sigma x`` and ``f_s^2 + f_a^2 - g_s^2 - g_a^2 - tau``."""
        return (
            self.fa + self.ga - self.sigma * self.x,
            self.fs**2 + self.fa**2 - self.gs**2 - self.ga**2 - self.tau,
        )


def solve_n2_qminus1(fs0, gs0, mu0, mu1, x_max, step=0.01, x_start=1e-2):
    """Even parts ``f_s, g_s`` of the N = 2, q = -1 chain on ``[0, x_max]``.

    Integrates ``f_s' = 2 g_s g_a``, ``g_s' = -2 f_s f_a`` with the odd parts
    recovered algebraically,
    ``f_a = (g_s^2 - f_s^2 + sigma^2 x^2 + tau)/(2 sigma x)``,
    ``g_a = (f_s^2 - g_s^2 + sigma^2 x^2 - tau)/(2 sigma x)``,
    sigma = (mu0+mu1)/2, tau = (mu0-mu1)/2.  The removable singularity at
    x = 0 is bridged with the Taylor expansion through x^4.
    """
    sigma, tau = 0.5 * (mu0 + mu1), 0.5 * (mu0 - mu1)
    if sigma == 0:
        raise PreconditionError("sigma = (mu0+mu1)/2 must be nonzero")
    if abs(fs0**2 - gs0**2 - tau) > 1e-12 * max(1.0, fs0**2):
        raise PreconditionError("nonsingular branch needs fs0^2 = gs0^2 + tau")
    F0, G0 = fs0, gs0
    A1 = 0.5 * (sigma - 2 * F0 * G0)
    C1 = 0.5 * (sigma + 2 * F0 * G0)
    F2, G2 = G0 * C1, -F0 * A1
    A3 = (G2**2 - F2**2 - G0 * F2 * A1 - F0 * G2 * C1) / (2 * sigma)
    C3 = -A3
    F4 = 0.5 * (G0 * C3 + G2 * C1)
    G4 = -0.5 * (F0 * A3 + F2 * A1)

    def odd(x, fs, gs):
        fa = (gs * gs - fs * fs + sigma**2 * x * x + tau) / (2 * sigma * x)
        return fa, sigma * x - fa

    def rhs(x, y):
        fa, ga = odd(x, y[0], y[1])
        return [2 * y[1] * ga, -2 * y[0] * fa]

    x = step * np.arange(int(round(x_max / step)) + 1)
    y0 = [F0 + F2 * x_start**2 + F4 * x_start**4, G0 + G2 * x_start**2 + G4 * x_start**4]
    far = x[x >= x_start]
    def blowup(x, y):
        # poles of this system are simple, so stop well before floating-point resolution
        return 1e6 - np.max(np.abs(y))

    blowup.terminal = True
    sol = solve_ivp(rhs, (x_start, x[-1]), y0, method="DOP853", t_eval=far, rtol=1e-13, atol=1e-15, events=blowup)
    if sol.status != 0 or sol.t[-1] < x[-1]:
        raise NumericalFailure(f"trajectory becomes singular near x = {sol.t[-1]:.6g}: {sol.message}")
    near = x[x < x_start]
    fs = np.concatenate((F0 + F2 * near**2 + F4 * near**4, sol.y[0]))
    gs = np.concatenate((G0 + G2 * near**2 + G4 * near**4, sol.y[1]))
    fa = np.empty_like(x)
    fa[: near.size] = A1 * near + A3 * near**3
    fa[near.size :] = odd(far, sol.y[0], sol.y[1])[0]
    ga = sigma * x - fa
    return N2QMinus1(x, fs, gs, fa, ga, sigma, tau)


# zero modes of the N = 1 chain

@dataclass(frozen=True)
class ZeroModes:
    """Taylor series of the zero-energy solutions ``psi'' = u psi``."""

    solution: ChainSolution
    u: np.ndarray
    even: np.ndarray
    odd: np.ndarray

    @property
    def eigenvalue(self):
        """``i sqrt(nu)/q``, the eigenvalue of the lowering operator on psi_+."""
        return 1j * math.sqrt(self.solution.nu) / self.solution.q

    def psi(self, sign=+1):
        """Coefficients of ``psi_even +- i sqrt(nu) q^{-1/2} psi_odd``."""
        return self.even + sign * 1j * math.sqrt(self.solution.nu / self.solution.q) * self.odd

    def lowering_residual(self, x, sign=+1):
        """``(d/dx + f) psi(x) - alpha sqrt(q) psi(qx)`` with alpha = +-i sqrt(nu)/q."""
        sol = self.solution
        c = self.psi(sign)
        alpha = sign * self.eigenvalue
        x = np.asarray(x, dtype=float)
        lhs = P.polyval(x, P.polyder(c)) + sol.f(0, x) * P.polyval(x, c)
        return lhs - alpha * math.sqrt(sol.q) * P.polyval(sol.q * x, c)


def zero_mode_series(q, omega, order=60):
    """Even and odd zero modes of the N = 1 odd chain as Taylor series."""
    sol = solve_series(ChainParams(1, q, (omega,)), order)
    f = sol.coeffs[0]
    u = np.convolve(f, f)[: order + 1] - np.append(P.polyder(f), 0.0)[: order + 1]
    u[0] += sol.lam[0] - sol.nu
    K = order
    out = []
    for c0, c1 in ((1.0, 0.0), (0.0, 1.0)):
        c = np.zeros(K + 1)
        c[0], c[1] = c0, c1
        for k in range(K - 1):
            c[k + 2] = np.dot(u[: k + 1], c[k::-1]) / ((k + 2) * (k + 1))
        out.append(c)
    return ZeroModes(sol, u, out[0], out[1])
