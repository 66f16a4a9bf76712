"""Harmonic-oscillator coherent states and their superpositions.

Conventions: ``x = (a + a^dagger)/sqrt(2)``, ``p = (a - a^dagger)/(i sqrt(2))``,
so the canonical coherent state has ``sigma_xx = sigma_pp = 1/2``.  Fock
vectors are plain coefficient arrays ``c_0..c_nmax`` wrapped in
:class:`FockVector`.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import PreconditionError


@dataclass(frozen=True)
class FockVector:
    """Truncated expansion ``sum_n coeffs[n] |n>``."""

    coeffs: np.ndarray
    norm_flag: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise PreconditionError("coeffs must be a non-empty 1-d array")
        object.__setattr__(self, "coeffs", c)
        if self.norm_flag and abs(np.vdot(c, c).real - 1) > 1e-12:
            raise PreconditionError("norm_flag set but the vector is not normalized")

    @property
    def nmax(self):
        return self.coeffs.size - 1

    def norm(self):
        return float(np.sqrt(np.vdot(self.coeffs, self.coeffs).real))

    def normalized(self):
        return FockVector(self.coeffs / self.norm(), norm_flag=True)

    def inner(self, other):
        """``<self|other>``, padding the shorter vector with zeros."""
        a, b = _pad(self.coeffs, other.coeffs)
        return complex(np.vdot(a, b))


def _pad(a, b):
    n = max(a.size, b.size)
    return np.pad(a, (0, n - a.size)), np.pad(b, (0, n - b.size))


@dataclass(frozen=True)
class MomentsReport:
    mean_x: float
    mean_p: float
    sigma_xx: float
    sigma_pp: float
    sigma_xp: float
    delta: float


def default_nmax(alpha):
    """Truncation with a Poisson tail below 1e-20 for ``|alpha>``."""
    r = abs(alpha)
    nmax = max(32, math.ceil(r * r + 8 * r + 20))
    # enlarge until the dropped Poisson weight is negligible
    while True:
        log_tail = 2 * (nmax + 1) * math.log(r) - math.lgamma(nmax + 2) - r * r if r > 0 else -np.inf
        if log_tail < math.log(1e-20) - 2:
            return nmax
        nmax += 8


# number states in coordinate space

def hermite_table(nmax, x):
    """Normalized oscillator eigenfunctions ``<x|n>`` for n = 0..nmax.

    Uses the stable recurrence
    ``psi_{k+1} = sqrt(2/(k+1)) x psi_k - sqrt(k/(k+1)) psi_{k-1}``.

    Returns
    -------
    ndarray, shape (nmax+1, len(x))
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((nmax + 1, x.size))
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, nmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_eigenstate(n, x):
    """``<x|n> = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi))``."""
    if n < 0:
        raise PreconditionError("n must be non-negative")
    vals = hermite_table(n, x)[n]
    return vals if np.ndim(x) else float(vals[0])


def synthesize(state, x):
    """Wavefunction ``sum_n c_n <x|n>`` on the points ``x``."""
    c = state.coeffs if isinstance(state, FockVector) else np.asarray(state)
    return c @ hermite_table(c.size - 1, x)


def default_grid(alpha, n=2001):
    L = max(8.0, 3 * abs(alpha) + 6)
    return np.linspace(-L, L, n)


# ladder operators on coefficient arrays

def lower(c):
    """``a`` acting on coefficients: ``(a c)_n = sqrt(n+1) c_{n+1}``."""
    c = np.asarray(c)
    out = np.zeros_like(c)
    out[:-1] = np.sqrt(np.arange(1, c.size)) * c[1:]
    return out


def raise_(c):
    """``a^dagger`` on coefficients, extending the array by one entry."""
    c = np.asarray(c)
    out = np.zeros(c.size + 1, dtype=c.dtype)
    out[1:] = np.sqrt(np.arange(1, c.size + 1)) * c
    return out


def parity(c):
    """``(-1)^N`` on coefficients."""
    c = np.asarray(c)
    return c * (-1.0) ** np.arange(c.size)


# canonical and parity states

def _canonical_coeffs(alpha, nmax):
    c = np.empty(nmax + 1, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, nmax + 1):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def canonical_cs(alpha, nmax=None):
    """Canonical coherent state ``e^{-|a|^2/2} sum a^n/sqrt(n!) |n>``."""
    nmax = default_nmax(alpha) if nmax is None else nmax
    return FockVector(_canonical_coeffs(alpha, nmax))


def canonical_cs_wf(alpha, x):
    """Closed form ``pi^{-1/4} exp(-x^2/2 + sqrt2 a x - a^2/2 - |a|^2/2)``."""
    x = np.asarray(x, dtype=float)
    return math.pi**-0.25 * np.exp(-0.5 * x * x + math.sqrt(2) * alpha * x - 0.5 * alpha**2 - 0.5 * abs(alpha) ** 2)


def coherent_overlap(beta, alpha):
    """``<beta|alpha> = exp(conj(beta) alpha - |alpha|^2/2 - |beta|^2/2)``."""
    return np.exp(np.conj(beta) * alpha - 0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2)


def parity_cs(alpha, phi, nmax=None):
    """``(1/2)[(1 + e^{-i phi})|alpha> + (1 - e^{-i phi})|-alpha>]``.

    Even Fock components are those of ``|alpha>``, odd ones are multiplied by
    ``e^{-i phi}``.  The state is an eigenvector of ``V a`` with
    ``V = cos(phi) + i P sin(phi)``, ``P = (-1)^N``, eigenvalue ``alpha``.
    """
    c = canonical_cs(alpha, nmax).coeffs.copy()
    c[1::2] *= np.exp(-1j * phi)
    return FockVector(c)


def parity_cs_wf(alpha, phi, x):
    e = np.exp(-1j * phi)
    return 0.5 * ((1 + e) * canonical_cs_wf(alpha, x) + (1 - e) * canonical_cs_wf(-alpha, x))


def apply_parity_lowering(c, phi):
    """``(cos phi + i P sin phi) a`` on coefficients."""
    ac = lower(c)
    return math.cos(phi) * ac + 1j * math.sin(phi) * parity(ac)


def yurke_stoler(alpha, nmax=None):
    """Eigenstate of ``P a`` with eigenvalue ``alpha``:
    ``(e^{-i pi/4}|i alpha> + e^{i pi/4}|-i alpha>)/sqrt2``.

    Fock signs follow the period-4 pattern ``+, +, -, -`` times ``alpha^n``.
    It coincides with ``parity_cs(i alpha, pi/2)``.
    """
    return parity_cs(1j * alpha, math.pi / 2, nmax)


def yurke_stoler_wf(alpha, x):
    """``sqrt2 pi^{-1/4} exp((a^2 - |a|^2 - x^2)/2) cos(sqrt2 a x - pi/4)``."""
    x = np.asarray(x, dtype=float)
    return (
        math.sqrt(2) * math.pi**-0.25
        * np.exp(0.5 * (alpha**2 - abs(alpha) ** 2 - x * x))
        * np.cos(math.sqrt(2) * alpha * x - math.pi / 4)
    )


# moments and uncertainty

def delta_phi_closed(alpha, phi):
    """Robertson-Schroedinger determinant of ``parity_cs(alpha, phi)``:
    ``(1/4)(1 + rho sin^2 phi (1 - (1 + rho) e^{-rho}))``, ``rho = 4|alpha|^2``."""
    rho = 4 * abs(alpha) ** 2
    return 0.25 * (1 + rho * math.sin(phi) ** 2 * (1 - (1 + rho) * math.exp(-rho)))


def moments(state):
    """First and second moments of x and p from Fock coefficients.

    ``x`` and ``p`` act as tridiagonal matrices with one extra row so that
    ``<x^2> = ||x psi||^2`` holds exactly for the truncated vector.
    """
    c = state.coeffs if isinstance(state, FockVector) else np.asarray(state, dtype=complex)
    c = c / np.sqrt(np.vdot(c, c).real)
    ac = np.append(lower(c), 0)
    adc = raise_(c)
    xc = (ac + adc) / math.sqrt(2)
    pc = (ac - adc) / (1j * math.sqrt(2))
    cp = np.append(c, 0)
    mx = np.vdot(cp, xc).real
    mp = np.vdot(cp, pc).real
    sxx = np.vdot(xc, xc).real - mx * mx
    spp = np.vdot(pc, pc).real - mp * mp
    sxp = np.vdot(xc, pc).real - mx * mp
    return MomentsReport(mx, mp, sxx, spp, sxp, sxx * spp - sxp * sxp)


# root-of-unity superpositions

def root_norm_closed(alpha, M, l):
    """``|C_l|^2 = e^{|a|^2} / (M sum_m eps^{-lm} exp(eps^m |a|^2))``, eps = e^{2 pi i/M}.

    The normalization of ``C_l sum_m eps^{-lm} |eps^m alpha>``.
    """
    r2 = abs(alpha) ** 2
    eps = np.exp(2j * math.pi / M)
    m = np.arange(M)
    s = np.sum(eps ** (-l * m) * np.exp(eps**m * r2 - r2)).real
    if s <= 0:
        raise PreconditionError("degenerate root-of-unity superposition (zero norm)")
    return 1.0 / (M * s)


def root_superposition(alpha, M, l, nmax=None):
    """Normalized ``C_l sum_{m<M} eps^{-lm} |eps^m alpha>`` with real positive C_l.

    Only Fock indices ``n = l (mod M)`` are populated.
    """
    if M < 1 or not 0 <= l < M:
        raise PreconditionError("need M >= 1 and 0 <= l < M")
    nmax = default_nmax(alpha) if nmax is None else nmax
    c = _canonical_coeffs(alpha, nmax)
    mask = (np.arange(nmax + 1) % M) != l
    c[mask] = 0
    nrm = np.sqrt(np.vdot(c, c).real)
    if nrm < 1e-300 or nrm < 1e-14 * math.exp(-0.5 * abs(alpha) ** 2):
        raise PreconditionError("degenerate root-of-unity superposition at alpha=0, l>0")
    return FockVector(c / nrm, norm_flag=True)


def root_superposition_direct(alpha, M, l, nmax=None):
    """Same state assembled literally as ``C_l sum_m eps^{-lm} |eps^m alpha>``."""
    nmax = default_nmax(alpha) if nmax is None else nmax
    eps = np.exp(2j * math.pi / M)
    c = sum(eps ** (-l * m) * _canonical_coeffs(eps**m * alpha, nmax) for m in range(M))
    return FockVector(math.sqrt(root_norm_closed(alpha, M, l)) * c)


def fock_projectors(nmax, M):
    """Diagonal projectors onto ``n = l (mod M)``, l = 0..M-1."""
    n = np.arange(nmax + 1)
    return [np.diag((n % M == l).astype(float)) for l in range(M)]


def shifted_parity_wf(alpha, x0, sign, x):
    """Even (sign=+1) or odd (sign=-1) coherent state of the oscillator
    centred at ``x0``, normalized like ``root_superposition(alpha, 2, l)``."""
    y = np.asarray(x, dtype=float) - x0
    nrm = 1.0 / math.sqrt(2 + 2 * sign * math.exp(-2 * abs(alpha) ** 2))
    pref = nrm * math.pi**-0.25 * np.exp(-0.5 * (alpha**2 + abs(alpha) ** 2))
    return pref * np.exp(-0.5 * y * y) * (np.exp(math.sqrt(2) * alpha * y) + sign * np.exp(-math.sqrt(2) * alpha * y))


# Titulaer-Glauber states

def titulaer_glauber(theta, alpha, nmax=None):
    """``sum_n e^{i theta(n)} e^{-|a|^2/2} a^n/sqrt(n!) |n>``.

    Parameters
    ----------
    theta : callable or sequence
        Phase function of n, with ``theta(0) = 0``.  A sequence of length M
        is read as an M-periodic phase.
    """
    nmax = default_nmax(alpha) if nmax is None else nmax
    n = np.arange(nmax + 1)
    if callable(theta):
        th = np.array([theta(k) for k in n], dtype=float)
    else:
        seq = np.asarray(theta, dtype=float)
        th = seq[n % seq.size]
    return FockVector(np.exp(1j * th) * _canonical_coeffs(alpha, nmax))


def periodic_phase_weights(theta_period):
    """Weights ``C_k = (1/M) sum_n e^{i theta(n)} eps^{-kn}`` such that the
    periodic Titulaer-Glauber state equals ``sum_k C_k |eps^k alpha>``."""
    th = np.asarray(theta_period, dtype=float)
    M = th.size
    eps = np.exp(2j * math.pi / M)
    n = np.arange(M)
    return np.array([np.sum(np.exp(1j * th) * eps ** (-k * n)) / M for k in range(M)])


def superpose_coherent(weights, alphas, nmax):
    """``sum_k w_k |alpha_k>`` as a FockVector."""
    return FockVector(sum(w * _canonical_coeffs(a, nmax) for w, a in zip(weights, alphas)))


def qperiodic_truncation(phi, M, q=None):
    """Coefficients ``B_l = (1/M) sum_m q^{-lm} e^{i q^m phi}``, l = 0..M-1.

    ``q`` defaults to the primitive root ``e^{2 pi i/M}``.  With these,
    ``sum_k (i phi)^k/k! |q^k alpha> = sum_l B_l |q^l alpha>``.
    """
    q = np.exp(2j * math.pi / M) if q is None else complex(q)
    if abs(q**M - 1) > 1e-12:
        raise PreconditionError("q must be an M-th root of unity")
    m = np.arange(M)
    return np.array([np.sum(q ** (-l * m) * np.exp(1j * q**m * phi)) / M for l in range(M)])


# two-mode states

def entangled_two_mode(alpha1, alpha2, nmax=None):
    """``(e^{-i pi/4}|i a1>|i a2> + e^{i pi/4}|-i a1>|-i a2>)/sqrt2`` as a
    coefficient matrix ``T[n1, n2]``."""
    nmax = max(default_nmax(alpha1), default_nmax(alpha2)) if nmax is None else nmax
    p1, p2 = _canonical_coeffs(1j * alpha1, nmax), _canonical_coeffs(1j * alpha2, nmax)
    m1, m2 = _canonical_coeffs(-1j * alpha1, nmax), _canonical_coeffs(-1j * alpha2, nmax)
    return (np.exp(-0.25j * math.pi) * np.outer(p1, p2) + np.exp(0.25j * math.pi) * np.outer(m1, m2)) / math.sqrt(2)


def two_mode_parity_lowering(T, mode):
    """``P a_j`` on a coefficient matrix, ``P = (-1)^{N1+N2}``."""
    T = np.asarray(T)
    out = np.zeros_like(T)
    if mode == 0:
        out[:-1, :] = np.sqrt(np.arange(1, T.shape[0]))[:, None] * T[1:, :]
    else:
        out[:, :-1] = np.sqrt(np.arange(1, T.shape[1]))[None, :] * T[:, 1:]
    sign = (-1.0) ** np.add.outer(np.arange(T.shape[0]), np.arange(T.shape[1]))
    return sign * out


def schmidt_rank(T, tol=1e-10):
    s = np.linalg.svd(np.asarray(T), compute_uv=False)
    return int(np.sum(s > tol * s[0]))
