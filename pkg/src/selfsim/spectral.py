"""Bound states of one-dimensional Schroedinger operators and the ladder
algebra of self-similar chains.

The operator ``H = -d^2/dx^2 + u(x)`` is discretized with the three-point
Laplacian and Dirichlet ends; the lowest eigenpairs come from LAPACK's
tridiagonal bisection plus inverse iteration.  Ladder operators

    B+ psi = A_0^+ ... A_{N-1}^+ (sqrt|q| psi(qx)),
    B- psi = T^{-1} A_{N-1}^- ... A_0^- psi,     A_j^{+-} = -+ d/dx + f_j,

are applied on the grid through their expanded coefficient functions, with
derivatives of the state taken from an interpolating spline.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .chain import ChainGrid, ClosedChain
from .errors import NumericalFailure, PreconditionError
from .grid import GridFunction

BOUNDARY_CONDITIONS = ("dirichlet", "dirichlet_halfline")


@dataclass(frozen=True)
class TridiagonalOperator:
    """Discrete ``-d^2/dx^2 + u`` on the interior nodes of ``grid``."""

    grid: GridFunction
    diag: np.ndarray
    off: np.ndarray
    bc: str

    @property
    def dx(self):
        return self.grid.dx

    def matvec(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out


def discretize(u, bc="dirichlet"):
    """Three-point finite-difference Hamiltonian with ``psi = 0`` at both
    grid ends.

    Parameters
    ----------
    u : GridFunction
        Real potential samples; the first and last nodes are the boundary.
    bc : {'dirichlet', 'dirichlet_halfline'}
        For the half line the first node is the cut-off point ``eps > 0``
        next to a singular origin.
    """
    if bc not in BOUNDARY_CONDITIONS:
        raise PreconditionError(f"bc must be one of {BOUNDARY_CONDITIONS}")
    if np.iscomplexobj(u.values):
        raise PreconditionError("the potential must be real")
    if bc == "dirichlet_halfline" and u.x0 <= 0:
        raise PreconditionError("half-line grids start at a positive cut-off")
    h2 = u.dx**2
    diag = 2.0 / h2 + u.values[1:-1]
    off = np.full(u.n - 3, -1.0 / h2)
    return TridiagonalOperator(u, diag, off, bc)


@dataclass(frozen=True)
class SpectrumReport:
    """Computed levels, optionally with a fitted spectral model.

    ``per_level_residual`` holds the eigenvector residuals
    ``||H psi - E psi|| / ||psi||`` of the discrete problem until a model is
    fitted, and the model's relative residuals afterwards.
    """

    eigenvalues: np.ndarray
    model: str = None
    fit_params: tuple = ()
    per_level_residual: np.ndarray = None
    grid_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.size > 1 and not np.all(np.diff(ev) > 0):
            raise NumericalFailure("eigenvalues are not strictly ascending")
        object.__setattr__(self, "eigenvalues", ev)


def lowest_eigenpairs(op, k):
    """The ``k`` lowest eigenvalues and normalized eigenvectors.

    Eigenvectors are returned on the full grid (zero at the boundary nodes),
    normalized with the trapezoidal rule and signed so that the first
    sizeable lobe is positive.
    """
    if k < 1:
        raise PreconditionError("k must be at least 1")
    if k > op.diag.size:
        raise PreconditionError("k exceeds the number of interior nodes")
    try:
        w, v = eigh_tridiagonal(op.diag, op.off, select="i", select_range=(0, k - 1))
    except LinAlgError as exc:
        raise NumericalFailure(f"tridiagonal eigensolver failed: {exc}") from exc
    residual = np.array([
        np.linalg.norm(op.matvec(v[:, i]) - w[i] * v[:, i]) / np.linalg.norm(v[:, i]) for i in range(k)
    ])
    vectors = []
    for i in range(k):
        full = np.zeros(op.grid.n)
        full[1:-1] = v[:, i]
        big = np.nonzero(np.abs(full) > 1e-3 * np.max(np.abs(full)))[0][0]
        if full[big] < 0:
            full = -full
        vectors.append(op.grid.with_values(full).normalized())
    meta = {"x0": op.grid.x0, "x_max": op.grid.x_max, "n": op.grid.n, "dx": op.grid.dx, "bc": op.bc}
    return SpectrumReport(w, per_level_residual=residual, grid_meta=meta), vectors


def sign_changes(psi, rel=1e-8):
    """Number of sign changes, ignoring samples below ``rel`` times the peak."""
    v = np.real(psi.values)
    v = v[np.abs(v) > rel * np.max(np.abs(v))]
    return int(np.count_nonzero(np.diff(np.sign(v))))


# spectral models

def _levels(spectrum):
    return spectrum.eigenvalues if isinstance(spectrum, SpectrumReport) else np.asarray(spectrum, dtype=float)


def verify_geometric(spectrum, q, N, tol=1e-3):
    """Fit ``E_{kN+l} = E_l q^{2k}`` to the computed levels.

    Returns a SpectrumReport whose ``fit_params`` are the least-squares
    ``E_0..E_{N-1}`` and whose residuals are
    ``|E_{kN+l} - E_l q^{2k}| / |E_l q^{2k}|``.  ``grid_meta['mismatch']`` is
    set when any residual exceeds ``tol``.
    """
    E = _levels(spectrum)
    if E.size < 2 * N:
        raise PreconditionError("need at least 2N levels for a geometric fit")
    q2 = float(q) ** 2
    n = np.arange(E.size)
    k, l = n // N, n % N
    w = q2**k
    base = np.array([np.dot(E[l == j], w[l == j]) / np.dot(w[l == j], w[l == j]) for j in range(N)])
    model = base[l] * w
    res = np.abs(E - model) / np.abs(model)
    meta = dict(spectrum.grid_meta) if isinstance(spectrum, SpectrumReport) else {}
    meta.update(mismatch=bool(np.any(res > tol)), tol=tol)
    return SpectrumReport(E, f"geometric(q^2={q2}, N={N})", tuple(base), res, meta)


def verify_arithmetic(spectrum, tol=2e-3):
    """Fit ``E_n = base + n * step``; residuals are absolute."""
    E = _levels(spectrum)
    if E.size < 2:
        raise PreconditionError("need at least two levels")
    n = np.arange(E.size)
    step, base = np.polyfit(n, E, 1)
    res = np.abs(E - (base + step * n))
    meta = dict(spectrum.grid_meta) if isinstance(spectrum, SpectrumReport) else {}
    meta.update(mismatch=bool(np.any(res > tol)), tol=tol)
    return SpectrumReport(E, f"arithmetic(step={step})", (float(base), float(step)), res, meta)


def match_levels(computed, model):
    """Index of the computed level nearest in ``log|E|`` to each model level."""
    c = np.log(np.abs(np.asarray(computed, dtype=float)))
    m = np.log(np.abs(np.asarray(model, dtype=float)))
    return np.argmin(np.abs(c[None, :] - m[:, None]), axis=1)


# ladder operators

def _leibniz(a, b, order):
    """Jet of the product of two jets, through ``order`` derivatives."""
    out = np.zeros((order + 1, a.shape[1]), dtype=np.result_type(a, b))
    for m in range(order + 1):
        for i in range(m + 1):
            out[m] += comb(m, i) * a[i] * b[m - i]
    return out


def _compose(jets, sign):
    """Coefficients ``c_k(x)`` of ``(s d + f_{j_r}) ... (s d + f_{j_1})``.

    ``jets`` lists the factors from right to left as arrays of ``f`` and its
    derivatives; ``s = sign``.  Each factor uses up one derivative order.
    """
    order = jets[0].shape[0] - 1
    n = jets[0].shape[1]
    one = np.zeros((order + 1, n))
    one[0] = 1.0
    coeffs = [one]
    for fj in jets:
        order -= 1
        new = []
        for k in range(len(coeffs) + 1):
            c = np.zeros((order + 1, n))
            if k < len(coeffs):
                c += sign * coeffs[k][1 : order + 2] + _leibniz(fj, coeffs[k], order)
            if k >= 1:
                c += sign * coeffs[k - 1][: order + 1]
            new.append(c)
        coeffs = new
    return [c[0] for c in coeffs]


class Ladder:
    """Ladder operators and Hamiltonian of a chain.

    Parameters
    ----------
    source : ChainGrid or ClosedChain
        Marched q-closed chain (``H = L_0 - nu``) or exact q = 1 chain
        (``H = L_0``).

    Notes
    -----
    With ``kappa = omega`` at q = 1 and ``kappa = 0`` otherwise the algebra is
    ``H B+ = B+ (q^2 H + kappa)`` and ``B+ B- = prod_k (H - E_k)``.
    """

    def __init__(self, source):
        if isinstance(source, ChainGrid):
            sol = source.solution
            self.N, self.q = sol.N, sol.q
            self.E = np.asarray(sol.E, dtype=float)
            self.kappa = 0.0
            self._shift = sol.lam[0] - sol.nu
        elif isinstance(source, ClosedChain):
            self.N, self.q = source.N, 1.0
            self.E = np.asarray(source.E, dtype=float)
            self.kappa = source.omega
            self._shift = source.lam[0]
        else:
            raise PreconditionError("ladder source must be a ChainGrid or ClosedChain")
        self.source = source

    def potential(self, x):
        f = self.source.jet(0, x, 1)
        return f[0] ** 2 - f[1] + self._shift

    def _jets(self, x, order):
        return [self.source.jet(j, x, order) for j in range(self.N)]

    def _apply(self, coeffs, derivs):
        return sum(c * d for c, d in zip(coeffs, derivs))

    def raising(self, x):
        """Coefficients of ``M+ = A_0^+ ... A_{N-1}^+`` on ``x``."""
        return _compose(self._jets(x, self.N)[::-1], -1.0)

    def lowering(self, x):
        """Coefficients of ``M- = A_{N-1}^- ... A_0^-`` on ``x``."""
        return _compose(self._jets(x, self.N), +1.0)

    def m_plus(self, psi):
        sp = psi.spline()
        x = psi.x
        return psi.with_values(self._apply(self.raising(x), [sp(x, nu=k) for k in range(self.N + 1)]))

    def m_minus(self, psi):
        sp = psi.spline()
        x = psi.x
        return psi.with_values(self._apply(self.lowering(x), [sp(x, nu=k) for k in range(self.N + 1)]))

    def raise_(self, psi):
        """``B+ psi`` on the grid of ``psi``."""
        q = self.q
        if q == 1:
            return self.m_plus(psi)
        sp = psi.spline()
        x = psi.x
        d = [np.sqrt(abs(q)) * q**k * sp(q * x, nu=k) for k in range(self.N + 1)]
        return psi.with_values(self._apply(self.raising(x), d))

    def lower(self, psi):
        """``B- psi``; for q != 1 on the nodes where ``x/q`` stays on the grid."""
        phi = self.m_minus(psi)
        q = self.q
        if q == 1:
            return phi
        reach = abs(q) * min(abs(psi.x0), abs(psi.x_max))
        lo = -reach if psi.x0 < 0 else abs(q) * psi.x0
        hi = reach if psi.x0 < 0 else abs(q) * psi.x_max
        sub = psi.restrict(lo, hi)
        sp = phi.spline()
        return sub.with_values(sp(sub.x / q) / np.sqrt(abs(q)))

    def hamiltonian(self, psi):
        """``-psi'' + u psi`` with the state differentiated by spline."""
        sp = psi.spline()
        x = psi.x
        return psi.with_values(-sp(x, nu=2) + self.potential(x) * psi.values)


def _as_ladder(solution):
    return solution if isinstance(solution, Ladder) else Ladder(solution)


def apply_ladder(solution, psi, direction):
    """Apply ``B+`` (``direction='raise'``) or ``B-`` (``'lower'``) to ``psi``."""
    lad = _as_ladder(solution)
    if direction == "raise":
        return lad.raise_(psi)
    if direction == "lower":
        return lad.lower(psi)
    raise PreconditionError("direction must be 'raise' or 'lower'")


@dataclass(frozen=True)
class AlgebraReport:
    """Relative residuals per test state of the raising, lowering and
    factorization relations."""

    energies: np.ndarray
    raise_residual: np.ndarray
    lower_residual: np.ndarray
    factor_residual: np.ndarray

    @property
    def max_residual(self):
        return float(max(self.raise_residual.max(), self.lower_residual.max(), self.factor_residual.max()))


def _rel(lhs, rhs, floor, margin):
    a, b = lhs.values[margin:-margin], rhs.values[margin:-margin]
    err = np.sqrt(lhs.dx * np.sum(np.abs(a - b) ** 2))
    scale = max(np.sqrt(lhs.dx * np.sum(np.abs(a) ** 2)), np.sqrt(lhs.dx * np.sum(np.abs(b) ** 2)), floor)
    return err / scale


def coarsen(psi, h):
    """Every m-th sample of ``psi`` with ``m = round(h/dx)`` (at least 1)."""
    m = max(1, int(round(h / psi.dx)))
    return GridFunction(psi.x0, psi.dx * m, psi.values[::m])


def algebra_residuals(solution, states, energies, margin=10, h=0.03):
    """Residuals of the ladder algebra on test states.

    For each state ``psi`` with energy ``E``:

    * raise: ``H B+ psi`` against ``B+ (q^2 H + kappa) psi``,
    * lower: ``H B- psi`` against ``q^{-2} B- (H - kappa) psi``,
    * factor: ``B+ B- psi`` against ``prod_k (H - E_k) psi``.

    Each residual is an L2 norm divided by the larger of the two sides'
    norms, floored at the natural operator scale
    ``|E| prod_k (|E| + |E_k|)^{1/2}`` (commutation) or
    ``prod_k (|E| + |E_k|)`` (factorization) times ``||psi||``, so that
    states annihilated by ``B-`` still get a meaningful relative figure.
    ``margin`` nodes at each end are excluded.

    The relations involve up to 2N derivatives of the state.  Spline
    derivatives of that order amplify rounding like ``eps/h^{2N}``, so the
    states are first thinned to a spacing near ``h``; 0.03 balances this
    against the spline truncation error for the potentials used here.
    """
    lad = _as_ladder(solution)
    q2 = lad.q**2
    rr, lr, fr = [], [], []
    for psi, E in zip(states, energies):
        norm = psi.norm()
        psi = coarsen(psi, h)
        spread = np.prod(np.maximum(np.abs(E) + np.abs(lad.E), 1.0))
        floor_c = max(abs(E), 1.0) * np.sqrt(spread) * norm
        Hpsi = lad.hamiltonian(psi)
        up = lad.raise_(psi)
        lhs = lad.hamiltonian(up)
        rhs = up.with_values(q2 * lad.raise_(Hpsi).values + lad.kappa * up.values)
        rr.append(_rel(lhs, rhs, floor_c, margin))
        down = lad.lower(psi)
        lhs = lad.hamiltonian(down)
        rhs = down.with_values((lad.lower(Hpsi).values - lad.kappa * down.values) / q2)
        lr.append(_rel(lhs, rhs, floor_c, margin))
        lhs = lad.m_plus(lad.m_minus(psi))
        rhs = psi
        for Ek in lad.E:
            rhs = lad.hamiltonian(rhs).values - Ek * rhs.values
            rhs = psi.with_values(rhs)
        fr.append(_rel(lhs, rhs, spread * norm, margin))
    return AlgebraReport(np.asarray(energies, dtype=float), np.array(rr), np.array(lr), np.array(fr))


def ladder_overlap(ladder, psi_from, psi_to):
    """L2 distance between normalized ``B+ psi_from`` and ``psi_to`` after
    aligning the sign, and the squared-norm ratio ``||B+ psi||^2 / ||psi||^2``."""
    lad = _as_ladder(ladder)
    up = lad.raise_(psi_from)
    ratio = up.norm() ** 2 / psi_from.norm() ** 2
    upn = up.normalized()
    target = psi_to.normalized()
    s = np.sign(np.real(upn.inner(target)))
    return (upn.with_values(upn.values - s * target.values)).norm(), ratio
