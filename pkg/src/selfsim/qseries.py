"""q-special functions: Pochhammer symbols, q-exponentials, basic and
bilateral hypergeometric series, Ramanujan's 1psi1 sum and q-beta integral.

Every series evaluator returns a :class:`SeriesValue` carrying an error
estimate and a domain flag instead of silently returning garbage outside the
region of convergence.
"""

from dataclasses import dataclass
import decimal
import math
import sys

import numpy as np
from scipy import integrate

from .errors import DomainError, PoleError, PreconditionError

#: product truncation threshold for |a q^k|
PRODUCT_TAIL = 1e-17
#: relative size of a series term below which summation may stop
SERIES_TAIL = 1e-16
#: cap on the number of terms of any single series
MAX_TERMS = 200_000
#: decimal digits used for real bilateral sums
BILATERAL_DIGITS = 40
#: relative distance to 1 treated as "on the unit circle"
UNIT_TOL = 1e-14

_UNUSABLE = sys.float_info.max


@dataclass(frozen=True)
class QParam:
    """Deformation parameter with its regime.

    Parameters
    ----------
    q : complex
        The base.  Real values are stored as ``float``.
    regime : {'sub_unit', 'unit', 'root_of_unity', 'super_unit'}, optional
        Classified automatically when omitted.
    M : int, optional
        Order of the root of unity (``regime == 'root_of_unity'``).
    """

    q: complex
    regime: str = None
    M: int = None

    def __post_init__(self):
        q = complex(self.q)
        if q.imag == 0:
            q = q.real
        object.__setattr__(self, "q", q)
        regime = self.regime or _classify(q)
        M = self.M
        r = abs(q)
        if regime == "sub_unit":
            if not 0 < r < 1:
                raise PreconditionError(f"sub_unit regime needs 0<|q|<1, got {q}")
        elif regime == "unit":
            if abs(r - 1) > UNIT_TOL or abs(abs(complex(q).real) - 1) > UNIT_TOL:
                raise PreconditionError(f"unit regime needs q=+-1, got {q}")
        elif regime == "root_of_unity":
            if M is None:
                M = _root_order(q)
            if M is None or abs(complex(q) ** M - 1) > UNIT_TOL * max(1, M):
                raise PreconditionError(f"q={q} is not a root of unity of order {M}")
        elif regime == "super_unit":
            if not r > 1:
                raise PreconditionError(f"super_unit regime needs |q|>1, got {q}")
        else:
            raise PreconditionError(f"unknown regime {regime!r}")
        object.__setattr__(self, "regime", regime)
        object.__setattr__(self, "M", M)

    @property
    def q2(self):
        return self.q * self.q

    def __float__(self):
        return float(np.real(self.q))

    def __complex__(self):
        return complex(self.q)


def _root_order(q, max_order=1000):
    z = complex(q)
    w = 1.0 + 0j
    for m in range(1, max_order + 1):
        w *= z
        if abs(w - 1) < UNIT_TOL * m:
            return m
    return None


def _classify(q):
    r = abs(q)
    if r == 0:
        raise PreconditionError("q = 0 is not a valid deformation parameter")
    if abs(r - 1) <= UNIT_TOL:
        if abs(abs(complex(q).real) - 1) <= UNIT_TOL:
            return "unit"
        if _root_order(q) is not None:
            return "root_of_unity"
        raise PreconditionError(f"|q|=1 but q={q} is not a root of unity")
    return "sub_unit" if r < 1 else "super_unit"


def as_qparam(q):
    """Coerce a number or :class:`QParam` to :class:`QParam`."""
    return q if isinstance(q, QParam) else QParam(q)


def _qval(q):
    return q.q if isinstance(q, QParam) else q


@dataclass(frozen=True)
class SeriesValue:
    """Result of a series or product evaluation.

    ``in_domain=False`` means the value must not be used; ``value`` is then
    NaN and ``est_error`` is the largest finite float.
    """

    value: complex
    est_error: float
    terms_used: int
    in_domain: bool = True

    def __complex__(self):
        return complex(self.value)

    def __float__(self):
        return float(np.real(self.value))


def _out_of_domain(terms=0):
    return SeriesValue(complex(np.nan, np.nan), _UNUSABLE, terms, False)


def _clean(v):
    v = complex(v)
    return v.real if v.imag == 0 else v


# q-Pochhammer symbols

def _product_terms(a, q):
    """Number of factors of (a;q)_inf needed before |a q^k| < PRODUCT_TAIL."""
    if a == 0:
        return 0
    r = abs(q)
    k = math.ceil(math.log(PRODUCT_TAIL / abs(a)) / math.log(r)) if abs(a) > PRODUCT_TAIL else 0
    return max(k, 0) + 1


def qpochhammer(a, q, n=np.inf):
    """q-Pochhammer symbol ``(a;q)_n`` for integer or infinite ``n``.

    Parameters
    ----------
    a : complex
    q : QParam or complex
    n : int or inf
        Negative ``n`` uses ``(a;q)_{-n} = (-q/a)^n q^{n(n-1)/2} / (q/a;q)_n``.

    Returns
    -------
    SeriesValue
    """
    qv = _qval(q)
    if n == 0:
        return SeriesValue(1.0, 0.0, 0)
    if np.isinf(n):
        if n < 0 or not abs(qv) < 1:
            raise DomainError("(a;q)_inf needs |q|<1")
        if a == 0:
            return SeriesValue(1.0, 0.0, 0)
        K = _product_terms(a, qv)
        if K > 50_000_000:
            raise DomainError(f"(a;q)_inf needs {K} factors; q too close to the unit circle")
        value = _chunked_prod(a, qv, K)
        bound = abs(a) * abs(qv) ** K
        err = abs(value) * bound / (1 - abs(qv))
        return SeriesValue(_clean(value), float(err), K)
    n = int(n)
    if n > 0:
        value = np.prod(1 - a * qv ** np.arange(n))
        return SeriesValue(_clean(value), float(abs(value) * n * 2.2e-16), n)
    m = -n
    if a == 0:
        return SeriesValue(1.0, 0.0, m)
    den = np.prod(1 - (qv / a) * qv ** np.arange(m))
    if abs(den) < 1e-300 or np.min(np.abs(1 - (qv / a) * qv ** np.arange(m))) < 1e-15:
        raise PoleError(f"(a;q)_{n} has a pole at a={a}")
    value = (-qv / a) ** m * qv ** (m * (m - 1) / 2) / den
    return SeriesValue(_clean(value), float(abs(value) * m * 2.2e-16), m)


def _chunked_prod(a, q, K, chunk=1 << 20):
    value = 1.0 + 0j
    start = 0
    while start < K:
        k = np.arange(start, min(K, start + chunk))
        value *= np.prod(1 - a * np.asarray(q, dtype=complex) ** k)
        start += chunk
    return value


def qpochhammer_seq(a, q, nmax):
    """Array ``[(a;q)_0, ..., (a;q)_nmax]`` by cumulative product."""
    qv = _qval(q)
    factors = 1 - a * np.asarray(qv) ** np.arange(nmax)
    return np.concatenate(([1.0], np.cumprod(factors)))


def log_qpochhammer(a, q):
    """A logarithm of ``(a;q)_inf``, vectorised over ``a``.

    The sum of principal logarithms of the factors, so ``exp`` of it is the
    product.  Needs ``|q| < 1`` and no vanishing factor.
    """
    qv = _qval(q)
    if not 0 < abs(qv) < 1:
        raise DomainError("(a;q)_inf needs 0<|q|<1")
    a = np.asarray(a, dtype=complex)
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    K = _product_terms(amax, qv) if amax > 0 else 1
    powers = np.asarray(qv, dtype=complex) ** np.arange(K)
    return np.log1p(-a[..., None] * powers).sum(axis=-1)


def qbracket(n, q):
    """q-number ``[n] = (1 - q^{2n}) / (1 - q^2)``; equals ``n`` at ``q = +-1``."""
    if n < 0:
        raise PreconditionError("qbracket needs n >= 0")
    qv = _qval(q)
    if n == 0:
        return 0.0
    if np.isreal(qv):
        r = abs(float(np.real(qv)))
        if r == 1.0:
            return float(n)
        lr = math.log(r)
        return math.expm1(2 * n * lr) / math.expm1(2 * lr)
    q2 = qv * qv
    if abs(q2 - 1) < UNIT_TOL:
        return float(n)
    return _clean((1 - q2**n) / (1 - q2))


def qfactorial(n, q):
    """``[n]! = [1][2]...[n]``; equals ``n!`` at ``q = +-1``."""
    if n < 0:
        raise PreconditionError("qfactorial needs n >= 0")
    qv = _qval(q)
    if np.isreal(qv) and abs(float(np.real(qv))) == 1.0:
        return float(math.factorial(n))
    out = 1.0
    for k in range(1, n + 1):
        out *= qbracket(k, qv)
    return out


# generic summation

def _sum_one_sided(ratio, tol=SERIES_TAIL, max_terms=MAX_TERMS, start=1.0, dtype=complex):
    """Sum t_0 + t_1 + ... with t_0 = ``start`` and t_{n+1} = t_n * ratio(n).

    ``ratio`` returns ``None`` when the series terminates after term n.
    Summation stops once a term is below ``tol`` relative to the partial sum
    and terms have decreased three times in a row.

    Returns (sum, est_error, terms_used, converged).
    """
    total = dtype(start)
    t = dtype(start)
    prev = float(abs(t))
    decreasing = 0
    r = 0.0
    for n in range(max_terms):
        r = ratio(n)
        if r is None:
            return total, 0.0, n + 1, True
        t = t * r
        if t == 0:
            return total, 0.0, n + 2, True
        total += t
        at = float(abs(t))
        decreasing = decreasing + 1 if at < prev else 0
        prev = at
        ar = float(abs(r))
        tail = at * ar / (1 - ar) if ar < 1 else np.inf
        if decreasing >= 3 and max(tail, at) <= tol * float(abs(total)):
            return total, float(max(tail, at * tol)), n + 2, True
    return total, float(abs(t)), max_terms + 1, False


def _asymptotic_ratio(ratio, q):
    """|t_{n+1}/t_n| deep in the tail, where q^n is below round-off."""
    n_big = int(math.ceil(math.log(1e-18) / math.log(abs(q)))) + 2
    vals = []
    for n in (n_big, n_big + 1):
        r = ratio(n)
        if r is None:
            return 0.0, n_big
        vals.append(abs(r))
    return max(vals), n_big


def _terminates(factors_at, n_max):
    """First n <= n_max at which one of ``factors_at(n)`` vanishes, else None."""
    for n in range(n_max + 1):
        if any(abs(f) < 1e-15 for f in factors_at(n)):
            return n
    return None


# q-exponentials

def q_exp_small(z, q2, form="product"):
    """``e_{q2}(z) = sum z^n / (q2;q2)_n = 1 / (z;q2)_inf``.

    Parameters
    ----------
    z : complex
    q2 : float
        Base, ``0 < q2 < 1``.
    form : {'product', 'series'}
        The series form converges only for ``|z| < 1``.
    """
    if not 0 < abs(q2) < 1:
        raise DomainError("e_q(z) needs 0 < |q2| < 1")
    if form == "series":
        if abs(z) >= 1:
            return _out_of_domain()
        val, err, n, ok = _sum_one_sided(lambda n: z / (1 - q2 ** (n + 1)))
        return SeriesValue(_clean(val), err, n, ok)
    if z == 0:
        return SeriesValue(1.0, 0.0, 0)
    K = _product_terms(z, q2)
    k = np.arange(K)
    if np.min(np.abs(1 - z * np.asarray(q2, dtype=complex) ** k)) < 1e-14:
        raise PoleError(f"e_q(z) has a pole at z={z}")
    p = qpochhammer(z, q2, np.inf)
    val = 1 / complex(p.value)
    return SeriesValue(_clean(val), float(abs(val) ** 2 * p.est_error), p.terms_used)


def q_exp_big(z, p, form="product"):
    """``E_p(z) = sum p^{n(n-1)/2} z^n / (p;p)_n = (-z;p)_inf``, entire in z.

    ``p`` is the base with ``0 < p < 1``; for the formal regime q^2 > 1 of a
    q-oscillator use ``p = q^{-2}``.
    """
    if not 0 < abs(p) < 1:
        raise DomainError("E_p(z) needs 0 < |p| < 1")
    if form == "series":
        val, err, n, ok = _sum_one_sided(lambda n: z * p**n / (1 - p ** (n + 1)))
        return SeriesValue(_clean(val), err, n, ok)
    return qpochhammer(-z, p, np.inf)


# basic hypergeometric series

def basic_phi(a_list, b_list, q, z, tol=SERIES_TAIL):
    """Basic hypergeometric series ``r phi s``.

    Term n is ``prod (a_i;q)_n / ((q;q)_n prod (b_i;q)_n)
    * [(-1)^n q^{n(n-1)/2}]^{1+s-r} * z^n``.

    Returns ``in_domain=False`` when the series diverges (r = s+1 with
    |z| >= 1, or r > s+1 without termination).
    """
    qv = _qval(q)
    if not 0 < abs(qv) < 1:
        raise DomainError("basic_phi needs 0 < |q| < 1")
    a_list, b_list = list(a_list), list(b_list)
    r, s = len(a_list), len(b_list)
    expo = 1 + s - r

    def ratio(n):
        qn = qv**n
        num = 1.0
        for a in a_list:
            num *= 1 - a * qn
        if num == 0 or any(abs(1 - a * qn) < 1e-15 for a in a_list):
            return None
        den = 1 - qv ** (n + 1)
        for b in b_list:
            fb = 1 - b * qn
            if abs(fb) < 1e-15:
                raise PoleError(f"basic_phi: (b;q)_n vanishes for b={b}, n={n + 1}")
            den *= fb
        return num / den * (-qn) ** expo * z

    if z == 0:
        return SeriesValue(1.0, 0.0, 1)
    lim, n_big = _asymptotic_ratio(ratio, qv)
    if lim >= 1 and _terminates(lambda n: [1 - a * qv**n for a in a_list], n_big) is None:
        return _out_of_domain()
    val, err, n, ok = _sum_one_sided(ratio, tol=tol)
    return SeriesValue(_clean(val), err, n, ok)


def bilateral_psi(a_list, b_list, q, z, tol=SERIES_TAIL):
    """Bilateral basic hypergeometric series ``r psi s``.

    Term n (any integer) is ``prod (a_i;q)_n / prod (b_i;q)_n
    * [(-1)^n q^{n(n-1)/2}]^{s-r} * z^n``.  Both tails are summed separately,
    each with its own truncation; the result is flagged out of domain when
    either tail diverges.

    Near the inner edge of the annulus or a pole of the product side the
    terms can exceed the sum by many orders of magnitude.  Real arguments are
    therefore summed in decimal arithmetic with ``BILATERAL_DIGITS`` digits
    and complex ones in ``np.clongdouble``.
    """
    qv = _qval(q)
    if not 0 < abs(qv) < 1:
        raise DomainError("bilateral_psi needs 0 < |q| < 1")
    a_list, b_list = list(a_list), list(b_list)
    if z == 0:
        raise DomainError("bilateral_psi needs z != 0")
    args = [qv, z] + a_list + b_list
    if all(np.isreal(v) for v in args):
        with decimal.localcontext() as ctx:
            ctx.prec = BILATERAL_DIGITS
            conv = lambda v: decimal.Decimal(float(np.real(v)))
            return _bilateral(
                [conv(a) for a in a_list], [conv(b) for b in b_list], conv(qv), conv(z), tol, decimal.Decimal
            )
    ext = np.clongdouble
    return _bilateral([ext(a) for a in a_list], [ext(b) for b in b_list], ext(qv), ext(z), tol, ext)


def _bilateral(a_list, b_list, qv, z, tol, dtype):
    r, s = len(a_list), len(b_list)
    expo = s - r

    def ratio_pos(n):
        qn = qv**n
        if any(abs(1 - a * qn) < 1e-15 for a in a_list):
            return None
        num = np.prod([1 - a * qn for a in a_list]) if a_list else dtype(1)
        den = dtype(1)
        for b in b_list:
            fb = 1 - b * qn
            if abs(fb) < 1e-15:
                raise PoleError(f"bilateral_psi: (b;q)_n vanishes for b={b}")
            den *= fb
        return num / den * (-qn) ** expo * z

    def ratio_neg(n):
        # t_{-(n+1)} / t_{-n}, written without negative powers of q
        qn1 = qv ** (n + 1)
        if any(abs(qn1 - b) < 1e-15 for b in b_list):
            return None
        num = np.prod([qn1 - b for b in b_list]) if b_list else dtype(1)
        den = dtype(1)
        for a in a_list:
            fa = qn1 - a
            if abs(fa) < 1e-15:
                raise PoleError(f"bilateral_psi: (a;q)_-n has a pole for a={a}")
            den *= fa
        return num / den * (-1) ** expo / z

    lim_p, n_big = _asymptotic_ratio(ratio_pos, qv)
    lim_n, _ = _asymptotic_ratio(ratio_neg, qv)
    term_p = _terminates(lambda n: [1 - a * qv**n for a in a_list], n_big)
    term_n = _terminates(lambda n: [qv ** (n + 1) - b for b in b_list], n_big)
    if (lim_p >= 1 and term_p is None) or (lim_n >= 1 and term_n is None):
        return _out_of_domain()
    vp, ep, np_, okp = _sum_one_sided(ratio_pos, tol=tol, dtype=dtype)
    t_m1 = ratio_neg(0)
    if t_m1 is None:
        vn, en, nn, okn = dtype(0), 0.0, 0, True
    else:
        vn, en, nn, okn = _sum_one_sided(lambda n: ratio_neg(n + 1), tol=tol, start=t_m1, dtype=dtype)
    return SeriesValue(_clean(vp + vn), float(ep + en), np_ + nn, bool(okp and okn))


def _pochinf(a, q):
    return complex(qpochhammer(a, q, np.inf).value)


def ramanujan_1psi1_product(a, b, q, z):
    """Product side of Ramanujan's sum,
    ``(q, b/a, az, q/(az); q)_inf / (b, q/a, z, b/(az); q)_inf``,
    valid for ``|b/a| < |z| < 1``."""
    qv = _qval(q)
    num = _pochinf(qv, qv) * _pochinf(b / a, qv) * _pochinf(a * z, qv) * _pochinf(qv / (a * z), qv)
    den = _pochinf(b, qv) * _pochinf(qv / a, qv) * _pochinf(z, qv) * _pochinf(b / (a * z), qv)
    if den == 0:
        raise PoleError("1psi1 product has a vanishing denominator")
    return _clean(num / den)


def psi01_product(b, q, z):
    """Closed form ``0psi1(b;q,z) = (q, z, q/z; q)_inf / (b, b/z; q)_inf`` for |z| > |b|."""
    qv = _qval(q)
    num = _pochinf(qv, qv) * _pochinf(z, qv) * _pochinf(qv / z, qv)
    den = _pochinf(b, qv) * _pochinf(b / z, qv)
    if den == 0:
        raise PoleError("0psi1 product has a vanishing denominator")
    return _clean(num / den)


# Ramanujan q-beta integral

def _log_qprod_neg(x, c, q2):
    """log (-x q2/c; q2)_inf for positive x (vectorised)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = x * q2 / c
    K = _product_terms(float(np.max(u)), q2) if np.max(u) > 0 else 1
    k = np.arange(K)
    return np.log1p(np.outer(u, q2**k)).sum(axis=1)


def ramanujan_beta_integral(tau, c, q2, method="closed"):
    """``int_0^inf lam^tau dlam / (-lam q2/c; q2)_inf``.

    Closed form ``-(pi/sin(pi tau)) (q2^{-tau}; q2)_inf / (q2; q2)_inf
    * (c/q2)^{tau+1}``, finite for ``tau > -1`` not an integer.

    Parameters
    ----------
    tau, c, q2 : float
    method : {'closed', 'quadrature'}
    """
    if not 0 < q2 < 1:
        raise DomainError("q-beta integral needs 0 < q2 < 1")
    if not c > 0:
        raise DomainError("q-beta integral needs c > 0")
    if not tau > -1:
        raise DomainError("q-beta integral diverges at 0 for tau <= -1")
    if method == "closed":
        if abs(tau - round(tau)) < 1e-12:
            raise PoleError("closed form has a pole at integer tau")
        p1 = qpochhammer(q2 ** (-tau), q2, np.inf)
        p2 = qpochhammer(q2, q2, np.inf)
        pref = -math.pi / math.sin(math.pi * tau) * (c / q2) ** (tau + 1)
        val = pref * complex(p1.value).real / complex(p2.value).real
        err = abs(val) * (p1.est_error / max(abs(p1.value), 1e-300) + p2.est_error / abs(p2.value) + 1e-15)
        return SeriesValue(val, float(err), p1.terms_used + p2.terms_used)
    if method != "quadrature":
        raise PreconditionError(f"unknown method {method!r}")

    # lam = exp(t); integrand exp((tau+1) t - log(-e^t q2/c; q2)_inf)
    def g(t):
        return math.exp((tau + 1) * t - _log_qprod_neg(math.exp(t), c, q2)[0])

    t_lo = math.log(c) + math.log(1e-22) / (tau + 1)
    t_hi = math.log(c)
    while g(t_hi) > 1e-22 * g(math.log(c)) or t_hi < math.log(c) + 5:
        t_hi += 2.0
    val, err = integrate.quad(g, t_lo, t_hi, epsabs=0, epsrel=1e-13, limit=400)
    return SeriesValue(val, float(err), 0)
