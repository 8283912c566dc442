"""Special functions used by the distribution and inequality-index formulas.

The gamma/beta/error-function family is delegated to :mod:`scipy.special`
(vectorised, double precision).  The hypergeometric functions are summed here:
``hyp2f1`` for |z| < 1 (with a Pfaff transformation for negative arguments) and
``hyp3f2_unit`` for the unit-argument 3F2 that appears in the GB2 Gini index.
"""

import math

import numpy as np
from scipy import special as sc

EULER_GAMMA = 0.57721566490153286061

_BLOCK = 4096
_MAX_TERMS = 1_000_000
_TAIL_TOL = 1e-14


class DivergenceError(ArithmeticError):
    """A series fails its convergence condition or its iteration budget."""


def _require_positive(name, x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"{name} requires positive arguments")
    return arr


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def ln_gamma(x):
    """Natural log of the gamma function for x > 0."""
    x = _require_positive("ln_gamma", x)
    return _scalar_or_array(sc.gammaln(x))


def digamma(x):
    """Logarithmic derivative of the gamma function for x > 0."""
    x = _require_positive("digamma", x)
    return _scalar_or_array(sc.psi(x))


def ln_beta(a, b):
    """ln B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b)."""
    a = _require_positive("ln_beta", a)
    b = _require_positive("ln_beta", b)
    return _scalar_or_array(sc.betaln(a, b))


def reg_inc_beta(x, p, q):
    """Regularized incomplete beta function I(x; p, q) on [0, 1]."""
    p = _require_positive("reg_inc_beta", p)
    q = _require_positive("reg_inc_beta", q)
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise ValueError("reg_inc_beta requires 0 <= x <= 1")
    return _scalar_or_array(sc.betainc(p, q, x))


def reg_inc_gamma_q(a, x):
    """Upper regularized incomplete gamma Q(a, x) = Γ(a, x) / Γ(a)."""
    a = _require_positive("reg_inc_gamma_q", a)
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise ValueError("reg_inc_gamma_q requires x >= 0")
    return _scalar_or_array(sc.gammaincc(a, x))


def reg_inc_gamma_p(a, x):
    """Lower regularized incomplete gamma P(a, x) = 1 - Q(a, x)."""
    a = _require_positive("reg_inc_gamma_p", a)
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise ValueError("reg_inc_gamma_p requires x >= 0")
    return _scalar_or_array(sc.gammainc(a, x))


def erf(x):
    return _scalar_or_array(sc.erf(np.asarray(x, dtype=float)))


def _is_nonpositive_int(v):
    return v <= 0 and float(v).is_integer()


def hyp2f1(a, b, c, z):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real -1 <= z < 1.

    Negative arguments are first mapped into (0, 1/2] by the Pfaff
    transformation 2F1(a, b; c; z) = (1 - z)^(-a) 2F1(a, c - b; c; z/(z - 1)),
    choosing the variant whose series has non-negative terms when possible.
    """
    if _is_nonpositive_int(c):
        raise ValueError("hyp2f1: c must not be a non-positive integer")
    if not -1.0 <= z < 1.0:
        raise ValueError("hyp2f1 supports -1 <= z < 1 only")
    if z == 0.0:
        return 1.0
    if z < 0.0:
        w = z / (z - 1.0)
        if c - b >= 0 and a >= 0:
            return (1.0 - z) ** (-a) * _gauss_series(a, c - b, c, w)
        if c - a >= 0 and b >= 0:
            return (1.0 - z) ** (-b) * _gauss_series(c - a, b, c, w)
        return (1.0 - z) ** (-a) * _gauss_series(a, c - b, c, w)
    return _gauss_series(a, b, c, z)


def _gauss_series(a, b, c, z, tol=1e-16):
    term = 1.0
    total = 1.0
    for n in range(_MAX_TERMS):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        term *= ratio
        if term == 0.0:
            return total
        total += term
        r = abs(ratio)
        if r < 1.0 and abs(term) * r / (1.0 - r) <= tol * abs(total):
            return total
    raise DivergenceError(f"2F1({a}, {b}; {c}; {z}) did not converge in {_MAX_TERMS} terms")


def hyp3f2_unit(a1, a2, a3, b1, b2):
    """Generalized hypergeometric 3F2(a1, a2, a3; b1, b2; 1).

    Requires the excess s = b1 + b2 - a1 - a2 - a3 > 0.  When some upper
    parameter exceeds s, one Thomae transformation pivoting on the largest
    upper parameter raises the excess to that parameter, which speeds up the
    algebraic decay of the terms.  The remaining series is summed block-wise
    from log-magnitude term ratios with an integral estimate of the tail.
    """
    for b in (b1, b2):
        if _is_nonpositive_int(b):
            raise ValueError("hyp3f2_unit: lower parameters must not be non-positive integers")
    excess = b1 + b2 - a1 - a2 - a3
    uppers = [a1, a2, a3]
    if any(_is_nonpositive_int(a) for a in uppers):
        return _sum_unit(uppers, [b1, b2], excess=None)
    if excess <= 0:
        raise DivergenceError(f"3F2 at unit argument diverges (excess {excess:g} <= 0)")

    i = int(np.argmax(uppers))
    pivot = uppers[i]
    rest = uppers[:i] + uppers[i + 1:]
    if pivot > excess and all(excess + r > 0 for r in rest):
        log_pref, sign = 0.0, 1.0
        for g, s in ((b1, 1), (b2, 1), (excess, 1), (pivot, -1),
                     (excess + rest[0], -1), (excess + rest[1], -1)):
            log_pref += s * sc.gammaln(g)
            sign *= sc.gammasgn(g)
        series = _sum_unit([b1 - pivot, b2 - pivot, excess],
                           [excess + rest[0], excess + rest[1]], excess=pivot)
        return sign * math.exp(log_pref) * series
    return _sum_unit(uppers, [b1, b2], excess=excess)


def _sum_unit(uppers, lowers, excess):
    a = np.asarray(uppers, dtype=float)[:, None]
    b = np.asarray(lowers, dtype=float)[:, None]
    total = 1.0
    log_t, sign = 0.0, 1.0
    n0 = 0
    last = 1.0
    while n0 < _MAX_TERMS:
        n = np.arange(n0, n0 + _BLOCK, dtype=float)
        ratio = np.prod(a + n, axis=0) / (np.prod(b + n, axis=0) * (n + 1.0))
        zero = np.flatnonzero(ratio == 0.0)
        if zero.size:
            ratio = ratio[:zero[0]]
        logs = log_t + np.cumsum(np.log(np.abs(ratio)))
        signs = sign * np.cumprod(np.sign(ratio))
        terms = signs * np.exp(logs)
        total += math.fsum(terms)
        if zero.size:
            return total
        log_t, sign = logs[-1], signs[-1]
        last = terms[-1]
        n0 += _BLOCK
        if excess is None:
            continue
        if abs(last) * n0 / excess <= _TAIL_TOL * abs(total):
            return total
        if abs(last) <= _TAIL_TOL * abs(total):
            break
    if excess is None:
        raise DivergenceError("terminating 3F2 series exceeded the term cap")
    # terms decay like n^-(1 + excess); add the integral remainder estimate
    tail = last * (n0 / excess - 0.5)
    if abs(last) > 1e-9 * abs(total):
        raise DivergenceError("3F2 at unit argument converges too slowly for the term cap")
    return total + tail
