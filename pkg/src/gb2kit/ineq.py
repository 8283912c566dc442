"""Inequality indices: Gini, Hoover, Theil T, Theil L and DMMS.

Closed forms exist for every family; :func:`index_quadrature` evaluates the
defining integrals directly and serves as an independent check on them.
"""

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import integrate, optimize
from scipy import special as sc

from . import dist
from .dist import NonExistent, generalized
from .specfun import (EULER_GAMMA, DivergenceError, digamma, erf, hyp2f1,
                      hyp3f2_unit, ln_beta, ln_gamma, reg_inc_beta,
                      reg_inc_gamma_q)

INDEX_NAMES = ("gini", "hoover", "theil_t", "theil_l", "dmms")


@dataclass(frozen=True)
class IndexReport:
    gini: object
    hoover: object
    theil_t: object
    theil_l: object
    dmms: object
    method: str = "closed_form"

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = None if v is NonExistent else v
        return out

    @classmethod
    def from_dict(cls, obj):
        kw = {k: (NonExistent if obj.get(k) is None else float(obj[k])) for k in INDEX_NAMES}
        return cls(**kw, method=obj.get("method", "closed_form"))


# --- Gini -----------------------------------------------------------------------

def gini_closed(d):
    if not dist.mean_exists(d):
        return NonExistent
    f, P = d.family, d.params
    if f == "BP":
        return gini_bp(P["p"], P["q"])
    if f == "GB2":
        return _gini_gb2(P["p"], P["q"], P["alpha"])
    if f == "GIGa":
        return _gini_giga(P["alpha"], P["gamma"])
    if f == "IGa":
        a = P["alpha"]
        return math.exp(ln_gamma(a - 0.5) - ln_gamma(a)) / math.sqrt(math.pi)
    if f == "GGa":
        return _gini_gga(P["alpha"], P["gamma"])
    if f == "Ga":
        a = P["alpha"]
        return math.exp(ln_gamma(a + 0.5) - ln_gamma(a + 1.0)) / math.sqrt(math.pi)
    return erf(P["sigma"] / 2.0)


def gini_bp(p, q):
    """BP Gini in product form 2 B(2p, 2q - 1) / (p B(p, q)^2)."""
    return 2.0 * math.exp(ln_beta(2 * p, 2 * q - 1) - 2 * ln_beta(p, q)) / p


def _gini_gb2(p, q, a):
    r = 1.0 / a
    pref = math.exp(ln_beta(2 * q - r, 2 * p + r) - ln_beta(p, q) - ln_beta(p + r, q - r))
    f1 = hyp3f2_unit(1.0, p + q, 2 * p + r, p + 1.0, 2 * (p + q))
    f2 = hyp3f2_unit(1.0, p + q, 2 * p + r, p + 1.0 + r, 2 * (p + q))
    return float(pref * (f1 / p - f2 / (p + r)))


def gini_bp_hypergeometric(p, q):
    """BP Gini assembled from the two 3F2 terms (the GB2 form at alpha = 1)."""
    return _gini_gb2(p, q, 1.0)


def _gini_giga(a, g):
    r = 1.0 / g
    b = a - r
    t1 = hyp2f1(b, 2 * a - r, b + 1.0, -1.0) / b
    t2 = hyp2f1(a, 2 * a - r, a + 1.0, -1.0) / a
    return (t1 - t2) * math.exp(-ln_beta(a, b))


def _gini_gga(a, g):
    r = 1.0 / g
    c = 2 * a + r
    t1 = hyp2f1(1.0, c, a + 1.0, 0.5) / a
    t2 = hyp2f1(1.0, c, a + r + 1.0, 0.5) / (a + r)
    return (t1 - t2) * math.exp(-c * math.log(2.0) - ln_beta(a, a + r))


# --- Hoover ---------------------------------------------------------------------

def hoover_closed(d):
    """Hoover (Pietra) index as F(mu) - F1(mu), F1 the first-moment CDF."""
    mu = dist.mean(d)
    if mu is NonExistent:
        return NonExistent
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, b = params
        lz = a * (math.log(mu) - math.log(b))
        z = sc.expit(lz)
        return reg_inc_beta(z, p, q) - reg_inc_beta(z, p + 1.0 / a, q - 1.0 / a)
    if kind == "GIGa":
        a, g, b = params
        t = (b / mu) ** g
        return reg_inc_gamma_q(a, t) - reg_inc_gamma_q(a - 1.0 / g, t)
    if kind == "GGa":
        a, g, b = params
        t = (mu / b) ** g
        return reg_inc_gamma_q(a + 1.0 / g, t) - reg_inc_gamma_q(a, t)
    return erf(params[1] / (2.0 * math.sqrt(2.0)))


def hoover_bp(p, q):
    """p^(p-1) (q-1)^(q-1) (p+q-1)^(1-p-q) / B(p, q)."""
    lg = ((p - 1) * math.log(p) + (q - 1) * math.log(q - 1)
          + (1 - p - q) * math.log(p + q - 1) - ln_beta(p, q))
    return math.exp(lg)


# --- Theil ------------------------------------------------------------------------

def theil_t_closed(d):
    if not dist.mean_exists(d):
        return NonExistent
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, _ = params
        r = 1.0 / a
        return (r * (digamma(p + r) - digamma(q - r))
                + ln_beta(p, q) - ln_beta(p + r, q - r))
    if kind == "GIGa":
        a, g, _ = params
        r = 1.0 / g
        return -r * digamma(a - r) + ln_gamma(a) - ln_gamma(a - r)
    if kind == "GGa":
        a, g, _ = params
        r = 1.0 / g
        return r * digamma(a + r) + ln_gamma(a) - ln_gamma(a + r)
    return params[1] ** 2 / 2.0


def theil_l_closed(d):
    if not dist.mean_exists(d):
        return NonExistent
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, _ = params
        r = 1.0 / a
        return (r * (digamma(q) - digamma(p))
                - ln_beta(p, q) + ln_beta(p + r, q - r))
    if kind == "GIGa":
        a, g, _ = params
        r = 1.0 / g
        return r * digamma(a) - ln_gamma(a) + ln_gamma(a - r)
    if kind == "GGa":
        a, g, _ = params
        r = 1.0 / g
        return -r * digamma(a) + ln_gamma(a + r) - ln_gamma(a)
    return params[1] ** 2 / 2.0


# --- DMMS ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DmmsResult:
    dmms: float
    mpdf: float
    half_width: float
    left: float
    right: float
    mode: float


def dmms_details(d):
    """DMMS = 1 - MPDF * HW with the half-height crossings located by root finding.

    HW is the width of {x : pdf(x) >= MPDF / 2}; for densities that decrease
    from x = 0 the interval starts at 0.
    """
    mpdf = dist.max_density(d)
    if not math.isfinite(mpdf):
        raise ValueError(f"{d}: density is unbounded at 0, DMMS undefined")
    m = dist.mode(d)
    s = dist.scale(d)
    target = math.log(mpdf / 2.0)

    def f(x):
        return dist.logpdf(d, x) - target

    if m > 0:
        lo = m
        while f(lo) >= 0:
            lo /= 2.0
            if lo < 1e-300:
                raise ArithmeticError("left half-height crossing not bracketed")
        left = optimize.brentq(f, lo, m, xtol=1e-15 * m, rtol=1e-15, maxiter=500)
        start = m
    else:
        left = 0.0
        start = s * 1e-12
    hi = max(2.0 * start, s)
    while f(hi) >= 0:
        hi *= 2.0
    right = optimize.brentq(f, start if m > 0 else start, hi,
                            xtol=1e-15 * (m or s), rtol=1e-15, maxiter=500)
    hw = right - left
    return DmmsResult(1.0 - mpdf * hw, mpdf, hw, left, right, m)


def dmms(d):
    return dmms_details(d).dmms


def closed_form_indices(d):
    try:
        dm = dmms(d)
    except ValueError:
        dm = NonExistent
    return IndexReport(gini_closed(d), hoover_closed(d), theil_t_closed(d),
                       theil_l_closed(d), dm, "closed_form")


# --- quadrature oracle ----------------------------------------------------------------

_QUAD = dict(epsabs=1e-15, epsrel=1e-11, limit=400)


def _integrate_log(func, breaks):
    """Integrate func(t) over the real line, t = ln x, split at ``breaks``."""
    pts = sorted(set(breaks))
    pieces = [(-np.inf, pts[0])] + list(zip(pts[:-1], pts[1:])) + [(pts[-1], np.inf)]
    total, err = 0.0, 0.0
    for a, b in pieces:
        v, e = integrate.quad(func, a, b, **_QUAD)
        total += v
        err += e
    return total, err


def index_quadrature(d, which):
    """Evaluate an index from its defining integral.

    Gini uses E|X - Y| = 2 int F (1 - F) dx; the others integrate the density
    directly.  All integrals run over t = ln x on the whole real line.  The
    mean is itself obtained by quadrature.
    """
    if which not in ("gini", "hoover", "theil_t", "theil_l"):
        raise ValueError(f"unknown index {which!r}")
    if not dist.mean_exists(d):
        raise DivergenceError(f"{d}: mean does not exist")
    kind, params = generalized(d)

    def ldens(t):
        # log of x * pdf(x), the density of t = ln x
        return float(dist.logpdf_logx(kind, params, t)) + t

    def expo(v):
        return math.exp(v) if v > -745.0 else 0.0

    def dens(t):
        return expo(ldens(t))

    med = math.log(dist.quantile(d, 0.5))
    lo = math.log(dist.quantile(d, 1e-3))
    hi = math.log(dist.quantile(d, 1 - 1e-3))
    breaks = [lo, med, hi]
    mu, _ = _integrate_log(lambda t: expo(ldens(t) + t), breaks)
    lmu = math.log(mu)
    breaks.append(lmu)

    if which == "gini":
        def g(t):
            if t > 700.0 or t < -700.0:
                return 0.0
            F, S = dist._cdf_sf(d, np.asarray(math.exp(t)))
            F, S = float(F), float(S)
            if F == 0.0 or S == 0.0:
                return 0.0
            return expo(math.log(F) + math.log(S) + t)
        v, e = _integrate_log(g, breaks)
        val = v / mu
    elif which == "hoover":
        # |x - mu| = mu |e^(t - lmu) - 1|
        v, e = _integrate_log(lambda t: dens(t) * abs(math.expm1(min(t - lmu, 700.0))), breaks)
        val = v / 2.0
    elif which == "theil_t":
        v, e = _integrate_log(lambda t: expo(ldens(t) + t - lmu) * (t - lmu), breaks)
        val = v
    else:
        v, e = _integrate_log(lambda t: dens(t) * (lmu - t), breaks)
        val = v
    if not math.isfinite(val) or e > 1e-8 * max(abs(v), 1e-300) + 1e-14:
        raise DivergenceError(f"{which} quadrature for {d} did not reach tolerance (err {e:.2e})")
    return val


# --- BP approximation and limits ----------------------------------------------------

def gini_bp_approx(p, q):
    """Rational approximation (pq + 6p + 7q - 6) / (8 (pq + q - 1)) to the BP Gini."""
    return (p * q + 6 * p + 7 * q - 6) / (8.0 * (p * q + q - 1))


def bp_asymptotics(p, q):
    """Limit expressions for BP indices at large p and/or q.

    Keys name the regime: ``*_q_large`` holds p fixed with q -> inf,
    ``*_p1_q_large`` is the p = 1 special case, ``*_p_large_q2`` the q = 2
    case, ``*_both_large`` both parameters large.
    """
    sqrt2pi = math.sqrt(2 * math.pi)
    e = math.e
    both = (p ** -0.5 + q ** -0.5) / sqrt2pi
    return {
        "gini_q_large": math.exp(ln_gamma(p + 0.5) - ln_gamma(p + 1)) / math.sqrt(math.pi),
        "gini_p_large": math.exp(ln_gamma(q - 0.5) - ln_gamma(q)) / math.sqrt(math.pi),
        "hoover_q_large": math.exp(-p + (p - 1) * math.log(p) - ln_gamma(p)),
        "hoover_p_large": math.exp(1 - q + (q - 1) * math.log(q - 1) - ln_gamma(q)) if q > 1 else math.nan,
        "gini_p1_q_large": 0.5 + 1 / (4 * q),
        "gini_p_large_q2": 0.5 + 1 / (4 * p),
        "hoover_p1_q_large": 1 / e + 1 / (2 * e * q),
        "hoover_p_large_q2": 1 / e + 1 / (2 * e * p),
        "gini_both_large": both,
        "hoover_both_large": both,
        "theil_t_p1_q_large": 1 - EULER_GAMMA + 1 / (2 * q),
        "theil_t_p_large_q2": EULER_GAMMA + 1 / (2 * p),
        "theil_t_both_large": 1 / (2 * q) + 1 / (2 * p),
    }


# --- empirical ---------------------------------------------------------------------

def empirical_indices(s):
    """Sample versions of the indices for a :class:`~gb2kit.sample.Sample`.

    DMMS comes from a Gaussian kernel density estimate with Silverman's
    rule-of-thumb bandwidth, evaluated on a grid by binned FFT convolution.
    """
    x = np.asarray(s.values, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("empirical indices need at least two observations")
    if np.any(x <= 0):
        raise ValueError("empirical indices need positive observations")
    mu = float(np.mean(x))
    if x[0] == x[-1]:
        return IndexReport(0.0, 0.0, 0.0, 0.0, 0.0, "empirical")
    ranks = np.arange(1, n + 1)
    gini = 2.0 * np.dot(ranks, x) / (n * x.sum()) - (n + 1.0) / n
    hoover = float(np.mean(np.abs(x - mu))) / (2.0 * mu)
    r = x / mu
    theil_t = float(np.mean(r * np.log(r)))
    theil_l = float(np.mean(-np.log(r)))
    return IndexReport(float(gini), hoover, theil_t, theil_l, kde_dmms(x), "empirical")


def silverman_bandwidth(x):
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) or sd
    return 0.9 * spread * x.size ** (-0.2)


def kde_grid(x, bandwidth=None, max_points=2 ** 22):
    """Gaussian KDE of ``x`` on a uniform grid; returns (grid, density)."""
    x = np.sort(np.asarray(x, dtype=float))
    h = bandwidth or silverman_bandwidth(x)
    lo, hi = x[0] - 4 * h, x[-1] + 4 * h
    m = int(min(max_points, max(1024, 2 ** math.ceil(math.log2((hi - lo) / (h / 8))))))
    grid = np.linspace(lo, hi, m)
    dx = grid[1] - grid[0]
    # linear binning
    pos = (x - lo) / dx
    i = np.clip(np.floor(pos).astype(np.int64), 0, m - 2)
    w = pos - i
    counts = np.bincount(i, 1.0 - w, minlength=m) + np.bincount(i + 1, w, minlength=m)
    half = int(min(m - 1, math.ceil(5 * h / dx)))
    k = np.arange(-half, half + 1) * dx
    kernel = np.exp(-0.5 * (k / h) ** 2) / (h * math.sqrt(2 * math.pi))
    from scipy.signal import fftconvolve
    dens = fftconvolve(counts, kernel, mode="same") / x.size
    return grid, np.maximum(dens, 0.0)


def kde_dmms(x, bandwidth=None):
    grid, dens = kde_grid(x, bandwidth)
    j = int(np.argmax(dens))
    mpdf = dens[j]
    half = mpdf / 2.0
    below = np.flatnonzero(dens[:j] < half)
    if below.size:
        a = below[-1]
        left = np.interp(half, [dens[a], dens[a + 1]], [grid[a], grid[a + 1]])
    else:
        left = grid[0]
    left = max(left, 0.0)
    above = np.flatnonzero(dens[j:] < half)
    b = j + above[0]
    right = np.interp(half, [dens[b], dens[b - 1]], [grid[b], grid[b - 1]])
    return float(1.0 - mpdf * (right - left))
