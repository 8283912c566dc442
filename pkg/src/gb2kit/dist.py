"""The GB2 family and its limits: GB2, BP, GIGa, IGa, GGa, Ga and LN.

Every distribution is described by an immutable :class:`DistributionSpec`.
The functions in this module take a spec first and are vectorised over their
second argument.
"""

import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np
from scipy import special as sc

from .sample import Sample

FAMILIES = ("GB2", "BP", "GIGa", "IGa", "GGa", "Ga", "LN")

PARAM_NAMES = {
    "GB2": ("p", "q", "alpha", "beta"),
    "BP": ("p", "q", "beta"),
    "GIGa": ("alpha", "gamma", "beta"),
    "IGa": ("alpha", "beta"),
    "GGa": ("alpha", "gamma", "beta"),
    "Ga": ("alpha", "beta"),
    "LN": ("mu", "sigma"),
}

POWER_TAIL_FAMILIES = ("GB2", "BP", "GIGa", "IGa")


class NonExistentType:
    """Marker for a moment or index whose defining integral diverges.

    Distinct from NaN: a NaN means a computation failed, NonExistent means
    the quantity is infinite for the given parameters.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NonExistent"

    def __reduce__(self):
        return (NonExistentType, ())


NonExistent = NonExistentType()


def exists(value):
    return value is not NonExistent


class NoPowerTail(ValueError):
    """Raised for families without a power-law upper tail."""


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    params: MappingProxyType

    def __init__(self, family, params=None, **kwargs):
        if family not in PARAM_NAMES:
            raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
        given = dict(params or {}, **kwargs)
        names = PARAM_NAMES[family]
        if set(given) != set(names):
            raise ValueError(f"{family} takes parameters {names}, got {sorted(given)}")
        values = {k: float(given[k]) for k in names}
        for k, v in values.items():
            if not math.isfinite(v):
                raise ValueError(f"{family}.{k} must be finite")
            if k != "mu" and v <= 0:
                raise ValueError(f"{family}.{k} must be strictly positive, got {v}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", MappingProxyType(values))

    def __getitem__(self, name):
        return self.params[name]

    def __hash__(self):
        return hash((self.family, tuple(self.params.items())))

    def __eq__(self, other):
        if not isinstance(other, DistributionSpec):
            return NotImplemented
        return self.family == other.family and dict(self.params) == dict(other.params)

    def __repr__(self):
        args = ", ".join(f"{k}={v:.6g}" for k, v in self.params.items())
        return f"{self.family}({args})"

    @property
    def values(self):
        """Parameters as a tuple in canonical order."""
        return tuple(self.params[k] for k in PARAM_NAMES[self.family])

    def replace(self, **changes):
        return DistributionSpec(self.family, {**self.params, **changes})

    def to_dict(self):
        return {"family": self.family, **self.params}

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        family = obj.pop("family")
        if "params" in obj and isinstance(obj["params"], dict):
            obj = obj["params"]
        return cls(family, obj)


def gb2(p, q, alpha, beta):
    return DistributionSpec("GB2", p=p, q=q, alpha=alpha, beta=beta)


def bp(p, q, beta=1.0):
    return DistributionSpec("BP", p=p, q=q, beta=beta)


def giga(alpha, gamma, beta=1.0):
    return DistributionSpec("GIGa", alpha=alpha, gamma=gamma, beta=beta)


def iga(alpha, beta=1.0):
    return DistributionSpec("IGa", alpha=alpha, beta=beta)


def gga(alpha, gamma, beta=1.0):
    return DistributionSpec("GGa", alpha=alpha, gamma=gamma, beta=beta)


def ga(alpha, beta=1.0):
    return DistributionSpec("Ga", alpha=alpha, beta=beta)


def ln(mu, sigma):
    return DistributionSpec("LN", mu=mu, sigma=sigma)


def generalized(d):
    """Express BP, IGa and Ga through their three/four-parameter parents.

    Returns ``(kind, params)`` where kind is one of "GB2", "GIGa", "GGa", "LN".
    """
    f, P = d.family, d.params
    if f == "GB2":
        return "GB2", (P["p"], P["q"], P["alpha"], P["beta"])
    if f == "BP":
        return "GB2", (P["p"], P["q"], 1.0, P["beta"])
    if f in ("GIGa", "GGa"):
        return f, (P["alpha"], P["gamma"], P["beta"])
    if f == "IGa":
        return "GIGa", (P["alpha"], 1.0, P["beta"])
    if f == "Ga":
        return "GGa", (P["alpha"], 1.0, P["beta"])
    return "LN", (P["mu"], P["sigma"])


def scale(d):
    """A characteristic scale: beta, or e^mu for LN."""
    return math.exp(d["mu"]) if d.family == "LN" else d["beta"]


def rescale(d, c):
    """Distribution of c*X for X ~ d."""
    if c <= 0:
        raise ValueError("scale factor must be positive")
    if d.family == "LN":
        return d.replace(mu=d["mu"] + math.log(c))
    return d.replace(beta=d["beta"] * c)


# --- densities --------------------------------------------------------------

def _positive_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("distribution functions require x > 0")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def logpdf_raw(kind, params, x):
    """Log-density of a parent family; no validation, used by the fitter."""
    return logpdf_logx(kind, params, np.log(x))


def logpdf_logx(kind, params, lx):
    """Log-density at x = exp(lx)."""
    with np.errstate(over="ignore"):
        if kind == "GB2":
            p, q, a, b = params
            lz = lx - np.log(b)
            return (np.log(a) + (a * p - 1.0) * lz - (p + q) * np.logaddexp(0.0, a * lz)
                    - np.log(b) - sc.betaln(p, q))
        if kind == "GIGa":
            a, g, b = params
            lz = np.log(b) - lx
            return np.log(g) - np.exp(g * lz) + (1.0 + a * g) * lz - np.log(b) - sc.gammaln(a)
        if kind == "GGa":
            a, g, b = params
            lz = lx - np.log(b)
            return np.log(g) - np.exp(g * lz) + (a * g - 1.0) * lz - np.log(b) - sc.gammaln(a)
        mu, s = params
        return -lx - np.log(s) - 0.5 * np.log(2.0 * np.pi) - 0.5 * ((lx - mu) / s) ** 2


def logpdf(d, x):
    x = _positive_x(x)
    kind, params = generalized(d)
    return _out(logpdf_raw(kind, params, x))


def pdf(d, x):
    return _out(np.exp(logpdf(d, x)))


@np.errstate(over="ignore")
def _cdf_sf(d, x):
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, b = params
        lz = a * (np.log(x) - np.log(b))
        u = sc.expit(lz)        # x^a / (x^a + b^a)
        v = sc.expit(-lz)       # b^a / (x^a + b^a)
        lower = sc.betainc(p, q, u)
        upper = sc.betainc(q, p, v)
        return np.where(u <= 0.5, lower, 1.0 - upper), np.where(u <= 0.5, 1.0 - lower, upper)
    if kind == "GIGa":
        a, g, b = params
        t = (b / x) ** g
        return sc.gammaincc(a, t), sc.gammainc(a, t)
    if kind == "GGa":
        a, g, b = params
        t = (x / b) ** g
        return sc.gammainc(a, t), sc.gammaincc(a, t)
    mu, s = params
    z = (np.log(x) - mu) / s
    return sc.ndtr(z), sc.ndtr(-z)


def cdf(d, x):
    x = _positive_x(x)
    return _out(_cdf_sf(d, x)[0])


def sf(d, x):
    """Survival function 1 - cdf, accurate in the upper tail."""
    x = _positive_x(x)
    return _out(_cdf_sf(d, x)[1])


def quantile(d, u):
    """Inverse CDF via the inverse regularized beta/gamma functions."""
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("quantile requires 0 < u < 1")
    kind, params = generalized(d)
    low = u <= 0.5
    with np.errstate(divide="ignore"):
        if kind == "GB2":
            p, q, a, b = params
            z = sc.betaincinv(p, q, u)              # x^a/(x^a+b^a)
            w = sc.betaincinv(q, p, 1.0 - u)        # b^a/(x^a+b^a)
            lr = np.where(low, np.log(z) - np.log1p(-z), np.log1p(-w) - np.log(w))
            x = b * np.exp(lr / a)
        elif kind == "GIGa":
            a, g, b = params
            t = np.where(low, sc.gammainccinv(a, u), sc.gammaincinv(a, 1.0 - u))
            x = b * t ** (-1.0 / g)
        elif kind == "GGa":
            a, g, b = params
            t = np.where(low, sc.gammaincinv(a, u), sc.gammainccinv(a, 1.0 - u))
            x = b * t ** (1.0 / g)
        else:
            mu, s = params
            x = np.exp(mu + s * np.where(low, sc.ndtri(u), -sc.ndtri(1.0 - u)))
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ArithmeticError(f"quantile inversion failed for {d}")
    return _out(x)


def sample(d, n, seed):
    """Draw ``n`` variates by inverse-CDF sampling with a seeded generator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    # strictly inside (0, 1)
    u = (rng.integers(0, 2 ** 53, size=n, dtype=np.int64) + 0.5) / 2.0 ** 53
    return Sample.from_values(quantile(d, u), label=repr(d))


# --- moments ------------------------------------------------------------------

def moment_exists(d, s):
    """True when E[X^s] is finite (s > 0)."""
    kind, params = generalized(d)
    if kind == "GB2":
        return params[2] * params[1] > s
    if kind == "GIGa":
        return params[0] * params[1] > s
    return True


def mean_exists(d):
    return moment_exists(d, 1.0)


def variance_exists(d):
    return moment_exists(d, 2.0)


def log_raw_moment(d, s):
    """ln E[X^s]; the caller checks existence."""
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, b = params
        return s * math.log(b) + sc.betaln(p + s / a, q - s / a) - sc.betaln(p, q)
    if kind == "GIGa":
        a, g, b = params
        return s * math.log(b) + sc.gammaln(a - s / g) - sc.gammaln(a)
    if kind == "GGa":
        a, g, b = params
        return s * math.log(b) + sc.gammaln(a + s / g) - sc.gammaln(a)
    mu, sig = params
    return s * mu + 0.5 * (s * sig) ** 2


def raw_moment(d, s):
    if not moment_exists(d, s):
        return NonExistent
    return math.exp(log_raw_moment(d, s))


def mean(d):
    if d.family == "BP" and mean_exists(d):
        return d["beta"] * d["p"] / (d["q"] - 1.0)
    if d.family == "Ga":
        return d["alpha"] * d["beta"]
    if d.family == "IGa" and mean_exists(d):
        return d["beta"] / (d["alpha"] - 1.0)
    return raw_moment(d, 1.0)


def rms(d):
    """Root mean square sqrt(E[X^2])."""
    m2 = raw_moment(d, 2.0)
    return NonExistent if m2 is NonExistent else math.sqrt(m2)


def std(d):
    """Standard deviation sqrt(E[X^2] - E[X]^2)."""
    if not variance_exists(d):
        return NonExistent
    mu = mean(d)
    var = math.exp(log_raw_moment(d, 2.0)) - mu * mu
    if d.family == "LN":
        var = math.expm1(d["sigma"] ** 2) * mu * mu
    return math.sqrt(max(var, 0.0))


# --- shape ----------------------------------------------------------------------

def is_bell_shaped(d):
    """True when the density has an interior maximum."""
    kind, params = generalized(d)
    if kind == "GB2":
        return params[2] * params[0] > 1.0
    if kind == "GGa":
        return params[0] * params[1] > 1.0
    return True


def mode(d):
    """Location of the density maximum; 0 when the density decreases from 0."""
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, b = params
        if a * p <= 1.0:
            return 0.0
        return b * ((a * p - 1.0) / (a * q + 1.0)) ** (1.0 / a)
    if kind == "GIGa":
        a, g, b = params
        return b * (g / (1.0 + a * g)) ** (1.0 / g)
    if kind == "GGa":
        a, g, b = params
        if a * g <= 1.0:
            return 0.0
        return b * ((a * g - 1.0) / g) ** (1.0 / g)
    mu, s = params
    return math.exp(mu - s * s)


def front_exponent(d):
    """Exponent of x in the density as x -> 0 (inf for exponential cut-off)."""
    kind, params = generalized(d)
    if kind == "GB2":
        return params[2] * params[0] - 1.0
    if kind == "GGa":
        return params[0] * params[1] - 1.0
    return math.inf


def max_density(d):
    """Density at the mode, taking the x -> 0 limit for monotone densities."""
    m = mode(d)
    if m > 0:
        return pdf(d, m)
    fe = front_exponent(d)
    if fe > 0:
        return 0.0
    if fe < 0:
        return math.inf
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, b = params
        return a / (b * math.exp(sc.betaln(p, q)))
    a, g, b = params
    return g / (b * math.gamma(a))


@dataclass(frozen=True)
class TailExponents:
    front: float
    tail: float
    survival_slope: float


def tail_exponents(d):
    if d.family not in POWER_TAIL_FAMILIES:
        raise NoPowerTail(f"{d.family} has no power-law tail")
    kind, params = generalized(d)
    if kind == "GB2":
        p, q, a, _ = params
        return TailExponents(a * p - 1.0, -a * q - 1.0, -a * q)
    a, g, _ = params
    return TailExponents(math.inf, -a * g - 1.0, -a * g)


def invert_variable(d):
    """Distribution of 1/X for X ~ d."""
    P = d.params
    if d.family in ("GB2", "BP"):
        return d.replace(p=P["q"], q=P["p"], beta=1.0 / P["beta"])
    if d.family == "LN":
        return d.replace(mu=-P["mu"])
    swap = {"GIGa": "GGa", "GGa": "GIGa", "IGa": "Ga", "Ga": "IGa"}
    return DistributionSpec(swap[d.family], {**P, "beta": 1.0 / P["beta"]})
