"""Maximum-likelihood fitting, KS goodness of fit and power-law tail regression."""

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy import special as sc

from . import dist, ineq
from .dist import NonExistent, DistributionSpec, PARAM_NAMES
from .sample import Sample

__all__ = ["Sample", "FitResult", "TailSlope", "ConvergenceError", "ks_statistic", "log_likelihood",
           "mle_fit", "tail_slope", "tail_cut", "fit_report", "report_csv",
           "survival_series"]

MIN_FIT_SIZE = 50


class ConvergenceError(ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _num(v):
    return None if v is NonExistent or v is None else float(v)


def _from_num(v):
    return NonExistent if v is None else float(v)


@dataclass
class FitResult:
    """One row of a fit report.

    The empirical row has ``family == "Data"`` and no spec; its moments are
    sample statistics.  ``rms_analytic`` is sqrt(E[X^2]) and ``std_analytic``
    the standard deviation; both are NonExistent when the second moment
    diverges.
    """

    family: str
    spec: DistributionSpec | None
    ks: float | None
    log_likelihood: float | None
    mean_analytic: object
    rms_analytic: object
    std_analytic: object
    indices: ineq.IndexReport | None
    optimizer_diagnostics: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self):
        return {
            "family": self.family,
            "spec": None if self.spec is None else self.spec.to_dict(),
            "ks": self.ks,
            "log_likelihood": self.log_likelihood,
            "mean_analytic": _num(self.mean_analytic),
            "rms_analytic": _num(self.rms_analytic),
            "std_analytic": _num(self.std_analytic),
            "indices": None if self.indices is None else self.indices.to_dict(),
            "optimizer_diagnostics": dict(self.optimizer_diagnostics),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            family=obj["family"],
            spec=None if obj.get("spec") is None else DistributionSpec.from_dict(obj["spec"]),
            ks=obj.get("ks"),
            log_likelihood=obj.get("log_likelihood"),
            mean_analytic=_from_num(obj.get("mean_analytic")),
            rms_analytic=_from_num(obj.get("rms_analytic")),
            std_analytic=_from_num(obj.get("std_analytic")),
            indices=None if obj.get("indices") is None else ineq.IndexReport.from_dict(obj["indices"]),
            optimizer_diagnostics=dict(obj.get("optimizer_diagnostics") or {}),
            error=obj.get("error"),
        )


# --- goodness of fit -------------------------------------------------------------

def ks_statistic(s, d):
    """Kolmogorov-Smirnov distance between the sample ECDF and ``d``."""
    x = s.values
    n = x.size
    F = np.asarray(dist.cdf(d, x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


# --- maximum likelihood ------------------------------------------------------------

_PQ_GRID = [(1.0, 1.0), (3.0, 1.5), (1.5, 3.0), (5.0, 5.0),
            (2.0, 2.0), (0.7, 0.7), (10.0, 2.0), (2.0, 10.0)]
_SHAPE_GRID = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]


def _starts(family, lx):
    """Deterministic starting points matching the sample median and log-spread."""
    med = float(np.median(lx))
    sd = float(np.std(lx)) or 1.0
    out = []
    if family in ("GB2", "BP"):
        for p, q in _PQ_GRID:
            a = math.sqrt(sc.polygamma(1, p) + sc.polygamma(1, q)) / sd if family == "GB2" else 1.0
            zm = sc.betaincinv(p, q, 0.5)
            lb = med - (math.log(zm) - math.log1p(-zm)) / a
            out.append((p, q, a, math.exp(lb)) if family == "GB2" else (p, q, math.exp(lb)))
    elif family in ("GIGa", "IGa"):
        for a in _SHAPE_GRID:
            g = math.sqrt(sc.polygamma(1, a)) / sd if family == "GIGa" else 1.0
            y = sc.gammainccinv(a, 0.5)
            lb = med + math.log(y) / g
            out.append((a, g, math.exp(lb)) if family == "GIGa" else (a, math.exp(lb)))
    elif family in ("GGa", "Ga"):
        for a in _SHAPE_GRID:
            g = math.sqrt(sc.polygamma(1, a)) / sd if family == "GGa" else 1.0
            y = sc.gammaincinv(a, 0.5)
            lb = med - math.log(y) / g
            out.append((a, g, math.exp(lb)) if family == "GGa" else (a, math.exp(lb)))
    else:
        m, s = float(np.mean(lx)), float(np.std(lx)) or 1.0
        out = [(m, s)] + [(m + dm * s, s * ds) for dm, ds in
                          [(0.1, 1.0), (-0.1, 1.0), (0.0, 1.2), (0.0, 0.8),
                           (0.2, 1.1), (-0.2, 0.9), (0.0, 1.5)]]
    return out


def _to_free(family, values):
    if family == "LN":
        return np.array([values[0], math.log(values[1])])
    return np.log(np.asarray(values, dtype=float))


def _from_free(family, z):
    if family == "LN":
        return (float(z[0]), float(math.exp(z[1])))
    return tuple(float(v) for v in np.exp(z))


def _neg_mean_loglik(family, lx):
    names = PARAM_NAMES[family]

    def f(z):
        with np.errstate(all="ignore"):
            if family == "LN":
                values = (z[0], math.exp(z[1]))
            else:
                if np.any(np.abs(z) > 700):
                    return np.inf
                values = np.exp(z)
            if not all(math.isfinite(v) and v > 0 for k, v in zip(names, values) if k != "mu"):
                return np.inf
            d = dict(zip(names, values))
            kind, params = _raw_kind(family, d)
            ll = dist.logpdf_logx(kind, params, lx)
            v = -float(np.mean(ll))
        return v if math.isfinite(v) else np.inf

    return f


def _raw_kind(family, P):
    if family == "GB2":
        return "GB2", (P["p"], P["q"], P["alpha"], P["beta"])
    if family == "BP":
        return "GB2", (P["p"], P["q"], 1.0, P["beta"])
    if family in ("GIGa", "GGa"):
        return family, (P["alpha"], P["gamma"], P["beta"])
    if family == "IGa":
        return "GIGa", (P["alpha"], 1.0, P["beta"])
    if family == "Ga":
        return "GGa", (P["alpha"], 1.0, P["beta"])
    return "LN", (P["mu"], P["sigma"])


def log_likelihood(s, d):
    return float(np.sum(dist.logpdf(d, s.values)))


def mle_fit(s, family, *, screen_iter=400, max_iter=2000, polish=2):
    """Fit ``family`` to the sample by maximum likelihood.

    Nelder-Mead runs in log-parameter space (mu stays linear for LN) from
    eight deterministic starts.  Each start gets a short screening run; the
    ``polish`` best are then refined until the simplex shrinks below 1e-9 or
    ``max_iter`` iterations pass.  The best optimum found is returned;
    ``converged`` in the diagnostics is False when it stopped on the
    iteration cap, which happens when the likelihood climbs towards a
    family boundary (GGa drifting to its lognormal limit, for instance).
    """
    if family not in PARAM_NAMES:
        raise ValueError(f"unknown family {family!r}")
    if s.n < MIN_FIT_SIZE:
        raise ValueError(f"need at least {MIN_FIT_SIZE} observations to fit, got {s.n}")
    if s.values[0] == s.values[-1]:
        raise ValueError("degenerate sample: all observations are equal")
    lx = np.log(s.values)
    objective = _neg_mean_loglik(family, lx)
    screened = []
    iterations = 0
    for start in _starts(family, lx):
        z0 = _to_free(family, start)
        if not math.isfinite(objective(z0)):
            continue
        res = optimize.minimize(objective, z0, method="Nelder-Mead",
                                options=dict(maxiter=screen_iter, xatol=1e-4, fatol=1e-10,
                                             adaptive=len(z0) > 2))
        iterations += int(res.nit)
        if math.isfinite(res.fun):
            screened.append(res)
    if not screened:
        raise ConvergenceError(f"no start produced a finite likelihood for {family}",
                               {"restarts": 0, "iterations": iterations})
    screened.sort(key=lambda r: r.fun)
    best = None
    for res in screened[:polish]:
        ref = optimize.minimize(objective, res.x, method="Nelder-Mead",
                                options=dict(maxiter=max_iter, xatol=1e-9, fatol=1e-14,
                                             adaptive=len(res.x) > 2))
        iterations += int(ref.nit)
        if best is None or ref.fun < best.fun:
            best = ref
    values = _from_free(family, best.x)
    spec = DistributionSpec(family, dict(zip(PARAM_NAMES[family], values)))
    diagnostics = {"iterations": iterations, "restarts": len(screened),
                   "converged": bool(best.success), "message": str(best.message)}
    return _result(s, spec, diagnostics)


def _result(s, spec, diagnostics):
    return FitResult(
        family=spec.family,
        spec=spec,
        ks=ks_statistic(s, spec),
        log_likelihood=log_likelihood(s, spec),
        mean_analytic=dist.mean(spec),
        rms_analytic=dist.rms(spec),
        std_analytic=dist.std(spec),
        indices=ineq.closed_form_indices(spec),
        optimizer_diagnostics=diagnostics,
    )


# --- tails ------------------------------------------------------------------------------

@dataclass(frozen=True)
class TailSlope:
    slope: float
    stderr: float
    intercept: float
    n_points: int
    top_fraction: float


def tail_slope(s, top_fraction=0.1, exclude_top=3):
    """Least-squares slope of ln(1 - ECDF) against ln x over the upper tail.

    Uses the top ``top_fraction`` of the sorted sample, dropping the
    ``exclude_top`` largest points where the empirical survival is 0 or
    dominated by rank noise.
    """
    if not 0 < top_fraction < 1:
        raise ValueError("top_fraction must lie in (0, 1)")
    x = s.values
    n = x.size
    k = int(math.ceil(top_fraction * n))
    if k < 30:
        raise ValueError(f"tail window holds {k} points; need at least 30")
    ranks = np.arange(n - k + 1, n + 1)
    xs = x[n - k:]
    surv = (n - ranks) / n
    keep = slice(0, k - exclude_top)
    xs, surv = xs[keep], surv[keep]
    if xs[0] == xs[-1]:
        raise ValueError("degenerate tail: all tail values are equal")
    fit = stats.linregress(np.log(xs), np.log(surv))
    return TailSlope(float(fit.slope), float(fit.stderr), float(fit.intercept),
                     int(xs.size), float(top_fraction))


def tail_cut(s, top_fraction):
    """Drop the ceil(top_fraction * n) largest observations."""
    if not 0 <= top_fraction < 0.5:
        raise ValueError("top_fraction must lie in [0, 0.5)")
    k = int(math.ceil(top_fraction * s.n))
    if k == 0:
        return s
    keep = np.sort(s.order[: s.n - k])
    # original positions of the survivors, in original order
    values = s.original()[keep]
    years = None
    if s.years is not None:
        orig_years = np.empty_like(s.years)
        orig_years[s.order] = s.years
        years = orig_years[keep]
    return Sample.from_values(values, label=s.label, years=years,
                              deflator_base=s.deflator_base)


def survival_series(s, specs=(), points=200):
    """Plot-ready log-log survival curves: empirical plus one per spec."""
    x = s.values
    n = x.size
    idx = np.unique(np.linspace(0, n - 2, min(points, n - 1)).astype(int))
    out = {"x": x[idx].tolist(), "data": ((n - idx - 1) / n).tolist()}
    for d in specs:
        out[d.family] = np.asarray(dist.sf(d, x[idx]), dtype=float).tolist()
    return out


# --- reports ------------------------------------------------------------------------------

def _threads():
    try:
        return max(1, int(os.environ.get("GB2KIT_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def empirical_row(s):
    return FitResult(family="Data", spec=None, ks=None, log_likelihood=None,
                     mean_analytic=s.mean(), rms_analytic=s.rms(), std_analytic=s.std(),
                     indices=ineq.empirical_indices(s))


def fit_report(s, families=dist.FAMILIES):
    """Empirical row followed by one fit per family, sorted by KS ascending.

    A family whose fit fails yields a row with ``error`` set; the other rows
    are unaffected.
    """
    families = list(families)
    if not families:
        raise ValueError("at least one family is required")
    # sample-level problems fail the whole report rather than every row
    if s.values[0] == s.values[-1]:
        raise ValueError("degenerate sample: all observations are equal")
    if s.n < MIN_FIT_SIZE:
        raise ValueError(f"need at least {MIN_FIT_SIZE} observations to fit, got {s.n}")

    def one(fam):
        try:
            return mle_fit(s, fam)
        except (ArithmeticError, ValueError) as exc:
            return FitResult(family=fam, spec=None, ks=None, log_likelihood=None,
                             mean_analytic=None, rms_analytic=None, std_analytic=None,
                             indices=None, error=str(exc))

    with ThreadPoolExecutor(max_workers=min(_threads(), len(families))) as pool:
        rows = list(pool.map(one, families))
    rows.sort(key=lambda r: math.inf if r.ks is None else r.ks)
    return [empirical_row(s)] + rows


CSV_COLUMNS = ["type", "parameters", "KS", "Mean", "RMS", "Std", "Gini", "Hoover",
               "Theil T", "Theil L", "DMMS"]


def _fmt(v):
    if v is None or v is NonExistent:
        return "N.A."
    return f"{v:.4f}"


def report_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        if r.spec is not None:
            params = f"{r.family}(" + ", ".join(f"{v:.4f}" for v in r.spec.values) + ")"
        else:
            params = "N.A."
        if r.error:
            w.writerow([r.family, f"error: {r.error}"] + ["N.A."] * (len(CSV_COLUMNS) - 2))
            continue
        idx = r.indices
        w.writerow([r.family, params, _fmt(r.ks), _fmt(r.mean_analytic), _fmt(r.rms_analytic),
                    _fmt(r.std_analytic),
                    _fmt(idx.gini), _fmt(idx.hoover), _fmt(idx.theil_t),
                    _fmt(idx.theil_l), _fmt(idx.dmms)])
    return buf.getvalue()
