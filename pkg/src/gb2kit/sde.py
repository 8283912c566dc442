"""Mean-reverting SDEs with BP/GB2 steady states.

    dx = -gamma (x - theta x^(1 - alpha)) dt
         + sqrt(kappa2^2 x^2 + kappa_alpha^2 x^(2 - alpha)) dW

With alpha = 1 this is the Beta-prime model, kappa_alpha playing the role of
kappa1.  :func:`steady_state_spec` gives the exact stationary law and
:func:`simulate` integrates the SDE by Euler-Maruyama.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import dist
from .sample import Sample

PATHS_PER_BLOCK = 256


class InvalidConfig(ValueError):
    pass


class InstabilityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SdeConfig:
    gamma_rate: float
    theta: float
    kappa2: float
    kappa_alpha: float
    alpha: float = 1.0
    dt: float | None = None
    burn_in: int | None = None
    thin: int | None = None
    n_paths: int = 1000
    x0: float | None = None

    def __post_init__(self):
        if not (self.gamma_rate > 0 and self.theta > 0 and self.alpha > 0):
            raise InvalidConfig("gamma_rate, theta and alpha must be positive")
        if self.kappa2 < 0 or self.kappa_alpha < 0:
            raise InvalidConfig("volatilities must be non-negative")
        if self.dt is not None and not self.dt > 0:
            raise InvalidConfig("dt must be positive")
        if self.n_paths < 1:
            raise InvalidConfig("n_paths must be >= 1")

    @property
    def kappa1(self):
        return self.kappa_alpha

    @property
    def step(self):
        return self.dt if self.dt is not None else 1e-3 / self.gamma_rate

    @property
    def burn_in_steps(self):
        if self.burn_in is not None:
            return int(self.burn_in)
        return int(round(20.0 / (self.gamma_rate * self.step)))

    @property
    def thin_steps(self):
        if self.thin is not None:
            return max(1, int(self.thin))
        return max(1, int(round(1.0 / (self.gamma_rate * self.step))))

    @property
    def start(self):
        # fixed point of the drift
        return self.x0 if self.x0 is not None else self.theta ** (1.0 / self.alpha)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, obj):
        obj = dict(obj)
        if "kappa1" in obj:
            obj.setdefault("kappa_alpha", obj.pop("kappa1"))
        return cls(**obj)


def config_for(d, gamma_rate=1.0, **controls):
    """Inverse of :func:`steady_state_spec` for BP and GB2 targets."""
    g = gamma_rate
    if d.family == "BP":
        p, q, b, a = d["p"], d["q"], d["beta"], 1.0
    elif d.family == "GB2":
        p, q, a, b = d["p"], d["q"], d["alpha"], d["beta"]
    else:
        raise ValueError("config_for supports BP and GB2 targets")
    k2sq = 2.0 * g / (a * q - 1.0)
    if k2sq <= 0:
        raise InvalidConfig("target needs alpha*q > 1")
    kasq = k2sq * b ** a
    theta = (a * p + 1.0 - a) * kasq / (2.0 * g)
    if theta <= 0:
        raise InvalidConfig("target needs alpha*p > alpha - 1")
    return SdeConfig(g, theta, math.sqrt(k2sq), math.sqrt(kasq), a, **controls)


def steady_state_spec(c):
    g, th, k2, ka, a = c.gamma_rate, c.theta, c.kappa2, c.kappa_alpha, c.alpha
    if k2 == 0 and ka == 0:
        raise InvalidConfig("both volatilities are zero; the steady state is a point mass")
    if ka == 0:
        q = (1.0 + 2.0 * g / k2 ** 2) / a
        beta = (2.0 * g * th / (a * k2 ** 2)) ** (1.0 / a)
        return dist.iga(q, beta) if a == 1.0 else dist.giga(q, a, beta)
    p = (-1.0 + a + 2.0 * g * th / ka ** 2) / a
    if p <= 0:
        raise InvalidConfig(f"steady-state p = {p:g} is not positive")
    if k2 == 0:
        beta = (a * ka ** 2 / (2.0 * g)) ** (1.0 / a)
        return dist.ga(p, beta) if a == 1.0 else dist.gga(p, a, beta)
    q = (1.0 + 2.0 * g / k2 ** 2) / a
    beta = (ka / k2) ** (2.0 / a)
    if a == 1.0:
        return dist.bp(p, q, beta)
    return dist.gb2(p, q, a, beta)


@dataclass(frozen=True)
class SimulationResult:
    sample: Sample
    guard_rate: float
    path_means: np.ndarray
    steps: int


def _threads():
    try:
        return max(1, int(os.environ.get("GB2KIT_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def _run_block(c, seq, n_paths, per_path):
    rng = np.random.default_rng(seq)
    g, th, k2s, kas, a = c.gamma_rate, c.theta, c.kappa2 ** 2, c.kappa_alpha ** 2, c.alpha
    dt = c.step
    sq = math.sqrt(dt)
    x = np.full(n_paths, float(c.start))
    out = np.empty((per_path, n_paths))
    guards = 0
    total = c.burn_in_steps + c.thin_steps * per_path
    k = 0
    for step in range(1, total + 1):
        if a == 1.0:
            drift = -g * (x - th)
            var = x * (k2s * x + kas)
        else:
            xa = x ** (1.0 - a)
            drift = -g * (x - th * xa)
            var = x * x * k2s + kas * x * xa
        x = x + drift * dt + np.sqrt(var) * sq * rng.standard_normal(n_paths)
        bad = x <= 0
        if bad.any():
            guards += int(bad.sum())
            # reflect at the origin; a tiny floor would blow up theta x^(1-alpha)
            x = np.where(bad, np.maximum(-x, 1e-12 * th), x)
        if step > c.burn_in_steps and (step - c.burn_in_steps) % c.thin_steps == 0:
            out[k] = x
            k += 1
    return out, guards, total * n_paths


def simulate(c, seed, n=None):
    """Integrate ``c.n_paths`` independent paths and pool the thinned draws.

    ``n`` is the total number of retained samples (default: 100 per path).
    Paths are grouped in blocks of 256; block ``i`` draws its normals from
    ``SeedSequence(seed).spawn(n_blocks)[i]``, so the output depends only on
    ``seed`` and the configuration.
    """
    per_path = 100 if n is None else max(1, math.ceil(n / c.n_paths))
    sizes = [min(PATHS_PER_BLOCK, c.n_paths - i) for i in range(0, c.n_paths, PATHS_PER_BLOCK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=min(_threads(), len(sizes))) as pool:
        results = list(pool.map(lambda args: _run_block(c, *args, per_path),
                                zip(seqs, sizes)))
    draws = np.concatenate([r[0] for r in results], axis=1)
    guards = sum(r[1] for r in results)
    steps = sum(r[2] for r in results)
    rate = guards / steps
    if rate > 0.05:
        raise InstabilityError(f"positivity guard triggered on {rate:.1%} of steps; reduce dt")
    pooled = draws.T.ravel()
    if n is not None:
        pooled = pooled[:n]
    label = f"sde(seed={seed})"
    return SimulationResult(Sample.from_values(pooled, label=label), rate,
                            draws.mean(axis=0), per_path * c.thin_steps)
