"""Exact reference samplers and analytic facts for the target distributions.

Samplers are vectorized over a seeded numpy generator and follow the classic
algorithms: an inversion indicator for Bernoulli, Box-Muller for normals, the
multiplicative loop for Poisson, inverse-CDF u**(1/a) for Beta(a, 1), and the
generator's exact rejection sampler for Gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .stats import gamma_inc_lower


class InvalidParameter(ConfigError):
    pass


@dataclass(frozen=True)
class ReferenceDistribution:
    id: str
    theta: tuple
    discrete: bool
    moments: tuple | None  # (mean, variance, skewness, excess kurtosis), entries may be None
    sample: Callable  # (count, np.random.Generator) -> np.ndarray
    cdf: Callable | None = None
    pmf: Callable | None = None
    tail_mass: Callable | None = None  # mass of [k, inf) for discrete targets

    @property
    def mean(self):
        return self.moments[0] if self.moments else None


def _phi(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _box_muller(count: int, rng: np.random.Generator) -> np.ndarray:
    u1 = rng.random(count)
    u2 = rng.random(count)
    return np.cos(2.0 * math.pi * u1) * np.sqrt(-2.0 * np.log1p(-u2))


def _poisson_knuth(lam: float, count: int, rng: np.random.Generator) -> np.ndarray:
    limit = math.exp(-lam)
    k = np.zeros(count, dtype=np.int64)
    p = rng.random(count)
    active = p >= limit
    while active.any():
        k[active] += 1
        p[active] *= rng.random(int(active.sum()))
        active = p >= limit
    return k.astype(np.float64)


def make_reference(dist_id: str, theta=()) -> ReferenceDistribution:
    """Build a reference distribution from its id and parameter vector.

    Supported: ``bernoulli(p)``, ``poisson(lam)``, ``gamma(a)`` (unit scale),
    ``beta(a)`` (second shape 1), ``stdnormal``, ``normal(mu, sigma)``.
    """
    theta = tuple(float(v) for v in theta)
    if dist_id == "bernoulli":
        (p,) = _need(theta, 1, dist_id)
        if not 0.0 < p < 1.0:
            raise InvalidParameter(f"bernoulli p must be in (0, 1), got {p}")
        return ReferenceDistribution(
            id=dist_id,
            theta=theta,
            discrete=True,
            moments=(p, p * (1 - p), None, None),
            sample=lambda n, rng: (rng.random(n) < p).astype(np.float64),
            pmf=lambda k: p if k == 1 else (1 - p if k == 0 else 0.0),
            tail_mass=lambda k: 1.0 if k <= 0 else (p if k == 1 else 0.0),
        )
    if dist_id == "poisson":
        (lam,) = _need(theta, 1, dist_id)
        if lam <= 0.0:
            raise InvalidParameter(f"poisson rate must be positive, got {lam}")

        def pmf(k: int) -> float:
            return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))

        return ReferenceDistribution(
            id=dist_id,
            theta=theta,
            discrete=True,
            moments=(lam, lam, 1.0 / math.sqrt(lam), 1.0 / lam),
            sample=lambda n, rng: _poisson_knuth(lam, n, rng),
            pmf=pmf,
            tail_mass=lambda k: gamma_inc_lower(float(k), lam) if k >= 1 else 1.0,
        )
    if dist_id == "gamma":
        (a,) = _need(theta, 1, dist_id)
        if a <= 0.0:
            raise InvalidParameter(f"gamma shape must be positive, got {a}")
        return ReferenceDistribution(
            id=dist_id,
            theta=theta,
            discrete=False,
            moments=(a, a, 2.0 / math.sqrt(a), 6.0 / a),
            sample=lambda n, rng: rng.gamma(a, 1.0, n),
            cdf=lambda x: gamma_inc_lower(a, x) if x > 0.0 else 0.0,
        )
    if dist_id == "beta":
        (a,) = _need(theta, 1, dist_id)
        if a <= 0.0:
            raise InvalidParameter(f"beta shape must be positive, got {a}")
        var = a / ((a + 1.0) ** 2 * (a + 2.0))
        return ReferenceDistribution(
            id=dist_id,
            theta=theta,
            discrete=False,
            moments=(a / (a + 1.0), var, None, None),
            sample=lambda n, rng: np.power(1.0 - rng.random(n), 1.0 / a),
            cdf=lambda x: 0.0 if x <= 0.0 else (1.0 if x >= 1.0 else x**a),
        )
    if dist_id == "stdnormal":
        _need(theta, 0, dist_id)
        return ReferenceDistribution(
            id=dist_id,
            theta=(),
            discrete=False,
            moments=(0.0, 1.0, 0.0, 0.0),
            sample=lambda n, rng: _box_muller(n, rng),
            cdf=_phi,
        )
    if dist_id == "normal":
        mu, sigma = _need(theta, 2, dist_id)
        if sigma <= 0.0:
            raise InvalidParameter(f"normal sigma must be positive, got {sigma}")
        return ReferenceDistribution(
            id=dist_id,
            theta=theta,
            discrete=False,
            moments=(mu, sigma * sigma, 0.0, 0.0),
            sample=lambda n, rng: mu + sigma * _box_muller(n, rng),
            cdf=lambda x: _phi((x - mu) / sigma),
        )
    raise InvalidParameter(f"unknown reference distribution {dist_id!r}")


def _need(theta: tuple, n: int, dist_id: str) -> tuple:
    if len(theta) != n:
        raise InvalidParameter(f"{dist_id} expects {n} parameter(s), got {len(theta)}")
    return theta


def reference_sample(dist_id: str, theta, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` exact samples, deterministic per seed."""
    if count < 1:
        raise InvalidParameter("count must be >= 1")
    dist = make_reference(dist_id, theta)
    return dist.sample(count, np.random.default_rng(seed))


REFERENCE_IDS = ("bernoulli", "poisson", "gamma", "beta", "stdnormal", "normal")

# signature (number of real program parameters) per learnable target
TARGET_ARITY = {
    "bernoulli": 1,
    "poisson": 1,
    "gamma": 1,
    "beta": 1,
    "stdnormal": 0,
    "normal": 2,
}

# theta sampling ranges for training/held-out parameter draws
THETA_RANGES = {
    "bernoulli": ((0.1, 0.9),),
    "poisson": ((0.5, 8.0),),
    "gamma": ((0.5, 5.0),),
    "beta": ((0.5, 5.0),),
    "stdnormal": (),
    "normal": ((-5.0, 5.0), (0.5, 3.0)),
}
