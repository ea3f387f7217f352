"""Zipf popularity, most-popular edge caching at the F-APs, and the
backhaul-relief reward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nomafran.errors import ValidationError


@dataclass(frozen=True)
class CacheConfig:
    n_contents: int = 100
    zipf_exponent: float = 0.8
    cache_slots_per_fap: int = 10
    # each F-UE ranks contents by its own random permutation of the Zipf law
    personalized_requests: bool = False

    def validate(self):
        if self.n_contents < 1:
            raise ValidationError("n_contents", "must be >= 1")
        if self.zipf_exponent < 0:
            raise ValidationError("zipf_exponent", "must be >= 0")
        if not 0 <= self.cache_slots_per_fap <= self.n_contents:
            raise ValidationError("cache_slots_per_fap", "must lie in [0, n_contents]")
        return self


@dataclass(frozen=True, eq=False)
class CachePlacement:
    cached: tuple  # per F-AP, frozenset of content indices (0-based rank)
    theta: np.ndarray  # (M,) hit probability per F-UE


def content_popularity(n_contents, s):
    """Zipf request probabilities, p_i proportional to i^-s for i = 1..n."""
    if n_contents < 1:
        raise ValidationError("n_contents", "must be >= 1")
    w = np.arange(1, n_contents + 1, dtype=float) ** (-float(s))
    return w / w.sum()


def place_cache(pop, cfg, t, rng=None):
    """Fill every F-AP cache with the most popular contents.

    All F-UEs of a cell share the cell's hit probability unless
    ``cfg.personalized_requests`` is set, which needs ``rng``.
    """
    cfg.validate()
    pop = np.asarray(pop, dtype=float)
    order = np.argsort(-pop, kind="stable")
    top = order[: cfg.cache_slots_per_fap]
    cached = tuple(frozenset(int(i) for i in top) for _ in range(t.n_faps))
    hit = float(pop[top].sum()) if top.size else 0.0
    theta = np.full(t.n_fues, min(hit, 1.0))
    if cfg.personalized_requests:
        if rng is None:
            raise ValueError("personalized_requests needs a random source")
        for m in range(t.n_fues):
            own = pop[rng.permutation(pop.size)]
            theta[m] = min(float(own[top].sum()), 1.0)
    return CachePlacement(cached=cached, theta=theta)


def caching_reward(theta, rate, beta):
    """Backhaul traffic avoided by cache hits, scaled by ``beta`` (bit/s)."""
    return beta * theta * rate
