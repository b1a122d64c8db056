"""Deterministic, seedable random streams.

A stream is identified by (seed, stream_id); identical identification and
call sequence reproduce identical outputs, and distinct stream ids from one
seed are statistically independent (PCG64 under SeedSequence spawn keys).

Stream allocation convention used throughout the experiment code:

    0  data generation
    1  momentum / velocity refresh
    2  stepsize randomization
    3  acceptance coin

A stream is single-owner: never draw from one stream concurrently.
"""

from __future__ import annotations

import numpy as np

DATA_STREAM = 0
MOMENTUM_STREAM = 1
STEPSIZE_STREAM = 2
ACCEPT_STREAM = 3


class RngStream:
    """One reproducible random stream for a given (seed, stream_id)."""

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def normal(self, n: int) -> np.ndarray:
        """n iid standard normal variates."""
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        return self._gen.standard_normal(n)

    def uniform(self, lo: float, hi: float) -> float:
        """One variate uniform on [lo, hi)."""
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi})")
        return float(self._gen.uniform(lo, hi))

    def bernoulli(self, p):
        """1 with probability p; vectorizes over an array of probabilities."""
        p = np.asarray(p, dtype=float)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("Bernoulli probability outside [0, 1]")
        draws = self._gen.random(p.shape if p.ndim else None) < p
        if p.ndim == 0:
            return int(draws)
        return draws.astype(np.int8)


def chain_streams(seed: int) -> tuple[RngStream, RngStream, RngStream]:
    """The (momentum, stepsize, acceptance) streams for one chain."""
    return (
        RngStream(seed, MOMENTUM_STREAM),
        RngStream(seed, STEPSIZE_STREAM),
        RngStream(seed, ACCEPT_STREAM),
    )
