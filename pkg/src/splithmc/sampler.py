"""HMC chain driver: refresh, randomized stepsize, integrate, accept/reject.

Each transition draws a fresh momentum (or velocity, through the Cholesky
factor of J), a stepsize eps ~ eps_bar * U[0.8, 1), integrates L one-step
maps, and accepts with probability min(1, exp(-Delta H)) where Delta H is
computed in the convention matching the integrator (velocity kinetic
energy is v^T J v / 2). A divergent trajectory is recorded with
Delta H = +inf and always rejected.

Chains are deterministic given the seed: refresh, stepsize, and acceptance
coins come from the three dedicated streams of `rng.chain_streams`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import integrators
from .integrators import IntegratorSpec, PhaseState, TrajectoryResult
from .linalg import chol_sample_velocity
from .rng import RngStream, chain_streams


@dataclass(frozen=True)
class ChainConfig:
    spec: IntegratorSpec
    n_samples: int
    seed: int
    initial_theta: np.ndarray | None = None  # default: the reference mode
    burn_in: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")

    @property
    def duration(self) -> float:
        return self.spec.duration


@dataclass
class ChainOutput:
    """Stored chain with per-transition bookkeeping.

    samples[k] repeats samples[k-1] exactly on rejection; energy_errors
    holds the Delta H of each proposal (+inf for divergences); grad_evals
    counts full-gradient evaluations over the whole chain; wall_time is
    the chain loop only, excluding precomputation.
    """

    samples: np.ndarray
    accept_flags: np.ndarray
    energy_errors: np.ndarray
    grad_evals: int
    wall_time: float

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accept_flags))

    @property
    def n_divergent(self) -> int:
        return int(np.sum(np.isinf(self.energy_errors)))


@dataclass(frozen=True)
class StepResult:
    """One transition, with endpoint states kept for offline verification."""

    theta: np.ndarray
    accepted: int
    delta_h: float
    grad_evals: int
    initial_state: PhaseState
    proposal_state: PhaseState
    eps: float


def acceptance_probability(delta_h: float) -> float:
    """min(1, exp(-Delta H)), safe against overflow for huge |Delta H|."""
    if not np.isfinite(delta_h):
        return 0.0 if delta_h > 0 else 1.0
    if delta_h <= 0.0:
        return 1.0
    return math.exp(-delta_h)


def _refresh(spec: IntegratorSpec, d: int, ref, momentum_stream: RngStream) -> np.ndarray:
    z = momentum_stream.normal(d)
    if spec.convention == integrators.VELOCITY:
        return chol_sample_velocity(ref.chol, z)
    return z


def hmc_step(
    theta: np.ndarray,
    spec: IntegratorSpec,
    target,
    ref,
    streams: tuple[RngStream, RngStream, RngStream],
) -> StepResult:
    """One HMC transition from `theta`."""
    momentum_stream, stepsize_stream, accept_stream = streams
    xi = _refresh(spec, theta.shape[0], ref, momentum_stream)
    eps = spec.eps_bar * stepsize_stream.uniform(0.8, 1.0)
    start = PhaseState(theta=theta, m=xi, convention=spec.convention)
    result: TrajectoryResult = integrators.trajectory(
        spec, start, eps, spec.n_steps, target, ref
    )
    if result.diverged:
        delta_h = np.inf
    else:
        h0 = integrators.total_energy(start, target, ref)
        h1 = integrators.total_energy(result.state, target, ref)
        delta_h = h1 - h0
        if not np.isfinite(delta_h):
            delta_h = np.inf
    accepted = accept_stream.bernoulli(acceptance_probability(delta_h))
    theta_next = result.state.theta if accepted else theta
    return StepResult(
        theta=theta_next,
        accepted=accepted,
        delta_h=delta_h,
        grad_evals=result.grad_evals,
        initial_state=start,
        proposal_state=result.state,
        eps=eps,
    )


def run_chain(cfg: ChainConfig, target, ref=None) -> ChainOutput:
    """Run n_samples sequential transitions; deterministic given the seed.

    The chain starts from cfg.initial_theta (default: the reference mode)
    and records the state after each transition; the start point itself is
    not a sample. burn_in discards that many leading transitions.
    """
    if integrators.needs_reference(cfg.spec.kind) and ref is None:
        raise ValueError(f"{cfg.spec.kind} requires a quadratic reference")
    if cfg.initial_theta is not None:
        theta = np.asarray(cfg.initial_theta, dtype=float).copy()
    elif ref is not None:
        theta = ref.theta_star.copy()
    else:
        theta = np.zeros(target.d)
    streams = chain_streams(cfg.seed)
    total = cfg.burn_in + cfg.n_samples
    samples = np.empty((cfg.n_samples, theta.shape[0]))
    accept_flags = np.zeros(cfg.n_samples, dtype=np.int8)
    energy_errors = np.empty(cfg.n_samples)
    grad_evals = 0
    t0 = time.perf_counter()
    for k in range(total):
        res = hmc_step(theta, cfg.spec, target, ref, streams)
        theta = res.theta
        grad_evals += res.grad_evals
        i = k - cfg.burn_in
        if i >= 0:
            samples[i] = theta
            accept_flags[i] = res.accepted
            energy_errors[i] = res.delta_h
    wall = time.perf_counter() - t0
    return ChainOutput(
        samples=samples,
        accept_flags=accept_flags,
        energy_errors=energy_errors,
        grad_evals=grad_evals,
        wall_time=wall,
    )


def write_chain_csv(chain: ChainOutput, path) -> None:
    """Columnar CSV: theta components, accept flag, Delta H per row."""
    header = [f"theta_{j}" for j in range(chain.d)] + ["accepted", "delta_h"]
    body = np.column_stack(
        [chain.samples, chain.accept_flags.astype(float), chain.energy_errors]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in body:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
