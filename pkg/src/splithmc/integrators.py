"""Split flows and the five reversible one-step maps.

Sub-flows (all exact):
    kick    -- momentum/velocity update from a potential gradient
    drift   -- free flight of the position
    rotation -- exact flow of the quadratic reference Hamiltonian, either
                in the eigenbasis of J (unconditioned, momentum variables)
                or as a common unit-frequency rotation (preconditioned,
                velocity variables)

One-step maps (Strang compositions), with their phase-variable convention:

    kdk      kick(U)-drift-kick(U)                      momentum
    ukrk     kick(U1)-rotate-kick(U1)                   momentum
    pverlet  kick(J^-1 U)-drift-kick(J^-1 U)            velocity
    pkrk     kick(J^-1 U1)-rotate-kick(J^-1 U1)         velocity
    prkr     rotate/2-kick(J^-1 U1)-rotate/2            velocity

where U1-gradients are grad U(theta) - J (theta - theta*), and in the
velocity convention the kick direction is J^{-1} grad U(theta) -
(theta - theta*), solved through the Cholesky factor of J.

Trajectories merge the half-kicks that meet at step boundaries by reusing
the cached gradient (bit-identical to the plain composition), so a KDK leg
of L steps costs L+1 gradient evaluations. A non-finite coordinate flags
the trajectory as divergent and stops the integration; the sampler then
rejects via an infinite energy error.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import chol_solve

KINDS = ("kdk", "ukrk", "pverlet", "pkrk", "prkr")
MOMENTUM = "momentum"
VELOCITY = "velocity"
_CONVENTION = {
    "kdk": MOMENTUM,
    "ukrk": MOMENTUM,
    "pverlet": VELOCITY,
    "pkrk": VELOCITY,
    "prkr": VELOCITY,
}


def convention_of(kind: str) -> str:
    return _CONVENTION[kind]


def needs_reference(kind: str) -> bool:
    """Every kind except plain Verlet requires the quadratic reference."""
    return kind != "kdk"


@dataclass(frozen=True)
class IntegratorSpec:
    """Which one-step map to use, its maximum stepsize, and steps per leg."""

    kind: str
    eps_bar: float
    n_steps: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown integrator kind {self.kind!r}; choose from {KINDS}")
        if not self.eps_bar > 0:
            raise ValueError("eps_bar must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def convention(self) -> str:
        return convention_of(self.kind)

    @property
    def duration(self) -> float:
        return self.eps_bar * self.n_steps


@dataclass(frozen=True)
class PhaseState:
    """Position and momentum-like variable; the convention tag records
    whether `m` is a momentum p or a velocity v and is fixed per trajectory."""

    theta: np.ndarray
    m: np.ndarray
    convention: str = MOMENTUM

    def __post_init__(self):
        if self.theta.shape != self.m.shape:
            raise ValueError("theta and m must have the same shape")

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.m)))


def kick(state: PhaseState, eps: float, grad: np.ndarray) -> PhaseState:
    """Momentum/velocity update; caller supplies the convention's gradient."""
    return replace(state, m=state.m - eps * grad)


def drift(state: PhaseState, eps: float) -> PhaseState:
    return replace(state, theta=state.theta + eps * state.m)


def rotate_uncond(state: PhaseState, eps: float, ref) -> PhaseState:
    """Exact flow of the reference Hamiltonian with identity mass.

    Works in the eigenbasis of J: each mode rotates with its own frequency
    omega_j. Conserves the reference energy exactly.
    """
    z, omega = ref.eig.z, ref.omega
    u = z @ (state.theta - ref.theta_star)
    w = z @ state.m
    c = np.cos(eps * omega)
    s = np.sin(eps * omega)
    u_new = c * u + (s / omega) * w
    w_new = -(omega * s) * u + c * w
    return PhaseState(
        theta=z.T @ u_new + ref.theta_star, m=z.T @ w_new, convention=state.convention
    )


def rotate_precond(state: PhaseState, eps: float, theta_star: np.ndarray) -> PhaseState:
    """Exact flow of the preconditioned reference: one common rotation."""
    u = state.theta - theta_star
    c, s = np.cos(eps), np.sin(eps)
    return PhaseState(
        theta=(u * c + state.m * s) + theta_star,
        m=state.m * c - u * s,
        convention=state.convention,
    )


def _gradient_fn(kind: str, target, ref):
    """The kick direction for each kind, instrumented with a call counter.

    Every returned closure performs exactly one full-gradient evaluation
    of the target per call.
    """
    counter = {"n": 0}
    if kind == "kdk":
        def g(theta):
            counter["n"] += 1
            return target.gradient(theta)
    elif kind == "ukrk":
        j, ts = ref.J.a, ref.theta_star
        def g(theta):
            counter["n"] += 1
            return target.gradient(theta) - j @ (theta - ts)
    elif kind == "pverlet":
        chol = ref.chol
        def g(theta):
            counter["n"] += 1
            return chol_solve(chol, target.gradient(theta))
    else:  # pkrk, prkr
        chol, ts = ref.chol, ref.theta_star
        def g(theta):
            counter["n"] += 1
            return chol_solve(chol, target.gradient(theta)) - (theta - ts)
    return g, counter


def step(spec: IntegratorSpec, state: PhaseState, eps: float, target, ref=None) -> PhaseState:
    """One Strang step of the selected map (reference composition)."""
    if state.convention != spec.convention:
        raise ValueError(
            f"{spec.kind} expects the {spec.convention} convention, got {state.convention}"
        )
    if needs_reference(spec.kind) and ref is None:
        raise ValueError(f"{spec.kind} requires a quadratic reference")
    g, _ = _gradient_fn(spec.kind, target, ref)
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.kind == "prkr":
            s = rotate_precond(state, 0.5 * eps, ref.theta_star)
            s = kick(s, eps, g(s.theta))
            return rotate_precond(s, 0.5 * eps, ref.theta_star)
        s = kick(state, 0.5 * eps, g(state.theta))
        if spec.kind in ("kdk", "pverlet"):
            s = drift(s, eps)
        elif spec.kind == "ukrk":
            s = rotate_uncond(s, eps, ref)
        else:  # pkrk
            s = rotate_precond(s, eps, ref.theta_star)
        return kick(s, 0.5 * eps, g(s.theta))


@dataclass(frozen=True)
class TrajectoryResult:
    state: PhaseState
    grad_evals: int
    diverged: bool


def trajectory(
    spec: IntegratorSpec, state: PhaseState, eps: float, n_steps: int, target, ref=None
) -> TrajectoryResult:
    """n_steps one-step maps with boundary half-kicks sharing one gradient.

    The merged loop reapplies the cached gradient for the half-kick that
    opens the next step, so the output is bit-identical to composing
    `step` n_steps times while evaluating the gradient only n_steps + 1
    times (n_steps times for the rotate-kick-rotate pattern, whose kicks
    are interior). Divergence (any non-finite coordinate) stops the loop.
    """
    if state.convention != spec.convention:
        raise ValueError(
            f"{spec.kind} expects the {spec.convention} convention, got {state.convention}"
        )
    if needs_reference(spec.kind) and ref is None:
        raise ValueError(f"{spec.kind} requires a quadratic reference")
    g, counter = _gradient_fn(spec.kind, target, ref)
    kind = spec.kind
    s = state
    with np.errstate(over="ignore", invalid="ignore"):
        if kind == "prkr":
            ts = ref.theta_star
            for _ in range(n_steps):
                s = rotate_precond(s, 0.5 * eps, ts)
                if not s.is_finite():
                    return TrajectoryResult(s, counter["n"], True)
                s = kick(s, eps, g(s.theta))
                s = rotate_precond(s, 0.5 * eps, ts)
                if not s.is_finite():
                    return TrajectoryResult(s, counter["n"], True)
            return TrajectoryResult(s, counter["n"], False)

        if kind in ("kdk", "pverlet"):
            def middle(st):
                return drift(st, eps)
        elif kind == "ukrk":
            # Rotation table for the randomized eps is shared by all steps
            # of this proposal (it cannot be cached across proposals).
            z, omega, ts = ref.eig.z, ref.omega, ref.theta_star
            c = np.cos(eps * omega)
            sn = np.sin(eps * omega)
            s_over_w, w_s = sn / omega, omega * sn

            def middle(st):
                u = z @ (st.theta - ts)
                w = z @ st.m
                return PhaseState(
                    theta=z.T @ (c * u + s_over_w * w) + ts,
                    m=z.T @ (-w_s * u + c * w),
                    convention=st.convention,
                )
        else:  # pkrk
            ts = ref.theta_star

            def middle(st):
                return rotate_precond(st, eps, ts)

        grad = g(s.theta)
        for _ in range(n_steps):
            s = kick(s, 0.5 * eps, grad)
            s = middle(s)
            if not s.is_finite():
                return TrajectoryResult(s, counter["n"], True)
            grad = g(s.theta)
            s = kick(s, 0.5 * eps, grad)
            if not s.is_finite():
                return TrajectoryResult(s, counter["n"], True)
        return TrajectoryResult(s, counter["n"], False)


def kinetic_energy(state: PhaseState, ref=None) -> float:
    """p^T p / 2 for momenta; v^T J v / 2 = |B^T v|^2 / 2 for velocities."""
    if state.convention == MOMENTUM:
        return 0.5 * float(state.m @ state.m)
    if ref is None:
        raise ValueError("velocity convention needs the reference for J")
    btv = ref.chol.b.T @ state.m
    return 0.5 * float(btv @ btv)


def total_energy(state: PhaseState, target, ref=None) -> float:
    """U(theta) plus the convention's kinetic term; +inf if non-finite."""
    if not state.is_finite():
        return np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        h = target.potential(state.theta) + kinetic_energy(state, ref)
    return h if np.isfinite(h) else np.inf
