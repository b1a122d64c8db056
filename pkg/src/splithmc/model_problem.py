"""Closed-form analysis of splitting integrators on the scalar model problem.

The model Hamiltonian is H = (p^2 + theta^2)/2 + kappa*theta^2/2 with
kappa > -1: a unit-frequency reference oscillator perturbed by a quadratic
potential of strength kappa. Every integrator considered here acts on
(theta, p) as a 2x2 matrix per step, which makes stability, energy error,
and the stationary expected energy error exactly computable:

  * propagator     -- one-step matrix of KRK / RKR / KDK or an arbitrary
                      palindromic multistage scheme
  * classify       -- stable / unstable / weakly unstable / +-identity,
                      with rotation angle eta and amplitude ratio chi
  * stability_limit -- supremum of the first stable stepsize interval
  * energy_error   -- exact energy error of an L-step leg (quadratic form
                      in the initial condition)
  * rho / expected_energy_error -- stationary expected energy error
                      E[Delta] = sin^2(L*eta) * rho(eps, kappa)

The two-dimensional counterexample helper rescales each component of a
diagonal reference (std devs sigma_i) onto the unit-frequency model:
stepsize eps maps to eps/sigma_i and the perturbation to kappa*sigma_i^2.

For KDK the kick uses the full potential (spring 1 + kappa); KRK/RKR kick
with the perturbation only and rotate with the reference flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

STABLE = "stable"
UNSTABLE = "unstable"
WEAKLY_UNSTABLE = "weakly_unstable"
BOUNDARY_IDENTITY = "boundary_identity"

SCHEMES = ("krk", "rkr", "kdk")


def kick_matrix(t: float, kappa: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [-kappa * t, 1.0]])


def rotation_matrix(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [-s, c]])


def drift_matrix(t: float) -> np.ndarray:
    return np.array([[1.0, t], [0.0, 1.0]])


@dataclass(frozen=True)
class Propagator2x2:
    """One-step matrix [[a, b], [c, d]] on the model problem."""

    a: float
    b: float
    c: float
    d: float
    kappa: float
    eps: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > 1e-10:
            raise ValueError(f"propagator is not symplectic: det = {det!r}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @classmethod
    def from_matrix(cls, m: np.ndarray, kappa: float, eps: float) -> "Propagator2x2":
        return cls(a=m[0, 0], b=m[0, 1], c=m[1, 0], d=m[1, 1], kappa=kappa, eps=eps)


@dataclass(frozen=True)
class PalindromicScheme:
    """Multistage palindromic composition with coefficients (a_i), (b_i).

    The a-coefficients weight the flow named by `role_of_h1` ("rotation"
    or "kick"); the b's weight the other flow. Both coefficient lists sum
    to 1 and must be palindromic, which makes the scheme time reversible.
    """

    a: tuple
    b: tuple
    role_of_h1: str = "rotation"

    def __post_init__(self):
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        if len(a) != len(b) + 1:
            raise ValueError("need len(a) == len(b) + 1")
        if abs(a.sum() - 1.0) > 1e-12 or abs(b.sum() - 1.0) > 1e-12:
            raise ValueError("coefficient lists must each sum to 1")
        if not np.allclose(a, a[::-1], atol=1e-14) or not np.allclose(b, b[::-1], atol=1e-14):
            raise ValueError("coefficients must be palindromic")
        if self.role_of_h1 not in ("rotation", "kick"):
            raise ValueError("role_of_h1 must be 'rotation' or 'kick'")


def _product_propagator(scheme: PalindromicScheme, eps: float, kappa: float) -> np.ndarray:
    if scheme.role_of_h1 == "rotation":
        outer = lambda t: rotation_matrix(t)
        inner = lambda t: kick_matrix(t, kappa)
    else:
        outer = lambda t: kick_matrix(t, kappa)
        inner = lambda t: rotation_matrix(t)
    m = outer(scheme.a[0] * eps)
    for bi, ai in zip(scheme.b, scheme.a[1:]):
        m = outer(ai * eps) @ inner(bi * eps) @ m
    return m


def propagator(scheme, eps: float, kappa: float) -> Propagator2x2:
    """One-step propagator of "krk", "rkr", "kdk", or a PalindromicScheme."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not kappa > -1.0:
        raise ValueError("kappa must exceed -1")
    if isinstance(scheme, PalindromicScheme):
        m = _product_propagator(scheme, eps, kappa)
        return Propagator2x2.from_matrix(m, kappa, eps)
    c, s = math.cos(eps), math.sin(eps)
    if scheme == "krk":
        a = c - 0.5 * eps * kappa * s
        b = s
        cc = 0.25 * eps * eps * kappa * kappa * s - eps * kappa * c - s
    elif scheme == "rkr":
        a = c - 0.5 * eps * kappa * s
        b = s + 0.5 * eps * kappa * (c - 1.0)
        cc = -s - 0.5 * eps * kappa * (c + 1.0)
    elif scheme == "kdk":
        w2 = 1.0 + kappa
        a = 1.0 - 0.5 * eps * eps * w2
        b = eps
        cc = -eps * w2 * (1.0 - 0.25 * eps * eps * w2)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return Propagator2x2(a=a, b=b, c=cc, d=a, kappa=kappa, eps=eps)


@dataclass(frozen=True)
class StabilityVerdict:
    """Classification of a symplectic 2x2 propagator.

    For a stable map, eta is the rotation angle (a = cos eta) and chi the
    amplitude ratio b / sin(eta); chi is None on the +-identity boundary,
    where it is not determined.
    """

    verdict: str
    eta: float | None = None
    chi: float | None = None

    @property
    def is_stable(self) -> bool:
        return self.verdict in (STABLE, BOUNDARY_IDENTITY)


def classify(p: Propagator2x2) -> StabilityVerdict:
    """Three-way stability classification by |a| against 1.

    |a| < 1 is stable (eigenvalues on the unit circle), |a| > 1 unstable;
    |a| = 1 splits into the +-identity (stable) and the weakly unstable
    case of linear growth.
    """
    a = p.a
    if abs(a) < 1.0:
        eta = math.acos(a)
        return StabilityVerdict(STABLE, eta=eta, chi=p.b / math.sin(eta))
    if abs(a) > 1.0:
        return StabilityVerdict(UNSTABLE)
    if p.b == 0.0 and p.c == 0.0:
        return StabilityVerdict(BOUNDARY_IDENTITY, eta=0.0 if a > 0 else math.pi, chi=None)
    return StabilityVerdict(WEAKLY_UNSTABLE)


def _first_instability(scheme, kappa: float, scan_hi: float, n_scan: int = 4000) -> float:
    """Coarse scan + bisection for the first |a| = 1 crossing."""
    f = lambda e: abs(propagator(scheme, e, kappa).a) - 1.0
    # small enough to sit inside the first stable interval, large enough
    # that 1 - |a| has not underflowed to zero
    lo = 1e-6
    if f(lo) >= 0:
        raise ValueError("no stable stepsizes found near zero")
    grid = np.linspace(lo, scan_hi, n_scan)
    hi = None
    for e in grid[1:]:
        if f(e) >= 0:
            hi = e
            break
        lo = e
    if hi is None:
        return scan_hi
    return brentq(f, lo, hi, xtol=1e-13)


def stability_limit(scheme, kappa: float) -> float:
    """Supremum of the first stable stepsize interval.

    KRK/RKR with kappa > 0: the root of eps*kappa = 2*cot(eps/2) in
    (0, pi) (both patterns share the trace, hence the limit); with
    kappa <= 0 the limit is pi. KDK: 2/sqrt(1+kappa). Palindromic schemes
    fall back to a scan-plus-bisection on the |a| = 1 boundary.
    """
    if not kappa > -1.0:
        raise ValueError("kappa must exceed -1")
    if isinstance(scheme, PalindromicScheme):
        return _first_instability(scheme, kappa, scan_hi=4.0 * math.pi)
    if scheme in ("krk", "rkr"):
        if kappa <= 0.0:
            return math.pi
        f = lambda e: e * kappa - 2.0 / math.tan(0.5 * e)
        return brentq(f, 1e-8, math.pi - 1e-12, xtol=1e-13)
    if scheme == "kdk":
        return 2.0 / math.sqrt(1.0 + kappa)
    raise ValueError(f"unknown scheme {scheme!r}")


def composed_entries(p: Propagator2x2, n_steps: int) -> tuple[float, float, float]:
    """(a, b, c) of the L-step propagator via the stable normal form."""
    v = classify(p)
    if not v.is_stable:
        raise ValueError("composition in closed form requires a stable propagator")
    if v.verdict == BOUNDARY_IDENTITY:
        sign = 1.0 if p.a > 0 else (-1.0) ** n_steps
        return sign, 0.0, 0.0
    le = n_steps * v.eta
    s = math.sin(le)
    return math.cos(le), v.chi * s, -s / v.chi


def energy_error(entries, kappa: float, theta0: float, p0: float) -> float:
    """Exact energy error of an L-step leg from its composed (a, b, c).

    Delta = (c + (1+kappa) b) (c theta0^2 + 2 a theta0 p0 + b p0^2) / 2.
    """
    a, b, c = entries
    return 0.5 * (c + (1.0 + kappa) * b) * (c * theta0**2 + 2.0 * a * theta0 * p0 + b * p0**2)


def rho(scheme, eps: float | None = None, kappa: float | None = None) -> float:
    """Stationary expected-energy-error factor from one-step entries.

    rho = (c + (1+kappa) b)^2 / (2 (1+kappa) (1 - a^2)); independent of the
    number of steps. Accepts a scheme name with (eps, kappa) or a stable
    Propagator2x2 directly. Raises for unstable parameters, where rho is
    undefined.
    """
    if isinstance(scheme, Propagator2x2):
        p = scheme
    else:
        p = propagator(scheme, eps, kappa)
    if not abs(p.a) < 1.0:
        raise ValueError(
            f"rho is undefined outside the stable region (|a| = {abs(p.a)!r} >= 1)"
        )
    num = (p.c + (1.0 + p.kappa) * p.b) ** 2
    return num / (2.0 * (1.0 + p.kappa) * (1.0 - p.a * p.a))


def rho_krk_closed(eps: float, kappa: float) -> float:
    """Trigonometric closed form of rho for the KRK pattern (cross-check)."""
    s, c = math.sin(eps), math.cos(eps)
    num = kappa**2 / s * (-4.0 * eps * c + (4.0 + kappa * eps**2) * s) ** 2
    den = 8.0 * (1.0 + kappa) * (4.0 * kappa * eps * c + (4.0 - kappa**2 * eps**2) * s)
    return num / den


def rho_rkr_closed(eps: float, kappa: float) -> float:
    """Trigonometric closed form of rho for the RKR pattern (cross-check)."""
    s, c = math.sin(eps), math.cos(eps)
    num = kappa**2 / s * (kappa * eps * c + 2.0 * s - (2.0 + kappa) * eps) ** 2
    den = 2.0 * (1.0 + kappa) * (4.0 * kappa * eps * c + (4.0 - kappa**2 * eps**2) * s)
    return num / den


def expected_energy_error(scheme, eps: float, kappa: float, n_steps: int) -> float:
    """E[Delta] = sin^2(L eta) rho(eps, kappa) at stationary initial data."""
    p = propagator(scheme, eps, kappa)
    v = classify(p)
    if not v.is_stable or v.verdict == BOUNDARY_IDENTITY:
        if v.verdict == BOUNDARY_IDENTITY:
            return 0.0
        raise ValueError("expected energy error requires a stable propagator")
    return math.sin(n_steps * v.eta) ** 2 * rho(p)


def component_stability_limit(scheme, sigma: float, kappa: float) -> float:
    """First instability onset of one component of the diagonal model.

    A component with reference std dev sigma behaves like the
    unit-frequency model at stepsize eps/sigma with perturbation
    kappa*sigma^2, so its onset is sigma times the rescaled limit. For
    KRK/RKR with small kappa this sits just below pi*sigma; Verlet's is
    2*sigma/sqrt(1 + kappa*sigma^2) ~ 2*sigma.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return sigma * stability_limit(scheme, kappa * sigma**2)


@dataclass(frozen=True)
class TwoDimVerdict:
    """Per-component stability of the two-oscillator counterexample."""

    verdicts: tuple
    omegas: tuple
    decorrelation_ok: bool
    min_steps_for_decorrelation: float


def counterexample_2d(
    eps: float,
    n_steps: int,
    sigma1: float,
    sigma2: float,
    kappa: float,
    scheme,
    decorrelation_constant: float = math.pi / 2,
) -> TwoDimVerdict:
    """Stability of both components of the diagonal two-oscillator model.

    Component i has reference std dev sigma_i and full frequency
    omega_i = sqrt(sigma_i^-2 + kappa); its one-step map equals the
    unit-frequency model at stepsize eps/sigma_i with perturbation
    kappa*sigma_i^2. Also reports whether the leg length satisfies
    n_steps >= C / (eps * omega_2), the decorrelation requirement set by
    the slowest component.
    """
    if not 0 < sigma1 <= sigma2:
        raise ValueError("need 0 < sigma1 <= sigma2")
    verdicts = []
    omegas = []
    for sigma in (sigma1, sigma2):
        omegas.append(math.sqrt(sigma**-2 + kappa))
        verdicts.append(classify(propagator(scheme, eps / sigma, kappa * sigma**2)))
    needed = decorrelation_constant / (eps * omegas[1])
    return TwoDimVerdict(
        verdicts=tuple(verdicts),
        omegas=tuple(omegas),
        decorrelation_ok=n_steps >= needed,
        min_steps_for_decorrelation=needed,
    )
