"""One-time per-target computation of the quadratic reference.

Finds the posterior mode theta* by damped Newton, evaluates the Hessian J
there, and precomputes its eigendecomposition and Cholesky factor together
with the oscillation frequencies omega_j = sqrt(eigenvalue_j).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import linalg
from .linalg import CholFactor, EigenDecomp, SymMatrix


class MapConvergenceError(RuntimeError):
    """Mode search did not reach the gradient tolerance."""


@dataclass(frozen=True)
class QuadraticReference:
    """Mode, Hessian-at-mode, and its factorizations for one target."""

    theta_star: np.ndarray
    J: SymMatrix
    eig: EigenDecomp
    chol: CholFactor
    omega: np.ndarray  # sqrt of eigenvalues, ascending

    @property
    def d(self) -> int:
        return self.theta_star.shape[0]

    @property
    def omega_min(self) -> float:
        return float(self.omega[0])

    @property
    def omega_max(self) -> float:
        return float(self.omega[-1])


def find_map(target, theta0=None, tol: float = 1e-8, max_iter: int = 200) -> np.ndarray:
    """Minimize U by Newton steps with Armijo backtracking.

    Deterministic given theta0 (default zero). The objective here is smooth
    and convex, so plain Newton with halving line search is enough; raises
    MapConvergenceError with the final gradient norm if the cap is hit.
    """
    d = target.d
    theta = np.zeros(d) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    u = target.potential(theta)
    for _ in range(max_iter):
        g = target.gradient(theta)
        gnorm = np.abs(g).max()
        if gnorm <= tol:
            return theta
        h = target.hessian(theta)
        step = linalg.chol_solve(linalg.cholesky(h), g)
        t = 1.0
        slope = float(g @ step)
        # resolution floor: near the optimum the Armijo decrease drops
        # below what float64 can represent in u; let the full step through
        floor = 1e-13 * max(1.0, abs(u))
        while True:
            cand = theta - t * step
            u_cand = target.potential(cand)
            if u_cand <= u - 1e-4 * t * slope + floor:
                break
            t *= 0.5
            if t < 1e-12:
                raise MapConvergenceError(
                    f"line search stalled, |grad|_inf = {gnorm:.3e}"
                )
        theta, u = cand, u_cand
    gnorm = np.abs(target.gradient(theta)).max()
    if gnorm <= tol:
        return theta
    raise MapConvergenceError(
        f"no convergence in {max_iter} iterations, |grad|_inf = {gnorm:.3e}"
    )


def reference_from_hessian(theta_star, j) -> QuadraticReference:
    """Build a reference from an explicit mode and SPD matrix."""
    theta_star = np.asarray(theta_star, dtype=float)
    j = j if isinstance(j, SymMatrix) else SymMatrix.from_array(j)
    eig = linalg.sym_eigen(j)
    chol = linalg.cholesky(j)
    return QuadraticReference(
        theta_star=theta_star, J=j, eig=eig, chol=chol, omega=np.sqrt(eig.d)
    )


def build_reference(target, theta0=None, tol: float = 1e-8) -> QuadraticReference:
    """Find the mode and factorize the Hessian there."""
    theta_star = find_map(target, theta0=theta0, tol=tol)
    return reference_from_hessian(theta_star, target.hessian(theta_star))


def save_reference(ref: QuadraticReference, path) -> None:
    """Persist (theta*, J) as JSON; factorizations are recomputed on load."""
    payload = {
        "theta_star": ref.theta_star.tolist(),
        "J": ref.J.a.tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_reference(path) -> QuadraticReference:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return reference_from_hessian(
        np.array(payload["theta_star"]), np.array(payload["J"])
    )


def reference_cache_key(target) -> str:
    """Hash of the dataset and prior identifying a reference on disk."""
    h = hashlib.sha256()
    ds = target.dataset
    h.update(np.ascontiguousarray(ds.X).tobytes())
    h.update(np.ascontiguousarray(ds.y).tobytes())
    h.update(repr(target.prior_variance).encode())
    return h.hexdigest()[:16]


def cached_build_reference(target, cache_dir) -> QuadraticReference:
    """build_reference with an on-disk JSON cache keyed by dataset + prior."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"ref_{reference_cache_key(target)}.json"
    if path.exists():
        return load_reference(path)
    ref = build_reference(target)
    save_reference(ref, path)
    return ref
