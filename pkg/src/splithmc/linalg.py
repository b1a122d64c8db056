"""Dense symmetric linear algebra for the quadratic reference.

Everything here is a thin, contract-enforcing layer over LAPACK (via
numpy/scipy): symmetrized storage, eigendecompositions with an SPD check,
Cholesky factors, and the triangular solves the preconditioned integrators
need. No sampling logic lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf


class NotSPDError(ValueError):
    """Matrix required to be symmetric positive definite is not."""


class EigenConvergenceError(RuntimeError):
    """Eigensolver failed to converge within its iteration cap."""


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix; symmetry is enforced at construction.

    Asymmetric input (e.g. a numerically computed Hessian) is symmetrized
    as (J + J^T)/2.
    """

    a: np.ndarray

    @classmethod
    def from_array(cls, a) -> "SymMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("matrix dimension must be at least 1")
        return cls(0.5 * (a + a.T))

    @property
    def n(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class EigenDecomp:
    """Eigendecomposition J = Z^T diag(d) Z with Z orthogonal.

    Rows of `z` are eigenvectors; `d` is ascending and strictly positive
    for SPD input.
    """

    z: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular Cholesky factor B with B B^T = J."""

    b: np.ndarray

    @property
    def n(self) -> int:
        return self.b.shape[0]


def _as_sym_array(j) -> np.ndarray:
    if isinstance(j, SymMatrix):
        return j.a
    return SymMatrix.from_array(j).a


def sym_eigen(j) -> EigenDecomp:
    """Eigendecomposition of a symmetric positive definite matrix.

    Returns eigenvalues ascending so that the extreme frequencies of the
    quadratic reference are positional: omega_min = sqrt(d[0]),
    omega_max = sqrt(d[-1]).

    Raises NotSPDError if any eigenvalue is non-positive (a non-convex
    stationary point or a broken Hessian), EigenConvergenceError if LAPACK
    fails to converge.
    """
    a = _as_sym_array(j)
    try:
        d, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        off = a - np.diag(np.diag(a))
        raise EigenConvergenceError(
            f"eigensolver did not converge; off-diagonal residual "
            f"max|off| = {np.abs(off).max():.3e}"
        ) from exc
    if d[0] <= 0.0:
        raise NotSPDError(
            f"matrix is not SPD: smallest eigenvalue {d[0]:.6e} <= 0"
        )
    return EigenDecomp(z=v.T.copy(), d=d)


def cholesky(j) -> CholFactor:
    """Lower Cholesky factor of an SPD matrix; NotSPDError on failure."""
    a = _as_sym_array(j)
    c, info = dpotrf(a, lower=1)
    if info > 0:
        raise NotSPDError(
            f"matrix is not SPD: non-positive pivot at index {info - 1}"
        )
    if info < 0:
        raise ValueError(f"invalid argument {-info} to dpotrf")
    return CholFactor(b=np.tril(c))


def chol_solve(chol: CholFactor, r) -> np.ndarray:
    """Solve (B B^T) x = r given the lower Cholesky factor B."""
    r = np.asarray(r, dtype=float)
    if r.shape[0] != chol.n:
        raise ValueError(f"dimension mismatch: factor is {chol.n}, rhs is {r.shape[0]}")
    return cho_solve((chol.b, True), r)


def chol_sample_velocity(chol: CholFactor, z) -> np.ndarray:
    """Map iid standard normals z to B^{-T} z (covariance J^{-1})."""
    z = np.asarray(z, dtype=float)
    if z.shape[0] != chol.n:
        raise ValueError(f"dimension mismatch: factor is {chol.n}, z is {z.shape[0]}")
    return solve_triangular(chol.b, z, lower=True, trans="T")
