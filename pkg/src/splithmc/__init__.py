"""splithmc: HMC with quadratic-reference splitting and preconditioning.

The potential is split as U = U0 + U1 around the posterior mode, with U0
the quadratic form of the Hessian there. Five reversible one-step maps are
provided (plain and preconditioned Verlet, kick-rotate-kick with identity
or Hessian mass, preconditioned rotate-kick-rotate), together with the
logistic-regression targets, chain driver, autocorrelation diagnostics,
and the exact stability / expected-energy-error analysis of the scalar
model problem that discriminates between the integrators.
"""

from . import diagnostics, integrators, linalg, model_problem, precompute, rng, sampler, targets
from .diagnostics import RunReport, format_table_row, iac, observables, report
from .integrators import IntegratorSpec, PhaseState, step, trajectory
from .linalg import CholFactor, EigenDecomp, NotSPDError, SymMatrix, chol_sample_velocity, chol_solve, cholesky, sym_eigen
from .precompute import QuadraticReference, build_reference, find_map, reference_from_hessian
from .rng import RngStream, chain_streams
from .sampler import ChainConfig, ChainOutput, hmc_step, run_chain, write_chain_csv
from .targets import (
    Dataset,
    GaussianTarget,
    LogisticPosterior,
    SplitPotential,
    fisher_info_mc,
    generate_simdata,
    load_dataset,
)

__version__ = "0.1.0"
