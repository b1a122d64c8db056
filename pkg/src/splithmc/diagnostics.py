"""Chain diagnostics: observables, integrated autocorrelation time, costs.

The IAC estimator follows the automatic-windowing recipe: normalized
autocovariances via an FFT padded to the next power of two >= 2n (biased,
normalized by n), running sums tau(M) = 1 + 2 * sum_{t<=M} rho(t), and the
window chosen as the smallest M with M >= c * tau(M), default c = 5.

Reports carry both cost units. Gradient evaluations per sample are the
primary, hardware-independent cost; wall milliseconds per sample are
reported secondarily.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .integrators import IntegratorSpec
from .sampler import ChainOutput


def _next_pow_two(n: int) -> int:
    k = 1
    while k < n:
        k <<= 1
    return k


def autocorrelation_function(x: np.ndarray) -> np.ndarray:
    """Normalized empirical autocorrelation rho(0..n-1) of a 1-D series."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points")
    m = x - x.mean()
    npad = 2 * _next_pow_two(n)
    f = np.fft.rfft(m, n=npad)
    acov = np.fft.irfft(f * np.conj(f), n=npad)[:n] / n
    if acov[0] <= 0.0:
        raise ValueError("series is constant; autocorrelation is undefined")
    return acov / acov[0]


def iac(values, c: float = 5.0) -> float:
    """Integrated autocorrelation time with automatic windowing.

    Raises ValueError for constant series (a stuck chain) and for series
    shorter than 50 points, where the estimate is meaningless.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 50:
        raise ValueError("need at least 50 samples to estimate an IAC")
    rho = autocorrelation_function(values)
    taus = 2.0 * np.cumsum(rho) - 1.0
    window = np.arange(len(taus)) < c * taus
    m = int(np.argmin(window)) if np.any(~window) else len(taus) - 1
    return float(taus[m])


@dataclass(frozen=True)
class ObservableSeries:
    name: str
    values: np.ndarray


def observables(chain: ChainOutput, target) -> list[ObservableSeries]:
    """Log-likelihood, squared norm, and all component series of a chain."""
    loglik = np.array([target.log_likelihood(s) for s in chain.samples])
    theta_sq = np.einsum("ij,ij->i", chain.samples, chain.samples)
    out = [
        ObservableSeries("loglik", loglik),
        ObservableSeries("theta_sq", theta_sq),
    ]
    out.extend(
        ObservableSeries(f"component_{j}", chain.samples[:, j].copy())
        for j in range(chain.d)
    )
    return out


@dataclass
class RunReport:
    """One table row: tuning, mixing times, acceptance, and cost products."""

    method: str
    n_steps: int
    eps_bar: float
    duration: float
    n_samples: int
    acceptance_rate: float
    tau_loglik: float
    tau_theta_sq: float
    tau_max: float
    tau_max_component: int
    grad_evals_per_sample: float
    ms_per_sample: float
    n_divergent: int
    warnings: list = field(default_factory=list)

    @property
    def products(self) -> dict:
        """tau x cost for both cost units."""
        out = {}
        for name, tau in [
            ("loglik", self.tau_loglik),
            ("theta_sq", self.tau_theta_sq),
            ("max", self.tau_max),
        ]:
            out[f"tau_{name}_x_grads"] = tau * self.grad_evals_per_sample
            out[f"tau_{name}_x_ms"] = tau * self.ms_per_sample
        return out

    def to_json(self) -> str:
        payload = {k: v for k, v in self.__dict__.items()}
        payload["products"] = self.products
        return json.dumps(payload, indent=2, sort_keys=True, default=float)


def report(chain: ChainOutput, target, spec: IntegratorSpec, c: float = 5.0) -> RunReport:
    """Assemble the diagnostics of one finished chain.

    tau_max maximizes the IAC over the Cartesian component series only;
    the log-likelihood and squared-norm observables are reported
    separately.
    """
    series = observables(chain, target)
    taus = {s.name: iac(s.values, c=c) for s in series}
    comp_taus = [(taus[f"component_{j}"], j) for j in range(chain.d)]
    tau_max, j_max = max(comp_taus)
    warnings = [
        f"tau < 1 for {name} ({val:.3f}): estimator noise or anticorrelation"
        for name, val in taus.items()
        if val < 1.0
    ]
    return RunReport(
        method=spec.kind,
        n_steps=spec.n_steps,
        eps_bar=spec.eps_bar,
        duration=spec.duration,
        n_samples=chain.n_samples,
        acceptance_rate=chain.acceptance_rate,
        tau_loglik=taus["loglik"],
        tau_theta_sq=taus["theta_sq"],
        tau_max=tau_max,
        tau_max_component=j_max,
        grad_evals_per_sample=chain.grad_evals / chain.n_samples,
        ms_per_sample=1000.0 * chain.wall_time / chain.n_samples,
        n_divergent=chain.n_divergent,
        warnings=warnings,
    )


_ROW_FMT = (
    "{method:>8s} | L={n_steps:<4d} | g/smp={grads:7.2f} | ms/smp={ms:7.3f} | "
    "tau_l*g={tlg:8.2f} | tau_th2*g={tqg:8.2f} | tau_max*g={tmg:8.2f} | AP={ap:.2f}"
)


def format_table_row(rep: RunReport) -> str:
    """Text row mirroring the benchmark-table column order.

    Columns: method, L, cost per sample, then tau x cost for the
    log-likelihood, squared-norm and worst-component observables, then the
    acceptance rate. The first line uses gradient evaluations as the cost
    unit, the second wall milliseconds.
    """
    p = rep.products
    grads_line = _ROW_FMT.format(
        method=rep.method,
        n_steps=rep.n_steps,
        grads=rep.grad_evals_per_sample,
        ms=rep.ms_per_sample,
        tlg=p["tau_loglik_x_grads"],
        tqg=p["tau_theta_sq_x_grads"],
        tmg=p["tau_max_x_grads"],
        ap=rep.acceptance_rate,
    )
    ms_line = (
        f"{'':>8s} | (ms unit)      tau_l*ms={p['tau_loglik_x_ms']:8.3f} | "
        f"tau_th2*ms={p['tau_theta_sq_x_ms']:8.3f} | tau_max*ms={p['tau_max_x_ms']:8.3f}"
    )
    return grads_line + "\n" + ms_line
