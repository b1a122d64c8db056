"""Experiment runner.

One invocation configures a target and an integrator, runs one chain, and
writes a report; `--bvm` instead runs the growing-data-size study
(posterior spectrum against the Fisher information, acceptance versus n).

Configuration comes from an optional `key = value` file (# comments
allowed) plus command-line overrides. Documented keys, with defaults:

    dataset = simdata            simdata | CSV path | JSON manifest path
    simdata_n = 10000            simulated dataset size
    simdata_d_minus_1 = 100      simulated feature count
    simdata_gamma_sq = 1.0       variance of the true parameters
    prior_variance = 25.0
    method = prkr                kdk | ukrk | pverlet | pkrk | prkr
    samples = 50000              chain length
    seed = 0                     64-bit unsigned
    principled = false           derive (eps_bar, L) from T and the
                                 acceptance target (XOR with eps_bar/steps)
    eps_bar =                    explicit maximum stepsize
    steps =                      explicit steps per proposal
    target_acceptance = 0.65
    pilot_samples = 2000
    iac_c = 5.0
    out = runs                   output directory
    bvm = false
    bvm_n_list = 128,...,16384   dataset sizes for the --bvm study
    bvm_samples = 2000           proposals per acceptance estimate
    bvm_fisher_draws = 100000    Monte Carlo draws for the Fisher estimate
    rho_surface = false          emit the model-problem rho surface instead
    rho_kappa_min = -0.9         kappa grid for --rho-surface
    rho_kappa_max = 10.0
    rho_kappa_points = 100
    rho_eps_points = 100         eps grid points per kappa (up to pi)

Randomness: the seed feeds fixed stream ids (0 data, 1 momentum,
2 stepsize, 3 acceptance). Pilot chains during the principled sweep use
derived seeds (seed + 1000 + sweep index); --bvm acceptance chains use
seed + 1000*(n index + 1) + method index. Everything replays bit-identical
for a fixed seed; the only non-reproducible report fields are wall-clock
timings.

Artifacts in --out: report.json, table_row.txt, chain.csv,
acf_loglik.csv, acf_theta_sq.csv, acf_max_component.csv, manifest.json
(appended per run, so a sweep of invocations into one directory leaves a
run list). For --bvm: spectra.csv and acceptance.csv. For --rho-surface:
rho_surface.csv (eps, kappa, rho_krk, rho_rkr, stable flag; rho columns
empty outside the stable region) and stability_boundary.csv.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import diagnostics, model_problem
from .diagnostics import autocorrelation_function, format_table_row, report
from .integrators import KINDS, IntegratorSpec
from .precompute import QuadraticReference, build_reference, cached_build_reference
from .rng import DATA_STREAM, RngStream
from .sampler import ChainConfig, run_chain, write_chain_csv
from .targets import LogisticPosterior, fisher_info_mc, generate_simdata, load_dataset

_PRECONDITIONED = ("pverlet", "pkrk", "prkr")

# Fixed steps-per-proposal for the growing-n study; rotations use two or
# three steps, Verlet-style integration thirty.
BVM_STEPS = {"pkrk": 2, "prkr": 2, "pverlet": 3, "kdk": 30, "ukrk": 30}

# eps_bar sweep for the principled protocol: T divided by these.
_SWEEP_DIVISORS = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512)


class ProtocolError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    dataset: str = "simdata"
    simdata_n: int = 10000
    simdata_d_minus_1: int = 100
    simdata_gamma_sq: float = 1.0
    prior_variance: float = 25.0
    method: str = "prkr"
    samples: int = 50000
    seed: int = 0
    principled: bool = False
    eps_bar: float | None = None
    steps: int | None = None
    target_acceptance: float = 0.65
    pilot_samples: int = 2000
    iac_c: float = 5.0
    out: str = "runs"
    bvm: bool = False
    bvm_n_list: tuple = tuple(2**k for k in range(7, 15))
    bvm_samples: int = 2000
    bvm_fisher_draws: int = 100000
    rho_surface: bool = False
    rho_kappa_min: float = -0.9
    rho_kappa_max: float = 10.0
    rho_kappa_points: int = 100
    rho_eps_points: int = 100

    def validate(self):
        if self.method not in KINDS:
            raise ValueError(f"unknown method {self.method!r}")
        explicit = self.eps_bar is not None and self.steps is not None
        if not self.bvm:
            if self.principled == explicit:
                raise ValueError(
                    "give either --principled or both --eps-bar and --steps"
                )
        return self


def nominal_duration(method: str, ref: QuadraticReference) -> float:
    """T = pi/2 for preconditioned methods, pi/(2*omega_min) otherwise."""
    if method in _PRECONDITIONED:
        return 0.5 * math.pi
    return 0.5 * math.pi / ref.omega_min


@dataclass
class ResolvedProtocol:
    eps_bar: float
    n_steps: int
    duration: float
    mode: str
    sweep: list = field(default_factory=list)  # (eps_bar, L, acceptance)


def resolve_protocol(cfg: ExperimentConfig, target, ref: QuadraticReference) -> ResolvedProtocol:
    """Pick (eps_bar, L): pass explicit values through, or sweep downward
    from eps_bar = T until a pilot chain reaches the acceptance target."""
    if not cfg.principled:
        return ResolvedProtocol(
            eps_bar=float(cfg.eps_bar),
            n_steps=int(cfg.steps),
            duration=float(cfg.eps_bar) * int(cfg.steps),
            mode="explicit",
        )
    t = nominal_duration(cfg.method, ref)
    sweep = []
    for idx, div in enumerate(_SWEEP_DIVISORS):
        eps_bar, n_steps = t / div, div
        spec = IntegratorSpec(cfg.method, eps_bar, n_steps)
        pilot = run_chain(
            ChainConfig(spec=spec, n_samples=cfg.pilot_samples, seed=cfg.seed + 1000 + idx),
            target,
            ref,
        )
        sweep.append((eps_bar, n_steps, pilot.acceptance_rate))
        if pilot.acceptance_rate >= cfg.target_acceptance:
            return ResolvedProtocol(
                eps_bar=eps_bar, n_steps=n_steps, duration=t, mode="principled", sweep=sweep
            )
    lines = ", ".join(f"(eps_bar={e:.4g}, L={l}, AP={a:.2f})" for e, l, a in sweep)
    raise ProtocolError(
        f"no swept eps_bar reached acceptance {cfg.target_acceptance}: {lines}"
    )


def build_target(cfg: ExperimentConfig):
    """Target plus a provenance record for the manifest."""
    if cfg.dataset == "simdata":
        stream = RngStream(cfg.seed, DATA_STREAM)
        ds, true_theta = generate_simdata(
            stream, cfg.simdata_n, cfg.simdata_d_minus_1, cfg.simdata_gamma_sq
        )
        info = {"dataset": "simdata", "n": ds.n, "d": ds.d}
    else:
        ds = load_dataset(cfg.dataset)
        info = {"dataset": str(cfg.dataset), "n": ds.n, "d": ds.d}
    return LogisticPosterior(ds, prior_variance=cfg.prior_variance), info


def _write_acf_csv(path, values, max_lag: int):
    rho = autocorrelation_function(values)
    lags = min(max_lag, len(rho) - 1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("lag,acf\n")
        for t in range(lags + 1):
            fh.write(f"{t},{rho[t]:.17g}\n")


def _append_manifest(out: Path, record: dict):
    path = out / "manifest.json"
    runs = json.loads(path.read_text(encoding="utf-8")) if path.exists() else []
    runs.append(record)
    path.write_text(json.dumps(runs, indent=2, default=float), encoding="utf-8")


def run_experiment(cfg: ExperimentConfig):
    """Build, resolve, sample, diagnose, and write all artifacts."""
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    target, info = build_target(cfg)
    ref = cached_build_reference(target, out / "ref_cache")
    resolved = resolve_protocol(cfg, target, ref)
    spec = IntegratorSpec(cfg.method, resolved.eps_bar, resolved.n_steps)
    chain = run_chain(
        ChainConfig(spec=spec, n_samples=cfg.samples, seed=cfg.seed), target, ref
    )
    rep = report(chain, target, spec, c=cfg.iac_c)

    payload = json.loads(rep.to_json())
    payload["resolved"] = {
        "eps_bar": resolved.eps_bar,
        "n_steps": resolved.n_steps,
        "duration": resolved.duration,
        "mode": resolved.mode,
        "sweep": resolved.sweep,
    }
    payload["reference"] = {"omega_min": ref.omega_min, "omega_max": ref.omega_max}
    payload["target"] = info
    payload["seed"] = cfg.seed
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True, default=float), encoding="utf-8"
    )
    (out / "table_row.txt").write_text(format_table_row(rep) + "\n", encoding="utf-8")
    write_chain_csv(chain, out / "chain.csv")

    series = {s.name: s.values for s in diagnostics.observables(chain, target)}
    max_lag = min(chain.n_samples // 2, 2000)
    _write_acf_csv(out / "acf_loglik.csv", series["loglik"], max_lag)
    _write_acf_csv(out / "acf_theta_sq.csv", series["theta_sq"], max_lag)
    _write_acf_csv(
        out / "acf_max_component.csv",
        series[f"component_{rep.tau_max_component}"],
        max_lag,
    )
    _append_manifest(out, {"config": asdict(cfg), "resolved": payload["resolved"]})
    return rep, resolved, ref


def run_bvm_experiment(cfg: ExperimentConfig):
    """Growing-n study: spectrum convergence and acceptance per method.

    Draws one true parameter vector, then for each n generates fresh
    covariates, builds the reference, and records omega_j/sqrt(n) next to
    the square roots of the estimated Fisher eigenvalues, plus each
    method's acceptance at fixed L (T = pi/2 preconditioned,
    pi/(2*omega_min) unconditioned).
    """
    if list(cfg.bvm_n_list) != sorted(set(cfg.bvm_n_list)):
        raise ValueError("bvm_n_list must be strictly ascending")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    d = cfg.simdata_d_minus_1 + 1
    data_stream = RngStream(cfg.seed, DATA_STREAM)
    true_theta = data_stream.normal(d) * math.sqrt(cfg.simdata_gamma_sq)
    fisher = fisher_info_mc(true_theta, data_stream, cfg.bvm_fisher_draws)
    sqrt_fisher = np.sqrt(np.linalg.eigvalsh(fisher.a))

    spectra_rows, acceptance_rows = [], []
    for i, n in enumerate(cfg.bvm_n_list):
        ds, _ = generate_simdata(
            data_stream, n, cfg.simdata_d_minus_1, cfg.simdata_gamma_sq, true_theta=true_theta
        )
        target = LogisticPosterior(ds, prior_variance=cfg.prior_variance)
        ref = build_reference(target)
        scaled = ref.omega / math.sqrt(n)
        for j in range(d):
            spectra_rows.append((n, j, scaled[j], sqrt_fisher[j]))
        for mi, method in enumerate(KINDS):
            n_steps = BVM_STEPS[method]
            t = nominal_duration(method, ref)
            spec = IntegratorSpec(method, t / n_steps, n_steps)
            chain = run_chain(
                ChainConfig(
                    spec=spec,
                    n_samples=cfg.bvm_samples,
                    seed=cfg.seed + 1000 * (i + 1) + mi,
                ),
                target,
                ref,
            )
            acceptance_rows.append((n, method, chain.acceptance_rate))

    with open(out / "spectra.csv", "w", encoding="utf-8") as fh:
        fh.write("n,j,omega_over_sqrt_n,sqrt_fisher_eig\n")
        for n, j, w, sf in spectra_rows:
            fh.write(f"{n},{j},{w:.17g},{sf:.17g}\n")
    with open(out / "acceptance.csv", "w", encoding="utf-8") as fh:
        fh.write("n,method,acceptance\n")
        for n, method, ap in acceptance_rows:
            fh.write(f"{n},{method},{ap:.17g}\n")
    return spectra_rows, acceptance_rows


def run_rho_surface(cfg: ExperimentConfig):
    """Grid the model problem: rho for KRK/RKR where stable, plus the
    per-kappa stability boundaries, as CSVs for external plotting."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    kappas = np.linspace(cfg.rho_kappa_min, cfg.rho_kappa_max, cfg.rho_kappa_points)
    epss = np.linspace(math.pi / cfg.rho_eps_points, math.pi, cfg.rho_eps_points)
    with open(out / "rho_surface.csv", "w", encoding="utf-8") as fh:
        fh.write("eps,kappa,rho_krk,rho_rkr,stable\n")
        for kappa in kappas:
            kappa = float(kappa)
            limit = model_problem.stability_limit("krk", kappa)
            for eps in epss:
                eps = float(eps)
                if eps < limit and abs(kappa) > 0:
                    fh.write(f"{eps:.12g},{kappa:.12g},"
                             f"{model_problem.rho('krk', eps, kappa):.12g},"
                             f"{model_problem.rho('rkr', eps, kappa):.12g},1\n")
                elif eps < limit:
                    fh.write(f"{eps:.12g},{kappa:.12g},0,0,1\n")
                else:
                    fh.write(f"{eps:.12g},{kappa:.12g},,,0\n")
    with open(out / "stability_boundary.csv", "w", encoding="utf-8") as fh:
        fh.write("kappa,eps_max_krk_rkr,eps_max_kdk\n")
        for kappa in kappas:
            kappa = float(kappa)
            fh.write(f"{kappa:.12g},"
                     f"{model_problem.stability_limit('krk', kappa):.12g},"
                     f"{model_problem.stability_limit('kdk', kappa):.12g}\n")
    return out / "rho_surface.csv", out / "stability_boundary.csv"


def parse_config_file(path) -> dict:
    """`key = value` lines; # comments; booleans, numbers, and lists parsed."""
    values = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    return values


def _coerce(cfg: ExperimentConfig, key: str, raw: str):
    if key in ("principled", "bvm", "rho_surface"):
        return raw.lower() in ("1", "true", "yes", "on")
    if key == "bvm_n_list":
        return tuple(int(v) for v in raw.split(","))
    if key in ("simdata_n", "simdata_d_minus_1", "samples", "seed", "steps",
               "pilot_samples", "bvm_samples", "bvm_fisher_draws",
               "rho_kappa_points", "rho_eps_points"):
        return int(raw)
    if key in ("simdata_gamma_sq", "prior_variance", "eps_bar",
               "target_acceptance", "iac_c", "rho_kappa_min", "rho_kappa_max"):
        return float(raw)
    return raw


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="splithmc",
        description="Split-Hamiltonian HMC experiment runner",
    )
    p.add_argument("--config", type=str, default=None, help="key = value config file")
    p.add_argument("--seed", type=int, default=None, help="64-bit unsigned seed")
    p.add_argument("--dataset", type=str, default=None, help="simdata | CSV | JSON manifest")
    p.add_argument("--method", type=str, default=None, choices=KINDS)
    p.add_argument("--samples", type=int, default=None, help="chain length")
    p.add_argument("--eps-bar", type=float, default=None, dest="eps_bar")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--principled", action="store_true", default=None,
                   help="derive (eps_bar, L) from T and the acceptance target")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--bvm", action="store_true", default=None,
                   help="run the growing-n spectrum/acceptance study")
    p.add_argument("--rho-surface", action="store_true", default=None,
                   dest="rho_surface",
                   help="emit the model-problem rho surface and stability boundaries")
    return p


def config_from_args(argv=None) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig()
    if args.config:
        for key, raw in parse_config_file(args.config).items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, _coerce(cfg, key, raw))
    for key in ("seed", "dataset", "method", "samples", "eps_bar", "steps",
                "principled", "out", "bvm", "rho_surface"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def main(argv=None) -> int:
    cfg = config_from_args(argv)
    if cfg.rho_surface:
        surface, boundary = run_rho_surface(cfg)
        print(f"wrote {surface} and {boundary}")
        return 0
    if cfg.bvm:
        spectra, acceptance = run_bvm_experiment(cfg)
        n_last = cfg.bvm_n_list[-1]
        print(f"wrote {cfg.out}/spectra.csv and {cfg.out}/acceptance.csv")
        for n, method, ap in acceptance:
            if n == n_last:
                print(f"  n={n} {method}: acceptance {ap:.3f}")
        return 0
    rep, resolved, ref = run_experiment(cfg)
    print(
        f"method={cfg.method} mode={resolved.mode} eps_bar={resolved.eps_bar:.4g} "
        f"L={resolved.n_steps} T={resolved.duration:.4g} "
        f"omega=[{ref.omega_min:.3g}, {ref.omega_max:.3g}]"
    )
    print(format_table_row(rep))
    print(f"artifacts in {cfg.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
