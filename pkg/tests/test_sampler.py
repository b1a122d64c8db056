import numpy as np
import pytest

from splithmc.diagnostics import iac
from splithmc.integrators import IntegratorSpec, total_energy
from splithmc.precompute import reference_from_hessian
from splithmc.rng import chain_streams
from splithmc.sampler import (
    ChainConfig,
    acceptance_probability,
    hmc_step,
    run_chain,
    write_chain_csv,
)
from splithmc.targets import GaussianTarget

CONV = {"kdk": "momentum", "ukrk": "momentum",
        "pverlet": "velocity", "pkrk": "velocity", "prkr": "velocity"}


def gaussian_2d():
    # N(0, diag(1, 4)): precision diag(1, 1/4), omega = (1/2, 1)
    target = GaussianTarget([0.0, 0.0], np.diag([1.0, 0.25]))
    ref = reference_from_hessian(target.mean, target.hessian(None).a)
    return target, ref


def test_acceptance_probability_values():
    assert acceptance_probability(0.0) == 1.0
    assert acceptance_probability(np.log(2.0)) == pytest.approx(0.5, rel=1e-15)
    assert acceptance_probability(-3.0) == 1.0
    assert acceptance_probability(np.inf) == 0.0
    assert acceptance_probability(1e6) == 0.0


def test_pure_gaussian_rotation_kinds_always_accept():
    target, ref = gaussian_2d()
    for kind in ("ukrk", "pkrk", "prkr"):
        spec = IntegratorSpec(kind, 1.3, 2)
        cfg = ChainConfig(spec=spec, n_samples=10**4, seed=11)
        chain = run_chain(cfg, target, ref)
        assert chain.acceptance_rate == 1.0
        assert np.abs(chain.energy_errors).max() <= 1e-10


def test_seed_replay_identical_output():
    target, ref = gaussian_2d()
    cfg = ChainConfig(spec=IntegratorSpec("pkrk", 1.0, 2), n_samples=500, seed=3)
    a = run_chain(cfg, target, ref)
    b = run_chain(cfg, target, ref)
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.accept_flags, b.accept_flags)
    assert np.array_equal(a.energy_errors, b.energy_errors)
    assert a.grad_evals == b.grad_evals


def test_rejected_samples_repeat_previous_state():
    target, ref = gaussian_2d()
    # moderately large stepsize so some proposals are rejected
    cfg = ChainConfig(spec=IntegratorSpec("kdk", 1.8, 3), n_samples=4000, seed=5)
    chain = run_chain(cfg, target, ref)
    rejected = np.where(chain.accept_flags[1:] == 0)[0] + 1
    assert rejected.size > 0
    for k in rejected[:50]:
        assert np.array_equal(chain.samples[k], chain.samples[k - 1])


def test_delta_h_matches_offline_recomputation():
    target, ref = gaussian_2d()
    streams = chain_streams(7)
    theta = ref.theta_star.copy()
    for kind in CONV:
        spec = IntegratorSpec(kind, 0.4, 3)
        res = hmc_step(theta, spec, target, ref, streams)
        h0 = total_energy(res.initial_state, target, ref)
        h1 = total_energy(res.proposal_state, target, ref)
        assert res.delta_h == pytest.approx(h1 - h0, abs=1e-12)
        theta = res.theta


def test_unstable_verlet_rejects_nearly_everything():
    target = GaussianTarget([0.0], [[1.0]])
    ref = reference_from_hessian([0.0], [[1.0]])
    cfg = ChainConfig(spec=IntegratorSpec("kdk", 10.0, 10), n_samples=1000, seed=13)
    chain = run_chain(cfg, target, ref)
    assert chain.acceptance_rate <= 0.05


def test_divergences_counted():
    target = GaussianTarget([0.0], [[1.0]])
    ref = reference_from_hessian([0.0], [[1.0]])
    cfg = ChainConfig(spec=IntegratorSpec("kdk", 50.0, 200), n_samples=50, seed=1)
    chain = run_chain(cfg, target, ref)
    assert chain.n_divergent > 0
    assert np.all(chain.accept_flags[np.isinf(chain.energy_errors)] == 0)


def test_moments_all_kinds_desk_scale():
    # mean within 3 SE of 0 and covariance diag within 3 SE of (1, 4)
    target, ref = gaussian_2d()
    truth = np.array([1.0, 4.0])
    params = {"kdk": (0.8, 4), "ukrk": (1.57, 2), "pverlet": (0.5, 3),
              "pkrk": (1.57, 1), "prkr": (1.57, 1)}
    for kind, (eps_bar, n_steps) in params.items():
        cfg = ChainConfig(spec=IntegratorSpec(kind, eps_bar, n_steps),
                          n_samples=5 * 10**4, seed=29)
        chain = run_chain(cfg, target, ref)
        n = chain.n_samples
        for j in range(2):
            comp = chain.samples[:, j]
            tau = max(1.0, iac(comp))
            se_mean = comp.std() * np.sqrt(tau / n)
            assert abs(comp.mean()) <= 3 * se_mean, (kind, j)
            sq = comp**2
            tau_sq = max(1.0, iac(sq))
            se_var = sq.std() * np.sqrt(tau_sq / n)
            assert abs(sq.mean() - truth[j]) <= 3 * se_var, (kind, j)
        cross = chain.samples[:, 0] * chain.samples[:, 1]
        tau_c = max(1.0, iac(cross))
        assert abs(cross.mean()) <= 3 * cross.std() * np.sqrt(tau_c / n), kind


def test_acceptance_nonincreasing_in_stepsize():
    target, ref = gaussian_2d()
    rates = []
    for eps_bar in (0.2, 0.5, 0.9, 1.4, 1.9):
        cfg = ChainConfig(spec=IntegratorSpec("kdk", eps_bar, 3),
                          n_samples=4000, seed=31)
        rates.append(run_chain(cfg, target, ref).acceptance_rate)
    slack = 3 * np.sqrt(0.25 / 4000)
    assert all(rates[i + 1] <= rates[i] + slack for i in range(len(rates) - 1)), rates


def test_burn_in_discards_leading_transitions():
    target, ref = gaussian_2d()
    spec = IntegratorSpec("pkrk", 1.0, 1)
    full = run_chain(ChainConfig(spec=spec, n_samples=100, seed=17), target, ref)
    cut = run_chain(ChainConfig(spec=spec, n_samples=60, seed=17, burn_in=40), target, ref)
    assert np.array_equal(cut.samples, full.samples[40:])


def test_initial_theta_defaults_to_mode():
    target, ref = gaussian_2d()
    spec = IntegratorSpec("prkr", 0.01, 1)
    chain = run_chain(ChainConfig(spec=spec, n_samples=1, seed=19), target, ref)
    # tiny step from the mode stays near the mode
    assert np.abs(chain.samples[0]).max() < 0.1


def test_velocity_kind_requires_reference():
    target, _ = gaussian_2d()
    with pytest.raises(ValueError, match="reference"):
        run_chain(ChainConfig(spec=IntegratorSpec("pkrk", 0.5, 1), n_samples=10, seed=0),
                  target, None)


def test_chain_csv_roundtrip(tmp_path):
    target, ref = gaussian_2d()
    chain = run_chain(ChainConfig(spec=IntegratorSpec("pkrk", 1.0, 1),
                                  n_samples=25, seed=23), target, ref)
    path = tmp_path / "chain.csv"
    write_chain_csv(chain, path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.shape[0] == 25
    assert np.allclose(data["theta_0"], chain.samples[:, 0])
    assert np.allclose(data["accepted"], chain.accept_flags)
    assert np.allclose(data["delta_h"], chain.energy_errors)
