import json

import numpy as np
import pytest

from splithmc.precompute import build_reference
from splithmc.rng import RngStream
from splithmc.targets import (
    Dataset,
    DatasetFormatError,
    GaussianTarget,
    LogisticPosterior,
    SplitPotential,
    fisher_info_mc,
    generate_simdata,
    load_dataset,
    simdata_feature_scales,
)


def small_instance(seed, n=10, d_minus_1=2, prior_variance=25.0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d_minus_1))
    y = rng.integers(0, 2, n)
    return LogisticPosterior(Dataset.from_features(x, y), prior_variance)


def test_potential_at_zero_is_nlog2():
    t = small_instance(0, n=17)
    assert np.isclose(t.potential(np.zeros(t.d)), 17 * np.log(2.0), rtol=1e-14)


def test_single_datum_intercept_only():
    ds = Dataset.from_features(np.empty((1, 0)), np.array([1]))
    t = LogisticPosterior(ds, prior_variance=25.0)
    assert np.isclose(t.potential(np.zeros(1)), np.log(2.0), rtol=1e-14)


def test_potential_matches_naive_product():
    rng = np.random.default_rng(1)
    t = small_instance(1, n=10, d_minus_1=2)
    theta = rng.normal(scale=0.5, size=t.d)
    z = t.dataset.X @ theta
    lik = np.prod((1 + np.exp(-z)) ** (-t.dataset.y) * (1 + np.exp(z)) ** (t.dataset.y - 1))
    expected = -np.log(lik) + theta @ theta / (2 * t.prior_variance)
    assert np.isclose(t.potential(theta), expected, rtol=1e-12)


def test_potential_rejects_nonfinite():
    t = small_instance(2)
    with pytest.raises(ValueError):
        t.potential(np.array([np.nan, 0.0, 0.0]))


def test_potential_overflow_safe():
    t = small_instance(3)
    u = t.potential(np.full(t.d, 1e4))
    assert np.isfinite(u)


def test_gradient_prior_only_for_symmetric_labels():
    # duplicate rows with labels 0 and 1: the data term cancels at theta = 0
    x = np.array([[1.0, -2.0], [1.0, -2.0], [0.5, 3.0], [0.5, 3.0]])
    y = np.array([0, 1, 0, 1])
    t = LogisticPosterior(Dataset.from_features(x, y), prior_variance=4.0)
    theta = np.array([0.2, -0.1, 0.3])
    # at theta=0 the gradient is exactly the prior term (zero here)
    assert np.allclose(t.gradient(np.zeros(3)), 0.0, atol=1e-14)
    assert np.isclose(t.potential(theta), t.potential(theta))  # finite sanity


def finite_diff_gradient(t, theta, h=1e-5):
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (t.potential(theta + e) - t.potential(theta - e)) / (2 * h)
    return g


def finite_diff_hessian(t, theta, h=1e-5):
    d = theta.size
    out = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out[:, i] = (t.gradient(theta + e) - t.gradient(theta - e)) / (2 * h)
    return out


def test_gradient_finite_difference_agreement():
    rng = np.random.default_rng(10)
    for k in range(50):
        t = small_instance(100 + k, n=int(rng.integers(5, 30)), d_minus_1=int(rng.integers(1, 5)))
        theta = rng.normal(scale=0.8, size=t.d)
        g = t.gradient(theta)
        fd = finite_diff_gradient(t, theta)
        assert np.abs(g - fd).max() <= 1e-6 * max(1.0, np.abs(g).max())


def test_hessian_finite_difference_agreement():
    rng = np.random.default_rng(20)
    for k in range(20):
        t = small_instance(200 + k, n=int(rng.integers(5, 30)), d_minus_1=int(rng.integers(1, 4)))
        theta = rng.normal(scale=0.8, size=t.d)
        h = t.hessian(theta).a
        fd = finite_diff_hessian(t, theta)
        assert np.abs(h - fd).max() <= 1e-5 * max(1.0, np.abs(h).max())


def test_hessian_single_datum_closed_form():
    ds = Dataset.from_features(np.array([[2.0, -1.0]]), np.array([1]))
    t = LogisticPosterior(ds, prior_variance=25.0)
    xt = ds.X[0]
    expected = 0.25 * np.outer(xt, xt) + np.eye(3) / 25.0
    assert np.allclose(t.hessian(np.zeros(3)).a, expected, atol=1e-14)


def test_hessian_spd_floor():
    t = small_instance(4, n=25, d_minus_1=3, prior_variance=9.0)
    rng = np.random.default_rng(4)
    for _ in range(5):
        h = t.hessian(rng.normal(size=t.d, scale=2.0)).a
        lam = np.linalg.eigvalsh(h)
        assert lam[0] >= 1.0 / 9.0 - 1e-10


def test_convex_along_random_sections():
    t = small_instance(5, n=20, d_minus_1=3)
    rng = np.random.default_rng(55)
    for _ in range(20):
        base = rng.normal(size=t.d)
        direction = rng.normal(size=t.d)
        ts = np.linspace(-1, 1, 9)
        us = np.array([t.potential(base + s * direction) for s in ts])
        second = us[2:] - 2 * us[1:-1] + us[:-2]
        assert np.all(second >= -1e-10)


def test_split_potential_identity_and_stationarity():
    stream = RngStream(6, 0)
    ds, _ = generate_simdata(stream, n=400, d_minus_1=4)
    t = LogisticPosterior(ds)
    ref = build_reference(t)
    split = SplitPotential(t, ref)
    rng = np.random.default_rng(6)
    for _ in range(100):
        theta = ref.theta_star + rng.normal(size=t.d, scale=0.5)
        u = t.potential(theta)
        assert np.isclose(split.u0(theta) + split.u1(theta), u, rtol=1e-12)
        g = t.gradient(theta)
        assert np.allclose(
            split.grad_u0(theta) + split.grad_u1(theta), g,
            rtol=1e-12, atol=1e-12 * max(1.0, np.abs(g).max()),
        )
    assert np.abs(split.grad_u1(ref.theta_star)).max() <= 1e-8


def test_simdata_block_variances_and_labels():
    stream = RngStream(7, 0)
    n, dm1 = 10**4, 15
    ds, true_theta = generate_simdata(stream, n, dm1)
    feats = ds.X[:, 1:]
    var = feats.var(axis=0, ddof=1)
    expected = simdata_feature_scales(dm1) ** 2
    se = expected * np.sqrt(2.0 / (n - 1))
    assert np.all(np.abs(var - expected) <= 5 * se)
    assert 0.0 < ds.y.mean() < 1.0
    assert true_theta.shape == (dm1 + 1,)


def test_simdata_replay_identical():
    a, ta = generate_simdata(RngStream(8, 0), 100, 12)
    b, tb = generate_simdata(RngStream(8, 0), 100, 12)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    assert np.array_equal(ta, tb)


def test_fisher_info_at_zero_matches_design_covariance():
    d = 8
    est = fisher_info_mc(np.zeros(d), RngStream(9, 0), 200000)
    expected = 0.25 * np.diag(np.concatenate([[1.0], simdata_feature_scales(d - 1) ** 2]))
    scale = np.abs(np.diag(expected))
    tol = 5 * np.sqrt(np.outer(scale, scale) / 200000) * 3  # loose entrywise MC bound
    assert np.all(np.abs(est.a - expected) <= tol + 1e-12)


def test_fisher_info_self_consistency_and_psd():
    theta = RngStream(10, 0).normal(6)
    a = fisher_info_mc(theta, RngStream(11, 0), 10**5)
    b = fisher_info_mc(theta, RngStream(12, 0), 10**5)
    diff = np.abs(a.a - b.a)
    scale = np.sqrt(np.outer(np.diag(a.a), np.diag(a.a)))
    assert np.all(diff <= 5 * scale / np.sqrt(10**5) * 3 + 1e-12)
    assert np.linalg.eigvalsh(a.a)[0] >= -1e-8


def test_gaussian_target_derivatives():
    g = GaussianTarget([1.0, -1.0], [[2.0, 0.5], [0.5, 1.0]])
    theta = np.array([0.3, 0.4])
    r = theta - g.mean
    p = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert np.isclose(g.potential(theta), 0.5 * r @ p @ r)
    assert np.allclose(g.gradient(theta), p @ r)
    assert np.allclose(g.hessian(theta).a, p)


# dataset loading


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_dataset_with_header(tmp_path):
    path = write_csv(tmp_path, "f1,f2,label\n1.5,2.0,1\n-0.5,0.25,0\n")
    ds = load_dataset(path)
    assert ds.n == 2 and ds.d == 3
    assert np.allclose(ds.X[:, 0], 1.0)
    assert np.array_equal(ds.y, [1, 0])
    assert np.allclose(ds.X[0, 1:], [1.5, 2.0])


def test_load_dataset_without_header(tmp_path):
    path = write_csv(tmp_path, "1.0,0.5,0\n2.0,1.5,1\n")
    ds = load_dataset(path)
    assert ds.n == 2 and ds.d == 3


def test_load_dataset_ragged_row(tmp_path):
    path = write_csv(tmp_path, "1.0,2.0,0\n1.0,1\n")
    with pytest.raises(DatasetFormatError, match="line 2"):
        load_dataset(path)


def test_load_dataset_nonbinary_label(tmp_path):
    path = write_csv(tmp_path, "1.0,2.0,3\n")
    with pytest.raises(DatasetFormatError, match="not binary"):
        load_dataset(path)


def test_load_dataset_parse_failure_names_line(tmp_path):
    path = write_csv(tmp_path, "a,b,label\n1.0,2.0,1\n1.0,oops,0\n")
    with pytest.raises(DatasetFormatError, match="line 3"):
        load_dataset(path)


def test_load_dataset_manifest_class_map(tmp_path):
    write_csv(tmp_path, "x,cls\n0.1,won\n-0.2,nowin\n", name="chessy.csv")
    manifest = tmp_path / "chessy.json"
    manifest.write_text(
        json.dumps({"file": "chessy.csv", "label_column": 1,
                    "class_map": {"won": 1, "nowin": 0}}),
        encoding="utf-8",
    )
    ds = load_dataset(manifest)
    assert ds.n == 2 and ds.d == 2
    assert np.array_equal(ds.y, [1, 0])


def test_load_dataset_dimensions_roundtrip(tmp_path):
    # loader reports exactly the file's n and d-1 (interface check at small scale)
    rng = np.random.default_rng(0)
    n, dm1 = 40, 6
    rows = [",".join(f"{v:.6f}" for v in rng.normal(size=dm1)) + f",{rng.integers(0, 2)}"
            for _ in range(n)]
    path = write_csv(tmp_path, "\n".join(rows) + "\n")
    ds = load_dataset(path)
    assert ds.n == n and ds.d == dm1 + 1
