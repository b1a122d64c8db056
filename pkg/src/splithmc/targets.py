"""Posterior targets: Bayesian logistic regression with a Gaussian prior.

Provides the negative log posterior U and its derivatives, the simulated
data generator, CSV dataset ingestion, a Monte Carlo Fisher-information
estimator, and the split U = U0 + U1 around a quadratic reference.

The likelihood of a labelled datum (x, y), y in {0,1}, with augmented
covariates xt = [1, x^T]^T, contributes

    y * log(1 + exp(-theta^T xt)) + (1 - y) * log(1 + exp(theta^T xt))

to U; the prior N(0, prior_variance * I) adds theta^T theta / (2 pv).
All exponentials go through an overflow-safe softplus so U stays finite
even when an unstable trajectory drives theta^T xt beyond +-700.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .linalg import SymMatrix
from .rng import RngStream

# Simulated-data feature scales: variance 25 for the first five features,
# 1 for the next five, 0.04 beyond.
_SIMDATA_VARIANCES = (25.0, 1.0, 0.04)


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + exp(z)) = max(z, 0) + log1p(exp(-|z|))
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def simdata_feature_scales(d_minus_1: int) -> np.ndarray:
    """Per-feature standard deviations of the simulated design distribution."""
    v = np.empty(d_minus_1)
    v[: min(5, d_minus_1)] = _SIMDATA_VARIANCES[0]
    if d_minus_1 > 5:
        v[5 : min(10, d_minus_1)] = _SIMDATA_VARIANCES[1]
    if d_minus_1 > 10:
        v[10:] = _SIMDATA_VARIANCES[2]
    return np.sqrt(v)


@dataclass(frozen=True)
class Dataset:
    """Binary-labelled design matrix with the intercept column prepended."""

    X: np.ndarray  # (n, d) augmented design, column 0 all ones
    y: np.ndarray  # (n,) labels in {0, 1}
    augmented: bool = True

    def __post_init__(self):
        if self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("design/label shape mismatch")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError("labels must be in {0, 1}")
        if self.augmented and not np.all(self.X[:, 0] == 1.0):
            raise ValueError("augmented design must have an all-ones first column")

    @classmethod
    def from_features(cls, features, y) -> "Dataset":
        """Prepend the intercept column to raw features."""
        features = np.asarray(features, dtype=float)
        y = np.asarray(y)
        ones = np.ones((features.shape[0], 1))
        return cls(X=np.hstack([ones, features]), y=y.astype(np.int8))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


class LogisticPosterior:
    """Negative log posterior of logistic regression with N(0, pv*I) prior.

    potential/gradient/hessian are pure and bit-deterministic (fixed
    summation order); safe for concurrent evaluation.
    """

    def __init__(self, dataset: Dataset, prior_variance: float = 25.0):
        if prior_variance <= 0:
            raise ValueError("prior_variance must be positive")
        self.dataset = dataset
        self.prior_variance = float(prior_variance)
        self.d = dataset.d

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.d,):
            raise ValueError(f"theta must have shape ({self.d},), got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        return theta

    def log_likelihood(self, theta) -> float:
        """Log likelihood (prior excluded)."""
        theta = self._check(theta)
        z = self.dataset.X @ theta
        return float(np.sum(self.dataset.y * z - _softplus(z)))

    def potential(self, theta) -> float:
        """U(theta) = -log likelihood + theta^T theta / (2 prior_variance)."""
        theta = self._check(theta)
        z = self.dataset.X @ theta
        nll = float(np.sum(_softplus(z) - self.dataset.y * z))
        return nll + 0.5 * float(theta @ theta) / self.prior_variance

    def gradient(self, theta) -> np.ndarray:
        theta = self._check(theta)
        z = self.dataset.X @ theta
        return self.dataset.X.T @ (expit(z) - self.dataset.y) + theta / self.prior_variance

    def hessian(self, theta) -> SymMatrix:
        theta = self._check(theta)
        z = self.dataset.X @ theta
        w = expit(z) * expit(-z)
        h = self.dataset.X.T @ (w[:, None] * self.dataset.X)
        h[np.diag_indices(self.d)] += 1.0 / self.prior_variance
        return SymMatrix.from_array(h)


class GaussianTarget:
    """Quadratic potential U = (theta - mean)^T precision (theta - mean) / 2.

    Used for exactness checks (the split's U1 vanishes when the reference
    matches the precision) and for synthetic sampling tests.
    """

    def __init__(self, mean, precision):
        self.mean = np.asarray(mean, dtype=float)
        self._precision = SymMatrix.from_array(precision)
        if self._precision.n != self.mean.shape[0]:
            raise ValueError("mean/precision dimension mismatch")
        self.d = self.mean.shape[0]

    def potential(self, theta) -> float:
        r = np.asarray(theta, dtype=float) - self.mean
        return 0.5 * float(r @ (self._precision.a @ r))

    def gradient(self, theta) -> np.ndarray:
        r = np.asarray(theta, dtype=float) - self.mean
        return self._precision.a @ r

    def hessian(self, theta) -> SymMatrix:
        return self._precision

    def log_likelihood(self, theta) -> float:
        return -self.potential(theta)


@dataclass(frozen=True)
class SplitPotential:
    """U = U0 + U1 with U0 the quadratic reference at the mode.

    U0(theta) = (theta - theta*)^T J (theta - theta*) / 2 and U1 is the
    remainder; grad_u1 vanishes at theta* to the MAP tolerance.
    """

    target: object
    ref: object  # QuadraticReference

    def u0(self, theta) -> float:
        r = np.asarray(theta, dtype=float) - self.ref.theta_star
        return 0.5 * float(r @ (self.ref.J.a @ r))

    def u1(self, theta) -> float:
        return self.target.potential(theta) - self.u0(theta)

    def grad_u0(self, theta) -> np.ndarray:
        r = np.asarray(theta, dtype=float) - self.ref.theta_star
        return self.ref.J.a @ r

    def grad_u1(self, theta) -> np.ndarray:
        return self.target.gradient(theta) - self.grad_u0(theta)


def generate_simdata(
    stream: RngStream,
    n: int,
    d_minus_1: int,
    gamma_sq: float = 1.0,
    true_theta=None,
) -> tuple[Dataset, np.ndarray]:
    """Simulated logistic data with block-scaled Gaussian covariates.

    Covariates x ~ N(0, diag(sigma_j^2)) with sigma_j^2 = 25 (j <= 5),
    1 (5 < j <= 10), 0.04 (j > 10); true parameters iid N(0, gamma_sq)
    unless supplied; labels y ~ Bernoulli(sigmoid(true_theta^T [1, x])).
    """
    if n < 1 or d_minus_1 < 1:
        raise ValueError("need n >= 1 and d_minus_1 >= 1")
    scales = simdata_feature_scales(d_minus_1)
    x = stream.normal(n * d_minus_1).reshape(n, d_minus_1) * scales
    if true_theta is None:
        true_theta = stream.normal(d_minus_1 + 1) * np.sqrt(gamma_sq)
    else:
        true_theta = np.asarray(true_theta, dtype=float)
        if true_theta.shape != (d_minus_1 + 1,):
            raise ValueError("true_theta must have length d_minus_1 + 1")
    ds = Dataset.from_features(x, np.zeros(n, dtype=np.int8))
    p = expit(ds.X @ true_theta)
    y = stream.bernoulli(p)
    return Dataset(X=ds.X, y=y), true_theta


def fisher_info_mc(
    true_theta,
    stream: RngStream,
    n_mc: int,
    feature_scales=None,
    chunk: int = 20000,
) -> SymMatrix:
    """Monte Carlo estimate of the per-datum Fisher information.

    Averages sigmoid'(true_theta^T xt) * xt xt^T over fresh covariate draws
    from the simulated design distribution (or the supplied per-feature
    scales).
    """
    true_theta = np.asarray(true_theta, dtype=float)
    d = true_theta.shape[0]
    if n_mc < 1:
        raise ValueError("need n_mc >= 1")
    if feature_scales is None:
        feature_scales = simdata_feature_scales(d - 1)
    acc = np.zeros((d, d))
    remaining = n_mc
    while remaining > 0:
        m = min(chunk, remaining)
        x = stream.normal(m * (d - 1)).reshape(m, d - 1) * feature_scales
        xt = np.hstack([np.ones((m, 1)), x])
        z = xt @ true_theta
        w = expit(z) * expit(-z)
        acc += xt.T @ (w[:, None] * xt)
        remaining -= m
    return SymMatrix.from_array(acc / n_mc)


class DatasetFormatError(ValueError):
    """CSV/manifest content does not match the documented dataset format."""


def _parse_label(raw: str, class_map: dict | None, line_no: int):
    if class_map is not None:
        if raw in class_map:
            return int(class_map[raw])
        raise DatasetFormatError(
            f"line {line_no}: label {raw!r} not in the manifest class map"
        )
    try:
        val = float(raw)
    except ValueError:
        raise DatasetFormatError(
            f"line {line_no}: non-numeric label {raw!r} and no class map given"
        ) from None
    if val not in (0.0, 1.0):
        raise DatasetFormatError(f"line {line_no}: label {raw!r} is not binary")
    return int(val)


def load_dataset(path, label_column: int | None = None, class_map: dict | None = None) -> Dataset:
    """Load a CSV dataset (features then one binary label column).

    An optional header row is auto-detected. `path` may instead be a JSON
    manifest with keys "file" (CSV path, relative to the manifest),
    optional "label_column" (default last) and optional "class_map"
    mapping raw label strings to 0/1. The intercept column is prepended.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        manifest = json.loads(path.read_text(encoding="utf-8"))
        csv_path = path.parent / manifest["file"]
        label_column = manifest.get("label_column", label_column)
        class_map = manifest.get("class_map", class_map)
    else:
        csv_path = path

    rows: list[list[str]] = []
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if row and any(field.strip() for field in row):
                rows.append([field.strip() for field in row])
    if not rows:
        raise DatasetFormatError(f"{csv_path}: empty file")

    def _all_parseable(row, lbl_idx):
        for i, field in enumerate(row):
            if i == lbl_idx and class_map is not None:
                if field not in class_map:
                    return False
                continue
            try:
                float(field)
            except ValueError:
                return False
        return True

    width = len(rows[0])
    lbl = (width - 1) if label_column is None else (label_column % width)
    start = 0 if _all_parseable(rows[0], lbl) else 1  # header auto-detect
    if len(rows) - start < 1:
        raise DatasetFormatError(f"{csv_path}: no data rows")

    feats, labels = [], []
    for k, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DatasetFormatError(
                f"line {k}: ragged row ({len(row)} fields, expected {width})"
            )
        labels.append(_parse_label(row[lbl], class_map, k))
        try:
            feats.append([float(row[i]) for i in range(width) if i != lbl])
        except ValueError as exc:
            raise DatasetFormatError(f"line {k}: parse failure ({exc})") from None
    return Dataset.from_features(np.array(feats), np.array(labels))
