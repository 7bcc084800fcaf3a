"""Stochastic first-order oracles, test objectives, and LibSVM data handling.

Every oracle answers a query point with two gradient estimates drawn from
disjoint randomness, each an unbiased estimate of the true gradient. Exact
f / gradient access is exposed separately for reporting and verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.random import Generator

from .core import vector

__all__ = [
    "GradientPair",
    "StochasticOracle",
    "RosenbrockOracle",
    "QuadraticOracle",
    "SigmoidLossOracle",
    "Dataset",
    "LibsvmParseError",
    "rosenbrock_f",
    "rosenbrock_grad",
    "sigmoid_phi",
    "sigmoid_phi_prime",
    "sigmoid_loss_f",
    "sigmoid_loss_grad",
    "load_libsvm",
    "save_libsvm",
    "balance_subsample",
]


@dataclass(frozen=True)
class GradientPair:
    """Two independent stochastic gradients taken at the same query point."""

    g: np.ndarray
    g_prime: np.ndarray

    def __post_init__(self):
        if self.g.shape != self.g_prime.shape:
            raise ValueError(
                f"gradient pair dims differ: {self.g.shape} vs {self.g_prime.shape}"
            )
        if not (np.all(np.isfinite(self.g)) and np.all(np.isfinite(self.g_prime))):
            raise ValueError("gradient pair entries must be finite")

    @property
    def dim(self) -> int:
        return self.g.shape[0]


class StochasticOracle:
    """Base contract for two-sample stochastic gradient oracles.

    Subclasses set ``dim`` and capability flags, and may attach metadata used
    only by diagnostics: ``smoothness`` (gradient Lipschitz constant),
    ``f_star`` (known infimum), ``pl_constant``, ``grad_bound``.
    """

    dim: int
    exact_f: bool = False
    exact_grad: bool = False
    f_star: Optional[float] = None
    smoothness: Optional[float] = None
    pl_constant: Optional[float] = None
    grad_bound: Optional[float] = None

    def f(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_pair(self, x: np.ndarray, rng: Generator) -> GradientPair:
        raise NotImplementedError

    def _check_dim(self, x: np.ndarray):
        if x.shape != (self.dim,):
            raise ValueError(f"query point has shape {x.shape}, oracle dim is {self.dim}")

    # Vectorized helpers for Monte Carlo verification; subclasses override
    # with faster versions where it matters.

    def f_many(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.f(x) for x in xs])

    def sample_pairs(self, x: np.ndarray, n: int, rng: Generator) -> Tuple[np.ndarray, np.ndarray]:
        gs = np.empty((n, self.dim))
        gps = np.empty((n, self.dim))
        for i in range(n):
            pair = self.sample_pair(x, rng)
            gs[i] = pair.g
            gps[i] = pair.g_prime
        return gs, gps


# ----------------------------------------------------------------------------
# Analytic objectives with additive Gaussian noise
# ----------------------------------------------------------------------------


def rosenbrock_f(x: np.ndarray) -> float:
    """Rosenbrock banana: (1-x1)^2 + 100*(x2-x1^2)^2, minimum 0 at (1, 1)."""
    if x.shape != (2,):
        raise ValueError(f"rosenbrock is 2-D, got shape {x.shape}")
    a = 1.0 - x[0]
    c = x[1] - x[0] * x[0]
    return float(a * a + 100.0 * (c * c))


def rosenbrock_grad(x: np.ndarray) -> np.ndarray:
    """Analytic Rosenbrock gradient."""
    if x.shape != (2,):
        raise ValueError(f"rosenbrock is 2-D, got shape {x.shape}")
    c = x[1] - x[0] * x[0]
    gx = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * c
    gy = 200.0 * c
    return np.array([gx, gy])


class _AnalyticNoiseOracle(StochasticOracle):
    """Exact objective plus independent additive Gaussian noise on each sample.

    Each query draws two fresh noise vectors, so the pair is conditionally
    independent given the query point and both components are unbiased.
    """

    exact_f = True
    exact_grad = True

    def __init__(self, dim: int, sigma):
        self.dim = dim
        sig = np.asarray(sigma, dtype=np.float64)
        if sig.ndim == 0:
            sig = np.full(dim, float(sig))
        if sig.shape != (dim,):
            raise ValueError(f"sigma must be scalar or length-{dim}, got shape {sig.shape}")
        if np.any(sig < 0):
            raise ValueError("noise levels must be >= 0")
        self.sigma = sig

    def sample_pair(self, x: np.ndarray, rng: Generator) -> GradientPair:
        self._check_dim(x)
        grad = self.grad(x)
        eps = rng.standard_normal((2, self.dim))
        g = grad + self.sigma * eps[0]
        gp = grad + self.sigma * eps[1]
        return GradientPair(g, gp)

    def sample_pairs(self, x: np.ndarray, n: int, rng: Generator) -> Tuple[np.ndarray, np.ndarray]:
        self._check_dim(x)
        grad = self.grad(x)
        eps = rng.standard_normal((n, 2, self.dim))
        gs = grad + self.sigma * eps[:, 0, :]
        gps = grad + self.sigma * eps[:, 1, :]
        return gs, gps


class RosenbrockOracle(_AnalyticNoiseOracle):
    """2-D Rosenbrock with additive white Gaussian noise of level sigma.

    The default smoothness metadata is 1002, the gradient Lipschitz constant
    at the optimum and the customary choice of M for this benchmark.
    """

    f_star = 0.0

    def __init__(self, sigma: float = 0.0, smoothness: float = 1002.0):
        super().__init__(2, sigma)
        self.smoothness = smoothness

    def f(self, x: np.ndarray) -> float:
        return rosenbrock_f(x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return rosenbrock_grad(x)

    def f_many(self, xs: np.ndarray) -> np.ndarray:
        a = 1.0 - xs[:, 0]
        c = xs[:, 1] - xs[:, 0] * xs[:, 0]
        return a * a + 100.0 * (c * c)


class QuadraticOracle(_AnalyticNoiseOracle):
    """Diagonal quadratic f(x) = 0.5 * sum(diag_i * x_i^2) with Gaussian noise.

    Satisfies the PL condition with constant min(diag); smoothness is
    max(diag). A per-coordinate sigma vector gives anisotropic noise.
    """

    f_star = 0.0

    def __init__(self, diag, sigma=0.0):
        diag = vector(diag)
        if np.any(diag <= 0):
            raise ValueError("diagonal entries must be positive")
        super().__init__(len(diag), sigma)
        self.diag = diag
        self.smoothness = float(np.max(diag))
        self.pl_constant = float(np.min(diag))

    def f(self, x: np.ndarray) -> float:
        self._check_dim(x)
        return 0.5 * float(np.sum(self.diag * (x * x)))

    def grad(self, x: np.ndarray) -> np.ndarray:
        self._check_dim(x)
        return self.diag * x

    def f_many(self, xs: np.ndarray) -> np.ndarray:
        return 0.5 * ((xs * xs) @ self.diag)


# ----------------------------------------------------------------------------
# Nonconvex classification objective on a dataset
# ----------------------------------------------------------------------------


def sigmoid_phi(theta):
    """phi(t) = t^2 / (1 + t^2): bounded, nonconvex, 1-Lipschitz, 2-smooth."""
    t2 = theta * theta
    return t2 / (1.0 + t2)


def sigmoid_phi_prime(theta):
    """phi'(t) = 2t / (1 + t^2)^2."""
    d = 1.0 + theta * theta
    return 2.0 * theta / (d * d)


@dataclass
class Dataset:
    """Dense binary-classification data: feature rows and labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise ValueError("features must be a nonempty (rows, n_features) matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match the number of rows")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if not np.all(np.abs(self.labels) == 1.0):
            raise ValueError("labels must be +1 or -1")

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def same_as(self, other: "Dataset") -> bool:
        return np.array_equal(self.features, other.features) and np.array_equal(
            self.labels, other.labels
        )


def sigmoid_loss_f(x: np.ndarray, data: Dataset) -> float:
    """Mean of phi(a_i . x - y_i) over all rows."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    if x.shape != (data.n_features,):
        raise ValueError(f"x has shape {x.shape}, dataset has {data.n_features} features")
    r = data.features @ x - data.labels
    return float(np.mean(sigmoid_phi(r)))


def sigmoid_loss_grad(x: np.ndarray, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of the mean sigmoid-type loss over the given rows."""
    if features.shape[0] == 0:
        raise ValueError("gradient over an empty row subset")
    r = features @ x - labels
    w = sigmoid_phi_prime(r)
    return (w @ features) / features.shape[0]


class SigmoidLossOracle(StochasticOracle):
    """Minibatch oracle for the sigmoid-type classification loss.

    Each half of a pair is the gradient over its own minibatch of rows drawn
    i.i.d. with replacement, so the two halves are independent and unbiased.
    batch_size equal to the dataset size short-circuits to the deterministic
    full-batch gradient for both halves (zero sampling noise).
    """

    exact_f = True
    exact_grad = True

    def __init__(self, data: Dataset, batch_size: int, smoothness: Optional[float] = None):
        if not 1 <= batch_size <= len(data):
            raise ValueError(f"batch_size must be in [1, {len(data)}], got {batch_size}")
        self.data = data
        self.batch_size = batch_size
        self.dim = data.n_features
        if smoothness is None:
            # Global Hessian bound: |phi''| <= 2 and Hessian = mean of
            # phi''(r_i) * a_i a_i^T over rows.
            smoothness = 2.0 * float(np.mean(np.sum(data.features**2, axis=1)))
        self.smoothness = smoothness

    def f(self, x: np.ndarray) -> float:
        return sigmoid_loss_f(x, self.data)

    def grad(self, x: np.ndarray) -> np.ndarray:
        self._check_dim(x)
        return sigmoid_loss_grad(x, self.data.features, self.data.labels)

    def _batch_grad(self, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return sigmoid_loss_grad(x, self.data.features[idx], self.data.labels[idx])

    def sample_pair(self, x: np.ndarray, rng: Generator) -> GradientPair:
        self._check_dim(x)
        m = len(self.data)
        if self.batch_size == m:
            g = self.grad(x)
            return GradientPair(g, g.copy())
        idx = rng.integers(0, m, size=self.batch_size)
        idx2 = rng.integers(0, m, size=self.batch_size)
        return GradientPair(self._batch_grad(x, idx), self._batch_grad(x, idx2))

    def f_many(self, xs: np.ndarray, chunk: int = 8192) -> np.ndarray:
        out = np.empty(xs.shape[0])
        F, y = self.data.features, self.data.labels
        for lo in range(0, xs.shape[0], chunk):
            hi = min(lo + chunk, xs.shape[0])
            r = xs[lo:hi] @ F.T - y
            out[lo:hi] = np.mean(sigmoid_phi(r), axis=1)
        return out

    def sample_pairs(self, x: np.ndarray, n: int, rng: Generator, chunk: int = 2048):
        self._check_dim(x)
        m, b = len(self.data), self.batch_size
        if b == m:
            g = self.grad(x)
            return np.tile(g, (n, 1)), np.tile(g, (n, 1))
        F, y = self.data.features, self.data.labels
        resid = F @ x - y
        w = sigmoid_phi_prime(resid)
        gs = np.empty((n, self.dim))
        gps = np.empty((n, self.dim))
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            for out in (gs, gps):
                idx = rng.integers(0, m, size=(hi - lo, b))
                # mean_j w[idx_j] * F[idx_j] for each draw
                out[lo:hi] = np.einsum("nb,nbd->nd", w[idx], F[idx]) / b
        return gs, gps


# ----------------------------------------------------------------------------
# LibSVM text format
# ----------------------------------------------------------------------------


class LibsvmParseError(ValueError):
    """Malformed LibSVM input, reported with a 1-based line number."""


def load_libsvm(
    path,
    append_bias: bool = True,
    n_features: Optional[int] = None,
    binary_labels: bool = True,
) -> Dataset:
    """Parse a LibSVM text file into a dense Dataset.

    Format per line: ``<label> <index>:<value> ...`` with 1-based strictly
    increasing indices. ``#`` starts a comment; blank lines are skipped.
    When ``append_bias`` a constant 1.0 feature is added to every row.
    """
    rows = []
    labels = []
    max_index = 0
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise LibsvmParseError(f"line {lineno}: bad label {tokens[0]!r}") from None
            if binary_labels and label not in (-1.0, 1.0):
                raise LibsvmParseError(f"line {lineno}: label must be +1 or -1, got {tokens[0]!r}")
            feats = []
            prev = 0
            for tok in tokens[1:]:
                idx_str, sep, val_str = tok.partition(":")
                if not sep:
                    raise LibsvmParseError(f"line {lineno}: expected index:value, got {tok!r}")
                try:
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError:
                    raise LibsvmParseError(f"line {lineno}: bad feature token {tok!r}") from None
                if idx <= prev:
                    raise LibsvmParseError(
                        f"line {lineno}: indices must be 1-based strictly increasing, got {idx}"
                    )
                if not math.isfinite(val):
                    raise LibsvmParseError(f"line {lineno}: non-finite value {val_str!r}")
                prev = idx
                feats.append((idx, val))
            if n_features is not None and prev > n_features:
                raise LibsvmParseError(
                    f"line {lineno}: index {prev} exceeds n_features={n_features}"
                )
            max_index = max(max_index, prev)
            rows.append(feats)
            labels.append(label)
    if not rows:
        raise LibsvmParseError("no data rows found")
    d = n_features if n_features is not None else max_index
    if d == 0:
        raise LibsvmParseError("no features found and n_features not given")
    width = d + 1 if append_bias else d
    features = np.zeros((len(rows), width))
    for i, feats in enumerate(rows):
        for idx, val in feats:
            features[i, idx - 1] = val
    if append_bias:
        features[:, d] = 1.0
    return Dataset(features, np.array(labels))


def save_libsvm(data: Dataset, path):
    """Re-emit a Dataset as LibSVM text (zeros omitted, shortest decimals).

    Round trip: ``load_libsvm(path, append_bias=False, n_features=data.n_features)``
    reproduces the Dataset exactly.
    """
    with open(path, "w") as fh:
        for i in range(len(data)):
            label = float(data.labels[i])
            parts = ["+1" if label == 1.0 else "-1" if label == -1.0 else repr(label)]
            row = data.features[i]
            for j in np.nonzero(row)[0]:
                parts.append(f"{j + 1}:{float(row[j])!r}")
            fh.write(" ".join(parts) + "\n")


def balance_subsample(data: Dataset, rng: Generator) -> Dataset:
    """Downsample the majority class to the minority count, then shuffle.

    Sampling is uniform without replacement; the final row order comes from a
    single seeded permutation so the result is fully determined by ``rng``.
    """
    pos = np.flatnonzero(data.labels == 1.0)
    neg = np.flatnonzero(data.labels == -1.0)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("balance_subsample requires both label classes present")
    if len(pos) > len(neg):
        pos = rng.choice(pos, size=len(neg), replace=False)
    elif len(neg) > len(pos):
        neg = rng.choice(neg, size=len(pos), replace=False)
    keep = np.concatenate([pos, neg])
    keep = keep[rng.permutation(len(keep))]
    return Dataset(data.features[keep], data.labels[keep])
