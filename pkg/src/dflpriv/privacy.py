"""Leakage quantification: closed-form component bounds and the KSG MI estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .adversary import HonestPartition
from .seeding import derive_seed

__all__ = [
    "FULL_DISCLOSURE",
    "PrivateDataModel",
    "MIEstimate",
    "PrivacyReport",
    "analytic_mi_exact",
    "analytic_mi_asymptotic",
    "ksg_mi",
    "simulate_component_mi",
    "network_privacy_loss",
]

FULL_DISCLOSURE = math.inf


def analytic_mi_exact(m: int) -> float:
    """Leakage in nats about one member of a size-m component whose sum is known.

    0.5 * ln(m / (m - 1)) for m >= 2; a component of one reveals the value
    itself, reported as infinity.
    """
    if m < 1:
        raise ValueError(f"component size must be positive, got {m}")
    if m == 1:
        return FULL_DISCLOSURE
    return 0.5 * math.log(m / (m - 1))


def analytic_mi_asymptotic(m: int) -> float:
    """Large-m approximation 1 / (2 (m - 1)) of the exact component leakage."""
    if m < 2:
        raise ValueError(f"asymptotic form needs m >= 2, got {m}")
    return 1.0 / (2.0 * (m - 1))


@dataclass(frozen=True)
class PrivateDataModel:
    """Scalar private-value distribution: Gaussian(mean, var) or Uniform(lo, hi)."""

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.b <= 0:
                raise ValueError(f"variance must be positive, got {self.b}")
        elif self.kind == "uniform":
            if self.a >= self.b:
                raise ValueError(f"need lo < hi, got [{self.a}, {self.b}]")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def gaussian(cls, mean: float = 0.0, variance: float = 1.0):
        return cls("gaussian", mean, variance)

    @classmethod
    def uniform(cls, lo: float = 0.0, hi: float = 1.0):
        return cls("uniform", lo, hi)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(self.a, math.sqrt(self.b), size=size)
        return rng.uniform(self.a, self.b, size=size)


@dataclass(frozen=True)
class MIEstimate:
    """Mutual information in nats plus how it was obtained."""

    value: float
    method: str
    sample_count: int | None = None
    k_neighbors: int | None = None
    std_error: float | None = None


def _as_columns(arr) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim == 1:
        out = out[:, None]
    if out.ndim != 2:
        raise ValueError(f"samples must be 1-D or 2-D, got shape {out.shape}")
    return out


def _marginal_counts(pts: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Points strictly within max-norm eps_i of point i, excluding i itself."""
    if pts.shape[1] == 1:
        flat = pts[:, 0]
        order = np.argsort(flat)
        sorted_vals = flat[order]
        hi = np.searchsorted(sorted_vals, flat + eps, side="left")
        lo = np.searchsorted(sorted_vals, flat - eps, side="right")
        return hi - lo - 1
    tree = cKDTree(pts)
    counts = np.empty(len(pts), dtype=np.int64)
    for i, (p, e) in enumerate(zip(pts, eps)):
        counts[i] = len(tree.query_ball_point(p, np.nextafter(e, 0), p=np.inf)) - 1
    return counts


def ksg_mi(x, y, k: int = 3, jitter_seed: int = 0) -> MIEstimate:
    """Kraskov-Stoegbauer-Grassberger (variant 1) mutual information in nats.

    Uses max-norm k-NN distances in the joint space and strict-inequality
    neighbor counts in each marginal. A tiny seeded uniform jitter
    (+-1e-10) is applied once so exact duplicates cannot break the k-NN
    geometry; this never raises on tied data.
    """
    xs = _as_columns(x)
    ys = _as_columns(y)
    if len(xs) != len(ys):
        raise ValueError(f"sample arrays differ in length: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 50:
        raise ValueError(f"need at least 50 samples, got {n}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k >= n:
        raise ValueError(f"k={k} must be below the sample count {n}")

    rng = np.random.default_rng(jitter_seed)
    xs = xs + rng.uniform(-1e-10, 1e-10, size=xs.shape)
    ys = ys + rng.uniform(-1e-10, 1e-10, size=ys.shape)

    joint = np.hstack([xs, ys])
    dist, _ = cKDTree(joint).query(joint, k=k + 1, p=np.inf)
    eps = dist[:, k]

    nx = _marginal_counts(xs, eps)
    ny = _marginal_counts(ys, eps)
    value = float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1)))
    return MIEstimate(value=value, method="ksg", sample_count=n, k_neighbors=k)


def simulate_component_mi(
    model: PrivateDataModel,
    m: int,
    runs: int,
    k: int = 3,
    seed: int = 0,
    repeats: int = 1,
) -> MIEstimate:
    """Monte Carlo estimate of the leakage about one member of a size-m sum.

    Each of ``runs`` draws produces m i.i.d. private values; the estimator
    sees the pairs (first value, sum of all m). With ``repeats`` > 1 the
    whole experiment is repeated on derived seeds and the standard error of
    the mean is attached.
    """
    if m < 2:
        raise ValueError(f"component size must be at least 2, got {m}")
    if runs < 1000:
        raise ValueError(f"need at least 1000 runs for a stable estimate, got {runs}")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")

    values = []
    for rep in range(repeats):
        rng = np.random.default_rng(derive_seed(seed, "component_mi", rep))
        draws = model.sample(rng, (runs, m))
        est = ksg_mi(draws[:, 0], draws.sum(axis=1), k=k, jitter_seed=derive_seed(seed, "jitter", rep))
        values.append(est.value)
    std_error = float(np.std(values, ddof=1) / math.sqrt(repeats)) if repeats > 1 else None
    return MIEstimate(
        value=float(np.mean(values)),
        method="ksg",
        sample_count=runs,
        k_neighbors=k,
        std_error=std_error,
    )


@dataclass(frozen=True)
class PrivacyReport:
    """Analytic per-node leakage for one honest partition.

    Nodes in singleton components are fully revealed and counted separately
    so the mean over the remaining honest nodes stays finite.
    """

    fully_revealed: int
    mean_mi: float | None
    per_node: tuple

    def node_mi(self, node: int) -> float:
        for v, mi in self.per_node:
            if v == node:
                return mi
        raise KeyError(f"node {node} is not honest in this partition")


def network_privacy_loss(partition: HonestPartition) -> PrivacyReport:
    """Closed-form leakage of every honest node given its component size."""
    per_node = []
    finite = []
    fully_revealed = 0
    for comp in partition.components:
        mi = analytic_mi_exact(len(comp))
        for v in comp:
            per_node.append((v, mi))
        if len(comp) == 1:
            fully_revealed += 1
        else:
            finite.extend([mi] * len(comp))
    per_node.sort()
    mean_mi = float(np.mean(finite)) if finite else None
    return PrivacyReport(fully_revealed=fully_revealed, mean_mi=mean_mi, per_node=tuple(per_node))
