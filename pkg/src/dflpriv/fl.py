"""Toy federated-learning stack: models with hand-coded gradients, data, training loops.

Gradients are derived by hand for both architectures (no autodiff framework),
which keeps every formula directly checkable against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .consensus import MixingMatrix, Transcript, run_consensus
from .graphs import Graph

__all__ = [
    "LinearRegressor",
    "MLPClassifier",
    "LocalDataset",
    "GradientBundle",
    "RoundResult",
    "TrainingHistory",
    "make_synthetic_images",
    "split_among_nodes",
    "local_gradient",
    "decentralized_round",
    "train_decentralized",
    "train_centralized",
    "union_loss",
]


def _lock(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LinearRegressor:
    """Scalar linear model y_hat = w . x with squared-error loss 0.5 (y_hat - y)^2."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _lock(np.atleast_1d(self.weights)))

    @classmethod
    def init(cls, in_dim: int, seed: int = 0, scale: float = 1.0):
        rng = np.random.default_rng(seed)
        return cls(rng.normal(0.0, scale / np.sqrt(in_dim), size=in_dim))

    @property
    def params(self) -> np.ndarray:
        return self.weights.copy()

    @property
    def param_count(self) -> int:
        return self.weights.size

    def with_params(self, flat) -> "LinearRegressor":
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.param_count,):
            raise ValueError(f"expected {self.param_count} parameters, got shape {flat.shape}")
        return LinearRegressor(flat)

    def predict(self, inputs) -> np.ndarray:
        return np.atleast_2d(inputs) @ self.weights

    def loss(self, inputs, targets) -> float:
        err = self.predict(inputs) - np.atleast_1d(targets)
        return float(0.5 * np.mean(err**2))

    def gradient(self, inputs, targets, mean: bool = True) -> np.ndarray:
        x = np.atleast_2d(np.asarray(inputs, dtype=float))
        y = np.atleast_1d(np.asarray(targets, dtype=float))
        if x.shape[0] == 0:
            raise ValueError("batch must be non-empty")
        if x.shape[1] != self.weights.size or x.shape[0] != y.shape[0]:
            raise ValueError("batch shape does not match model dimension")
        err = x @ self.weights - y
        grad = err @ x
        return grad / len(y) if mean else grad

    def match_input_gradient(self, inputs, targets, residual, want_label_grad: bool = False):
        """d/d(inputs) of <summed per-sample gradient, residual>."""
        x = np.atleast_2d(np.asarray(inputs, dtype=float))
        y = np.atleast_1d(np.asarray(targets, dtype=float))
        r = np.asarray(residual, dtype=float)
        err = x @ self.weights - y
        xr = x @ r
        dx = np.outer(xr, self.weights) + np.outer(err, r)
        if want_label_grad:
            return dx, -xr
        return dx


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class MLPClassifier:
    """One-hidden-layer tanh network with softmax cross-entropy loss."""

    w1: np.ndarray  # (hidden, in_dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (classes, hidden)
    b2: np.ndarray  # (classes,)

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            object.__setattr__(self, name, _lock(getattr(self, name)))
        h, d = self.w1.shape
        c = self.w2.shape[0]
        if self.b1.shape != (h,) or self.w2.shape != (c, h) or self.b2.shape != (c,):
            raise ValueError("inconsistent layer shapes")

    @classmethod
    def init(cls, in_dim: int, hidden: int, classes: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        return cls(
            w1=rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(hidden, in_dim)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(classes, hidden)),
            b2=np.zeros(classes),
        )

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def classes(self) -> int:
        return self.w2.shape[0]

    @property
    def param_count(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])

    def with_params(self, flat) -> "MLPClassifier":
        w1, b1, w2, b2 = self.unflatten(flat)
        return MLPClassifier(w1, b1, w2, b2)

    def unflatten(self, flat) -> tuple:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.param_count,):
            raise ValueError(f"expected {self.param_count} parameters, got shape {flat.shape}")
        h, d, c = self.hidden, self.in_dim, self.classes
        parts = np.split(flat, [h * d, h * d + h, h * d + h + c * h])
        return parts[0].reshape(h, d), parts[1], parts[2].reshape(c, h), parts[3]

    def _as_soft(self, labels) -> np.ndarray:
        labels = np.asarray(labels)
        if labels.ndim == 2:
            return labels.astype(float)
        one_hot = np.zeros((labels.shape[0], self.classes))
        one_hot[np.arange(labels.shape[0]), labels.astype(int)] = 1.0
        return one_hot

    def _forward(self, inputs):
        x = np.atleast_2d(np.asarray(inputs, dtype=float))
        if x.shape[1] != self.in_dim:
            raise ValueError(f"inputs have dimension {x.shape[1]}, model expects {self.in_dim}")
        z1 = x @ self.w1.T + self.b1
        a1 = np.tanh(z1)
        probs = _softmax(a1 @ self.w2.T + self.b2)
        return x, a1, probs

    def predict_proba(self, inputs) -> np.ndarray:
        return self._forward(inputs)[2]

    def loss(self, inputs, labels) -> float:
        _, _, probs = self._forward(inputs)
        soft = self._as_soft(labels)
        return float(-np.mean(np.sum(soft * np.log(probs + 1e-300), axis=1)))

    def gradient(self, inputs, labels, mean: bool = True) -> np.ndarray:
        x, a1, probs = self._forward(inputs)
        if x.shape[0] == 0:
            raise ValueError("batch must be non-empty")
        err = probs - self._as_soft(labels)
        d1 = (err @ self.w2) * (1.0 - a1**2)
        gw2 = err.T @ a1
        gb2 = err.sum(axis=0)
        gw1 = d1.T @ x
        gb1 = d1.sum(axis=0)
        flat = np.concatenate([gw1.ravel(), gb1, gw2.ravel(), gb2])
        return flat / x.shape[0] if mean else flat

    def match_input_gradient(self, inputs, labels, residual, want_label_grad: bool = False):
        """d/d(inputs) of <summed per-sample gradient, residual>.

        Reverse-mode pass through the gradient computation itself (the
        gradient-matching objective differentiates a gradient, so this is a
        hand-rolled second-order sweep). With ``want_label_grad`` the
        derivative with respect to the soft labels is returned as well.
        """
        x, a1, probs = self._forward(inputs)
        soft = self._as_soft(labels)
        rw1, rb1, rw2, rb2 = self.unflatten(residual)

        err = probs - soft
        s = 1.0 - a1**2
        d1 = (err @ self.w2) * s

        d_d1 = x @ rw1.T + rb1
        d_err = (a1 @ rw2.T + rb2) + (d_d1 * s) @ self.w2.T
        d_s = d_d1 * (err @ self.w2)
        d_z2 = probs * d_err - probs * np.sum(probs * d_err, axis=1, keepdims=True)
        d_a1 = -2.0 * a1 * d_s + err @ rw2 + d_z2 @ self.w2
        d_z1 = d_a1 * s
        dx = d_z1 @ self.w1 + d1 @ rw1
        if want_label_grad:
            return dx, -d_err
        return dx


ToyModel = LinearRegressor | MLPClassifier


@dataclass(frozen=True)
class LocalDataset:
    """One node's private samples: inputs in [0,1]^d with integer labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        inputs = _lock(np.atleast_2d(self.inputs))
        labels = np.array(self.labels)
        labels.flags.writeable = False
        if inputs.shape[0] != labels.shape[0]:
            raise ValueError("inputs and labels differ in length")
        if inputs.size and (inputs.min() < -1e-12 or inputs.max() > 1 + 1e-12):
            raise ValueError("inputs must lie in [0, 1]")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def make_synthetic_images(
    count: int,
    classes: int,
    seed: int,
    size: int = 8,
    pattern_strength: float = 0.5,
    labels=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed random blobs with a class-dependent grating, flattened to [0,1].

    Each class overlays a sinusoidal grating of its own orientation and
    phase, so images of a class share structure while staying individually
    random. Labels cycle 0..classes-1 unless given explicitly.
    """
    if labels is None:
        labels = np.arange(count) % classes
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (count,):
        raise ValueError(f"need {count} labels, got shape {labels.shape}")
    rng = np.random.default_rng(seed)
    u, v = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size), indexing="ij")
    gratings = []
    for c in range(classes):
        theta = np.pi * c / classes
        phase = 2 * np.pi * c / classes
        wave = np.sin(2 * np.pi * 2.0 * (u * np.cos(theta) + v * np.sin(theta)) + phase)
        gratings.append(0.5 * (wave + 1.0))
    images = np.empty((count, size * size))
    for idx in range(count):
        blob = gaussian_filter(rng.random((size, size)), sigma=1.0, mode="wrap")
        lo, hi = blob.min(), blob.max()
        blob = (blob - lo) / (hi - lo) if hi > lo else np.zeros_like(blob)
        img = (1.0 - pattern_strength) * blob + pattern_strength * gratings[labels[idx]]
        lo, hi = img.min(), img.max()
        images[idx] = ((img - lo) / (hi - lo) if hi > lo else img).ravel()
    return images, labels


def split_among_nodes(inputs, labels, n_nodes: int) -> list[LocalDataset]:
    """Deal samples to nodes in contiguous equal blocks."""
    inputs = np.atleast_2d(inputs)
    if inputs.shape[0] % n_nodes != 0:
        raise ValueError(f"{inputs.shape[0]} samples do not split evenly over {n_nodes} nodes")
    per = inputs.shape[0] // n_nodes
    return [
        LocalDataset(inputs[i * per : (i + 1) * per], np.asarray(labels)[i * per : (i + 1) * per])
        for i in range(n_nodes)
    ]


@dataclass(frozen=True)
class GradientBundle:
    """Per-node local gradients for one round, one row per node."""

    gradients: np.ndarray
    round_index: int

    def __post_init__(self):
        object.__setattr__(self, "gradients", _lock(np.atleast_2d(self.gradients)))

    def component_sum(self, nodes) -> np.ndarray:
        return self.gradients[sorted(nodes)].sum(axis=0)

    @property
    def average(self) -> np.ndarray:
        return self.gradients.mean(axis=0)


def local_gradient(model: ToyModel, inputs, targets) -> np.ndarray:
    """Exact mean-loss gradient of ``model`` over one batch."""
    return model.gradient(inputs, targets, mean=True)


@dataclass
class RoundResult:
    models: list
    bundle: GradientBundle
    transcript: Transcript | None
    converged: bool


def decentralized_round(
    g: Graph,
    a: MixingMatrix,
    models: Sequence[ToyModel],
    datasets: Sequence[LocalDataset],
    lr: float,
    round_index: int = 0,
    consensus_tol: float = 1e-10,
    r_max: int = 100_000,
    record: bool = False,
) -> RoundResult:
    """One aggregation step: local gradients, consensus averaging, weight update.

    Every node descends along its own consensus estimate of the average
    gradient; if consensus fails to converge the round is aborted and the
    models are returned unchanged with ``converged`` False.
    """
    if len(models) != g.n or len(datasets) != g.n:
        raise ValueError("need one model and one dataset per node")
    grads = np.stack([m.gradient(ds.inputs, ds.labels) for m, ds in zip(models, datasets)])
    bundle = GradientBundle(grads, round_index)
    result = run_consensus(g, a, grads, tol=consensus_tol, r_max=r_max, record=record)
    if not result.converged:
        return RoundResult(list(models), bundle, result.transcript, converged=False)
    updated = [m.with_params(m.params - lr * result.x[i]) for i, m in enumerate(models)]
    return RoundResult(updated, bundle, result.transcript, converged=True)


@dataclass
class TrainingHistory:
    models: list
    bundles: list
    reference_models: list  # model at the start of each round (node 0's copy)
    losses: list


def train_decentralized(
    g: Graph,
    a: MixingMatrix,
    models: Sequence[ToyModel],
    datasets: Sequence[LocalDataset],
    rounds: int,
    lr: float,
    consensus_tol: float = 1e-10,
) -> TrainingHistory:
    """Run ``rounds`` decentralized aggregation steps, keeping per-round context."""
    models = list(models)
    bundles, refs, losses = [], [], []
    for t in range(rounds):
        refs.append(models[0])
        losses.append(union_loss(models[0], datasets))
        step = decentralized_round(g, a, models, datasets, lr, round_index=t, consensus_tol=consensus_tol)
        if not step.converged:
            raise RuntimeError(f"consensus did not converge in round {t}")
        models = step.models
        bundles.append(step.bundle)
    return TrainingHistory(models=models, bundles=bundles, reference_models=refs, losses=losses)


def train_centralized(
    model: ToyModel,
    datasets: Sequence[LocalDataset],
    rounds: int,
    lr: float,
) -> tuple[ToyModel, list[np.ndarray]]:
    """Reference loop with an exact server-side average; same batches, same order."""
    trajectory = [model.params]
    for _ in range(rounds):
        grads = np.stack([model.gradient(ds.inputs, ds.labels) for ds in datasets])
        model = model.with_params(model.params - lr * grads.mean(axis=0))
        trajectory.append(model.params)
    return model, trajectory


def union_loss(model: ToyModel, datasets: Sequence[LocalDataset]) -> float:
    """Mean loss over the union of all node datasets."""
    inputs = np.concatenate([ds.inputs for ds in datasets])
    labels = np.concatenate([ds.labels for ds in datasets])
    return model.loss(inputs, labels)
