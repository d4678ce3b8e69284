"""Attacks on the consensus transcript and on revealed component gradient sums."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import rankdata

from .adversary import HonestPartition
from .consensus import AdversaryView, MixingMatrix
from .fl import ToyModel
from .graphs import Graph
from .seeding import derive_seed

__all__ = [
    "ReconstructionError",
    "AttackFailedError",
    "AttackOutcome",
    "InversionConfig",
    "InversionResult",
    "reconstruct_partial_sums",
    "gradient_inversion",
    "ssim",
    "matched_ssim",
    "membership_score",
    "membership_attack_eval",
    "roc_auc",
    "best_balanced_accuracy",
    "pgm_text",
    "write_pgm",
    "read_pgm_text",
]


class ReconstructionError(RuntimeError):
    """The adversary view lacks the transcript rounds needed to reconstruct."""


class AttackFailedError(RuntimeError):
    """Every restart of an iterative attack diverged."""


@dataclass(frozen=True)
class AttackOutcome:
    """Result container shared by the three attacks."""

    kind: str
    component_sizes: tuple
    success_rate: float | None = None
    auc: float | None = None
    ssim_values: tuple | None = None
    reconstruction_error: float | None = None


def reconstruct_partial_sums(
    view: AdversaryView,
    g: Graph,
    a: MixingMatrix,
    partition: HonestPartition,
) -> list[np.ndarray]:
    """Recover each honest component's initial input sum from the adversary view.

    Per round, the change of a component's state mass is exactly the flow
    across its cut to corrupt neighbors, and every state appearing in that
    flow travels over an edge with a corrupt endpoint, i.e. is visible.
    Summing the per-round flows and anchoring at the converged output
    (component mass -> size * average) yields the round-0 sum. Only
    ``view.message`` is used, so honest-to-honest traffic is never read.
    """
    if not view.has_transcript:
        raise ReconstructionError("no transcript was recorded for this run")
    m = a.entries
    corrupt = sorted(view.corrupt)
    output = np.atleast_1d(view.output)

    sums = []
    for comp in partition.components:
        # outflow: component boundary nodes weighted by their corrupt column mass
        outflow = []  # (node, coefficient, corrupt neighbor to read the message from)
        for j in sorted(comp):
            corrupt_neighbors = [i for i in g.adjacency[j] if i in view.corrupt]
            if not corrupt_neighbors:
                continue
            coeff = float(sum(m[i, j] for i in corrupt_neighbors))
            if coeff != 0.0:
                outflow.append((j, coeff, corrupt_neighbors[0]))
        # inflow: corrupt nodes weighted by their column mass into the component
        inflow = []
        for j in corrupt:
            comp_neighbors = [i for i in g.adjacency[j] if i in comp]
            if not comp_neighbors:
                continue
            coeff = float(sum(m[i, j] for i in comp_neighbors))
            if coeff != 0.0:
                inflow.append((j, coeff, comp_neighbors[0]))

        drift = np.zeros_like(output)
        for r in range(view.rounds):
            for j, coeff, reader in outflow:
                drift -= coeff * np.atleast_1d(view.message(r, j, reader))
            for j, coeff, reader in inflow:
                drift += coeff * np.atleast_1d(view.message(r, j, reader))
        sums.append(len(comp) * output - drift)
    return sums


@dataclass(frozen=True)
class InversionConfig:
    iters: int = 2000
    lr: float = 0.1
    restarts: int = 5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class InversionResult:
    inputs: np.ndarray  # (m_k, d), clamped to [0, 1]
    labels: np.ndarray  # the given labels, or recovered soft labels (m_k, classes)
    loss_curve: list
    loss: float


def _adam_step(state, grad, cfg: InversionConfig):
    m, v, t = state
    t += 1
    m = cfg.beta1 * m + (1 - cfg.beta1) * grad
    v = cfg.beta2 * v + (1 - cfg.beta2) * grad**2
    m_hat = m / (1 - cfg.beta1**t)
    v_hat = v / (1 - cfg.beta2**t)
    return (m, v, t), cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)


def gradient_inversion(
    target: np.ndarray,
    model: ToyModel,
    m_k: int,
    labels=None,
    labels_known: bool = True,
    config: InversionConfig = InversionConfig(),
) -> InversionResult:
    """Fit m_k dummy inputs whose summed gradient matches ``target``.

    Minimizes || sum_j grad(x_j, y_j; w) - target ||^2 with Adam updates and
    a [0,1] box projection on the inputs; when labels are unknown they are
    optimized as softmax logits alongside the inputs. The best of
    ``config.restarts`` runs (by final loss) is returned. A restart whose
    loss turns non-finite is abandoned; if all restarts do, the attack
    fails.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (model.param_count,):
        raise ValueError(f"target has shape {target.shape}, expected ({model.param_count},)")
    if m_k < 1:
        raise ValueError("component size must be at least 1")
    if labels_known and labels is None:
        raise ValueError("labels must be supplied when labels_known is true")
    is_mlp = hasattr(model, "classes")
    d = model.in_dim if is_mlp else model.param_count

    best: InversionResult | None = None
    for restart in range(config.restarts):
        rng = np.random.default_rng(derive_seed(config.seed, "inversion", restart))
        x = rng.uniform(0.0, 1.0, size=(m_k, d))
        if labels_known:
            lab = np.asarray(labels)
            logits = None
        elif is_mlp:
            logits = rng.normal(0.0, 0.1, size=(m_k, model.classes))
        else:
            lab = rng.normal(0.0, 1.0, size=m_k)
            logits = None

        state_x = (np.zeros_like(x), np.zeros_like(x), 0)
        state_l = None if labels_known else (np.zeros_like(logits if is_mlp else lab),) * 2 + (0,)
        curve = []
        diverged = False
        for _ in range(config.iters):
            if not labels_known and is_mlp:
                lab = _softmax_rows(logits)
            grad_sum = model.gradient(x, lab, mean=False)
            residual = grad_sum - target
            loss = float(residual @ residual)
            if not np.isfinite(loss):
                diverged = True
                break
            curve.append(loss)
            if labels_known:
                dx = 2.0 * model.match_input_gradient(x, lab, residual)
            else:
                dx, dlab = model.match_input_gradient(x, lab, residual, want_label_grad=True)
                dx = 2.0 * dx
                dlab = 2.0 * dlab
                if is_mlp:
                    dlogits = lab * dlab - lab * np.sum(lab * dlab, axis=1, keepdims=True)
                    state_l, step_l = _adam_step(state_l, dlogits, config)
                    logits = logits - step_l
                else:
                    state_l, step_l = _adam_step(state_l, dlab, config)
                    lab = lab - step_l
            state_x, step_x = _adam_step(state_x, dx, config)
            x = np.clip(x - step_x, 0.0, 1.0)

        if diverged:
            continue
        if not labels_known and is_mlp:
            lab = _softmax_rows(logits)
        residual = model.gradient(x, lab, mean=False) - target
        final_loss = float(residual @ residual)
        if not np.isfinite(final_loss):
            continue
        if best is None or final_loss < best.loss:
            best = InversionResult(inputs=x, labels=np.asarray(lab), loss_curve=curve, loss=final_loss)
    if best is None:
        raise AttackFailedError(f"all {config.restarts} restarts produced non-finite losses")
    return best


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def ssim(a, b) -> float:
    """Global structural similarity of two equal-shape images with values in [0,1].

    Single-window SSIM with the standard stabilizers C1 = 0.01^2 and
    C2 = 0.03^2 on unit dynamic range; symmetric in its arguments.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    for img in (a, b):
        if img.size == 0 or img.min() < -1e-9 or img.max() > 1 + 1e-9:
            raise ValueError("image values must lie in [0, 1]")
    c1, c2 = 0.01**2, 0.03**2
    mu_a, mu_b = a.mean(), b.mean()
    var_a, var_b = a.var(), b.var()
    cov = ((a - mu_a) * (b - mu_b)).mean()
    return float(
        ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
        / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
    )


def matched_ssim(originals: np.ndarray, reconstructions: np.ndarray, labels=None) -> list[float]:
    """Per-original SSIM under the best pairing with the reconstructions.

    Inversion recovers a set of inputs, so slots are matched to originals by
    maximum-total-SSIM assignment; when labels are given, only same-label
    slots may pair up.
    """
    originals = np.atleast_2d(originals)
    reconstructions = np.atleast_2d(reconstructions)
    k = originals.shape[0]
    if reconstructions.shape[0] != k:
        raise ValueError("need one reconstruction per original")
    scores = np.array([[ssim(o, r) for r in reconstructions] for o in originals])
    if labels is not None:
        labels = np.asarray(labels)
        forbidden = labels[:, None] != labels[None, :]
        scores = np.where(forbidden, -1e9, scores)
    rows, cols = linear_sum_assignment(-scores)
    paired = np.empty(k)
    paired[rows] = scores[rows, cols]
    return [float(v) for v in paired]


def membership_score(candidate_grad, component_sum) -> float:
    """Cosine similarity between a candidate's gradient and a component's sum."""
    g = np.asarray(candidate_grad, dtype=float)
    s = np.asarray(component_sum, dtype=float)
    if g.shape != s.shape:
        raise ValueError(f"gradient shapes differ: {g.shape} vs {s.shape}")
    ng, ns = np.linalg.norm(g), np.linalg.norm(s)
    if ng == 0.0 or ns == 0.0:
        raise ValueError("cosine score undefined for a zero vector")
    return float(np.dot(g, s) / (ng * ns))


def roc_auc(positive_scores, negative_scores) -> float:
    """Rank-based ROC AUC (ties credited half)."""
    pos = np.asarray(positive_scores, dtype=float)
    neg = np.asarray(negative_scores, dtype=float)
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[: len(pos)].sum() - len(pos) * (len(pos) + 1) / 2
    return float(u / (len(pos) * len(neg)))


def best_balanced_accuracy(positive_scores, negative_scores) -> float:
    """Max over thresholds of (TPR + TNR) / 2, scoring positives as higher."""
    pos = np.asarray(positive_scores, dtype=float)
    neg = np.asarray(negative_scores, dtype=float)
    best = 0.5  # degenerate all-one-class threshold
    for threshold in np.unique(np.concatenate([pos, neg])):
        tpr = np.mean(pos >= threshold)
        tnr = np.mean(neg < threshold)
        best = max(best, (tpr + tnr) / 2)
    return float(best)


def membership_attack_eval(
    partition: HonestPartition,
    bundles: Sequence,
    models: Sequence[ToyModel],
    members: Sequence[tuple],
    nonmembers: Sequence[tuple],
    mode: str = "average",
) -> AttackOutcome:
    """Score membership candidates against their target components' gradient sums.

    Candidates are (input, label, component_index) triples; each is scored
    by the cosine between its own gradient and the observed component sum,
    per round, then averaged over rounds ("average" mode) or taken from the
    first round only ("single"). Success rate is the balanced accuracy at
    the best threshold; AUC is threshold-free.
    """
    if len(members) == 0 or len(nonmembers) == 0:
        raise ValueError("candidate sets must be non-empty")
    if len(members) != len(nonmembers):
        raise ValueError("candidate sets must be balanced")
    if len(bundles) != len(models):
        raise ValueError("need one model snapshot per gradient bundle")
    if mode not in ("average", "single"):
        raise ValueError(f"unknown scoring mode {mode!r}")
    use = [(bundles[0], models[0])] if mode == "single" else list(zip(bundles, models))

    def score(candidate) -> float:
        x, y, comp_idx = candidate
        rounds = []
        for bundle, model in use:
            comp_sum = bundle.component_sum(partition.components[comp_idx])
            grad = model.gradient(np.atleast_2d(x), np.atleast_1d(y), mean=True)
            rounds.append(membership_score(grad, comp_sum))
        return float(np.mean(rounds))

    member_scores = [score(c) for c in members]
    nonmember_scores = [score(c) for c in nonmembers]
    return AttackOutcome(
        kind="membership",
        component_sizes=partition.sizes,
        success_rate=best_balanced_accuracy(member_scores, nonmember_scores),
        auc=roc_auc(member_scores, nonmember_scores),
    )


def pgm_text(image) -> str:
    """ASCII PGM (P2) encoding of a [0,1] grayscale image at 255 levels."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    if img.min() < -1e-9 or img.max() > 1 + 1e-9:
        raise ValueError("image values must lie in [0, 1]")
    levels = np.rint(np.clip(img, 0, 1) * 255).astype(int)
    rows = [" ".join(str(v) for v in row) for row in levels]
    return "\n".join(["P2", f"{img.shape[1]} {img.shape[0]}", "255", *rows]) + "\n"


def write_pgm(image, path) -> None:
    with open(path, "w") as fh:
        fh.write(pgm_text(image))


def read_pgm_text(text: str) -> np.ndarray:
    """Parse a P2 PGM back to a [0,1] float image."""
    tokens = [t for line in text.splitlines() for t in line.split() if not t.startswith("#")]
    if not tokens or tokens[0] != "P2":
        raise ValueError("not an ASCII PGM (P2) payload")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pixels = np.array([int(t) for t in tokens[4 : 4 + width * height]], dtype=float)
    if pixels.size != width * height:
        raise ValueError("pixel count does not match header")
    return pixels.reshape(height, width) / maxval
