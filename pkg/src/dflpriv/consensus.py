"""Linear-iteration average consensus: mixing matrices, transcripts, adversary view."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .graphs import Graph, is_connected

__all__ = [
    "MixingMatrix",
    "ConditionReport",
    "ConsensusResult",
    "Transcript",
    "AdversaryView",
    "HiddenMessageError",
    "metropolis_weights",
    "uniform_complete_weights",
    "verify_conditions",
    "spectral_radius_disagreement",
    "run_consensus",
    "adversary_view",
    "transcript_lines",
    "mixing_matrix_text",
]


class HiddenMessageError(RuntimeError):
    """An attack asked the adversary view for a message between honest nodes."""


@dataclass(frozen=True)
class MixingMatrix:
    """Dense n-by-n linear transformation applied once per consensus round."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"mixing matrix must be square, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def metropolis_weights(g: Graph) -> MixingMatrix:
    """Metropolis-Hastings weights: A[i,j] = 1/(1 + max(deg i, deg j)) on edges.

    Symmetric and doubly stochastic with strictly positive self-weights, so
    all three averaging conditions hold on any connected graph.
    """
    if not is_connected(g):
        raise ValueError("Metropolis weights require a connected graph")
    a = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w = 1.0 / (1.0 + max(g.degrees[i], g.degrees[j]))
        a[i, j] = w
        a[j, i] = w
    np.fill_diagonal(a, 1.0 - a.sum(axis=1))
    return MixingMatrix(a)


def uniform_complete_weights(n: int) -> MixingMatrix:
    """A = ones/n, the one-round averager for the complete graph."""
    if n < 1:
        raise ValueError("need at least one node")
    return MixingMatrix(np.full((n, n), 1.0 / n))


def spectral_radius_disagreement(a: MixingMatrix, iters: int = 200, rel_tol: float = 1e-10) -> float:
    """Spectral radius of A - ones/n estimated by power iteration.

    Runs a fixed-seed power iteration for at most ``iters`` steps, stopping
    early when the norm-growth estimate changes by less than ``rel_tol``.
    """
    n = a.n
    b = a.entries - 1.0 / n
    rng = np.random.default_rng(0xC0FFEE)
    v = rng.normal(size=n)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iters):
        w = b @ v
        norm = float(np.linalg.norm(w))
        if norm < 1e-300:
            return 0.0
        if abs(norm - estimate) <= rel_tol * max(norm, 1e-30):
            return norm
        estimate = norm
        v = w / norm
    return estimate


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the three averaging conditions on a mixing matrix."""

    row_ok: bool
    col_ok: bool
    radius: float
    contraction_ok: bool
    sparsity_ok: bool | None = None

    @property
    def all_ok(self) -> bool:
        checks = [self.row_ok, self.col_ok, self.contraction_ok]
        if self.sparsity_ok is not None:
            checks.append(self.sparsity_ok)
        return all(checks)


def verify_conditions(a: MixingMatrix, tol: float = 1e-9, graph: Graph | None = None) -> ConditionReport:
    """Check column stochasticity, row stochasticity, and contraction.

    The contraction check requires the disagreement-space spectral radius to
    sit below 1 - tol. When ``graph`` is given, off-graph entries are also
    checked against zero (sparsity).
    """
    entries = a.entries
    row_ok = bool(np.all(np.abs(entries.sum(axis=1) - 1.0) <= tol))
    col_ok = bool(np.all(np.abs(entries.sum(axis=0) - 1.0) <= tol))
    radius = spectral_radius_disagreement(a)
    contraction_ok = radius < 1.0 - tol
    sparsity_ok = None
    if graph is not None:
        if graph.n != a.n:
            raise ValueError("graph size does not match matrix size")
        mask = np.zeros((a.n, a.n), dtype=bool)
        for i, j in graph.edges:
            mask[i, j] = mask[j, i] = True
        np.fill_diagonal(mask, True)
        sparsity_ok = bool(np.all(np.abs(entries[~mask]) <= tol))
    return ConditionReport(row_ok, col_ok, radius, contraction_ok, sparsity_ok)


class Transcript:
    """Every message sent during recorded rounds of a consensus run.

    A sender broadcasts the same state to all its neighbors, so round r is
    stored as one state snapshot x^(r); ``message(r, i, j)`` materializes
    the value node i sent to neighbor j in round r.
    """

    def __init__(self, graph: Graph, states: list[np.ndarray]):
        self.graph = graph
        self._states = states

    @property
    def rounds(self) -> int:
        return len(self._states)

    def state(self, r: int) -> np.ndarray:
        return self._states[r]

    def message(self, r: int, sender: int, receiver: int) -> np.ndarray:
        if not 0 <= r < self.rounds:
            raise ValueError(f"round {r} outside recorded range 0..{self.rounds - 1}")
        if not self.graph.has_edge(sender, receiver):
            raise ValueError(f"no edge between {sender} and {receiver}")
        return self._states[r][sender]

    def messages_in_round(self, r: int) -> Iterator[tuple[int, int, np.ndarray]]:
        state = self._states[r]
        for i, j in sorted(self.graph.edges):
            yield i, j, state[i]
            yield j, i, state[j]

    def message_count(self, r: int) -> int:
        if not 0 <= r < self.rounds:
            raise ValueError(f"round {r} outside recorded range 0..{self.rounds - 1}")
        return 2 * len(self.graph.edges)


@dataclass
class ConsensusResult:
    x: np.ndarray
    rounds: int
    converged: bool
    transcript: Transcript | None


def run_consensus(
    g: Graph,
    a: MixingMatrix,
    x0,
    tol: float = 1e-8,
    r_max: int = 100_000,
    record: bool = False,
    stop_on: str = "true_mean",
) -> ConsensusResult:
    """Iterate x <- A x until every node is within tol of the average.

    ``stop_on`` selects the stopping rule: "true_mean" compares each node
    against the exact initial average (available in simulation), while
    "successive" uses the max change between consecutive rounds. States are
    d-dimensional row vectors, updated coordinate-wise.
    """
    x = np.array(x0, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ValueError(f"x0 must have one row per node, got shape {x.shape}")
    if a.n != g.n:
        raise ValueError("mixing matrix size does not match graph")
    if stop_on not in ("true_mean", "successive"):
        raise ValueError(f"unknown stopping rule {stop_on!r}")

    target = x.mean(axis=0)
    states: list[np.ndarray] = []

    def settled(current, previous) -> bool:
        if stop_on == "true_mean":
            return float(np.max(np.abs(current - target))) <= tol
        return previous is not None and float(np.max(np.abs(current - previous))) <= tol

    rounds = 0
    prev = None
    while not settled(x, prev) and rounds < r_max:
        if record:
            states.append(x.copy())
        prev = x
        x = a.entries @ x
        rounds += 1
    converged = settled(x, prev)

    transcript = Transcript(g, states) if record else None
    return ConsensusResult(x=x[:, 0] if squeeze else x, rounds=rounds, converged=converged, transcript=transcript)


class AdversaryView:
    """What the colluding nodes jointly observe during one consensus run.

    Holds the corrupt nodes' own inputs, the protocol output, and exactly
    the transcript messages with a corrupt endpoint. Asking for a message
    between two honest nodes raises HiddenMessageError; every successful
    access is logged in ``accessed`` so attacks can be audited.
    """

    def __init__(self, corrupt: frozenset, corrupt_inputs: dict, output, transcript: Transcript | None):
        self.corrupt = corrupt
        self.corrupt_inputs = corrupt_inputs
        self.output = np.asarray(output, dtype=float)
        self._transcript = transcript
        self.accessed: set = set()

    @property
    def rounds(self) -> int:
        return self._transcript.rounds if self._transcript is not None else 0

    @property
    def has_transcript(self) -> bool:
        return self._transcript is not None

    def message(self, r: int, sender: int, receiver: int) -> np.ndarray:
        if sender not in self.corrupt and receiver not in self.corrupt:
            raise HiddenMessageError(
                f"message {sender}->{receiver} has no corrupt endpoint and is invisible"
            )
        value = self._transcript.message(r, sender, receiver)
        self.accessed.add((r, sender, receiver))
        return value


def adversary_view(
    transcript: Transcript | None,
    g: Graph,
    corrupt: Iterable[int],
    inputs_corrupt: dict,
    output,
) -> AdversaryView:
    """Filter a run down to the adversary's observation set."""
    corrupt = frozenset(corrupt)
    for v in corrupt:
        if not 0 <= v < g.n:
            raise ValueError(f"corrupt node {v} outside 0..{g.n - 1}")
    missing = corrupt - set(inputs_corrupt)
    if missing:
        raise ValueError(f"inputs missing for corrupt nodes {sorted(missing)}")
    return AdversaryView(corrupt, dict(inputs_corrupt), output, transcript)


def transcript_lines(t: Transcript) -> Iterator[str]:
    """Debug serialization: one 'r i j v1 v2 ...' line per directed message."""
    for r in range(t.rounds):
        for i, j, value in t.messages_in_round(r):
            vals = " ".join(repr(float(v)) for v in np.atleast_1d(value))
            yield f"{r} {i} {j} {vals}"


def mixing_matrix_text(a: MixingMatrix) -> str:
    """Dense decimal rows, one line per matrix row."""
    return "\n".join(" ".join(repr(float(v)) for v in row) for row in a.entries) + "\n"
