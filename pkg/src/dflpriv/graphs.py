"""Undirected simple graphs: representation, random generators, decomposition, text I/O."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .seeding import derive_seed

__all__ = [
    "Graph",
    "GenerationError",
    "EdgeListParseError",
    "generate_poisson",
    "generate_power_law",
    "generate_connected",
    "connected_components",
    "induced_subgraph",
    "is_connected",
    "degree_sequence",
    "read_edge_list",
    "write_edge_list",
]


class GenerationError(RuntimeError):
    """A random-graph generator could not realize the requested parameters."""


class EdgeListParseError(ValueError):
    """Malformed edge-list text; carries the 1-based offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph on node ids 0..n-1.

    Edges are stored as a frozenset of (i, j) pairs with i < j, so there can
    be no self-loops or duplicates by construction; adjacency lists are
    derived lazily and cached.
    """

    n: int
    edges: frozenset

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        for edge in self.edges:
            i, j = edge
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad edge {edge!r} for n={self.n}")

    @staticmethod
    def from_edges(n: int, pairs: Iterable[tuple[int, int]]) -> "Graph":
        """Build a graph, normalizing each pair to (min, max)."""
        norm = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            norm.add((a, b) if a < b else (b, a))
        return Graph(n, frozenset(norm))

    @cached_property
    def adjacency(self) -> tuple:
        """Per-node tuple of sorted neighbor ids."""
        neigh: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            neigh[i].append(j)
            neigh[j].append(i)
        return tuple(tuple(sorted(ns)) for ns in neigh)

    @cached_property
    def degrees(self) -> tuple:
        return tuple(len(ns) for ns in self.adjacency)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> tuple:
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return self.degrees[i]

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return ((i, j) if i < j else (j, i)) in self.edges


def _check_gnm(n: int, m: int) -> int:
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got n={n}")
    total = n * (n - 1) // 2
    if not 0 <= m <= total:
        raise ValueError(f"edge count m={m} outside [0, {total}] for n={n}")
    return total


def _pair_starts(n: int) -> np.ndarray:
    # start rank of row i in the lexicographic list of pairs (i, j>i)
    i = np.arange(n, dtype=np.int64)
    return i * (2 * n - i - 1) // 2


def _unrank_pairs(ranks: np.ndarray, n: int) -> list[tuple[int, int]]:
    starts = _pair_starts(n)
    rows = np.searchsorted(starts, ranks, side="right") - 1
    cols = ranks - starts[rows] + rows + 1
    return list(zip(rows.tolist(), cols.tolist()))


def generate_poisson(n: int, m: int, seed: int) -> Graph:
    """Uniform random simple graph with exactly n nodes and m edges.

    Sampling m distinct pair ranks without replacement makes every m-edge
    graph equally likely; node degrees are then binomial with mean 2m/n,
    i.e. Poisson-like for sparse graphs.
    """
    total = _check_gnm(n, m)
    rng = np.random.default_rng(seed)
    ranks = rng.choice(total, size=m, replace=False)
    return Graph(n, frozenset(_unrank_pairs(np.sort(ranks), n)))


def _power_law_degree_seq(n: int, m: int, gamma: float, rng) -> np.ndarray:
    """Degrees ~ d**-gamma on 1..n-1, rescaled so the total is exactly 2m."""
    support = np.arange(1, n, dtype=np.int64)
    weights = support.astype(float) ** -gamma
    raw = rng.choice(support, size=n, p=weights / weights.sum()).astype(float)
    target = 2 * m
    if target == 0:
        return np.zeros(n, dtype=np.int64)
    scaled = raw * (target / raw.sum())
    degs = np.minimum(np.floor(scaled).astype(np.int64), n - 1)
    # hand out the rounding deficit by largest fractional part, capped at n-1
    order = np.argsort(-(scaled - np.floor(scaled)), kind="stable")
    deficit = target - int(degs.sum())
    pos = 0
    while deficit > 0:
        if pos > 2 * n * n:
            raise GenerationError("degree sequence infeasible after capping at n-1")
        node = order[pos % n]
        if degs[node] < n - 1:
            degs[node] += 1
            deficit -= 1
        pos += 1
    return degs


def _erased_configuration(degrees: np.ndarray, rng) -> set:
    """Pair stubs uniformly; drop self-loops and duplicate edges."""
    stubs = np.repeat(np.arange(len(degrees)), degrees)
    rng.shuffle(stubs)
    edges: set = set()
    for a, b in stubs.reshape(-1, 2).tolist():
        if a != b:
            edges.add((a, b) if a < b else (b, a))
    return edges


def _fix_edge_count(edges: set, m: int, n: int, rng, prescribed: np.ndarray) -> set:
    """Add or remove random edges until exactly m remain.

    Additions are drawn with probability proportional to the endpoints'
    remaining degree deficits against the prescribed sequence, so edges lost
    to multi-edge erasure are restored at the hubs that lost them; once no
    deficit remains the draw falls back to uniform over missing pairs.
    """
    while len(edges) > m:
        ordered = sorted(edges)
        edges.remove(ordered[int(rng.integers(len(ordered)))])
    if len(edges) >= m:
        return edges
    realized = np.zeros(n, dtype=np.int64)
    for i, j in edges:
        realized[i] += 1
        realized[j] += 1
    missing = np.array(sorted(set(_unrank_pairs(np.arange(n * (n - 1) // 2), n)) - edges))
    alive = np.ones(len(missing), dtype=bool)
    for _ in range(m - len(edges)):
        deficit = np.maximum(prescribed - realized, 0).astype(float) + 0.01
        weights = deficit[missing[:, 0]] * deficit[missing[:, 1]] * alive
        idx = int(rng.choice(len(missing), p=weights / weights.sum()))
        i, j = int(missing[idx, 0]), int(missing[idx, 1])
        edges.add((i, j))
        alive[idx] = False
        realized[i] += 1
        realized[j] += 1
    return edges


def generate_power_law(n: int, m: int, gamma: float, seed: int) -> Graph:
    """Simple graph with a heavy-tailed degree sequence and exactly m edges.

    Degrees are drawn from the truncated power law P(d) ~ d**-gamma on
    1..n-1 and rescaled so the total degree is 2m, then realized with an
    erased configuration model (self-loops and multi-edges dropped);
    uniformly random missing edges are added to land on exactly m.
    """
    _check_gnm(n, m)
    if gamma <= 1:
        raise ValueError(f"power-law exponent must exceed 1, got gamma={gamma}")
    rng = np.random.default_rng(seed)
    degrees = _power_law_degree_seq(n, m, gamma, rng)
    edges = _fix_edge_count(_erased_configuration(degrees, rng), m, n, rng, degrees)
    return Graph(n, frozenset(edges))


def generate_connected(make_graph: Callable[[int], Graph], seed: int, attempts: int = 100) -> Graph:
    """Resample ``make_graph(derived seed)`` until the result is connected."""
    for trial in range(attempts):
        g = make_graph(derive_seed(seed, "connected", trial))
        if is_connected(g):
            return g
    raise GenerationError(f"no connected graph within {attempts} attempts")


def connected_components(g: Graph) -> list[frozenset]:
    """Maximal connected node sets, ordered by smallest member id."""
    seen = [False] * g.n
    components = []
    for start in range(g.n):
        if seen[start]:
            continue
        seen[start] = True
        queue = deque([start])
        comp = [start]
        while queue:
            u = queue.popleft()
            for v in g.adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        components.append(frozenset(comp))
    return components


def induced_subgraph(g: Graph, keep: Iterable[int]) -> tuple[Graph, dict]:
    """Subgraph on ``keep`` with ids remapped to 0..|keep|-1.

    Returns (subgraph, old_id -> new_id map); the map enumerates ``keep``
    in ascending old-id order.
    """
    keep_sorted = sorted(set(keep))
    for v in keep_sorted:
        if not 0 <= v < g.n:
            raise ValueError(f"node {v} outside 0..{g.n - 1}")
    mapping = {old: new for new, old in enumerate(keep_sorted)}
    edges = frozenset(
        (mapping[i], mapping[j]) for i, j in g.edges if i in mapping and j in mapping
    )
    return Graph(len(keep_sorted), edges), mapping


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    return len(connected_components(g)[0]) == g.n


def degree_sequence(g: Graph) -> list[int]:
    return list(g.degrees)


def write_edge_list(g: Graph) -> str:
    """Edge-list text: '# n=<count>' header, then 'i j' lines (i < j), sorted."""
    lines = [f"# n={g.n}"]
    lines.extend(sorted(f"{i} {j}" for i, j in g.edges))
    return "\n".join(lines) + "\n"


def read_edge_list(text: str) -> Graph:
    """Parse edge-list text produced by :func:`write_edge_list`.

    The '# n=' header is optional; without it the node count is one past the
    largest id seen. Malformed lines raise EdgeListParseError with the line
    number.
    """
    declared_n = None
    edges: dict[tuple[int, int], int] = {}
    max_node = -1
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if line_no == 1 and body.startswith("n="):
                try:
                    declared_n = int(body[2:])
                except ValueError:
                    raise EdgeListParseError(line_no, f"bad node count in {raw!r}") from None
                if declared_n < 0:
                    raise EdgeListParseError(line_no, "node count must be non-negative")
                continue
            raise EdgeListParseError(line_no, f"unexpected comment {raw!r}")
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListParseError(line_no, f"expected 'i j', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(line_no, "node ids must be integers") from None
        if i < 0 or j < 0:
            raise EdgeListParseError(line_no, "node ids must be non-negative")
        if i == j:
            raise EdgeListParseError(line_no, f"self-loop at node {i}")
        if i > j:
            raise EdgeListParseError(line_no, "edges must be written 'i j' with i < j")
        if (i, j) in edges:
            raise EdgeListParseError(line_no, f"duplicate edge {i} {j}")
        if declared_n is not None and j >= declared_n:
            raise EdgeListParseError(line_no, f"node {j} outside declared n={declared_n}")
        edges[(i, j)] = line_no
        max_node = max(max_node, j)
    n = declared_n if declared_n is not None else max_node + 1
    return Graph(max(n, 0), frozenset(edges))
