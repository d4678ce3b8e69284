"""Passive colluding adversary: corrupt-node selection and honest-subgraph decomposition."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .graphs import Graph, connected_components, generate_connected, induced_subgraph
from .seeding import derive_seed

__all__ = [
    "CorruptionStrategy",
    "HonestPartition",
    "ProfileRow",
    "select_corrupt",
    "honest_partition",
    "component_size_profile",
]


@dataclass(frozen=True)
class CorruptionStrategy:
    """How the adversary picks nodes to corrupt.

    kind is one of "degree_targeted", "uniform_random", "explicit". The
    amount is given either as an absolute count or as a fraction of n
    (rounded down); explicit strategies carry the node set instead.
    ``adaptive`` makes degree targeting recompute degrees after each removal
    rather than ranking once on the original graph.
    """

    kind: str
    count: int | None = None
    fraction: float | None = None
    nodes: frozenset | None = None
    adaptive: bool = False

    def __post_init__(self):
        if self.kind not in ("degree_targeted", "uniform_random", "explicit"):
            raise ValueError(f"unknown corruption strategy {self.kind!r}")
        if self.kind == "explicit":
            if self.nodes is None:
                raise ValueError("explicit strategy requires a node set")
        else:
            given = (self.count is not None) + (self.fraction is not None)
            if given != 1:
                raise ValueError("specify exactly one of count or fraction")
            if self.fraction is not None and not 0.0 <= self.fraction <= 1.0:
                raise ValueError(f"fraction must lie in [0, 1], got {self.fraction}")
            if self.count is not None and self.count < 0:
                raise ValueError("count must be non-negative")

    @classmethod
    def degree_targeted(cls, count=None, fraction=None, adaptive=False):
        return cls("degree_targeted", count=count, fraction=fraction, adaptive=adaptive)

    @classmethod
    def uniform_random(cls, count=None, fraction=None):
        return cls("uniform_random", count=count, fraction=fraction)

    @classmethod
    def explicit(cls, nodes: Iterable[int]):
        return cls("explicit", nodes=frozenset(nodes))

    def resolve_count(self, n: int) -> int:
        if self.kind == "explicit":
            return len(self.nodes)
        if self.count is not None:
            if self.count > n:
                raise ValueError(f"count {self.count} exceeds node count {n}")
            return self.count
        return int(self.fraction * n)

    def with_fraction(self, fraction: float) -> "CorruptionStrategy":
        if self.kind == "explicit":
            raise ValueError("cannot sweep fractions with an explicit strategy")
        return dataclasses.replace(self, count=None, fraction=fraction)


def select_corrupt(g: Graph, strategy: CorruptionStrategy, seed: int = 0) -> frozenset:
    """Choose the corrupt node set for ``strategy`` on ``g``.

    Degree targeting is deterministic (ties broken by ascending id, seed
    unused); uniform selection draws a c-subset from the seed.
    """
    c = strategy.resolve_count(g.n)
    if strategy.kind == "explicit":
        for v in strategy.nodes:
            if not 0 <= v < g.n:
                raise ValueError(f"explicit corrupt node {v} outside 0..{g.n - 1}")
        return strategy.nodes
    if strategy.kind == "degree_targeted":
        if not strategy.adaptive:
            order = sorted(range(g.n), key=lambda v: (-g.degrees[v], v))
            return frozenset(order[:c])
        chosen: list[int] = []
        degs = list(g.degrees)
        alive = set(range(g.n))
        for _ in range(c):
            pick = min(alive, key=lambda v: (-degs[v], v))
            alive.remove(pick)
            chosen.append(pick)
            for u in g.adjacency[pick]:
                if u in alive:
                    degs[u] -= 1
        return frozenset(chosen)
    rng = np.random.default_rng(seed)
    return frozenset(rng.choice(g.n, size=c, replace=False).tolist())


@dataclass(frozen=True)
class HonestPartition:
    """Corrupt set plus the components of the corrupt-removed honest subgraph."""

    corrupt: frozenset
    components: tuple

    @property
    def sizes(self) -> tuple:
        return tuple(len(c) for c in self.components)

    @property
    def count(self) -> int:
        return len(self.components)

    @property
    def singleton_count(self) -> int:
        return sum(1 for c in self.components if len(c) == 1)

    @property
    def honest_nodes(self) -> frozenset:
        return frozenset().union(*self.components) if self.components else frozenset()

    @cached_property
    def component_of(self) -> dict:
        """node id -> index into ``components`` (honest nodes only)."""
        lookup = {}
        for idx, comp in enumerate(self.components):
            for v in comp:
                lookup[v] = idx
        return lookup


def honest_partition(g: Graph, corrupt: Iterable[int]) -> HonestPartition:
    """Decompose the honest subgraph of ``g`` into maximal connected components.

    Components are reported in original node ids, ordered by smallest member.
    """
    corrupt = frozenset(corrupt)
    for v in corrupt:
        if not 0 <= v < g.n:
            raise ValueError(f"corrupt node {v} outside 0..{g.n - 1}")
    honest = sorted(set(range(g.n)) - corrupt)
    sub, mapping = induced_subgraph(g, honest)
    back = {new: old for old, new in mapping.items()}
    comps = [frozenset(back[v] for v in comp) for comp in connected_components(sub)]
    comps.sort(key=min)
    return HonestPartition(corrupt=corrupt, components=tuple(comps))


@dataclass(frozen=True)
class ProfileRow:
    fraction: float
    mean_largest: float
    mean_components: float
    mean_singletons: float


def component_size_profile(
    make_graph: Callable[[int], Graph],
    strategy: CorruptionStrategy,
    fractions: Sequence[float],
    runs: int,
    master_seed: int,
    connected: bool = True,
) -> list[ProfileRow]:
    """Monte Carlo sweep of honest-component statistics over corrupt fractions.

    For each fraction, ``runs`` fresh graphs are drawn (resampled until
    connected when ``connected``), the strategy is applied at that fraction,
    and the mean largest component size, component count, and singleton
    count are reported. Fully deterministic given the master seed.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    rows = []
    for f_idx, fraction in enumerate(fractions):
        strat = strategy.with_fraction(fraction)
        largest = np.empty(runs)
        counts = np.empty(runs)
        singles = np.empty(runs)
        for run in range(runs):
            seed = derive_seed(master_seed, "profile", f_idx, run)
            if connected:
                g = generate_connected(make_graph, seed)
            else:
                g = make_graph(seed)
            corrupt = select_corrupt(g, strat, derive_seed(seed, "select"))
            part = honest_partition(g, corrupt)
            largest[run] = max(part.sizes, default=0)
            counts[run] = part.count
            singles[run] = part.singleton_count
        rows.append(
            ProfileRow(
                fraction=fraction,
                mean_largest=float(largest.mean()),
                mean_components=float(counts.mean()),
                mean_singletons=float(singles.mean()),
            )
        )
    return rows
