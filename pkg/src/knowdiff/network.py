"""Multilayer graph over a shared set of agents.

Every layer is an undirected, loop-free graph with non-negative edge
strengths. All layers share one node registry; agent ids are handed out
monotonically and never reused.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParameter, UnknownAgent, UnknownLayer

DEFAULT_STRENGTH = 1.0

Edge = Tuple[int, int]


def ring_lattice_edges(n: int, k: int) -> List[Edge]:
    """Edges of the ring where each node links to its k nearest neighbours."""
    return [(u, (u + off) % n) for off in range(1, k // 2 + 1) for u in range(n)]


def generate_watts_strogatz(n: int, k: int, p: float, rng: np.random.Generator) -> List[Edge]:
    """Watts-Strogatz small-world edge list on nodes ``0..n-1``.

    Starts from the ring lattice and visits each lattice edge ``(u, u+off)``
    once, offset by offset; with probability ``p`` the far endpoint is moved to
    a uniformly drawn node that is neither ``u`` nor already adjacent to it.
    A node already linked to everyone keeps its edge. The edge count stays
    ``n*k/2`` for any ``p``.
    """
    if n < 3:
        raise InvalidParameter(f"n must be >= 3, got {n}")
    if k % 2 or k <= 0 or k >= n:
        raise InvalidParameter(f"k must be even with 0 < k < n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"p must lie in [0, 1], got {p}")

    adj: List[set] = [set() for _ in range(n)]
    for u, v in ring_lattice_edges(n, k):
        adj[u].add(v)
        adj[v].add(u)
    if p > 0.0:
        for off in range(1, k // 2 + 1):
            for u in range(n):
                v = (u + off) % n
                if rng.random() >= p:
                    continue
                if v not in adj[u] or len(adj[u]) >= n - 1:
                    continue
                w = int(rng.integers(n))
                while w == u or w in adj[u]:
                    w = int(rng.integers(n))
                adj[u].discard(v)
                adj[v].discard(u)
                adj[u].add(w)
                adj[w].add(u)
    return sorted((u, v) for u in range(n) for v in adj[u] if u < v)


@dataclass
class RemovalSummary:
    agent: int
    edges_deleted: List[int]


class MultilayerNetwork:
    """Layers of weighted undirected edges over one shared node registry."""

    def __init__(self, n_layers: int, nodes: Iterable[int] = ()) -> None:
        if n_layers < 1:
            raise InvalidParameter("a network needs at least one layer")
        self._adj: List[Dict[int, Dict[int, float]]] = [{} for _ in range(n_layers)]
        self._next_id = 0
        for i in nodes:
            self._register(int(i))
        # bumped on every structural change so cached topology can be refreshed
        self.version = 0

    # -- registry ---------------------------------------------------------

    def _register(self, i: int) -> None:
        if i in self._adj[0]:
            raise InvalidParameter(f"agent {i} already present")
        if i < self._next_id:
            raise InvalidParameter(f"agent id {i} was already issued")
        for layer in self._adj:
            layer[i] = {}
        self._next_id = i + 1

    @property
    def n_layers(self) -> int:
        return len(self._adj)

    @property
    def next_id(self) -> int:
        return self._next_id

    def agents(self) -> List[int]:
        return sorted(self._adj[0])

    def __len__(self) -> int:
        return len(self._adj[0])

    def __contains__(self, i: object) -> bool:
        return i in self._adj[0]

    def _check(self, i: Optional[int], j: int) -> Dict[int, Dict[int, float]]:
        if not 0 <= j < len(self._adj):
            raise UnknownLayer(f"layer {j} not in 0..{len(self._adj) - 1}")
        layer = self._adj[j]
        if i is not None and i not in layer:
            raise UnknownAgent(f"agent {i} is not in the network")
        return layer

    # -- edges ------------------------------------------------------------

    def add_edge(self, j: int, a: int, b: int, strength: float = DEFAULT_STRENGTH) -> None:
        layer = self._check(a, j)
        self._check(b, j)
        if a == b:
            raise InvalidParameter(f"self-loop on agent {a}")
        if strength < 0:
            raise InvalidParameter(f"edge strength must be >= 0, got {strength}")
        layer[a][b] = float(strength)
        layer[b][a] = float(strength)
        self.version += 1

    def set_strength(self, j: int, a: int, b: int, strength: float) -> None:
        layer = self._check(a, j)
        if b not in layer[a]:
            raise InvalidParameter(f"no edge {a}-{b} on layer {j}")
        self.add_edge(j, a, b, strength)

    def strength(self, j: int, a: int, b: int) -> float:
        return self._check(a, j)[a][b]

    def has_edge(self, j: int, a: int, b: int) -> bool:
        return b in self._check(a, j)[a]

    def edges(self, j: int) -> List[Tuple[int, int, float]]:
        layer = self._check(None, j)
        return sorted((a, b, f) for a, nbrs in layer.items() for b, f in nbrs.items() if a < b)

    def edge_count(self, j: int) -> int:
        layer = self._check(None, j)
        return sum(len(nbrs) for nbrs in layer.values()) // 2

    # -- queries ----------------------------------------------------------

    def neighborhood(self, i: int, j: int) -> set:
        return set(self._check(i, j)[i])

    def degree(self, i: int, j: int) -> int:
        return len(self._check(i, j)[i])

    def max_degree(self, j: int) -> int:
        layer = self._check(None, j)
        return max((len(nbrs) for nbrs in layer.values()), default=0)

    def clustering_coefficient(self, i: int, j: int) -> float:
        layer = self._check(i, j)
        nbrs = list(layer[i])
        d = len(nbrs)
        if d < 2:
            return 0.0
        links = sum(1 for x in range(d) for y in range(x + 1, d) if nbrs[y] in layer[nbrs[x]])
        return links / (d * (d - 1) / 2)

    def mean_clustering(self, j: int) -> float:
        ids = self.agents()
        if not ids:
            return 0.0
        return sum(self.clustering_coefficient(i, j) for i in ids) / len(ids)

    # -- mutation ---------------------------------------------------------

    def remove_agent(self, i: int) -> RemovalSummary:
        self._check(i, 0)
        deleted = []
        for layer in self._adj:
            nbrs = layer.pop(i)
            for b in nbrs:
                del layer[b][i]
            deleted.append(len(nbrs))
        self.version += 1
        return RemovalSummary(agent=i, edges_deleted=deleted)

    def add_agent(self, attach_count: int, rng: np.random.Generator,
                  strength: float = DEFAULT_STRENGTH) -> int:
        """Register a fresh agent and wire it to ``attach_count`` random agents on every layer."""
        existing = self.agents()
        if attach_count < 0 or attach_count > len(existing):
            raise InvalidParameter(
                f"attach_count {attach_count} exceeds population {len(existing)}")
        new = self._next_id
        self._register(new)
        for j in range(self.n_layers):
            if attach_count:
                picks = rng.choice(len(existing), size=attach_count, replace=False)
                for idx in sorted(int(x) for x in picks):
                    self.add_edge(j, new, existing[idx], strength)
        self.version += 1
        return new


def build_network(
    n: int,
    n_layers: int,
    ring_degree: int,
    rewiring_p: float,
    rng: np.random.Generator,
    shared_topology: bool = True,
    explicit_edges: Sequence[Sequence[float]] = (),
) -> MultilayerNetwork:
    """Watts-Strogatz network copied to every layer, or drawn per layer.

    ``explicit_edges`` entries are ``[layer, a, b, strength]``; existing edges
    get their strength overwritten, missing ones are added.
    """
    net = MultilayerNetwork(n_layers, range(n))
    shared = generate_watts_strogatz(n, ring_degree, rewiring_p, rng) if shared_topology else None
    for j in range(n_layers):
        edges = shared if shared is not None else generate_watts_strogatz(n, ring_degree, rewiring_p, rng)
        for a, b in edges:
            net.add_edge(j, a, b)
    for entry in explicit_edges:
        j, a, b, f = entry
        net.add_edge(int(j), int(a), int(b), float(f))
    return net
