"""Location policy graphs: indistinguishability requirements between cells.

A policy graph is an undirected graph whose nodes are grid cells and
whose edges demand that an observer of the released output cannot tell
the two endpoint locations apart (beyond the privacy budget). Hop
distance in the graph scales the required indistinguishability between
any two connected locations; unconnected locations carry no requirement
at all, and a fully isolated node may be released exactly.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import GridWorld, Partition

INF = math.inf


def _normalize_edge(a: int, b: int) -> tuple[int, int]:
    if a == b:
        raise ValueError(f"self-loop on node {a} is not a valid policy edge")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class PolicyGraph:
    """Undirected graph over cell indices; edges stored as (low, high) pairs."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for a, b in self.edges:
            if a >= b:
                raise ValueError(f"edge ({a}, {b}) must be stored as (low, high) with low < high")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a}, {b}) has an endpoint outside the node set")

    @classmethod
    def build(cls, nodes, edges) -> "PolicyGraph":
        """Construct from any iterables, normalizing edge order."""
        return cls(frozenset(nodes), frozenset(_normalize_edge(a, b) for a, b in edges))

    @cached_property
    def adjacency(self) -> dict[int, frozenset[int]]:
        adj: dict[int, set[int]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return {n: frozenset(v) for n, v in adj.items()}

    def neighbors(self, node: int) -> frozenset[int]:
        self.require_node(node)
        return self.adjacency[node]

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    def require_node(self, node: int) -> None:
        if node not in self.nodes:
            raise ValueError(f"node {node} not in policy graph")

    def has_edge(self, a: int, b: int) -> bool:
        return _normalize_edge(a, b) in self.edges

    def sorted_nodes(self) -> list[int]:
        return sorted(self.nodes)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"nodes": self.sorted_nodes(), "edges": [list(e) for e in self.sorted_edges()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, doc: dict) -> "PolicyGraph":
        if "nodes" not in doc or "edges" not in doc:
            raise ValueError("policy document must have 'nodes' and 'edges' keys")
        return cls.build(doc["nodes"], [tuple(e) for e in doc["edges"]])

    @classmethod
    def from_json(cls, text: str) -> "PolicyGraph":
        return cls.from_dict(json.loads(text))


# -- builders -------------------------------------------------------------


def build_grid_policy(grid: GridWorld) -> PolicyGraph:
    """Connect every cell to its king-move neighbors (8 in the interior)."""
    edges = set()
    for cell in grid.cells():
        for nb in grid.king_neighbors(cell):
            edges.add(_normalize_edge(cell, nb))
    return PolicyGraph(frozenset(grid.cells()), frozenset(edges))


def build_complete_policy(nodes) -> PolicyGraph:
    """Complete graph: every pair of the given cells is indistinguishable."""
    node_set = frozenset(nodes)
    if not node_set:
        raise ValueError("complete policy needs at least one node")
    ordered = sorted(node_set)
    edges = frozenset((a, b) for i, a in enumerate(ordered) for b in ordered[i + 1 :])
    return PolicyGraph(node_set, edges)


def build_partition_policy(grid: GridWorld, partition: Partition) -> PolicyGraph:
    """Indistinguishability inside each area, none across areas."""
    partition.require_total(grid)
    edges = set()
    for area in partition.areas():
        cells = partition.cells_in(area)
        for i, a in enumerate(cells):
            for b in cells[i + 1 :]:
                edges.add((a, b))
    return PolicyGraph(frozenset(grid.cells()), frozenset(edges))


def build_contact_policy(base: PolicyGraph, infected) -> PolicyGraph:
    """Isolate every infected cell; keep the rest of `base` unchanged.

    An isolated node is released exactly, so visits to infected cells
    become fully disclosed while all other locations keep their policy.
    """
    infected_set = frozenset(infected)
    outside = infected_set - base.nodes
    if outside:
        raise ValueError(f"infected cells {sorted(outside)} not in the base policy graph")
    edges = frozenset(
        (a, b) for a, b in base.edges if a not in infected_set and b not in infected_set
    )
    return PolicyGraph(base.nodes, edges)


def isolated_policy(nodes) -> PolicyGraph:
    """Every node isolated: the exact-release (full disclosure) policy."""
    return PolicyGraph(frozenset(nodes), frozenset())


def random_policy(nodes, edge_prob: float, seed: int) -> PolicyGraph:
    """Include each unordered pair independently with probability edge_prob."""
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError(f"edge_prob must be in [0, 1], got {edge_prob}")
    ordered = sorted(frozenset(nodes))
    rng = np.random.default_rng(seed)
    edges = set()
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if rng.random() < edge_prob:
                edges.add((a, b))
    return PolicyGraph(frozenset(ordered), frozenset(edges))


# -- distances and neighborhoods ------------------------------------------


def _bfs_hops(g: PolicyGraph, source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    adj = g.adjacency
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def graph_distance(g: PolicyGraph, s: int, s2: int) -> int | float:
    """Shortest-path hop count between s and s2; math.inf if unconnected."""
    g.require_node(s)
    g.require_node(s2)
    if s == s2:
        return 0
    dist = _bfs_hops(g, s)
    return dist.get(s2, INF)


def k_neighbors(g: PolicyGraph, s: int, k: int | float) -> frozenset[int]:
    """All nodes within k hops of s (including s itself).

    k = math.inf returns the connected component of s.
    """
    g.require_node(s)
    if k < 0:
        raise ValueError(f"hop bound must be >= 0, got {k}")
    dist = _bfs_hops(g, s)
    return frozenset(n for n, d in dist.items() if d <= k)


def connected_component(g: PolicyGraph, s: int) -> frozenset[int]:
    return k_neighbors(g, s, INF)


def all_pairs_hops(g: PolicyGraph, order: list[int] | None = None) -> np.ndarray:
    """Hop-distance matrix over `order` (default: sorted nodes); inf when unconnected."""
    if order is None:
        order = g.sorted_nodes()
    index = {n: i for i, n in enumerate(order)}
    n = len(order)
    out = np.full((n, n), INF)
    for node in order:
        for other, d in _bfs_hops(g, node).items():
            if other in index:
                out[index[node], index[other]] = d
    return out
