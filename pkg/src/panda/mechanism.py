"""Randomized location release mechanisms over policy graphs.

The workhorse is the graph-exponential mechanism: given true cell s it
releases z inside s's connected component with probability proportional
to exp(-eps * d(s, z) / 2), where d is hop distance in the policy graph.

Why the /2: for neighbors s, s' at hop distance d, the kernel ratio
exp(-eps*(d(s,z) - d(s',z))/2) is at most exp(eps*d/2) by the triangle
inequality, and the normalizer ratio Z(s')/Z(s) is bounded by the same
factor, so the released distributions differ by at most exp(eps*d)
overall. With d = 1 on every edge that is exactly the per-edge
indistinguishability the policy demands. Isolated nodes have a
single-point component and are released exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .policy import PolicyGraph, all_pairs_hops
from .trajectory import Trajectory

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MechanismConfig:
    epsilon: float
    graph: PolicyGraph

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")


class MechanismMatrix:
    """Exact conditional release table: probs[i, j] = Pr(release order[j] | true order[i])."""

    def __init__(self, order, probs: np.ndarray):
        self.order: tuple[int, ...] = tuple(order)
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (len(self.order), len(self.order)):
            raise ValueError(f"expected square {len(self.order)}-node table, got {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("release probabilities must be nonnegative")
        sums = probs.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"row for node {self.order[i]} sums to {sums[i]!r}, not 1")
        probs = probs.copy()
        probs.flags.writeable = False
        self.probs = probs
        self._index = {node: i for i, node in enumerate(self.order)}

    def index_of(self, node: int) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise ValueError(f"node {node} not covered by this mechanism") from None

    def row(self, s: int) -> np.ndarray:
        return self.probs[self.index_of(s)]

    def prob(self, s: int, z: int) -> float:
        return float(self.probs[self.index_of(s), self.index_of(z)])

    def nodes(self) -> frozenset[int]:
        return frozenset(self.order)

    # -- CSV round trip (full double precision) ----------------------------

    def to_csv(self) -> str:
        lines = [",".join(str(n) for n in self.order)]
        for row in self.probs:
            lines.append(",".join("%.17g" % p for p in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "MechanismMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty mechanism CSV")
        order = [int(tok) for tok in lines[0].split(",")]
        rows = [[float(tok) for tok in ln.split(",")] for ln in lines[1:]]
        return cls(order, np.array(rows))


def graph_exponential_matrix(config: MechanismConfig) -> MechanismMatrix:
    """Exact table of the graph-exponential mechanism for `config`."""
    order = config.graph.sorted_nodes()
    hops = all_pairs_hops(config.graph, order)
    # Log-space weights: the diagonal log-weight is 0 (the row max), so
    # exp() never overflows and every normalizer is >= 1. Unreachable
    # cells get weight 0 exactly.
    connected = np.isfinite(hops)
    weights = np.zeros(hops.shape)
    weights[connected] = np.exp(-config.epsilon * hops[connected] / 2.0)
    probs = weights / weights.sum(axis=1, keepdims=True)
    return MechanismMatrix(order, probs)


def identity_matrix(nodes) -> MechanismMatrix:
    """Deterministic exact release of the true cell (no privacy)."""
    order = sorted(frozenset(nodes))
    return MechanismMatrix(order, np.eye(len(order)))


@lru_cache(maxsize=128)
def _cached_matrix(config: MechanismConfig) -> MechanismMatrix:
    return graph_exponential_matrix(config)


def _sample_row(matrix: MechanismMatrix, s: int, rng: np.random.Generator) -> int:
    idx = rng.choice(len(matrix.order), p=matrix.row(s))
    return matrix.order[int(idx)]


def step_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Derive the sub-seed for one trajectory step from the run seed.

    Keyed on (seed, index) only, so reproducing a single step never
    depends on how long the surrounding trajectory is.
    """
    return np.random.SeedSequence(entropy=seed, spawn_key=(index,))


def perturb(config: MechanismConfig, s: int, seed) -> int:
    """One released cell for true cell s; deterministic given the seed.

    `seed` may be an int or a numpy SeedSequence.
    """
    config.graph.require_node(s)
    matrix = _cached_matrix(config)
    return _sample_row(matrix, s, np.random.default_rng(seed))


def perturb_trajectory(config: MechanismConfig, traj: Trajectory, seed: int) -> Trajectory:
    """Element-wise perturbation; ticks and length are preserved."""
    nodes = config.graph.nodes
    for tick, cell in traj.entries:
        if cell not in nodes:
            raise ValueError(f"trajectory cell {cell} at tick {tick} is outside the policy graph")
    matrix = _cached_matrix(config)
    released = []
    for i, (tick, cell) in enumerate(traj.entries):
        rng = np.random.default_rng(step_seed(seed, i))
        released.append((tick, _sample_row(matrix, cell, rng)))
    return Trajectory(traj.user, tuple(released))
