"""Exact verification of release tables against privacy requirements,
plus the Bayesian adversary used for empirical privacy.

All audits are exhaustive scans over (input pair, output) triples of the
mechanism table, so a pass is a proof for the discrete universe at hand,
not a sampled estimate. Ratio convention at zero probabilities: 0/0
passes, x/0 with x > 0 fails with ratio infinity.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import GridWorld
from .mechanism import MechanismMatrix
from .policy import PolicyGraph, all_pairs_hops
from .trajectory import Trajectory

PASS_SLACK = 1e-9  # multiplicative; absorbs normalization noise only
PRIOR_SUM_TOL = 1e-12


class DegenerateObservationError(ValueError):
    """The observed output has probability zero under prior and mechanism."""


@dataclass(frozen=True)
class AuditReport:
    passed: bool
    worst_ratio: float
    bound: float
    worst_pair: tuple[int, int, int] | None  # (s, s2, z)

    def to_dict(self) -> dict:
        ratio = self.worst_ratio
        return {
            "pass": self.passed,
            "worst_ratio": ratio if math.isfinite(ratio) else "inf",
            "bound": self.bound,
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def pair_ratio(matrix: MechanismMatrix, s: int, s2: int, z: int) -> float:
    """Standalone Pr(A(s)=z) / Pr(A(s2)=z) under the audit's zero rules."""
    num = matrix.prob(s, z)
    den = matrix.prob(s2, z)
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return num / den


def _ratio_row(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    pos = num > 0
    with np.errstate(divide="ignore"):
        out[pos] = np.where(den[pos] > 0, num[pos] / den[pos], math.inf)
    return out


def _scan(matrix: MechanismMatrix, checks) -> AuditReport:
    """Run ordered (s, s2, bound) checks; worst = max ratio/bound, ties
    broken by the lexicographically first (s, s2, z)."""
    best_score = -1.0
    worst: tuple[int, int, int] | None = None
    worst_ratio = 0.0
    worst_bound = 1.0
    any_checks = False
    for s, s2, bound in checks:
        any_checks = True
        ratios = _ratio_row(matrix.row(s), matrix.row(s2))
        with np.errstate(invalid="ignore"):
            scores = ratios / bound
        j = int(np.argmax(scores))  # first occurrence wins exact ties
        if scores[j] > best_score:
            best_score = float(scores[j])
            worst = (s, s2, matrix.order[j])
            worst_ratio = float(ratios[j])
            worst_bound = bound
    if not any_checks:
        return AuditReport(passed=True, worst_ratio=0.0, bound=worst_bound, worst_pair=None)
    passed = worst_ratio <= worst_bound * (1.0 + PASS_SLACK)
    return AuditReport(passed=passed, worst_ratio=worst_ratio, bound=worst_bound, worst_pair=worst)


def _require_same_nodes(matrix: MechanismMatrix, g: PolicyGraph) -> None:
    if matrix.nodes() != g.nodes:
        raise ValueError("mechanism table and policy graph cover different node sets")


def audit_policy(matrix: MechanismMatrix, g: PolicyGraph, eps: float) -> AuditReport:
    """Per-edge check: released distributions of any two 1-neighbors must
    differ by at most a factor e^eps, at every output."""
    _require_same_nodes(matrix, g)
    bound = math.exp(eps)
    pairs = sorted([(a, b) for a, b in g.edges] + [(b, a) for a, b in g.edges])
    return _scan(matrix, ((s, s2, bound) for s, s2 in pairs))


def audit_infinity(matrix: MechanismMatrix, g: PolicyGraph, eps: float) -> AuditReport:
    """Distance-scaled check: connected pairs at hop distance d must stay
    within a factor e^(eps*d)."""
    _require_same_nodes(matrix, g)
    order = list(matrix.order)
    hops = all_pairs_hops(g, order)
    checks = []
    for i, s in enumerate(order):
        for j, s2 in enumerate(order):
            d = hops[i, j]
            if i != j and math.isfinite(d):
                checks.append((s, s2, math.exp(eps * d)))
    return _scan(matrix, checks)


def audit_geo_ind(matrix: MechanismMatrix, grid: GridWorld, eps: float) -> AuditReport:
    """Euclidean-scaled check over every cell pair of the grid.

    Distances are in cell units, so the bound is geometry-independent.
    """
    if matrix.nodes() != frozenset(grid.cells()):
        raise ValueError("mechanism table must cover every grid cell")
    order = list(matrix.order)
    checks = []
    for s in order:
        for s2 in order:
            if s != s2:
                checks.append((s, s2, math.exp(eps * grid.euclid_cells(s, s2))))
    return _scan(matrix, checks)


def audit_location_set(matrix: MechanismMatrix, cells, eps: float) -> AuditReport:
    """e^eps indistinguishability between every pair inside the given set."""
    cell_set = frozenset(cells)
    missing = cell_set - matrix.nodes()
    if missing:
        raise ValueError(f"cells {sorted(missing)} not covered by the mechanism table")
    bound = math.exp(eps)
    ordered = sorted(cell_set)
    checks = [(s, s2, bound) for s in ordered for s2 in ordered if s != s2]
    return _scan(matrix, checks)


# -- Bayesian adversary -----------------------------------------------------


class AdversaryPrior:
    """Probability per node; must be nonnegative and sum to 1."""

    def __init__(self, order, probs):
        self.order: tuple[int, ...] = tuple(order)
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (len(self.order),):
            raise ValueError("prior needs one probability per node")
        if np.any(probs < 0):
            raise ValueError("prior probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > PRIOR_SUM_TOL:
            raise ValueError(f"prior sums to {probs.sum()!r}, not 1")
        probs = probs.copy()
        probs.flags.writeable = False
        self.probs = probs
        self._index = {node: i for i, node in enumerate(self.order)}

    def prob(self, node: int) -> float:
        i = self._index.get(node)
        return 0.0 if i is None else float(self.probs[i])

    @classmethod
    def uniform(cls, nodes) -> "AdversaryPrior":
        ordered = sorted(frozenset(nodes))
        return cls(ordered, np.full(len(ordered), 1.0 / len(ordered)))


def _prior_vector(prior: AdversaryPrior, matrix: MechanismMatrix) -> np.ndarray:
    extra = set(prior.order) - set(matrix.order)
    if any(prior.prob(n) > 0 for n in extra):
        raise ValueError("prior puts mass on nodes the mechanism does not cover")
    return np.array([prior.prob(n) for n in matrix.order])


def posterior(matrix: MechanismMatrix, prior: AdversaryPrior, z: int) -> AdversaryPrior:
    """Bayes update of the prior after observing released cell z."""
    p = _prior_vector(prior, matrix)
    joint = p * matrix.probs[:, matrix.index_of(z)]
    total = float(joint.sum())
    if total <= 0.0:
        raise DegenerateObservationError(
            f"released cell {z} has probability zero under this prior and mechanism"
        )
    return AdversaryPrior(matrix.order, joint / total)


def _distance_matrix(grid: GridWorld, order) -> np.ndarray:
    coords = np.array([grid.center(c) for c in order])
    diff = coords[:, None, :] - coords[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def adversary_error(matrix: MechanismMatrix, prior: AdversaryPrior, grid: GridWorld) -> float:
    """Expected distance (meters) between truth and the Bayes-optimal guess.

    For each possible release z the adversary picks the candidate cell
    minimizing posterior-expected distance (ties to the lowest index);
    the result averages that estimator's miss over truth and release.
    """
    p = _prior_vector(prior, matrix)
    dist = _distance_matrix(grid, matrix.order)
    total = 0.0
    for j in range(len(matrix.order)):
        joint = p * matrix.probs[:, j]
        pz = float(joint.sum())
        if pz == 0.0:
            continue  # release never happens; contributes nothing
        post = joint / pz
        expected = post @ dist  # candidate -> posterior-expected distance
        best = int(np.argmin(expected))  # first minimum = lowest cell index
        total += float(joint @ dist[:, best])
    return total


def utility_error(true_traj: Trajectory, released_traj: Trajectory, grid: GridWorld) -> float:
    """Mean per-step distance (meters) between true and released cells."""
    if len(true_traj) != len(released_traj):
        raise ValueError(
            f"trajectory lengths differ: {len(true_traj)} vs {len(released_traj)}"
        )
    if true_traj.ticks() != released_traj.ticks():
        raise ValueError("trajectories must share identical tick sequences")
    if not true_traj.entries:
        return 0.0
    dists = [
        grid.euclid(a, b) for (_, a), (_, b) in zip(true_traj.entries, released_traj.entries)
    ]
    return float(np.mean(dists))
