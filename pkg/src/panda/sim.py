"""Client-server surveillance simulation: per-tick perturbed reporting,
coarse-grained monitoring, transmission-model estimation over true vs
released streams, and contact tracing with dynamic policy updates.

The world holds every client's true trajectory, but the "server" side of
the bookkeeping only ever sees the observed (perturbed) stream; ground
truth is kept purely to score utility.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .audit import AdversaryPrior, adversary_error
from .grid import GridWorld, Partition, block_partition
from .ingest import synth_walk
from .mechanism import MechanismConfig, MechanismMatrix, graph_exponential_matrix
from .policy import (
    PolicyGraph,
    build_complete_policy,
    build_contact_policy,
    build_grid_policy,
    build_partition_policy,
    isolated_policy,
    random_policy,
)
from .seir import InsufficientSignalError, SeirParams, estimate_r0
from .trajectory import StreamRecord, Trajectory

BASELINE = "baseline"
CONTACT_TRACE_UPDATE = "contact-trace-update"


class ResendPendingError(RuntimeError):
    """The world cannot advance while a trace re-send directive is in force."""


@dataclass(frozen=True)
class PolicyDirective:
    graph: PolicyGraph
    epoch: int
    reason: str

    def __post_init__(self) -> None:
        if self.reason not in (BASELINE, CONTACT_TRACE_UPDATE):
            raise ValueError(f"unknown directive reason {self.reason!r}")
        if self.epoch < 1:
            raise ValueError("directive epochs start at 1")


@dataclass(frozen=True)
class ContactRule:
    """Two users co-located (same cell, same tick) at least `threshold`
    distinct ticks count as a contact."""

    threshold: int = 2

    def __post_init__(self) -> None:
        if self.threshold < 1:
            raise ValueError("contact threshold must be >= 1")


@dataclass
class ClientStore:
    """One client's local state: active directive and retained history."""

    user: int
    directive: PolicyDirective | None
    history: list[tuple[int, int]] = field(default_factory=list)
    last_epoch: int = 0

    def record(self, tick: int, cell: int, cutoff: int) -> None:
        self.history.append((tick, cell))
        self.prune(cutoff)

    def prune(self, cutoff: int) -> None:
        """Drop entries older than the retention window ([cutoff, now])."""
        self.history = [(t, c) for t, c in self.history if t >= cutoff]


@dataclass(frozen=True)
class TraceResult:
    patient: int
    infected_cells: frozenset[int]
    infected_visits: frozenset[tuple[int, int]]
    at_risk: tuple[int, ...]
    disclosures: tuple[StreamRecord, ...]
    contacts: tuple[int, ...]
    log: tuple[str, ...]


def detect_contacts(records, rule: ContactRule = ContactRule()) -> set[tuple[int, int]]:
    """All unordered user pairs co-located at >= threshold distinct ticks.

    Records are (user, tick, cell) triples; gap records (cell None) are
    ignored. Pairs come back as (low, high) tuples.
    """
    by_tick_cell: dict[tuple[int, int], set[int]] = {}
    for rec in records:
        user, tick, cell = rec
        if cell is None:
            continue
        by_tick_cell.setdefault((tick, cell), set()).add(user)
    pair_ticks: dict[tuple[int, int], set[int]] = {}
    for (tick, _cell), users in by_tick_cell.items():
        ordered = sorted(users)
        for i, u in enumerate(ordered):
            for v in ordered[i + 1 :]:
                pair_ticks.setdefault((u, v), set()).add(tick)
    return {pair for pair, ticks in pair_ticks.items() if len(ticks) >= rule.threshold}


@dataclass(frozen=True)
class MonitorReport:
    areas: tuple
    ticks: int
    counts: dict  # area -> list of per-tick observed counts
    utility_error: float | None


def monitor_report(
    observed,
    partition: Partition,
    *,
    truth=None,
    grid: GridWorld | None = None,
) -> MonitorReport:
    """Observed head-counts per area per tick, plus mean released-vs-true
    distance when the true stream (and grid) are supplied."""
    observed = list(observed)
    n_ticks = 1 + max((r.tick for r in observed), default=-1)
    areas = tuple(partition.areas())
    counts = {a: [0] * n_ticks for a in areas}
    for rec in observed:
        if rec.cell is None:
            continue
        if rec.cell not in partition.area_of:
            raise ValueError(f"observed cell {rec.cell} has no area in the partition")
        counts[partition.area_of[rec.cell]][rec.tick] += 1
    err = None
    if truth is not None:
        if grid is None:
            raise ValueError("utility error needs the grid geometry")
        err = mean_release_error(truth, observed, grid)
    return MonitorReport(areas=areas, ticks=n_ticks, counts=counts, utility_error=err)


def mean_release_error(true_records, observed_records, grid: GridWorld) -> float | None:
    """Mean distance (meters) over (user, tick) pairs present and non-gap
    in both streams; None when nothing matches."""
    true_at = {(r.user, r.tick): r.cell for r in true_records if r.cell is not None}
    dists = []
    for rec in observed_records:
        if rec.cell is None:
            continue
        true_cell = true_at.get((rec.user, rec.tick))
        if true_cell is not None:
            dists.append(grid.euclid(true_cell, rec.cell))
    return float(np.mean(dists)) if dists else None


def exposure_series(records, ticks: int, infected_cells=None) -> np.ndarray:
    """Per-tick co-location exposure counts: at each tick, every unordered
    pair sharing a cell (optionally restricted to infected cells) counts
    as one exposure."""
    infected = None if infected_cells is None else frozenset(infected_cells)
    per_tick_cell: dict[tuple[int, int], int] = {}
    for rec in records:
        if rec.cell is None or rec.tick >= ticks:
            continue
        if infected is not None and rec.cell not in infected:
            continue
        per_tick_cell[(rec.tick, rec.cell)] = per_tick_cell.get((rec.tick, rec.cell), 0) + 1
    series = np.zeros(ticks)
    for (tick, _cell), k in per_tick_cell.items():
        series[tick] += k * (k - 1) / 2
    return series


@dataclass(frozen=True)
class R0Comparison:
    r0_true: float
    r0_observed: float

    @property
    def gap(self) -> float:
        return abs(self.r0_true - self.r0_observed)


def epidemic_analysis(
    true_records,
    observed_records,
    params: SeirParams,
    ticks: int,
    infected_cells=None,
) -> R0Comparison:
    """Fit the reproduction number from exposure proxies of both streams."""
    if ticks <= 0:
        raise ValueError("epidemic analysis needs at least one tick")
    series_true = exposure_series(true_records, ticks, infected_cells)
    series_obs = exposure_series(observed_records, ticks, infected_cells)
    return R0Comparison(
        r0_true=estimate_r0(series_true, params),
        r0_observed=estimate_r0(series_obs, params),
    )


# -- the world ---------------------------------------------------------------


def _perturb_seed(seed: int, user: int, tick: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(2, user, tick))


def _resend_seed(seed: int, epoch: int, user: int, tick: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(3, epoch, user, tick))


class World:
    """Single-coordinator simulation session.

    Clients re-read their true position each tick, retain a bounded
    history window, and release one perturbed cell under their current
    directive. All randomness derives from the world seed.
    """

    def __init__(
        self,
        grid: GridWorld,
        trajectories: list[Trajectory],
        policy: PolicyGraph,
        epsilon: float,
        seed: int,
        *,
        ticks_per_day: int = 24,
        retention_days: int = 14,
        contact_rule: ContactRule = ContactRule(),
    ):
        if ticks_per_day < 1 or retention_days < 1:
            raise ValueError("ticks_per_day and retention_days must be >= 1")
        self.grid = grid
        self.epsilon = float(epsilon)
        self.seed = int(seed)
        self.retention_ticks = retention_days * ticks_per_day
        self.contact_rule = contact_rule
        self.trajectories = {t.user: t for t in trajectories}
        if len(self.trajectories) != len(trajectories):
            raise ValueError("duplicate user ids in trajectories")
        for traj in trajectories:
            for tick, cell in traj.entries:
                grid.require_cell(cell)
        self.clients: dict[int, ClientStore] = {}
        self.now = 0
        self.observed: list[StreamRecord] = []
        self.true_records: list[StreamRecord] = []
        self.resend_pending = False
        self.baseline_policy: PolicyGraph | None = None
        self._matrices: dict[tuple[PolicyGraph, float], MechanismMatrix] = {}
        for user in sorted(self.trajectories):
            self.clients[user] = ClientStore(user=user, directive=None)
        self.issue_policy(policy, reason=BASELINE)

    # -- directives ---------------------------------------------------------

    def _matrix(self, graph: PolicyGraph) -> MechanismMatrix:
        key = (graph, self.epsilon)
        if key not in self._matrices:
            self._matrices[key] = graph_exponential_matrix(MechanismConfig(self.epsilon, graph))
        return self._matrices[key]

    def issue_policy(self, graph: PolicyGraph, reason: str = BASELINE, users=None) -> int:
        """Push a directive (server-side governance); epochs increase per user.

        A baseline issue also lifts any pending trace re-send hold.
        """
        missing = frozenset(self.grid.cells()) - graph.nodes
        if missing:
            raise ValueError(f"directive graph must cover the grid; missing {len(missing)} cells")
        targets = sorted(self.clients) if users is None else sorted(users)
        last = 0
        for user in targets:
            store = self.clients[user]
            store.last_epoch += 1
            store.directive = PolicyDirective(graph, store.last_epoch, reason)
            last = store.last_epoch
        if reason == BASELINE:
            self.baseline_policy = graph
            self.resend_pending = False
        return last

    def reject_policy(self, users=None) -> None:
        """Client-side veto: with no accepted directive, nothing is released."""
        targets = sorted(self.clients) if users is None else sorted(users)
        for user in targets:
            self.clients[user].directive = None

    # -- time ----------------------------------------------------------------

    def step(self) -> list[StreamRecord]:
        """Advance one tick; returns this tick's observed records (by user id)."""
        if self.resend_pending:
            raise ResendPendingError(
                "a contact-trace re-send is in force; issue a baseline policy to resume"
            )
        tick = self.now
        released: list[StreamRecord] = []
        cutoff = tick - self.retention_ticks
        for user in sorted(self.clients):
            store = self.clients[user]
            cell = self.trajectories[user].cell_at(tick)
            if cell is not None:
                store.record(tick, cell, cutoff)
            self.true_records.append(StreamRecord(user, tick, cell))
            directive = store.directive
            if cell is None or directive is None or cell not in directive.graph.nodes:
                rec = StreamRecord(user, tick, None)  # rejection: server records a gap
            else:
                rng = np.random.default_rng(_perturb_seed(self.seed, user, tick))
                matrix = self._matrix(directive.graph)
                idx = rng.choice(len(matrix.order), p=matrix.row(cell))
                rec = StreamRecord(user, tick, matrix.order[int(idx)])
            self.observed.append(rec)
            released.append(rec)
        self.now += 1
        return released

    def run(self, ticks: int) -> tuple[int, int]:
        """Advance `ticks` steps; returns the [first, last] executed tick."""
        if ticks < 1:
            raise ValueError("must advance at least one tick")
        first = self.now
        for _ in range(ticks):
            self.step()
        return first, self.now - 1

    # -- contact tracing ------------------------------------------------------

    def trace(self, patient: int) -> TraceResult:
        """Full tracing round for a diagnosed patient.

        The patient's retained history is disclosed exactly (isolated
        policy); cells they visited become infected; every user whose
        released stream touched an infected cell inside the window gets a
        contact-trace directive and re-sends their window under it.
        Visits to infected cells re-send exactly, everything else stays
        confined to its policy component.
        """
        if patient not in self.clients:
            raise ValueError(f"unknown patient {patient}")
        log: list[str] = []
        patient_store = self.clients[patient]
        visits = frozenset(patient_store.history)
        infected_cells = frozenset(c for _, c in visits)
        log.append(
            f"patient {patient} diagnosed: {len(visits)} visits over "
            f"{len(infected_cells)} cells marked infected"
        )

        window_start = (self.now - 1) - self.retention_ticks
        hits: dict[int, int] = {}
        for rec in self.observed:
            if rec.user != patient and rec.cell in infected_cells and rec.tick >= window_start:
                hits[rec.user] = hits.get(rec.user, 0) + 1
        at_risk = tuple(sorted(hits))
        log.append(f"{len(at_risk)} users flagged at risk: {list(at_risk)}")

        # Patient disclosure: isolated policy, exact release of the window.
        exact = isolated_policy(self.grid.cells())
        patient_store.last_epoch += 1
        patient_store.directive = PolicyDirective(exact, patient_store.last_epoch, CONTACT_TRACE_UPDATE)
        disclosures: list[StreamRecord] = [
            StreamRecord(patient, t, c) for t, c in sorted(patient_store.history)
        ]
        for t, c in sorted(patient_store.history):
            log.append(f"tick {t}: patient {patient} disclosed cell {c} exactly")

        base = build_contact_policy(self._baseline_graph(), infected_cells)
        matrix = self._matrix(base)
        for user in at_risk:
            store = self.clients[user]
            store.last_epoch += 1
            store.directive = PolicyDirective(base, store.last_epoch, CONTACT_TRACE_UPDATE)
            log.append(f"user {user}: contact-trace directive, epoch {store.last_epoch}")
            for t, c in sorted(store.history):
                rng = np.random.default_rng(_resend_seed(self.seed, store.last_epoch, user, t))
                idx = rng.choice(len(matrix.order), p=matrix.row(c))
                z = matrix.order[int(idx)]
                disclosures.append(StreamRecord(user, t, z))
                tag = "infected, exact" if c in infected_cells else "re-perturbed"
                log.append(f"tick {t}: user {user} re-sent cell {z} ({tag})")

        pairs = detect_contacts(disclosures, self.contact_rule)
        contacts = tuple(sorted({v if u == patient else u for u, v in pairs if patient in (u, v)}))
        log.append(f"traced contacts of {patient}: {list(contacts)}")
        self.resend_pending = True
        return TraceResult(
            patient=patient,
            infected_cells=infected_cells,
            infected_visits=visits,
            at_risk=at_risk,
            disclosures=tuple(disclosures),
            contacts=contacts,
            log=tuple(log),
        )

    def _baseline_graph(self) -> PolicyGraph:
        if self.baseline_policy is None:
            raise ValueError("no baseline policy has been issued")
        return self.baseline_policy

    # -- metrics ---------------------------------------------------------------

    def metrics(self, partition: Partition, seir: SeirParams) -> dict:
        """Utility, empirical privacy, model-estimation gap, and monitoring
        counts for everything observed so far."""
        report = monitor_report(self.observed, partition, truth=self.true_records, grid=self.grid)
        baseline = self._baseline_matrix()
        adv_err = None
        if baseline is not None:
            prior = AdversaryPrior.uniform(baseline.order)
            adv_err = adversary_error(baseline, prior, self.grid)
        r0_true = r0_observed = r0_gap = None
        if self.now > 0:
            try:
                comparison = epidemic_analysis(self.true_records, self.observed, seir, self.now)
                r0_true = comparison.r0_true
                r0_observed = comparison.r0_observed
                r0_gap = comparison.gap
            except InsufficientSignalError:
                pass
        released = sum(1 for r in self.observed if r.cell is not None)
        return {
            "ticks": self.now,
            "users": len(self.clients),
            "epsilon": self.epsilon,
            "releases": released,
            "gaps": len(self.observed) - released,
            "utility_error": report.utility_error,
            "adversary_error": adv_err,
            "r0_true": r0_true,
            "r0_observed": r0_observed,
            "r0_gap": r0_gap,
            "monitor": {
                "areas": [str(a) for a in report.areas],
                "counts": {str(a): report.counts[a] for a in report.areas},
            },
        }

    def _baseline_matrix(self) -> MechanismMatrix | None:
        try:
            return self._matrix(self._baseline_graph())
        except ValueError:
            return None


# -- scenario configuration ---------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    width: int = 8
    height: int = 8
    cell_size: float = 100.0
    users: int = 20
    ticks: int = 200
    epsilon: float = 1.0
    policy: str = "grid"
    seed: int = 0
    ticks_per_day: int = 24
    retention_days: int = 14
    contact_threshold: int = 2
    monitor_block: int = 2
    beta: float = 0.3
    sigma: float = 0.2
    gamma: float = 0.1
    population: float = 1000.0
    e0: float = 0.0
    i0: float = 1.0
    seir_dt: float = 0.1

    def grid(self) -> GridWorld:
        return GridWorld(self.width, self.height, self.cell_size)

    def seir_params(self) -> SeirParams:
        return SeirParams(
            self.beta, self.sigma, self.gamma, self.population,
            i0=self.i0, e0=self.e0, dt=self.seir_dt,
        )

    def partition(self) -> Partition:
        return block_partition(self.grid(), self.monitor_block)


_INT_KEYS = {"users", "ticks", "seed", "ticks_per_day", "retention_days",
             "contact_threshold", "monitor_block"}
_FLOAT_KEYS = {"cell_size", "epsilon", "beta", "sigma", "gamma", "population",
               "e0", "i0", "seir_dt"}


def parse_scenario(text: str) -> SimConfig:
    """Parse a key = value scenario file ('#' starts a comment).

    Keys are the SimConfig field names, except the grid which is written
    as grid = WxH.
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        if key == "grid":
            m = re.fullmatch(r"(\d+)\s*x\s*(\d+)", val, flags=re.IGNORECASE)
            if not m:
                raise ValueError(f"line {lineno}: grid must look like 8x8, got {val!r}")
            values["width"] = int(m.group(1))
            values["height"] = int(m.group(2))
        elif key in _INT_KEYS:
            values[key] = int(val)
        elif key in _FLOAT_KEYS:
            values[key] = float(val)
        elif key == "policy":
            values[key] = val
        else:
            raise ValueError(f"line {lineno}: unknown scenario key {key!r}")
    return SimConfig(**values)


def build_policy(grid: GridWorld, kind: str, seed: int = 0) -> PolicyGraph:
    """Build a full-grid policy from a scenario `policy` value.

    Kinds: grid | complete | isolated | partition:<block> | random:<prob>.
    """
    name, _, arg = kind.partition(":")
    name = name.strip().lower()
    if name == "grid":
        return build_grid_policy(grid)
    if name == "complete":
        return build_complete_policy(grid.cells())
    if name == "isolated":
        return isolated_policy(grid.cells())
    if name == "partition":
        block = int(arg) if arg else 2
        return build_partition_policy(grid, block_partition(grid, block))
    if name == "random":
        prob = float(arg) if arg else 0.5
        return random_policy(grid.cells(), prob, seed)
    raise ValueError(f"unknown policy kind {kind!r}")


def build_world(config: SimConfig) -> World:
    grid = config.grid()
    walks = synth_walk(grid, config.users, config.ticks, config.seed)
    policy = build_policy(grid, config.policy, config.seed)
    return World(
        grid,
        walks,
        policy,
        config.epsilon,
        config.seed,
        ticks_per_day=config.ticks_per_day,
        retention_days=config.retention_days,
        contact_rule=ContactRule(config.contact_threshold),
    )


def run_scenario(config: SimConfig) -> tuple[World, dict]:
    """Build, advance `ticks`, and summarize; the standard batch entry point."""
    world = build_world(config)
    world.run(config.ticks)
    metrics = world.metrics(config.partition(), config.seir_params())
    return world, metrics


def metrics_json(metrics: dict) -> str:
    """Canonical serialization: key-sorted, newline-terminated."""
    return json.dumps(metrics, sort_keys=True, indent=2) + "\n"
