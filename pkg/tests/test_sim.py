import json

import pytest

from conftest import brute_force_contacts
from panda.grid import GridWorld, Partition, block_partition
from panda.ingest import synth_walk
from panda.policy import build_grid_policy, build_partition_policy, isolated_policy, k_neighbors
from panda.seir import SeirParams
from panda.sim import (
    ContactRule,
    PolicyDirective,
    ResendPendingError,
    SimConfig,
    World,
    build_policy,
    build_world,
    detect_contacts,
    epidemic_analysis,
    exposure_series,
    metrics_json,
    monitor_report,
    parse_scenario,
    run_scenario,
)
from panda.trajectory import StreamRecord, Trajectory

SEIR = SeirParams(0.3, 0.2, 0.1, 1000.0, i0=1.0, dt=0.1)


def records(*triples):
    return [StreamRecord(u, t, c) for u, t, c in triples]


class TestDetectContacts:
    def test_two_co_locations_make_a_contact(self):
        recs = records((0, 3, 7), (1, 3, 7), (0, 7, 2), (1, 7, 2), (0, 9, 1), (1, 9, 5))
        assert detect_contacts(recs) == {(0, 1)}

    def test_single_co_location_is_not_enough(self):
        recs = records((0, 3, 7), (1, 3, 7), (0, 4, 1), (1, 4, 2))
        assert detect_contacts(recs) == set()

    def test_never_co_located(self):
        recs = records((0, 0, 1), (1, 0, 2), (0, 1, 3), (1, 1, 4))
        assert detect_contacts(recs) == set()

    def test_threshold_respected(self):
        recs = records(*[(0, t, 5) for t in range(3)], *[(1, t, 5) for t in range(3)])
        assert detect_contacts(recs, ContactRule(3)) == {(0, 1)}
        assert detect_contacts(recs, ContactRule(4)) == set()

    def test_gap_records_ignored(self):
        recs = records((0, 0, None), (1, 0, None), (0, 1, 4), (1, 1, 4))
        assert detect_contacts(recs) == set()

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            ContactRule(0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force_oracle(self, seed):
        grid = GridWorld(4, 4)
        walks = synth_walk(grid, users=12, ticks=60, seed=seed)
        recs = [StreamRecord(w.user, t, c) for w in walks for t, c in w.entries]
        assert detect_contacts(recs, ContactRule(2)) == brute_force_contacts(recs, 2)


class TestDirectives:
    def test_reason_validated(self):
        g = isolated_policy([0])
        with pytest.raises(ValueError):
            PolicyDirective(g, 1, "whatever")

    def test_epoch_positive(self):
        g = isolated_policy([0])
        with pytest.raises(ValueError):
            PolicyDirective(g, 0, "baseline")


def tiny_world(policy_kind="isolated", epsilon=1.0, ticks_per_day=1, **kwargs):
    grid = GridWorld(3, 3)
    trajectories = [
        Trajectory(0, tuple((t, t % 9) for t in range(40))),
        Trajectory(1, tuple((t, (t + 1) % 9) for t in range(40))),
    ]
    policy = build_policy(grid, policy_kind)
    return grid, World(
        grid, trajectories, policy, epsilon, seed=5, ticks_per_day=ticks_per_day, **kwargs
    )


class TestWorldStep:
    def test_isolated_policy_observed_equals_true(self):
        _, world = tiny_world("isolated")
        world.run(10)
        assert world.observed == world.true_records

    def test_retention_prunes_old_entries(self):
        # 1 tick per day, 14-day retention: after tick 15 the tick-0 entry
        # (15 days old) must be gone, tick-1 entry still present.
        _, world = tiny_world("isolated", ticks_per_day=1)
        world.run(16)
        history_ticks = [t for t, _ in world.clients[0].history]
        assert min(history_ticks) == 15 - 14
        assert all(t >= 1 for t in history_ticks)

    def test_deterministic_observed_stream(self):
        _, w1 = tiny_world("grid")
        _, w2 = tiny_world("grid")
        w1.run(20)
        w2.run(20)
        assert w1.observed == w2.observed

    def test_gap_after_rejection(self):
        _, world = tiny_world("grid")
        world.run(2)
        world.reject_policy(users=[1])
        world.run(1)
        last_tick = {rec.user: rec for rec in world.observed if rec.tick == 2}
        assert last_tick[1].cell is None
        assert last_tick[0].cell is not None

    def test_epochs_strictly_increase(self):
        grid, world = tiny_world("grid")
        first = world.clients[0].directive.epoch
        world.issue_policy(build_policy(grid, "complete"))
        second = world.clients[0].directive.epoch
        world.issue_policy(build_policy(grid, "grid"))
        third = world.clients[0].directive.epoch
        assert first < second < third

    def test_directive_must_cover_grid(self):
        grid, world = tiny_world("grid")
        from panda.policy import build_complete_policy

        with pytest.raises(ValueError):
            world.issue_policy(build_complete_policy([0, 1]))

    def test_run_needs_positive_ticks(self):
        _, world = tiny_world()
        with pytest.raises(ValueError):
            world.run(0)


class TestMonitorReport:
    def test_exact_release_matches_truth(self):
        grid, world = tiny_world("isolated")
        world.run(10)
        part = block_partition(grid, 2)
        observed = monitor_report(world.observed, part)
        truth = monitor_report(world.true_records, part)
        assert observed.counts == truth.counts

    def test_partition_policy_confines_support(self):
        # Perturbation under a partition policy never leaves the true
        # cell's area, so per-area counts equal the ground truth.
        grid = GridWorld(4, 4)
        part = block_partition(grid, 2)
        policy = build_partition_policy(grid, part)
        walks = synth_walk(grid, users=6, ticks=40, seed=2)
        world = World(grid, walks, policy, epsilon=0.5, seed=2)
        world.run(40)
        assert monitor_report(world.observed, part).counts == \
            monitor_report(world.true_records, part).counts

    def test_empty_stream_all_zero(self):
        part = Partition.from_labels(["a", "a", "b", "b"])
        report = monitor_report([], part)
        assert report.ticks == 0
        assert all(counts == [] for counts in report.counts.values())

    def test_utility_error_included_with_truth(self):
        grid, world = tiny_world("grid")
        world.run(5)
        part = block_partition(grid, 3)
        report = monitor_report(world.observed, part, truth=world.true_records, grid=grid)
        assert report.utility_error is not None
        assert report.utility_error >= 0.0


class TestEpidemicAnalysis:
    def test_identical_streams_zero_gap(self):
        grid = GridWorld(3, 3)
        trajs = [
            Trajectory(0, tuple((t, t % 9) for t in range(30))),
            Trajectory(1, tuple((t, t % 9 if t % 3 == 0 else (t + 4) % 9) for t in range(30))),
        ]
        world = World(grid, trajs, isolated_policy(grid.cells()), epsilon=1.0, seed=5)
        world.run(30)
        cmp = epidemic_analysis(world.true_records, world.observed, SEIR, world.now)
        assert cmp.gap == 0.0

    def test_empty_streams_rejected(self):
        with pytest.raises(ValueError):
            epidemic_analysis([], [], SEIR, 0)

    def test_exposure_series_counts_pairs(self):
        recs = records((0, 0, 4), (1, 0, 4), (2, 0, 4), (0, 1, 2), (1, 1, 3))
        series = exposure_series(recs, ticks=2)
        assert series[0] == 3.0  # C(3,2) pairs sharing cell 4
        assert series[1] == 0.0

    def test_infected_cell_filter(self):
        recs = records((0, 0, 4), (1, 0, 4), (0, 1, 2), (1, 1, 2))
        series = exposure_series(recs, ticks=2, infected_cells={2})
        assert series[0] == 0.0
        assert series[1] == 1.0


def contact_scenario():
    """Patient 0 meets user 1 twice at cell 4; user 2 co-locates with user 3
    twice at cell 8, which the patient never visits."""
    grid = GridWorld(3, 3)
    trajs = [
        Trajectory(0, ((0, 4), (1, 0), (2, 4), (3, 0))),
        Trajectory(1, ((0, 4), (1, 1), (2, 4), (3, 1))),
        Trajectory(2, ((0, 8), (1, 8), (2, 2), (3, 2))),
        Trajectory(3, ((0, 8), (1, 8), (2, 3), (3, 3))),
    ]
    policy = build_grid_policy(grid)
    world = World(grid, trajs, policy, epsilon=1.0, seed=11)
    world.run(4)
    return grid, world


class TestTrace:
    def test_known_contact_is_traced(self):
        _, world = contact_scenario()
        result = world.trace(0)
        assert 1 in result.contacts

    def test_contact_outside_infected_cells_not_traced(self):
        _, world = contact_scenario()
        result = world.trace(0)
        assert 2 not in result.contacts
        assert 3 not in result.contacts

    def test_no_co_location_empty(self):
        grid = GridWorld(3, 3)
        trajs = [
            Trajectory(0, ((0, 0), (1, 0))),
            Trajectory(1, ((0, 8), (1, 8))),
        ]
        world = World(grid, trajs, build_grid_policy(grid), epsilon=1.0, seed=3)
        world.run(2)
        assert world.trace(0).contacts == ()

    def test_unknown_patient_rejected(self):
        _, world = contact_scenario()
        with pytest.raises(ValueError):
            world.trace(99)

    def test_patient_history_disclosed_exactly(self):
        _, world = contact_scenario()
        result = world.trace(0)
        patient_disclosed = {(r.tick, r.cell) for r in result.disclosures if r.user == 0}
        assert patient_disclosed == set(world.clients[0].history)

    def test_infected_cell_resends_are_exact(self):
        _, world = contact_scenario()
        result = world.trace(0)
        truth = {(r.user, r.tick): r.cell for r in world.true_records}
        for rec in result.disclosures:
            true_cell = truth[(rec.user, rec.tick)]
            if true_cell in result.infected_cells:
                assert rec.cell == true_cell

    def test_other_resends_stay_in_policy_component(self):
        grid, world = contact_scenario()
        result = world.trace(0)
        from panda.policy import build_contact_policy

        contact_graph = build_contact_policy(build_grid_policy(grid), result.infected_cells)
        truth = {(r.user, r.tick): r.cell for r in world.true_records}
        for rec in result.disclosures:
            if rec.user == 0:
                continue
            true_cell = truth[(rec.user, rec.tick)]
            if true_cell not in result.infected_cells:
                assert rec.cell in k_neighbors(contact_graph, true_cell, float("inf"))

    def test_traced_equals_ground_truth_restriction(self):
        _, world = contact_scenario()
        result = world.trace(0)
        gt_pairs = detect_contacts(world.true_records, world.contact_rule)
        gt = sorted(v if u == 0 else u for u, v in gt_pairs if 0 in (u, v))
        assert list(result.contacts) == gt

    def test_simulate_blocked_until_baseline_reissued(self):
        grid, world = contact_scenario()
        world.trace(0)
        with pytest.raises(ResendPendingError):
            world.step()
        world.issue_policy(build_grid_policy(grid))
        world.step()

    def test_trace_bumps_epochs_with_update_reason(self):
        _, world = contact_scenario()
        before = {u: world.clients[u].directive.epoch for u in world.clients}
        result = world.trace(0)
        for user in result.at_risk:
            directive = world.clients[user].directive
            assert directive.epoch == before[user] + 1
            assert directive.reason == "contact-trace-update"


class TestScenarioConfig:
    def test_parse_round_trip(self):
        text = """
        # demo scenario
        grid = 6x5
        cell_size = 50
        users = 7
        ticks = 30
        epsilon = 0.7
        policy = partition:2
        seed = 3
        beta = 0.25
        """
        cfg = parse_scenario(text)
        assert (cfg.width, cfg.height) == (6, 5)
        assert cfg.cell_size == 50.0
        assert cfg.users == 7
        assert cfg.policy == "partition:2"
        assert cfg.beta == 0.25
        assert cfg.gamma == 0.1  # default

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown scenario key"):
            parse_scenario("flux = 3")

    def test_bad_grid_rejected(self):
        with pytest.raises(ValueError):
            parse_scenario("grid = big")

    def test_unknown_policy_kind_rejected(self):
        grid = GridWorld(2, 2)
        with pytest.raises(ValueError):
            build_policy(grid, "fancy")


class TestRunScenario:
    def test_metrics_deterministic(self):
        cfg = SimConfig(users=5, ticks=30, seed=8)
        _, m1 = run_scenario(cfg)
        _, m2 = run_scenario(cfg)
        assert metrics_json(m1) == metrics_json(m2)

    def test_metrics_structure(self):
        cfg = SimConfig(users=5, ticks=30, seed=8)
        _, metrics = run_scenario(cfg)
        assert metrics["ticks"] == 30
        assert metrics["users"] == 5
        assert metrics["releases"] + metrics["gaps"] == 150
        assert metrics["utility_error"] >= 0.0
        assert metrics["adversary_error"] > 0.0
        assert set(metrics["monitor"]["counts"]) == set(metrics["monitor"]["areas"])

    def test_metrics_json_is_valid(self):
        cfg = SimConfig(users=4, ticks=10, seed=1)
        _, metrics = run_scenario(cfg)
        assert json.loads(metrics_json(metrics))["users"] == 4
