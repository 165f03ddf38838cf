"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -s -q` to see the PASS/FAIL lines.
All checks run at desk scale (T = 200, standard generator parameters,
episode seeds 0..9 shared across conditions via a frozen episode file).
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
import pytest

from writebench.episodes import GeneratorConfig, Observation, Regime, Step, generate_episode
from writebench.memstore import (
    Action,
    ActionKind,
    MemoryState,
    RejectReason,
    apply_action,
    compute_delta,
    effective_observation,
    estimate_bytes,
    retained_timesteps,
)
from writebench.metrics import knapsack_dp, knapsack_greedy
from writebench.policies import make_policy
from writebench.rng import SplitMix64
from writebench.runner import (
    TRACK_PRIVILEGED,
    SweepConfig,
    run_episode,
    run_sweep,
)

BUDGETS = (1024, 10240, 102400, 1048576)


@contextmanager
def criterion(name):
    try:
        yield
    except AssertionError:
        print(f"[FAIL] {name}")
        raise
    else:
        print(f"[PASS] {name}")


def agg_of(sweep, policy, regime="default", track=TRACK_PRIVILEGED, budget=10240):
    return sweep.agg[(regime, track, budget, policy)]


def test_no_mem_is_exactly_zero_everywhere(desk_scale_sweep):
    with criterion("no_mem: F1, write_density, drift_coverage, bytes_used all zero"):
        rows = [r for r in desk_scale_sweep.rows if r["policy"] == "no_mem"]
        assert len(rows) == 4 * 2 * 4 * 10  # regimes x tracks x budgets x episodes
        for row in rows:
            assert row["f1"] == 0.0
            assert row["write_density"] == 0.0
            assert row["drift_coverage"] == 0.0
            assert row["bytes_used"] == 0


def test_saturation_equality_at_top_budget(desk_scale_sweep):
    with criterion("saturation: fifo/last_kb/priority_greedy identical, F1 = 2p/(1+p)"):
        budget = 1048576
        for regime in Regime:
            for episode in desk_scale_sweep.episodes[regime]:
                everything = set(range(episode.config.T))
                outcomes = []
                for name in ("fifo_store_all", "last_kb", "priority_greedy"):
                    state, metrics = run_episode(
                        episode, make_policy(name), budget, TRACK_PRIVILEGED
                    )
                    assert retained_timesteps(state) == everything, (name, regime)
                    outcomes.append(metrics.f1)
                assert outcomes[0] == outcomes[1] == outcomes[2]
                p = len(episode.labels.critical_steps) / episode.config.T
                assert outcomes[0] == pytest.approx(2 * p / (1 + p), abs=1e-9)


def test_priority_threshold_saturates(desk_scale_sweep):
    with criterion("priority_threshold: F1 = 1.000 at budgets >= 10240 (default)"):
        rows = [
            r
            for r in desk_scale_sweep.rows
            if r["policy"] == "priority_threshold"
            and r["regime"] == "default"
            and r["track"] == TRACK_PRIVILEGED
            and r["budget"] >= 10240
        ]
        assert len(rows) == 3 * 10
        assert all(row["f1"] == 1.0 for row in rows)


def test_qualitative_f1_ordering(desk_scale_sweep):
    with criterion("F1 ordering at 10240: threshold > merge > last_kb > fifo > uniform > no_mem"):
        order = (
            "priority_threshold",
            "merge_aggressive",
            "last_kb",
            "fifo_store_all",
            "uniform_sample",
            "no_mem",
        )
        means = [agg_of(desk_scale_sweep, name)["f1_mean"] for name in order]
        for better, worse in zip(means, means[1:]):
            assert better - worse >= 0.01, list(zip(order, means))


def test_diagnostics_orderings(desk_scale_sweep):
    with criterion("diagnostics at 10240: expire/staleness/coverage/utilization shape"):
        fifo = agg_of(desk_scale_sweep, "fifo_store_all")
        last = agg_of(desk_scale_sweep, "last_kb")
        merge = agg_of(desk_scale_sweep, "merge_aggressive")
        threshold = agg_of(desk_scale_sweep, "priority_threshold")
        assert fifo["expire_rate_mean"] == 0.0
        assert last["avg_staleness_mean"] < merge["avg_staleness_mean"] < fifo["avg_staleness_mean"]
        assert threshold["drift_coverage_mean"] == 1.0
        assert merge["drift_coverage_mean"] == 1.0
        assert fifo["utilization_mean"] > 0.95


def test_oracle_against_enumeration():
    with criterion("oracle: DP = enumeration, greedy <= DP, greedy exact when all fits (1000 instances)"):
        rng = SplitMix64(424242)
        trials = 0
        while trials < 1000:
            n = rng.randrange(21)  # n <= 20
            values = [float(1 + rng.randrange(99)) for _ in range(n)]
            weights = [1 + rng.randrange(60) for _ in range(n)]
            capacity = rng.randrange(200)

            sums_v = np.zeros(1)
            sums_w = np.zeros(1, dtype=np.int64)
            for v, w in zip(values, weights):
                sums_v = np.concatenate([sums_v, sums_v + v])
                sums_w = np.concatenate([sums_w, sums_w + w])
            feasible = sums_w <= capacity
            brute = float(sums_v[feasible].max()) if feasible.any() else 0.0

            dp = knapsack_dp(values, weights, capacity)
            greedy = knapsack_greedy(values, weights, capacity)
            assert dp == brute, (values, weights, capacity)
            assert greedy <= dp
            if sum(weights) <= capacity:
                assert greedy == dp == sum(values)
            trials += 1


def _fuzz_steps():
    apis = ("api-0", "api-1", "api-2")
    steps = []
    for t in range(32):
        obs = Observation(
            api=apis[t % 3],
            version=f"v{1 + t // 5}",
            params={"k0": f"{t:04d}"},
            note="n" * (4 + t % 5),
        )
        steps.append(Step(t=t, observation=obs, metadata={"regime": "default"}))
    return steps


def test_budget_safety_fuzz():
    with criterion("budget safety: 10000 fuzzed action sequences, zero violations"):
        rng = SplitMix64(31337)
        steps = _fuzz_steps()
        for _ in range(10_000):
            budget = 60 + rng.randrange(1400)
            state = MemoryState(budget_bytes=budget)
            length = 5 + rng.randrange(len(steps) - 5)
            for step in steps[:length]:
                roll = rng.randrange(6)
                if roll <= 1:
                    action = Action.write()
                elif roll == 2 and state.items:
                    action = Action.expire(rng.choice(list(state.items)))
                elif roll == 3 and state.items:
                    target = rng.choice(list(state.items))
                    item = state.items[target]
                    if item.kind is ActionKind.WRITE and rng.randrange(2):
                        try:
                            delta = compute_delta(
                                effective_observation(state, target), step.observation
                            )
                        except ValueError:
                            delta = {"version": "vZ"}
                    else:
                        delta = {"version": f"v{rng.randrange(30)}"}
                    action = Action.merge(target, delta)
                elif roll == 4:
                    action = Action.expire(rng.randrange(5000))
                else:
                    action = Action.skip()
                apply_action(state, step.t, step, action)
                live_sum = sum(item.charged_bytes for item in state.items.values())
                assert state.bytes_used <= state.budget_bytes
                assert state.bytes_used == live_sum


def test_merge_constraint_suite():
    with criterion("merge constraints: chain/api/canonical/empty rejects + orphan exclusion"):
        def step_for(t, api, version, note="note"):
            return Step(
                t=t,
                observation=Observation(api=api, version=version, params={"k0": "x"}, note=note),
                metadata={"regime": "default"},
            )

        state = MemoryState(budget_bytes=1 << 20)
        apply_action(state, 0, step_for(0, "api-0", "v1"), Action.write())
        base_id = max(state.items)

        ok = apply_action(
            state, 1, step_for(1, "api-0", "v2"), Action.merge(base_id, {"version": "v2"})
        )
        assert ok.accepted
        merge_id = max(state.items)

        chained = apply_action(
            state, 2, step_for(2, "api-0", "v3"), Action.merge(merge_id, {"version": "v3"})
        )
        assert chained.reason is RejectReason.MERGE_BAD_BASE

        cross = apply_action(
            state, 2, step_for(2, "api-1", "v9"), Action.merge(base_id, {"version": "v9"})
        )
        assert cross.reason is RejectReason.MERGE_API_MISMATCH

        noncanon = apply_action(
            state, 2, step_for(2, "api-0", "v3"), Action.merge(base_id, {"note": "wrong"})
        )
        assert noncanon.reason is RejectReason.MERGE_NONCANONICAL_DELTA

        empty = apply_action(
            state, 2, step_for(2, "api-0", "v2"), Action.merge(base_id, {})
        )
        assert empty.reason is RejectReason.MERGE_EMPTY_DELTA

        # orphan the delta: its timestep disappears from the retained set
        assert retained_timesteps(state) == {0, 1}
        expired = apply_action(state, 3, step_for(3, "api-0", "v2"), Action.expire(base_id))
        assert expired.accepted
        assert merge_id in state.items
        assert retained_timesteps(state) == set()


def test_two_sweeps_are_byte_identical(desk_scale_sweep):
    with criterion("determinism: repeated sweep over frozen episodes is byte-identical"):
        rerun_cfg = SweepConfig(
            episode_file=str(desk_scale_sweep.frozen),
            output_dir=str(desk_scale_sweep.root / "rerun"),
        )
        results_path, aggregate_path = run_sweep(rerun_cfg)
        with open(desk_scale_sweep.results_path, "rb") as fh:
            first_results = fh.read()
        with open(results_path, "rb") as fh:
            assert fh.read() == first_results
        with open(desk_scale_sweep.aggregate_path, "rb") as fh:
            first_agg = fh.read()
        with open(aggregate_path, "rb") as fh:
            assert fh.read() == first_agg


def test_saturating_budget_exceeds_stream_cost(desk_scale_sweep):
    # Supporting check for the saturation criterion: the top budget really is
    # larger than any episode's total storage cost.
    with criterion("top budget exceeds total stream cost in every regime"):
        for regime in Regime:
            for episode in desk_scale_sweep.episodes[regime]:
                total = sum(estimate_bytes(step) for step in episode.steps)
                assert total < 1048576
