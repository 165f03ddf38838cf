"""Fast invariant suite runnable from the CLI, independent of pytest.

Covers the determinism, accounting, and scoring invariants that guard
against benchmark regressions: generator determinism and label soundness,
budget safety under fuzzed action sequences, merge/expire constraint
enforcement, oracle correctness on small instances, and the forced metric
values of degenerate policies.
"""

from __future__ import annotations

from .episodes import GeneratorConfig, Regime, generate_episode
from .memstore import (
    Action,
    MemoryState,
    RejectReason,
    apply_action,
    check_accounting,
    estimate_bytes,
    retained_timesteps,
)
from .metrics import MetricsConfig, knapsack_dp, knapsack_greedy
from .policies import make_policy
from .rng import SplitMix64
from .runner import TRACK_PRIVILEGED, TRACK_UNPRIVILEGED, run_episode


def _check_generator_determinism() -> None:
    for regime in Regime:
        config = GeneratorConfig(regime=regime, seed=7)
        assert generate_episode(config) == generate_episode(config)


def _check_label_soundness() -> None:
    for seed in range(5):
        episode = generate_episode(GeneratorConfig(seed=seed))
        labels = episode.labels
        assert len(labels.critical_steps) == labels.total_drift_events
        for t in range(episode.config.T):
            critical = t in labels.critical_steps
            assert (labels.priority[t] > 0.5) == critical
            assert (labels.utility[t] == 1.0) == critical


def _check_no_mem_zero() -> None:
    episode = generate_episode(GeneratorConfig(seed=0))
    state, metrics = run_episode(episode, make_policy("no_mem"), 10240, TRACK_UNPRIVILEGED)
    assert state.bytes_used == 0
    assert metrics.f1 == 0.0
    assert metrics.write_density == 0.0
    assert metrics.drift_coverage == 0.0


def _check_saturation() -> None:
    episode = generate_episode(GeneratorConfig(seed=1))
    budget = 1_048_576
    everything = set(range(episode.config.T))
    for name, track in (
        ("fifo_store_all", TRACK_UNPRIVILEGED),
        ("last_kb", TRACK_UNPRIVILEGED),
        ("priority_greedy", TRACK_PRIVILEGED),
    ):
        state, _ = run_episode(episode, make_policy(name), budget, track)
        assert retained_timesteps(state) == everything, name


def _check_budget_fuzz(sequences: int = 500) -> None:
    rng = SplitMix64(2024)
    episode = generate_episode(GeneratorConfig(T=30, seed=3))
    for _ in range(sequences):
        budget = 64 + rng.randrange(2048)
        state = MemoryState(budget_bytes=budget)
        for step in episode.steps:
            roll = rng.randrange(4)
            if roll == 0:
                action = Action.write()
            elif roll == 1 and state.items:
                action = Action.expire(rng.choice(list(state.items)))
            elif roll == 2 and state.items:
                target = rng.choice(list(state.items))
                action = Action.merge(target, {"version": f"v{rng.randrange(99)}"})
            else:
                action = Action.skip()
            apply_action(state, step.t, step, action)
            check_accounting(state)


def _check_merge_constraints() -> None:
    from .episodes import Observation, Step

    def step_for(t, api, version):
        return Step(
            t=t,
            observation=Observation(api=api, version=version, params={"k0": "0"}, note="n"),
            metadata={"regime": "default"},
        )

    state = MemoryState(budget_bytes=1 << 20)
    apply_action(state, 0, step_for(0, "api-0", "v1"), Action.write())
    base_id = next(iter(state.items))

    record = apply_action(state, 1, step_for(1, "api-0", "v1"), Action.merge(base_id, {}))
    assert record.reason is RejectReason.MERGE_EMPTY_DELTA

    record = apply_action(
        state, 1, step_for(1, "api-1", "v2"), Action.merge(base_id, {"version": "v2"})
    )
    assert record.reason is RejectReason.MERGE_API_MISMATCH

    record = apply_action(
        state, 1, step_for(1, "api-0", "v2"), Action.merge(base_id, {"note": "x"})
    )
    assert record.reason is RejectReason.MERGE_NONCANONICAL_DELTA

    record = apply_action(
        state, 1, step_for(1, "api-0", "v2"), Action.merge(999, {"version": "v2"})
    )
    assert record.reason is RejectReason.MISSING_TARGET

    record = apply_action(
        state, 1, step_for(1, "api-0", "v2"), Action.merge(base_id, {"version": "v2"})
    )
    assert record.accepted
    merge_id = max(state.items)
    record = apply_action(
        state, 2, step_for(2, "api-0", "v3"), Action.merge(merge_id, {"version": "v3"})
    )
    assert record.reason is RejectReason.MERGE_BAD_BASE


def _check_expire_credit() -> None:
    episode = generate_episode(GeneratorConfig(seed=5))
    state = MemoryState(budget_bytes=1 << 20)
    step = episode.steps[0]
    before = state.bytes_used
    apply_action(state, 0, step, Action.write())
    item_id = next(iter(state.items))
    record = apply_action(state, 1, step, Action.expire(item_id))
    assert record.accepted
    assert state.bytes_used == before
    assert record.bytes_delta == -estimate_bytes(step)


def _check_oracle_small() -> None:
    rng = SplitMix64(99)
    for _ in range(200):
        n = rng.randrange(11)
        values = [1 + rng.randrange(50) / 10.0 for _ in range(n)]
        weights = [1 + rng.randrange(30) for _ in range(n)]
        capacity = rng.randrange(60)
        best = 0.0
        for mask in range(1 << n):
            w = v = 0.0
            for i in range(n):
                if mask >> i & 1:
                    w += weights[i]
                    v += values[i]
            if w <= capacity and v > best:
                best = v
        dp = knapsack_dp(values, weights, capacity)
        greedy = knapsack_greedy(values, weights, capacity)
        assert abs(dp - best) < 1e-9, (values, weights, capacity)
        assert greedy <= dp + 1e-9


_CHECKS = (
    ("generator determinism", _check_generator_determinism),
    ("label soundness and priority separation", _check_label_soundness),
    ("no_mem yields zero usage and scores", _check_no_mem_zero),
    ("write-all policies saturate at large budgets", _check_saturation),
    ("budget safety under fuzzed action sequences", _check_budget_fuzz),
    ("merge constraint rejections", _check_merge_constraints),
    ("expire credits the original byte cost", _check_expire_credit),
    ("knapsack oracle matches enumeration", _check_oracle_small),
)


def run_selftest() -> bool:
    """Run every check; print one line each; True when all pass."""
    all_ok = True
    for label, check in _CHECKS:
        try:
            check()
        except AssertionError as exc:
            print(f"[FAIL] {label}: {exc}")
            all_ok = False
        else:
            print(f"[ok]   {label}")
    return all_ok
