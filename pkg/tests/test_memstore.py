from __future__ import annotations

import copy

import pytest

from writebench.canonical import dumps
from writebench.episodes import GeneratorConfig, Observation, Step, generate_episode
from writebench.memstore import (
    Action,
    ActionKind,
    MemoryState,
    RejectReason,
    apply_action,
    check_accounting,
    compute_delta,
    delta_bytes,
    effective_observation,
    estimate_bytes,
    log_lines,
    retained_timesteps,
)
from writebench.rng import SplitMix64


def make_step(t=0, api="api-0", version="v1", params=None, note="abcdefgh", regime="default"):
    observation = Observation(
        api=api, version=version, params=params or {"k0": "00000000"}, note=note
    )
    return Step(t=t, observation=observation, metadata={"regime": regime})


def write_one(state, t=0, **kwargs):
    step = make_step(t=t, **kwargs)
    record = apply_action(state, t, step, Action.write())
    assert record.accepted
    return max(state.items), step


# ---------------------------------------------------------------------------
# estimate_bytes
# ---------------------------------------------------------------------------


def test_estimate_bytes_hand_counted_minimal_envelope():
    # {"m":{},"x":{"api":"a"}} is 24 bytes, plus the 48-byte fixed overhead.
    step = Step(t=0, observation={"api": "a"}, metadata={})
    assert len(dumps({"m": {}, "x": {"api": "a"}}).encode()) == 24
    assert estimate_bytes(step) == 72


def test_estimate_bytes_deterministic_and_time_independent():
    a = make_step(t=1)
    b = make_step(t=177)
    assert estimate_bytes(a) == estimate_bytes(b)


def test_estimate_bytes_lower_bound():
    for seed in range(3):
        episode = generate_episode(GeneratorConfig(T=30, seed=seed))
        assert all(estimate_bytes(step) >= 48 + 13 for step in episode.steps)


# ---------------------------------------------------------------------------
# compute_delta
# ---------------------------------------------------------------------------


def test_delta_single_field_change():
    old = make_step(version="v1").observation
    new = make_step(version="v2").observation
    assert compute_delta(old.to_mapping(), new) == {"version": "v2"}


def test_delta_identity_is_empty():
    obs = make_step().observation
    assert compute_delta(obs.to_mapping(), obs) == {}


def test_delta_params_change_is_atomic():
    old = make_step(version="v1", params={"k0": "aa", "k1": "bb"}).observation
    new = make_step(version="v2", params={"k0": "aa", "k1": "cc"}).observation
    # Field-wise comparison: version differs, params differs as one field,
    # note and api match; the delta carries the full incoming params mapping.
    expected = {}
    for field in ("version", "params", "note"):
        if getattr(old, field) != getattr(new, field):
            expected[field] = getattr(new, field)
    delta = compute_delta(old.to_mapping(), new)
    assert delta == expected
    assert delta["params"] == {"k0": "aa", "k1": "cc"}


def test_delta_api_mismatch_is_caller_error():
    a = make_step(api="api-0").observation
    b = make_step(api="api-1").observation
    with pytest.raises(ValueError):
        compute_delta(a.to_mapping(), b)


# ---------------------------------------------------------------------------
# apply_action
# ---------------------------------------------------------------------------


def test_write_rejected_when_over_budget():
    state = MemoryState(budget_bytes=64)
    step = Step(t=0, observation={"api": "a"}, metadata={})  # costs 72
    record = apply_action(state, 0, step, Action.write())
    assert record.outcome == "rejected"
    assert record.reason is RejectReason.OVER_BUDGET
    assert record.bytes_delta == 0
    assert state.bytes_used == 0
    assert not state.items


def test_write_accepted_at_exact_budget():
    step = Step(t=0, observation={"api": "a"}, metadata={})
    state = MemoryState(budget_bytes=72)
    record = apply_action(state, 0, step, Action.write())
    assert record.accepted
    assert state.bytes_used == 72


def test_expire_same_timestep_rejected():
    state = MemoryState(budget_bytes=10_000)
    item_id, _ = write_one(state, t=5)
    record = apply_action(state, 5, make_step(t=5), Action.expire(item_id))
    assert record.reason is RejectReason.EXPIRE_TOO_YOUNG
    assert item_id in state.items


def test_expire_credits_original_cost():
    state = MemoryState(budget_bytes=10_000)
    before = state.bytes_used
    item_id, step = write_one(state, t=3)
    cost = estimate_bytes(step)
    record = apply_action(state, 4, make_step(t=4), Action.expire(item_id))
    assert record.accepted
    assert record.bytes_delta == -cost
    assert state.bytes_used == before


def test_expire_missing_target():
    state = MemoryState(budget_bytes=10_000)
    record = apply_action(state, 1, make_step(t=1), Action.expire(42))
    assert record.reason is RejectReason.MISSING_TARGET


def test_skip_always_accepted():
    state = MemoryState(budget_bytes=1)
    record = apply_action(state, 0, make_step(), Action.skip())
    assert record.accepted
    assert record.bytes_delta == 0


def test_merge_accepted_and_charged():
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=0, version="v1")
    incoming = make_step(t=1, version="v2")
    delta = {"version": "v2"}
    used_before = state.bytes_used
    record = apply_action(state, 1, incoming, Action.merge(base_id, delta))
    assert record.accepted
    assert record.bytes_delta == delta_bytes(delta)
    assert state.bytes_used == used_before + delta_bytes(delta)
    assert retained_timesteps(state) == {0, 1}


def test_merge_to_merge_rejected():
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=0, version="v1")
    apply_action(state, 1, make_step(t=1, version="v2"), Action.merge(base_id, {"version": "v2"}))
    merge_id = max(state.items)
    record = apply_action(
        state, 2, make_step(t=2, version="v3"), Action.merge(merge_id, {"version": "v3"})
    )
    assert record.reason is RejectReason.MERGE_BAD_BASE


def test_merge_cross_api_rejected():
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=0, api="api-0")
    record = apply_action(
        state, 1, make_step(t=1, api="api-1", version="v2"), Action.merge(base_id, {"version": "v2"})
    )
    assert record.reason is RejectReason.MERGE_API_MISMATCH


def test_merge_noncanonical_delta_rejected():
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=0, version="v1")
    record = apply_action(
        state, 1, make_step(t=1, version="v2"), Action.merge(base_id, {"note": "zzzz"})
    )
    assert record.reason is RejectReason.MERGE_NONCANONICAL_DELTA


def test_merge_empty_delta_rejected():
    state = MemoryState(budget_bytes=10_000)
    base_id, step = write_one(state, t=0)
    record = apply_action(state, 1, make_step(t=1), Action.merge(base_id, {}))
    assert record.reason is RejectReason.MERGE_EMPTY_DELTA


def test_merge_over_budget_rejected():
    state = MemoryState(budget_bytes=200)
    base_id, _ = write_one(state, t=0, version="v1")
    incoming = make_step(t=1, version="v2", note="n" * 16)
    delta = compute_delta(effective_observation(state, base_id), incoming.observation)
    assert state.bytes_used + delta_bytes(delta) > state.budget_bytes
    record = apply_action(state, 1, incoming, Action.merge(base_id, delta))
    assert record.reason is RejectReason.OVER_BUDGET


def test_merge_delta_validated_against_effective_state():
    # After one merge lands, repeating the same change must read as a no-op:
    # the stale delta is non-canonical, and the canonical empty delta is
    # rejected outright.
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=0, version="v1")
    incoming = make_step(t=1, version="v2")
    apply_action(state, 1, incoming, Action.merge(base_id, {"version": "v2"}))
    stale = apply_action(
        state, 2, make_step(t=2, version="v2"), Action.merge(base_id, {"version": "v2"})
    )
    assert stale.reason is RejectReason.MERGE_NONCANONICAL_DELTA
    empty = apply_action(state, 2, make_step(t=2, version="v2"), Action.merge(base_id, {}))
    assert empty.reason is RejectReason.MERGE_EMPTY_DELTA
    assert effective_observation(state, base_id)["version"] == "v2"


def test_rejection_leaves_state_bit_identical():
    state = MemoryState(budget_bytes=300)
    write_one(state, t=0)
    items_before = copy.deepcopy(state.items)
    used_before = state.bytes_used
    apply_action(state, 1, make_step(t=1), Action.write())  # over budget
    apply_action(state, 1, make_step(t=1), Action.expire(999))
    apply_action(state, 1, make_step(t=1), Action.merge(999, {"version": "v9"}))
    assert state.items == items_before
    assert state.bytes_used == used_before


# ---------------------------------------------------------------------------
# retained_timesteps
# ---------------------------------------------------------------------------


def test_retained_empty_memory():
    assert retained_timesteps(MemoryState(budget_bytes=100)) == set()


def test_retained_write_plus_merge():
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=7)
    apply_action(state, 9, make_step(t=9, version="v2"), Action.merge(base_id, {"version": "v2"}))
    assert retained_timesteps(state) == {7, 9}


def test_orphan_delta_not_retained():
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=7)
    apply_action(state, 9, make_step(t=9, version="v2"), Action.merge(base_id, {"version": "v2"}))
    record = apply_action(state, 10, make_step(t=10), Action.expire(base_id))
    assert record.accepted
    # The delta is still live (and still charged) but no longer counts.
    assert any(item.kind is ActionKind.MERGE for item in state.items.values())
    assert retained_timesteps(state) == set()


def test_expire_can_target_merge_items():
    state = MemoryState(budget_bytes=10_000)
    base_id, _ = write_one(state, t=0)
    apply_action(state, 1, make_step(t=1, version="v2"), Action.merge(base_id, {"version": "v2"}))
    merge_id = max(state.items)
    used = state.bytes_used
    record = apply_action(state, 2, make_step(t=2), Action.expire(merge_id))
    assert record.accepted
    assert state.bytes_used < used
    assert retained_timesteps(state) == {0}


# ---------------------------------------------------------------------------
# Fuzzed accounting and log completeness
# ---------------------------------------------------------------------------


def _random_action(rng, state, step):
    roll = rng.randrange(5)
    if roll == 0:
        return Action.write()
    if roll == 1 and state.items:
        return Action.expire(rng.choice(list(state.items)))
    if roll == 2 and state.items:
        target = rng.choice(list(state.items))
        if rng.randrange(2):
            try:
                delta = compute_delta(effective_observation(state, target), step.observation)
            except (ValueError, KeyError):
                delta = {"version": "vX"}
        else:
            delta = {"version": f"v{rng.randrange(50)}"}
        return Action.merge(target, delta)
    if roll == 3 and state.items:
        return Action.expire(rng.randrange(10_000))
    return Action.skip()


def test_fuzzed_sequences_preserve_accounting_and_merge_rules():
    rng = SplitMix64(5150)
    episode = generate_episode(GeneratorConfig(T=40, seed=8))
    for trial in range(300):
        budget = 100 + rng.randrange(4000)
        state = MemoryState(budget_bytes=budget)
        applied = 0
        expired_writes = 0
        for step in episode.steps:
            action = _random_action(rng, state, step)
            if action.kind is ActionKind.EXPIRE:
                target = state.items.get(action.target_id)
                will_expire_write = (
                    target is not None
                    and target.kind is ActionKind.WRITE
                    and target.timestep < step.t
                )
            else:
                will_expire_write = False
            record = apply_action(state, step.t, step, action)
            expired_writes += will_expire_write and record.accepted
            applied += 1
            check_accounting(state)
        # merge chain prohibition: every live merge points at a write item
        for item in state.items.values():
            if item.kind is ActionKind.MERGE:
                base = state.items.get(item.base_id)
                assert base is None or base.kind is ActionKind.WRITE
        assert len(state.log) == applied
        accepted_writes = sum(
            1 for r in state.log if r.accepted and r.action.kind is ActionKind.WRITE
        )
        live_writes = sum(1 for i in state.items.values() if i.kind is ActionKind.WRITE)
        assert accepted_writes == live_writes + expired_writes


def test_log_serializes_one_record_per_line():
    state = MemoryState(budget_bytes=10_000)
    write_one(state, t=0)
    apply_action(state, 1, make_step(t=1), Action.skip())
    apply_action(state, 1, make_step(t=1), Action.expire(999))
    lines = log_lines(state)
    assert len(lines) == len(state.log) == 3
    import json

    parsed = [json.loads(line) for line in lines]
    assert parsed[0]["outcome"] == "accepted"
    assert parsed[2]["reason"] == "missing_target"
