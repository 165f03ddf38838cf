"""Budgeted external memory: byte costing, action application, action log.

The store is append-only with explicit actions. Every mutation goes through
apply_action, which enforces the byte budget and the action constraints and
appends one record per attempt to the state's log. A rejected action leaves
the store untouched.

Byte model: a stored step is charged the canonical-JSON length of the
envelope {"m": metadata, "x": observation} plus 48 bytes of fixed overhead
(32-byte header + 16-byte index entry). A merge delta is charged its
canonical-JSON length plus a 16-byte index entry only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from . import canonical
from .episodes import Observation, Step

WRITE_OVERHEAD_BYTES = 48  # 32-byte header + 16-byte index entry
MERGE_OVERHEAD_BYTES = 16  # index entry only


class ActionKind(str, Enum):
    WRITE = "WRITE"
    MERGE = "MERGE"
    EXPIRE = "EXPIRE"
    SKIP = "SKIP"


class RejectReason(str, Enum):
    OVER_BUDGET = "over_budget"
    EXPIRE_TOO_YOUNG = "expire_too_young"
    MERGE_BAD_BASE = "merge_bad_base"
    MERGE_API_MISMATCH = "merge_api_mismatch"
    MERGE_NONCANONICAL_DELTA = "merge_noncanonical_delta"
    MERGE_EMPTY_DELTA = "merge_empty_delta"
    MISSING_TARGET = "missing_target"


@dataclass(frozen=True)
class Action:
    """One memory command. Use the factory constructors, not __init__.

    WRITE stores the step the harness is currently applying, so it carries
    no payload of its own; MERGE and EXPIRE reference an existing item.
    """

    kind: ActionKind
    target_id: Optional[int] = None
    delta: Optional[dict] = None

    @staticmethod
    def write() -> "Action":
        return Action(ActionKind.WRITE)

    @staticmethod
    def merge(target_id: int, delta: dict) -> "Action":
        return Action(ActionKind.MERGE, target_id=target_id, delta=dict(delta))

    @staticmethod
    def expire(target_id: int) -> "Action":
        return Action(ActionKind.EXPIRE, target_id=target_id)

    @staticmethod
    def skip() -> "Action":
        return Action(ActionKind.SKIP)

    def to_mapping(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.target_id is not None:
            out["target_id"] = self.target_id
        if self.delta is not None:
            out["delta"] = self.delta
        return out


@dataclass(frozen=True)
class ActionRecord:
    t: int
    action: Action
    outcome: str  # "accepted" | "rejected"
    reason: Optional[RejectReason]
    bytes_delta: int

    @property
    def accepted(self) -> bool:
        return self.outcome == "accepted"

    def to_mapping(self) -> dict:
        return {
            "t": self.t,
            "action": self.action.to_mapping(),
            "outcome": self.outcome,
            "reason": self.reason.value if self.reason else None,
            "bytes_delta": self.bytes_delta,
        }


@dataclass(frozen=True)
class MemoryItem:
    item_id: int
    kind: ActionKind
    timestep: int
    api: str
    payload: dict  # WRITE: {"m": metadata, "x": observation}; MERGE: delta
    charged_bytes: int
    base_id: Optional[int] = None


@dataclass
class MemoryState:
    """Live items plus byte accounting and the append-only action log."""

    budget_bytes: int
    bytes_used: int = 0
    items: dict = field(default_factory=dict)  # item_id -> MemoryItem, insertion order
    log: list = field(default_factory=list)
    _next_item_id: int = 0

    def live_items(self) -> list:
        return list(self.items.values())


def _obs_mapping(observation) -> dict:
    if isinstance(observation, Observation):
        return observation.to_mapping()
    if isinstance(observation, Mapping):
        return dict(observation)
    raise TypeError(f"observation must be Observation or mapping, got {type(observation)!r}")


def estimate_bytes(step: Step) -> int:
    """Charged byte cost of storing a step: envelope length plus overhead."""
    envelope = {"m": dict(step.metadata), "x": _obs_mapping(step.observation)}
    return canonical.byte_len(envelope) + WRITE_OVERHEAD_BYTES


def delta_bytes(delta: Mapping) -> int:
    """Charged byte cost of a merge delta."""
    return canonical.byte_len(dict(delta)) + MERGE_OVERHEAD_BYTES


def effective_observation(state: MemoryState, base_id: int) -> dict:
    """Base item's observation with its live deltas applied in insertion order."""
    base = state.items[base_id]
    if base.kind is not ActionKind.WRITE:
        raise ValueError(f"item {base_id} is not a WRITE item")
    effective = dict(base.payload["x"])
    for item in state.items.values():
        if item.kind is ActionKind.MERGE and item.base_id == base_id:
            effective.update(item.payload)
    return effective


def compute_delta(effective: Mapping, incoming) -> dict:
    """Shallow field diff of two observations, excluding the api identity.

    Compares top-level fields only; params counts as one atomic field, so a
    change to any parameter key puts the full incoming params mapping in the
    delta. Values come from the incoming side. Empty mapping means no change.
    """
    incoming_map = _obs_mapping(incoming)
    effective_map = dict(effective)
    if effective_map.get("api") != incoming_map.get("api"):
        raise ValueError("compute_delta requires matching api identities")
    return {
        key: value
        for key, value in incoming_map.items()
        if key != "api" and effective_map.get(key) != value
    }


def _insert(state: MemoryState, item: MemoryItem) -> None:
    state.items[item.item_id] = item
    state.bytes_used += item.charged_bytes


def apply_action(state: MemoryState, t: int, step: Step, action: Action) -> ActionRecord:
    """Apply one action at step t; returns the appended log record.

    The step argument is the step currently being processed by the harness:
    WRITE stores it and MERGE diffs against it. Rejections never mutate
    items or byte accounting.
    """
    record = _apply(state, t, step, action)
    state.log.append(record)
    return record


def _reject(t: int, action: Action, reason: RejectReason) -> ActionRecord:
    return ActionRecord(t=t, action=action, outcome="rejected", reason=reason, bytes_delta=0)


def _accept(t: int, action: Action, bytes_delta: int) -> ActionRecord:
    return ActionRecord(t=t, action=action, outcome="accepted", reason=None, bytes_delta=bytes_delta)


def _apply(state: MemoryState, t: int, step: Step, action: Action) -> ActionRecord:
    if action.kind is ActionKind.SKIP:
        return _accept(t, action, 0)

    if action.kind is ActionKind.WRITE:
        cost = estimate_bytes(step)
        if state.bytes_used + cost > state.budget_bytes:
            return _reject(t, action, RejectReason.OVER_BUDGET)
        obs = _obs_mapping(step.observation)
        item = MemoryItem(
            item_id=state._next_item_id,
            kind=ActionKind.WRITE,
            timestep=t,
            api=obs["api"],
            payload={"m": dict(step.metadata), "x": obs},
            charged_bytes=cost,
        )
        state._next_item_id += 1
        _insert(state, item)
        return _accept(t, action, cost)

    if action.kind is ActionKind.MERGE:
        target = state.items.get(action.target_id)
        if target is None:
            return _reject(t, action, RejectReason.MISSING_TARGET)
        if target.kind is not ActionKind.WRITE:
            return _reject(t, action, RejectReason.MERGE_BAD_BASE)
        incoming = _obs_mapping(step.observation)
        if target.api != incoming.get("api"):
            return _reject(t, action, RejectReason.MERGE_API_MISMATCH)
        expected = compute_delta(effective_observation(state, target.item_id), incoming)
        if action.delta != expected:
            return _reject(t, action, RejectReason.MERGE_NONCANONICAL_DELTA)
        if not expected:
            return _reject(t, action, RejectReason.MERGE_EMPTY_DELTA)
        cost = delta_bytes(expected)
        if state.bytes_used + cost > state.budget_bytes:
            return _reject(t, action, RejectReason.OVER_BUDGET)
        item = MemoryItem(
            item_id=state._next_item_id,
            kind=ActionKind.MERGE,
            timestep=t,
            api=target.api,
            payload=dict(expected),
            charged_bytes=cost,
            base_id=target.item_id,
        )
        state._next_item_id += 1
        _insert(state, item)
        return _accept(t, action, cost)

    if action.kind is ActionKind.EXPIRE:
        target = state.items.get(action.target_id)
        if target is None:
            return _reject(t, action, RejectReason.MISSING_TARGET)
        if target.timestep >= t:
            return _reject(t, action, RejectReason.EXPIRE_TOO_YOUNG)
        del state.items[target.item_id]
        state.bytes_used -= target.charged_bytes
        return _accept(t, action, -target.charged_bytes)

    raise ValueError(f"unknown action kind {action.kind!r}")


def retained_timesteps(state: MemoryState) -> set:
    """Timesteps represented in live memory.

    WRITE items always contribute; MERGE items contribute only while their
    base WRITE is still live with a matching api (orphan deltas do not
    count). Duplicate timesteps collapse: this is a set.
    """
    retained: set = set()
    for item in state.items.values():
        if item.kind is ActionKind.WRITE:
            retained.add(item.timestep)
        elif item.kind is ActionKind.MERGE:
            base = state.items.get(item.base_id)
            if base is not None and base.kind is ActionKind.WRITE and base.api == item.api:
                retained.add(item.timestep)
    return retained


def check_accounting(state: MemoryState) -> None:
    """Assert the byte-accounting invariants; raises AssertionError on drift."""
    live_sum = sum(item.charged_bytes for item in state.items.values())
    assert state.bytes_used == live_sum, (state.bytes_used, live_sum)
    assert 0 <= state.bytes_used <= state.budget_bytes


def log_lines(state: MemoryState) -> list:
    """Action log as line-delimited canonical JSON, one record per line."""
    return [canonical.dumps(record.to_mapping()) for record in state.log]
