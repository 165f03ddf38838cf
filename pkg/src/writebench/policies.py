"""Reference write policies and the read-only view they act on.

Policies see one step at a time plus a read-only summary of live memory and
emit an ordered action list. All baselines are deterministic. The two
priority-aware baselines additionally read the priority hint injected into
view metadata on the privileged track; the others must work without it.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

from .episodes import Observation
from .memstore import (
    Action,
    ActionKind,
    MemoryState,
    compute_delta,
    delta_bytes,
    effective_observation,
)


@dataclass(frozen=True)
class PolicyParams:
    """Tunables shared by the baselines: sampling stride N and threshold tau."""

    N: int = 10
    tau: float = 0.5

    def validate(self) -> None:
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")


@dataclass(frozen=True)
class ItemView:
    item_id: int
    kind: ActionKind
    timestep: int
    api: str
    charged_bytes: int


class MemoryView:
    """Read-only window onto a MemoryState for policy consumption.

    Item summaries are materialized on first access; views are built before
    the policy's actions are applied, so the window is stable for the step.
    """

    def __init__(self, state: MemoryState) -> None:
        self._state = state
        self._items: tuple | None = None
        self.bytes_used = state.bytes_used
        self.budget_bytes = state.budget_bytes

    @property
    def items(self) -> tuple:
        if self._items is None:
            self._items = tuple(
                ItemView(
                    item_id=item.item_id,
                    kind=item.kind,
                    timestep=item.timestep,
                    api=item.api,
                    charged_bytes=item.charged_bytes,
                )
                for item in self._state.items.values()
            )
        return self._items

    @property
    def bytes_free(self) -> int:
        return self.budget_bytes - self.bytes_used

    def effective_observation(self, item_id: int) -> dict:
        """Observation of a live WRITE item with its deltas applied (a copy)."""
        return copy.deepcopy(effective_observation(self._state, item_id))


@dataclass(frozen=True)
class PolicyView:
    """What a policy is allowed to observe at one step.

    write_cost is the charged byte cost of storing the current step, supplied
    by the harness so that fit checks never depend on track-injected metadata.
    """

    t: int
    observation: Observation
    metadata: dict
    memory: MemoryView
    write_cost: int


def _oldest_first(items) -> list:
    return sorted(items, key=lambda item: (item.timestep, item.item_id))


def _evict_oldest_until_fits(view: PolicyView) -> list:
    """Expire oldest items until the current step fits, then write it.

    A step larger than the whole budget can never fit; in that case nothing
    is evicted and the step is skipped.
    """
    cost = view.write_cost
    if cost > view.memory.budget_bytes:
        return [Action.skip()]
    free = view.memory.bytes_free
    plan = []
    for item in _oldest_first(view.memory.items):
        if cost <= free:
            break
        plan.append(Action.expire(item.item_id))
        free += item.charged_bytes
    plan.append(Action.write())
    return plan


class NoMem:
    """Never stores anything."""

    name = "no_mem"

    def step(self, view: PolicyView) -> list:
        return [Action.skip()]


class FifoStoreAll:
    """Write while the step fits in the remaining budget; never evict."""

    name = "fifo_store_all"

    def step(self, view: PolicyView) -> list:
        if view.write_cost <= view.memory.bytes_free:
            return [Action.write()]
        return [Action.skip()]


class LastKb:
    """Keep a sliding window of the most recent bytes via oldest-first eviction."""

    name = "last_kb"

    def step(self, view: PolicyView) -> list:
        return _evict_oldest_until_fits(view)


class UniformSample:
    """Write every N-th step (t = 0, N, 2N, ...) when it fits; never evict."""

    name = "uniform_sample"

    def __init__(self, stride: int) -> None:
        self.stride = stride

    def step(self, view: PolicyView) -> list:
        if view.t % self.stride == 0 and view.write_cost <= view.memory.bytes_free:
            return [Action.write()]
        return [Action.skip()]


class MergeAggressive:
    """Fold updates into the most recent same-api WRITE item as deltas.

    A pure duplicate (empty delta) is skipped. With no same-api base, or a
    delta that does not fit, falls back to last_kb behaviour for the step.
    """

    name = "merge_aggressive"

    def step(self, view: PolicyView) -> list:
        incoming = view.observation.to_mapping()
        bases = [
            item
            for item in view.memory.items
            if item.kind is ActionKind.WRITE and item.api == incoming["api"]
        ]
        if not bases:
            return _evict_oldest_until_fits(view)
        target = max(bases, key=lambda item: (item.timestep, item.item_id))
        delta = compute_delta(view.memory.effective_observation(target.item_id), incoming)
        if not delta:
            return [Action.skip()]
        if delta_bytes(delta) <= view.memory.bytes_free:
            return [Action.merge(target.item_id, delta)]
        return _evict_oldest_until_fits(view)


def _priority_of(view: PolicyView) -> float:
    try:
        return float(view.metadata["priority"])
    except KeyError:
        raise ValueError(
            "priority-aware policy used without a priority hint "
            "(privileged track required)"
        ) from None


class PriorityThreshold:
    """Write only steps whose priority hint exceeds tau; never evict."""

    name = "priority_threshold"

    def __init__(self, tau: float) -> None:
        self.tau = tau

    def step(self, view: PolicyView) -> list:
        if _priority_of(view) > self.tau and view.write_cost <= view.memory.bytes_free:
            return [Action.write()]
        return [Action.skip()]


class PriorityGreedy:
    """Keep the highest-priority steps, evicting the lowest to make room.

    Eviction picks the live item with the lowest remembered priority (ties:
    oldest timestep, then smallest id) and only proceeds while that priority
    is below the incoming step's. Priorities are remembered per origin
    timestep, since the policy wrote every live item itself.
    """

    name = "priority_greedy"

    def __init__(self) -> None:
        self._seen_priority: dict = {}

    def step(self, view: PolicyView) -> list:
        incoming_priority = _priority_of(view)
        self._seen_priority[view.t] = incoming_priority
        cost = view.write_cost
        free = view.memory.bytes_free
        if cost <= free:
            return [Action.write()]

        candidates = sorted(
            view.memory.items,
            key=lambda item: (
                self._seen_priority.get(item.timestep, 0.0),
                item.timestep,
                item.item_id,
            ),
        )
        plan = []
        for item in candidates:
            if cost <= free:
                break
            if self._seen_priority.get(item.timestep, 0.0) >= incoming_priority:
                return [Action.skip()]
            plan.append(Action.expire(item.item_id))
            free += item.charged_bytes
        if cost > free:
            return [Action.skip()]
        plan.append(Action.write())
        return plan


UNPRIVILEGED_POLICIES = (
    "no_mem",
    "fifo_store_all",
    "last_kb",
    "uniform_sample",
    "merge_aggressive",
)
PRIVILEGED_ONLY_POLICIES = ("priority_threshold", "priority_greedy")
POLICY_NAMES = UNPRIVILEGED_POLICIES + PRIVILEGED_ONLY_POLICIES


def requires_priority(name: str) -> bool:
    return name in PRIVILEGED_ONLY_POLICIES


def make_policy(name: str, params: PolicyParams | None = None):
    """Fresh policy instance; one instance per episode run."""
    params = params or PolicyParams()
    params.validate()
    if name == "no_mem":
        return NoMem()
    if name == "fifo_store_all":
        return FifoStoreAll()
    if name == "last_kb":
        return LastKb()
    if name == "uniform_sample":
        return UniformSample(params.N)
    if name == "merge_aggressive":
        return MergeAggressive()
    if name == "priority_threshold":
        return PriorityThreshold(params.tau)
    if name == "priority_greedy":
        return PriorityGreedy()
    raise ValueError(f"unknown policy {name!r} (known: {', '.join(POLICY_NAMES)})")
