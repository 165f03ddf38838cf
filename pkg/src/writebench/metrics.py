"""Scoring for finished runs: retrieval quality, budget diagnostics, regret.

The retained-timestep set W of the final memory is scored against the hidden
critical set R with epsilon-stabilized precision/recall/F1. Budget behaviour
is summarized by utilization, write density, expire rate, staleness, and
drift coverage. Regret compares retained utility against a store-only oracle:
the best utility any policy could retain by pure storage, i.e. a 0/1 knapsack
over (per-step utility, per-step byte cost). The oracle is solved exactly by
dynamic programming up to a configured byte capacity and by a density-greedy
approximation above it; greedy results are labelled as approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .episodes import Episode
from .memstore import ActionKind, MemoryState, estimate_bytes, retained_timesteps

ORACLE_DP = "dp"
ORACLE_GREEDY = "greedy"


@dataclass(frozen=True)
class MetricsConfig:
    epsilon: float = 1e-9
    # Above this byte capacity the exact DP table gets large; fall back to the
    # density-greedy approximation (exact whenever everything fits anyway).
    dp_budget_limit: int = 262_144

    def validate(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.dp_budget_limit <= 0:
            raise ValueError("dp_budget_limit must be > 0")


@dataclass(frozen=True)
class EpisodeMetrics:
    """All scalar metrics for one (policy, budget, episode) run."""

    precision: float
    recall: float
    f1: float
    utilization: float
    write_density: float
    expire_rate: float
    avg_staleness: float
    drift_coverage: float
    retained_utility: float
    utility_per_kb: float
    oracle_utility: float
    regret_write_only: float
    oracle_method: str
    bytes_used: int
    budget_bytes: int
    T: int

    def to_mapping(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "utilization": self.utilization,
            "write_density": self.write_density,
            "expire_rate": self.expire_rate,
            "avg_staleness": self.avg_staleness,
            "drift_coverage": self.drift_coverage,
            "retained_utility": self.retained_utility,
            "utility_per_kb": self.utility_per_kb,
            "oracle_utility": self.oracle_utility,
            "regret_write_only": self.regret_write_only,
            "oracle_method": self.oracle_method,
            "bytes_used": self.bytes_used,
            "budget_bytes": self.budget_bytes,
            "T": self.T,
        }


def prf1(W: set, R: set, eps: float) -> tuple:
    """Epsilon-stabilized precision, recall and F1 of W against R."""
    hits = len(W & R)
    precision = hits / (len(W) + eps)
    recall = hits / (len(R) + eps)
    f1 = 2.0 * precision * recall / (precision + recall + eps)
    return precision, recall, f1


def utility_per_kb(retained_utility: float, bytes_used: int) -> float:
    """Retained utility per kilobyte of memory used; 0 for empty memory."""
    if bytes_used == 0:
        return 0.0
    return retained_utility / (bytes_used / 1024.0)


def diagnostics(final_state: MemoryState, episode: Episode, eps: float = 1e-9) -> dict:
    """Budget-behaviour diagnostics of a completed run.

    expire_rate counts accepted actions only and is 0 when nothing was
    written; avg_staleness averages item age over all live items and is 0
    for empty memory; write_density is 0 for an empty episode.
    """
    T = episode.config.T
    W = retained_timesteps(final_state)
    R = set(episode.labels.critical_steps)

    accepted_writes = 0
    accepted_expires = 0
    for record in final_state.log:
        if record.accepted and record.action.kind is ActionKind.WRITE:
            accepted_writes += 1
        elif record.accepted and record.action.kind is ActionKind.EXPIRE:
            accepted_expires += 1

    live = final_state.live_items()
    avg_staleness = (
        sum((T - 1) - item.timestep for item in live) / len(live) if live else 0.0
    )
    return {
        "utilization": final_state.bytes_used / final_state.budget_bytes,
        "write_density": len(W) / T if T > 0 else 0.0,
        "expire_rate": accepted_expires / accepted_writes if accepted_writes else 0.0,
        "avg_staleness": avg_staleness,
        "drift_coverage": len(W & R) / (len(R) + eps),
    }


def _validate_instance(values: Sequence[float], weights: Sequence[int]) -> None:
    if len(values) != len(weights):
        raise ValueError("values and weights must have equal length")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    if any(v < 0 for v in values):
        raise ValueError("values must be non-negative")


def knapsack_dp(values: Sequence[float], weights: Sequence[int], capacity: int) -> float:
    """Exact 0/1 knapsack via the classic capacity-indexed table."""
    _validate_instance(values, weights)
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    best = np.zeros(capacity + 1, dtype=np.float64)
    free_value = 0.0  # weight-0 items are always taken
    for value, weight in zip(values, weights):
        if weight == 0:
            free_value += value
        elif weight <= capacity:
            np.maximum(best[weight:], best[: capacity + 1 - weight] + value, out=best[weight:])
    return float(best[capacity]) + free_value


def knapsack_greedy(values: Sequence[float], weights: Sequence[int], capacity: int) -> float:
    """Density-greedy knapsack approximation: take by value/weight, descending.

    Ties break on the original index. Exact whenever the full item set fits.
    """
    _validate_instance(values, weights)
    order = sorted(
        range(len(values)),
        key=lambda i: (-(values[i] / weights[i]) if weights[i] else float("-inf"), i),
    )
    total_value = 0.0
    remaining = capacity
    for i in order:
        if weights[i] == 0:
            total_value += values[i]
        elif weights[i] <= remaining:
            total_value += values[i]
            remaining -= weights[i]
    return total_value


def oracle_write_only(
    values: Sequence[float],
    weights: Sequence[int],
    budget: int,
    cfg: MetricsConfig,
) -> float:
    """Best utility retainable by storage alone under the byte budget."""
    if budget <= cfg.dp_budget_limit:
        return knapsack_dp(values, weights, budget)
    return knapsack_greedy(values, weights, budget)


def oracle_method(budget: int, cfg: MetricsConfig) -> str:
    return ORACLE_DP if budget <= cfg.dp_budget_limit else ORACLE_GREEDY


def episode_weights(episode: Episode) -> list:
    """Per-step byte costs under the store cost model (the oracle's weights)."""
    return [estimate_bytes(step) for step in episode.steps]


def regret_write_only(W: set, episode: Episode, budget: int, cfg: MetricsConfig) -> float:
    """Clamped gap between the storage oracle and the retained utility.

    Delta-based policies can retain more utility than any pure-storage
    selection; the clamp reports such runs as zero regret.
    """
    retained = sum(episode.labels.utility[t] for t in W)
    best = oracle_write_only(
        list(episode.labels.utility), episode_weights(episode), budget, cfg
    )
    return max(0.0, best - retained)


def compute_episode_metrics(
    final_state: MemoryState,
    episode: Episode,
    cfg: MetricsConfig | None = None,
    oracle_utility: float | None = None,
) -> EpisodeMetrics:
    """Assemble the full metric record for one finished run.

    oracle_utility may be supplied precomputed (it depends only on the
    episode and budget, not the policy); otherwise it is computed here.
    """
    cfg = cfg or MetricsConfig()
    cfg.validate()
    W = retained_timesteps(final_state)
    R = set(episode.labels.critical_steps)
    precision, recall, f1 = prf1(W, R, cfg.epsilon)
    diag = diagnostics(final_state, episode, cfg.epsilon)
    retained = float(sum(episode.labels.utility[t] for t in W))
    if oracle_utility is None:
        oracle_utility = oracle_write_only(
            list(episode.labels.utility),
            episode_weights(episode),
            final_state.budget_bytes,
            cfg,
        )
    return EpisodeMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        utilization=diag["utilization"],
        write_density=diag["write_density"],
        expire_rate=diag["expire_rate"],
        avg_staleness=diag["avg_staleness"],
        drift_coverage=diag["drift_coverage"],
        retained_utility=retained,
        utility_per_kb=utility_per_kb(retained, final_state.bytes_used),
        oracle_utility=oracle_utility,
        regret_write_only=max(0.0, oracle_utility - retained),
        oracle_method=oracle_method(final_state.budget_bytes, cfg),
        bytes_used=final_state.bytes_used,
        budget_bytes=final_state.budget_bytes,
        T=episode.config.T,
    )
