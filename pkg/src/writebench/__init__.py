"""writebench: a deterministic benchmark for memory write policies.

Streams of drifting endpoint snapshots are replayed against policies that
decide what to store, merge, expire, or skip inside a strict byte budget;
retained memory is scored for retrieval quality, budget efficiency, and
regret against a store-only knapsack oracle.
"""

from .episodes import (
    Episode,
    GeneratorConfig,
    Labels,
    Observation,
    Regime,
    Step,
    drift_prob_at,
    freeze_episodes,
    generate_episode,
    load_episodes,
)
from .memstore import (
    Action,
    ActionKind,
    ActionRecord,
    MemoryItem,
    MemoryState,
    RejectReason,
    apply_action,
    compute_delta,
    estimate_bytes,
    retained_timesteps,
)
from .metrics import (
    EpisodeMetrics,
    MetricsConfig,
    compute_episode_metrics,
    oracle_write_only,
    prf1,
    regret_write_only,
    utility_per_kb,
)
from .policies import POLICY_NAMES, PolicyParams, PolicyView, make_policy
from .runner import SweepConfig, aggregate, run_episode, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "ActionRecord",
    "Episode",
    "EpisodeMetrics",
    "GeneratorConfig",
    "Labels",
    "MemoryItem",
    "MemoryState",
    "MetricsConfig",
    "Observation",
    "POLICY_NAMES",
    "PolicyParams",
    "PolicyView",
    "Regime",
    "RejectReason",
    "Step",
    "SweepConfig",
    "aggregate",
    "apply_action",
    "compute_delta",
    "compute_episode_metrics",
    "drift_prob_at",
    "estimate_bytes",
    "freeze_episodes",
    "generate_episode",
    "load_episodes",
    "make_policy",
    "oracle_write_only",
    "prf1",
    "regret_write_only",
    "retained_timesteps",
    "run_episode",
    "run_sweep",
    "utility_per_kb",
]
