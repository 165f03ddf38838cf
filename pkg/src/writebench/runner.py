"""Benchmark orchestration: sequential episode runs, sweeps, aggregation.

A sweep runs every (regime, track, budget, policy) condition over a shared
episode pool: episode i of a regime uses seed base_seed + i, and the same
episode objects are replayed for every track, budget, and policy, so all
conditions face identical streams. Each run emits one canonical-JSON line;
aggregation reduces those lines to per-condition means and standard errors
in a CSV. Both files are byte-stable across reruns of the same episodes.
"""

from __future__ import annotations

import dataclasses
import json
import os
import statistics
from dataclasses import dataclass

from . import canonical
from .episodes import (
    Episode,
    GeneratorConfig,
    Regime,
    generate_episode,
    load_episodes,
)
from .memstore import Action, MemoryState, apply_action, estimate_bytes
from .metrics import (
    EpisodeMetrics,
    MetricsConfig,
    compute_episode_metrics,
    episode_weights,
    oracle_write_only,
)
from .policies import (
    POLICY_NAMES,
    MemoryView,
    PolicyParams,
    PolicyView,
    make_policy,
    requires_priority,
)

TRACK_UNPRIVILEGED = "unprivileged"
TRACK_PRIVILEGED = "privileged"
TRACKS = (TRACK_UNPRIVILEGED, TRACK_PRIVILEGED)

DEFAULT_BUDGETS = (1024, 10240, 102400, 1048576)

RESULTS_FILENAME = "per_episode.jsonl"
AGGREGATE_FILENAME = "aggregate.csv"

# Scalar fields aggregated into the CSV, in output column order.
METRIC_FIELDS = (
    "precision",
    "recall",
    "f1",
    "utilization",
    "write_density",
    "expire_rate",
    "avg_staleness",
    "drift_coverage",
    "retained_utility",
    "utility_per_kb",
    "oracle_utility",
    "regret_write_only",
    "bytes_used",
    "budget_bytes",
    "T",
)


class ConfigError(ValueError):
    """Invalid sweep configuration, reported before any run starts."""


class PolicyFailure(RuntimeError):
    """A policy raised while stepping; poisons one episode row, not the sweep."""


@dataclass(frozen=True)
class SweepConfig:
    regimes: tuple = tuple(Regime)
    tracks: tuple = TRACKS
    budgets: tuple = DEFAULT_BUDGETS
    policies: tuple = POLICY_NAMES
    episodes_per_condition: int = 10
    base_seed: int = 0
    episode_file: str | None = None
    output_dir: str = "results"
    generator_defaults: GeneratorConfig = GeneratorConfig()
    policy_params: PolicyParams = PolicyParams()
    metrics_config: MetricsConfig = MetricsConfig()

    def validate(self) -> None:
        if self.episodes_per_condition < 1:
            raise ConfigError("episodes_per_condition must be >= 1")
        if not self.budgets or any(b <= 0 for b in self.budgets):
            raise ConfigError("budgets must be positive")
        for regime in self.regimes:
            if not isinstance(regime, Regime):
                raise ConfigError(f"unknown regime {regime!r}")
        for track in self.tracks:
            if track not in TRACKS:
                raise ConfigError(f"unknown track {track!r} (known: {TRACKS})")
        for name in self.policies:
            if name not in POLICY_NAMES:
                raise ConfigError(f"unknown policy {name!r} (known: {POLICY_NAMES})")
            if requires_priority(name) and TRACK_PRIVILEGED not in self.tracks:
                raise ConfigError(
                    f"policy {name!r} needs the privileged track, which is not scheduled"
                )
        self.policy_params.validate()
        self.metrics_config.validate()


def run_episode(
    episode: Episode,
    policy,
    budget: int,
    track: str,
    metrics_config: MetricsConfig | None = None,
    oracle_utility: float | None = None,
) -> tuple:
    """Run one policy over one episode at one budget, sequentially.

    Steps are revealed one at a time in order; every emitted action is
    applied before the next step is shown (rejections are logged and
    processing continues). Returns (final MemoryState, EpisodeMetrics).
    """
    if track not in TRACKS:
        raise ConfigError(f"unknown track {track!r}")
    if budget <= 0:
        raise ConfigError("budget must be positive")
    name = getattr(policy, "name", "")
    if track == TRACK_UNPRIVILEGED and requires_priority(name):
        raise ConfigError(f"policy {name!r} cannot run on the unprivileged track")

    state = MemoryState(budget_bytes=budget)
    priorities = episode.labels.priority
    for step in episode.steps:
        metadata = dict(step.metadata)
        if track == TRACK_PRIVILEGED:
            metadata["priority"] = priorities[step.t]
        view = PolicyView(
            t=step.t,
            observation=step.observation,
            metadata=metadata,
            memory=MemoryView(state),
            write_cost=estimate_bytes(step),
        )
        try:
            actions = policy.step(view)
        except Exception as exc:
            raise PolicyFailure(f"policy {name or policy!r} failed at t={step.t}: {exc}") from exc
        if not isinstance(actions, (list, tuple)) or not all(
            isinstance(action, Action) for action in actions
        ):
            raise PolicyFailure(
                f"policy {name or policy!r} returned a non-action result at t={step.t}"
            )
        for action in actions:
            apply_action(state, step.t, step, action)
    metrics = compute_episode_metrics(state, episode, metrics_config, oracle_utility)
    return state, metrics


def _episode_pool(cfg: SweepConfig) -> dict:
    """Episodes per regime: loaded from the frozen file or generated fresh."""
    pool: dict = {}
    if cfg.episode_file:
        loaded = load_episodes(cfg.episode_file)
        for regime in cfg.regimes:
            matching = [ep for ep in loaded if ep.config.regime is regime]
            if len(matching) < cfg.episodes_per_condition:
                raise ConfigError(
                    f"frozen file has {len(matching)} episodes for regime "
                    f"{regime.value!r}, need {cfg.episodes_per_condition}"
                )
            pool[regime] = matching[: cfg.episodes_per_condition]
    else:
        for regime in cfg.regimes:
            pool[regime] = [
                generate_episode(
                    dataclasses.replace(
                        cfg.generator_defaults, regime=regime, seed=cfg.base_seed + i
                    )
                )
                for i in range(cfg.episodes_per_condition)
            ]
    return pool


def run_sweep(cfg: SweepConfig) -> tuple:
    """Run all conditions; write per-episode JSONL and aggregate CSV.

    Returns (results_path, aggregate_path). Rerunning over the same frozen
    episodes reproduces both files byte for byte.
    """
    cfg.validate()
    pool = _episode_pool(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)

    weights_cache: dict = {}
    oracle_cache: dict = {}
    lines: list = []
    for regime in cfg.regimes:
        episodes = pool[regime]
        for track in cfg.tracks:
            for budget in cfg.budgets:
                for name in cfg.policies:
                    if requires_priority(name) and track == TRACK_UNPRIVILEGED:
                        continue
                    for index, episode in enumerate(episodes):
                        ekey = (regime.value, index)
                        if ekey not in weights_cache:
                            weights_cache[ekey] = episode_weights(episode)
                        okey = (regime.value, index, budget)
                        if okey not in oracle_cache:
                            oracle_cache[okey] = oracle_write_only(
                                list(episode.labels.utility),
                                weights_cache[ekey],
                                budget,
                                cfg.metrics_config,
                            )
                        condition = {
                            "regime": regime.value,
                            "track": track,
                            "budget": budget,
                            "policy": name,
                            "episode_index": index,
                        }
                        try:
                            _, metrics = run_episode(
                                episode,
                                make_policy(name, cfg.policy_params),
                                budget,
                                track,
                                cfg.metrics_config,
                                oracle_cache[okey],
                            )
                            row = {**condition, **metrics.to_mapping()}
                        except PolicyFailure as exc:
                            row = {**condition, "error": str(exc)}
                        lines.append(canonical.dumps_fixed(row))

    results_path = os.path.join(cfg.output_dir, RESULTS_FILENAME)
    with open(results_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))

    # Aggregate from the serialized rows so that `aggregate` over the results
    # file reproduces this CSV exactly.
    rows = [json.loads(line) for line in lines]
    aggregate_path = os.path.join(cfg.output_dir, AGGREGATE_FILENAME)
    write_aggregate_csv(aggregate(rows), aggregate_path)
    return results_path, aggregate_path


def read_results(path: str) -> list:
    """Parse a per-episode JSONL results file into row mappings."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def aggregate(rows: list) -> list:
    """Per-condition means and standard errors over episode rows.

    Failure rows (carrying an "error" key) are skipped, so means cover only
    the episodes that completed. Standard error is sample-stddev / sqrt(n),
    reported as 0 when a condition has a single episode.
    """
    groups: dict = {}
    for row in rows:
        if "error" in row:
            continue
        key = (row["regime"], row["track"], row["budget"], row["policy"])
        groups.setdefault(key, []).append(row)

    out = []
    for key in sorted(groups):
        regime, track, budget, policy = key
        members = groups[key]
        agg: dict = {
            "regime": regime,
            "track": track,
            "budget": budget,
            "policy": policy,
        }
        for metric in METRIC_FIELDS:
            values = [float(row[metric]) for row in members]
            mean = statistics.fmean(values)
            se = statistics.stdev(values) / len(values) ** 0.5 if len(values) > 1 else 0.0
            agg[f"{metric}_mean"] = mean
            agg[f"{metric}_se"] = se
        agg["episodes"] = len(members)
        out.append(agg)
    return out


def write_aggregate_csv(agg_rows: list, path: str) -> None:
    """Write aggregate rows as UTF-8 CSV with fixed 6-decimal numbers."""
    header = ["regime", "track", "budget", "policy"]
    for metric in METRIC_FIELDS:
        header.append(f"{metric}_mean")
        header.append(f"{metric}_se")
    header.append("episodes")

    lines = [",".join(header)]
    for row in agg_rows:
        cells = [row["regime"], row["track"], str(row["budget"]), row["policy"]]
        for metric in METRIC_FIELDS:
            cells.append(f"{row[f'{metric}_mean']:.6f}")
            cells.append(f"{row[f'{metric}_se']:.6f}")
        cells.append(str(row["episodes"]))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
