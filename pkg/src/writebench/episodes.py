"""Synthetic drift-episode generation and frozen on-disk episode sets.

An episode is a stream of endpoint snapshots. Each endpoint in a fixed pool
carries a current state (version counter, parameter mapping, filler note);
a drift event bumps one endpoint's version and regenerates its parameters,
and the step where that happens is labelled critical. Redundancy regimes
additionally repeat the previous step's observation verbatim. Hidden labels
(critical set, per-step utility, per-step priority) are produced alongside
the stream and are never exposed through step metadata.

Generation is a pure function of the config: the same config yields the
same episode bytes on every platform (see rng for the generator contract).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from . import canonical
from .rng import SplitMix64, mix_seed

FORMAT_VERSION = 1

# Domain-separation tag mixed into every episode seed so that episode i's
# stream is unrelated to any other use of the integer i as a seed.
_STREAM_DOMAIN = 0xB5C0_FBE8

_PARAM_KEYS = ("k0", "k1", "k2", "k3")
_NOTE_ALPHABET = "abcdefghijklmnopqrstuvwxyz"
_NOTE_MIN_LEN = 8
_NOTE_MAX_LEN = 16

UTILITY_CRITICAL = 1.0
UTILITY_BASE = 0.01
PRIORITY_FLOOR = 0.8
PRIORITY_BAND = 0.15


class Regime(str, Enum):
    DEFAULT = "default"
    BURST_DRIFT = "burst_drift"
    REDUNDANCY = "redundancy"
    BURST_REDUNDANCY = "burst_redundancy"

    @property
    def has_bursts(self) -> bool:
        return self in (Regime.BURST_DRIFT, Regime.BURST_REDUNDANCY)

    @property
    def has_redundancy(self) -> bool:
        return self in (Regime.REDUNDANCY, Regime.BURST_REDUNDANCY)


@dataclass(frozen=True)
class GeneratorConfig:
    """Episode generator parameters; defaults are the benchmark's standard."""

    T: int = 200
    api_pool: int = 8
    drift_prob: float = 0.08
    burst_interval: int = 50
    burst_len: int = 8
    burst_drift_prob: float = 0.6
    redundancy_prob: float = 0.7
    regime: Regime = Regime.DEFAULT
    seed: int = 0

    def validate(self) -> None:
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.api_pool < 1:
            raise ValueError("api_pool must be >= 1")
        for name in ("drift_prob", "burst_drift_prob", "redundancy_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.burst_interval < 1:
            raise ValueError("burst_interval must be >= 1")
        if self.burst_len > self.burst_interval:
            raise ValueError("burst_len must be <= burst_interval")
        if self.burst_len < 0:
            raise ValueError("burst_len must be >= 0")

    def to_mapping(self) -> dict:
        return {
            "T": self.T,
            "api_pool": self.api_pool,
            "drift_prob": self.drift_prob,
            "burst_interval": self.burst_interval,
            "burst_len": self.burst_len,
            "burst_drift_prob": self.burst_drift_prob,
            "redundancy_prob": self.redundancy_prob,
            "regime": self.regime.value,
            "seed": self.seed,
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "GeneratorConfig":
        return cls(
            T=int(data["T"]),
            api_pool=int(data["api_pool"]),
            drift_prob=float(data["drift_prob"]),
            burst_interval=int(data["burst_interval"]),
            burst_len=int(data["burst_len"]),
            burst_drift_prob=float(data["burst_drift_prob"]),
            redundancy_prob=float(data["redundancy_prob"]),
            regime=Regime(data["regime"]),
            seed=int(data["seed"]),
        )


@dataclass(frozen=True)
class Observation:
    """One endpoint snapshot. params stays flat (depth one) by construction."""

    api: str
    version: str
    params: dict
    note: str

    def to_mapping(self) -> dict:
        return {
            "api": self.api,
            "note": self.note,
            "params": dict(self.params),
            "version": self.version,
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "Observation":
        return cls(
            api=data["api"],
            version=data["version"],
            params=dict(data["params"]),
            note=data["note"],
        )


@dataclass(frozen=True)
class Step:
    t: int
    observation: Observation
    metadata: dict


@dataclass(frozen=True)
class Labels:
    """Hidden per-episode labels used only for scoring and priority views."""

    critical_steps: frozenset
    total_drift_events: int
    utility: tuple
    priority: tuple


@dataclass(frozen=True)
class Episode:
    config: GeneratorConfig
    steps: tuple
    labels: Labels


def drift_prob_at(config: GeneratorConfig, t: int) -> float:
    """Per-step drift probability: elevated inside burst windows, else base.

    Burst windows start at every multiple of burst_interval and run for
    burst_len steps.
    """
    if not 0 <= t < config.T:
        raise ValueError(f"t={t} outside [0, {config.T})")
    if config.regime.has_bursts and (t % config.burst_interval) < config.burst_len:
        return config.burst_drift_prob
    return config.drift_prob


def _fresh_params(rng: SplitMix64) -> dict:
    return {key: f"{rng.next_u64() & 0xFFFFFFFF:08x}" for key in _PARAM_KEYS}


def _fresh_note(rng: SplitMix64) -> str:
    length = _NOTE_MIN_LEN + rng.randrange(_NOTE_MAX_LEN - _NOTE_MIN_LEN + 1)
    return "".join(rng.choice(_NOTE_ALPHABET) for _ in range(length))


def generate_episode(config: GeneratorConfig) -> Episode:
    """Generate one episode deterministically from the config.

    Per step, in order: sample a drift event (endpoint version bump and
    parameter refresh, step becomes critical); otherwise, in redundancy
    regimes, possibly repeat the previous observation verbatim; otherwise
    emit the current snapshot of a uniformly chosen endpoint. Duplicates
    are never drift events because drift is sampled first.
    """
    config.validate()
    rng = SplitMix64(mix_seed(_STREAM_DOMAIN, config.seed))

    versions = [1] * config.api_pool
    params = [_fresh_params(rng) for _ in range(config.api_pool)]
    notes = [_fresh_note(rng) for _ in range(config.api_pool)]

    def snapshot(idx: int) -> Observation:
        return Observation(
            api=f"api-{idx}",
            version=f"v{versions[idx]}",
            params=dict(params[idx]),
            note=notes[idx],
        )

    metadata = {"regime": config.regime.value}
    steps: list = []
    critical: set = set()
    for t in range(config.T):
        if rng.random() < drift_prob_at(config, t):
            idx = rng.randrange(config.api_pool)
            versions[idx] += 1
            params[idx] = _fresh_params(rng)
            observation = snapshot(idx)
            critical.add(t)
        elif (
            config.regime.has_redundancy
            and t > 0
            and rng.random() < config.redundancy_prob
        ):
            observation = steps[-1].observation
        else:
            observation = snapshot(rng.randrange(config.api_pool))
        steps.append(Step(t=t, observation=observation, metadata=dict(metadata)))

    utility = tuple(
        UTILITY_CRITICAL if t in critical else UTILITY_BASE for t in range(config.T)
    )
    priority = tuple(
        PRIORITY_FLOOR + PRIORITY_BAND * rng.random()
        if t in critical
        else PRIORITY_BAND * rng.random()
        for t in range(config.T)
    )
    labels = Labels(
        critical_steps=frozenset(critical),
        total_drift_events=len(critical),
        utility=utility,
        priority=priority,
    )
    return Episode(config=config, steps=tuple(steps), labels=labels)


# ---------------------------------------------------------------------------
# Frozen episode files
# ---------------------------------------------------------------------------


class FrozenFileError(Exception):
    """Base class for frozen-episode file failures."""


class MissingEpisodeFileError(FrozenFileError):
    pass


class MalformedRecordError(FrozenFileError):
    pass


class VersionMismatchError(FrozenFileError):
    pass


def _episode_record(episode: Episode) -> dict:
    return {
        "config": episode.config.to_mapping(),
        "steps": [
            {
                "t": step.t,
                "observation": step.observation.to_mapping(),
                "metadata": dict(step.metadata),
            }
            for step in episode.steps
        ],
        "labels": {
            "critical_steps": sorted(episode.labels.critical_steps),
            "total_drift_events": episode.labels.total_drift_events,
            "utility": list(episode.labels.utility),
            "priority": list(episode.labels.priority),
        },
    }


def _episode_from_record(record: dict) -> Episode:
    config = GeneratorConfig.from_mapping(record["config"])
    steps = tuple(
        Step(
            t=int(raw["t"]),
            observation=Observation.from_mapping(raw["observation"]),
            metadata=dict(raw["metadata"]),
        )
        for raw in record["steps"]
    )
    raw_labels = record["labels"]
    labels = Labels(
        critical_steps=frozenset(int(t) for t in raw_labels["critical_steps"]),
        total_drift_events=int(raw_labels["total_drift_events"]),
        utility=tuple(float(u) for u in raw_labels["utility"]),
        priority=tuple(float(p) for p in raw_labels["priority"]),
    )
    return Episode(config=config, steps=steps, labels=labels)


def freeze_episodes(episodes: Iterable[Episode], path: str | os.PathLike) -> None:
    """Write episodes as a line-delimited canonical-JSON file.

    First line is a header carrying the format version and a summary of the
    generator parameters; each following line is one full episode record.
    """
    episodes = list(episodes)
    header = {
        "format_version": FORMAT_VERSION,
        "generator_params": {
            "count": len(episodes),
            "regimes": sorted({ep.config.regime.value for ep in episodes}),
            "seeds": [ep.config.seed for ep in episodes],
        },
    }
    lines = [canonical.dumps(header)]
    lines.extend(canonical.dumps(_episode_record(ep)) for ep in episodes)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_episodes(path: str | os.PathLike) -> list:
    """Load a frozen episode file; inverse of freeze_episodes.

    Raises MissingEpisodeFileError, VersionMismatchError, or
    MalformedRecordError depending on the failure.
    """
    if not os.path.exists(path):
        raise MissingEpisodeFileError(f"no frozen episode file at {path}")
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MalformedRecordError(f"{path}: empty file, header record missing")

    import json

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise MalformedRecordError(f"{path}: unreadable header: {exc}") from exc
    if not isinstance(header, dict) or "format_version" not in header:
        raise MalformedRecordError(f"{path}: header lacks format_version")
    if header["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format_version {header['format_version']} "
            f"(supported: {FORMAT_VERSION})"
        )
    try:
        expected = int(header["generator_params"]["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecordError(f"{path}: header lacks generator_params.count") from exc

    episodes = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        try:
            record = json.loads(line)
            episodes.append(_episode_from_record(record))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedRecordError(f"{path}:{lineno}: bad episode record: {exc}") from exc
    if len(episodes) != expected:
        raise MalformedRecordError(
            f"{path}: header promises {expected} episodes, found {len(episodes)}"
        )
    return episodes
