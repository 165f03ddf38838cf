from __future__ import annotations

from types import SimpleNamespace

import pytest

from writebench.episodes import GeneratorConfig, Regime, freeze_episodes, generate_episode
from writebench.runner import SweepConfig, aggregate, read_results, run_sweep


@pytest.fixture(scope="session")
def desk_scale_sweep(tmp_path_factory):
    """Freeze the standard episode set and run the full default sweep once.

    Shared by the acceptance tests; everything downstream reads the frozen
    file, the per-episode rows, and the per-condition aggregates.
    """
    root = tmp_path_factory.mktemp("desk_sweep")
    frozen = root / "episodes.jsonl"
    episodes = [
        generate_episode(GeneratorConfig(regime=regime, seed=seed))
        for regime in Regime
        for seed in range(10)
    ]
    freeze_episodes(episodes, frozen)

    cfg = SweepConfig(episode_file=str(frozen), output_dir=str(root / "out"))
    results_path, aggregate_path = run_sweep(cfg)
    rows = read_results(results_path)
    agg = {
        (r["regime"], r["track"], r["budget"], r["policy"]): r for r in aggregate(rows)
    }
    by_regime = {
        regime: [ep for ep in episodes if ep.config.regime is regime] for regime in Regime
    }
    return SimpleNamespace(
        root=root,
        frozen=frozen,
        cfg=cfg,
        results_path=results_path,
        aggregate_path=aggregate_path,
        rows=rows,
        agg=agg,
        episodes=by_regime,
    )
