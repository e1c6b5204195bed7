import numpy as np
import pytest

from idlefair.experiments import (
    matched_sde_terminals,
    resolve_workers,
    run_compare,
    run_level,
)

from conftest import e0_ladder


def test_resolve_workers_env(monkeypatch):
    monkeypatch.delenv("IDLEFAIR_WORKERS", raising=False)
    assert resolve_workers() == 1
    assert resolve_workers(4) == 4
    monkeypatch.setenv("IDLEFAIR_WORKERS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2


def test_worker_pool_matches_serial():
    spec = e0_ladder(n_values=(15,), reps=6, stream_id=40)
    serial = run_level(spec, 0, workers=1)
    pooled = run_level(spec, 0, workers=2)
    assert serial == pooled


def test_run_level_reps_override_extends_batch():
    spec = e0_ladder(n_values=(15,), reps=4, stream_id=41)
    short = run_level(spec, 0)
    long = run_level(spec, 0, reps=8)
    assert long[:4] == short


def test_matched_sde_terminals_deterministic():
    spec = e0_ladder(n_values=(15,), reps=6, stream_id=42)
    summaries = run_level(spec, 0)
    b1, t1 = matched_sde_terminals(spec, 0, summaries)
    b2, t2 = matched_sde_terminals(spec, 0, summaries)
    assert np.array_equal(b1, b2)
    assert np.array_equal(t1, t2)
    assert b1.size == len(summaries)


def test_run_compare_outputs_and_metrics(tmp_path):
    spec = e0_ladder(n_values=(10, 20), reps=6, stream_id=43)
    result = run_compare(spec, tmp_path / "out")
    assert result.out_dir.joinpath("manifest.json").exists()
    for n in (10, 20):
        assert f"n{n}_ks_sde_vs_sim" in result.metrics
        assert f"n{n}_w1_mean_terminal_to_limit" in result.metrics
        assert (result.out_dir / f"terminals_n{n}.csv").exists()
    assert any(c.name == "pathwise_invariants" for c in result.checks)
    names = {c.name for c in result.checks}
    assert "w1_median_nonincreasing" in names
    assert result.checks[0].passed
