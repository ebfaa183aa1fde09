import csv
import gc

import numpy as np
import pytest

from magicsparse.core.config import settings
from magicsparse.engine import bench
from magicsparse.engine.bench import (
    AGGREGATE_HEADER,
    DIFFERENCE_HEADER,
    ERRORS_HEADER,
    RUNS_HEADER,
    run_benchmark,
    write_benchmark_csv,
)
from magicsparse.schemas import BenchConfig, SamplingMode


def _read(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


@pytest.fixture(scope="module")
def small_result():
    return run_benchmark(BenchConfig(t_min=8, t_max=9, delta=0.3, runs=2, L=2, warmup=1))


def test_benchmark_shapes(small_result):
    assert len(small_result.records) == 8
    assert len(small_result.aggregates) == 4
    assert [d.t for d in small_result.differences] == [8, 9]
    assert small_result.errors == []


def test_benchmark_term_counts(small_result):
    ks = {(a.t, a.mode): a.k for a in small_result.aggregates}
    assert ks[(8, SamplingMode.IID)] == 29
    assert ks[(8, SamplingMode.CORRELATED)] == 9
    assert ks[(9, SamplingMode.IID)] == 36
    assert ks[(9, SamplingMode.CORRELATED)] == 10


def test_overlap_evaluations_scale_with_k(small_result):
    for record in small_result.records:
        assert record.overlap_evaluations == 2 * record.k
        assert record.runtime_seconds > 0


def test_aggregate_is_worst_case(small_result):
    for aggregate in small_result.aggregates:
        runtimes = [r.runtime_seconds for r in small_result.records
                    if (r.t, r.mode) == (aggregate.t, aggregate.mode)]
        assert aggregate.runtime_max_seconds == max(runtimes)


def test_difference_is_iid_minus_correlated(small_result):
    worst = {(a.t, a.mode): a.runtime_max_seconds for a in small_result.aggregates}
    for diff in small_result.differences:
        assert diff.runtime_diff_seconds == pytest.approx(
            worst[(diff.t, SamplingMode.IID)] - worst[(diff.t, SamplingMode.CORRELATED)]
        )


def test_infeasible_cells_become_error_rows():
    result = run_benchmark(BenchConfig(t_min=1, t_max=2, delta=0.1, runs=1, L=1, warmup=0))
    assert [(e.t, e.mode) for e in result.errors] == [(1, SamplingMode.CORRELATED), (2, SamplingMode.CORRELATED)]
    assert result.differences == []
    assert {a.mode for a in result.aggregates} == {SamplingMode.IID}


def test_csv_files(small_result, tmp_path):
    written = write_benchmark_csv(small_result, tmp_path)
    assert [p.name for p in written] == ["runs.csv", "aggregate.csv", "difference.csv"]
    runs = _read(tmp_path / "runs.csv")
    assert runs[0] == RUNS_HEADER
    assert len(runs) == 9
    assert runs[1][:4] == ["8", "iid", "29", "0"]
    float(runs[1][4])
    assert _read(tmp_path / "aggregate.csv")[0] == AGGREGATE_HEADER
    assert _read(tmp_path / "difference.csv")[0] == DIFFERENCE_HEADER
    assert not (tmp_path / "errors.csv").exists()


def test_error_csv(tmp_path):
    result = run_benchmark(BenchConfig(t_min=1, t_max=1, delta=0.1, runs=1, L=1, warmup=0))
    write_benchmark_csv(result, tmp_path)
    rows = _read(tmp_path / "errors.csv")
    assert rows[0] == ERRORS_HEADER
    assert rows[1][:2] == ["1", "correlated"]
    assert "infeasible" in rows[1][2]


def test_csv_is_deterministic_apart_from_timings(tmp_path):
    cfg = BenchConfig(t_min=8, t_max=8, delta=0.3, runs=2, L=1, warmup=0)
    write_benchmark_csv(run_benchmark(cfg), tmp_path / "a")
    write_benchmark_csv(run_benchmark(cfg, parallel=True, workers=2), tmp_path / "b")
    first = [row[:4] for row in _read(tmp_path / "a" / "runs.csv")]
    second = [row[:4] for row in _read(tmp_path / "b" / "runs.csv")]
    assert first == second


def test_term_masks_are_built_before_the_clock_starts(monkeypatch):
    seen = []

    def recording_fastnorm(decomposition, **kwargs):
        seen.append("plus_masks" in vars(decomposition) and "plus_counts" in vars(decomposition))
        return real_fastnorm(decomposition, **kwargs)

    real_fastnorm = bench.fastnorm
    monkeypatch.setattr(bench, "fastnorm", recording_fastnorm)
    run_benchmark(BenchConfig(t_min=8, t_max=8, delta=0.3, runs=2, L=1, warmup=0))
    assert seen == [True] * 4


def test_collector_is_paused_only_while_timing(monkeypatch):
    states = []

    def recording_fastnorm(decomposition, **kwargs):
        states.append(gc.isenabled())
        return real_fastnorm(decomposition, **kwargs)

    real_fastnorm = bench.fastnorm
    monkeypatch.setattr(bench, "fastnorm", recording_fastnorm)
    assert gc.isenabled()
    run_benchmark(BenchConfig(t_min=8, t_max=8, delta=0.3, runs=1, L=1, warmup=0))
    assert states == [False, False]
    assert gc.isenabled()


@pytest.mark.slow
def test_runtime_ratio_tracks_term_ratio():
    result = run_benchmark(BenchConfig(t_min=14, t_max=30, delta=0.1, runs=10))
    assert result.config.L == settings.BENCH_DEFAULT_L
    worst = {(a.t, a.mode): a for a in result.aggregates}
    for t in range(14, 31):
        iid, corr = worst[(t, SamplingMode.IID)], worst[(t, SamplingMode.CORRELATED)]
        runtime_ratio = iid.runtime_max_seconds / corr.runtime_max_seconds
        assert runtime_ratio == pytest.approx(iid.k / corr.k, rel=0.2)
        iid_evals = {r.overlap_evaluations for r in result.records if (r.t, r.mode) == (t, SamplingMode.IID)}
        corr_evals = {r.overlap_evaluations for r in result.records if (r.t, r.mode) == (t, SamplingMode.CORRELATED)}
        assert iid_evals == {result.config.L * iid.k} and corr_evals == {result.config.L * corr.k}
    diffs = [d.runtime_diff_seconds for d in result.differences]
    assert len(diffs) == 17
    assert np.all(np.asarray(diffs) > 0)
