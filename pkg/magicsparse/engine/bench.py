"""
Worst-case FASTNORM runtime versus t for iid and correlated decompositions.

Only the norm computation is timed. L is fixed across modes and t, so the
runtime difference reflects k alone.
"""
from __future__ import annotations

import csv
import gc
import io
import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from magicsparse.core.exceptions import MagicSparseError
from magicsparse.core.io import atomic_write_text
from magicsparse.core.rng import derive_seed
from magicsparse.core.task_queue import run_ordered
from magicsparse.engine.magic_states import PI_4
from magicsparse.engine.norms import fastnorm
from magicsparse.engine.sparsify import sample_count, sparsify
from magicsparse.engine.stab_terms import SparseDecomposition
from magicsparse.schemas import (
    BenchAggregate,
    BenchConfig,
    BenchDifference,
    BenchError,
    BenchRecord,
    BenchResult,
    NormEstimate,
    SamplerConfig,
    SamplingMode,
)

logger = logging.getLogger(__name__)

BENCH_MODES = (SamplingMode.IID, SamplingMode.CORRELATED)

RUNS_HEADER = ["t", "mode", "k", "run_index", "runtime_seconds"]
AGGREGATE_HEADER = ["t", "mode", "k", "runtime_max_seconds"]
DIFFERENCE_HEADER = ["t", "runtime_diff_seconds"]
ERRORS_HEADER = ["t", "mode", "message"]

_MIN_RUNTIME = time.get_clock_info("perf_counter").resolution


def _timed_norm(decomposition: SparseDecomposition, seed: int, L: int,
                pause_gc: bool = True) -> Tuple[float, NormEstimate]:
    """Wall-clock fastnorm only. The collector is paused like timeit does, except in parallel sweeps."""
    gc_was_enabled = pause_gc and gc.isenabled()
    if gc_was_enabled:
        gc.collect()
        gc.disable()
    try:
        start = time.perf_counter()
        estimate = fastnorm(decomposition, seed=seed, samples=L)
        elapsed = time.perf_counter() - start
    finally:
        if gc_was_enabled:
            gc.enable()
    return elapsed, estimate


def _run_cell(cfg: BenchConfig, t: int, mode: SamplingMode, pause_gc: bool = True) -> List[BenchRecord]:
    k, _ = sample_count(PI_4, t, cfg.delta, mode)
    records = []
    for r in range(cfg.warmup + cfg.runs):
        sampler = SamplerConfig(phi=PI_4, t=t, delta=cfg.delta, mode=mode,
                                seed=derive_seed(cfg.seed, "bench", t, mode.value, r))
        decomposition, _ = sparsify(sampler)
        theta_seed = derive_seed(cfg.seed, "bench-theta", t, mode.value, r)
        # term masks are cached on the decomposition; build them outside the clock
        decomposition.plus_masks, decomposition.plus_counts

        elapsed, estimate = _timed_norm(decomposition, theta_seed, cfg.L, pause_gc)

        if r < cfg.warmup:
            continue
        records.append(BenchRecord(
            t=t, mode=mode, k=decomposition.k, run_index=r - cfg.warmup,
            runtime_seconds=max(elapsed, _MIN_RUNTIME),
            overlap_evaluations=estimate.overlap_evaluations,
        ))
    worst = max(rec.runtime_seconds for rec in records)
    logger.info(f"Bench cell finished: t={t}, mode={mode.value}, k={k}, worst={worst:.6g}s")
    return records


def _safe_cell(cfg: BenchConfig, cell: Tuple[int, SamplingMode],
               pause_gc: bool = True) -> Union[List[BenchRecord], BenchError]:
    t, mode = cell
    try:
        return _run_cell(cfg, t, mode, pause_gc)
    except MagicSparseError as e:
        logger.error(f"Bench cell failed: t={t}, mode={mode.value} - {e}")
        return BenchError(t=t, mode=mode, message=str(e))


def run_benchmark(cfg: BenchConfig, parallel: bool = False, workers: Optional[int] = None) -> BenchResult:
    """
    Time fastnorm on `runs` decompositions per (t, mode) cell.

    Cells run sequentially unless parallel=True; parallel cells share CPU
    and their timings are not comparable.
    """
    cells = [(t, mode) for t in range(cfg.t_min, cfg.t_max + 1) for mode in BENCH_MODES]
    if parallel:
        logger.warning("Parallel benchmark cells requested; runtimes are not timing-safe")
        outcomes = run_ordered(lambda cell: _safe_cell(cfg, cell, pause_gc=False), cells, workers, label="bench")
    else:
        outcomes = [_safe_cell(cfg, cell) for cell in cells]

    result = BenchResult(config=cfg)
    worst: Dict[Tuple[int, SamplingMode], float] = {}
    for (t, mode), outcome in zip(cells, outcomes):
        if isinstance(outcome, BenchError):
            result.errors.append(outcome)
            continue
        result.records.extend(outcome)
        worst[(t, mode)] = max(rec.runtime_seconds for rec in outcome)
        result.aggregates.append(BenchAggregate(
            t=t, mode=mode, k=outcome[0].k, runtime_max_seconds=worst[(t, mode)],
        ))

    for t in range(cfg.t_min, cfg.t_max + 1):
        if (t, SamplingMode.IID) in worst and (t, SamplingMode.CORRELATED) in worst:
            result.differences.append(BenchDifference(
                t=t, runtime_diff_seconds=worst[(t, SamplingMode.IID)] - worst[(t, SamplingMode.CORRELATED)],
            ))
    return result


def _csv_text(header: List[str], rows: List[List[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def write_benchmark_csv(result: BenchResult, out_dir: Union[str, Path]) -> List[Path]:
    out_dir = Path(out_dir)
    written = [
        atomic_write_text(out_dir / "runs.csv", _csv_text(RUNS_HEADER, [
            [r.t, r.mode.value, r.k, r.run_index, _fmt(r.runtime_seconds)] for r in result.records
        ])),
        atomic_write_text(out_dir / "aggregate.csv", _csv_text(AGGREGATE_HEADER, [
            [a.t, a.mode.value, a.k, _fmt(a.runtime_max_seconds)] for a in result.aggregates
        ])),
        atomic_write_text(out_dir / "difference.csv", _csv_text(DIFFERENCE_HEADER, [
            [d.t, _fmt(d.runtime_diff_seconds)] for d in result.differences
        ])),
    ]
    if result.errors:
        written.append(atomic_write_text(out_dir / "errors.csv", _csv_text(ERRORS_HEADER, [
            [e.t, e.mode.value, e.message] for e in result.errors
        ])))
    logger.info(f"Benchmark CSVs written to {out_dir}")
    return written
