import math
from pathlib import Path
from typing import Callable, Optional, Union
import logging

from magicsparse.core.config import settings
from magicsparse.core.io import atomic_write_bytes, atomic_write_text
from magicsparse.core.rng import derive_seed
from magicsparse.engine import magic_states
from magicsparse.engine.bench import run_benchmark, write_benchmark_csv
from magicsparse.engine.norms import fastnorm, gram_norm_exact
from magicsparse.engine.sparsify import regime_check, sparsify
from magicsparse.engine.stab_terms import SparseDecomposition, deserialize, serialize
from magicsparse.engine.validate import mc_expected_error, mc_tail_check
from magicsparse.schemas import BenchConfig, NormEstimate, RunReport, SamplerConfig, SamplingMode

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class Orchestrator:
    """Runs the pipelines behind each CLI subcommand and returns plain result dicts."""

    def __init__(self, workers: Optional[int] = None):
        self.workers = settings.MAX_WORKERS if workers is None else workers
        logger.debug(f"Orchestrator initialized (workers: {self.workers})")

    def handle_extent(self, phi: float, t: int) -> dict:
        xi = magic_states.extent(phi, t)
        l1 = magic_states.l1_norm(phi, t)
        if math.isinf(xi):
            logger.warning(f"extent overflows float range at t={t}; reporting log2_extent only")
        return {
            "phi": phi,
            "t": t,
            # null past float range keeps stdout valid JSON
            "extent": xi if math.isfinite(xi) else None,
            "l1": l1 if math.isfinite(l1) else None,
            "log2_extent": magic_states.log2_extent(phi, t),
            "log2_extent_per_qubit": magic_states.log2_extent(phi, 1),
        }

    def norm_function(self, method: str, epsilon: float = 0.1, pfail: float = 0.1,
                      seed: int = 0) -> Callable[[SparseDecomposition], NormEstimate]:
        if method == "exact":
            return lambda d: gram_norm_exact(d, workers=self.workers)
        if method == "fastnorm":
            return lambda d: fastnorm(d, epsilon, pfail, derive_seed(seed, "postselect-norm", d.seed),
                                      workers=self.workers)
        raise ValueError(f"unknown norm method {method!r}")

    def handle_sparsify(self, cfg: SamplerConfig, out: PathLike, norm_method: str = "exact",
                        epsilon: float = 0.1, pfail: float = 0.1) -> dict:
        logger.info(f"Sampling decomposition: t={cfg.t}, delta={cfg.delta}, mode={cfg.mode.value}, seed={cfg.seed}")
        warnings = regime_check(cfg.t, cfg.delta)
        norm_fn = self.norm_function(norm_method, epsilon, pfail, cfg.seed) if cfg.postselect else None
        decomposition, attempts = sparsify(cfg, norm_fn)
        atomic_write_bytes(out, serialize(decomposition))
        logger.info(f"Decomposition written - k: {decomposition.k}, attempts: {attempts}, path: {out}")
        return {
            "out": str(out),
            "t": decomposition.t,
            "phi": decomposition.phi,
            "mode": decomposition.mode.value,
            "k": decomposition.k,
            "l1": decomposition.l1,
            "gamma": decomposition.gamma,
            "seed": str(decomposition.seed),
            "attempts": attempts,
            "warnings": warnings,
        }

    def handle_norm(self, path: PathLike, method: str, epsilon: float = 0.1, pfail: float = 0.1,
                    seed: int = 0, samples: Optional[int] = None, median_of_means: bool = False,
                    backend: str = "gauss") -> NormEstimate:
        decomposition = deserialize(Path(path).read_bytes())
        logger.info(f"Computing {method} norm: t={decomposition.t}, k={decomposition.k}")
        if method == "exact":
            estimate = gram_norm_exact(decomposition, workers=self.workers)
        elif method == "fastnorm":
            estimate = fastnorm(decomposition, epsilon, pfail, seed, samples=samples,
                                median_of_means=median_of_means, backend=backend, workers=self.workers)
        else:
            raise ValueError(f"unknown norm method {method!r}")
        logger.info(f"Norm computed: {estimate.value:.12g} ({estimate.samples} samples)")
        return estimate

    def handle_validate(self, t: int, delta: float, mode: SamplingMode, runs: int, seed: int,
                        phi: float = magic_states.PI_4, out: Optional[PathLike] = None) -> RunReport:
        report = mc_expected_error(t, delta, mode, runs, seed, phi=phi, workers=self.workers)
        if out is not None:
            atomic_write_text(out, report.model_dump_json(indent=2))
            logger.info(f"Report written to {out}")
        return report

    def handle_tailcheck(self, t: int, delta: float, mode: SamplingMode, runs: int, seed: int,
                         phi: float = magic_states.PI_4, out: Optional[PathLike] = None) -> RunReport:
        report = mc_tail_check(t, delta, mode, runs, seed, phi=phi, workers=self.workers)
        if out is not None:
            atomic_write_text(out, report.model_dump_json(indent=2))
            logger.info(f"Report written to {out}")
        return report

    def handle_bench(self, cfg: BenchConfig, out_dir: PathLike, parallel: bool = False) -> dict:
        logger.info(f"Benchmark: t in [{cfg.t_min}, {cfg.t_max}], delta={cfg.delta}, runs={cfg.runs}, L={cfg.L}")
        result = run_benchmark(cfg, parallel=parallel, workers=self.workers if parallel else None)
        written = write_benchmark_csv(result, out_dir)
        return {
            "files": [str(p) for p in written],
            "aggregates": [a.model_dump(mode="json") for a in result.aggregates],
            "differences": [d.model_dump(mode="json") for d in result.differences],
            "errors": [e.model_dump(mode="json") for e in result.errors],
        }
