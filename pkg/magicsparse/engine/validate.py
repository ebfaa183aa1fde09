"""
Error measurements for sparsified decompositions.

Every run reduces to three numbers: <psi|psi> from the Gram kernel,
<D|psi> from the product formula, and ||D - psi||^2 = 1 - 2 Re<D|psi> + <psi|psi>.
Small t additionally cross-checks the error against dense vectors.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from magicsparse.core.config import settings
from magicsparse.core.exceptions import ConfigurationError, SizeLimitError, ValidationFailure
from magicsparse.core.rng import derive_seed
from magicsparse.core.task_queue import run_ordered
from magicsparse.engine import magic_states
from magicsparse.engine.norms import gram_norm_exact
from magicsparse.engine.sparsify import gamma, regime_check, sample_count, sparsify
from magicsparse.engine.stab_terms import (
    SparseDecomposition,
    all_bit_strings,
    dense_expand,
    overlap_magnitude_sum,
    pack_bits,
    popcount64,
    target_inner_product,
)
from magicsparse.schemas import CheckStatus, RunReport, SamplerConfig, SamplingMode

logger = logging.getLogger(__name__)

DUAL_PATH_TOLERANCE = 1e-9
ORACLE_MIN_TOLERANCE = 1e-9
STDERR_MULTIPLIER = 3.0

NOTE_OMEGA_READING = "tail event reads <Omega|Omega> as <psi|psi>"
NOTE_STDERR_UNDEFINED = "stderr undefined for runs=1"
NOTE_DENSE_SKIPPED = "dense cross-check skipped above t={cap}"


@dataclass(frozen=True)
class ErrorEvaluation:
    value: float
    norm: float
    target_overlap: complex
    dense_value: Optional[float] = None

    @property
    def dense_checked(self) -> bool:
        return self.dense_value is not None


@dataclass(frozen=True)
class CrossTermStats:
    sum_abs: float
    implied_gamma: float


@dataclass(frozen=True)
class RunSample:
    sq_error: float
    norm: float
    target_overlap: float
    implied_gamma: float
    tail_event: bool
    dense_checked: bool


def evaluate_error(d: SparseDecomposition, dense_cap: Optional[int] = None,
                   workers: Optional[int] = None) -> ErrorEvaluation:
    """
    ||D - psi||^2 from Gram quantities, checked against dense vectors when t <= dense_cap.

    Raises ValidationFailure when the two paths disagree by more than 1e-9.
    """
    cap = settings.DENSE_MAX_QUBITS if dense_cap is None else dense_cap
    norm = gram_norm_exact(d, workers=workers).value
    overlap = target_inner_product(d)
    value = max(1.0 - 2.0 * overlap.real + norm, 0.0)

    dense_value = None
    if d.t <= min(cap, settings.DENSE_MAX_QUBITS):
        difference = magic_states.target_dense(d.phi, d.t).amplitudes - dense_expand(d).amplitudes
        dense_value = float(np.vdot(difference, difference).real)
        if abs(dense_value - value) > DUAL_PATH_TOLERANCE * max(1.0, value):
            raise ValidationFailure(
                f"error paths disagree: Gram {value:.12g} vs dense {dense_value:.12g} (t={d.t}, k={d.k})"
            )
    return ErrorEvaluation(value=value, norm=norm, target_overlap=overlap, dense_value=dense_value)


def exact_error(d: SparseDecomposition) -> float:
    evaluation = evaluate_error(d)
    if not evaluation.dense_checked:
        logger.debug(f"exact_error: t={d.t} above dense cap, Gram path only")
    return evaluation.value


def cross_term_stats(d: SparseDecomposition, workers: Optional[int] = None) -> CrossTermStats:
    """Sum of |<omega_i|omega_j>| over i != j, and the gamma that sum would imply."""
    sum_abs = max(overlap_magnitude_sum(d, workers=workers) - d.k, 0.0)
    implied = d.k - d.l1 ** 2 * sum_abs / d.k
    return CrossTermStats(sum_abs=sum_abs, implied_gamma=implied)


def within_group_overlap_sum(t: int, include_diagonal: bool = True) -> float:
    """Sum of |<omega_a|omega_b>| over ordered pairs inside one correlated group."""
    off_diagonal = 2 * t * 2.0 ** -0.5 + t * (t - 1) / 2
    return off_diagonal + (t + 1) if include_diagonal else off_diagonal


def _flip_matrix(t: int) -> np.ndarray:
    return np.vstack([np.zeros((1, t), dtype=np.uint8), np.eye(t, dtype=np.uint8)])


def _cross_group_expectation_enumerated(t: int) -> float:
    """
    E over independent uniform bases x, y of sum_{a,b} 2^{-|x^f_a ^ y^f_b|/2}.

    Only z = x ^ y matters, so the average runs over all 2^t values of z.
    """
    flips = _flip_matrix(t)
    offsets = pack_bits((flips[:, None, :] ^ flips[None, :, :]).reshape(-1, t))
    z = pack_bits(all_bit_strings(t))
    weights = 2.0 ** (-0.5 * np.arange(t + 1))
    total = 0.0
    for offset in offsets:
        total += weights[popcount64(z ^ offset[None, :]).sum(axis=1)].sum()
    return total / (1 << t)


def _within_group_enumerated(t: int) -> float:
    group = pack_bits(_flip_matrix(t))
    distance = popcount64(group[:, None, :] ^ group[None, :, :]).sum(axis=2)
    return float((2.0 ** (-0.5 * distance)).sum())


def ensemble_norm_expectation(t: int, delta: float, mode: Union[SamplingMode, str],
                              phi: float = magic_states.PI_4, method: str = "auto") -> float:
    """
    Exact E<psi|psi> of the sampling ensemble (no post-selection).

    iid: l1^2 / k + (k - 1) / k. Correlated: the within-group sum is fixed,
    the cross-group pairs are averaged either by enumeration over base
    differences (method="enumeration") or by the closed form
    ((1 + 2^{-1/2}) / 2)^t per term pair ("closed").
    """
    mode = SamplingMode(mode)
    k, m = sample_count(phi, t, delta, mode)
    l1 = magic_states.l1_norm(phi, t)
    if mode == SamplingMode.IID:
        return l1 ** 2 / k + (k - 1) / k

    if not magic_states.is_pi_over_4(phi):
        raise ConfigurationError(f"correlated ensemble is only defined at phi = pi/4, got phi={phi!r}")
    if method == "auto":
        method = "enumeration" if t <= settings.ENUMERATION_MAX_QUBITS else "closed"
    if method == "enumeration":
        if t > settings.ENUMERATION_MAX_QUBITS:
            raise SizeLimitError("ensemble enumeration", t, settings.ENUMERATION_MAX_QUBITS)
        within = _within_group_enumerated(t)
        across = _cross_group_expectation_enumerated(t)
    elif method == "closed":
        within = within_group_overlap_sum(t)
        across = (t + 1) ** 2 * ((1.0 + 2.0 ** -0.5) / 2.0) ** t
    else:
        raise ValueError(f"unknown method {method!r}; expected 'auto', 'enumeration' or 'closed'")
    return (l1 / k) ** 2 * (m * within + m * (m - 1) * across)


def tail_bound(t: int, delta: float, gamma_val: float, phi: float = magic_states.PI_4) -> float:
    """1 - 2 exp(-delta^2 xi^t / 8 + gamma delta^2 / 8); negative values mean the bound is vacuous."""
    xi = magic_states.extent(phi, t)
    return 1.0 - 2.0 * math.exp(-delta ** 2 * xi / 8.0 + gamma_val * delta ** 2 / 8.0)


def _mean_stderr(values: Sequence[float]) -> Tuple[float, Optional[float]]:
    data = np.asarray(values, dtype=np.float64)
    mean = float(data.mean())
    if data.size < 2:
        return mean, None
    return mean, float(data.std(ddof=1) / math.sqrt(data.size))


def _single_run(cfg: SamplerConfig, dense_cap: int) -> RunSample:
    decomposition, _ = sparsify(cfg)
    evaluation = evaluate_error(decomposition, dense_cap=dense_cap)
    stats = cross_term_stats(decomposition)
    threshold = evaluation.norm - 1.0 + cfg.delta ** 2
    return RunSample(
        sq_error=evaluation.value,
        norm=evaluation.norm,
        target_overlap=evaluation.target_overlap.real,
        implied_gamma=stats.implied_gamma,
        tail_event=evaluation.value <= threshold,
        dense_checked=evaluation.dense_checked,
    )


def _run_ensemble(t: int, delta: float, mode: SamplingMode, runs: int, seed: int, phi: float,
                  dense_cap: int, workers: Optional[int]) -> List[RunSample]:
    configs = [
        SamplerConfig(phi=phi, t=t, delta=delta, mode=mode, seed=derive_seed(seed, "run", r))
        for r in range(runs)
    ]
    return run_ordered(lambda cfg: _single_run(cfg, dense_cap), configs, workers, label="run")


def _tail_status(fraction: float, bound: float, runs: int) -> CheckStatus:
    if bound <= 0.0:
        return CheckStatus.VACUOUS
    stderr = math.sqrt(bound * (1.0 - bound) / runs)
    return CheckStatus.PASS if fraction >= bound - STDERR_MULTIPLIER * stderr else CheckStatus.FAIL


def _build_report(t: int, delta: float, mode: SamplingMode, phi: float, runs: int,
                  samples: List[RunSample], dense_cap: int) -> RunReport:
    k, _ = sample_count(phi, t, delta, mode)
    gamma_val = gamma(mode, t)
    notes = [NOTE_OMEGA_READING]

    mean_err, err_stderr = _mean_stderr([s.sq_error for s in samples])
    mean_gap, gap_stderr = _mean_stderr([s.norm - 1.0 for s in samples])
    mean_overlap, overlap_stderr = _mean_stderr([s.target_overlap for s in samples])
    mean_implied, _ = _mean_stderr([s.implied_gamma for s in samples])
    claimed_bound = (magic_states.extent(phi, t) - gamma_val) / k

    if err_stderr is None:
        notes.append(NOTE_STDERR_UNDEFINED)
        claim_status = CheckStatus.SKIPPED
    elif mean_err <= delta ** 2 + STDERR_MULTIPLIER * err_stderr:
        claim_status = CheckStatus.PASS
    else:
        claim_status = CheckStatus.FAIL

    expected_norm = ensemble_norm_expectation(t, delta, mode, phi)
    if gap_stderr is None:
        oracle_status = CheckStatus.SKIPPED
    else:
        tolerance = max(STDERR_MULTIPLIER * gap_stderr, ORACLE_MIN_TOLERANCE)
        oracle_status = CheckStatus.PASS if abs(1.0 + mean_gap - expected_norm) <= tolerance else CheckStatus.FAIL

    if dense_cap > 0 and not all(s.dense_checked for s in samples):
        notes.append(NOTE_DENSE_SKIPPED.format(cap=dense_cap))

    fraction = sum(s.tail_event for s in samples) / runs
    bound = tail_bound(t, delta, gamma_val, phi)

    return RunReport(
        t=t, delta=delta, mode=mode, phi=phi, runs=runs, k=k, gamma=gamma_val,
        mean_sq_error=mean_err, stderr=err_stderr,
        mean_norm_gap=mean_gap, norm_gap_stderr=gap_stderr,
        mean_target_overlap=mean_overlap, target_overlap_stderr=overlap_stderr,
        implied_gamma=mean_implied, claimed_bound=claimed_bound, claim_status=claim_status,
        expected_norm=expected_norm, oracle_status=oracle_status,
        tail_fraction=fraction, tail_bound_value=bound, tail_status=_tail_status(fraction, bound, runs),
        warnings=regime_check(t, delta), notes=notes,
    )


def mc_expected_error(t: int, delta: float, mode: Union[SamplingMode, str], runs: int, seed: int = 0,
                      phi: float = magic_states.PI_4, workers: Optional[int] = None) -> RunReport:
    """
    Sample `runs` independent decompositions and report error statistics.

    Runs with t <= DENSE_CHECK_MAX_QUBITS are cross-checked densely.
    """
    mode = SamplingMode(mode)
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    dense_cap = settings.DENSE_CHECK_MAX_QUBITS
    samples = _run_ensemble(t, delta, mode, runs, seed, phi, dense_cap, workers)
    report = _build_report(t, delta, mode, phi, runs, samples, dense_cap)
    logger.info(
        f"Expected-error report: t={t}, delta={delta}, mode={mode.value}, runs={runs}, "
        f"mean={report.mean_sq_error:.6g}, claim={report.claim_status.value}, oracle={report.oracle_status.value}"
    )
    return report


def mc_tail_check(t: int, delta: float, mode: Union[SamplingMode, str], runs: int, seed: int = 0,
                  phi: float = magic_states.PI_4, workers: Optional[int] = None) -> RunReport:
    """Fraction of runs with ||D - psi||^2 <= <psi|psi> - 1 + delta^2, against tail_bound. Gram path only."""
    mode = SamplingMode(mode)
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    samples = _run_ensemble(t, delta, mode, runs, seed, phi, 0, workers)
    report = _build_report(t, delta, mode, phi, runs, samples, 0)
    logger.info(
        f"Tail report: t={t}, delta={delta}, mode={mode.value}, runs={runs}, "
        f"fraction={report.tail_fraction:.6g}, bound={report.tail_bound_value:.6g}, "
        f"status={report.tail_status.value}"
    )
    return report
