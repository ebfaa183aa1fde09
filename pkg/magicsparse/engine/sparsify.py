"""
Sparsification samplers: i.i.d. and correlated L1 sampling of the tilde expansion.

Both samplers draw their randomness from Philox sub-streams keyed by block
index, so a decomposition depends only on (config, seed).
"""
from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from magicsparse.core.config import settings
from magicsparse.core.exceptions import (
    ConfigurationError,
    DomainError,
    InfeasibleConfigError,
    PostselectionExhaustedError,
)
from magicsparse.core.rng import derive_seed, substream
from magicsparse.engine import magic_states
from magicsparse.engine.norms import gram_norm_exact
from magicsparse.engine.stab_terms import SparseDecomposition
from magicsparse.schemas import NormEstimate, SamplerConfig, SamplingMode

logger = logging.getLogger(__name__)

WARN_EXTENT_SMALL = "WARN_EXTENT_SMALL"
WARN_DELTA_LARGE = "WARN_DELTA_LARGE"

CROSS_TERM_SLOPE = 1.0 - 2.0 ** -0.5

NormFn = Callable[[SparseDecomposition], Union[NormEstimate, float]]


def gamma(mode: Union[SamplingMode, str], t: int) -> float:
    mode = SamplingMode(mode)
    t = magic_states.check_qubits(t)
    if mode == SamplingMode.IID:
        return 1.0
    if mode == SamplingMode.CORRELATED:
        return 1.0 + CROSS_TERM_SLOPE * t
    raise ConfigurationError(f"no gamma is defined for mode {mode.value!r}")


def sample_count(phi: float, t: int, delta: float,
                 mode: Union[SamplingMode, str]) -> Tuple[int, Optional[int]]:
    """
    Term count k for a target additive error delta.

    Returns (k, None) for iid and (k, m) for correlated sampling, where m is
    the number of (t+1)-term groups and k = m (t+1).
    """
    mode = SamplingMode(mode)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    xi = magic_states.extent(phi, t)
    if math.isinf(xi):
        raise DomainError(f"extent overflows float range at t={t}; the term count is not representable")
    offset = gamma(mode, t)
    if xi <= offset:
        raise InfeasibleConfigError(xi, offset)
    k_target = math.ceil((xi - offset) / delta ** 2)
    if mode == SamplingMode.IID:
        return k_target, None
    groups = math.ceil(k_target / (t + 1))
    return groups * (t + 1), groups


def check_config(cfg: SamplerConfig) -> None:
    if cfg.mode == SamplingMode.CORRELATED and not magic_states.is_pi_over_4(cfg.phi):
        raise ConfigurationError(
            f"correlated sampling is only supported at phi = pi/4, got phi={cfg.phi!r}"
        )


def _block_bounds(total: int, block: int) -> List[Tuple[int, int, int]]:
    return [(index, lo, min(lo + block, total)) for index, lo in enumerate(range(0, total, block))]


def _sampled_coeffs(bits: np.ndarray, phi: float, l1: float, k: int) -> np.ndarray:
    """(l1 / k) times the unit phase of c_x = prod_j c_{x_j}."""
    coeffs = magic_states.tilde_coeffs(phi)
    n_plus = bits.sum(axis=1).astype(np.int64)
    n_zero = bits.shape[1] - n_plus
    return (l1 / k) * coeffs.phase0 ** n_zero * coeffs.phase1 ** n_plus


def sparsify_iid(cfg: SamplerConfig, seed: Optional[int] = None) -> SparseDecomposition:
    """k tilde strings drawn independently; bit j is 1 with probability |c1| / (|c0| + |c1|)."""
    if cfg.mode != SamplingMode.IID:
        raise ConfigurationError(f"sparsify_iid called with mode {cfg.mode.value!r}")
    seed = cfg.seed if seed is None else seed
    t = cfg.t
    k, _ = sample_count(cfg.phi, t, cfg.delta, SamplingMode.IID)
    l1 = magic_states.l1_norm(cfg.phi, t)
    prob_plus = magic_states.tilde_coeffs(cfg.phi).prob_plus

    bits = np.empty((k, t), dtype=np.uint8)
    for index, lo, hi in _block_bounds(k, settings.SAMPLING_BLOCK):
        rng = substream(seed, "iid", index)
        bits[lo:hi] = rng.random((hi - lo, t)) < prob_plus

    logger.debug(f"iid sample: t={t}, k={k}, seed={seed}")
    return SparseDecomposition(
        t=t, phi=cfg.phi, mode=SamplingMode.IID, bits=bits,
        coeffs=_sampled_coeffs(bits, cfg.phi, l1, k),
        delta=cfg.delta, gamma=gamma(SamplingMode.IID, t), l1=l1, seed=seed, group_size=1,
    )


def sparsify_correlated(cfg: SamplerConfig, seed: Optional[int] = None) -> SparseDecomposition:
    """
    m uniform base strings, each followed by its t single-bit flips in qubit order.
    """
    if cfg.mode != SamplingMode.CORRELATED:
        raise ConfigurationError(f"sparsify_correlated called with mode {cfg.mode.value!r}")
    check_config(cfg)
    seed = cfg.seed if seed is None else seed
    t = cfg.t
    k, m = sample_count(cfg.phi, t, cfg.delta, SamplingMode.CORRELATED)
    l1 = magic_states.l1_norm(cfg.phi, t)

    bases = np.empty((m, t), dtype=np.uint8)
    for index, lo, hi in _block_bounds(m, settings.SAMPLING_BLOCK):
        rng = substream(seed, "correlated", index)
        bases[lo:hi] = rng.integers(0, 2, size=(hi - lo, t), dtype=np.uint8)

    flips = np.vstack([np.zeros((1, t), dtype=np.uint8), np.eye(t, dtype=np.uint8)])
    bits = (bases[:, None, :] ^ flips[None, :, :]).reshape(k, t)

    logger.debug(f"correlated sample: t={t}, m={m}, k={k}, seed={seed}")
    return SparseDecomposition(
        t=t, phi=cfg.phi, mode=SamplingMode.CORRELATED, bits=bits,
        coeffs=_sampled_coeffs(bits, cfg.phi, l1, k),
        delta=cfg.delta, gamma=gamma(SamplingMode.CORRELATED, t), l1=l1, seed=seed,
        group_size=t + 1,
    )


def _sample_once(cfg: SamplerConfig, seed: Optional[int] = None) -> SparseDecomposition:
    if cfg.mode == SamplingMode.IID:
        return sparsify_iid(cfg, seed)
    return sparsify_correlated(cfg, seed)


def _norm_value(result: Union[NormEstimate, float]) -> float:
    return float(result.value) if isinstance(result, NormEstimate) else float(result)


def sparsify_with_postselection(cfg: SamplerConfig, norm_fn: NormFn) -> Tuple[SparseDecomposition, int]:
    """
    Resample until norm_fn(psi) - 1 <= postselect_factor * delta^2.

    Attempt 0 uses cfg.seed; later attempts use seeds derived from it, so
    the accepted decomposition is still a function of cfg alone.
    """
    check_config(cfg)
    threshold = cfg.postselect_factor * cfg.delta ** 2
    last_gap: Optional[float] = None
    for attempt in range(cfg.max_attempts):
        seed = cfg.seed if attempt == 0 else derive_seed(cfg.seed, "attempt", attempt)
        decomposition = _sample_once(cfg, seed)
        last_gap = _norm_value(norm_fn(decomposition)) - 1.0
        if last_gap <= threshold:
            logger.info(f"Post-selection accepted attempt {attempt + 1} (gap {last_gap:.6g} <= {threshold:.6g})")
            return decomposition, attempt + 1
        logger.warning(f"Post-selection rejected attempt {attempt + 1}: gap {last_gap:.6g} > {threshold:.6g}")
    raise PostselectionExhaustedError(cfg.max_attempts, last_gap)


def sparsify(cfg: SamplerConfig, norm_fn: Optional[NormFn] = None) -> Tuple[SparseDecomposition, int]:
    """Sample per cfg.mode, with post-selection when cfg.postselect is set. Returns (psi, attempts)."""
    check_config(cfg)
    if cfg.postselect:
        return sparsify_with_postselection(cfg, norm_fn or gram_norm_exact)
    return _sample_once(cfg), 1


def regime_check(t: int, delta: float) -> List[str]:
    """Warnings for the small-extent and large-delta regimes; never raises."""
    warnings: List[str] = []
    xi = magic_states.extent(magic_states.PI_4, t)
    if xi < settings.REGIME_EXTENT_FACTOR * delta ** -2:
        warnings.append(WARN_EXTENT_SMALL)
        logger.warning(
            f"{WARN_EXTENT_SMALL}: extent {xi:.6g} < {settings.REGIME_EXTENT_FACTOR:g} * delta^-2 "
            f"= {settings.REGIME_EXTENT_FACTOR * delta ** -2:.6g}"
        )
    if delta ** 2 > settings.REGIME_DELTA_FACTOR / t:
        warnings.append(WARN_DELTA_LARGE)
        logger.warning(
            f"{WARN_DELTA_LARGE}: delta^2 = {delta ** 2:.6g} > {settings.REGIME_DELTA_FACTOR:g} / t "
            f"= {settings.REGIME_DELTA_FACTOR / t:.6g}"
        )
    return warnings
