"""
Norms of sparse decompositions.

gram_norm_exact sums every pairwise overlap. fastnorm estimates the same
quantity from random equatorial states theta (amplitudes 2^{-t/2} i^{q(x)}):
averaging 2^t |<theta|psi>|^2 over a uniform Z_4 diagonal cancels every
cross term, so the estimator is unbiased for any couplings J.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from magicsparse.core.config import settings
from magicsparse.core.exceptions import DimensionMismatchError, DomainError, SizeLimitError, ValidationFailure
from magicsparse.core.rng import substream
from magicsparse.core.task_queue import run_ordered
from magicsparse.engine.gauss_sum import QuadraticFormZ4, gauss_eval_restricted
from magicsparse.engine.magic_states import DenseState
from magicsparse.engine.stab_terms import ProductStabTerm, SparseDecomposition, all_bit_strings, dense_expand, gram_dot
from magicsparse.schemas import NormEstimate

logger = logging.getLogger(__name__)

IMAGINARY_RESIDUE_TOLERANCE = 1e-10
EXHAUSTIVE_DIAGONAL_MAX_QUBITS = 8
BACKENDS = ("gauss", "dense")

_CONJ_I_POWERS = np.array([1, -1j, -1, 1j], dtype=np.complex128)


@dataclass(frozen=True)
class EquatorialState:
    t: int
    form: QuadraticFormZ4

    def __post_init__(self):
        if self.form.m != self.t:
            raise DimensionMismatchError(self.form.m, self.t)


def _draw_forms(t: int, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """n diagonals uniform on Z_4^t and n strictly-upper binary coupling matrices."""
    diagonals = rng.integers(0, 4, size=(n, t), dtype=np.int64)
    couplings = np.triu(rng.integers(0, 2, size=(n, t, t), dtype=np.uint8), k=1)
    return diagonals, couplings


def random_equatorial(t: int, rng: np.random.Generator) -> EquatorialState:
    if t < 1:
        raise DomainError(f"qubit count t must be a positive integer, got {t!r}")
    diagonals, couplings = _draw_forms(t, 1, rng)
    return EquatorialState(t=t, form=QuadraticFormZ4(d=tuple(diagonals[0].tolist()), J=couplings[0]))


def random_equatorial_batch(t: int, n: int, rng: np.random.Generator) -> List[EquatorialState]:
    diagonals, couplings = _draw_forms(t, n, rng)
    return [
        EquatorialState(t=t, form=QuadraticFormZ4(d=tuple(d.tolist()), J=J))
        for d, J in zip(diagonals, couplings)
    ]


def _bare_overlap(theta: EquatorialState, plus_mask: int, n_plus: int) -> complex:
    """<theta|b> for the unit-norm product state |b> with |+> on plus_mask."""
    gauss = gauss_eval_restricted(theta.form, plus_mask)
    if gauss.zero:
        return 0j
    return 2.0 ** (-0.5 * (theta.t + n_plus)) * gauss.to_complex().conjugate()


def equatorial_overlap(theta: EquatorialState, term: ProductStabTerm) -> complex:
    """<theta|omega> for the normalized term omega = u |bits>; O(t^3)."""
    if term.t != theta.t:
        raise DimensionMismatchError(term.t, theta.t)
    plus_mask = sum(1 << j for j, b in enumerate(term.bits) if b)
    return term.phase * _bare_overlap(theta, plus_mask, sum(term.bits))


def _counted_inner(theta: EquatorialState, d: SparseDecomposition) -> Tuple[complex, int]:
    """<theta|psi> and the number of term overlaps evaluated for it."""
    total = 0j
    evaluated = 0
    for coeff, mask, n_plus in zip(d.coeffs.tolist(), d.plus_masks, d.plus_counts.tolist()):
        total += coeff * _bare_overlap(theta, mask, n_plus)
        evaluated += 1
    return total, evaluated


def equatorial_inner(theta: EquatorialState, d: SparseDecomposition) -> complex:
    """<theta|psi> = sum_i coeff_i <theta|b_i>."""
    if d.t != theta.t:
        raise DimensionMismatchError(d.t, theta.t)
    return _counted_inner(theta, d)[0]


def equatorial_dense(theta: EquatorialState) -> DenseState:
    t = theta.t
    if t > settings.DENSE_MAX_QUBITS:
        raise SizeLimitError("equatorial_dense", t, settings.DENSE_MAX_QUBITS)
    x = all_bit_strings(t).astype(np.int64)
    phases = _quadratic_values(x, np.asarray(theta.form.d, dtype=np.int64), theta.form.J)
    amplitudes = 2.0 ** (-0.5 * t) * _CONJ_I_POWERS[(-phases) % 4]
    return DenseState(amplitudes=amplitudes, t=t)


def _quadratic_values(x: np.ndarray, d: np.ndarray, J: np.ndarray) -> np.ndarray:
    """q(x) mod 4 for every row of x (rows ordered like the dense basis)."""
    coupled = (x @ J.astype(np.int64)) * x
    return (x @ d + 2 * coupled.sum(axis=1)) % 4


def gram_norm_exact(d: SparseDecomposition, workers: Optional[int] = None) -> NormEstimate:
    value = gram_dot(d, d, workers=workers)
    scale = max(1.0, abs(value.real))
    if abs(value.imag) > IMAGINARY_RESIDUE_TOLERANCE * scale:
        raise ValidationFailure(f"Gram norm has imaginary residue {value.imag:.3e}")
    return NormEstimate(value=max(value.real, 0.0), method="exact", estimator="exact")


def fastnorm_samples(epsilon: float, pfail: float) -> int:
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not 0.0 < pfail < 1.0:
        raise DomainError(f"pfail must lie in (0, 1), got {pfail!r}")
    # 1e-9 absorbs rounding in epsilon^2 * pfail so exact ratios do not round up
    return math.ceil(settings.FASTNORM_CHEBYSHEV_CONSTANT / (epsilon ** 2 * pfail) - 1e-9)


def median_of_means_groups(pfail: float) -> int:
    return math.ceil(8.0 * math.log(1.0 / pfail))


def _gauss_block(d: SparseDecomposition, seed: int, block: int, size: int) -> Tuple[np.ndarray, int]:
    thetas = random_equatorial_batch(d.t, size, substream(seed, "fastnorm", block))
    out = np.empty(size, dtype=np.float64)
    evaluated = 0
    for j, theta in enumerate(thetas):
        inner, count = _counted_inner(theta, d)
        out[j] = abs(inner) ** 2
        evaluated += count
    return out, evaluated


def _dense_block(d: SparseDecomposition, psi: np.ndarray, x: np.ndarray, seed: int,
                 block: int, size: int) -> Tuple[np.ndarray, int]:
    diagonals, couplings = _draw_forms(d.t, size, substream(seed, "fastnorm", block))
    scale = 2.0 ** (-0.5 * d.t)
    out = np.empty(size, dtype=np.float64)
    evaluated = 0
    for j in range(size):
        q = _quadratic_values(x, diagonals[j], couplings[j])
        out[j] = abs(scale * np.dot(_CONJ_I_POWERS[q], psi)) ** 2
        evaluated += 1
    return out, evaluated


def fastnorm(d: SparseDecomposition, epsilon: float = 0.1, pfail: float = 0.1, seed: int = 0, *,
             samples: Optional[int] = None, median_of_means: bool = False, backend: str = "gauss",
             workers: Optional[int] = None) -> NormEstimate:
    """
    eta = (2^t / L) sum_j |<theta_j|psi>|^2 over L random equatorial states.

    L defaults to ceil(C / (epsilon^2 pfail)). Both backends draw the same
    theta_j from per-block sub-streams; "dense" evaluates the overlaps
    against the expanded state and exists for statistical checks at large L.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown fastnorm backend {backend!r}; expected one of {BACKENDS}")
    L = fastnorm_samples(epsilon, pfail) if samples is None else int(samples)
    if L < 1:
        raise DomainError(f"sample count must be positive, got {L}")

    block_size = settings.FASTNORM_BLOCK
    blocks = [(index, min(block_size, L - lo)) for index, lo in enumerate(range(0, L, block_size))]

    if backend == "gauss":
        per_block = run_ordered(lambda b: _gauss_block(d, seed, b[0], b[1]), blocks, workers, label="fastnorm")
    else:
        psi = dense_expand(d).amplitudes
        x = all_bit_strings(d.t).astype(np.int64)
        per_block = run_ordered(lambda b: _dense_block(d, psi, x, seed, b[0], b[1]), blocks, workers,
                                label="fastnorm")

    # summed in block order
    evaluations = sum(count for _, count in per_block)
    values = (2.0 ** d.t) * np.concatenate([block_values for block_values, _ in per_block])
    if median_of_means:
        groups = min(L, median_of_means_groups(pfail))
        estimate = float(np.median([chunk.mean() for chunk in np.array_split(values, groups)]))
        estimator = "median_of_means"
    else:
        estimate = float(values.sum() / L)
        estimator = "mean"

    logger.debug(f"fastnorm: t={d.t}, k={d.k}, L={L}, backend={backend}, eta={estimate:.9g}")
    return NormEstimate(
        value=max(estimate, 0.0), samples=L, method="fastnorm", epsilon=epsilon, pfail=pfail,
        estimator=estimator, backend=backend, overlap_evaluations=evaluations,
    )


def exhaustive_diagonal_norm(d: SparseDecomposition, J: np.ndarray) -> float:
    """Average of 2^t |<theta|psi>|^2 over all 4^t diagonals with couplings J held fixed."""
    t = d.t
    if t > EXHAUSTIVE_DIAGONAL_MAX_QUBITS:
        raise SizeLimitError("exhaustive_diagonal_norm", t, EXHAUSTIVE_DIAGONAL_MAX_QUBITS)
    J = np.asarray(J, dtype=np.uint8)
    total = 0.0
    for diagonal in itertools.product(range(4), repeat=t):
        theta = EquatorialState(t=t, form=QuadraticFormZ4(d=diagonal, J=J))
        total += abs(equatorial_inner(theta, d)) ** 2
    return (2.0 ** t) * total / 4 ** t
