"""
Closed-form math of the diagonal magic states |D_phi>^{(x)t}.

Every qubit of the target is the sum of two stabilizer pieces, a multiple of
|0> and a multiple of |+>. The multiples (tilde coefficients) carry all the
phi dependence; extent, L1 norm, dense targets and target overlaps are
products of per-qubit quantities.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import reduce
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from magicsparse.core.config import settings
from magicsparse.core.exceptions import DimensionMismatchError, DomainError, SizeLimitError

if TYPE_CHECKING:
    from magicsparse.engine.stab_terms import ProductStabTerm

NU = math.cos(math.pi / 8)
PI_4 = math.pi / 4
INV_SQRT2 = 1.0 / math.sqrt(2.0)

KET_ZERO = np.array([1.0, 0.0], dtype=np.complex128)
KET_PLUS = np.array([INV_SQRT2, INV_SQRT2], dtype=np.complex128)

RELATION_TOLERANCE = 1e-12


def check_phi(phi: float) -> float:
    phi = float(phi)
    if not (math.isfinite(phi) and 0.0 < phi < math.pi / 2):
        raise DomainError(f"phi must lie in the open interval (0, pi/2), got {phi!r}")
    return phi


def check_qubits(t: int) -> int:
    if isinstance(t, bool) or int(t) != t or t < 1:
        raise DomainError(f"qubit count t must be a positive integer, got {t!r}")
    return int(t)


def is_pi_over_4(phi: float, tol: float = 1e-12) -> bool:
    return abs(float(phi) - PI_4) <= tol


@dataclass(frozen=True)
class TildeCoeffs:
    """Per-qubit coefficients of the normalized |0> and |+> pieces, 1/(2 nu) included."""
    c0: complex
    c1: complex

    @property
    def abs0(self) -> float:
        return abs(self.c0)

    @property
    def abs1(self) -> float:
        return abs(self.c1)

    @property
    def phase0(self) -> complex:
        return self.c0 / abs(self.c0)

    @property
    def phase1(self) -> complex:
        return self.c1 / abs(self.c1)

    @property
    def l1(self) -> float:
        return self.abs0 + self.abs1

    @property
    def extent(self) -> float:
        return self.l1 ** 2

    @property
    def prob_plus(self) -> float:
        """Probability that an L1 sample picks |+> on one qubit."""
        return self.abs1 / self.l1


@dataclass(frozen=True)
class DenseState:
    amplitudes: np.ndarray
    t: int

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.t,):
            raise ValueError(f"dense state for t={self.t} needs {1 << self.t} amplitudes, "
                             f"got shape {self.amplitudes.shape}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "DenseState") -> complex:
        """<self|other>."""
        if other.t != self.t:
            raise DimensionMismatchError(self.t, other.t)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class RelationCheck:
    holds: bool
    max_deviation: float

    def __bool__(self) -> bool:
        return self.holds


def tilde_vectors(phi: float) -> Tuple[np.ndarray, np.ndarray]:
    """The un-normalized single-qubit states |0~> and |1~>, evaluated as written."""
    phi = check_phi(phi)
    prefactor = 1j / math.sqrt(2.0)
    eighth = cmath.exp(-1j * PI_4)
    rotor = cmath.exp(1j * phi)
    alpha0 = prefactor * (-1j + eighth) * (-1j + rotor)
    alpha1 = prefactor * (1 + eighth) * (1 - rotor)
    return alpha0 * KET_ZERO, alpha1 * KET_PLUS


def tilde_coeffs(phi: float) -> TildeCoeffs:
    zero_tilde, plus_tilde = tilde_vectors(phi)
    alpha0 = complex(zero_tilde[0])
    # |1~> is alpha1 |+>, so alpha1 = sqrt(2) * <0|1~>
    alpha1 = complex(plus_tilde[0]) / INV_SQRT2
    return TildeCoeffs(c0=alpha0 / (2 * NU), c1=alpha1 / (2 * NU))


def tilde_inner_product(phi: float) -> float:
    """|<0~|1~>| of the normalized tilde states."""
    zero_tilde, plus_tilde = tilde_vectors(phi)
    overlap = abs(np.vdot(zero_tilde, plus_tilde))
    return float(overlap / (np.linalg.norm(zero_tilde) * np.linalg.norm(plus_tilde)))


def _per_qubit_l1(phi: float) -> float:
    return math.sqrt(1 - math.sin(phi)) + math.sqrt(1 - math.cos(phi))


def _power(base: float, exponent: int) -> float:
    # inf once the result leaves float range (t above ~4480 at pi/4)
    try:
        return base ** exponent
    except OverflowError:
        return math.inf


def extent(phi: float, t: int) -> float:
    phi = check_phi(phi)
    t = check_qubits(t)
    return _power(_per_qubit_l1(phi), 2 * t)


def log2_extent(phi: float, t: int) -> float:
    """log2 of the extent; finite for every t, unlike extent itself."""
    phi = check_phi(phi)
    t = check_qubits(t)
    return 2 * t * math.log2(_per_qubit_l1(phi))


def l1_norm(phi: float, t: int) -> float:
    phi = check_phi(phi)
    t = check_qubits(t)
    return _power(_per_qubit_l1(phi), t)


def single_qubit_target(phi: float) -> np.ndarray:
    coeffs = tilde_coeffs(phi)
    return coeffs.c0 * KET_ZERO + coeffs.c1 * KET_PLUS


def target_dense(phi: float, t: int) -> DenseState:
    t = check_qubits(t)
    if t > settings.DENSE_MAX_QUBITS:
        raise SizeLimitError("target_dense", t, settings.DENSE_MAX_QUBITS)
    qubit = single_qubit_target(phi)
    return DenseState(amplitudes=reduce(np.kron, [qubit] * t), t=t)


def target_amplitudes(phi: float) -> Tuple[complex, complex]:
    """(<0|D>, <+|D>) for the single-qubit target."""
    qubit = single_qubit_target(phi)
    return complex(qubit[0]), complex((qubit[0] + qubit[1]) * INV_SQRT2)


def target_overlap(term: "ProductStabTerm", phi: float, t: Optional[int] = None) -> complex:
    """<omega|D_phi^{(x)t}> for the normalized term omega = u |bits>, in O(t)."""
    if t is not None and term.t != t:
        raise DimensionMismatchError(term.t, t)
    on_zero, on_plus = target_amplitudes(phi)
    n_plus = int(np.count_nonzero(term.bits))
    n_zero = term.t - n_plus
    return term.phase.conjugate() * on_zero ** n_zero * on_plus ** n_plus


def h_magic_relation_check(phase: float = -math.pi / 8, reference: str = "target") -> RelationCheck:
    """
    Compare e^{i phase} S H |T> against a reference single-qubit state.

    reference="target" uses the dense evaluation of the tilde expansion at
    phi = pi/4; reference="printed" uses (|0> + sqrt(i)|1>)/sqrt(2). The two
    references differ by a single-qubit Clifford and phase.
    """
    t_state = np.array([1.0, cmath.exp(1j * PI_4)], dtype=np.complex128) * INV_SQRT2
    s_gate = np.diag([1.0, 1j]).astype(np.complex128)
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) * INV_SQRT2
    candidate = cmath.exp(1j * phase) * (s_gate @ (hadamard @ t_state))

    if reference == "target":
        expected = single_qubit_target(PI_4)
    elif reference == "printed":
        expected = np.array([1.0, cmath.exp(1j * PI_4)], dtype=np.complex128) * INV_SQRT2
    else:
        raise ValueError(f"unknown reference {reference!r}; expected 'target' or 'printed'")

    deviation = float(np.max(np.abs(candidate - expected)))
    return RelationCheck(holds=deviation <= RELATION_TOLERANCE, max_deviation=deviation)
