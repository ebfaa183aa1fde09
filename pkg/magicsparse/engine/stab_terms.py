"""
Product stabilizer terms and k-term decompositions.

A term is coeff * |b_1> (x) ... (x) |b_t> with |b_j> = |0> for bit 0 and
|+> for bit 1. All pairwise overlaps of the bare product states are real
and equal 2^{-d/2} for Hamming distance d, so inner products reduce to
XOR + popcount over bit strings packed into 64-bit words.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from magicsparse.core.config import settings
from magicsparse.core.exceptions import (
    DecompositionParseError,
    DecompositionValidationError,
    DimensionMismatchError,
    SizeLimitError,
)
from magicsparse.core.task_queue import run_ordered
from magicsparse.engine import magic_states
from magicsparse.engine.magic_states import DenseState
from magicsparse.schemas import DecompositionFile, SamplingMode, TermRecord

logger = logging.getLogger(__name__)

COEFF_REL_TOLERANCE = 1e-9

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def popcount64(words: np.ndarray) -> np.ndarray:
    """Per-element population count of a uint64 array (SWAR)."""
    w = np.array(words, dtype=np.uint64, copy=True)
    w -= (w >> np.uint64(1)) & _M1
    w = (w & _M2) + ((w >> np.uint64(2)) & _M2)
    w = (w + (w >> np.uint64(4))) & _M4
    return ((w * _H01) >> np.uint64(56)).astype(np.int64)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """(k, t) array of 0/1 -> (k, ceil(t/64)) uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    k, t = bits.shape
    n_words = (t + 63) // 64
    padded = np.zeros((k, n_words * 64), dtype=np.uint8)
    padded[:, :t] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64)


def _unit_phase(coeff: complex) -> complex:
    magnitude = abs(coeff)
    return coeff / magnitude if magnitude > 0 else 1.0 + 0.0j


@dataclass(frozen=True)
class ProductStabTerm:
    bits: Tuple[int, ...]
    coeff: complex

    def __post_init__(self):
        if len(self.bits) < 1:
            raise ValueError("a term needs at least one qubit")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"bits must be 0/1, got {self.bits}")

    @classmethod
    def from_string(cls, bits: str, coeff: complex = 1.0) -> "ProductStabTerm":
        return cls(bits=tuple(int(ch) for ch in bits), coeff=complex(coeff))

    @property
    def t(self) -> int:
        return len(self.bits)

    @property
    def phase(self) -> complex:
        return _unit_phase(self.coeff)

    def bit_string(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True, eq=False)
class SparseDecomposition:
    """
    Ordered k-term decomposition psi = sum_i coeff_i |bits_i> with provenance.

    bits is a read-only (k, t) uint8 array, coeffs a read-only (k,) complex
    array. In correlated mode the rows come in groups of t+1: a base string
    followed by its t single-bit flips in qubit order.
    """
    t: int
    phi: float
    mode: SamplingMode
    bits: np.ndarray
    coeffs: np.ndarray
    delta: float = 0.0
    gamma: float = 0.0
    l1: float = 0.0
    seed: int = 0
    group_size: int = 1

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8, copy=True)
        coeffs = np.array(self.coeffs, dtype=np.complex128, copy=True).reshape(-1)
        if bits.ndim != 2 or bits.shape[1] != self.t:
            raise DimensionMismatchError(bits.shape[-1] if bits.ndim else 0, self.t)
        if bits.shape[0] != coeffs.shape[0]:
            raise DecompositionValidationError(
                f"{bits.shape[0]} bit strings but {coeffs.shape[0]} coefficients"
            )
        bits.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "mode", SamplingMode(self.mode))

    @property
    def k(self) -> int:
        return int(self.coeffs.shape[0])

    @property
    def terms(self) -> List[ProductStabTerm]:
        return [self.term(i) for i in range(self.k)]

    def term(self, index: int) -> ProductStabTerm:
        return ProductStabTerm(bits=tuple(int(b) for b in self.bits[index]), coeff=complex(self.coeffs[index]))

    @cached_property
    def packed(self) -> np.ndarray:
        return pack_bits(self.bits)

    @cached_property
    def plus_masks(self) -> Tuple[int, ...]:
        """Bit j of mask i is set when qubit j of term i is |+>."""
        weights = [1 << j for j in range(self.t)]
        return tuple(sum(w for w, b in zip(weights, row) if b) for row in self.bits.tolist())

    @cached_property
    def plus_counts(self) -> np.ndarray:
        return self.bits.sum(axis=1).astype(np.int64)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseDecomposition):
            return NotImplemented
        return (
            self.t == other.t
            and self.phi == other.phi
            and self.mode == other.mode
            and self.delta == other.delta
            and self.gamma == other.gamma
            and self.l1 == other.l1
            and self.seed == other.seed
            and self.group_size == other.group_size
            and np.array_equal(self.bits, other.bits)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def validate(self) -> "SparseDecomposition":
        """Check the container invariants; raises DecompositionValidationError."""
        if np.any(self.bits > 1):
            raise DecompositionValidationError("bit strings must contain only 0 and 1")
        if not np.all(np.isfinite(self.coeffs)):
            raise DecompositionValidationError("coefficients must be finite")

        if self.mode == SamplingMode.CORRELATED:
            if self.group_size != self.t + 1:
                raise DecompositionValidationError(
                    f"correlated decomposition needs group_size {self.t + 1}, got {self.group_size}"
                )
            if self.k % self.group_size:
                raise DecompositionValidationError(
                    f"k={self.k} is not a multiple of the group size {self.group_size}"
                )
            groups = self.bits.reshape(-1, self.group_size, self.t)
            flips = groups[:, 1:, :] ^ groups[:, :1, :]
            if not np.all(flips == np.eye(self.t, dtype=np.uint8)[None, :, :]):
                raise DecompositionValidationError(
                    "correlated groups must list the base string followed by its single-bit flips"
                )
        elif self.group_size != 1:
            raise DecompositionValidationError(f"{self.mode.value} decomposition needs group_size 1")

        if self.mode in (SamplingMode.IID, SamplingMode.CORRELATED):
            expected = self.l1 / self.k
            magnitudes = np.abs(self.coeffs)
            if np.any(magnitudes == 0):
                raise DecompositionValidationError("sampled terms must have nonzero coefficients")
            if not np.allclose(magnitudes, expected, rtol=COEFF_REL_TOLERANCE, atol=0.0):
                raise DecompositionValidationError(
                    f"sampled coefficients must all have magnitude l1/k = {expected:.17g}"
                )
        return self


def from_terms(terms: Sequence[ProductStabTerm], phi: float = magic_states.PI_4,
               mode: Union[SamplingMode, str] = SamplingMode.EXACT_FULL, **meta) -> SparseDecomposition:
    if not terms:
        raise ValueError("a decomposition needs at least one term")
    t = terms[0].t
    for term in terms:
        if term.t != t:
            raise DimensionMismatchError(term.t, t)
    bits = np.array([term.bits for term in terms], dtype=np.uint8)
    coeffs = np.array([term.coeff for term in terms], dtype=np.complex128)
    return SparseDecomposition(t=t, phi=phi, mode=mode, bits=bits, coeffs=coeffs, **meta)


def all_bit_strings(t: int) -> np.ndarray:
    """All 2^t strings in lexicographic order, qubit 0 as the leading character."""
    index = np.arange(1 << t, dtype=np.int64)[:, None]
    shifts = (t - 1 - np.arange(t, dtype=np.int64))[None, :]
    return ((index >> shifts) & 1).astype(np.uint8)


def exact_full(phi: float, t: int) -> SparseDecomposition:
    """The exact 2^t-term tilde expansion with coefficients c_x = prod_j c_{x_j}."""
    t = magic_states.check_qubits(t)
    if t > settings.EXACT_FULL_MAX_QUBITS:
        raise SizeLimitError("exact_full", t, settings.EXACT_FULL_MAX_QUBITS)
    coeffs = magic_states.tilde_coeffs(phi)
    bits = all_bit_strings(t)
    n_plus = bits.sum(axis=1)
    values = coeffs.c0 ** (t - n_plus) * coeffs.c1 ** n_plus
    return SparseDecomposition(
        t=t, phi=float(phi), mode=SamplingMode.EXACT_FULL, bits=bits, coeffs=values,
        l1=magic_states.l1_norm(phi, t),
    )


def term_overlap(a: ProductStabTerm, b: ProductStabTerm) -> complex:
    """<omega_a|omega_b> of the normalized terms (unit phases, magnitudes dropped)."""
    if a.t != b.t:
        raise DimensionMismatchError(a.t, b.t)
    packed = pack_bits(np.array([a.bits, b.bits], dtype=np.uint8))
    distance = int(popcount64(packed[0] ^ packed[1]).sum())
    return (a.phase.conjugate() * b.phase) * 2.0 ** (-0.5 * distance)


def _pair_sum(left_packed: np.ndarray, left_c: np.ndarray, right_packed: np.ndarray,
              right_c: np.ndarray, t: int, workers: Optional[int]) -> complex:
    """sum_{i,j} conj(left_c_i) right_c_j 2^{-d(i,j)/2}, row blocks reduced in order."""
    weights = 2.0 ** (-0.5 * np.arange(t + 1))
    k_left = left_packed.shape[0]
    per_row = max(1, right_packed.shape[0] * right_packed.shape[1])
    rows = max(1, settings.GRAM_BLOCK_ELEMENTS // per_row)
    blocks = [(lo, min(lo + rows, k_left)) for lo in range(0, k_left, rows)]

    def block_sum(bounds: Tuple[int, int]) -> complex:
        lo, hi = bounds
        xor = left_packed[lo:hi, None, :] ^ right_packed[None, :, :]
        distance = popcount64(xor).sum(axis=2)
        return complex(np.conj(left_c[lo:hi]) @ (weights[distance] @ right_c))

    total = 0.0 + 0.0j
    for partial in run_ordered(block_sum, blocks, workers, label="gram"):
        total += partial
    return total


def gram_dot(d1: SparseDecomposition, d2: SparseDecomposition, workers: Optional[int] = None) -> complex:
    """<psi_1|psi_2> exactly, O(k1 k2 t / 64)."""
    if d1.t != d2.t:
        raise DimensionMismatchError(d1.t, d2.t)
    return _pair_sum(d1.packed, d1.coeffs, d2.packed, d2.coeffs, d1.t, workers)


def overlap_magnitude_sum(d: SparseDecomposition, workers: Optional[int] = None) -> float:
    """sum over all ordered pairs (i, j), diagonal included, of |<omega_i|omega_j>|."""
    ones = np.ones(d.k, dtype=np.complex128)
    return _pair_sum(d.packed, ones, d.packed, ones, d.t, workers).real


def target_inner_product(d: SparseDecomposition) -> complex:
    """<D_phi^{(x)t}|psi> from the per-qubit product formula."""
    on_zero, on_plus = magic_states.target_amplitudes(d.phi)
    n_plus = d.plus_counts
    bare = on_zero ** (d.t - n_plus) * on_plus ** n_plus
    return complex(np.sum(np.conj(bare) * d.coeffs))


def dense_expand(d: SparseDecomposition) -> DenseState:
    if d.t > settings.DENSE_MAX_QUBITS:
        raise SizeLimitError("dense_expand", d.t, settings.DENSE_MAX_QUBITS)
    t = d.t
    index = np.arange(1 << t, dtype=np.int64)
    place = (1 << (t - 1 - np.arange(t, dtype=np.int64)))
    zero_masks = ((1 - d.bits.astype(np.int64)) * place[None, :]).sum(axis=1)
    scales = 2.0 ** (-0.5 * d.plus_counts)
    amplitudes = np.zeros(1 << t, dtype=np.complex128)
    for zero_mask, scale, coeff in zip(zero_masks.tolist(), scales, d.coeffs):
        support = (index & zero_mask) == 0
        amplitudes[support] += coeff * scale
    return DenseState(amplitudes=amplitudes, t=t)


def to_file_model(d: SparseDecomposition) -> DecompositionFile:
    terms = [
        TermRecord(bits="".join("1" if b else "0" for b in row), re=float(c.real), im=float(c.imag))
        for row, c in zip(d.bits.tolist(), d.coeffs.tolist())
    ]
    return DecompositionFile(
        t=d.t, phi=float(d.phi), mode=d.mode, delta=float(d.delta), gamma=float(d.gamma),
        k=d.k, l1=float(d.l1), seed=str(int(d.seed)), group_size=d.group_size, terms=terms,
    )


def serialize(d: SparseDecomposition) -> bytes:
    return to_file_model(d).model_dump_json(indent=2).encode("utf-8")


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors()[:3]:
        location = ".".join(str(p) for p in item.get("loc", ())) or "<document>"
        parts.append(f"{location}: {item.get('msg', 'invalid')}")
    more = error.error_count() - len(parts)
    suffix = f" (+{more} more)" if more > 0 else ""
    return "; ".join(parts) + suffix


def deserialize(data: Union[bytes, str]) -> SparseDecomposition:
    try:
        model = DecompositionFile.model_validate_json(data)
    except ValidationError as e:
        raise DecompositionParseError(f"malformed decomposition: {_describe(e)}") from e

    if model.k != len(model.terms):
        raise DecompositionValidationError(f"k is {model.k} but the file lists {len(model.terms)} terms")
    for i, record in enumerate(model.terms):
        if len(record.bits) != model.t:
            raise DecompositionValidationError(
                f"terms.{i}.bits: expected {model.t} characters, got {len(record.bits)}"
            )

    bits = np.frombuffer("".join(r.bits for r in model.terms).encode("ascii"), dtype=np.uint8) - ord("0")
    coeffs = np.array([complex(r.re, r.im) for r in model.terms], dtype=np.complex128)
    decomposition = SparseDecomposition(
        t=model.t, phi=model.phi, mode=model.mode, bits=bits.reshape(model.k, model.t), coeffs=coeffs,
        delta=model.delta, gamma=model.gamma, l1=model.l1, seed=int(model.seed),
        group_size=model.group_size,
    )
    return decomposition.validate()
