"""
Exact quadratic exponential sums  sum_{x in F_2^m} i^{q(x)}  over Z_4.

q(x) = sum_j d_j x_j + 2 sum_{j<k} J_jk x_j x_k (mod 4). The value is always
0 or 2^{p/2} e^{i pi b/4}, so it is returned as an exact DiscreteComplex.

Evaluation eliminates one variable at a time. Couplings are kept as one
Python-int bitmask per variable (symmetric adjacency), so each step is a
handful of word operations and the whole sum costs O(m^3) at worst.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from magicsparse.core.exceptions import SizeLimitError

BRUTE_FORCE_MAX_VARIABLES = 20

_I_POWERS = np.array([1, 1j, -1, -1j], dtype=np.complex128)


@dataclass(frozen=True)
class DiscreteComplex:
    zero: bool
    p: int = 0
    b: int = 0

    def __post_init__(self):
        if self.zero:
            object.__setattr__(self, "p", 0)
            object.__setattr__(self, "b", 0)
        else:
            if self.p < 0:
                raise ValueError(f"p must be nonnegative, got {self.p}")
            object.__setattr__(self, "b", self.b % 8)

    @classmethod
    def zero_value(cls) -> "DiscreteComplex":
        return cls(zero=True)

    @classmethod
    def from_complex(cls, value: complex, tol: float = 1e-6) -> "DiscreteComplex":
        """Snap a floating value known to be 0 or 2^{p/2} w8^b onto the exact family."""
        magnitude = abs(value)
        if magnitude < 0.5:
            return cls(zero=True)
        p = int(round(2 * math.log2(magnitude)))
        b = int(round(cmath.phase(value) / (math.pi / 4))) % 8
        exact = cls(zero=False, p=p, b=b)
        if abs(exact.to_complex() - value) > tol * max(1.0, magnitude):
            raise ValueError(f"{value!r} is not of the form 2^(p/2) e^(i pi b/4)")
        return exact

    @property
    def magnitude(self) -> float:
        return 0.0 if self.zero else 2.0 ** (self.p / 2)

    def to_complex(self) -> complex:
        if self.zero:
            return 0j
        return 2.0 ** (self.p / 2) * cmath.exp(1j * math.pi * self.b / 4)

    def conjugate(self) -> "DiscreteComplex":
        return self if self.zero else DiscreteComplex(zero=False, p=self.p, b=-self.b)


@dataclass(frozen=True)
class QuadraticFormZ4:
    """q(x) = d.x + 2 x^T J x (mod 4) with J strictly upper triangular and binary."""
    d: Tuple[int, ...]
    J: np.ndarray
    rows: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = tuple(int(v) for v in self.d)
        m = len(d)
        J = np.array(self.J, dtype=np.uint8, copy=True).reshape(m, m) if m else np.zeros((0, 0), np.uint8)
        if any(v not in (0, 1, 2, 3) for v in d):
            raise ValueError(f"diagonal entries must lie in Z_4, got {d}")
        if np.any(J > 1) or np.any(np.tril(J)):
            raise ValueError("J must be binary and strictly upper triangular")
        J.setflags(write=False)
        symmetric = J | J.T
        rows = tuple(int(sum(1 << k for k in np.flatnonzero(symmetric[j]))) for j in range(m))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return len(self.d)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuadraticFormZ4):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.J, other.J)

    __hash__ = None

    def value(self, x: Sequence[int]) -> int:
        x = np.asarray(x, dtype=np.int64)
        return int((np.dot(self.d, x) + 2 * int(x @ self.J.astype(np.int64) @ x)) % 4)


def _add_parity(d: List[int], rows: List[int], support: int, c: int) -> None:
    """Add c * parity(x_support) to the form, lifted to Z_4: c(sum x_k - 2 sum_{k<l} x_k x_l)."""
    toggle_pairs = c & 1
    remaining = support
    while remaining:
        low = remaining & -remaining
        k = low.bit_length() - 1
        remaining ^= low
        d[k] = (d[k] + c) & 3
        if toggle_pairs:
            rows[k] ^= support & ~low


def eliminate(d: Sequence[int], rows: Sequence[int], alive: int) -> DiscreteComplex:
    """
    Sum i^{q(x)} over the variables in the `alive` bitmask; the others are pinned to 0.

    Lowest-index variable first; a constraint eliminates the lowest-index
    variable of its support.
    """
    d = [v & 3 for v in d]
    rows = list(rows)
    p = 0
    b = 0
    const = 0
    while alive:
        low = alive & -alive
        v = low.bit_length() - 1
        alive ^= low
        dv = d[v]
        ell = rows[v] & alive

        if dv & 1:
            # 1 + i^{dv + 2 ell} = sqrt(2) w8^{s} i^{-s ell},  s = +1 for dv = 1, -1 for dv = 3
            s = 1 if dv == 1 else -1
            p += 1
            b += s
            _add_parity(d, rows, ell, -s)
            continue

        a = dv >> 1
        if not ell:
            if a:
                return DiscreteComplex.zero_value()
            p += 2
            continue

        # factor 2 under the constraint parity(x_ell) = a
        p += 2
        pivot_bit = ell & -ell
        r = pivot_bit.bit_length() - 1
        rest = ell ^ pivot_bit
        alive ^= pivot_bit
        neighbours = rows[r] & alive
        dr = d[r]

        # d_r x_r with x_r = a XOR parity(rest)
        if a:
            const += dr
            _add_parity(d, rows, rest, -dr)
        else:
            _add_parity(d, rows, rest, dr)

        # 2 x_r x_j  ->  2 x_j (a + sum_{k in rest} x_k)
        remaining = neighbours
        while remaining:
            low_j = remaining & -remaining
            j = low_j.bit_length() - 1
            remaining ^= low_j
            if a:
                d[j] = (d[j] + 2) & 3
            if rest & low_j:
                d[j] = (d[j] + 2) & 3
            rows[j] ^= rest & ~low_j
        remaining = rest
        while remaining:
            low_k = remaining & -remaining
            k = low_k.bit_length() - 1
            remaining ^= low_k
            rows[k] ^= neighbours & ~low_k

    return DiscreteComplex(zero=False, p=p, b=b + 2 * const)


def gauss_eval(f: QuadraticFormZ4) -> DiscreteComplex:
    return eliminate(f.d, f.rows, (1 << f.m) - 1)


def gauss_eval_restricted(f: QuadraticFormZ4, support: int) -> DiscreteComplex:
    """Sum over the variables in `support` with every other variable pinned to 0."""
    return eliminate(f.d, f.rows, support & ((1 << f.m) - 1))


def gauss_brute(f: QuadraticFormZ4) -> complex:
    m = f.m
    if m > BRUTE_FORCE_MAX_VARIABLES:
        raise SizeLimitError("gauss_brute", m, BRUTE_FORCE_MAX_VARIABLES)
    if m == 0:
        return 1 + 0j
    index = np.arange(1 << m, dtype=np.int64)[:, None]
    x = ((index >> np.arange(m, dtype=np.int64)[None, :]) & 1).astype(np.int64)
    linear = x @ np.asarray(f.d, dtype=np.int64)
    quadratic = np.einsum("xi,ij,xj->x", x, f.J.astype(np.int64), x)
    q = (linear + 2 * quadratic) % 4
    return complex(_I_POWERS[q].sum())


def random_form(m: int, rng: np.random.Generator) -> QuadraticFormZ4:
    d = rng.integers(0, 4, size=m)
    J = np.triu(rng.integers(0, 2, size=(m, m)), k=1)
    return QuadraticFormZ4(d=tuple(int(v) for v in d), J=J)
