import math
from functools import reduce

import numpy as np
import pytest

from magicsparse.core.exceptions import DimensionMismatchError, DomainError, SizeLimitError
from magicsparse.engine import magic_states
from magicsparse.engine.stab_terms import ProductStabTerm, dense_expand, from_terms

PI_4 = math.pi / 4
PHI_GRID = np.linspace(0.01, math.pi / 2 - 0.01, 33)


def test_tilde_coefficients_at_pi_over_4():
    coeffs = magic_states.tilde_coeffs(PI_4)
    assert coeffs.c0 == pytest.approx(0.541196, abs=1e-6)
    assert coeffs.c1 == pytest.approx(0.541196, abs=1e-6)
    assert abs(coeffs.c0.imag) < 1e-12
    assert abs(coeffs.c1.imag) < 1e-12


@pytest.mark.parametrize("phi", PHI_GRID)
def test_tilde_magnitudes_match_closed_form(phi):
    coeffs = magic_states.tilde_coeffs(phi)
    assert coeffs.abs0 ** 2 == pytest.approx(1 - math.sin(phi), abs=1e-12)
    assert coeffs.abs1 ** 2 == pytest.approx(1 - math.cos(phi), abs=1e-12)
    assert coeffs.l1 == pytest.approx(magic_states.l1_norm(phi, 1), rel=1e-12)


@pytest.mark.parametrize("phi", PHI_GRID[::4])
def test_normalized_tilde_states_overlap_is_inverse_sqrt2(phi):
    assert magic_states.tilde_inner_product(phi) == pytest.approx(2 ** -0.5, abs=1e-12)


def test_extent_and_l1_values():
    assert magic_states.extent(PI_4, 1) == pytest.approx(4 - 2 * math.sqrt(2), abs=1e-12)
    assert math.log2(magic_states.extent(PI_4, 1)) == pytest.approx(0.228447, abs=1e-6)
    assert magic_states.extent(PI_4, 10) == pytest.approx(4.872, rel=1e-3)
    assert magic_states.l1_norm(PI_4, 1) == pytest.approx(1.0823922, abs=1e-7)
    assert magic_states.l1_norm(PI_4, 10) == pytest.approx(2.2072, abs=1e-3)


@pytest.mark.parametrize("phi", [0.2, PI_4, 1.3])
@pytest.mark.parametrize("t", [1, 7, 30, 64])
def test_extent_is_multiplicative(phi, t):
    assert magic_states.extent(phi, t) == pytest.approx(magic_states.extent(phi, 1) ** t, rel=1e-12)
    assert magic_states.l1_norm(phi, t) ** 2 == pytest.approx(magic_states.extent(phi, t), rel=1e-12)


def test_extent_past_float_range_is_infinite():
    assert magic_states.extent(PI_4, 5000) == math.inf
    assert math.isfinite(magic_states.l1_norm(PI_4, 5000))
    assert magic_states.l1_norm(PI_4, 10000) == math.inf
    assert magic_states.log2_extent(PI_4, 5000) == pytest.approx(5000 * math.log2(4 - 2 * math.sqrt(2)),
                                                                 rel=1e-12)


@pytest.mark.parametrize("phi", [0.0, math.pi / 2, -0.1, float("nan")])
def test_phi_outside_open_interval_is_rejected(phi):
    with pytest.raises(DomainError):
        magic_states.extent(phi, 3)


@pytest.mark.parametrize("t", [0, -1, 2.5])
def test_nonpositive_qubit_count_is_rejected(t):
    with pytest.raises(DomainError):
        magic_states.l1_norm(PI_4, t)


def test_single_qubit_target_at_pi_over_4():
    target = magic_states.target_dense(PI_4, 1).amplitudes
    assert target[0] == pytest.approx(math.cos(math.pi / 8), abs=1e-12)
    assert target[1] == pytest.approx(math.sin(math.pi / 8), abs=1e-12)


@pytest.mark.parametrize("phi", PHI_GRID)
@pytest.mark.parametrize("t", [1, 2, 3])
def test_target_is_normalized(phi, t):
    assert magic_states.target_dense(phi, t).norm() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("phi", [0.3, PI_4, math.pi / 3])
def test_tilde_expansion_reconstructs_target(phi):
    zero_tilde, plus_tilde = magic_states.tilde_vectors(phi)
    qubit = (zero_tilde + plus_tilde) / (2 * magic_states.NU)
    dense = reduce(np.kron, [qubit] * 3)
    np.testing.assert_allclose(dense, magic_states.target_dense(phi, 3).amplitudes, atol=1e-12)


def test_target_dense_respects_qubit_cap():
    with pytest.raises(SizeLimitError):
        magic_states.target_dense(PI_4, 21)


def test_relation_to_h_type_magic_state():
    check = magic_states.h_magic_relation_check()
    assert check.holds
    assert check.max_deviation < 1e-12


def test_relation_fails_with_wrong_phase():
    assert not magic_states.h_magic_relation_check(phase=-math.pi / 4)


def test_relation_fails_against_printed_reference():
    check = magic_states.h_magic_relation_check(reference="printed")
    assert not check.holds
    assert check.max_deviation > 0.1


def test_target_overlap_small_cases():
    nu = math.cos(math.pi / 8)
    assert magic_states.target_overlap(ProductStabTerm.from_string("0"), PI_4) == pytest.approx(nu, abs=1e-12)
    assert magic_states.target_overlap(ProductStabTerm.from_string("1"), PI_4) == pytest.approx(nu, abs=1e-12)
    assert magic_states.target_overlap(ProductStabTerm.from_string("000"), PI_4) == pytest.approx(nu ** 3, abs=1e-12)


def test_target_overlap_matches_dense(rng):
    for _ in range(200):
        t = int(rng.integers(1, 9))
        phi = float(rng.uniform(0.05, math.pi / 2 - 0.05))
        phase = complex(np.exp(1j * rng.uniform(0, 2 * math.pi)))
        term = ProductStabTerm(bits=tuple(int(b) for b in rng.integers(0, 2, size=t)), coeff=phase)
        dense_term = dense_expand(from_terms([term], phi=phi))
        expected = dense_term.inner(magic_states.target_dense(phi, t))
        assert abs(magic_states.target_overlap(term, phi, t) - expected) < 1e-12


def test_target_overlap_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        magic_states.target_overlap(ProductStabTerm.from_string("01"), PI_4, t=3)
