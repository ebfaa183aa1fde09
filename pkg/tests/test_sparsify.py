import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from magicsparse.core.exceptions import (
    ConfigurationError,
    DomainError,
    InfeasibleConfigError,
    PostselectionExhaustedError,
)
from magicsparse.core.rng import derive_seed
from magicsparse.engine import magic_states
from magicsparse.engine.sparsify import (
    WARN_DELTA_LARGE,
    WARN_EXTENT_SMALL,
    gamma,
    regime_check,
    sample_count,
    sparsify,
    sparsify_correlated,
    sparsify_iid,
)
from magicsparse.engine.stab_terms import SparseDecomposition, serialize, target_inner_product, term_overlap
from magicsparse.schemas import SamplerConfig, SamplingMode

PI_4 = math.pi / 4


def test_gamma_values():
    assert gamma("iid", 20) == 1.0
    assert gamma("correlated", 1) == pytest.approx(1.2928932, abs=1e-7)
    assert gamma("correlated", 20) == pytest.approx(6.857864, abs=1e-6)
    assert gamma("correlated", 30) == pytest.approx(9.786797, abs=1e-6)


def test_sample_count_iid_t20():
    k, m = sample_count(PI_4, 20, 0.1, "iid")
    assert m is None
    assert k == math.ceil((magic_states.extent(PI_4, 20) - 1) / 0.01)
    assert abs(k - 2275) <= 2


@pytest.mark.parametrize("t, delta, expected", [
    (20, 0.1, (1701, 81)),
    (12, 0.2, (65, 5)),
    (8, 0.3, (9, 1)),
    (30, 0.5, (434, 14)),
])
def test_sample_count_correlated(t, delta, expected):
    assert sample_count(PI_4, t, delta, "correlated") == expected


def test_sample_count_iid_small():
    assert sample_count(PI_4, 12, 0.2, "iid") == (143, None)
    assert sample_count(PI_4, 8, 0.3, "iid") == (29, None)


def test_infeasible_configuration():
    with pytest.raises(InfeasibleConfigError) as excinfo:
        sample_count(PI_4, 2, 0.9, "correlated")
    assert excinfo.value.extent == pytest.approx(1.3726, abs=1e-4)
    assert excinfo.value.gamma == pytest.approx(1.5858, abs=1e-4)
    assert excinfo.value.exit_code == 3


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.2])
def test_delta_domain(delta):
    with pytest.raises(DomainError):
        sample_count(PI_4, 8, delta, "iid")


def test_exact_full_is_not_a_sampling_mode():
    with pytest.raises(ValidationError):
        SamplerConfig(t=4, delta=0.2, mode="exact_full")


def test_correlated_requires_pi_over_4():
    cfg = SamplerConfig(phi=1.0, t=8, delta=0.3, mode="correlated")
    with pytest.raises(ConfigurationError, match="pi/4"):
        sparsify(cfg)
    with pytest.raises(ConfigurationError):
        sparsify_correlated(cfg)


def test_samplers_reject_the_other_mode():
    with pytest.raises(ConfigurationError):
        sparsify_iid(SamplerConfig(t=8, delta=0.3, mode="correlated"))
    with pytest.raises(ConfigurationError):
        sparsify_correlated(SamplerConfig(t=8, delta=0.3, mode="iid"))


@pytest.mark.parametrize("mode", ["iid", "correlated"])
def test_sampling_is_deterministic(mode):
    cfg = SamplerConfig(t=12, delta=0.2, mode=mode, seed=99)
    first, _ = sparsify(cfg)
    second, _ = sparsify(cfg)
    assert serialize(first) == serialize(second)
    other, _ = sparsify(cfg.model_copy(update={"seed": 100}))
    assert not np.array_equal(first.bits, other.bits)


def test_iid_sample_structure():
    d = sparsify_iid(SamplerConfig(t=12, delta=0.2, seed=5))
    assert d.k == 143
    np.testing.assert_allclose(np.abs(d.coeffs), d.l1 / d.k, rtol=1e-12)
    assert d.bits.mean() == pytest.approx(0.5, abs=0.05)
    d.validate()


def test_iid_bit_probability_follows_tilde_weights():
    phi = 0.4
    d = sparsify_iid(SamplerConfig(phi=phi, t=30, delta=0.2, seed=8))
    expected = magic_states.tilde_coeffs(phi).prob_plus
    stderr = math.sqrt(expected * (1 - expected) / d.bits.size)
    assert abs(d.bits.mean() - expected) < 5 * stderr


def test_correlated_group_structure():
    d = sparsify_correlated(SamplerConfig(t=12, delta=0.2, mode="correlated", seed=5))
    assert (d.k, d.group_size) == (65, 13)
    groups = d.bits.reshape(5, 13, 12)
    for group in groups:
        np.testing.assert_array_equal(group[1:] ^ group[0], np.eye(12, dtype=np.uint8))
    d.validate()


def test_correlated_within_group_overlaps():
    d = sparsify_correlated(SamplerConfig(t=8, delta=0.3, mode="correlated", seed=2))
    terms = d.terms
    for j in range(1, 9):
        assert abs(term_overlap(terms[0], terms[j])) == pytest.approx(2 ** -0.5)
        for l in range(j + 1, 9):
            assert abs(term_overlap(terms[j], terms[l])) == pytest.approx(0.5)


def test_postselection_accepts_first_good_attempt():
    cfg = SamplerConfig(t=8, delta=0.3, seed=4, postselect=True)
    d, attempts = sparsify(cfg, norm_fn=lambda _: 1.0)
    assert attempts == 1
    assert d.seed == 4


def test_postselection_with_infinite_factor_never_rejects():
    cfg = SamplerConfig(t=12, delta=0.2, seed=4, postselect=True, postselect_factor=float("inf"))
    _, attempts = sparsify(cfg)
    assert attempts == 1


def test_postselection_retries_with_derived_seed(caplog):
    calls = []

    def norm_fn(d: SparseDecomposition) -> float:
        calls.append(d.seed)
        return 10.0 if len(calls) == 1 else 1.0

    cfg = SamplerConfig(t=8, delta=0.3, seed=4, postselect=True)
    with caplog.at_level(logging.WARNING, logger="magicsparse.engine.sparsify"):
        d, attempts = sparsify(cfg, norm_fn=norm_fn)
    assert attempts == 2
    assert calls == [4, derive_seed(4, "attempt", 1)]
    assert d.seed == derive_seed(4, "attempt", 1)
    assert "rejected attempt 1" in caplog.text


def test_postselection_exhaustion():
    cfg = SamplerConfig(t=8, delta=0.3, seed=4, postselect=True, max_attempts=3)
    with pytest.raises(PostselectionExhaustedError) as excinfo:
        sparsify(cfg, norm_fn=lambda _: 10.0)
    assert excinfo.value.attempts == 3
    assert excinfo.value.last_gap == pytest.approx(9.0)
    assert excinfo.value.exit_code == 3


def test_postselection_acceptance_rate_at_factor_two():
    accepted = 0
    trials = 200
    for seed in range(trials):
        cfg = SamplerConfig(t=12, delta=0.2, seed=seed, postselect=True, max_attempts=1)
        try:
            sparsify(cfg)
            accepted += 1
        except PostselectionExhaustedError:
            pass
    assert accepted / trials >= 0.5


def test_regime_check_examples(caplog):
    with caplog.at_level(logging.WARNING, logger="magicsparse.engine.sparsify"):
        assert regime_check(30, 0.1) == [WARN_EXTENT_SMALL, WARN_DELTA_LARGE]
    assert WARN_EXTENT_SMALL in caplog.text
    assert regime_check(12, 0.2) == [WARN_EXTENT_SMALL, WARN_DELTA_LARGE]
    assert regime_check(200, 0.01) == []


def test_regime_check_survives_extent_overflow():
    assert regime_check(5000, 0.01) == [WARN_DELTA_LARGE]
    assert regime_check(5000, 0.001) == []


@pytest.mark.parametrize("mode", ["iid", "correlated"])
def test_sample_count_rejects_overflowed_extent(mode):
    with pytest.raises(DomainError, match="overflows"):
        sample_count(PI_4, 5000, 0.1, mode)


@pytest.mark.parametrize("mode", ["iid", "correlated"])
def test_target_overlap_at_pi_over_4_is_exactly_one(mode):
    d, _ = sparsify(SamplerConfig(t=10, delta=0.2, mode=mode, seed=12))
    assert target_inner_product(d) == pytest.approx(1.0, abs=1e-12)


def test_iid_target_overlap_is_unbiased_away_from_pi_over_4():
    phi = math.pi / 3
    values = []
    for r in range(2000):
        d, _ = sparsify(SamplerConfig(phi=phi, t=8, delta=0.3, seed=r))
        values.append(target_inner_product(d))
    values = np.array(values)
    stderr_re = values.real.std(ddof=1) / math.sqrt(values.size)
    stderr_im = values.imag.std(ddof=1) / math.sqrt(values.size)
    assert abs(values.real.mean() - 1.0) <= 4 * stderr_re + 1e-12
    assert abs(values.imag.mean()) <= 4 * stderr_im + 1e-12


@pytest.mark.parametrize("t, delta", [(20, 0.1), (12, 0.2), (30, 0.5), (16, 0.15)])
def test_correlated_saving_matches_cross_term_slope(t, delta):
    k_iid, _ = sample_count(PI_4, t, delta, "iid")
    k_corr, _ = sample_count(PI_4, t, delta, "correlated")
    saving = math.ceil((1 - 2 ** -0.5) * t / delta ** 2)
    assert abs((k_iid - k_corr) - saving) <= t + 1
