import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdapipe import ValidationError, decompose, forward_dft, inverse_dft, recompose
from oracles import naive_dft2, naive_idft2, seeded_channel


def test_constant_channel_has_only_dc_energy():
    spec = forward_dft(np.full((4, 4), 0.5))
    amp, _ = decompose(spec)
    assert amp[2, 2] == pytest.approx(8.0, abs=1e-12)  # 0.5 * 16 at the DC bin
    off_dc = amp.copy()
    off_dc[2, 2] = 0.0
    assert np.max(off_dc) < 1e-12


def test_unit_impulse_has_flat_amplitude():
    x = np.zeros((4, 4))
    x[1, 3] = 1.0
    amp, _ = decompose(forward_dft(x))
    assert np.allclose(amp, 1.0, atol=1e-12)


def test_forward_matches_naive_oracle_8x8():
    x = seeded_channel(7, 8, 8)
    assert np.max(np.abs(forward_dft(x) - naive_dft2(x))) < 1e-5


@pytest.mark.parametrize("size", [(3, 3), (4, 4), (7, 5), (8, 8), (15, 16)])
def test_oracle_equivalence_small_sizes(size):
    x = seeded_channel(size[0] * 100 + size[1], *size)
    assert np.max(np.abs(forward_dft(x) - naive_dft2(x))) < 1e-5


def test_round_trip_within_tolerance():
    x = seeded_channel(11, 13, 9)
    assert np.max(np.abs(inverse_dft(forward_dft(x)) - x)) < 1e-4


def test_dc_only_spectrum_gives_constant_channel():
    spec = np.zeros((6, 5), dtype=complex)
    spec[3, 2] = 0.25 * 30  # HW * c at the DC bin
    out = inverse_dft(spec)
    assert np.allclose(out, 0.25, atol=1e-12)


def test_inverse_matches_naive_oracle():
    x = seeded_channel(23, 8, 8)
    spec = naive_dft2(x)
    ours = inverse_dft(spec, clip=False)
    theirs = naive_idft2(spec).real
    assert np.max(np.abs(ours - theirs)) < 1e-5


def test_decompose_analytic_bin():
    spec = np.zeros((2, 2), dtype=complex)
    spec[0, 0] = 3 + 4j
    amp, pha = decompose(spec)
    assert amp[0, 0] == pytest.approx(5.0, abs=1e-12)
    assert pha[0, 0] == pytest.approx(np.arctan2(4, 3), abs=1e-12)


def test_zero_bin_phase_is_zero():
    amp, pha = decompose(np.zeros((3, 3), dtype=complex))
    assert np.all(amp == 0.0)
    assert np.all(pha == 0.0)


def test_decompose_recompose_round_trip():
    rng = np.random.default_rng(5)
    spec = rng.normal(size=(9, 7)) + 1j * rng.normal(size=(9, 7))
    amp, pha = decompose(spec)
    assert np.max(np.abs(recompose(amp, pha) - spec)) < 1e-6


def test_recompose_dimension_mismatch_rejected():
    with pytest.raises(ValidationError):
        recompose(np.ones((4, 4)), np.zeros((4, 5)))


def test_recompose_negative_amplitude_rejected():
    with pytest.raises(ValidationError):
        recompose(-np.ones((2, 2)), np.zeros((2, 2)))


def test_non_finite_input_rejected():
    bad = np.ones((4, 4))
    bad[0, 0] = np.nan
    with pytest.raises(ValidationError):
        forward_dft(bad)
    bad_spec = np.ones((4, 4), dtype=complex)
    bad_spec[0, 0] = np.inf
    with pytest.raises(ValidationError):
        inverse_dft(bad_spec)


def test_parseval_under_documented_normalization():
    x = seeded_channel(31, 12, 10)
    spec = forward_dft(x)
    spatial = float((x**2).sum())
    spectral = float((np.abs(spec) ** 2).sum()) / x.size
    assert abs(spatial - spectral) / spatial < 1e-5


def test_linearity():
    x = seeded_channel(41, 9, 9)
    y = seeded_channel(42, 9, 9)
    lhs = forward_dft(2.5 * x + 0.5 * y)
    rhs = 2.5 * forward_dft(x) + 0.5 * forward_dft(y)
    scale = np.abs(rhs).max()
    assert np.max(np.abs(lhs - rhs)) / scale < 1e-5


@settings(max_examples=25, deadline=None)
@given(
    h=st.integers(min_value=1, max_value=12),
    w=st.integers(min_value=1, max_value=12),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_round_trip_property(h, w, seed):
    x = seeded_channel(seed, h, w)
    assert np.max(np.abs(inverse_dft(forward_dft(x)) - x)) < 1e-4
