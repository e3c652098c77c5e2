import math

import numpy as np
import pytest

from pusch_isac.channel import (
    PathParams, SnrSpec, apply_channel, complex_noise, draw_amplitudes, path_response, remove_los,
    sigma_from_snr, synthesize_channel,
)


def test_channel_matches_direct_sum(small_slot, rng):
    paths = [PathParams(0.8 * np.exp(0.3j), 1e-6, 0.0), PathParams(0.6j, 7e-6, 900.0)]
    ch = synthesize_channel(paths, small_slot)
    df, ts = small_slot.subcarrier_spacing, small_slot.symbol_duration
    for k in (0, 5, 15):
        for l in (0, 3, 7):
            ref = sum(p.amplitude * np.exp(-2j * np.pi * k * df * p.delay) * np.exp(2j * np.pi * l * ts * p.doppler)
                      for p in paths)
            assert ch.h[k, l] == pytest.approx(ref, abs=1e-12)


def test_channel_requires_unit_power(small_slot):
    with pytest.raises(ValueError):
        synthesize_channel([PathParams(0.5, 0.0)], small_slot)
    synthesize_channel([PathParams(0.5, 0.0)], small_slot, normalize_tol=None)


@pytest.mark.parametrize("path", [PathParams(1.0, -1e-9), PathParams(1.0, 1 / 30e3), PathParams(1.0, 0.0, 30e3)])
def test_unidentifiable_paths(small_slot, path):
    with pytest.raises(ValueError):
        synthesize_channel([path], small_slot)


def test_noise_variance(rng):
    w = complex_noise((400, 400), 0.25, rng)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.25, rel=0.02)
    assert abs(np.mean(w.real * w.imag)) < 0.01
    assert np.all(complex_noise((3, 3), 0.0, rng) == 0)


def test_apply_channel_noiseless(small_slot, rng):
    ch = synthesize_channel([PathParams(1.0, 2e-6, 100.0)], small_slot)
    x = np.exp(2j * np.pi * rng.random(small_slot.shape))
    assert np.allclose(apply_channel(x, ch, 0.0, rng), ch.h * x)
    with pytest.raises(ValueError):
        apply_channel(x[:, :3], ch, 0.0, rng)
    with pytest.raises(ValueError):
        apply_channel(x, ch, -1.0, rng)


def test_remove_los_leaves_target(small_slot, rng):
    los = PathParams(np.sqrt(0.9), 0.0, 0.0)
    tgt = PathParams(np.sqrt(0.1), 5e-6, 300.0)
    ch = synthesize_channel([los, tgt], small_slot)
    x = np.exp(2j * np.pi * rng.random(small_slot.shape))
    y = apply_channel(x, ch, 0.0, rng)
    assert np.allclose(remove_los(y, x, los, small_slot), path_response(tgt, small_slot) * x)


def test_snr_split():
    a0, a1, s2 = sigma_from_snr(SnrSpec(10.0))
    assert a0 ** 2 + a1 ** 2 == pytest.approx(1.0)
    assert a0 ** 2 / a1 ** 2 == pytest.approx(9.0)
    assert a1 ** 2 / s2 == pytest.approx(10.0)
    # communication SNR is ten times the target SNR
    assert SnrSpec(10.0).snrc_db == pytest.approx(20.0)
    assert SnrSpec(10.0).noise_variance == pytest.approx(s2)


def test_snr_limits():
    assert sigma_from_snr(SnrSpec(math.inf))[2] == 0.0
    for bad in (math.nan, -math.inf):
        with pytest.raises(ValueError):
            sigma_from_snr(SnrSpec(bad))
    with pytest.raises(ValueError):
        sigma_from_snr(SnrSpec(0.0, los_to_target_power_ratio=0.0))


def test_amplitude_phases(rng):
    draws = [draw_amplitudes(SnrSpec(0.0), rng) for _ in range(2000)]
    a1 = np.array([d[1] for d in draws])
    assert np.allclose(np.abs(a1), np.sqrt(0.1))
    # uniform phase: mean of e^{j phi} near zero
    assert abs(np.mean(a1 / np.abs(a1))) < 0.06
