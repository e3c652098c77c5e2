import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pusch_isac.channel import PathParams, path_response
from pusch_isac.errors import EstimationError
from pusch_isac.grid import DmrsConfig, ReSet, SlotConfig, generate_dmrs
from pusch_isac.sensing import (
    EstimatorConfig, Scenario, correlation, estimate_ml, form_measurement, periodogram, select_scenario,
    synthesize_measurement,
)


def _direct_power(z, slot, tau, nu):
    K, L = z.shape
    k = np.arange(K)[:, None]
    l = np.arange(L)[None, :]
    c = np.sum(z * np.exp(2j * np.pi * k * slot.subcarrier_spacing * tau)
               * np.exp(-2j * np.pi * l * slot.symbol_duration * nu))
    return abs(c) ** 2


def test_periodogram_matches_direct_sum(small_slot, rng):
    z = rng.standard_normal(small_slot.shape) + 1j * rng.standard_normal(small_slot.shape)
    meas = form_measurement(z, np.ones(small_slot.shape), ReSet.full(small_slot.shape))
    pg = periodogram(meas, EstimatorConfig(), small_slot)
    assert pg.power.shape == (64, 32)
    for a in range(0, 64, 7):
        for b in range(0, 32, 5):
            ref = _direct_power(z, small_slot, pg.delays[a], pg.dopplers[b])
            assert pg.power[a, b] == pytest.approx(ref, rel=1e-9)


def test_windowed_periodogram_is_a_slice(small_slot, rng):
    z = rng.standard_normal(small_slot.shape) + 1j * rng.standard_normal(small_slot.shape)
    meas = form_measurement(z, np.ones(small_slot.shape), ReSet.full(small_slot.shape))
    full = periodogram(meas, EstimatorConfig(), small_slot)
    win = periodogram(meas, EstimatorConfig(doppler_search=(-1.0, 0.5)), small_slot)
    cols = win.doppler_bins + 16
    assert np.allclose(win.power, full.power[:, cols])
    assert np.allclose(win.dopplers, full.dopplers[cols])


def test_select_scenario(slot):
    dmrs = generate_dmrs(DmrsConfig(1), slot).pilot_set
    s, sc = select_scenario(True, dmrs)
    assert sc is Scenario.ALL_RE and s.cardinality == slot.K * slot.L
    s, sc = select_scenario(False, dmrs)
    assert sc is Scenario.DMRS_ONLY and s is dmrs


def test_form_measurement_strips_symbols(small_slot, rng):
    x = np.exp(2j * np.pi * rng.random(small_slot.shape))
    tgt = PathParams(0.3, 2e-6, 100.0)
    mask = ReSet.symbols(small_slot.shape, [1, 5])
    meas = form_measurement(path_response(tgt, small_slot) * x, x, mask)
    assert meas.scenario is Scenario.DMRS_ONLY
    assert np.allclose(meas.z[:, [1, 5]], path_response(tgt, small_slot)[:, [1, 5]])
    assert np.all(meas.z[:, [0, 2, 3, 4, 6, 7]] == 0)
    with pytest.raises(ValueError):
        form_measurement(meas.z, 2 * x, mask)


def test_empty_mask_is_an_error(small_slot):
    meas = form_measurement(np.zeros(small_slot.shape), np.ones(small_slot.shape),
                            ReSet(np.zeros(small_slot.shape, bool)))
    with pytest.raises(EstimationError):
        estimate_ml(meas, EstimatorConfig(), small_slot)


def test_on_lattice_exact(slot, rng):
    cfg = EstimatorConfig()
    n_f, n_t = 4 * slot.K, 4 * slot.L
    tau = 1234 * slot.data_duration / n_f
    nu = -7 / (n_t * slot.symbol_duration)
    alpha = 0.3 * np.exp(1.1j)
    meas = synthesize_measurement(PathParams(alpha, tau, nu), slot, 0.0, ReSet.full(slot.shape), rng)
    est = estimate_ml(meas, cfg, slot)
    assert abs(est.tau_hat - tau) <= 1e-12 * slot.data_duration
    assert abs(est.nu_hat - nu) <= 1e-12 / slot.symbol_duration
    assert abs(est.alpha_hat - alpha) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(-0.45, 0.45), st.sampled_from([1, 3]), st.booleans())
def test_noiseless_off_lattice(u, w, pos, dmrs_only):
    slot = SlotConfig(num_subcarriers=96)
    tgt = PathParams(1.0, u * slot.data_duration, w / slot.symbol_duration)
    mask = generate_dmrs(DmrsConfig(pos), slot).pilot_set if dmrs_only else ReSet.full(slot.shape)
    if dmrs_only:
        # restrict the search to the alias-free window of the pilot pattern
        cfg = EstimatorConfig(doppler_search=(14 * w - 0.5, 14 * w + 0.5))
    else:
        cfg = EstimatorConfig()
    meas = synthesize_measurement(tgt, slot, 0.0, mask, np.random.default_rng(0))
    est = estimate_ml(meas, cfg, slot)
    du = (est.tau_hat - tgt.delay) / slot.data_duration
    du = (du + 0.5) % 1.0 - 0.5
    assert abs(du) < 1e-8
    assert abs(est.nu_hat - tgt.doppler) * slot.symbol_duration < 1e-8


def test_refinement_beats_lattice(slot, rng):
    tgt = PathParams(1.0, 0.3137 * slot.data_duration, 0.0731 / slot.symbol_duration)
    meas = synthesize_measurement(tgt, slot, 0.0, ReSet.full(slot.shape), rng)
    coarse = estimate_ml(meas, EstimatorConfig(refine=False, polish=False), slot)
    parab = estimate_ml(meas, EstimatorConfig(polish=False), slot)
    step_tau = slot.data_duration / (4 * slot.K)
    step_nu = 1 / (4 * slot.L * slot.symbol_duration)
    assert abs(coarse.tau_hat - tgt.delay) <= 0.5 * step_tau
    assert abs(parab.tau_hat - tgt.delay) < 0.25 * step_tau
    assert abs(parab.nu_hat - tgt.doppler) < 0.25 * step_nu


def test_peak_value_is_correlation(slot, rng):
    tgt = PathParams(0.5, 0.2 * slot.data_duration, 0.01 / slot.symbol_duration)
    meas = synthesize_measurement(tgt, slot, 0.01, ReSet.full(slot.shape), rng)
    est = estimate_ml(meas, EstimatorConfig(), slot)
    c = correlation(meas.z, slot, est.tau_hat, est.nu_hat)
    assert est.peak_value == pytest.approx(abs(c) ** 2)
    assert est.alpha_hat == pytest.approx(c / (slot.K * slot.L))


def test_single_precision_search_agrees(slot, rng):
    tgt = PathParams(0.3, 0.61 * slot.data_duration, -0.02 / slot.symbol_duration)
    meas = synthesize_measurement(tgt, slot, 0.05, ReSet.full(slot.shape), rng)
    a = estimate_ml(meas, EstimatorConfig(search_precision="single"), slot)
    b = estimate_ml(meas, EstimatorConfig(search_precision="double"), slot)
    # both polish to the same optimum, far below one lattice step
    step_tau = slot.data_duration / (4 * slot.K)
    step_nu = 1 / (4 * slot.L * slot.symbol_duration)
    assert abs(a.tau_hat - b.tau_hat) < 1e-6 * step_tau
    assert abs(a.nu_hat - b.nu_hat) < 1e-6 * step_nu


def test_doppler_window_resolves_dmrs_aliases(slot, rng):
    # with pilots on symbols 2 and 11 the Doppler response repeats every 1/(9 Ts)
    pilots = generate_dmrs(DmrsConfig(1), slot).pilot_set
    nu = 0.4 / (slot.L * slot.symbol_duration)
    meas = synthesize_measurement(PathParams(1.0, 1e-6, nu), slot, 0.0, pilots, rng)
    est = estimate_ml(meas, EstimatorConfig(doppler_search=(-0.7, 0.7)), slot)
    assert est.nu_hat == pytest.approx(nu, rel=1e-8)


@pytest.mark.parametrize("kwargs", [
    {"delay_oversampling": 0}, {"search_precision": "half"}, {"doppler_search": (0.5, -0.5)},
])
def test_estimator_config_validation(kwargs):
    with pytest.raises(ValueError):
        EstimatorConfig(**kwargs)
