import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pusch_isac.errors import ConfigurationError
from pusch_isac.grid import (
    DmrsConfig, ReSet, SlotConfig, dmrs_symbol_positions, extract_res, generate_dmrs, map_pusch,
    qpsk_modulate,
)


def test_default_numerology():
    s = SlotConfig()
    assert s.shape == (1272, 14)
    assert s.data_duration == pytest.approx(1 / 30e3)
    # normal CP: 144/2048 of the useful symbol
    assert s.cp_duration == pytest.approx(144 / 2048 / 30e3)
    assert s.symbol_duration == pytest.approx((1 + 144 / 2048) / 30e3)


@pytest.mark.parametrize("kwargs", [
    {"num_subcarriers": 0}, {"num_symbols": -1}, {"subcarrier_spacing": 0.0}, {"cp_duration": -1e-6},
])
def test_slot_rejects_bad_dimensions(kwargs):
    with pytest.raises(ConfigurationError):
        SlotConfig(**kwargs)


@pytest.mark.parametrize("pos,expected", [(0, (2,)), (1, (2, 11)), (2, (2, 7, 11)), (3, (2, 5, 8, 11))])
def test_dmrs_positions(pos, expected):
    assert dmrs_symbol_positions(pos) == expected
    assert DmrsConfig(pos).symbol_positions == expected


@pytest.mark.parametrize("pos", [-1, 4, "x"])
def test_dmrs_position_out_of_range(pos):
    with pytest.raises(ConfigurationError):
        dmrs_symbol_positions(pos)


def test_dmrs_table_needs_14_symbols():
    with pytest.raises(ConfigurationError):
        dmrs_symbol_positions(1, num_symbols=12)


@pytest.mark.parametrize("pos,n_dmrs", [(0, 1), (1, 2), (2, 3), (3, 4)])
def test_pilot_data_partition(slot, pos, n_dmrs):
    g = generate_dmrs(DmrsConfig(pos), slot)
    assert g.num_pilots == n_dmrs * 1272
    assert g.num_data == (14 - n_dmrs) * 1272
    assert not np.any(g.pilot_set.mask & g.data_set.mask)
    assert np.all(g.pilot_set.mask | g.data_set.mask)
    # unit-modulus QPSK on pilots, zero elsewhere
    assert np.allclose(np.abs(g.values[g.pilot_set.mask]), 1.0)
    assert np.all(g.values[g.data_set.mask] == 0)


def test_dmrs_is_seeded(slot):
    a = generate_dmrs(DmrsConfig(1, seed=3), slot).values
    b = generate_dmrs(DmrsConfig(1, seed=3), slot).values
    c = generate_dmrs(DmrsConfig(1, seed=4), slot).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_qpsk_gray_map():
    s = qpsk_modulate([0, 0, 0, 1, 1, 0, 1, 1])
    r = 1 / np.sqrt(2)
    assert np.allclose(s, [r + 1j * r, r - 1j * r, -r + 1j * r, -r - 1j * r])


def test_qpsk_odd_length():
    with pytest.raises(ValueError):
        qpsk_modulate([0, 1, 1])


def test_frequency_first_mapping():
    slot = SlotConfig(num_subcarriers=3, num_symbols=14)
    g = generate_dmrs(DmrsConfig(1), slot)
    data = np.arange(g.num_data) + 0j
    grid = map_pusch(slot, g, data)
    # symbol 0 holds data 0..2, symbol 1 holds 3..5, symbol 2 is DMRS
    assert np.array_equal(grid[:, 0], [0, 1, 2])
    assert np.array_equal(grid[:, 1], [3, 4, 5])
    assert np.array_equal(grid[:, 3], [6, 7, 8])
    assert np.array_equal(extract_res(grid, g.data_set), data)


def test_map_pusch_count_mismatch(slot):
    g = generate_dmrs(DmrsConfig(1), slot)
    with pytest.raises(ValueError):
        map_pusch(slot, g, np.zeros(g.num_data - 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.booleans(), min_size=5, max_size=5), min_size=1, max_size=6))
def test_reset_indices_roundtrip(rows):
    m = np.array(rows, dtype=bool)
    s = ReSet(m)
    k, l = s.indices()
    assert k.size == s.cardinality == len(s)
    rebuilt = np.zeros_like(m)
    rebuilt[k, l] = True
    assert np.array_equal(rebuilt, m)
    # frequency-first: sorted by (l, k)
    order = l * m.shape[0] + k
    assert np.all(np.diff(order) > 0)
    assert s.complement().cardinality == m.size - s.cardinality


def test_reset_is_immutable():
    s = ReSet.full((2, 2))
    with pytest.raises(ValueError):
        s.mask[0, 0] = False
