import math

import numpy as np
import pytest

from pusch_isac.channel import PathParams, SnrSpec, sigma_from_snr, synthesize_channel
from pusch_isac.errors import ConfigurationError
from pusch_isac.grid import DmrsConfig, SlotConfig, generate_dmrs
from pusch_isac.harq_link import (
    MCS_TABLE, HarqProcess, LinkContext, TransportBlock, channel_estimate, crc24_attach, crc24_check, encode,
    equalize_demod, harq_run_tb, mcs_entry, tbs_compute,
)


@pytest.mark.parametrize("mcs,pos,expected", [(0, 1, 3552), (0, 3, 2952), (1, 1, 4656), (1, 3, 3872)])
def test_tbs(slot, mcs, pos, expected):
    n_d = generate_dmrs(DmrsConfig(pos), slot).num_data
    assert tbs_compute(n_d, mcs_entry(mcs)) == expected


def test_mcs_table_is_qpsk_and_increasing():
    rates = [MCS_TABLE[i].code_rate for i in sorted(MCS_TABLE)]
    assert all(MCS_TABLE[i].modulation_order == 2 for i in MCS_TABLE)
    assert np.all(np.diff(rates) > 0)
    assert mcs_entry(0).code_rate == 120 / 1024


def test_mcs_errors():
    with pytest.raises(ConfigurationError):
        mcs_entry(99)
    with pytest.raises(ConfigurationError):
        tbs_compute(10, mcs_entry(0))
    with pytest.raises(ConfigurationError):
        tbs_compute(0, mcs_entry(0))


def test_transport_block_crc():
    tb = crc24_attach(np.ones(40, np.uint8))
    assert isinstance(tb, TransportBlock)
    assert crc24_check(tb)
    assert encode(tb).size == 3 * (64 + 6)
    bits = tb.bits.copy()
    bits[3] ^= 1
    assert not crc24_check(bits)


def test_channel_estimate_exact_for_static_channel(slot, rng):
    pilots = generate_dmrs(DmrsConfig(3), slot)
    ch = synthesize_channel([PathParams(np.exp(0.4j), 3e-6, 0.0)], slot)
    y = ch.h * pilots.values
    assert np.allclose(channel_estimate(y, pilots), ch.h)


def test_channel_estimate_interpolates_linearly():
    slot = SlotConfig(num_subcarriers=2, num_symbols=14)
    pilots = generate_dmrs(DmrsConfig(1), slot)
    # channel linear in symbol index between pilots 2 and 11
    h = np.tile(np.arange(14, dtype=complex) + 1.0, (2, 1))
    h_est = channel_estimate(h * pilots.values, pilots)
    assert np.allclose(h_est[:, 2:12], h[:, 2:12])
    # nearest-pilot hold outside
    assert np.allclose(h_est[:, :2], h[:, [2]])
    assert np.allclose(h_est[:, 12:], h[:, [11]])


def test_llr_sign_and_scale(slot):
    pilots = generate_dmrs(DmrsConfig(1), slot)
    h = np.full(slot.shape, 0.5 + 0j)
    y = np.zeros(slot.shape, complex)
    y[pilots.data_set.mask] = 0.5 * (1 - 1j) / np.sqrt(2)
    llr = equalize_demod(y, h, 0.1, pilots)
    # bit 0 of 1-j is 0 (positive LLR), bit 1 is 1 (negative); |LLR| = 2 |h|^2 / sigma2
    assert llr.size == 2 * pilots.num_data
    assert np.allclose(llr[0::2], 2 * 0.25 / 0.1)
    assert np.allclose(llr[1::2], -2 * 0.25 / 0.1)


def test_harq_process_rounds():
    proc = HarqProcess(64)
    assert proc.next_rv == 0
    for _ in range(4):
        proc.receive(np.zeros(100))
    with pytest.raises(RuntimeError):
        proc.receive(np.zeros(100))


def _ctx(slot, snr1_db, pos=1):
    pilots = generate_dmrs(DmrsConfig(pos), slot)
    a0, a1, s2 = sigma_from_snr(SnrSpec(snr1_db))
    ch = synthesize_channel([PathParams(a0, 0.0), PathParams(a1, 4e-6, 500.0)], slot)
    return LinkContext(slot, pilots, ch, s2)


def test_high_snr_decodes_first_round(slot, rng):
    out = harq_run_tb(_ctx(slot, 20.0), mcs_entry(0), rng)
    assert out.rounds_used == 1 and out.decoded and out.payload_ok
    assert out.crc_trace == (True,)
    assert out.rounds[0].rv == 0


def test_noiseless_link(slot, rng):
    out = harq_run_tb(_ctx(slot, math.inf), mcs_entry(1), rng)
    assert out.decoded and out.payload_ok


def test_low_snr_uses_more_rounds(slot):
    rng = np.random.default_rng(3)
    outs = [harq_run_tb(_ctx(slot, -15.0), mcs_entry(0), rng) for _ in range(6)]
    assert max(o.rounds_used for o in outs) > 1
    for o in outs:
        assert [r.rv for r in o.rounds] == [0, 2, 3, 1][: o.rounds_used]
        # the trace stops at the first success
        assert not any(o.crc_trace[:-1])


def test_seeded_reproducibility(slot):
    a = harq_run_tb(_ctx(slot, -12.0), mcs_entry(0), np.random.default_rng(5))
    b = harq_run_tb(_ctx(slot, -12.0), mcs_entry(0), np.random.default_rng(5))
    assert a.crc_trace == b.crc_trace
    assert np.array_equal(a.rounds[-1].rx_grid, b.rounds[-1].rx_grid)
