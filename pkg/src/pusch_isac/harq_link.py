"""PUSCH transport chain with incremental-redundancy HARQ.

TB -> CRC-24A -> rate-1/3 convolutional code -> circular-buffer rate matching
-> QPSK -> resource grid; receiver does LS channel estimation on full-symbol
DMRS, one-tap equalization, max-log LLRs, soft combining and Viterbi decoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import coding
from .channel import ChannelRealization, apply_channel
from .errors import ConfigurationError
from .grid import PilotGrid, SlotConfig, extract_res, map_pusch, qpsk_modulate

MAX_ROUNDS = 4
RV_SEQUENCE = (0, 2, 3, 1)


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation_order: int
    code_rate: float

    @property
    def spectral_efficiency(self) -> float:
        return self.modulation_order * self.code_rate


# QPSK rows of the 64QAM MCS index table for PUSCH (code rate x 1024).
_QPSK_RATES_X1024 = (120, 157, 193, 251, 308, 379, 449, 526, 602, 679)
MCS_TABLE = {i: McsEntry(i, 2, r / 1024) for i, r in enumerate(_QPSK_RATES_X1024)}


def mcs_entry(index: int) -> McsEntry:
    try:
        return MCS_TABLE[int(index)]
    except (KeyError, TypeError, ValueError):
        raise ConfigurationError(
            f"unsupported MCS index {index!r}; QPSK indices 0..{len(MCS_TABLE) - 1} only"
        ) from None


def tbs_compute(num_data_res: int, mcs: McsEntry) -> int:
    """Payload size: ``floor(N_d Q R) - 24`` rounded down to a multiple of 8."""
    if num_data_res <= 0:
        raise ConfigurationError("number of data REs must be positive")
    raw = int(np.floor(num_data_res * mcs.modulation_order * mcs.code_rate)) - coding.CRC_LEN
    tbs = (raw // 8) * 8
    if tbs <= 0:
        raise ConfigurationError(
            f"MCS {mcs.index} leaves no payload on {num_data_res} data REs"
        )
    return tbs


@dataclass(frozen=True, eq=False)
class TransportBlock:
    payload_bits: np.ndarray
    crc_bits: np.ndarray

    @classmethod
    def from_payload(cls, payload) -> "TransportBlock":
        block = coding.crc24_attach(payload)
        return cls(block[: -coding.CRC_LEN], block[-coding.CRC_LEN:])

    @property
    def bits(self) -> np.ndarray:
        return np.concatenate([self.payload_bits, self.crc_bits])

    def is_valid(self) -> bool:
        return coding.crc24_check(self.bits)


def crc24_attach(payload) -> TransportBlock:
    return TransportBlock.from_payload(payload)


def crc24_check(block) -> bool:
    if isinstance(block, TransportBlock):
        return block.is_valid()
    return coding.crc24_check(block)


def encode(block: TransportBlock) -> np.ndarray:
    return coding.encode(block.bits)


rate_match = coding.rate_match
derate_match = coding.derate_match


def channel_estimate(y: np.ndarray, pilots: PilotGrid) -> np.ndarray:
    """LS estimate at the DMRS symbols, linearly interpolated over symbol index.

    Symbols before the first (after the last) DMRS symbol reuse the nearest one.
    """
    mask = pilots.pilot_set.mask
    if not mask.any():
        raise ValueError("no pilot resource elements")
    full = mask.all(axis=0)
    if not np.array_equal(mask.any(axis=0), full):
        raise ValueError("channel estimator expects DMRS on full OFDM symbols")
    pos = np.flatnonzero(full)
    h_pilot = y[:, pos] / pilots.values[:, pos]
    num_symbols = y.shape[1]
    if pos.size == 1:
        return np.repeat(h_pilot, num_symbols, axis=1)
    # interpolation weights, one row per output symbol
    weights = np.zeros((num_symbols, pos.size))
    for l in range(num_symbols):
        if l <= pos[0]:
            weights[l, 0] = 1.0
        elif l >= pos[-1]:
            weights[l, -1] = 1.0
        else:
            j = np.searchsorted(pos, l, side="right") - 1
            frac = (l - pos[j]) / (pos[j + 1] - pos[j])
            weights[l, j] = 1.0 - frac
            weights[l, j + 1] = frac
    return h_pilot @ weights.T


def equalize_demod(y: np.ndarray, h_est: np.ndarray, sigma2: float, pilots: PilotGrid) -> np.ndarray:
    """Max-log QPSK LLRs over the data REs, in mapping order (two per RE)."""
    yd = extract_res(y, pilots.data_set)
    hd = extract_res(h_est, pilots.data_set)
    gain = np.abs(hd) ** 2
    ok = gain > 0
    s_hat = np.zeros_like(yd)
    s_hat[ok] = yd[ok] * np.conj(hd[ok]) / gain[ok]
    scale = 2.0 * gain / max(sigma2, 1e-12)
    llr = np.empty(2 * yd.size)
    llr[0::2] = scale * np.sqrt(2.0) * s_hat.real
    llr[1::2] = scale * np.sqrt(2.0) * s_hat.imag
    return llr


def decode(soft_buffer: np.ndarray, block_len: int) -> tuple[np.ndarray, bool]:
    """Viterbi-decode a combined buffer; ``block_len`` counts payload + CRC bits."""
    bits = coding.viterbi_decode(soft_buffer, block_len)
    return bits[: block_len - coding.CRC_LEN], coding.crc24_check(bits)


@dataclass
class HarqProcess:
    """Soft-combining state of one TB across up to four redundancy versions."""

    block_len: int
    round: int = 0
    decoded: bool = False
    rv_sequence: tuple[int, ...] = RV_SEQUENCE
    soft_buffer: np.ndarray = field(init=False)

    def __post_init__(self):
        self.soft_buffer = np.zeros(coding.mother_length(self.block_len))

    @property
    def next_rv(self) -> int:
        return self.rv_sequence[self.round]

    def receive(self, llr: np.ndarray) -> tuple[np.ndarray, bool]:
        if self.round >= MAX_ROUNDS:
            raise RuntimeError("HARQ process exhausted its four rounds")
        derate_match(llr, self.rv_sequence[self.round], self.soft_buffer.size, self.soft_buffer)
        self.round += 1
        payload, ok = decode(self.soft_buffer, self.block_len)
        self.decoded = ok
        return payload, ok


@dataclass(frozen=True, eq=False)
class LinkContext:
    """Everything the link needs for one TB: numerology, pilots, channel, noise."""

    slot: SlotConfig
    pilots: PilotGrid
    channel: ChannelRealization
    noise_variance: float


@dataclass(frozen=True, eq=False)
class RoundRecord:
    rv: int
    crc_ok: bool
    tx_grid: np.ndarray
    rx_grid: np.ndarray


@dataclass(frozen=True, eq=False)
class HarqOutcome:
    rounds_used: int
    decoded: bool
    payload_ok: bool
    rounds: tuple[RoundRecord, ...]

    @property
    def crc_trace(self) -> tuple[bool, ...]:
        return tuple(r.crc_ok for r in self.rounds)


def harq_run_tb(ctx: LinkContext, mcs: McsEntry, rng: np.random.Generator,
                payload: np.ndarray | None = None) -> HarqOutcome:
    """Send one TB with up to four IR rounds, stopping at the first CRC pass."""
    n_data = ctx.pilots.num_data
    tbs = tbs_compute(n_data, mcs)
    if payload is None:
        payload = rng.integers(0, 2, size=tbs, dtype=np.uint8)
    block = TransportBlock.from_payload(payload)
    codeword = encode(block)
    e_bits = n_data * mcs.modulation_order
    proc = HarqProcess(block.bits.size)
    records = []
    decoded_payload = None
    for _ in range(MAX_ROUNDS):
        rv = proc.next_rv
        tx = map_pusch(ctx.slot, ctx.pilots, qpsk_modulate(rate_match(codeword, rv, e_bits)))
        rx = apply_channel(tx, ctx.channel, ctx.noise_variance, rng)
        h_est = channel_estimate(rx, ctx.pilots)
        llr = equalize_demod(rx, h_est, ctx.noise_variance, ctx.pilots)
        decoded_payload, ok = proc.receive(llr)
        records.append(RoundRecord(rv, ok, tx, rx))
        if ok:
            break
    payload_ok = proc.decoded and np.array_equal(decoded_payload, block.payload_bits)
    return HarqOutcome(proc.round, proc.decoded, bool(payload_ok), tuple(records))
