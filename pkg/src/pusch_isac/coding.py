"""CRC-24A, rate-1/3 recursive systematic convolutional code and circular-buffer rate matching.

The code is the systematic (recursive) form of the constraint-length-7
``(133, 171, 165)`` octal code: feedback ``133``, parity taps ``171`` and ``165``.
It spans the same code space as the feed-forward version, so the free
distance is unchanged.  Trellis termination uses 6 tail steps whose inputs
cancel the feedback.

Codeword / circular-buffer layout is ``[systematic | parity1 | parity2]``,
each stream ``B + 6`` bits long.  LLRs are ``log P(b=0) / P(b=1)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CRC24A_POLY = 0x1864CFB
CRC_LEN = 24

CONSTRAINT_LENGTH = 7
MEMORY = CONSTRAINT_LENGTH - 1
NUM_STATES = 1 << MEMORY
FEEDBACK = 0o133
PARITY_POLYS = (0o171, 0o165)


def _crc_table(poly: int = CRC24A_POLY, width: int = CRC_LEN) -> np.ndarray:
    top = 1 << (width - 1)
    mask = (1 << width) - 1
    table = np.zeros(256, dtype=np.int64)
    for byte in range(256):
        reg = byte << (width - 8)
        for _ in range(8):
            reg = ((reg << 1) ^ poly) if reg & top else (reg << 1)
        table[byte] = reg & mask
    return table


_CRC_TABLE = [int(v) for v in _crc_table()]


def crc24a(bits) -> int:
    """CRC-24A remainder of a bit sequence (MSB first, zero initial state)."""
    b = np.asarray(bits, dtype=np.uint8).ravel()
    pad = (-b.size) % 8
    if pad:
        # Leading zeros leave a zero-initialised CRC unchanged.
        b = np.concatenate([np.zeros(pad, dtype=np.uint8), b])
    reg = 0
    for byte in np.packbits(b).tolist():
        reg = ((reg << 8) & 0xFFFFFF) ^ _CRC_TABLE[((reg >> 16) ^ byte) & 0xFF]
    return reg


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def crc24_attach(payload) -> np.ndarray:
    """Payload followed by its 24 CRC bits."""
    payload = np.asarray(payload, dtype=np.uint8).ravel()
    return np.concatenate([payload, int_to_bits(crc24a(payload), CRC_LEN)])


def crc24_check(block) -> bool:
    """True iff the CRC-24A remainder of payload+CRC is zero."""
    return crc24a(block) == 0


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _build_trellis():
    fb_taps = FEEDBACK & (NUM_STATES - 1)
    next_state = np.zeros((NUM_STATES, 2), dtype=np.int64)
    outputs = np.zeros((NUM_STATES, 2, 3), dtype=np.int64)
    tail_input = np.zeros(NUM_STATES, dtype=np.int64)
    for s in range(NUM_STATES):
        fb = _parity(s & fb_taps)
        tail_input[s] = fb
        for u in (0, 1):
            a = u ^ fb
            reg = (a << MEMORY) | s
            next_state[s, u] = reg >> 1
            outputs[s, u] = (u, _parity(reg & PARITY_POLYS[0]), _parity(reg & PARITY_POLYS[1]))
    # Each next state is reached from exactly two (state, input) pairs.
    prev_state = np.full((NUM_STATES, 2), -1, dtype=np.int64)
    prev_input = np.zeros((NUM_STATES, 2), dtype=np.int64)
    fill = np.zeros(NUM_STATES, dtype=np.int64)
    for s in range(NUM_STATES):
        for u in (0, 1):
            ns = next_state[s, u]
            prev_state[ns, fill[ns]] = s
            prev_input[ns, fill[ns]] = u
            fill[ns] += 1
    assert np.all(fill == 2)
    return next_state, outputs, tail_input, prev_state, prev_input


NEXT_STATE, OUTPUTS, TAIL_INPUT, PREV_STATE, PREV_INPUT = _build_trellis()


def mother_length(num_info_bits: int) -> int:
    return 3 * (num_info_bits + MEMORY)


def encode(bits) -> np.ndarray:
    """Zero-terminated rate-1/3 systematic encoding; returns ``3 * (B + 6)`` bits."""
    u = np.asarray(bits, dtype=np.int64).ravel()
    return _encode_kernel(u, NEXT_STATE, OUTPUTS, TAIL_INPUT).astype(np.uint8)


@njit(cache=True)
def _encode_kernel(u, next_state, outputs, tail_input):
    n = u.size + 6
    out = np.zeros(3 * n, dtype=np.int64)
    s = 0
    for t in range(n):
        b = u[t] if t < u.size else tail_input[s]
        out[t] = outputs[s, b, 0]
        out[n + t] = outputs[s, b, 1]
        out[2 * n + t] = outputs[s, b, 2]
        s = next_state[s, b]
    return out


@njit(cache=True)
def _viterbi_kernel(llr, prev_state, prev_input, outputs):
    n = llr.size // 3
    num_states = prev_state.shape[0]
    neg = -1.0e300
    metric = np.full(num_states, neg)
    metric[0] = 0.0
    new_metric = np.empty(num_states)
    choice = np.zeros((n, num_states), dtype=np.int8)
    for t in range(n):
        l0 = llr[t]
        l1 = llr[n + t]
        l2 = llr[2 * n + t]
        for ns in range(num_states):
            best = neg
            best_j = 0
            for j in range(2):
                s = prev_state[ns, j]
                u = prev_input[ns, j]
                m = metric[s]
                if m <= neg:
                    continue
                # correlation metric: +llr for a 0 bit, -llr for a 1 bit
                bm = 0.0
                bm += l0 if outputs[s, u, 0] == 0 else -l0
                bm += l1 if outputs[s, u, 1] == 0 else -l1
                bm += l2 if outputs[s, u, 2] == 0 else -l2
                if m + bm > best:
                    best = m + bm
                    best_j = j
            new_metric[ns] = best
            choice[t, ns] = best_j
        # renormalise to keep metrics bounded
        top = new_metric.max()
        for ns in range(num_states):
            metric[ns] = new_metric[ns] - top if new_metric[ns] > neg else neg
    decoded = np.zeros(n, dtype=np.uint8)
    s = 0  # zero-terminated trellis
    for t in range(n - 1, -1, -1):
        j = choice[t, s]
        decoded[t] = prev_input[s, j]
        s = prev_state[s, j]
    return decoded


def viterbi_decode(llr, num_info_bits: int) -> np.ndarray:
    """Soft-input Viterbi decoding of a full mother-codeword LLR buffer."""
    llr = np.ascontiguousarray(np.asarray(llr, dtype=np.float64).ravel())
    if llr.size != mother_length(num_info_bits):
        raise ValueError(f"expected {mother_length(num_info_bits)} LLRs, got {llr.size}")
    decoded = _viterbi_kernel(llr, PREV_STATE, PREV_INPUT, OUTPUTS)
    return decoded[:num_info_bits]


def rate_match_indices(buffer_len: int, rv: int, num_bits: int) -> np.ndarray:
    if num_bits <= 0:
        raise ValueError("rate-matched length must be positive")
    if rv not in (0, 1, 2, 3):
        raise ValueError(f"redundancy version must be 0..3, got {rv!r}")
    start = rv * (buffer_len // 4)
    return (start + np.arange(num_bits)) % buffer_len


def rate_match(codeword, rv: int, num_bits: int) -> np.ndarray:
    """Read ``num_bits`` from the circular buffer starting at the RV offset."""
    codeword = np.asarray(codeword)
    return codeword[rate_match_indices(codeword.size, rv, num_bits)]


def derate_match(llr, rv: int, buffer_len: int, soft_buffer: np.ndarray | None = None) -> np.ndarray:
    """Accumulate received LLRs into their circular-buffer positions."""
    llr = np.asarray(llr, dtype=float).ravel()
    idx = rate_match_indices(buffer_len, rv, llr.size)
    acc = np.bincount(idx, weights=llr, minlength=buffer_len)
    if soft_buffer is None:
        return acc
    soft_buffer += acc
    return soft_buffer
