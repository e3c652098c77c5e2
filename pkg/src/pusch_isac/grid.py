"""OFDM slot numerology, DMRS placement, QPSK mapping and PUSCH resource mapping.

Grids are ``(K, L)`` complex arrays indexed ``[subcarrier, symbol]``.  Data
symbols are placed frequency-first: subcarrier index runs fastest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# Normal cyclic prefix is 144/2048 of the useful symbol at every numerology.
NORMAL_CP_FRACTION = 144 / 2048

# Single-symbol type-A DMRS positions for a 14-symbol slot, keyed by
# ``dmrs-AdditionalPosition``.
DMRS_POSITIONS_TYPE_A = {
    0: (2,),
    1: (2, 11),
    2: (2, 7, 11),
    3: (2, 5, 8, 11),
}


@dataclass(frozen=True)
class SlotConfig:
    """OFDM numerology of one slot.

    Defaults: 30 kHz spacing, 106 PRBs (1272 subcarriers), 14 symbols, normal CP.
    """

    subcarrier_spacing: float = 30e3
    num_subcarriers: int = 1272
    num_symbols: int = 14
    cp_duration: float | None = None
    carrier_frequency: float = 3.5e9

    def __post_init__(self):
        if self.num_subcarriers <= 0 or self.num_symbols <= 0:
            raise ConfigurationError("grid dimensions must be positive")
        if self.subcarrier_spacing <= 0:
            raise ConfigurationError("subcarrier spacing must be positive")
        if self.cp_duration is None:
            object.__setattr__(self, "cp_duration", NORMAL_CP_FRACTION / self.subcarrier_spacing)
        if self.cp_duration < 0:
            raise ConfigurationError("cyclic prefix duration must be non-negative")

    @property
    def K(self) -> int:
        return self.num_subcarriers

    @property
    def L(self) -> int:
        return self.num_symbols

    @property
    def data_duration(self) -> float:
        return 1.0 / self.subcarrier_spacing

    @property
    def symbol_duration(self) -> float:
        return 1.0 / self.subcarrier_spacing + self.cp_duration

    @property
    def shape(self) -> tuple[int, int]:
        return (self.num_subcarriers, self.num_symbols)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ReSet:
    """A set of resource elements held as a boolean ``(K, L)`` mask."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise ValueError("ReSet mask must be two-dimensional")
        object.__setattr__(self, "mask", _frozen(m))

    @property
    def cardinality(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Member ``(k, l)`` index arrays in frequency-first order."""
        l_idx, k_idx = np.nonzero(self.mask.T)
        return k_idx, l_idx

    def complement(self) -> "ReSet":
        return ReSet(~self.mask)

    def __len__(self) -> int:
        return self.cardinality

    @classmethod
    def full(cls, shape: tuple[int, int]) -> "ReSet":
        return cls(np.ones(shape, dtype=bool))

    @classmethod
    def symbols(cls, shape: tuple[int, int], symbol_indices) -> "ReSet":
        m = np.zeros(shape, dtype=bool)
        m[:, list(symbol_indices)] = True
        return cls(m)


def dmrs_symbol_positions(additional_position: int, num_symbols: int = 14) -> tuple[int, ...]:
    """DMRS symbol indices of a type-A, single-symbol configuration."""
    if num_symbols != 14:
        raise ConfigurationError("the DMRS position table is defined for 14-symbol slots only")
    try:
        return DMRS_POSITIONS_TYPE_A[int(additional_position)]
    except (KeyError, TypeError, ValueError):
        raise ConfigurationError(
            f"DMRS additional position must be one of 0..3, got {additional_position!r}"
        ) from None


@dataclass(frozen=True)
class DmrsConfig:
    additional_position: int = 1
    seed: int = 0
    symbol_positions: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "symbol_positions", dmrs_symbol_positions(self.additional_position))


@dataclass(frozen=True, eq=False)
class PilotGrid:
    """DMRS values on a slot grid plus the pilot/data partition."""

    values: np.ndarray
    pilot_set: ReSet
    data_set: ReSet

    @property
    def num_pilots(self) -> int:
        return self.pilot_set.cardinality

    @property
    def num_data(self) -> int:
        return self.data_set.cardinality


def qpsk_modulate(bits) -> np.ndarray:
    """Gray QPSK: ``(b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)``."""
    b = np.asarray(bits, dtype=np.int8).ravel()
    if b.size % 2:
        raise ValueError(f"QPSK needs an even number of bits, got {b.size}")
    pairs = (1 - 2 * b.reshape(-1, 2)).astype(float)
    return (pairs[:, 0] + 1j * pairs[:, 1]) / np.sqrt(2.0)


def generate_dmrs(config: DmrsConfig, slot: SlotConfig) -> PilotGrid:
    """Seeded pseudo-random QPSK pilots occupying every subcarrier of each DMRS symbol."""
    if max(config.symbol_positions) >= slot.L:
        raise ConfigurationError("DMRS symbol position outside the slot")
    pilot_set = ReSet.symbols(slot.shape, config.symbol_positions)
    rng = np.random.default_rng(config.seed)
    n = pilot_set.cardinality
    bits = rng.integers(0, 2, size=2 * n, dtype=np.int8)
    values = np.zeros(slot.shape, dtype=complex)
    k_idx, l_idx = pilot_set.indices()
    values[k_idx, l_idx] = qpsk_modulate(bits)
    return PilotGrid(_frozen(values), pilot_set, pilot_set.complement())


def map_pusch(slot: SlotConfig, pilots: PilotGrid, data_symbols) -> np.ndarray:
    """Place pilots and data on the slot grid (data frequency-first)."""
    data_symbols = np.asarray(data_symbols, dtype=complex).ravel()
    if pilots.values.shape != slot.shape:
        raise ValueError("pilot grid does not match slot dimensions")
    if data_symbols.size != pilots.num_data:
        raise ValueError(
            f"expected {pilots.num_data} data symbols, got {data_symbols.size}"
        )
    grid = np.array(pilots.values, dtype=complex, copy=True)
    k_idx, l_idx = pilots.data_set.indices()
    grid[k_idx, l_idx] = data_symbols
    return grid


def extract_res(grid: np.ndarray, re_set: ReSet) -> np.ndarray:
    """Values of ``grid`` at the members of ``re_set``, frequency-first."""
    k_idx, l_idx = re_set.indices()
    return np.asarray(grid)[k_idx, l_idx]
