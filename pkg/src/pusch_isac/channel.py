"""Resource-element level delay-Doppler multipath channel.

After CP removal and FFT an ISI-free OFDM link reduces to

    y[k, l] = h[k, l] x[k, l] + w[k, l],
    h[k, l] = sum_p a_p exp(-j 2 pi k df tau_p) exp(+j 2 pi l Ts nu_p),

so no time-domain waveform is synthesized here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SlotConfig


@dataclass(frozen=True)
class PathParams:
    amplitude: complex
    delay: float
    doppler: float = 0.0

    def check_identifiable(self, slot: SlotConfig) -> None:
        if not 0.0 <= self.delay < slot.data_duration:
            raise ValueError(f"path delay {self.delay!r} s outside [0, T)")
        if abs(self.doppler) >= slot.subcarrier_spacing:
            raise ValueError(f"path Doppler {self.doppler!r} Hz not below the subcarrier spacing")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    paths: tuple[PathParams, ...]


def path_response(path: PathParams, slot: SlotConfig) -> np.ndarray:
    """Rank-one ``(K, L)`` response of one path."""
    k = np.arange(slot.K)
    l = np.arange(slot.L)
    freq = np.exp(-2j * np.pi * k * slot.subcarrier_spacing * path.delay)
    time = np.exp(2j * np.pi * l * slot.symbol_duration * path.doppler)
    return complex(path.amplitude) * np.outer(freq, time)


def synthesize_channel(paths, slot: SlotConfig, *, normalize_tol: float | None = 1e-9) -> ChannelRealization:
    """Frequency-domain channel of a list of paths.

    ``normalize_tol`` bounds ``|sum |a_p|^2 - 1|``; pass ``None`` to skip the check
    (e.g. for a target-only channel).
    """
    paths = tuple(paths)
    if not paths:
        raise ValueError("at least one path is required")
    for p in paths:
        p.check_identifiable(slot)
    if normalize_tol is not None:
        power = sum(abs(p.amplitude) ** 2 for p in paths)
        if abs(power - 1.0) > normalize_tol:
            raise ValueError(f"path powers sum to {power:.6g}, expected 1")
    h = np.zeros(slot.shape, dtype=complex)
    for p in paths:
        h += path_response(p, slot)
    return ChannelRealization(h, paths)


def complex_noise(shape, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples of total variance ``sigma2``."""
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    if sigma2 == 0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def apply_channel(x: np.ndarray, ch: ChannelRealization, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != ch.h.shape:
        raise ValueError(f"grid shape {x.shape} does not match channel shape {ch.h.shape}")
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    return ch.h * x + complex_noise(x.shape, sigma2, rng)


def remove_los(y: np.ndarray, x: np.ndarray, los: PathParams, slot: SlotConfig) -> np.ndarray:
    """Subtract the (perfectly known, static) line-of-sight contribution."""
    static_los = PathParams(los.amplitude, los.delay, 0.0)
    return np.asarray(y) - path_response(static_los, slot) * np.asarray(x)


@dataclass(frozen=True)
class SnrSpec:
    """Reflected-path SNR plus the LoS-to-target power ratio.

    With the default ratio of 9 the communication SNR (LoS + target) is
    ten times the target-path SNR.
    """

    snr1_db: float
    los_to_target_power_ratio: float = 9.0

    @property
    def snr1(self) -> float:
        return 10.0 ** (self.snr1_db / 10.0)

    @property
    def snrc_db(self) -> float:
        return self.snr1_db + 10.0 * np.log10(1.0 + self.los_to_target_power_ratio)

    @property
    def noise_variance(self) -> float:
        return sigma_from_snr(self)[2]


def sigma_from_snr(spec: SnrSpec) -> tuple[float, float, float]:
    """Return ``(|a0|, |a1|, sigma2)`` for unit total path power."""
    ratio = spec.los_to_target_power_ratio
    if not ratio > 0:
        raise ValueError("LoS-to-target power ratio must be positive")
    if np.isnan(spec.snr1_db) or spec.snr1_db == -np.inf:
        raise ValueError(f"SNR must be positive in linear units, got {spec.snr1_db} dB")
    p1 = 1.0 / (1.0 + ratio)
    p0 = ratio / (1.0 + ratio)
    return float(np.sqrt(p0)), float(np.sqrt(p1)), p1 / spec.snr1


def draw_amplitudes(spec: SnrSpec, rng: np.random.Generator) -> tuple[complex, complex]:
    """LoS and target amplitudes with independent uniform phases."""
    a0, a1, _ = sigma_from_snr(spec)
    ph = rng.uniform(0.0, 2 * np.pi, size=2)
    return a0 * np.exp(1j * ph[0]), a1 * np.exp(1j * ph[1])
