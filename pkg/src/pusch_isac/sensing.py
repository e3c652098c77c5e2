"""Maximum-likelihood delay/Doppler estimation of a single target.

The measurement ``z[k, l]`` is the LoS-free received grid with the known
symbol phase removed.  Minimizing ``sum |z - a exp(j 2 pi (l Ts nu - k df tau))|^2``
over ``a`` leaves maximization of the periodogram

    P(tau, nu) = |sum_{(k,l) in mask} z[k, l] exp(+j 2 pi k df tau) exp(-j 2 pi l Ts nu)|^2

which is evaluated on an oversampled lattice with a zero-padded 2-D FFT,
then refined by 3-point log-parabolic interpolation and (optionally) a few
bounded Newton steps on the continuous periodogram.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft as sp_fft

from .channel import PathParams, complex_noise, path_response
from .errors import EstimationError
from .grid import ReSet, SlotConfig


class Scenario(str, enum.Enum):
    DMRS_ONLY = "dmrs_only"
    ALL_RE = "all_re"


@dataclass(frozen=True, eq=False)
class SensingMeasurement:
    z: np.ndarray
    mask: ReSet
    scenario: Scenario


@dataclass(frozen=True)
class EstimatorConfig:
    """Lattice and refinement settings of the ML estimator.

    ``doppler_search`` optionally limits the Doppler search to a prior window,
    in Doppler resolution cells ``1/(L Ts)``; ``None`` searches the whole
    unambiguous window ``[-1/(2 Ts), 1/(2 Ts))``.
    """

    delay_oversampling: int = 4
    doppler_oversampling: int = 4
    refine: bool = True
    polish: bool = True
    max_newton_steps: int = 12
    # lattice search precision inside estimate_ml; the polish always runs in float64
    search_precision: str = "single"
    doppler_search: tuple[float, float] | None = None

    def __post_init__(self):
        if int(self.delay_oversampling) < 1 or int(self.doppler_oversampling) < 1:
            raise ValueError("oversampling factors must be >= 1")
        if self.search_precision not in ("single", "double"):
            raise ValueError("search_precision must be 'single' or 'double'")
        if self.doppler_search is not None:
            lo, hi = (float(v) for v in self.doppler_search)
            if not lo < hi:
                raise ValueError("doppler_search must be an increasing (lo, hi) pair")
            object.__setattr__(self, "doppler_search", (lo, hi))


@dataclass(frozen=True)
class SensingEstimate:
    tau_hat: float
    nu_hat: float
    alpha_hat: complex
    peak_value: float


@dataclass(frozen=True, eq=False)
class Periodogram:
    """Lattice power; axis 0 is delay, axis 1 is signed Doppler (ascending).

    ``doppler_bins`` holds the signed lattice index ``b`` of every column and
    ``search`` the column range eligible for the peak.
    """

    power: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray
    doppler_bins: np.ndarray
    peak_index: tuple[int, int]
    wraps: bool = True

    @property
    def peak_delay(self) -> float:
        return float(self.delays[self.peak_index[0]])

    @property
    def peak_doppler(self) -> float:
        return float(self.dopplers[self.peak_index[1]])


def select_scenario(decoded: bool, dmrs_set: ReSet) -> tuple[ReSet, Scenario]:
    if decoded:
        return ReSet.full(dmrs_set.shape), Scenario.ALL_RE
    return dmrs_set, Scenario.DMRS_ONLY


def form_measurement(residual: np.ndarray, known_symbols: np.ndarray, mask: ReSet,
                     scenario: Scenario | None = None, atol: float = 1e-9) -> SensingMeasurement:
    """Undo the known symbol phase on the masked REs; zero elsewhere."""
    residual = np.asarray(residual)
    known_symbols = np.asarray(known_symbols)
    if residual.shape != mask.shape or known_symbols.shape != mask.shape:
        raise ValueError("measurement, symbol and mask shapes differ")
    m = mask.mask
    if np.any(np.abs(np.abs(known_symbols[m]) - 1.0) > atol):
        raise ValueError("known symbols must have unit modulus on the sensing REs")
    z = np.zeros(residual.shape, dtype=complex)
    z[m] = residual[m] * np.conj(known_symbols[m])
    if scenario is None:
        scenario = Scenario.ALL_RE if m.all() else Scenario.DMRS_ONLY
    return SensingMeasurement(z, mask, scenario)


def synthesize_measurement(target: PathParams, slot: SlotConfig, sigma2: float, mask: ReSet,
                           rng: np.random.Generator, scenario: Scenario | None = None) -> SensingMeasurement:
    """Phase-compensated target echo plus fresh noise, generated directly on ``mask``."""
    z = path_response(target, slot) + complex_noise(slot.shape, sigma2, rng)
    z[~mask.mask] = 0.0
    if scenario is None:
        scenario = Scenario.ALL_RE if mask.mask.all() else Scenario.DMRS_ONLY
    return SensingMeasurement(z, mask, scenario)


def periodogram(meas: SensingMeasurement, cfg: EstimatorConfig, slot: SlotConfig,
                precision: str = "double") -> Periodogram:
    """Periodogram on the oversampled lattice via a zero-padded 2-D FFT.

    With ``cfg.doppler_search`` set only the Doppler columns inside the window
    (plus one guard column each side) are evaluated.
    """
    if meas.mask.cardinality == 0:
        raise EstimationError("sensing mask is empty")
    z = np.where(meas.mask.mask, meas.z, 0.0)
    if precision == "single":
        z = z.astype(np.complex64)
    K, L = z.shape
    o_t = int(cfg.doppler_oversampling)
    n_f = int(cfg.delay_oversampling) * K
    n_t = o_t * L
    # work on (Doppler, delay) so the long transform runs along contiguous memory:
    # exp(-j 2 pi l b / n_t) over symbols, exp(+j 2 pi k a / n_f) over subcarriers
    spec = sp_fft.fft(z.T, n=n_t, axis=0)
    bins = np.arange(n_t) - n_t // 2
    wraps = True
    lo_col, hi_col = 0, n_t
    if cfg.doppler_search is not None:
        b_lo = int(np.floor(cfg.doppler_search[0] * o_t))
        b_hi = int(np.ceil(cfg.doppler_search[1] * o_t))
        if b_hi - b_lo + 3 < n_t:
            bins = np.arange(b_lo - 1, b_hi + 2)
            wraps = False
            lo_col, hi_col = 1, bins.size - 1
    spec = spec[bins % n_t]
    spec = sp_fft.ifft(spec, n=n_f, axis=1, overwrite_x=True)
    power = spec.real ** 2 + spec.imag ** 2
    power *= float(n_f) ** 2
    ib, ia = np.unravel_index(int(np.argmax(power[lo_col:hi_col])), (hi_col - lo_col, n_f))
    delays = np.arange(n_f) * slot.data_duration / n_f
    dopplers = bins / (n_t * slot.symbol_duration)
    return Periodogram(power.T, delays, dopplers, bins, (int(ia), int(ib) + lo_col), wraps)


def correlation(z: np.ndarray, slot: SlotConfig, tau: float, nu: float) -> complex:
    """Direct evaluation of the matched-filter sum at one ``(tau, nu)``."""
    K, L = z.shape
    a = np.exp(2j * np.pi * np.arange(K) * slot.subcarrier_spacing * tau)
    b = np.exp(-2j * np.pi * np.arange(L) * slot.symbol_duration * nu)
    return complex(a @ z @ b)


def _parabolic_offset(left: float, centre: float, right: float) -> float:
    lm, l0, lp = (np.log(max(float(v), 1e-300)) for v in (left, centre, right))
    denom = lm - 2.0 * l0 + lp
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (lm - lp) / denom, -0.5, 0.5))


def _derivatives(z, k, l, u, w):
    """``c`` and its first/second derivatives in normalized units ``u = tau df``, ``w = nu Ts``."""
    a = np.exp(2j * np.pi * k * u)
    b = np.exp(-2j * np.pi * l * w)
    A = z * a[:, None] * b[None, :]
    rows = A.sum(axis=1)
    cols = A.sum(axis=0)
    two_pi = 2.0 * np.pi
    c = rows.sum()
    c_u = 1j * two_pi * (k @ rows)
    c_w = -1j * two_pi * (cols @ l)
    c_uu = -(two_pi ** 2) * ((k * k) @ rows)
    c_ww = -(two_pi ** 2) * (cols @ (l * l))
    c_uw = two_pi ** 2 * (k @ A @ l)
    return c, c_u, c_w, c_uu, c_ww, c_uw


def _newton_polish(z, u0, w0, du, dw, max_steps):
    """Bounded Newton ascent of ``|c|^2`` inside one lattice cell around ``(u0, w0)``."""
    K, L = z.shape
    k = np.arange(K, dtype=float)
    l = np.arange(L, dtype=float)
    u, w = u0, w0
    for _ in range(max_steps):
        c, c_u, c_w, c_uu, c_ww, c_uw = _derivatives(z, k, l, u, w)
        p = abs(c) ** 2
        g = np.array([2 * (np.conj(c) * c_u).real, 2 * (np.conj(c) * c_w).real])
        H = np.array([
            [2 * (abs(c_u) ** 2 + (np.conj(c) * c_uu).real), 2 * (np.conj(c_u) * c_w + np.conj(c) * c_uw).real],
            [0.0, 2 * (abs(c_w) ** 2 + (np.conj(c) * c_ww).real)],
        ])
        H[1, 0] = H[0, 1]
        if not np.all(np.linalg.eigvalsh(H) < 0):
            break
        step = -np.linalg.solve(H, g)
        if 0.5 * float(g @ step) <= 1e-9 * p:
            # quadratic region: the gain is below what |c|^2 can resolve, take the step as is
            nu_, nw_ = u + step[0], w + step[1]
            if abs(nu_ - u0) <= du and abs(nw_ - w0) <= dw:
                u, w = nu_, nw_
            break
        accepted = False
        for _ in range(8):
            nu_, nw_ = u + step[0], w + step[1]
            if abs(nu_ - u0) <= du and abs(nw_ - w0) <= dw:
                c_new = np.exp(2j * np.pi * k * nu_) @ z @ np.exp(-2j * np.pi * l * nw_)
                if abs(c_new) ** 2 >= p:
                    accepted = True
                    break
            step = step / 2
        if not accepted:
            break
        u, w = nu_, nw_
        if abs(step[0]) < 1e-15 * max(1.0, abs(u)) and abs(step[1]) < 1e-15:
            break
    return u, w


def estimate_ml(meas: SensingMeasurement, cfg: EstimatorConfig, slot: SlotConfig,
                pgram: Periodogram | None = None) -> SensingEstimate:
    """Single-target ML estimate of delay, Doppler and complex amplitude."""
    if meas.mask.cardinality == 0:
        raise EstimationError("sensing mask is empty")
    if pgram is None:
        pgram = periodogram(meas, cfg, slot, precision=cfg.search_precision)
    z = np.where(meas.mask.mask, meas.z, 0.0)
    power = pgram.power
    n_f, n_cols = power.shape
    n_t = int(cfg.doppler_oversampling) * z.shape[1]
    ia, ib = pgram.peak_index
    # lattice coordinates: delay index a, signed Doppler index b
    a = float(ia)
    b = float(pgram.doppler_bins[ib])
    if cfg.refine:
        if n_f >= 3:
            a += _parabolic_offset(power[(ia - 1) % n_f, ib], power[ia, ib], power[(ia + 1) % n_f, ib])
        if n_cols >= 3 and (pgram.wraps or 0 < ib < n_cols - 1):
            b += _parabolic_offset(power[ia, (ib - 1) % n_cols], power[ia, ib], power[ia, (ib + 1) % n_cols])
    u = a / n_f
    w = b / n_t
    if cfg.polish:
        u, w = _newton_polish(z, u, w, 1.0 / n_f, 1.0 / n_t, cfg.max_newton_steps)
    u = u % 1.0
    if u >= 1.0:  # tiny negative u rounds up to 1.0
        u = 0.0
    w = (w + 0.5) % 1.0 - 0.5
    tau_hat = u * slot.data_duration
    nu_hat = w / slot.symbol_duration
    c = correlation(z, slot, tau_hat, nu_hat)
    return SensingEstimate(tau_hat, nu_hat, c / meas.mask.cardinality, abs(c) ** 2)
