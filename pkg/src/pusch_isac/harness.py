"""Monte-Carlo campaigns: HARQ link + per-slot sensing, aggregated per SNR point.

One *trial* is one transport block.  It occupies one slot per HARQ round;
every slot produces a sensing measurement.  The slot in which the CRC first
passes is sensed with all REs, every other slot with DMRS only.  Both
estimates are computed for every slot so that per-scenario statistics are
available from the same noise draws.

Each trial draws from its own RNG stream,
``SeedSequence(seed, spawn_key=(mcs, dmrs_additional_position, snr_index, trial_index))``,
so results do not depend on worker count or scheduling order.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .channel import PathParams, SnrSpec, draw_amplitudes, remove_los, sigma_from_snr, synthesize_channel
from .config import CampaignConfig
from .errors import ConfigurationError
from .grid import DmrsConfig, ReSet, generate_dmrs
from .harq_link import LinkContext, MAX_ROUNDS, harq_run_tb, mcs_entry, tbs_compute
from .sensing import Scenario, SensingMeasurement, estimate_ml, form_measurement, synthesize_measurement

log = logging.getLogger(__name__)

SPEED_OF_LIGHT = bounds.SPEED_OF_LIGHT


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one transport block and the sensing errors of its slots."""

    trial: int
    crc_trace: tuple[bool, ...]
    payload_ok: bool
    tau: float
    nu: float
    # per slot, indexed by HARQ round: errors of the DMRS-only and all-RE estimates
    err_tau_dmrs: tuple[float, ...]
    err_nu_dmrs: tuple[float, ...]
    err_tau_all: tuple[float, ...]
    err_nu_all: tuple[float, ...]

    @property
    def rounds_used(self) -> int:
        return len(self.crc_trace)

    @property
    def decoded(self) -> bool:
        return self.crc_trace[-1]


@dataclass
class SlotStats:
    """Flat per-slot arrays of one SNR point, in (trial, round) order."""

    scenario2: np.ndarray
    err_tau: np.ndarray
    err_nu: np.ndarray
    err_tau_dmrs: np.ndarray
    err_nu_dmrs: np.ndarray
    err_tau_all: np.ndarray
    err_nu_all: np.ndarray

    @classmethod
    def from_trials(cls, trials: list[TrialRecord]) -> "SlotStats":
        s2, etd, end, eta, ena = [], [], [], [], []
        for t in trials:
            s2.extend(t.crc_trace)
            etd.extend(t.err_tau_dmrs)
            end.extend(t.err_nu_dmrs)
            eta.extend(t.err_tau_all)
            ena.extend(t.err_nu_all)
        s2 = np.array(s2, dtype=bool)
        etd, end, eta, ena = (np.array(v, dtype=float) for v in (etd, end, eta, ena))
        return cls(s2, np.where(s2, eta, etd), np.where(s2, ena, end), etd, end, eta, ena)


@dataclass
class SnrPointResult:
    mcs: int
    dmrs_add_pos: int
    snr1_db: float
    snrc_db: float
    rmse_range_m: float
    rmse_doppler_hz: float
    throughput_bits_per_slot: float
    throughput_analytic: float
    bler_round: list[float]
    rho: float
    scenario2_fraction: float
    crlb_range_s1_m: float
    crlb_range_s2_m: float
    crlb_range_mix_m: float
    crlb_doppler_s1_hz: float
    crlb_doppler_s2_hz: float
    crlb_doppler_mix_hz: float
    trials: int
    slots: int
    decoded_tbs: int
    rmse_range_s1_m: float
    rmse_range_s2_m: float
    rmse_doppler_s1_hz: float
    rmse_doppler_s2_hz: float
    throughput_payload_bits_per_slot: float
    undetected_errors: int
    round_attempts: list[int]
    round_failures: list[int]
    slot_stats: SlotStats | None = field(default=None, repr=False)


@dataclass
class CampaignResult:
    config: CampaignConfig
    points: list[SnrPointResult]

    def select(self, mcs: int, dmrs_add_pos: int) -> list[SnrPointResult]:
        return [p for p in self.points if p.mcs == mcs and p.dmrs_add_pos == dmrs_add_pos]


def trial_rng(seed: int, mcs: int, dmrs_add_pos: int, snr_index: int, trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(mcs, dmrs_add_pos, snr_index, trial_index))
    return np.random.default_rng(ss)


class _CaseSetup:
    """Immutable per-(MCS, DMRS) objects shared by all trials of a case."""

    def __init__(self, config: CampaignConfig, mcs_index: int, dmrs_add_pos: int):
        self.config = config
        self.slot = config.slot
        self.mcs = mcs_entry(mcs_index)
        self.dmrs_add_pos = dmrs_add_pos
        self.pilots = generate_dmrs(DmrsConfig(dmrs_add_pos, config.dmrs_seed), self.slot)
        self.full = ReSet.full(self.slot.shape)
        self.num_data = self.pilots.num_data
        self.tbs = tbs_compute(self.num_data, self.mcs)


def _estimate_errors(z_full: SensingMeasurement, setup: _CaseSetup, target: PathParams):
    cfg = setup.config.estimator
    slot = setup.slot
    z_dmrs = SensingMeasurement(np.where(setup.pilots.pilot_set.mask, z_full.z, 0.0),
                                setup.pilots.pilot_set, Scenario.DMRS_ONLY)
    e1 = estimate_ml(z_dmrs, cfg, slot)
    e2 = estimate_ml(z_full, cfg, slot)
    return (e1.tau_hat - target.delay, e1.nu_hat - target.doppler,
            e2.tau_hat - target.delay, e2.nu_hat - target.doppler)


def run_trial(setup: _CaseSetup, snr_index: int, trial_index: int) -> TrialRecord:
    cfg = setup.config
    slot = setup.slot
    snr = SnrSpec(cfg.snr1_db[snr_index], cfg.los_to_target_power_ratio)
    sigma2 = sigma_from_snr(snr)[2]
    rng = trial_rng(cfg.seed, setup.mcs.index, setup.dmrs_add_pos, snr_index, trial_index)
    a0, a1 = draw_amplitudes(snr, rng)
    tau = rng.uniform(*cfg.tau_range) * slot.data_duration
    nu = rng.uniform(*cfg.doppler_range) / (slot.num_symbols * slot.symbol_duration)
    los = PathParams(a0, 0.0, 0.0)
    target = PathParams(a1, tau, nu)
    channel = synthesize_channel([los, target], slot)
    outcome = harq_run_tb(LinkContext(slot, setup.pilots, channel, sigma2), setup.mcs, rng)

    errs = []
    for rec in outcome.rounds:
        if cfg.measurement_mode == "direct":
            z = synthesize_measurement(target, slot, sigma2, setup.full, rng, Scenario.ALL_RE)
        else:
            residual = remove_los(rec.rx_grid, rec.tx_grid, los, slot)
            z = form_measurement(residual, rec.tx_grid, setup.full, Scenario.ALL_RE)
        errs.append(_estimate_errors(z, setup, target))
    etd, end, eta, ena = (tuple(float(e[i]) for e in errs) for i in range(4))
    return TrialRecord(trial_index, outcome.crc_trace, outcome.payload_ok or not outcome.decoded,
                       tau, nu, etd, end, eta, ena)


def _run_chunk(args):
    config, mcs_index, dmrs_add_pos, snr_index, trial_indices = args
    setup = _CaseSetup(config, mcs_index, dmrs_add_pos)
    return [run_trial(setup, snr_index, t) for t in trial_indices]


def _rmse(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if x.size else math.nan


def _bound_set(setup: _CaseSetup, sigma2: float):
    """Full-inverse CRLBs (tau in s^2, nu in Hz^2) for the DMRS-only and all-RE sets."""
    if sigma2 == 0:
        return (0.0, 0.0), (0.0, 0.0)
    h = math.sqrt(1.0 / (1.0 + setup.config.los_to_target_power_ratio))
    out = []
    for re_set in (setup.pilots.pilot_set, setup.full):
        F = bounds.fisher_matrix(h, sigma2, bounds.re_sums(re_set), setup.slot.subcarrier_spacing,
                                 setup.slot.symbol_duration)
        b = bounds.crlb(F).full_bound
        out.append((float(b[2]), float(b[3])))
    return tuple(out)


def aggregate(setup: _CaseSetup, snr_index: int, trials: list[TrialRecord], keep_slots: bool = True) -> SnrPointResult:
    cfg = setup.config
    trials = sorted(trials, key=lambda t: t.trial)
    snr = SnrSpec(cfg.snr1_db[snr_index], cfg.los_to_target_power_ratio)
    sigma2 = sigma_from_snr(snr)[2]
    attempts = [sum(1 for t in trials if t.rounds_used > i) for i in range(MAX_ROUNDS)]
    failures = [sum(1 for t in trials if t.rounds_used > i and not t.crc_trace[i]) for i in range(MAX_ROUNDS)]
    P = [failures[i] / attempts[i] if attempts[i] else 0.0 for i in range(MAX_ROUNDS)]
    slots = sum(attempts)
    decoded = sum(1 for t in trials if t.decoded)
    stats = SlotStats.from_trials(trials)
    rho_hat = _rho_quiet(P)
    info_bits = setup.num_data * setup.mcs.modulation_order * setup.mcs.code_rate
    (b1_tau, b1_nu), (b2_tau, b2_nu) = _bound_set(setup, sigma2)
    mix_tau = (1 - rho_hat) * b1_tau + rho_hat * b2_tau
    mix_nu = (1 - rho_hat) * b1_nu + rho_hat * b2_nu
    c = SPEED_OF_LIGHT
    return SnrPointResult(
        mcs=setup.mcs.index,
        dmrs_add_pos=setup.dmrs_add_pos,
        snr1_db=snr.snr1_db,
        snrc_db=snr.snrc_db,
        rmse_range_m=c * _rmse(stats.err_tau),
        rmse_doppler_hz=_rmse(stats.err_nu),
        throughput_bits_per_slot=info_bits * decoded / slots,
        throughput_analytic=info_bits * rho_hat,
        bler_round=P,
        rho=rho_hat,
        scenario2_fraction=decoded / slots,
        crlb_range_s1_m=c * math.sqrt(b1_tau),
        crlb_range_s2_m=c * math.sqrt(b2_tau),
        crlb_range_mix_m=c * math.sqrt(mix_tau),
        crlb_doppler_s1_hz=math.sqrt(b1_nu),
        crlb_doppler_s2_hz=math.sqrt(b2_nu),
        crlb_doppler_mix_hz=math.sqrt(mix_nu),
        trials=len(trials),
        slots=slots,
        decoded_tbs=decoded,
        rmse_range_s1_m=c * _rmse(stats.err_tau_dmrs),
        rmse_range_s2_m=c * _rmse(stats.err_tau_all),
        rmse_doppler_s1_hz=_rmse(stats.err_nu_dmrs),
        rmse_doppler_s2_hz=_rmse(stats.err_nu_all),
        throughput_payload_bits_per_slot=setup.tbs * sum(1 for t in trials if t.decoded and t.payload_ok) / slots,
        undetected_errors=sum(1 for t in trials if not t.payload_ok),
        round_attempts=attempts,
        round_failures=failures,
        slot_stats=stats if keep_slots else None,
    )


def _rho_quiet(P) -> float:
    # measured conditional BLERs may be non-monotone at small sample sizes
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return bounds.rho(P)


def _chunks(n: int, size: int):
    return [list(range(i, min(i + size, n))) for i in range(0, n, size)]


def run_campaign(config: CampaignConfig, workers: int = 1, keep_slots: bool = True,
                 chunk_size: int = 50) -> CampaignResult:
    """Run every (MCS, DMRS, SNR) point of ``config``."""
    config.validate()
    setups = {}
    for m, p in config.cases:
        try:
            setups[(m, p)] = _CaseSetup(config, m, p)
        except ConfigurationError:
            raise
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
    jobs = []
    for (m, p) in config.cases:
        for si in range(len(config.snr1_db)):
            for chunk in _chunks(config.trials, chunk_size):
                jobs.append((config, m, p, si, chunk))
    collected: dict[tuple[int, int, int], list[TrialRecord]] = {}
    if workers <= 1:
        outputs = map(_run_chunk, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        outputs = pool.map(_run_chunk, jobs)
    try:
        for job, recs in zip(jobs, outputs):
            _, m, p, si, _ = job
            collected.setdefault((m, p, si), []).extend(recs)
    finally:
        if workers > 1:
            pool.shutdown()
    points = []
    for (m, p) in config.cases:
        for si in range(len(config.snr1_db)):
            pt = aggregate(setups[(m, p)], si, collected[(m, p, si)], keep_slots)
            log.info("mcs=%d dmrs=%d snr1=%+.1f dB: P1=%.3f rho=%.3f rmse_nu=%.4g Hz",
                     m, p, pt.snr1_db, pt.bler_round[0], pt.rho, pt.rmse_doppler_hz)
            points.append(pt)
    return CampaignResult(config, points)


def run_crlb(config: CampaignConfig, bler=None, campaign: dict | None = None) -> list[dict]:
    """Scenario-1, scenario-2 and HARQ-mixed sensing bounds across the SNR sweep.

    Per-round error probabilities come from ``bler`` (one 4-tuple for every
    point) or from a campaign JSON document (matched by MCS, DMRS and SNR).
    """
    if bler is None and campaign is None:
        raise ConfigurationError(
            "the mixed bound needs per-round error probabilities: pass --bler p1,p2,p3,p4 "
            "or --from-campaign results.json"
        )
    measured = {}
    if campaign is not None:
        for rec in campaign["points"]:
            measured[(rec["mcs"], rec["dmrs_add_pos"], float(rec["snr1_db"]))] = rec["bler_round"]
    rows = []
    for (m, p) in config.cases:
        setup = _CaseSetup(config, m, p)
        for snr1 in config.snr1_db:
            snr = SnrSpec(snr1, config.los_to_target_power_ratio)
            sigma2 = sigma_from_snr(snr)[2]
            if bler is not None:
                P = list(bler)
            else:
                key = (m, p, float(snr1))
                if key not in measured:
                    raise ConfigurationError(f"campaign has no point for mcs={m} dmrs={p} snr1={snr1} dB")
                P = measured[key]
            r = _rho_quiet(P)
            (b1_tau, b1_nu), (b2_tau, b2_nu) = _bound_set(setup, sigma2)
            c = SPEED_OF_LIGHT
            rows.append({
                "mcs": m, "dmrs_add_pos": p, "snr1_db": snr1, "rho": r,
                "crlb_range_s1_m": c * math.sqrt(b1_tau),
                "crlb_range_s2_m": c * math.sqrt(b2_tau),
                "crlb_range_mix_m": c * math.sqrt((1 - r) * b1_tau + r * b2_tau),
                "crlb_doppler_s1_hz": math.sqrt(b1_nu),
                "crlb_doppler_s2_hz": math.sqrt(b2_nu),
                "crlb_doppler_mix_hz": math.sqrt((1 - r) * b1_nu + r * b2_nu),
            })
    return rows


def run_geometry(d0: float, delta_tau: float, theta: float, speed: float | None = None,
                 carrier_frequency: float = 3.5e9) -> dict:
    from .geometry import doppler_from_velocity, localize

    d1, pos = localize(delta_tau, theta, d0)
    report = {
        "d0_m": d0,
        "delta_tau_s": delta_tau,
        "theta_rad": theta,
        "dp_m": SPEED_OF_LIGHT * delta_tau + d0,
        "d1_m": d1,
        "target_x_m": float(pos[0]),
        "target_y_m": float(pos[1]),
    }
    if speed is not None:
        report["doppler_hz"] = doppler_from_velocity(speed, d1, d0, theta, carrier_frequency)
    return report
