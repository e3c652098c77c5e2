"""Campaign configuration and its TOML file format.

Top-level keys mirror :class:`CampaignConfig`; ``[slot]`` and ``[estimator]``
sections mirror :class:`~pusch_isac.grid.SlotConfig` and
:class:`~pusch_isac.sensing.EstimatorConfig`.  Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError
from .grid import DMRS_POSITIONS_TYPE_A, SlotConfig
from .harq_link import MCS_TABLE
from .sensing import EstimatorConfig

MEASUREMENT_MODES = ("direct", "coupled")


def default_snr_sweep() -> list[float]:
    return [float(s) for s in range(-20, 31, 5)]


@dataclass(frozen=True)
class CampaignConfig:
    slot: SlotConfig = field(default_factory=SlotConfig)
    # the Doppler search covers the prior draw with margin, inside the alias-free
    # window of the sparsest DMRS pattern (pilot spacing 9 symbols)
    estimator: EstimatorConfig = field(default_factory=lambda: EstimatorConfig(doppler_search=(-0.7, 0.7)))
    mcs_indices: tuple[int, ...] = (0, 1)
    dmrs_additional_positions: tuple[int, ...] = (1, 3)
    dmrs_seed: int = 0
    snr1_db: tuple[float, ...] = field(default_factory=lambda: tuple(default_snr_sweep()))
    los_to_target_power_ratio: float = 9.0
    trials: int = 2000
    # target delay as a fraction of T, Doppler in resolution cells 1/(L Ts)
    tau_range: tuple[float, float] = (0.05, 0.8)
    doppler_range: tuple[float, float] = (-0.3, 0.3)
    measurement_mode: str = "direct"
    seed: int = 0

    def __post_init__(self):
        for name in ("mcs_indices", "dmrs_additional_positions", "snr1_db", "tau_range", "doppler_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if self.trials <= 0:
            raise ConfigurationError("trials must be positive")
        if not self.snr1_db:
            raise ConfigurationError("SNR sweep is empty")
        if any(math.isnan(s) or s == -math.inf for s in self.snr1_db):
            raise ConfigurationError("SNR values must be finite dB or +inf")
        if not self.mcs_indices or any(m not in MCS_TABLE for m in self.mcs_indices):
            raise ConfigurationError(f"MCS indices must be drawn from {sorted(MCS_TABLE)}")
        if not self.dmrs_additional_positions or any(
                p not in DMRS_POSITIONS_TYPE_A for p in self.dmrs_additional_positions):
            raise ConfigurationError("DMRS additional positions must be drawn from 0..3")
        if self.slot.num_symbols != 14:
            raise ConfigurationError("campaigns require 14-symbol slots (DMRS table)")
        lo, hi = self.tau_range
        if not (0.0 <= lo <= hi < 1.0):
            raise ConfigurationError("tau_range must satisfy 0 <= lo <= hi < 1 (fraction of T)")
        lo, hi = self.doppler_range
        half = self.slot.num_symbols / 2
        if not (-half <= lo <= hi < half):
            raise ConfigurationError(f"doppler_range must lie within [-{half:g}, {half:g}) resolution cells")
        window = self.estimator.doppler_search
        if window is not None and not (window[0] <= lo and hi <= window[1]):
            raise ConfigurationError("estimator.doppler_search must contain doppler_range")
        if self.measurement_mode not in MEASUREMENT_MODES:
            raise ConfigurationError(f"measurement_mode must be one of {MEASUREMENT_MODES}")
        if not self.los_to_target_power_ratio > 0:
            raise ConfigurationError("los_to_target_power_ratio must be positive")

    @property
    def cases(self) -> list[tuple[int, int]]:
        """``(mcs, dmrs_additional_position)`` pairs in run order."""
        return [(m, p) for m in self.mcs_indices for p in self.dmrs_additional_positions]

    def replace(self, **changes) -> "CampaignConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        d["snr1_db"] = [_json_float(s) for s in self.snr1_db]
        return d


def _json_float(x: float):
    return "inf" if x == math.inf else x


def _build(cls, data: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f"[{section}]" if section else "top level"
        raise ConfigurationError(f"unknown configuration key(s) at {where}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid {section or 'campaign'} settings: {exc}") from exc


def config_from_dict(data: dict) -> CampaignConfig:
    data = dict(data)
    slot = _build(SlotConfig, data.pop("slot", {}) or {}, "slot")
    est_data = dict(data.pop("estimator", {}) or {})
    # TOML has no null: "full" selects the unrestricted Doppler search
    search = est_data.get("doppler_search", CampaignConfig().estimator.doppler_search)
    est_data["doppler_search"] = None if search is None or str(search).lower() == "full" else tuple(search)
    est = _build(EstimatorConfig, est_data, "estimator")
    if "snr1_db" in data:
        data["snr1_db"] = [math.inf if str(s).lower() == "inf" else float(s) for s in data["snr1_db"]]
    return _build(CampaignConfig, {**data, "slot": slot, "estimator": est}, "")


def load_config(path) -> CampaignConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(data)
