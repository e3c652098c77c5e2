"""CSV / JSON emission of campaign results."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path

from .harness import CampaignResult, SnrPointResult

# One row per (MCS, DMRS, SNR) point; the order is part of the file format.
CSV_COLUMNS = [
    "mcs",
    "dmrs_add_pos",
    "snr1_db",
    "snrc_db",
    "rmse_range_m",
    "rmse_doppler_hz",
    "throughput_bits_per_slot",
    "throughput_analytic",
    "bler_round1",
    "bler_round2",
    "bler_round3",
    "bler_round4",
    "rho",
    "scenario2_fraction",
    "crlb_range_s1_m",
    "crlb_range_s2_m",
    "crlb_range_mix_m",
    "crlb_doppler_s1_hz",
    "crlb_doppler_s2_hz",
    "crlb_doppler_mix_hz",
    "trials",
    "slots",
    "decoded_tbs",
    "rmse_range_s1_m",
    "rmse_range_s2_m",
    "rmse_doppler_s1_hz",
    "rmse_doppler_s2_hz",
    "throughput_payload_bits_per_slot",
    "undetected_errors",
    "seed",
]

_INT_COLUMNS = {"mcs", "dmrs_add_pos", "trials", "slots", "decoded_tbs", "undetected_errors", "seed"}


def point_record(p: SnrPointResult) -> dict:
    d = {f.name: getattr(p, f.name) for f in dataclasses.fields(p) if f.name != "slot_stats"}
    d["bler_round"] = list(d["bler_round"])
    return d


def _fmt(value, integer: bool) -> str:
    if integer:
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.9g}"


def csv_text(result: CampaignResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in result.points:
        rec = point_record(p)
        for i, v in enumerate(rec.pop("bler_round"), start=1):
            rec[f"bler_round{i}"] = v
        rec["seed"] = result.config.seed
        writer.writerow([_fmt(rec[c], c in _INT_COLUMNS) for c in CSV_COLUMNS])
    return buf.getvalue()


def json_document(result: CampaignResult) -> dict:
    return {
        "seed": result.config.seed,
        "config": result.config.to_dict(),
        "columns": CSV_COLUMNS,
        "points": [point_record(p) for p in result.points],
    }


def json_text(result: CampaignResult) -> str:
    return json.dumps(json_document(result), indent=2, sort_keys=True) + "\n"


def emit_results(result: CampaignResult, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write ``results.csv`` and/or ``results.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "csv":
            path = out / "results.csv"
            path.write_text(csv_text(result))
        elif fmt == "json":
            path = out / "results.json"
            path.write_text(json_text(result))
        else:
            raise ValueError(f"unknown output format {fmt!r}")
        written.append(path)
    return written


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
