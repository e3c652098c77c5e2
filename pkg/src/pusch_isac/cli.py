"""``isac`` command line: sim, crlb, geometry, throughput.

Exit codes: 0 success, 2 configuration / input error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from . import bounds
from .config import CampaignConfig, load_config
from .errors import ConfigurationError, GeometryError
from .grid import DmrsConfig, SlotConfig, generate_dmrs
from .harq_link import mcs_entry, tbs_compute

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_bler(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"--bler expects four comma-separated numbers, got {text!r}") from None
    if len(values) != 4:
        raise ConfigurationError(f"--bler expects four values, got {len(values)}")
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ConfigurationError("--bler values must lie in [0, 1]")
    return values


def _config(path) -> CampaignConfig:
    return load_config(path) if path else CampaignConfig()


def cmd_sim(args) -> int:
    from .harness import run_campaign
    from .report import emit_results

    cfg = _config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.trials is not None:
        cfg = cfg.replace(trials=args.trials)
    result = run_campaign(cfg, workers=args.workers, keep_slots=False)
    paths = emit_results(result, args.out)
    if not args.no_plots:
        from .plotting import render_figures
        paths += render_figures(result, args.out)
    for p in paths:
        print(p)
    return 0


def cmd_crlb(args) -> int:
    from .harness import run_crlb
    from .report import load_json

    cfg = _config(args.config)
    bler = _parse_bler(args.bler) if args.bler else None
    campaign = None
    if args.from_campaign:
        try:
            campaign = load_json(args.from_campaign)
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read campaign file {args.from_campaign}: {exc}") from exc
    rows = run_crlb(cfg, bler=bler, campaign=campaign)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for r in rows:
            writer.writerow([f"{v:.9g}" if isinstance(v, float) else v for v in r.values()])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_geometry(args) -> int:
    from .harness import run_geometry

    report = run_geometry(args.d0, args.dtau, args.theta, args.speed, args.fc)
    print(json.dumps(report, indent=2))
    return 0


def cmd_throughput(args) -> int:
    P = _parse_bler(args.bler)
    mcs = mcs_entry(args.mcs)
    slot = SlotConfig()
    pilots = generate_dmrs(DmrsConfig(args.dmrs_add_pos), slot)
    n_d = pilots.num_data
    report = {
        "mcs": mcs.index,
        "code_rate": mcs.code_rate,
        "modulation_order": mcs.modulation_order,
        "dmrs_add_pos": args.dmrs_add_pos,
        "num_data_res": n_d,
        "tbs_bits": tbs_compute(n_d, mcs),
        "expected_rounds": bounds.expected_rounds(P),
        "rho": bounds.rho(P),
        "throughput_bits_per_slot": bounds.throughput_analytic(P, n_d, mcs),
    }
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="run a Monte-Carlo campaign")
    p.add_argument("--config", help="TOML campaign file (defaults if omitted)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trials", type=int, help="override trials per SNR point")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("crlb", help="sensing lower bounds across the SNR sweep")
    p.add_argument("--config")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--bler", help="per-round error probabilities p1,p2,p3,p4")
    g.add_argument("--from-campaign", help="results.json of a previous campaign")
    p.add_argument("--out", help="CSV file (stdout if omitted)")
    p.set_defaults(func=cmd_crlb)

    p = sub.add_parser("geometry", help="bistatic ellipse localization")
    p.add_argument("--d0", type=float, required=True, help="gNB-UE baseline [m]")
    p.add_argument("--dtau", type=float, required=True, help="excess delay of the target path [s]")
    p.add_argument("--theta", type=float, required=True, help="angle of arrival at the gNB [rad]")
    p.add_argument("--speed", type=float, help="target speed [m/s] for the Doppler shift")
    p.add_argument("--fc", type=float, default=3.5e9, help="carrier frequency [Hz]")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("throughput", help="analytic HARQ throughput")
    p.add_argument("--bler", required=True, help="p1,p2,p3,p4")
    p.add_argument("--mcs", type=int, required=True)
    p.add_argument("--dmrs-add-pos", type=int, required=True)
    p.set_defaults(func=cmd_throughput)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, GeometryError) as exc:
        print(f"isac: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"isac: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
