"""Static figures of a campaign: sensing RMSE vs. bound, throughput and BLER."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import CampaignResult  # noqa: E402

MARKERS = ("o", "s", "^", "D", "v", "P")


def configure_plt(fontsize=10):
    plt.rcParams.update({
        "axes.labelsize": fontsize,
        "font.size": fontsize,
        "legend.fontsize": fontsize - 2,
        "xtick.labelsize": fontsize - 1,
        "ytick.labelsize": fontsize - 1,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "figure.figsize": (5.5, 4.0),
        # keep PNGs reproducible
        "svg.hashsalt": "pusch-isac",
    })


def _series(result: CampaignResult):
    for i, (mcs, pos) in enumerate(result.config.cases):
        pts = result.select(mcs, pos)
        yield i, f"MCS {mcs}, DMRS add. pos {pos}", pts


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_sensing(result: CampaignResult, quantity: str, out_path) -> Path:
    """RMSE with the HARQ-mixed CRLB for ``quantity`` in {"range", "doppler"}."""
    col, bound, unit = {
        "range": ("rmse_range_m", "crlb_range_mix_m", "m"),
        "doppler": ("rmse_doppler_hz", "crlb_doppler_mix_hz", "Hz"),
    }[quantity]
    fig, ax = plt.subplots()
    for i, label, pts in _series(result):
        x = [p.snr1_db for p in pts]
        line, = ax.semilogy(x, [getattr(p, col) for p in pts], marker=MARKERS[i % len(MARKERS)], label=label)
        ax.semilogy(x, [getattr(p, bound) for p in pts], ls="--", color=line.get_color(), lw=1)
    ax.set_xlabel(r"target-path SNR$_1$ [dB]")
    ax.set_ylabel(f"{quantity} RMSE [{unit}]")
    ax.legend(title="dashed: HARQ-mixed CRLB")
    return _save(fig, Path(out_path))


def plot_throughput(result: CampaignResult, out_path) -> Path:
    fig, ax = plt.subplots()
    for i, label, pts in _series(result):
        x = [p.snrc_db for p in pts]
        line, = ax.plot(x, [p.throughput_bits_per_slot for p in pts], marker=MARKERS[i % len(MARKERS)], label=label)
        ax.plot(x, [p.throughput_analytic for p in pts], ls=":", color=line.get_color(), lw=1)
    ax.set_xlabel(r"communication SNR$_c$ [dB]")
    ax.set_ylabel("throughput [bits/slot]")
    ax.legend(title="dotted: analytic HARQ model")
    return _save(fig, Path(out_path))


def plot_bler(result: CampaignResult, out_path) -> Path:
    fig, ax = plt.subplots()
    for i, label, pts in _series(result):
        x = [p.snrc_db for p in pts]
        y = [max(p.bler_round[0], 1e-4) for p in pts]
        ax.semilogy(x, y, marker=MARKERS[i % len(MARKERS)], label=label)
    ax.set_xlabel(r"communication SNR$_c$ [dB]")
    ax.set_ylabel("first-round BLER")
    ax.set_ylim(1e-4, 1.5)
    ax.legend()
    return _save(fig, Path(out_path))


def render_figures(result: CampaignResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    configure_plt()
    return [
        plot_sensing(result, "range", out / "rmse_range.png"),
        plot_sensing(result, "doppler", out / "rmse_doppler.png"),
        plot_throughput(result, out / "throughput.png"),
        plot_bler(result, out / "bler.png"),
    ]
