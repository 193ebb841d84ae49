"""Figures for sweep reports (PRR and delay against packet arrival interval)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

LABELS = {"lpl": "LPL baseline", "scosens": "S-CoSenS"}
COLORS = {"lpl": "tab:orange", "scosens": "tab:blue"}

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "figure.figsize": (5.0, 3.4),
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _series(result, metric, scale=1.0):
    pais = result.pais()
    out = {}
    for proto in result.protocols():
        means, stds, xs = [], [], []
        for pai in pais:
            cell = result.cells.get((proto, pai))
            if cell is None:
                continue
            mean, std = cell.stat(metric)
            if mean is None:
                continue
            xs.append(pai)
            means.append(mean * scale)
            stds.append(std * scale)
        out[proto] = (xs, means, stds)
    return out


def _plot(result, metric, path, ylabel, scale=1.0, logy=False) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for proto, (xs, means, stds) in _series(result, metric, scale).items():
            ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3,
                        color=COLORS.get(proto), label=LABELS.get(proto, proto))
        ax.set_xlabel("packet arrival interval (ms)")
        ax.set_ylabel(ylabel)
        ax.invert_xaxis()
        if logy:
            ax.set_yscale("log")
        ax.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return Path(path)


def plot_prr(result, path) -> Path:
    return _plot(result, "prr", path, "PRR (%)", scale=100.0)


def plot_delay(result, path) -> Path:
    return _plot(result, "delay_mean_ms", path, "mean end-to-end delay (ms)", logy=True)
