"""Figure rendering for report outputs.

All plots use the object-oriented matplotlib API with the Agg canvas, so no
global backend state is touched and the emitted PNG bytes are deterministic
for a given matplotlib version (the CLI relies on byte-identical reruns).
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

_DPI = 120


def _new_figure(width=6.0, height=4.5):
    figure = Figure(figsize=(width, height))
    FigureCanvasAgg(figure)
    return figure


def _save(figure, path):
    figure.savefig(path, dpi=_DPI, format="png")


def plot_constellation(constellation, path, title=None):
    """Scatter plot of a labeled alphabet, equal aspect, unit-power circle."""
    figure = _new_figure(5.5, 5.5)
    axes = figure.add_subplot(1, 1, 1)
    points = constellation.points
    axes.scatter(points.real, points.imag, s=14, color="#1f77b4", zorder=3)
    theta = np.linspace(0.0, 2.0 * np.pi, 256)
    axes.plot(np.cos(theta), np.sin(theta), color="0.8", linewidth=0.8, zorder=1)
    axes.axhline(0.0, color="0.85", linewidth=0.8, zorder=1)
    axes.axvline(0.0, color="0.85", linewidth=0.8, zorder=1)
    if constellation.size <= 16:
        for label, point in enumerate(points):
            axes.annotate(
                format(label, f"0{constellation.bits_per_symbol}b"),
                (point.real, point.imag),
                textcoords="offset points", xytext=(4, 4), fontsize=8,
            )
    limit = 1.1 * float(np.abs(points).max())
    axes.set_xlim(-limit, limit)
    axes.set_ylim(-limit, limit)
    axes.set_aspect("equal")
    axes.set_xlabel("in-phase")
    axes.set_ylabel("quadrature")
    axes.set_title(title or f"{constellation.size}-point alphabet")
    figure.tight_layout()
    _save(figure, path)


def plot_capacity_curves(curves, path, title="BICM capacity", shannon=True):
    """Capacity-versus-SNR curves.

    Args:
        curves: Mapping of legend label to ``(snr_db, bits)`` array pairs.
        path: Output PNG path.
        title: Plot title.
        shannon: Also draw the Shannon bound over the union of the grids.
    """
    figure = _new_figure()
    axes = figure.add_subplot(1, 1, 1)
    if shannon and curves:
        grid = np.unique(np.concatenate([np.asarray(pair[0], dtype=float)
                                         for pair in curves.values()]))
        if grid.size:
            bound = np.log2(1.0 + 10.0 ** (grid / 10.0))
            axes.plot(grid, bound, color="0.4", linestyle="--", label="Shannon")
    for label, (snr_db, bits) in curves.items():
        axes.plot(snr_db, bits, marker="o", markersize=3, label=label)
    axes.set_xlabel("SNR (dB)")
    axes.set_ylabel("capacity (bits/symbol)")
    axes.set_title(title)
    axes.grid(True, alpha=0.3)
    axes.legend()
    figure.tight_layout()
    _save(figure, path)


def plot_shortfall_curves(curves, path, title="Shortfall from Shannon"):
    """Shortfall-versus-SNR curves (bits below the Shannon bound)."""
    figure = _new_figure()
    axes = figure.add_subplot(1, 1, 1)
    for label, (snr_db, shortfall) in curves.items():
        axes.plot(snr_db, shortfall, marker="o", markersize=3, label=label)
    axes.set_xlabel("SNR (dB)")
    axes.set_ylabel("shortfall (bits)")
    axes.set_title(title)
    axes.grid(True, alpha=0.3)
    axes.legend()
    figure.tight_layout()
    _save(figure, path)


def plot_ber_curves(curves, path, title="Post-FEC BER", threshold=None):
    """Semi-log BER curves with an optional threshold line.

    Args:
        curves: Mapping of legend label to ``(snr_db, ber)`` array pairs.
        path: Output PNG path.
        title: Plot title.
        threshold: Optional horizontal reference BER.
    """
    figure = _new_figure()
    axes = figure.add_subplot(1, 1, 1)
    floor = 1e-8
    for label, (snr_db, ber) in curves.items():
        ber = np.maximum(np.asarray(ber, dtype=float), floor)
        axes.semilogy(snr_db, ber, marker="o", markersize=3, label=label)
    if threshold is not None:
        axes.axhline(threshold, color="0.4", linestyle="--", linewidth=0.8,
                     label=f"threshold {threshold:g}")
    axes.set_xlabel("SNR (dB)")
    axes.set_ylabel("bit error rate")
    axes.set_title(title)
    axes.grid(True, which="both", alpha=0.3)
    axes.legend()
    figure.tight_layout()
    _save(figure, path)


def plot_design_trace(trace, path, title="Design iterations", channel_names=None):
    """Average-waterfall trajectory of a multichannel design run.

    Args:
        trace: A :class:`~nucshape.multichan.DesignTrace`.
        path: Output PNG path.
        title: Plot title.
        channel_names: Optional legend labels matching the problem's channel
            order; defaults to positional names.
    """
    figure = _new_figure()
    axes = figure.add_subplot(1, 1, 1)
    indices = [record.index for record in trace.iterations]
    averages = [record.average_db for record in trace.iterations]
    count = len(trace.iterations[0].waterfalls_db) if trace.iterations else 0
    names = list(channel_names) if channel_names else [
        f"channel {i}" for i in range(count)]
    axes.plot(indices, averages, marker="o", label="average")
    for position, name in enumerate(names):
        axes.plot(indices,
                  [record.waterfalls_db[position] for record in trace.iterations],
                  marker=".", linestyle=":", label=name)
    axes.set_xlabel("iteration")
    axes.set_ylabel("waterfall SNR (dB)")
    axes.set_title(title)
    axes.grid(True, alpha=0.3)
    axes.legend()
    figure.tight_layout()
    _save(figure, path)
