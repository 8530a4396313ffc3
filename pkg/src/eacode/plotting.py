"""Figure rendering for the CLI report outputs.

Every function takes already-computed data, writes one image file and
returns its path.  The Agg backend is selected so nothing needs a display.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CLASSICAL_OPTIMUM = 5 / 6

_RC = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _figure(width=6.0, height=None, ncols=1):
    golden = (math.sqrt(5) - 1) / 2
    height = height or width * golden
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, ncols, figsize=(width, height))
    return fig, axes


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_RC):
        fig.tight_layout()
        # Fixed metadata keeps repeated renders byte-stable.
        fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def plot_sweep(p, exact, simulated=None, sigma=None, path="sweep.png") -> Path:
    """Success probability against Werner visibility with the classical bound."""
    fig, ax = _figure()
    p = np.asarray(p)
    fine = np.linspace(0, 1, 201)
    ax.plot(fine, (2 + fine / math.sqrt(2)) / 3, color="0.6", lw=1, label="closed form")
    ax.plot(p, exact, "o", color="C0", ms=4, label="exact")
    if simulated is not None:
        ax.errorbar(p, simulated, yerr=None if sigma is None else 3 * np.asarray(sigma),
                    fmt="x", color="C3", ms=5, label=r"Monte Carlo ($\pm3\sigma$)")
    ax.axhline(CLASSICAL_OPTIMUM, color="k", ls="--", lw=1, label="classical optimum 5/6")
    ax.axvline(1 / math.sqrt(2), color="k", ls=":", lw=1)
    ax.set_xlabel("Werner parameter p")
    ax.set_ylabel("success probability")
    ax.set_xlim(0, 1)
    ax.legend(loc="upper left", frameon=False)
    return _save(fig, path)


def plot_counts(counts, path="counts.png", title=None) -> Path:
    """Bar chart of ``counts[q][q_hat]`` labelled input bit / decoded bit."""
    counts = np.asarray(counts)
    labels = [f"{q}/{qh}" for q in (0, 1) for qh in (0, 1)]
    values = [counts[q, qh] for q in (0, 1) for qh in (0, 1)]
    colors = ["C0" if q == qh else "C3" for q in (0, 1) for qh in (0, 1)]
    fig, ax = _figure(width=4.5)
    ax.bar(labels, values, color=colors)
    ax.set_xlabel("input bit / decoded bit")
    ax.set_ylabel("trials")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_traces(traces, path="seesaw.png") -> Path:
    fig, ax = _figure()
    for tr in traces:
        ax.plot(range(len(tr)), tr, lw=0.8, alpha=0.6)
    ax.axhline(CLASSICAL_OPTIMUM, color="k", ls="--", lw=1, label="5/6")
    ax.axhline((2 + 2 ** -0.5) / 3, color="k", ls=":", lw=1, label=r"$(2+2^{-1/2})/3$")
    ax.set_xlabel("half-step")
    ax.set_ylabel("success probability")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_density_matrix(matrix, path="rho.png") -> Path:
    """Real and imaginary parts of a 4x4 density matrix as heat maps."""
    m = np.asarray(matrix)
    ticks = ["HH", "HV", "VH", "VV"]
    fig, axes = _figure(width=8, height=3.6, ncols=2)
    for ax, part, name in zip(axes, (m.real, m.imag), ("Re", "Im")):
        im = ax.imshow(part, vmin=-0.5, vmax=0.5, cmap="RdBu_r")
        ax.set_xticks(range(4), ticks)
        ax.set_yticks(range(4), ticks)
        ax.set_title(rf"{name} $\rho$")
        for (i, j), val in np.ndenumerate(part):
            ax.text(j, i, f"{val:.2f}", ha="center", va="center", fontsize=8,
                    color="white" if abs(val) > 0.3 else "black")
        fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)


def plot_truth_table(table, ideal, input_labels, output_labels, path="truth_table.png") -> Path:
    """Measured channel frequencies next to their deviation from the ideal."""
    table = np.asarray(table)
    fig, axes = _figure(width=9, height=3.4, ncols=2)
    for ax, data, title, cmap, lim in (
            (axes[0], table, "measured", "Blues", (0, 1 / 3 * 1.2)),
            (axes[1], table - np.asarray(ideal), "deviation from ideal", "RdBu_r", None)):
        if lim is None:
            span = float(np.max(np.abs(data))) or 1e-3
            lim = (-span, span)
        im = ax.imshow(data, cmap=cmap, vmin=lim[0], vmax=lim[1])
        ax.set_xticks(range(len(output_labels)), output_labels, rotation=45)
        ax.set_yticks(range(len(input_labels)), input_labels)
        ax.set_xlabel("output (t,b)")
        ax.set_ylabel("input (b1,b2)")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)
