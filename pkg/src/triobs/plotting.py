"""Static figures written next to the CLI's CSV and JSON outputs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_talpha(rows: list[dict], path) -> Path:
    """t_α and both horizon formulas against α."""
    alpha = np.array([r["alpha"] for r in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.plot(alpha, [r["t_alpha"] for r in rows], "o-", label=r"$t_\alpha$")
    ax1.plot(alpha, [r["m_alpha"] for r in rows], "s--", label=r"$m_\alpha$")
    ax1.set_xlabel(r"$\alpha$")
    ax1.set_yscale("log")
    ax1.legend()
    ax2.plot(alpha, [r["T_alpha_derived"] for r in rows], "o-", label="derived")
    ax2.plot(alpha, [r["T_alpha_paper"] for r in rows], "x:", label="printed formula")
    ax2.set_xlabel(r"$\alpha$")
    ax2.set_ylabel("observation time")
    ax2.set_yscale("log")
    ax2.legend()
    return _save(fig, path)


def plot_margins(energies, observed, c, path) -> Path:
    """Observed energy against initial energy with the line O = c·E."""
    E = np.asarray(energies, dtype=float)
    O = np.asarray(observed, dtype=float)
    fig, ax = plt.subplots(figsize=(4.8, 3.8))
    ax.scatter(E, O, s=12, label="states")
    if len(E):
        x = np.linspace(0.0, E.max() * 1.05, 2)
        ax.plot(x, c * x, "r-", label=f"c = {c:.3g}")
    ax.set_xlabel("initial energy")
    ax.set_ylabel("observed energy")
    ax.legend()
    return _save(fig, path)


def save_png(image: np.ndarray, path) -> Path:
    """Write an 8-bit grayscale array as PNG."""
    plt.imsave(Path(path), image, cmap="gray", vmin=0, vmax=255)
    return Path(path)
