"""
Plots - Optional figures for sampled curves and radial Green's-function profiles.
"""

from pathlib import Path
from typing import Sequence

import matplotlib
matplotlib.use('Agg')  # Non-interactive backend
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402


def plot_curves(curves: Sequence[np.ndarray], path: Path, title: str = "") -> Path:
    """Draw complex polylines inside the unit circle and save the figure."""
    fig, ax = plt.subplots(figsize=(6, 6))
    theta = np.linspace(0, 2 * np.pi, 400)
    ax.plot(np.cos(theta), np.sin(theta), color='0.6', linewidth=0.8)
    for pts in curves:
        ax.plot(pts.real, pts.imag, linewidth=0.7)
    ax.plot([0], [0], 'k.', markersize=4)
    ax.set_aspect('equal')
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return path


def plot_radial_profile(edges: pd.DataFrame, bins: pd.DataFrame, path: Path, title: str = "") -> Path:
    """Scaled edge frequencies against |z| with G(z) on top, and the binned ratios."""
    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.5))
    r = np.hypot(edges['x'], edges['y'])
    order = np.argsort(r.to_numpy())
    left.scatter(r, edges['scaled'], s=2, alpha=0.3, label='(2n^2/c_n) P(edge)')
    left.plot(r.to_numpy()[order], edges['green'].to_numpy()[order], color='k', label='G(z)')
    left.set_xlabel('|z|')
    left.set_yscale('log')
    left.legend()
    left.grid(True, alpha=0.3)

    right.bar(bins['r'].astype(str), bins['ratio'])
    right.axhline(1.0, color='k', linewidth=0.8)
    right.set_xlabel('bin centre |z|')
    right.set_ylabel('ratio')
    right.grid(axis='y', alpha=0.3)

    fig.suptitle(title)
    fig.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return path
