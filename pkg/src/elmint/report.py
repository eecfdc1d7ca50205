"""Figure rendering for run outputs.

Figures are a convenience layer over the CSV/snapshot contract: every render
function takes the already-written data and drops a PNG next to it.
"""

from __future__ import annotations

import os

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path


def render_energy(times, rel_err, out_dir, title="relative energy error"):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    t = np.asarray(times)[1:]
    e = np.asarray(rel_err)[1:]
    mask = e > 0
    if np.any(mask):
        ax.semilogy(t[mask], e[mask], lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("|E - E0| / |E0|")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _save(fig, out_dir, "energy.png")


def render_l2(times, values, out_dir):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(times, values, lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("relative L2 error")
    ax.grid(True, alpha=0.3)
    return _save(fig, out_dir, "l2.png")


def render_state(state, out_dir, name="state.png"):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if state.grid.n_space == 1:
        ax.plot(state.grid.axes[0], state.values[:, 0, 0], lw=1.2)
        ax.set_xlabel("x")
        ax.set_ylabel("q")
    elif state.grid.n_space == 2:
        im = ax.imshow(
            state.values[:, :, 0, 0].T,
            origin="lower",
            extent=[
                state.grid.axes[0][0], state.grid.axes[0][-1],
                state.grid.axes[1][0], state.grid.axes[1][-1],
            ],
            aspect="auto",
            cmap="RdBu_r",
        )
        fig.colorbar(im, ax=ax, label="q")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:
        ax.axhline(0, color="k", lw=0.5)
        ax.plot(state.values[0], "o")
        ax.set_ylabel("q components")
    ax.set_title(f"t = {state.t:g}")
    return _save(fig, out_dir, name)


def render_loss(losses, out_dir):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.semilogy(np.maximum(np.asarray(losses), 1e-30), lw=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.grid(True, alpha=0.3)
    return _save(fig, out_dir, "loss.png")
