"""Figure rendering for the report path.

Each workflow drops a PNG next to its CSV output.  Figures are rendered
with the Agg backend and written without software metadata so that
reruns with the same configuration and seed produce byte-identical
files, matching the determinism contract of the CSV outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": None}, "bbox_inches": "tight"}


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    return fig, ax


def _finish(fig, path) -> None:
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_density_figure(path, grid, density, *, label: str = "simulated") -> None:
    fig, ax = _new_axes("transmittance", "probability density")
    ax.plot(grid, density, lw=1.5, label=label)
    ax.set_xlim(0.0, max(0.05, float(grid[np.nonzero(density > 1e-6)[0].max()] if np.any(density > 1e-6) else 1.0) * 1.15))
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False)
    _finish(fig, path)


def save_overlay_figure(path, grid, measured_density, fitted_density) -> None:
    fig, ax = _new_axes("transmittance", "probability density")
    ax.plot(grid, measured_density, lw=1.5, ls="--", label="measured")
    ax.plot(grid, fitted_density, lw=1.5, label="fitted model")
    support = np.nonzero((measured_density > 1e-6) | (fitted_density > 1e-6))[0]
    ax.set_xlim(0.0, float(grid[support.max()]) * 1.15 if support.size else 1.0)
    ax.set_ylim(bottom=0.0)
    ax.legend(frameon=False)
    _finish(fig, path)


def save_squeezing_figure(path, eta_min, output_db, *, input_db: float) -> None:
    fig, ax = _new_axes("postselection threshold", "transmitted squeezing (dB)")
    ax.plot(eta_min, output_db, lw=1.5, marker=".", ms=4)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.axhline(input_db, color="0.6", lw=0.8, ls=":")
    _finish(fig, path)


def save_region_figure(path, xi_grid, displacement_grid, w_values, boundary) -> None:
    fig, ax = _new_axes("squeezing parameter", "coherent displacement")
    entangled = w_values < 0.0
    if np.any(entangled):
        ax.contourf(
            xi_grid,
            displacement_grid,
            np.where(entangled, 1.0, 0.0).T,
            levels=[0.5, 1.5],
            colors=["#9ecae1"],
        )
    if boundary:
        xs = [p[0] for p in boundary]
        ys = [p[1] for p in boundary]
        ax.plot(xs, ys, color="#08519c", lw=1.5, label="Simon-test boundary")
        ax.legend(frameon=False, loc="upper right")
    ax.set_xlim(float(xi_grid[0]), float(xi_grid[-1]))
    ax.set_ylim(float(displacement_grid[0]), float(displacement_grid[-1]))
    _finish(fig, path)
