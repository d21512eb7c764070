"""Figure rendering. Everything goes through the Agg backend and writes
PNGs with pinned metadata so repeat renders are byte-identical."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .snapshots import Snapshot, TooFewPoints, load_series, load_snapshot

_SAVE_KW = dict(dpi=110, metadata={"Software": "plotview"})


def render_heatmap(snapshot_path, out_image) -> Snapshot:
    """Field heatmap with colorbar, field name, and time stamp; returns the
    parsed snapshot for downstream checks."""
    snap = load_snapshot(snapshot_path)
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    if snap.kind == "scalar":
        im = ax.imshow(snap.values.T, origin="lower", extent=snap.extent,
                       aspect="auto", cmap="viridis")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    else:  # lattice density: two columns x, value
        ax.plot(snap.values[:, 0], snap.values[:, 1])
        ax.set_xlabel("x")
        ax.set_ylabel(snap.name)
    ax.set_title(f"{snap.name}   t = {snap.t:g}")
    fig.tight_layout()
    fig.savefig(out_image, **_SAVE_KW)
    plt.close(fig)
    return snap


def render_quiver(ux_path, uy_path, out_image) -> None:
    """Velocity arrows from the cell-centered component snapshots."""
    ux = load_snapshot(ux_path)
    uy = load_snapshot(uy_path)
    if ux.values.shape != uy.values.shape:
        raise ValueError("component snapshots disagree in shape")
    nx, ny = ux.values.shape
    lx, ly = float(ux.meta["lx"]), float(ux.meta["ly"])
    xc = (np.arange(nx) + 0.5) * lx / nx
    yc = (np.arange(ny) + 0.5) * ly / ny
    skip = max(1, nx // 24)
    fig, ax = plt.subplots(figsize=(5.0, 4.6))
    extra = {}
    if np.max(np.hypot(ux.values, uy.values)) == 0.0:
        extra["scale"] = 1.0  # autoscale divides by zero on a still field
    ax.quiver(xc[::skip], yc[::skip],
              ux.values[::skip, ::skip].T, uy.values[::skip, ::skip].T, **extra)
    ax.set_title(f"velocity   t = {ux.t:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(out_image, **_SAVE_KW)
    plt.close(fig)


def render_msd(msd_csv, out_image) -> float:
    """Log-log MSD with the least-squares slope annotated; returns the slope."""
    data = load_series(msd_csv, "t,msd")
    t, msd = data["t"], data["msd"]
    if t.size < 10:
        raise TooFewPoints(f"{msd_csv}: need >= 10 points for a slope fit, got {t.size}")
    if np.any(t <= 0.0) or np.any(msd <= 0.0):
        raise ValueError(f"{msd_csv}: log-log fit needs positive t and msd")
    slope, intercept = np.polyfit(np.log(t), np.log(msd), 1)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(t, msd, "o", label="measured")
    ax.loglog(t, np.exp(intercept) * t ** slope, "-", label=f"slope {slope:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("MSD")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_image, **_SAVE_KW)
    plt.close(fig)
    return float(slope)


def render_monitor(monitor_csv, out_image) -> None:
    """Raw and weighted norm trajectories from monitor.csv."""
    data = load_series(monitor_csv, "t,norm_n")
    t = data["t"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for key in ("norm_n", "norm_c", "norm_u", "weighted_n", "weighted_c", "weighted_u"):
        if key in data:
            style = "-" if key.startswith("norm") else "--"
            ax.plot(t, data[key], style, label=key)
    ax.set_xlabel("t")
    ax.set_yscale("log")
    ax.legend(fontsize=8, ncol=2)
    ax.set_title(os.path.basename(os.path.dirname(os.path.abspath(monitor_csv))))
    fig.tight_layout()
    fig.savefig(out_image, **_SAVE_KW)
    plt.close(fig)
