"""plotview: stateless figure generation for chemoflow output directories.

Reads only the published CSV formats (field snapshots, monitor.csv, MSD
series); never imports the simulator.
"""

from .snapshots import BadHeader, MissingFile, Snapshot, SnapshotSet, TooFewPoints
from .render import render_heatmap, render_monitor, render_msd, render_quiver

__all__ = [
    "BadHeader",
    "MissingFile",
    "Snapshot",
    "SnapshotSet",
    "TooFewPoints",
    "render_heatmap",
    "render_monitor",
    "render_msd",
    "render_quiver",
]

__version__ = "0.1.0"
