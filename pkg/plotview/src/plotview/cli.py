"""``plotview <directory> [--only field|msd|monitor]``: render a PNG next
to every recognized CSV in a simulation output directory."""

from __future__ import annotations

import argparse
import os
import sys

from .render import render_heatmap, render_monitor, render_msd, render_quiver
from .snapshots import SnapshotSet


def process_directory(directory, only=None) -> list:
    """Render everything discovered under `directory`; returns the list of
    written image paths. Failures propagate: the round-trip contract is
    that every CSV the simulator emits renders without error."""
    snaps = SnapshotSet.discover(directory)
    written = []

    if only in (None, "field"):
        for step in snaps.steps():
            group = snaps.by_step[step]
            for name, path in group.items():
                out = path[:-4] + ".png"
                render_heatmap(path, out)
                written.append(out)
            if "ux" in group and "uy" in group:
                out = os.path.join(directory, f"quiver_{step:06d}.png")
                render_quiver(group["ux"], group["uy"], out)
                written.append(out)
        for path in snaps.extra:
            out = path[:-4] + ".png"
            render_heatmap(path, out)
            written.append(out)

    if only in (None, "msd") and snaps.msd_path:
        out = os.path.join(directory, "msd.png")
        render_msd(snaps.msd_path, out)
        written.append(out)

    if only in (None, "monitor") and snaps.monitor_path:
        out = os.path.join(directory, "monitor.png")
        render_monitor(snaps.monitor_path, out)
        written.append(out)

    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotview")
    parser.add_argument("directory")
    parser.add_argument("--only", choices=("field", "msd", "monitor"), default=None)
    args = parser.parse_args(argv)
    written = process_directory(args.directory, only=args.only)
    for path in written:
        print(path)
    if not written:
        print("nothing to render", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
