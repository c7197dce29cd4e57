#!/usr/bin/env python3
"""Render figures from the simulator's CSV artifacts.

Consumes only the documented CSV schemas (ber-sweep, pattern-scan,
car-scan); it never imports the simulator.  Output is deterministic for
identical inputs: no timestamps are embedded and the library versions go
into the image metadata.

Usage:
    plot.py --kind {patterns,car,ber} --in CSV [--in CSV ...] --out PNG
            [--avg-only]
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = {
    "ber": ("snr_db", "detector", "signal", "bit_errors", "bits", "ber"),
    "patterns": ("theta_deg", "beam_id", "gain_db"),
    "car": ("theta_deg", "objective"),
}


class SchemaError(ValueError):
    """Input CSV does not match the documented schema for the kind."""


def read_rows(paths, kind):
    """Read and concatenate CSV files, skipping '#' comment lines."""
    required = REQUIRED_COLUMNS[kind]
    rows = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(
                line for line in fh if not line.startswith("#")
            )
            header = reader.fieldnames or []
            for column in required:
                if column not in header:
                    raise SchemaError(
                        f"{path}: missing column {column!r} "
                        f"(need {', '.join(required)})"
                    )
            rows.extend(reader)
    if not rows:
        raise SchemaError(f"no data rows in {', '.join(str(p) for p in paths)}")
    return rows


def render_ber(ax, rows, avg_only=False):
    """One trace per (detector, signal); log BER axis, linear dB axis."""
    series = {}
    for row in rows:
        if avg_only and row["signal"] != "avg":
            continue
        key = (row["detector"], row["signal"])
        series.setdefault(key, []).append((float(row["snr_db"]), float(row["ber"])))
    for (detector, signal), points in sorted(series.items()):
        points.sort()
        snr = [p[0] for p in points]
        ber = [max(p[1], 1e-12) for p in points]  # keep zeros on the log axis
        ax.semilogy(snr, ber, marker="o", label=f"{detector} {signal}")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend(fontsize=8)


def render_patterns(ax, rows):
    """Gain-vs-angle curve per beam id."""
    series = {}
    for row in rows:
        series.setdefault(row["beam_id"], []).append(
            (float(row["theta_deg"]), float(row["gain_db"]))
        )
    for beam_id, points in sorted(series.items()):
        points.sort()
        ax.plot([p[0] for p in points], [p[1] for p in points], label=beam_id)
    ax.set_xlabel("theta (deg)")
    ax.set_ylabel("gain (dB)")
    ax.set_ylim(bottom=-60.0)
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)


def render_car(ax, rows):
    """Objective-vs-angle curve with the grid maximum annotated."""
    points = sorted(
        (float(row["theta_deg"]), float(row["objective"])) for row in rows
    )
    theta = np.array([p[0] for p in points])
    objective = np.array([p[1] for p in points])
    ax.plot(theta, objective)
    best = int(np.argmax(objective))
    ax.annotate(
        f"max at {theta[best]:+.2f} deg",
        xy=(theta[best], objective[best]),
        xytext=(0.55, 0.1),
        textcoords="axes fraction",
        arrowprops={"arrowstyle": "->"},
    )
    ax.set_xlabel("steer angle (deg)")
    ax.set_ylabel("coefficient gap")
    ax.grid(True, alpha=0.4)


def render(kind, in_paths, out_path, avg_only=False):
    rows = read_rows(in_paths, kind)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if kind == "ber":
        render_ber(ax, rows, avg_only=avg_only)
    elif kind == "patterns":
        render_patterns(ax, rows)
    else:
        render_car(ax, rows)
    fig.tight_layout()
    fig.savefig(
        out_path,
        dpi=130,
        metadata={
            "Software": f"sicrx-plots matplotlib {matplotlib.__version__} "
            f"numpy {np.__version__}"
        },
    )
    plt.close(fig)
    return fig, ax


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot.py", description="Render simulator CSV artifacts."
    )
    parser.add_argument("--kind", required=True, choices=sorted(REQUIRED_COLUMNS))
    parser.add_argument(
        "--in", dest="inputs", action="append", required=True, metavar="CSV"
    )
    parser.add_argument("--out", required=True, metavar="PNG")
    parser.add_argument(
        "--avg-only", action="store_true",
        help="ber kind: plot only the per-detector average traces",
    )
    args = parser.parse_args(argv)
    try:
        render(args.kind, [Path(p) for p in args.inputs], Path(args.out),
               avg_only=args.avg_only)
    except (SchemaError, OSError) as exc:
        print(f"plot.py: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
