#!/usr/bin/env python3
"""Summarize or plot a sweep CSV produced by the `simulate` binary.

The CSV schema is the contract: one row per (scheme, swept value, trial)
with a `sum_rate` column. This script aggregates the mean sum rate per
(scheme, value) cell, prints the table, and, when matplotlib is available
and --png is given, also renders one line per scheme.

Usage:
    scripts/plot_sweep.py results.csv
    scripts/plot_sweep.py results.csv --png sweep.png --log-y
"""

import argparse
import csv
import math
import sys
from collections import defaultdict


def load_means(path):
    cells = defaultdict(list)
    variable = None
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            variable = row["variable"]
            rate = float(row["sum_rate"])
            if math.isnan(rate):
                continue
            cells[(row["scheme"], float(row["value"]))].append(rate)
    means = {key: sum(rates) / len(rates) for key, rates in cells.items()}
    return variable, means


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_path", help="sweep CSV written by simulate --out")
    parser.add_argument("--png", help="optional output image path")
    parser.add_argument("--log-y", action="store_true", help="log-scale rate axis")
    args = parser.parse_args()

    variable, means = load_means(args.csv_path)
    if not means:
        sys.exit("no finite records in the CSV")
    schemes = sorted({scheme for scheme, _ in means})
    values = sorted({value for _, value in means})

    header = [variable] + schemes
    print("\t".join(header))
    for value in values:
        cells = [f"{means.get((scheme, value), float('nan')):.6e}" for scheme in schemes]
        print("\t".join([f"{value:g}"] + cells))

    if not args.png:
        return
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        sys.exit("matplotlib is not installed; rerun without --png")
    fig, axis = plt.subplots(figsize=(6, 4))
    for scheme in schemes:
        rates = [means.get((scheme, value), float("nan")) for value in values]
        axis.plot(values, rates, marker="o", label=scheme)
    axis.set_xlabel(variable)
    axis.set_ylabel("mean sum rate (bits/s/Hz)")
    if args.log_y:
        axis.set_yscale("log")
    axis.legend(fontsize=8)
    axis.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.png, dpi=150)
    print(f"wrote {args.png}")


if __name__ == "__main__":
    main()
