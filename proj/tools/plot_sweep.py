#!/usr/bin/env python3
"""Plot the per-scheme mean curves of a sweep.csv.

    python3 tools/plot_sweep.py out/sweep.csv -o out/plots
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

PANELS = [
    ("delivered", "orders delivered"),
    ("score_sum", "score sum"),
    ("agv_busy", "AGV busy ratio"),
    ("staff_busy", "staff busy ratio"),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", type=Path)
    ap.add_argument("-o", "--out", type=Path, default=Path("."))
    args = ap.parse_args()

    df = pd.read_csv(args.csv, dtype={"seed": str})
    means = df[df["seed"] == "mean"]
    if means.empty:
        means = df.groupby(["scheme", "n_uavs"], as_index=False).mean(numeric_only=True)

    args.out.mkdir(parents=True, exist_ok=True)
    for name, label in PANELS:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for scheme, g in means.groupby("scheme"):
            g = g.sort_values("n_uavs")
            ax.plot(g["n_uavs"], g[name], marker="o", label=scheme)
        ax.set_xlabel("UAVs")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.out / f"{name}.png", dpi=120)
        plt.close(fig)
        print(args.out / f"{name}.png")


if __name__ == "__main__":
    main()
