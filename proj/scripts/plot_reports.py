#!/usr/bin/env python3
"""Plot habsk outputs.

Give any mix of train, eval, score and compare output directories; every
report found is drawn to a PNG next to it (or under --out).

    python3 scripts/plot_reports.py runs/train runs/eval runs/score
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402


def read(path):
    return pd.read_csv(path, comment="#")


def learning_curve(path, out):
    df = read(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(df["step"], df["mean_reward"], color="tab:blue")
    ax.set_xlabel("environment step")
    ax.set_ylabel("mean episode reward", color="tab:blue")
    twin = ax.twinx()
    twin.plot(df["step"], df["twr50"], color="tab:orange")
    twin.set_ylabel("TWR50", color="tab:orange")
    twin.set_ylim(0, 1)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def heatmap(path, out):
    df = read(path).set_index("twr50_bin")
    values = df.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    fig, ax = plt.subplots(figsize=(8, 5))
    im = ax.imshow(np.ma.masked_invalid(values), cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(df.columns)))
    ax.set_xticklabels([c.replace("fs_", "").replace("_excluded", "*") for c in df.columns], rotation=45, ha="right")
    ax.set_yticks(range(len(df.index)))
    ax.set_yticklabels(df.index)
    ax.set_xlabel("forecast score bin (* excluded)")
    ax.set_ylabel("TWR50 bin")
    fig.colorbar(im, ax=ax, label="episodes")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def score_samples(path, out):
    df = read(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.linspace(0, 1, 21)
    ax.hist(df["primary"], bins=bins, alpha=0.6, label="primary")
    if "paired" in df:
        ax.hist(df["paired"], bins=bins, alpha=0.6, label="paired")
        ax.legend()
    ax.set_xlabel("forecast score")
    ax.set_ylabel("samples")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def model_diff(path, out):
    df = read(path)
    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=True)
    for label, g in df.groupby("label"):
        axes[0].errorbar(g["angle_mean_deg"], g["altitude_m"] / 1000, xerr=g["angle_sd_deg"], fmt="o-", label=label)
        axes[1].errorbar(g["magnitude_mean_ms"], g["altitude_m"] / 1000, xerr=g["magnitude_sd_ms"], fmt="o-")
    axes[0].set_xlabel("angular difference (deg)")
    axes[1].set_xlabel("magnitude difference (m/s)")
    axes[0].set_ylabel("altitude (km)")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


PLOTS = {
    "learning_curve.csv": learning_curve,
    "score_samples.csv": score_samples,
    "model_diff.csv": model_diff,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dirs", nargs="+", type=Path)
    ap.add_argument("--out", type=Path, help="write every PNG here instead of next to its CSV")
    args = ap.parse_args()
    made = 0
    for d in args.dirs:
        jobs = [(d / name, fn) for name, fn in PLOTS.items() if (d / name).exists()]
        jobs += [(p, heatmap) for p in sorted(d.glob("heatmap_*.csv")) if not p.stem.endswith("_raw")]
        for csv, fn in jobs:
            target = (args.out or csv.parent) / (csv.stem + ".png")
            target.parent.mkdir(parents=True, exist_ok=True)
            fn(csv, target)
            print(target)
            made += 1
    if made == 0:
        print("no habsk reports found", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
