#!/usr/bin/env python3
"""Plot aggregate.csv from `teachsim run`: learner performance and discrepancy per cell."""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("aggregate_csv")
    ap.add_argument("-o", "--out", default="curves.png")
    args = ap.parse_args()

    df = pd.read_csv(args.aggregate_csv)
    conditions = sorted(df["condition"].unique())
    fig, axes = plt.subplots(2, len(conditions), figsize=(5 * len(conditions), 7), squeeze=False, sharex=True)
    for col, cond in enumerate(conditions):
        sub = df[df["condition"] == cond]
        for (teacher, feedback), cell in sub.groupby(["teacher", "feedback"]):
            label = f"{teacher} / {feedback}"
            for row, (mean, se) in enumerate([("mean_true_g", "se_true_g"), ("mean_discrepancy", "se_discrepancy")]):
                ax = axes[row][col]
                ax.plot(cell["iteration"], cell[mean], label=label)
                ax.fill_between(cell["iteration"], cell[mean] - cell[se], cell[mean] + cell[se], alpha=0.2)
        axes[0][col].set_title(cond)
        axes[0][col].set_ylabel("learner performance")
        axes[1][col].set_ylabel("teacher estimate - true")
        axes[1][col].axhline(0.0, color="grey", lw=0.5)
        axes[1][col].set_xlabel("demonstrations")
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
