"""Render explanation JSON files written by ``usast explain``.

A local file becomes one panel per dimension: the light curve with error bars
and the top windows shaded. A global file becomes a grid of the most
important subsequences, titled with class, dimension and feature type.

    python3 scripts/plot_explanations.py out/explanation_local_box-0003.json -o local.png
"""

from __future__ import annotations

import argparse
import json
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

COLORS = ("tab:red", "tab:orange", "tab:green", "tab:purple", "tab:brown")


def plot_local(doc, path):
    dims = list(doc["series"])
    fig, axes = plt.subplots(len(dims), 1, figsize=(8, 2.2 * len(dims)), sharex=True, squeeze=False)
    for ax, dim in zip(axes[:, 0], dims):
        pts = doc["series"][dim]
        ax.errorbar(range(len(pts)), [p[0] for p in pts], yerr=[p[1] for p in pts], fmt=".", ms=3, lw=0.5, color="k")
        for e, color in zip(doc["entries"], COLORS):
            if e["dimension"] == dim:
                ax.axvspan(e["window_start"], e["window_start"] + e["window_length"] - 1, alpha=0.25, color=color,
                           label=f"#{e['rank']} {e['type']} ({e['contribution']:+.3f})")
        ax.set_ylabel(f"dim {dim}")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7, loc="upper right")
    axes[0, 0].set_title(f"{doc['instance_id']}: predicted {doc['predicted_class']} (p={doc['probability']:.2f})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def plot_global(doc, path):
    entries = doc["entries"]
    cols = min(5, len(entries)) or 1
    rows = -(-len(entries) // cols) or 1
    fig, axes = plt.subplots(rows, cols, figsize=(2.6 * cols, 2.0 * rows), squeeze=False)
    for ax in axes.flat:
        ax.axis("off")
    for ax, e in zip(axes.flat, entries):
        ax.axis("on")
        v = [p[0] for p in e["points"]]
        u = [p[1] for p in e["points"]]
        ax.plot(v, color="k", lw=1)
        ax.fill_between(range(len(v)), [a - b for a, b in zip(v, u)], [a + b for a, b in zip(v, u)], alpha=0.3)
        ax.set_title(f"#{e['rank']} class {e['class']} dim {e['dimension']}\n{e['type']} {e['importance']:.3f}",
                     fontsize=7)
        ax.tick_params(labelsize=6)
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("explanation", help="explanation_global.json or explanation_local_<id>.json")
    p.add_argument("-o", "--output", required=True, help="image path (png, pdf, svg)")
    args = p.parse_args(argv)
    with open(args.explanation) as fh:
        doc = json.load(fh)
    kind = doc.get("schema", "")
    if kind.endswith("global"):
        plot_global(doc, args.output)
    elif kind.endswith("local"):
        plot_local(doc, args.output)
    else:
        p.error(f"{args.explanation}: not an explanation file")
    return 0


if __name__ == "__main__":
    sys.exit(main())
