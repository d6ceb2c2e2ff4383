#!/usr/bin/env python3
"""Render figure analogues from the experiment harness' CSV tables.

Reads the fixed 10-column CSV schema produced by ``qrp-lab`` and draws one
figure per recipe.  Reference lines are recomputed here from the sweep
columns (never read from ``analytic_ref``), so the plot cross-checks the
simulator's own reference column; the two must agree to 1e-12.

Usage: plots/render.py --recipe <fig2..fig7> --csv <paths...> --out <path>
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from collections import defaultdict
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEMA = (
    "experiment",
    "n_a",
    "n_h",
    "t",
    "param",
    "estimate",
    "std_error",
    "n_samples",
    "analytic_ref",
    "seed",
)

RECIPES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")


class RenderError(Exception):
    pass


def variance_floor(n_a: int, n_h: int) -> float:
    """Saturated output variance 1 / (d_a * d_h^2)."""
    return 1.0 / (2**n_a * 2 ** (2 * n_h))


def variance_transient(t: int, n_a: int, n_h: int) -> float:
    """Transient term 2^(n_a + n_h) / (d_a^(t+1) * d_h^2)."""
    return 2 ** (n_a + n_h) / (2 ** (n_a * (t + 1)) * 2 ** (2 * n_h))


def memory_guide(t: int, n_a: int, n_h: int) -> float:
    """Memory-indicator guide 1 / (d_h * d_a^t)."""
    return 1.0 / (2**n_h * 2 ** (n_a * t))


def erasure_guide(t: int, q: float) -> float:
    """Per-step factor of the unital erasure bound."""
    return math.sqrt(2.0 * math.log(2.0) * q ** ((t - 1) / math.log(2.0)))


def recompute_reference(recipe: str, row: Dict) -> Optional[float]:
    """The recipe's reference value for one row; None when the recipe has none."""
    if recipe in ("fig2", "fig5", "fig7"):
        return variance_floor(row["n_a"], row["n_h"])
    if recipe in ("fig3", "fig6"):
        return memory_guide(row["t"], row["n_a"], row["n_h"])
    if recipe == "fig4":
        if row["param"] is None:
            raise RenderError("fig4 needs the noise coefficient in column param")
        return erasure_guide(row["t"], row["param"])
    return None


def load_rows(paths: List[str]) -> List[Dict]:
    rows: List[Dict] = []
    for path in paths:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh)
                header = reader.fieldnames or []
                for column in SCHEMA:
                    if column not in header:
                        raise RenderError(f"{path}: missing column {column!r}")
                for raw in reader:
                    rows.append(
                        {
                            "experiment": raw["experiment"],
                            "n_a": int(raw["n_a"]),
                            "n_h": int(raw["n_h"]),
                            "t": int(raw["t"]),
                            "param": float(raw["param"]) if raw["param"] else None,
                            "estimate": float(raw["estimate"]),
                            "std_error": float(raw["std_error"]),
                            "n_samples": int(raw["n_samples"]),
                            "analytic_ref": float(raw["analytic_ref"]) if raw["analytic_ref"] else None,
                            "seed": int(raw["seed"]),
                        }
                    )
        except OSError as exc:
            raise RenderError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise RenderError("no data rows in the given CSV files")
    return rows


def _group(rows: List[Dict], key) -> Dict:
    grouped = defaultdict(list)
    for row in rows:
        grouped[key(row)].append(row)
    for bucket in grouped.values():
        bucket.sort(key=lambda r: r["t"])
    return dict(sorted(grouped.items(), key=lambda kv: str(kv[0])))


def _plot_series_by_time(ax, rows: List[Dict], label_fn):
    for key, bucket in _group(rows, label_fn).items():
        ts = [r["t"] for r in bucket]
        ax.errorbar(
            ts,
            [r["estimate"] for r in bucket],
            yerr=[r["std_error"] for r in bucket],
            marker="o",
            capsize=2,
            label=str(key),
        )


def render_fig2(rows, ax):
    _plot_series_by_time(ax, rows, lambda r: f"n_a={r['n_a']}, n_h={r['n_h']}")
    for (n_a, n_h), bucket in _group(rows, lambda r: (r["n_a"], r["n_h"])).items():
        ts = [r["t"] for r in bucket]
        ax.hlines(
            variance_floor(n_a, n_h), min(ts), max(ts), linestyles="dashed", colors="gray"
        )
    ax.set_yscale("log")
    ax.set_xlabel("time step")
    ax.set_ylabel("output variance over reservoirs")
    ax.set_title("Variance saturation with dashed floors")


def render_fig7(rows, ax):
    _plot_series_by_time(ax, rows, lambda r: f"n_a={r['n_a']}, n_h={r['n_h']}")
    for (n_a, n_h), bucket in _group(rows, lambda r: (r["n_a"], r["n_h"])).items():
        ts = [r["t"] for r in bucket]
        pred = [variance_floor(n_a, n_h) + variance_transient(t, n_a, n_h) for t in ts]
        ax.plot(ts, pred, "k--", linewidth=1)
    ax.set_yscale("log")
    ax.set_xlabel("time step")
    ax.set_ylabel("output variance over reservoirs")
    ax.set_title("Variance with transient correction (dashed)")


def render_fig3(rows, ax):
    _plot_series_by_time(ax, rows, lambda r: f"n_a={r['n_a']}, n_h={r['n_h']}")
    for (n_a, n_h), bucket in _group(rows, lambda r: (r["n_a"], r["n_h"])).items():
        ts = [r["t"] for r in bucket]
        ax.plot(ts, [memory_guide(t, n_a, n_h) for t in ts], color="gray", linewidth=1)
    ax.set_yscale("log")
    ax.set_xlabel("elapsed steps")
    ax.set_ylabel("memory indicator")
    ax.set_title("Memory decay with guide lines")


def render_fig4(rows, ax):
    _plot_series_by_time(ax, rows, lambda r: f"q={r['param']}")
    for q, bucket in _group(rows, lambda r: r["param"]).items():
        ts = [r["t"] for r in bucket]
        ax.plot(ts, [erasure_guide(t, q) for t in ts], color="gray", linewidth=1)
    ax.set_yscale("log")
    ax.set_xlabel("time step")
    ax.set_ylabel("mean output deviation")
    ax.set_title("Noise-induced erasure with decay guides")


def render_fig5(rows, ax):
    t_star = max(r["t"] for r in rows)
    at_t = [r for r in rows if r["t"] == t_star]

    def label(row):
        if row["experiment"] == "layered" and row["param"] is not None:
            return f"L={int(row['param'])}"
        return "haar"

    for key, bucket in _group(at_t, label).items():
        bucket.sort(key=lambda r: r["n_h"])
        ax.errorbar(
            [r["n_h"] for r in bucket],
            [r["estimate"] for r in bucket],
            yerr=[r["std_error"] for r in bucket],
            marker="s",
            capsize=2,
            label=key,
        )
    floors = sorted({(r["n_h"], variance_floor(r["n_a"], r["n_h"])) for r in at_t})
    ax.plot([f[0] for f in floors], [f[1] for f in floors], "k--", linewidth=1)
    ax.set_yscale("log")
    ax.set_xlabel("hidden qubits")
    ax.set_ylabel(f"output variance at t={t_star}")
    ax.set_title("Brickwork depth vs full scrambling")


def render_fig6(rows, ax):
    _plot_series_by_time(ax, rows, lambda r: f"dt={r['param']}")
    for (n_a, n_h), bucket in _group(rows, lambda r: (r["n_a"], r["n_h"])).items():
        ts = sorted({r["t"] for r in bucket})
        ax.plot(ts, [memory_guide(t, n_a, n_h) for t in ts], color="gray", linewidth=1)
    ax.set_yscale("log")
    ax.set_xlabel("elapsed steps")
    ax.set_ylabel("memory indicator")
    ax.set_title("Chain evolution time vs memory decay")


RENDERERS = {
    "fig2": render_fig2,
    "fig3": render_fig3,
    "fig4": render_fig4,
    "fig5": render_fig5,
    "fig6": render_fig6,
    "fig7": render_fig7,
}


def render(recipe: str, csv_paths: List[str], out_path: str):
    if recipe not in RENDERERS:
        raise RenderError(f"unknown recipe {recipe!r}; choose from {', '.join(RECIPES)}")
    rows = load_rows(csv_paths)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=144)
    try:
        RENDERERS[recipe](rows, ax)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(out_path, metadata={"Software": "qrp-plots"})
    finally:
        plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--recipe", required=True, choices=RECIPES)
    parser.add_argument("--csv", required=True, nargs="+")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        render(args.recipe, args.csv, args.out)
    except RenderError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    print(f"render: wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
