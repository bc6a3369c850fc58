"""Loss-curve rendering for trace CSVs. Headless backend, SVG out."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ApolloOptError
from .runner import CSV_HEADER

__all__ = ["load_trace", "plot_traces"]


def load_trace(path: str) -> dict:
    """Trace CSV back to columns of floats (steps as ints)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ApolloOptError(f"cannot read trace {path}: {exc}") from None
    if not lines or lines[0] != CSV_HEADER:
        raise ApolloOptError(
            f"{path} does not look like a trace: expected header {CSV_HEADER!r}"
        )
    cols = {name: [] for name in CSV_HEADER.split(",")}
    names = CSV_HEADER.split(",")
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(names):
            raise ApolloOptError(f"{path}: malformed row {ln!r}")
        for name, part in zip(names, parts):
            cols[name].append(int(part) if name == "step" else float(part))
    return cols


def plot_traces(paths: list, out_path: str, logy: bool = True, title: str = None) -> str:
    """One figure, one loss curve per trace file. Returns out_path."""
    if not paths:
        raise ApolloOptError("no trace files given")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for path in paths:
        cols = load_trace(path)
        label = os.path.splitext(os.path.basename(path))[0]
        ax.plot(cols["step"], cols["loss"], label=label, linewidth=1.2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path
