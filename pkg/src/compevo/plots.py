"""SVG charts for an experiment output directory.

Output is deterministic: no timestamps and a fixed SVG id salt.
"""
from __future__ import annotations

import csv
import json
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bench import LABELS  # noqa: E402
from .objectives import read_front_csv  # noqa: E402

plt.rcParams["svg.hashsalt"] = "compevo"
plt.rcParams["svg.fonttype"] = "none"

_STEM = re.compile(r"^(?P<variant>.+)_rep(?P<rep>\d+)$")


@dataclass(frozen=True)
class Band:
    generations: np.ndarray
    low: np.ndarray
    median: np.ndarray
    high: np.ndarray


def band(series: list[list[float]]) -> Band:
    """Per-generation min, median and max across repetitions (truncated to the shortest run)."""
    if not series:
        raise ValueError("need at least one trace")
    n = min(len(s) for s in series)
    arr = np.array([s[:n] for s in series], dtype=float)
    return Band(np.arange(1, n + 1), arr.min(axis=0), np.median(arr, axis=0), arr.max(axis=0))


def read_traces(out_dir: Path) -> dict[str, dict[int, dict[str, list[float]]]]:
    traces: dict[str, dict[int, dict[str, list[float]]]] = defaultdict(dict)
    for path in sorted((out_dir / "traces").glob("*.csv")):
        m = _STEM.match(path.stem)
        if not m:
            continue
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        traces[m["variant"]][int(m["rep"])] = {
            "best_q": [float(r["best_q"]) for r in rows],
            "hv": [float(r["hv"]) for r in rows],
        }
    return dict(traces)


def _line_chart(traces, key: str, ylabel: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for variant, reps in traces.items():
        b = band([reps[r][key] for r in sorted(reps)])
        (line,) = ax.plot(b.generations, b.median, label=LABELS.get(variant, variant))
        ax.fill_between(b.generations, b.low, b.high, color=line.get_color(), alpha=0.2, linewidth=0)
    ax.set_xlabel("generation")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _best_rep(out_dir: Path, variant: str, reps) -> int:
    """Repetition shown in the scatter: highest final HV, lowest index on ties."""
    def hv(rep):
        final = json.loads((out_dir / "finals" / f"{variant}_rep{rep}.json").read_text())
        return final.get("hv") or 0.0
    return max(sorted(reps), key=lambda r: (hv(r), -r))


def pareto_points(out_dir: Path, variant: str, rep: int) -> list[tuple[float, ...]]:
    return [objs for objs, _ in read_front_csv(out_dir / "pareto" / f"{variant}_rep{rep}.csv")]


def _scatter(out_dir: Path, traces, path: Path) -> dict[str, int]:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    counts = {}
    for variant, reps in traces.items():
        rep = _best_rep(out_dir, variant, reps)
        raw = pareto_points(out_dir, variant, rep)
        pts = np.array(raw, dtype=float)[:, :2] if raw else np.zeros((0, 2))
        counts[variant] = len(pts)
        ax.scatter(pts[:, 1], pts[:, 0], label=f"{LABELS.get(variant, variant)} (rep {rep})", s=24)
    ax.set_xlabel("graph size")
    ax.set_ylabel("validation quality (minimised)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return counts


def render_plots(out_dir: str | Path) -> list[Path]:
    """Write quality.svg, hypervolume.svg and pareto.svg under ``out_dir/plots``."""
    out = Path(out_dir)
    traces = read_traces(out)
    if not traces:
        raise FileNotFoundError(f"no traces under {out / 'traces'}")
    plot_dir = out / "plots"
    plot_dir.mkdir(exist_ok=True)
    paths = [plot_dir / "quality.svg", plot_dir / "hypervolume.svg", plot_dir / "pareto.svg"]
    _line_chart(traces, "best_q", "best quality (ROC AUC or RMSE)", paths[0])
    _line_chart(traces, "hv", "hypervolume (normalised)", paths[1])
    _scatter(out, traces, paths[2])
    return paths
