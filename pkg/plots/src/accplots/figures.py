"""Render learning-curve and trajectory-comparison figures.

Consumes the experiment harness's published CSV formats only:

* learning curve: header ``episode,reward,steps,reward_ma100``
* trajectory:     header ``t,e,e_dot,v_i,u,a,reward``

Rendering is deterministic: fixed styles, a pinned SVG hash salt, and no
date metadata, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "accplots"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

TRAJECTORY_HEADER = ("t", "e", "e_dot", "v_i", "u", "a", "reward")
CURVE_COLUMNS = ("episode", "reward", "reward_ma100")

# rows of the comparison grid: (column name, axis label)
PANEL_ROWS = (
    ("e", "gap error e [m]"),
    ("v_i", "follower speed v_i [m/s]"),
    ("u", "command u [m/s^2]"),
    ("a", "acceleration a [m/s^2]"),
)


class MissingColumnError(ValueError):
    """A required CSV column is absent; the message names it."""


class TrajectoryFormatError(ValueError):
    """A trajectory CSV does not follow the published header contract."""


def _read_csv_columns(path: str) -> dict[str, np.ndarray]:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines:
        raise TrajectoryFormatError(f"{path}: empty file")
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise TrajectoryFormatError(f"{path}: line {i} has {len(row)} fields")
    data = np.array([[float(v) for v in row] for row in rows])
    return {name: data[:, j] for j, name in enumerate(header)}


def load_learning_curve(path: str) -> dict[str, np.ndarray]:
    """Columns of a learning-curve CSV; raises naming any missing column."""
    cols = _read_csv_columns(path)
    for name in CURVE_COLUMNS:
        if name not in cols:
            raise MissingColumnError(f"{path}: missing column {name!r}")
    return cols


def load_trajectory(path: str) -> dict[str, np.ndarray]:
    """Columns of a trajectory CSV, validated against the fixed header."""
    with open(path) as fh:
        header = tuple(fh.readline().rstrip("\n").split(","))
    if header != TRAJECTORY_HEADER:
        raise TrajectoryFormatError(
            f"{path}: header {','.join(header)!r} != {','.join(TRAJECTORY_HEADER)!r}"
        )
    return _read_csv_columns(path)


def _save(fig, out_path: str) -> None:
    if out_path.endswith(".svg"):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    else:
        fig.savefig(out_path)
    plt.close(fig)


def plot_learning_curve(csv_path: str, out_path: str) -> str:
    """Single panel: raw per-episode reward plus its moving average."""
    cols = load_learning_curve(csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(cols["episode"], cols["reward"], color="#b0c4de", lw=0.8, label="episode reward")
    ax.plot(cols["episode"], cols["reward_ma100"], color="#1f3d7a", lw=1.8, label="moving average (100)")
    ax.set_xlabel("episode")
    ax.set_ylabel("undiscounted episode reward")
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


@dataclass
class FigureColumn:
    """One scenario column: a title and its labeled trajectory CSVs."""

    title: str
    trajectories: list[tuple[str, str]]  # (csv path, line label)


@dataclass
class FigureSpec:
    """Grid layout: variable rows by scenario columns, one output image."""

    columns: list[FigureColumn]
    out: str

    def __post_init__(self) -> None:
        if not self.columns:
            raise ValueError("figure needs at least one column")
        for col in self.columns:
            if not col.trajectories:
                raise ValueError(f"column {col.title!r} has no trajectories")


def load_figure_spec(path: str) -> FigureSpec:
    with open(path) as fh:
        raw = json.load(fh)
    columns = [
        FigureColumn(
            title=c.get("title", f"column {i + 1}"),
            trajectories=[(t["path"], t.get("label", t["path"])) for t in c["trajectories"]],
        )
        for i, c in enumerate(raw["columns"])
    ]
    return FigureSpec(columns=columns, out=raw["out"])


_LINE_STYLES = (
    {"color": "#1f77b4", "lw": 1.6},
    {"color": "#222222", "lw": 1.4, "ls": "--"},
    {"color": "#d62728", "lw": 1.2, "ls": "-."},
    {"color": "#2ca02c", "lw": 1.2, "ls": ":"},
)


def plot_comparison(spec: FigureSpec) -> str:
    """Variable-by-scenario grid with one line per labeled trajectory.

    Every row shares its y-range across scenario columns so curves stay
    visually comparable.
    """
    ncols = len(spec.columns)
    loaded = [
        [(label, load_trajectory(path)) for path, label in col.trajectories]
        for col in spec.columns
    ]
    fig, axes = plt.subplots(
        len(PANEL_ROWS), ncols, figsize=(3.4 * ncols, 8.5), squeeze=False, sharex=True
    )
    for r, (var, ylabel) in enumerate(PANEL_ROWS):
        lo = min(t[var].min() for col in loaded for _, t in col)
        hi = max(t[var].max() for col in loaded for _, t in col)
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        for c, col in enumerate(loaded):
            ax = axes[r][c]
            for k, (label, traj) in enumerate(col):
                ax.plot(traj["t"], traj[var], label=label, **_LINE_STYLES[k % len(_LINE_STYLES)])
            ax.set_ylim(lo - pad, hi + pad)
            ax.grid(True, alpha=0.3)
            if c == 0:
                ax.set_ylabel(ylabel)
            if r == 0:
                ax.set_title(spec.columns[c].title)
                ax.legend(loc="upper right", fontsize=8)
            if r == len(PANEL_ROWS) - 1:
                ax.set_xlabel("time [s]")
    fig.tight_layout()
    _save(fig, spec.out)
    return spec.out
