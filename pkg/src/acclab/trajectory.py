"""Episode time series and its CSV round-trip.

A trajectory has exactly one row per control step.  Row ``t`` records the
pre-step state (error, error rate, follower speed), the command applied at
``t``, the acceleration active during the step, and the clipped reward
received for it.  The fixed CSV header is ``t,e,e_dot,v_i,u,a,reward``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CSV_HEADER", "CsvFormatError", "Trajectory"]

CSV_HEADER = ("t", "e", "e_dot", "v_i", "u", "a", "reward")


class CsvFormatError(ValueError):
    """Raised for malformed trajectory CSV files; carries the offending line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Trajectory:
    """Column arrays of one fixed-length episode, all of equal length."""

    t: np.ndarray
    e: np.ndarray
    e_dot: np.ndarray
    v: np.ndarray
    u: np.ndarray
    a: np.ndarray
    reward: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.t)
        for name in ("e", "e_dot", "v", "u", "a", "reward"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} length != {n}")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def episode_reward(self) -> float:
        """Undiscounted sum of the clipped per-step rewards."""
        return float(self.reward.sum())

    def e_next(self, dt: float) -> np.ndarray:
        """Post-step error per row, reconstructed by the plant's own update law."""
        return self.e + dt * self.e_dot

    def episode_cost(self, alpha: float, beta: float, e_nmax: float, u_max: float, dt: float) -> float:
        """Undiscounted, unclipped accumulated stage cost of the episode."""
        costs = alpha * np.abs(self.e_next(dt)) / e_nmax + beta * np.abs(self.u) / u_max
        return float(costs.sum())

    def save_csv(self, path: str) -> None:
        """Write the fixed-header CSV at full (round-trip) precision."""
        with open(path, "w") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            cols = (self.t, self.e, self.e_dot, self.v, self.u, self.a, self.reward)
            for row in zip(*cols):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load_csv(cls, path: str) -> "Trajectory":
        """Parse a trajectory CSV, validating the header and every row."""
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise CsvFormatError("empty file", 1)
        header = tuple(lines[0].split(","))
        if header != CSV_HEADER:
            raise CsvFormatError(
                f"header {','.join(header)!r} != {','.join(CSV_HEADER)!r}", 1
            )
        rows = []
        for i, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(CSV_HEADER):
                raise CsvFormatError(f"expected {len(CSV_HEADER)} fields, got {len(parts)}", i)
            try:
                rows.append([float(p) for p in parts])
            except ValueError as err:
                raise CsvFormatError(str(err), i) from None
        if not rows:
            raise CsvFormatError("no data rows", 2)
        data = np.asarray(rows, dtype=np.float64)
        return cls(*(data[:, j].copy() for j in range(len(CSV_HEADER))))
