"""Trajectory records and tracking-performance metrics.

A TrajectoryRecord holds one rollout on a uniform time grid: row k carries
the state at t_k, the control applied at t_k, the cost charged for the
resulting transition, and the reference depth at t_k. Metrics:

  * steady-state error: mean |signal - reference| over the final fifth;
  * overshoot: largest excursion past the reference in the approach
    direction after the first crossing (0 if never crossed);
  * response time: first time the error enters the settling band and never
    leaves again (band = 2% of the initial step for depth, 2% of the peak
    excursion for pitch); None when the trajectory never settles;
  * long-term cost: discount-weighted sum of the cost column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

TRAJECTORY_COLUMNS = ("t", "x", "z", "theta", "w", "q", "tau1", "tau2",
                      "z_ref", "cost")


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    q: np.ndarray
    tau1: np.ndarray
    tau2: np.ndarray
    z_ref: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            arr = np.asarray(getattr(self, f.name), dtype=float)
            object.__setattr__(self, f.name, arr)
            if arr.ndim != 1:
                raise ValueError(f"column {f.name} must be a vector")
            if arr.shape != self.t.shape:
                raise ValueError(f"column {f.name} length differs from t")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"column {f.name} contains non-finite values")
        if len(self.t) == 0:
            raise ValueError("trajectory record is empty")
        if len(self.t) > 1:
            steps = np.diff(self.t)
            if np.any(steps <= 0):
                raise ValueError("time grid must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(steps[0], 1.0):
                raise ValueError("time grid must be uniform")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_COLUMNS)
            columns = [getattr(self, name) for name in TRAJECTORY_COLUMNS]
            for row in zip(*columns):
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str) -> "TrajectoryRecord":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != TRAJECTORY_COLUMNS:
                raise ValueError(
                    f"{path}: expected header {','.join(TRAJECTORY_COLUMNS)}")
            rows = [[float(c) for c in row] for row in reader if row]
        if not rows:
            raise ValueError(f"{path}: no data rows")
        data = np.array(rows)
        # contiguous copies so downstream reductions sum in the same order
        # as for freshly built records
        return cls(**{name: np.ascontiguousarray(data[:, i])
                      for i, name in enumerate(TRAJECTORY_COLUMNS)})


@dataclass
class MetricsReport:
    sse_z: float
    sse_theta: float
    overshoot_z: float
    rt_z: float | None
    rt_theta: float | None
    long_term_cost: float


def _settle_time(t: np.ndarray, err: np.ndarray, band: float) -> float | None:
    """First time |err| enters the band and stays; None if it never does."""
    outside = np.abs(err) > band
    if not outside.any():
        return float(t[0])
    last_out = int(np.max(np.nonzero(outside)[0]))
    if last_out + 1 >= len(t):
        return None
    return float(t[last_out + 1])


def _overshoot(err: np.ndarray) -> float:
    """Largest post-crossing excursion past zero, signed by the approach
    direction (err = signal - reference)."""
    e0 = err[0]
    if e0 == 0.0:
        return float(np.max(np.abs(err)))
    direction = -np.sign(e0)  # approaching from below means err rises
    crossed = np.nonzero(np.sign(err) == direction)[0]
    if crossed.size == 0:
        return 0.0
    past = direction * err[crossed[0]:]
    return float(max(np.max(past), 0.0))


def compute_metrics(traj: TrajectoryRecord, gamma: float = 0.99,
                    band_fraction: float = 0.02, tail_fraction: float = 0.2,
                    theta_ref: np.ndarray | float = 0.0) -> MetricsReport:
    """Score one rollout; see the module docstring for definitions."""
    n = len(traj)
    theta_ref = np.broadcast_to(np.asarray(theta_ref, dtype=float), (n,))
    err_z = traj.z - traj.z_ref
    err_theta = traj.theta - theta_ref

    n_tail = max(1, int(np.ceil(tail_fraction * n)))
    sse_z = float(np.mean(np.abs(err_z[-n_tail:])))
    sse_theta = float(np.mean(np.abs(err_theta[-n_tail:])))

    band_z = band_fraction * abs(err_z[0])
    band_theta = band_fraction * float(np.max(np.abs(err_theta)))
    rt_z = _settle_time(traj.t, err_z, band_z)
    rt_theta = _settle_time(traj.t, err_theta, band_theta)

    discounts = gamma ** np.arange(n)
    long_term_cost = float(discounts @ traj.cost)

    return MetricsReport(
        sse_z=sse_z, sse_theta=sse_theta, overshoot_z=_overshoot(err_z),
        rt_z=rt_z, rt_theta=rt_theta, long_term_cost=long_term_cost)
