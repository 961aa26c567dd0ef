"""Mean curvature flow of radial graphs with explicit RK4 time stepping.

Moving the surface with normal speed ``-H`` while keeping each point on its
ray gives the scalar equation ``v_t = -(H / r) * sqrt(1 + |grad v|^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import DegenerateShapeError, StarShape, compute_fields, curvatures, diff1, diff2

TERMINATIONS = ("reached_t_end", "blowup_detected", "star_shape_lost", "step_limit")


@dataclass(frozen=True)
class FlowConfig:
    t_end: float = 10.0
    cfl_factor: float = 0.2
    blowup_threshold: float = 1e6
    snapshot_interval: float | None = 1e-3
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not 0 < self.cfl_factor <= 0.5:
            raise ValueError("cfl_factor must lie in (0, 0.5]")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if self.snapshot_interval is not None and not self.snapshot_interval > 0:
            raise ValueError("snapshot_interval must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class Diagnostics:
    """Per-step scalar records; row 0 is the initial state."""

    t: np.ndarray
    dt: np.ndarray
    f_max: np.ndarray
    f_min: np.ndarray
    H_max: np.ndarray
    A2_max: np.ndarray
    area: np.ndarray

    COLUMNS = ("t", "dt", "f_max", "f_min", "H_max", "A2_max", "area")

    def __len__(self):
        return len(self.t)

    def upto(self, t_max: float) -> "Diagnostics":
        m = self.t <= t_max * (1 + 1e-12)
        return Diagnostics(*(getattr(self, c)[m] for c in self.COLUMNS))


@dataclass
class FlowSeries:
    snapshots: list  # [(t, StarShape), ...] at uniform snapshot_interval
    diagnostics: Diagnostics
    termination: str
    final: tuple  # (t, StarShape), last valid state
    config: FlowConfig = field(default_factory=FlowConfig)

    @property
    def n(self) -> int:
        return self.snapshots[0][1].n

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    @property
    def initial(self) -> StarShape:
        return self.snapshots[0][1]

    def window(self, t_max: float) -> "FlowSeries":
        """Restrict the series to ``t <= t_max``."""
        snaps = [(t, s) for t, s in self.snapshots if t <= t_max * (1 + 1e-12)]
        return FlowSeries(
            snapshots=snaps,
            diagnostics=self.diagnostics.upto(t_max),
            termination=self.termination if self.final[0] <= t_max else "reached_t_end",
            final=snaps[-1],
            config=self.config,
        )


def _rhs_v(shape: StarShape) -> np.ndarray:
    dv = diff1(shape, shape.v)
    d2v = diff2(shape, shape.v)
    w2 = 1.0 + dv * dv
    if shape.n == 1:
        # -(H / r) sqrt(w2) with H = e^{-v} (w2 - v'') / w2^{3/2}
        return -np.exp(-2.0 * shape.v) * (w2 - d2v) / w2
    k1, k2 = curvatures(shape, dv, d2v)
    return -(k1 + k2) * np.exp(-shape.v) * np.sqrt(w2)


def rhs(shape: StarShape) -> np.ndarray:
    """Time derivative of the log-radius at fixed direction."""
    out = _rhs_v(shape)
    if not np.all(np.isfinite(out)):
        raise DegenerateShapeError("non-finite flow velocity")
    return out


def stable_dt(shape: StarShape, cfl_factor: float = 0.2) -> float:
    """Parabolic step bound ``cfl * (h r_min)^2 / (1 + max |grad v|^2)``."""
    dv = diff1(shape, shape.v)
    r_min = math.exp(shape.v.min())
    return cfl_factor * (shape.h * r_min) ** 2 / (1.0 + float(np.max(dv * dv)))


def step(shape: StarShape, dt: float) -> StarShape:
    """One classical RK4 step of size ``dt``."""
    n, v = shape.n, shape.v
    k1 = _rhs_v(shape)
    k2 = _rhs_v(StarShape(n, v + 0.5 * dt * k1))
    k3 = _rhs_v(StarShape(n, v + 0.5 * dt * k2))
    k4 = _rhs_v(StarShape(n, v + dt * k3))
    new_v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # raises DegenerateShapeError on non-finite values
    return StarShape(n, new_v)


def _grid_tables(shape):
    theta = shape.angles
    cot = np.zeros_like(theta)
    sin = np.zeros_like(theta)
    if shape.n == 2:
        cot[1:-1] = 1.0 / np.tan(theta[1:-1])
        sin[1:-1] = np.sin(theta[1:-1])
    return cot, sin


def run(shape: StarShape, config: FlowConfig | None = None) -> FlowSeries:
    """Integrate the flow until ``t_end``, curvature blow-up, or failure.

    Snapshots land exactly on multiples of ``snapshot_interval``; the final
    state is kept separately in ``FlowSeries.final``.
    """
    config = config or FlowConfig()
    n, h = shape.n, shape.h
    cot, sin = _grid_tables(shape)
    v = np.array(shape.v)
    stats = _kernels.summary(n, v, h, cot, sin)
    if not np.isfinite(stats[0]):
        raise DegenerateShapeError("initial shape has non-finite geometry")
    rows = np.empty((4096, 7))
    rows[0] = (0.0, 0.0) + tuple(stats[:5])
    k = 1
    t = 0.0
    snapshots = [(0.0, shape)]
    snap_dt = config.snapshot_interval
    k_snap = 1
    termination = "blowup_detected" if stats[3] > config.blowup_threshold else None
    while termination is None:
        next_snap = k_snap * snap_dt if snap_dt else math.inf
        target = min(next_snap, config.t_end)
        budget = config.max_steps + 1 - k
        if budget <= 0:
            termination = "step_limit"
            break
        if k + min(budget, 4096) > rows.shape[0]:
            rows = np.concatenate([rows, np.empty_like(rows)])
        v, t, k, status, stats = _kernels.advance(
            n, v, t, target, h, cot, sin, config.cfl_factor,
            config.blowup_threshold, rows[: k + budget], k, stats,
        )
        if status == _kernels.LOST:
            termination = "star_shape_lost"
        elif status == _kernels.BLOWUP:
            termination = "blowup_detected"
        elif status == _kernels.REACHED:
            if target == next_snap:
                snapshots.append((t, StarShape(n, v)))
                k_snap += 1
            if t >= config.t_end:
                termination = "reached_t_end"
    final = snapshots[-1] if snapshots[-1][0] == t else (t, StarShape(n, v))
    return FlowSeries(
        snapshots=snapshots,
        diagnostics=Diagnostics(*rows[:k].T.copy()),
        termination=termination,
        final=final,
        config=config,
    )


@dataclass(frozen=True)
class BlowupEstimate:
    t_c: float
    confident: bool
    n_points: int
    slope: float

    def __float__(self):
        return self.t_c


def estimate_blowup_time(series: FlowSeries) -> BlowupEstimate:
    """Extrapolate the blow-up time from the tail of ``1 / max |A|^2``.

    Fits a line to ``1/A2_max`` against ``t`` over the records within the
    last decade of curvature growth and returns its zero crossing.
    """
    if series.termination != "blowup_detected":
        raise ValueError(f"no blow-up detected (termination={series.termination})")
    d = series.diagnostics
    a2 = d.A2_max
    if a2[-1] <= 10.0 * a2[0]:
        raise ValueError("insufficient curvature growth to extrapolate")
    tail = a2 >= a2[-1] / 10.0
    first = int(np.argmax(tail))
    t, y = d.t[first:], 1.0 / a2[first:]
    if t.size < 10:
        raise ValueError("fewer than 10 records in the final decade of growth")
    if np.any(np.diff(y) > 0):
        return BlowupEstimate(float(d.t[-1]), False, int(t.size), math.nan)
    slope, icpt = np.polyfit(t, y, 1)
    if not slope < 0:
        return BlowupEstimate(float(d.t[-1]), False, int(t.size), float(slope))
    return BlowupEstimate(float(-icpt / slope), True, int(t.size), float(slope))
