"""Backward heat kernel, Gaussian-weighted surface integrals and the Q bound.

All integrals use the trapezoid rule on the shape's own grid.  For n = 2 the
azimuthal direction is integrated exactly when the kernel centre lies on the
symmetry axis and with ``N_AZIMUTH`` nodes otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .flow import FlowSeries
from .geometry import StarShape, compute_fields, laplace_beltrami, surface_grad_sq

N_AZIMUTH = 128

# S_1 is the cap of directions within this angle of z_0
CAP_ANGLE = math.pi / 3


class QuadratureWarning(UserWarning):
    """The kernel is narrower than the grid can resolve."""


@dataclass(frozen=True)
class KernelPoint:
    Y: tuple
    s: float

    def tau(self, t: float) -> float:
        tau = self.s - t
        if not tau > 0:
            raise ValueError(f"kernel evaluated at t={t} not before its centre s={self.s}")
        return tau


def rho(X, t: float, kp: KernelPoint, n: int):
    """``(4 pi tau)^{-n/2} exp(-|X - Y|^2 / (4 tau))`` with ``tau = s - t``."""
    tau = kp.tau(t)
    X = np.asarray(X, dtype=float)
    d2 = np.sum((X - np.asarray(kp.Y, dtype=float)) ** 2, axis=-1)
    return (4.0 * math.pi * tau) ** (-0.5 * n) * np.exp(-d2 / (4.0 * tau))


def sphere_area(n: int) -> float:
    """Area of the unit n-sphere."""
    return 2.0 * math.pi ** ((n + 1) / 2) / gamma((n + 1) / 2)


@dataclass(frozen=True)
class _Sample:
    """Quadrature nodes of a shape: positions, outer normals, weights and fields."""

    X: np.ndarray
    nu: np.ndarray
    weight: np.ndarray  # d mu per node
    dz: np.ndarray  # measure of the round sphere per node
    r: np.ndarray
    node: np.ndarray  # grid index behind every sample


def _sample(shape: StarShape, Y, dv) -> _Sample:
    a = shape.angles
    r = shape.r
    w = np.sqrt(1.0 + dv * dv)
    h = shape.h
    idx = np.arange(shape.N)
    if shape.n == 1:
        z = np.column_stack([np.cos(a), np.sin(a)])
        zp = np.column_stack([-np.sin(a), np.cos(a)])
        nu = (z - dv[:, None] * zp) / w[:, None]
        return _Sample(r[:, None] * z, nu, r * w * h, np.full(shape.N, h), r, idx)
    sin = np.sin(a)
    sin[[0, -1]] = 0.0
    Y = np.asarray(Y, dtype=float)
    on_axis = abs(Y[0]) < 1e-14 and abs(Y[1]) < 1e-14
    psi = np.array([0.0]) if on_axis else 2.0 * math.pi * np.arange(N_AZIMUTH) / N_AZIMUTH
    dpsi = 2.0 * math.pi / psi.size
    A, P = np.meshgrid(a, psi, indexing="ij")
    S = np.sin(A)
    z = np.stack([S * np.cos(P), S * np.sin(P), np.cos(A)], axis=-1)
    e_theta = np.stack([np.cos(A) * np.cos(P), np.cos(A) * np.sin(P), -S], axis=-1)
    nu = (z - dv[:, None, None] * e_theta) / w[:, None, None]
    X = r[:, None, None] * z
    weight = np.repeat((r * sin * r * w * h * dpsi)[:, None], psi.size, axis=1)
    dz = np.repeat((sin * h * dpsi)[:, None], psi.size, axis=1)
    node = np.repeat(idx[:, None], psi.size, axis=1)
    return _Sample(
        X.reshape(-1, 3), nu.reshape(-1, 3), weight.ravel(), dz.ravel(),
        np.repeat(r[:, None], psi.size, axis=1).ravel(), node.ravel(),
    )


def _check_resolution(shape, tau):
    hr = shape.h * float(shape.r.min())
    if tau < 10.0 * hr * hr:
        warnings.warn(
            f"tau={tau:.3g} below 10 (h r)^2={10 * hr * hr:.3g}; quadrature may under-resolve",
            QuadratureWarning, stacklevel=3,
        )


@dataclass(frozen=True)
class WeightedIntegrals:
    mass: float
    f_mass: float
    drive: float
    dissipation: float
    gradient_term: float  # integral of (2 rho / f) |grad f|^2
    curvature_term: float  # integral of |A|^2 f rho


def weighted_integrals(shape: StarShape, t: float, kp: KernelPoint) -> WeightedIntegrals:
    """Kernel-weighted integrals of the terms in the weighted ``f`` balance."""
    tau = kp.tau(t)
    _check_resolution(shape, tau)
    F = compute_fields(shape)
    smp = _sample(shape, kp.Y, F.dv)
    i = smp.node
    w = rho(smp.X, t, kp, shape.n) * smp.weight
    f, H, A2 = F.f[i], F.H[i], F.A_norm_sq[i]
    grad_f2 = surface_grad_sq(shape, F.f, F.dv)[i]
    support = np.sum((smp.X - np.asarray(kp.Y, dtype=float)) * smp.nu, axis=1)
    # |H_vec + F_perp / (2 tau)|^2 with H_vec = -H nu, F_perp = <X - Y, nu> nu
    defect = -H + support / (2.0 * tau)
    return WeightedIntegrals(
        mass=float(w.sum()),
        f_mass=float((f * w).sum()),
        drive=float((f * f * H * w).sum()),
        dissipation=float((f * defect * defect * w).sum()),
        gradient_term=float((2.0 * grad_f2 / f * w).sum()),
        curvature_term=float((A2 * f * w).sum()),
    )


def q_value(shape: StarShape, t: float, kp: KernelPoint) -> float:
    """Gaussian integral of ``r^{n+1}`` over the round sphere of directions."""
    tau = kp.tau(t)
    F_dv = np.zeros(shape.N)  # normals are not needed here
    smp = _sample(shape, kp.Y, F_dv)
    return float((rho(smp.X, t, kp, shape.n) * smp.r ** (shape.n + 1) * smp.dz).sum())


def q_case_constants(n: int, cap_chart_slope: float | None = None) -> dict:
    """Closed-form constants of the three-case bound on Q.

    ``max_{phi>0} exp(-phi/a) phi^{n/2}`` equals ``(a n / 2)^{n/2} exp(-n/2)``.
    """
    if n not in (1, 2):
        raise ValueError(f"unsupported dimension n={n}")
    if cap_chart_slope is None:
        cap_chart_slope = 1.0 / math.cos(CAP_ANGLE)
    pref = sphere_area(n) / math.pi ** (n / 2)
    peak = lambda a: (a * n / 2.0) ** (n / 2.0) * math.exp(-n / 2.0)
    # integral over R^n of exp(-(3/4)|x|^2) is (4 pi / 3)^{n/2}
    c3 = cap_chart_slope * math.pi ** (-n / 2) * (4.0 * math.pi / 3.0) ** (n / 2) * 2**n
    return {
        "c0": cap_chart_slope,
        "c1": pref * peak(1.0),
        "c2": pref * peak(4.0),
        "c3": c3,
        "c4": 2**n * pref * peak(2.0),
    }


def q_bound_constant(n: int, cap_chart_slope: float | None = None) -> float:
    """``c = max`` of the case constants; ``Q <= c * diam(M_0)``."""
    cs = q_case_constants(n, cap_chart_slope)
    return max(cs["c1"], cs["c2"], cs["c3"], cs["c4"])


@dataclass(frozen=True)
class CaseReport:
    samples: int
    violations: dict

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())


def _random_sphere(rng, size, n):
    x = rng.standard_normal((size, n + 1))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def verify_case_inequalities(samples: int = 100_000, n: int = 1, seed=42, atol=1e-12) -> CaseReport:
    """Monte Carlo check of the pointwise inequalities behind each case of the Q bound.

    Draws ``r/r0`` uniform on (0, 10) and directions ``z, z0`` uniform on S^n.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    ratio = rng.uniform(0.0, 10.0, samples)
    z = _random_sphere(rng, samples, n)
    z0 = _random_sphere(rng, samples, n)
    cosang = np.clip(np.sum(z * z0, axis=1), -1.0, 1.0)
    dist2 = np.sum((ratio[:, None] * z - z0) ** 2, axis=1)
    chord2 = np.sum((z - z0) ** 2, axis=1)
    far = ratio >= 2.0
    cap = ~far & (cosang >= math.cos(CAP_ANGLE))
    rest = ~far & ~cap
    # projection of z onto the tangent plane at z0
    x = z - cosang[:, None] * z0
    x2 = np.sum(x * x, axis=1)
    slope = 1.0 / np.maximum(cosang, 1e-300)
    v = {
        "far_triangle": int(np.sum(far & (dist2 < (ratio - 1.0) ** 2 - atol))),
        "far_quarter": int(np.sum(far & ((ratio - 1.0) ** 2 < ratio**2 / 4.0 - atol))),
        "cap_cosine": int(np.sum(cap & (dist2 < 0.75 * chord2 - atol))),
        "cap_projection": int(np.sum(cap & (chord2 < x2 - atol))),
        "cap_chart_slope": int(np.sum(cap & (slope > 1.0 / math.cos(CAP_ANGLE) + atol))),
        "complement_half": int(np.sum(rest & (dist2 < 0.5 - atol))),
    }
    return CaseReport(samples, v)


@dataclass(frozen=True)
class IdentityReport:
    times: np.ndarray
    lhs: np.ndarray  # centred difference of f_mass
    rhs: np.ndarray
    integrals: list

    @property
    def residual(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs)

    @property
    def max_residual(self) -> float:
        return float(self.residual.max())


def _uniform_snapshots(series: FlowSeries, kp: KernelPoint):
    snaps = [(t, s) for t, s in series.snapshots if t < kp.s]
    if len(snaps) < 3:
        raise ValueError("need at least 3 snapshots before the kernel centre")
    times = np.array([t for t, _ in snaps])
    dts = np.diff(times)
    if np.ptp(dts) > 1e-9 * dts.max():
        raise ValueError("snapshots are not uniformly spaced")
    return snaps, float(dts.mean())


def check_identity(series: FlowSeries, kp: KernelPoint, t_min: float = 0.0) -> IdentityReport:
    """Compare the time derivative of the weighted ``f`` integral with its evolution formula.

    Evaluated at interior snapshots with ``t >= t_min``.
    """
    snaps, dt = _uniform_snapshots(series, kp)
    keep = [i for i in range(1, len(snaps) - 1) if snaps[i][0] >= t_min]
    if not keep:
        raise ValueError("no interior snapshot after t_min")
    snaps = snaps[keep[0] - 1: keep[-1] + 2]
    ints = [weighted_integrals(s, t, kp) for t, s in snaps]
    fm = np.array([w.f_mass for w in ints])
    lhs = (fm[2:] - fm[:-2]) / (2.0 * dt)
    mid = ints[1:-1]
    rhs = np.array([
        -w.dissipation - w.gradient_term + 2.0 * w.drive - w.curvature_term for w in mid
    ])
    times = np.array([t for t, _ in snaps[1:-1]])
    return IdentityReport(times, lhs, rhs, mid)


@dataclass(frozen=True)
class MonotonicityReport:
    applicable: bool
    holds: bool
    worst_margin_drive: float  # min over times of 2 drive + tol - d/dt f_mass
    worst_margin_sup: float  # same against c1 f_inf^2 mass
    tolerance: float
    identity: IdentityReport | None = None


def check_monotonicity(series: FlowSeries, kp: KernelPoint, c1: float | None = None,
                       f_inf: float | None = None, t_min: float = 0.0) -> MonotonicityReport:
    """Check the weighted ``f`` integral grows no faster than the curvature drive allows.

    ``c1`` defaults to twice the largest recorded ``H``, ``f_inf`` to the
    largest recorded ``f``.  Series that are not genuine flows (a single
    snapshot or no curvature) are reported as not applicable.
    """
    d = series.diagnostics
    if len(d) < 2 or not np.any(d.H_max > 0):
        return MonotonicityReport(False, False, math.nan, math.nan, math.nan)
    rep = check_identity(series, kp, t_min)
    tol = 10.0 * rep.max_residual
    c1 = 2.0 * float(d.H_max.max()) if c1 is None else c1
    f_inf = float(d.f_max.max()) if f_inf is None else f_inf
    drive = np.array([w.drive for w in rep.integrals])
    mass = np.array([w.mass for w in rep.integrals])
    m1 = float(np.min(2.0 * drive + tol - rep.lhs))
    m2 = float(np.min(c1 * f_inf**2 * mass + tol - rep.lhs))
    return MonotonicityReport(True, m1 >= 0 and m2 >= 0, m1, m2, tol, rep)
