"""Constants, the cubic barrier, gradient and blow-up-time bounds, and monitors.

Two conventions for the drive constant ``c2`` are in use:

* gradient-estimate convention: ``c2 = c * c1 * |X0|`` with ``c1 = 2 max H``;
* blow-up convention: ``c2 = cH * c * |X0|`` with ``cH = sup H``.

Both are kept on :class:`Constants` and never mixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flow import FlowSeries, rhs
from .geometry import compute_fields, diameter, diff1, laplace_beltrami, surface_grad_sq
from .kernel import q_bound_constant

PASS, FAIL, NA = "pass", "fail", "not-applicable"

B_HEADROOM = 1.1
MONITOR_TOL = 1e-2
ALGEBRA_TOL = 1e-10


@dataclass(frozen=True)
class Constants:
    f0: float
    X0_diam: float
    c: float
    c1: float
    c2: float  # c * c1 * |X0|
    c3: float
    cH: float
    c2_blowup: float  # cH * c * |X0|
    f_inf: float
    B: float
    T0: float
    n: int = 1

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def compute_constants(series: FlowSeries, T0: float, B_factor: float = B_HEADROOM) -> Constants:
    """Collect the constants of both estimates from a run.

    ``c1`` uses the records with ``t <= T0``; ``cH`` and ``f_inf`` use the
    whole series, so pass a windowed series when ``H`` must stay bounded.
    """
    d = series.diagnostics
    if d.t[-1] < T0 * (1 - 1e-12):
        raise ValueError(f"series ends at t={d.t[-1]:.6g} before T0={T0:.6g}")
    if np.any(d.f_min <= 0):
        raise ValueError("f is not positive throughout the series")
    M0 = series.initial
    f0 = float(compute_fields(M0).f.max())
    X0 = diameter(M0)
    c = q_bound_constant(M0.n)
    c1 = 2.0 * float(d.H_max[d.t <= T0 * (1 + 1e-12)].max())
    cH = float(d.H_max.max())
    f_inf = float(d.f_max.max())
    return Constants(
        f0=f0, X0_diam=X0, c=c, c1=c1, c2=c * c1 * X0,
        c3=max(c * X0, 1.0 / f0), cH=cH, c2_blowup=cH * c * X0,
        f_inf=f_inf, B=B_factor * 4.0 * f_inf * cH, T0=T0, n=M0.n,
    )


@dataclass(frozen=True)
class BarrierCubic:
    """``h(r) = s c2 r^3 - r + c3 f0^2``."""

    s: float
    c2: float
    c3: float
    f0: float

    def __post_init__(self):
        for name in ("s", "c2", "c3", "f0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.s < 0:
            raise ValueError("s must be non-negative")

    @property
    def lead(self):
        return self.s * self.c2

    @property
    def const(self):
        return self.c3 * self.f0**2


def barrier_h(r, cubic: BarrierCubic):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("barrier is evaluated on r >= 0")
    out = cubic.lead * r**3 - r + cubic.const
    return float(out) if out.ndim == 0 else out


def cardano_roots(a: float, p: float, q: float) -> np.ndarray:
    """Real roots of ``a x^3 + p x + q`` (no quadratic term), ascending."""
    P, Q = p / a, q / a
    disc = (Q / 2.0) ** 2 + (P / 3.0) ** 3
    if disc > 0:
        sd = math.sqrt(disc)
        u = np.cbrt(-Q / 2.0 + sd)
        w = np.cbrt(-Q / 2.0 - sd)
        return np.array([u + w])
    if P == 0:
        return np.array([0.0])
    m = 2.0 * math.sqrt(-P / 3.0)
    arg = max(-1.0, min(1.0, 3.0 * Q / (P * m)))
    phi = math.acos(arg) / 3.0
    roots = [m * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
    return np.sort(np.array(roots))


def _bisect(fn, lo, hi, iters=200):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = fn(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisection_roots(a: float, p: float, q: float) -> np.ndarray:
    """Real roots of ``a x^3 + p x + q`` by bisection on monotone brackets."""
    fn = lambda x: (a * x * x + p) * x + q
    bound = 1.0 + max(abs(p / a), abs(q / a))  # Cauchy bound
    knots = [-bound]
    if p / a < 0:
        xc = math.sqrt(-p / (3.0 * a))
        knots += [-xc, xc]
    knots.append(bound)
    roots = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        flo, fhi = fn(lo), fn(hi)
        if flo == 0:
            roots.append(lo)
        elif flo * fhi < 0:
            roots.append(_bisect(fn, lo, hi))
    if fn(knots[-1]) == 0:
        roots.append(knots[-1])
    return np.array(sorted(set(roots)))


@dataclass(frozen=True)
class BarrierReport:
    roots: np.ndarray
    roots_bisection: np.ndarray
    agreement: float
    hypothesis: bool  # 2 c3 f0^2 < 1 / sqrt(6 c2 s)
    slope_ok: bool  # h' < -1/2 on (0, 2 c3 f0^2)
    h_f0_positive: bool
    interval_min_negative: bool
    alpha: float  # smallest root in (f0, 2 c3 f0^2), nan if none


def barrier_analysis(cubic: BarrierCubic) -> BarrierReport:
    """Roots of the barrier cubic and the sign facts the gradient estimate relies on."""
    if not cubic.s > 0:
        raise ValueError("barrier analysis needs s > 0")
    a, p, q = cubic.lead, -1.0, cubic.const
    card = cardano_roots(a, p, q)
    bis = bisection_roots(a, p, q)
    if card.size == bis.size:
        scale = np.maximum(1.0, np.abs(bis))
        agree = float(np.max(np.abs(card - bis) / scale))
        # a near-double root makes the closed form ill-conditioned
        roots = card if agree <= ALGEBRA_TOL else bis
    else:
        agree, roots = math.inf, bis
    top = 2.0 * cubic.c3 * cubic.f0**2
    hyp = top < 1.0 / math.sqrt(6.0 * cubic.c2 * cubic.s)
    # h' is increasing on r > 0, so its sup over (0, top) sits at r = top
    slope_ok = 3.0 * a * top**2 - 1.0 <= -0.5
    h_f0 = barrier_h(cubic.f0, cubic) > 0
    # h is convex on r > 0: its minimum over [f0, top] is at the critical point or an end
    rc = 1.0 / math.sqrt(3.0 * a)
    cands = [cubic.f0, top] + ([rc] if cubic.f0 < rc < top else [])
    neg = min(barrier_h(x, cubic) for x in cands) < 0
    inside = roots[(roots > cubic.f0) & (roots < top)]
    alpha = float(inside.min()) if inside.size else math.nan
    return BarrierReport(roots, bis, agree, hyp, slope_ok, h_f0, neg, alpha)


@dataclass(frozen=True)
class Horizon:
    T: float
    T_statement: float  # min(1 / (G f0^4), T0) with G = 24 c2 c3^2
    G: float


def theorem1_T(constants: Constants) -> Horizon:
    """Time horizon of the gradient estimate, ``min(1/(24 c2 c3^2 f0^4), T0)``."""
    k = constants
    G = 24.0 * k.c2 * k.c3**2
    T = min(1.0 / (24.0 * k.c2 * k.c3**2 * k.f0**4), k.T0)
    return Horizon(T, min(1.0 / (G * k.f0**4), k.T0), G)


@dataclass(frozen=True)
class BoundVerdict:
    verdict: str
    margin_proved: float  # min over t <= T of 2 c3 f0^2 - f_max
    stated_holds: bool  # f_max <= 2 c3 f0
    margin_stated: float
    T: float


def verify_gradient_bound(series: FlowSeries, constants: Constants, T: float | None = None) -> BoundVerdict:
    """Check ``f_max(t) <= 2 c3 f0^2`` on ``[0, T]`` (and report the ``2 c3 f0`` form)."""
    if T is None:
        T = theorem1_T(constants).T
    d = series.diagnostics
    if np.any(d.f_min <= 0) or series.termination == "star_shape_lost":
        return BoundVerdict(NA, math.nan, False, math.nan, T)
    if d.t[-1] < T * (1 - 1e-12):
        raise ValueError("series does not cover the gradient-estimate horizon")
    fm = d.f_max[d.t <= T * (1 + 1e-12)]
    k = constants
    m_proved = float(np.min(2.0 * k.c3 * k.f0**2 - fm))
    m_stated = float(np.min(2.0 * k.c3 * k.f0 - fm))
    return BoundVerdict(PASS if m_proved > 0 else FAIL, m_proved, m_stated > 0, m_stated, T)


@dataclass(frozen=True)
class LowerBound:
    T_lower: float
    T_lower_expanded: float  # 1 / (24 cH c^3 |X0|^3 f0^4)


def theorem2_lower_bound(constants: Constants) -> LowerBound:
    """Lower bound on the blow-up time, with ``c2 = cH c |X0|``."""
    k = constants
    if not (math.isfinite(k.cH) and k.cH > 0):
        raise ValueError("cH must be finite and positive")
    T = 1.0 / (24.0 * k.c2_blowup * k.c3**2 * k.f0**4)
    T_exp = 1.0 / (24.0 * k.cH * k.c**3 * k.X0_diam**3 * k.f0**4)
    return LowerBound(T, T_exp)


@dataclass(frozen=True)
class PhiReport:
    verdict: str
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    phi_max: np.ndarray = field(default_factory=lambda: np.empty(0))
    worst_increase: float = math.nan  # max_t phi_max(t) - phi_max(0)
    critical_residual: np.ndarray = field(default_factory=lambda: np.empty(0))
    kato_verdict: str = NA
    kato_max_defect: float = math.nan  # max of (lhs - rhs) / |rhs|, <= 0 when it holds
    kato_equality_error: float = math.nan  # n = 1 only


def phi_field(shape, t: float, B: float) -> np.ndarray:
    F = compute_fields(shape)
    return np.log(F.A_norm_sq) + 2.0 * np.log(F.f) - B * t


def phi_monitor(series: FlowSeries, constants: Constants, B: float | None = None) -> PhiReport:
    """Track ``max Phi`` with ``Phi = log|A|^2 + 2 log f - B t`` over the snapshots."""
    k = constants
    B = k.B if B is None else B
    if not B > 4.0 * k.f_inf * k.cH:
        return PhiReport(NA)
    times, pmax, crit = [], [], []
    kato_defect, kato_eq = -math.inf, 0.0
    for t, shape in series.snapshots:
        F = compute_fields(shape)
        if np.any(F.A_norm_sq <= 0) or np.any(F.f <= 0):
            return PhiReport(NA)
        phi = np.log(F.A_norm_sq) + 2.0 * np.log(F.f) - B * t
        j = int(np.argmax(phi))
        times.append(t)
        pmax.append(float(phi[j]))
        # at an interior maximum grad g / g = -2 grad f / f
        dg, df = diff1(shape, F.A_norm_sq), diff1(shape, F.f)
        crit.append(abs(dg[j] / F.A_norm_sq[j] + 2.0 * df[j] / F.f[j]))
        if shape.n == 1:
            # |grad kappa^2|^2 = 4 kappa^2 kappa_s^2 by the chain rule
            grad_g2 = 4.0 * F.A_norm_sq * F.dA_norm_sq
            lhs = grad_g2 / (2.0 * F.A_norm_sq**2)
            rhs_ = 2.0 * F.dA_norm_sq / F.A_norm_sq
            scale = np.maximum(np.abs(rhs_), np.finfo(float).tiny)
            kato_defect = max(kato_defect, float(np.max((lhs - rhs_) / scale)))
            kato_eq = max(kato_eq, float(np.max(np.abs(lhs - rhs_) / scale)))
    pmax = np.array(pmax)
    worst = float(np.max(pmax - pmax[0]))
    verdict = PASS if worst <= MONITOR_TOL else FAIL
    if series.n == 1:
        kato_verdict = PASS if kato_defect <= 1e-12 else FAIL
        return PhiReport(verdict, np.array(times), pmax, worst, np.array(crit),
                         kato_verdict, kato_defect, kato_eq)
    return PhiReport(verdict, np.array(times), pmax, worst, np.array(crit))


@dataclass(frozen=True)
class ResidualReport:
    applicable: bool
    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_per_time: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def max_residual(self) -> float:
        return float(self.max_per_time.max()) if self.max_per_time.size else math.nan


def _uniform(series: FlowSeries):
    snaps = series.snapshots
    if len(snaps) < 3:
        raise ValueError("need at least 3 snapshots")
    times = np.array([t for t, _ in snaps])
    dts = np.diff(times)
    if np.ptp(dts) > 1e-9 * dts.max():
        raise ValueError("snapshots are not uniformly spaced")
    return snaps, float(dts.mean())


def _tangential_advection(shape, u, dv):
    """Rate of change of u at fixed direction caused by the radial (non-normal) motion.

    The parametrization velocity ``r v_t z`` has tangential part whose
    pairing with ``grad u`` is ``v_t v' u' / (1 + v'^2)``.
    """
    return rhs(shape) * dv * diff1(shape, u) / (1.0 + dv * dv)


def residual_f_evolution(series: FlowSeries, t_min: float = 0.0) -> ResidualReport:
    """Max-norm defect of ``f_t - Lap f = -2|grad f|^2/f + 2 f^2 H - |A|^2 f`` per snapshot.

    ``f_t`` is the centred snapshot difference at fixed direction with the
    tangential advection removed.  Only snapshots with ``t >= t_min`` are
    evaluated; grid-scale content of the sampled initial data decays over a
    short layer and a fixed ``t_min`` keeps refinement studies comparable.
    """
    snaps, dt = _uniform(series)
    fs = [compute_fields(s).f for _, s in snaps]
    out, times = [], []
    for i in range(1, len(snaps) - 1):
        if snaps[i][0] < t_min:
            continue
        times.append(snaps[i][0])
        shape = snaps[i][1]
        F = compute_fields(shape)
        f = F.f
        ft = (fs[i + 1] - fs[i - 1]) / (2.0 * dt) - _tangential_advection(shape, f, F.dv)
        rhs_ = (laplace_beltrami(shape, f) - 2.0 * surface_grad_sq(shape, f, F.dv) / f
                + 2.0 * f * f * F.H - F.A_norm_sq * f)
        out.append(float(np.max(np.abs(ft - rhs_))))
    return ResidualReport(True, np.array(times), np.array(out))


def residual_A_evolution(series: FlowSeries, t_min: float = 0.0) -> ResidualReport:
    """Max-norm defect of ``d_t|A|^2 - Lap|A|^2 = -2|grad A|^2 + 2|A|^4`` (curves only)."""
    if series.n != 1:
        return ResidualReport(False)
    snaps, dt = _uniform(series)
    gs = [compute_fields(s).A_norm_sq for _, s in snaps]
    out, times = [], []
    for i in range(1, len(snaps) - 1):
        if snaps[i][0] < t_min:
            continue
        times.append(snaps[i][0])
        shape = snaps[i][1]
        F = compute_fields(shape)
        g = F.A_norm_sq
        gt = (gs[i + 1] - gs[i - 1]) / (2.0 * dt) - _tangential_advection(shape, g, F.dv)
        rhs_ = laplace_beltrami(shape, g) - 2.0 * F.dA_norm_sq + 2.0 * g * g
        out.append(float(np.max(np.abs(gt - rhs_))))
    return ResidualReport(True, np.array(times), np.array(out))


def fitted_order(sizes, errors) -> float:
    """Least-squares slope of ``-log(error)`` against ``log(N)``."""
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(-np.polyfit(x, y, 1)[0])
