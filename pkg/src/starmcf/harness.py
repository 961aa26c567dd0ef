"""Experiment configuration, orchestration and serialization.

A configuration is a YAML mapping.  Recognised keys (defaults in brackets):

``id`` [derived from shape], ``shape`` (round | flower | ellipse), shape
parameters ``R0`` [1.0] / ``eps``, ``k`` / ``a``, ``b``, ``n`` [1],
``grids`` [[64, 128, 256]], ``cfl_factor`` [0.2], ``t_end`` [10.0],
``blowup_threshold`` [1e6], ``snapshot_interval`` [1e-3], ``max_steps``
[2000000], ``T0`` [end of the monitored window], ``window_fraction`` [0.75],
``kernel_samples`` [100], ``tau_min`` [1e-4], ``tau_max`` [1.0],
``mc_samples`` [100000], ``residual_t_min`` [0.005], ``residual_t_end``
[0.02], ``residual_dt_factor`` [0.1], ``out_dir`` [``$STARMCF_OUT`` or
``starmcf-out``], ``seed`` [42].
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .estimates import (
    FAIL, NA, PASS, BarrierCubic, barrier_analysis, compute_constants, fitted_order,
    phi_field, phi_monitor, residual_A_evolution, residual_f_evolution, theorem1_T,
    theorem2_lower_bound, verify_gradient_bound,
)
from .flow import FlowConfig, estimate_blowup_time, run
from .geometry import PRESETS, compute_fields, diameter, make_shape
from .kernel import (
    KernelPoint, QuadratureWarning, check_identity, check_monotonicity, q_bound_constant,
    q_value, verify_case_inequalities, weighted_integrals,
)

log = logging.getLogger(__name__)

OUT_ENV = "STARMCF_OUT"
DIAGNOSTIC_COLUMNS = ("t", "dt", "f_max", "f_min", "H_max", "A2_max", "area",
                      "phi_max", "f_mass", "drive")
SHAPE_KEYS = {"round": ("R0",), "flower": ("eps", "k"), "ellipse": ("a", "b")}
ORDER_TARGET = 1.5
BARRIER_INSET = 1e-6


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the key path."""


@dataclass(frozen=True)
class ExperimentConfig:
    shape: str
    params: dict
    n: int = 1
    grids: tuple = (64, 128, 256)
    cfl_factor: float = 0.2
    t_end: float = 10.0
    blowup_threshold: float = 1e6
    snapshot_interval: float = 1e-3
    max_steps: int = 2_000_000
    T0: float | None = None
    window_fraction: float = 0.75
    kernel_samples: int = 100
    tau_min: float = 1e-4
    tau_max: float = 1.0
    mc_samples: int = 100_000
    residual_t_min: float = 0.005
    residual_t_end: float = 0.02
    residual_dt_factor: float = 0.1
    out_dir: str | None = None
    seed: int = 42
    id: str = ""

    def flow_config(self) -> FlowConfig:
        return FlowConfig(
            t_end=self.t_end, cfl_factor=self.cfl_factor,
            blowup_threshold=self.blowup_threshold,
            snapshot_interval=self.snapshot_interval, max_steps=self.max_steps,
        )


_TYPES = {
    "n": int, "cfl_factor": float, "t_end": float, "blowup_threshold": float,
    "snapshot_interval": float, "max_steps": int, "T0": float, "window_fraction": float,
    "kernel_samples": int, "tau_min": float, "tau_max": float, "mc_samples": int,
    "residual_t_min": float, "residual_t_end": float, "residual_dt_factor": float,
    "out_dir": str, "seed": int, "id": str,
}


def _coerce(key, value, typ):
    if typ is float and isinstance(value, str):
        # YAML 1.1 reads "1e6" as a string
        try:
            return float(value)
        except ValueError:
            pass
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if typ is str and isinstance(value, str):
        return value
    raise ConfigError(f"{key}: expected {typ.__name__}, got {type(value).__name__} {value!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a YAML experiment document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<document>: not valid YAML ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>: expected a mapping")
    doc = dict(doc)
    if "shape" not in doc:
        raise ConfigError("shape: required")
    shape = doc.pop("shape")
    if shape not in PRESETS:
        raise ConfigError(f"shape: unknown preset {shape!r}")
    params = {}
    for key in SHAPE_KEYS[shape]:
        if key in doc:
            typ = int if key == "k" else float
            params[key] = _coerce(key, doc.pop(key), typ)
        elif shape != "round":
            raise ConfigError(f"{key}: required for shape {shape}")
    kw = {}
    if "grids" in doc:
        grids = doc.pop("grids")
        if not isinstance(grids, list) or not grids:
            raise ConfigError("grids: expected a non-empty list")
        grids = tuple(_coerce(f"grids[{i}]", g, int) for i, g in enumerate(grids))
        if any(b <= a for a, b in zip(grids, grids[1:])):
            raise ConfigError("grids: sizes must be strictly ascending")
        kw["grids"] = grids
    for key in list(doc):
        if key not in _TYPES:
            raise ConfigError(f"{key}: unknown key")
        value = doc.pop(key)
        if value is None and key in ("T0", "out_dir"):
            continue
        kw[key] = _coerce(key, value, _TYPES[key])
    cfg = ExperimentConfig(shape=shape, params=params, **kw)
    return _validate(cfg)


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    checks = [
        ("n", cfg.n in (1, 2), "must be 1 or 2"),
        ("cfl_factor", 0 < cfg.cfl_factor <= 0.5, "must lie in (0, 0.5]"),
        ("t_end", cfg.t_end > 0, "must be positive"),
        ("blowup_threshold", cfg.blowup_threshold > 0, "must be positive"),
        ("snapshot_interval", cfg.snapshot_interval > 0, "must be positive"),
        ("max_steps", cfg.max_steps > 0, "must be positive"),
        ("window_fraction", 0 < cfg.window_fraction < 1, "must lie in (0, 1)"),
        ("kernel_samples", cfg.kernel_samples > 0, "must be positive"),
        ("tau_min", 0 < cfg.tau_min <= cfg.tau_max, "must satisfy 0 < tau_min <= tau_max"),
        ("mc_samples", cfg.mc_samples >= 1000, "must be at least 1000"),
        ("residual_t_end", 0 <= cfg.residual_t_min < cfg.residual_t_end,
         "must exceed residual_t_min >= 0"),
        ("residual_dt_factor", cfg.residual_dt_factor > 0, "must be positive"),
        ("T0", cfg.T0 is None or cfg.T0 > 0, "must be positive"),
        ("seed", cfg.seed >= 0, "must be non-negative"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{key}: {msg}")
    for i, N in enumerate(cfg.grids):
        try:
            make_shape(cfg.shape, cfg.params, cfg.n, N)
        except ValueError as exc:
            raise ConfigError(f"shape ({cfg.shape}, grids[{i}]={N}): {exc}") from None
    if not cfg.id:
        tag = "-".join(f"{k}{v:g}" for k, v in sorted(cfg.params.items()))
        cfg = replace(cfg, id=f"{cfg.shape}{'-' + tag if tag else ''}-n{cfg.n}")
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def _verdict(ok, anchor, **detail):
    status = ok if isinstance(ok, str) else (PASS if ok else FAIL)
    return {"anchor": anchor, "status": status, **detail}


@dataclass
class GridResult:
    N: int
    summary: dict
    verdicts: dict
    residuals: dict
    series: object = field(default=None, repr=False)
    constants: object = field(default=None, repr=False)
    T_c: float = math.nan
    error: str | None = None


def _kernel_samples(series, count, tau_min, tau_max, rng):
    """Kernel centres on or inside the surface at random snapshot times."""
    snaps = series.snapshots
    n = series.n
    out = []
    for _ in range(count):
        t, shape = snaps[int(rng.integers(len(snaps)))]
        j = int(rng.integers(shape.N))
        lam = float(rng.uniform(0.0, 1.0))
        tau = float(np.exp(rng.uniform(np.log(tau_min), np.log(tau_max))))
        P = shape.points()[j] * lam
        if n == 1:
            Y = (float(P[0]), float(P[1]))
        else:
            psi = float(rng.uniform(0.0, 2.0 * np.pi))
            Y = (float(P[0] * np.cos(psi)), float(P[0] * np.sin(psi)), float(P[1]))
        out.append((t, shape, KernelPoint(Y, t + tau)))
    return out


def _round_bracket(cfg, M0):
    r = M0.r
    return float(r.min() ** 2 / (2 * cfg.n)), float(r.max() ** 2 / (2 * cfg.n))


def residual_run(cfg: ExperimentConfig, N: int):
    """Short run with snapshots every ``residual_dt_factor * h^2`` for residual studies."""
    shape = make_shape(cfg.shape, cfg.params, cfg.n, N)
    dt = cfg.residual_dt_factor * shape.h**2
    steps = math.ceil(cfg.residual_t_end / dt)
    fc = FlowConfig(t_end=steps * dt, cfl_factor=cfg.cfl_factor,
                    blowup_threshold=cfg.blowup_threshold, snapshot_interval=dt,
                    max_steps=cfg.max_steps)
    return run(shape, fc)


def residual_study(cfg: ExperimentConfig) -> dict:
    """Residuals of the f and |A|^2 evolution equations and the weighted identity per grid."""
    table = {"N": [], "f_evolution": [], "A_evolution": [], "identity": []}
    for N in cfg.grids:
        series = residual_run(cfg, N)
        origin = (0.0,) * (cfg.n + 1)
        # any centre time beyond the window gives a smooth, resolved kernel
        kp = KernelPoint(origin, 2.0 * series.final[0] + 0.1)
        table["N"].append(N)
        table["f_evolution"].append(residual_f_evolution(series, cfg.residual_t_min).max_residual)
        ra = residual_A_evolution(series, cfg.residual_t_min)
        table["A_evolution"].append(ra.max_residual if ra.applicable else None)
        table["identity"].append(check_identity(series, kp, cfg.residual_t_min).max_residual)
    orders = {}
    for key in ("f_evolution", "A_evolution", "identity"):
        vals = table[key]
        if len(vals) >= 2 and all(v is not None and v > 0 for v in vals):
            orders[key] = fitted_order(table["N"], vals)
        else:
            orders[key] = None
    return {"table": table, "orders": orders, "target": ORDER_TARGET}


def run_grid(cfg: ExperimentConfig, N: int, rng) -> GridResult:
    M0 = make_shape(cfg.shape, cfg.params, cfg.n, N)
    series = run(M0, cfg.flow_config())
    verdicts, summary = {}, {"termination": series.termination,
                             "steps": len(series.diagnostics) - 1,
                             "t_final": series.final[0]}
    f_pos = bool(np.all(series.diagnostics.f_min > 0))
    verdicts["star_shape"] = _verdict(f_pos, "support reciprocal stays positive")
    est = estimate_blowup_time(series)
    T_c = est.t_c
    summary["blowup"] = asdict(est)
    lo, hi = _round_bracket(cfg, M0)
    summary["sphere_bracket"] = [lo, hi]
    verdicts["blowup_extrapolation"] = _verdict(est.confident, "type-I extrapolation of 1/max|A|^2")
    verdicts["avoidance"] = _verdict(lo * (1 - 1e-3) <= T_c <= hi * (1 + 1e-3),
                                     "inscribed/circumscribed sphere bracket", T_c=T_c, bracket=[lo, hi])

    snaps_t = series.times
    T_w = float(snaps_t[snaps_t <= cfg.window_fraction * T_c].max())
    win = series.window(T_w)
    T0 = min(cfg.T0, T_w) if cfg.T0 else T_w
    k = compute_constants(win, T0)
    summary.update(window_end=T_w, T0=T0)

    hz = theorem1_T(k)
    gb = verify_gradient_bound(win, k, hz.T)
    summary["gradient_estimate"] = {
        "T": hz.T, "T_statement": hz.T_statement, "G": hz.G,
        "bound_proved": 2 * k.c3 * k.f0**2, "bound_stated": 2 * k.c3 * k.f0,
        "margin_proved": gb.margin_proved, "stated_holds": gb.stated_holds,
        "margin_stated": gb.margin_stated,
    }
    verdicts["gradient_bound"] = _verdict(gb.verdict, "gradient estimate proved bound f <= 2 c3 f0^2",
                                          margin=gb.margin_proved)
    verdicts["gradient_bound_stated"] = _verdict(
        PASS if gb.stated_holds else FAIL, "gradient estimate stated bound f <= 2 c3 f0 (informational)",
        margin=gb.margin_stated)

    lb = theorem2_lower_bound(k)
    summary["blowup_lower_bound"] = {"T_lower": lb.T_lower, "T_lower_expanded": lb.T_lower_expanded}
    verdicts["blowup_lower_bound"] = _verdict(lb.T_lower < T_c, "blow-up time lower bound",
                                              margin=T_c - lb.T_lower)

    ph = phi_monitor(win, k)
    summary["phi"] = {"B": k.B, "worst_increase": ph.worst_increase,
                      "critical_residual_max": float(np.max(ph.critical_residual))
                      if ph.critical_residual.size else None,
                      "kato_equality_error": ph.kato_equality_error}
    verdicts["phi_monitor"] = _verdict(ph.verdict, "maximum of log|A|^2 + 2 log f - B t non-increasing",
                                       margin=-ph.worst_increase)
    verdicts["kato"] = _verdict(ph.kato_verdict, "Kato-type inequality for |grad A|^2",
                                defect=ph.kato_max_defect)

    # the hypothesis 24 c2 c3^2 f0^4 s < 1 is an equality at s = T, so probe just inside
    barrier = barrier_analysis(BarrierCubic(hz.T * (1.0 - BARRIER_INSET), k.c2, k.c3, k.f0))
    summary["barrier"] = {
        "roots": barrier.roots.tolist(), "agreement": barrier.agreement,
        "s": hz.T * (1.0 - BARRIER_INSET), "hypothesis": barrier.hypothesis,
        "alpha": barrier.alpha,
    }
    barrier_ok = barrier.agreement <= 1e-10 and (
        not barrier.hypothesis
        or (barrier.slope_ok and barrier.h_f0_positive and barrier.interval_min_negative
            and math.isfinite(barrier.alpha)))
    verdicts["barrier"] = _verdict(barrier_ok, "cubic barrier root in (f0, 2 c3 f0^2)")

    origin = (0.0,) * (cfg.n + 1)
    kp0 = KernelPoint(origin, T_c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        mono = check_monotonicity(win, kp0, c1=k.c1, f_inf=k.f_inf)
        j_snap, j_node = _argmax_f(win)
        t_star, shape_star = win.snapshots[j_snap]
        P = shape_star.points()[j_node]
        Y = tuple(float(x) for x in P) if cfg.n == 1 else (float(P[0]), 0.0, float(P[1]))
        kp_star = KernelPoint(Y, t_star)
        try:
            mono_star = check_monotonicity(win, kp_star, c1=k.c1, f_inf=k.f_inf)
        except ValueError:
            mono_star = None
        c = q_bound_constant(cfg.n)
        X0 = k.X0_diam
        qs = [q_value(s, t, kp) for t, s, kp in _kernel_samples(
            win, cfg.kernel_samples, cfg.tau_min, cfg.tau_max, rng)]
    summary["monotonicity"] = {
        "origin": {"margin_drive": mono.worst_margin_drive, "margin_sup": mono.worst_margin_sup,
                   "tolerance": mono.tolerance, "identity_residual": mono.identity.max_residual},
        "f_max_centre": None if mono_star is None else {
            "t": t_star, "Y": list(Y), "margin_drive": mono_star.worst_margin_drive,
            "margin_sup": mono_star.worst_margin_sup, "tolerance": mono_star.tolerance},
    }
    star_ok = NA if mono_star is None else mono_star.holds
    verdicts["monotonicity"] = _verdict(mono.holds, "weighted monotonicity inequality (origin centre)",
                                        margin=min(mono.worst_margin_drive, mono.worst_margin_sup))
    verdicts["monotonicity_f_max"] = _verdict(star_ok, "weighted monotonicity inequality (centre at max f)")
    q_violations = int(sum(q > c * X0 for q in qs))
    summary["q_bound"] = {"c": c, "diameter": X0, "samples": len(qs), "q_max": max(qs),
                          "violations": q_violations}
    verdicts["q_bound"] = _verdict(q_violations == 0, "Gaussian integral bound Q <= c |X0|",
                                   margin=c * X0 - max(qs))
    return GridResult(N, summary, verdicts, {}, series=series, constants=k, T_c=T_c)


def _argmax_f(series):
    best, arg = -math.inf, (0, 0)
    for i, (t, s) in enumerate(series.snapshots):
        f = compute_fields(s).f
        j = int(np.argmax(f))
        if f[j] > best:
            best, arg = float(f[j]), (i, j)
    return arg


@dataclass
class RunReport:
    experiment_id: str
    config: dict
    grids: list  # GridResult per grid
    residuals: dict
    cases: dict
    verdicts: dict
    wall_clock: float = 0.0

    @property
    def authoritative(self) -> GridResult:
        return self.grids[-1]

    @property
    def passed(self) -> bool:
        return all(v["status"] != FAIL for v in self.verdicts.values())

    def to_dict(self) -> dict:
        # wall-clock time is left out so reports stay byte-identical across runs
        return _clean({
            "experiment_id": self.experiment_id,
            "config": self.config,
            "verdicts": self.verdicts,
            "cases": self.cases,
            "residual_convergence": self.residuals,
            "grids": [{
                "N": g.N, "error": g.error, "T_c": g.T_c,
                "constants": None if g.constants is None else g.constants.as_dict(),
                "summary": g.summary, "verdicts": g.verdicts,
            } for g in self.grids],
        })


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def run_experiment(config: ExperimentConfig) -> RunReport:
    """Run every check on every grid; the largest grid decides the verdicts."""
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    results = []
    for N in config.grids:
        log.info("grid N=%d", N)
        try:
            results.append(run_grid(config, N, rng))
        except (ValueError, ArithmeticError) as exc:
            log.warning("grid N=%d failed: %s", N, exc)
            results.append(GridResult(N, {}, {}, {}, error=str(exc)))
    try:
        residuals = residual_study(config)
    except (ValueError, ArithmeticError) as exc:
        residuals = {"error": str(exc)}
    cases = verify_case_inequalities(config.mc_samples, config.n, seed=config.seed)
    top = results[-1]
    verdicts = {}
    names = sorted({k for g in results for k in g.verdicts})
    for name in names:
        if name in top.verdicts:
            verdicts[name] = top.verdicts[name]
        else:
            verdicts[name] = _verdict(NA, name, reason=top.error)
    if top.error:
        verdicts["grid"] = _verdict(NA, "authoritative grid", reason=top.error)
    verdicts["case_inequalities"] = _verdict(cases.total_violations == 0,
                                             "pointwise case inequalities of the Q bound")
    orders = residuals.get("orders", {})
    for key, anchor in (("f_evolution", "evolution equation of f"),
                        ("A_evolution", "evolution equation of |A|^2"),
                        ("identity", "weighted integral identity")):
        p = orders.get(key)
        status = NA if p is None else (PASS if p >= ORDER_TARGET else FAIL)
        verdicts[f"order_{key}"] = _verdict(status, f"{anchor}: residual order >= {ORDER_TARGET}",
                                            order=p)
    cfg_dict = asdict(config)
    cfg_dict.pop("out_dir")
    return RunReport(
        experiment_id=config.id, config=cfg_dict, grids=results, residuals=residuals,
        cases={"samples": cases.samples, "violations": cases.violations},
        verdicts=verdicts, wall_clock=time.perf_counter() - start,
    )


def report_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(x) -> str:
    return "nan" if x is None or not math.isfinite(x) else f"{x:.12g}"


def emit_outputs(report: RunReport, out_dir) -> dict:
    """Write diagnostics.csv, snapshots.csv and report.json for the authoritative grid."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {name: out / name for name in ("diagnostics.csv", "snapshots.csv", "report.json")}
    top = report.authoritative
    try:
        with open(paths["report.json"], "w", newline="\n") as fh:
            fh.write(report_json(report))
        if top.series is None:
            return paths
        _write_diagnostics(paths["diagnostics.csv"], top)
        with open(paths["snapshots.csv"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "node", "angle", "r"])
            for t, s in top.series.snapshots:
                for j, (a, r) in enumerate(zip(s.angles, s.r)):
                    w.writerow([_fmt(t), j, _fmt(a), _fmt(r)])
    except OSError as exc:
        raise OSError(f"failed writing outputs under {out}: {exc}") from exc
    return paths


def _write_diagnostics(path, grid: GridResult):
    series, k = grid.series, grid.constants
    n = series.n
    kp = KernelPoint((0.0,) * (n + 1), grid.T_c)
    extra = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        for t, s in series.snapshots:
            phi = float(phi_field(s, t, k.B).max())
            if t < kp.s:
                wi = weighted_integrals(s, t, kp)
                extra[t] = (phi, wi.f_mass, wi.drive)
            else:
                extra[t] = (phi, math.nan, math.nan)
    d = series.diagnostics
    blank = (math.nan, math.nan, math.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTIC_COLUMNS)
        for i in range(len(d)):
            row = [getattr(d, c)[i] for c in d.COLUMNS]
            row += extra.get(d.t[i], blank)
            w.writerow([_fmt(x) for x in row])
