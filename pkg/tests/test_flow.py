import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starmcf import FlowConfig, estimate_blowup_time, make_shape, rhs, run, step
from starmcf import _kernels
from starmcf.flow import _grid_tables, stable_dt
from starmcf.geometry import StarShape, compute_fields

FLOWER = {"eps": 0.3, "k": 3}


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"cfl_factor": 0.0}, {"cfl_factor": 0.6}, {"t_end": -1.0},
        {"blowup_threshold": 0.0}, {"snapshot_interval": 0.0}, {"max_steps": 0},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            FlowConfig(**kw)


class TestRhs:
    @pytest.mark.parametrize("n,R", [(1, 1.0), (1, 2.0), (2, 1.0), (2, 0.5)])
    def test_round(self, n, R):
        # dR/dt = -n/R, so d(log R)/dt = -n/R^2
        np.testing.assert_allclose(rhs(make_shape("round", {"R0": R}, n, 33)), -n / R**2, rtol=1e-14)

    def test_flower_tip(self):
        s = make_shape("flower", FLOWER, 1, 1024)
        assert rhs(s)[0] == pytest.approx(-(400 / 169) / 1.3, abs=2e-5)

    @pytest.mark.parametrize("preset,params,n,N", [
        ("flower", FLOWER, 1, 128), ("flower", {"eps": 0.25, "k": 4}, 2, 65),
        ("ellipse", {"a": 1.4, "b": 1.0}, 2, 65),
    ])
    def test_compiled_matches_numpy(self, preset, params, n, N):
        s = make_shape(preset, params, n, N)
        cot, _ = _grid_tables(s)
        out = np.empty(N)
        _kernels.rhs_into(n, s.v, s.h, cot, out)
        np.testing.assert_allclose(out, rhs(s), rtol=1e-12, atol=1e-12)
        dt = stable_dt(s)
        np.testing.assert_allclose(_kernels.rk4(n, s.v, dt, s.h, cot), step(s, dt).v,
                                   rtol=0, atol=1e-13)

    def test_summary_matches_fields(self):
        s = make_shape("flower", {"eps": 0.25, "k": 4}, 2, 65)
        cot, sin = _grid_tables(s)
        f_max, f_min, H_max, A2_max, area, g_max = _kernels.summary(2, s.v, s.h, cot, sin)
        F = compute_fields(s)
        assert f_max == pytest.approx(F.f.max(), rel=1e-13)
        assert f_min == pytest.approx(F.f.min(), rel=1e-13)
        assert H_max == pytest.approx(F.H.max(), rel=1e-13)
        assert A2_max == pytest.approx(F.A_norm_sq.max(), rel=1e-13)


class TestRun:
    def test_snapshots_exact(self):
        s = make_shape("flower", FLOWER, 1, 64)
        series = run(s, FlowConfig(t_end=0.05, snapshot_interval=0.01))
        assert series.termination == "reached_t_end"
        np.testing.assert_array_equal(series.times, [0.0, 0.01, 0.02, 0.03, 0.04, 0.05])
        assert series.final[0] == 0.05
        assert series.diagnostics.t[0] == 0.0
        assert np.all(np.diff(series.diagnostics.t) > 0)

    def test_no_snapshots(self):
        s = make_shape("round", {}, 1, 32)
        series = run(s, FlowConfig(t_end=0.01, snapshot_interval=None))
        assert len(series.snapshots) == 1
        assert series.final[0] == pytest.approx(0.01, abs=0)

    def test_step_limit(self):
        series = run(make_shape("round", {}, 1, 64), FlowConfig(t_end=1.0, max_steps=10))
        assert series.termination == "step_limit"
        assert len(series.diagnostics) == 11

    def test_circle_radius_short(self):
        series = run(make_shape("round", {}, 1, 64), FlowConfig(t_end=0.1, snapshot_interval=0.05))
        for t, s in series.snapshots:
            np.testing.assert_allclose(s.r, math.sqrt(1 - 2 * t), atol=1e-10)

    def test_sphere_radius_short(self):
        series = run(make_shape("round", {}, 2, 33), FlowConfig(t_end=0.1, snapshot_interval=0.05))
        for t, s in series.snapshots:
            np.testing.assert_allclose(s.r, math.sqrt(1 - 4 * t), atol=1e-10)

    def test_curve_area_rate(self):
        # enclosed area of an embedded closed curve drops at rate 2 pi
        s = make_shape("flower", FLOWER, 1, 256)
        series = run(s, FlowConfig(t_end=0.1, snapshot_interval=0.05))
        enclosed = [0.5 * np.sum(sh.r**2) * sh.h for _, sh in series.snapshots]
        np.testing.assert_allclose(np.diff(enclosed) / 0.05, -2 * np.pi, rtol=1e-4)

    def test_window(self, flower_128):
        series, _ = flower_128
        w = series.window(0.1)
        assert w.times[-1] == pytest.approx(0.1)
        assert w.diagnostics.t[-1] <= 0.1 + 1e-12
        assert w.termination == "reached_t_end"


class TestBlowup:
    def test_circle(self, circle_64):
        series, est = circle_64
        assert series.termination == "blowup_detected"
        assert est.confident
        assert est.t_c == pytest.approx(0.5, rel=1e-3)

    def test_flower_matches_area_law(self, flower_128):
        # curve shortening: T_c = enclosed area / (2 pi) = (1 + eps^2 / 2) / 2
        _, est = flower_128
        assert est.t_c == pytest.approx(0.5225, rel=1e-3)

    def test_requires_blowup(self):
        series = run(make_shape("round", {}, 1, 32), FlowConfig(t_end=0.01))
        with pytest.raises(ValueError, match="no blow-up"):
            estimate_blowup_time(series)

    def test_ellipse_3d(self):
        # a near-round spheroid shrinks to a point a little after its volume-equivalent sphere
        series = run(make_shape("ellipse", {"a": 1.1, "b": 1.0}, 2, 65), FlowConfig())
        est = estimate_blowup_time(series)
        assert est.confident
        assert 0.25 < est.t_c < 1.1**2 / 4


@settings(max_examples=15, deadline=None)
@given(lam=st.floats(0.25, 4.0), eps=st.floats(0.0, 0.35), k=st.integers(2, 5))
def test_scaling_covariance_of_velocity(lam, eps, k):
    s = make_shape("flower", {"eps": eps, "k": k}, 1, 64)
    np.testing.assert_allclose(rhs(s.scaled(lam)), rhs(s) / lam**2, rtol=1e-12, atol=1e-15)


@settings(max_examples=10, deadline=None)
@given(lam=st.sampled_from([0.5, 2.0, 4.0]))
def test_scaled_flow_is_rescaled_in_time(lam):
    s = make_shape("flower", FLOWER, 1, 64)
    a = run(s, FlowConfig(t_end=0.02, snapshot_interval=0.01))
    b = run(s.scaled(lam), FlowConfig(t_end=0.02 * lam**2, snapshot_interval=0.01 * lam**2))
    for (_, sa), (_, sb) in zip(a.snapshots, b.snapshots):
        np.testing.assert_allclose(sb.r, lam * sa.r, rtol=1e-6)


def test_invalid_state_rejected():
    with pytest.raises(Exception):
        StarShape(1, np.full(32, np.inf))
