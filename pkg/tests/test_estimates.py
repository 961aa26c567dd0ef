import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starmcf import FlowConfig, make_shape, run
from starmcf.estimates import (
    FAIL, NA, PASS, BarrierCubic, Constants, barrier_analysis, barrier_h, bisection_roots,
    cardano_roots, compute_constants, fitted_order, phi_monitor, residual_A_evolution,
    residual_f_evolution, theorem1_T, theorem2_lower_bound, verify_gradient_bound,
)

C1 = 8 / math.sqrt(3)  # Q-bound constant for curves


def round_constants(cH=2.0, T0=0.2):
    c3 = C1 * 2.0
    return Constants(f0=1.0, X0_diam=2.0, c=C1, c1=2 * cH, c2=C1 * 2 * cH * 2.0, c3=c3,
                     cH=cH, c2_blowup=cH * C1 * 2.0, f_inf=1.0, B=1.1 * 4 * cH, T0=T0, n=1)


class TestConstants:
    def test_round_from_run(self):
        series = run(make_shape("round", {}, 1, 128), FlowConfig(t_end=0.25, snapshot_interval=0.01))
        k = compute_constants(series, 0.25)
        assert k.f0 == pytest.approx(1.0, rel=1e-14)
        assert k.X0_diam == pytest.approx(2.0, rel=1e-14)
        assert k.c == pytest.approx(C1, rel=1e-14)
        assert k.c3 == pytest.approx(2 * C1, rel=1e-14)
        # H = 1 / sqrt(1 - 2t) at t = 0.25
        assert k.cH == pytest.approx(math.sqrt(2), rel=1e-8)
        assert k.B == pytest.approx(1.1 * 4 * math.sqrt(2) * math.sqrt(2), rel=1e-8)

    def test_flower_f0(self):
        series = run(make_shape("flower", {"eps": 0.3, "k": 3}, 1, 1024),
                     FlowConfig(t_end=1e-4, snapshot_interval=None))
        k = compute_constants(series, 1e-4)
        # the continuum peak sits between nodes; the grid maximum approaches it from below
        assert 1.6319644753649 * (1 - 1e-4) < k.f0 <= 1.6319644753649
        assert k.X0_diam == pytest.approx(2.367681285214679, rel=1e-5)

    def test_series_too_short(self):
        series = run(make_shape("round", {}, 1, 32), FlowConfig(t_end=0.01))
        with pytest.raises(ValueError, match="before T0"):
            compute_constants(series, 0.1)


class TestTheorems:
    def test_lower_bound_round(self):
        lb = theorem2_lower_bound(round_constants(cH=2.0))
        assert lb.T_lower == pytest.approx(2.6428997918226262e-05, rel=1e-12)
        assert lb.T_lower_expanded == pytest.approx(lb.T_lower, rel=1e-12)
        assert lb.T_lower < 0.5

    def test_lower_bound_rejects_bad_cH(self):
        with pytest.raises(ValueError):
            theorem2_lower_bound(round_constants(cH=math.inf))

    def test_horizon(self):
        k = round_constants()
        hz = theorem1_T(k)
        assert hz.T == pytest.approx(1 / (24 * k.c2 * k.c3**2), rel=1e-14)
        assert hz.T <= k.T0

    def test_horizon_capped_by_T0(self):
        k = round_constants(T0=1e-9)
        assert theorem1_T(k).T == 1e-9

    def test_bound_on_circle(self):
        series = run(make_shape("round", {}, 1, 64), FlowConfig(t_end=0.2, snapshot_interval=0.01))
        k = compute_constants(series, 0.2)
        v = verify_gradient_bound(series, k)
        assert v.verdict == PASS
        assert v.margin_proved > 0
        assert v.stated_holds

    def test_bound_needs_horizon_covered(self):
        series = run(make_shape("round", {}, 1, 64), FlowConfig(t_end=0.01))
        k = round_constants()
        with pytest.raises(ValueError):
            verify_gradient_bound(series, k, T=0.5)

    def test_scaling(self):
        # c, c2 and the products c3 f0, c1 |X0| are scale-free; the times scale like lam^2
        k = round_constants()
        lam = 2.0
        ks = Constants(f0=k.f0 / lam, X0_diam=k.X0_diam * lam, c=k.c, c1=k.c1 / lam,
                       c2=k.c2, c3=k.c3 * lam, cH=k.cH / lam, c2_blowup=k.c2_blowup,
                       f_inf=k.f_inf / lam, B=k.B / lam**2, T0=k.T0 * lam**2)
        assert theorem2_lower_bound(ks).T_lower == pytest.approx(
            lam**2 * theorem2_lower_bound(k).T_lower, rel=1e-12)
        assert theorem1_T(ks).T == pytest.approx(lam**2 * theorem1_T(k).T, rel=1e-12)


class TestBarrier:
    def test_reference_cubic(self):
        # r^3 / 24 - r + 1
        cub = BarrierCubic(s=1.0, c2=1 / 24, c3=1.0, f0=1.0)
        rep = barrier_analysis(cub)
        assert rep.agreement <= 1e-12
        assert rep.alpha == pytest.approx(1.0479527941637765, abs=1e-12)
        # 2 c3 f0^2 = 1 / sqrt(6 c2 s) = 2: the strict hypothesis fails at equality
        assert not rep.hypothesis
        assert abs(barrier_h(rep.alpha, cub)) < 1e-12

    @pytest.mark.parametrize("a,p,q,expected", [
        (1.0, -1.0, 0.0, [-1.0, 0.0, 1.0]),
        (1.0, 0.0, -8.0, [2.0]),
        (2.0, -6.0, 0.0, [-math.sqrt(3), 0.0, math.sqrt(3)]),
        (1.0, 1.0, 2.0, [-1.0]),
    ])
    def test_roots_known(self, a, p, q, expected):
        np.testing.assert_allclose(cardano_roots(a, p, q), expected, atol=1e-12)
        np.testing.assert_allclose(bisection_roots(a, p, q), expected, atol=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(a=st.floats(1e-3, 1e3), q=st.floats(1e-3, 10.0))
    def test_methods_agree(self, a, q):
        card = cardano_roots(a, -1.0, q)
        bis = bisection_roots(a, -1.0, q)
        if card.size == bis.size:
            np.testing.assert_allclose(card, bis, atol=1e-9 * max(1.0, np.abs(bis).max()))
        for r in bis:
            assert abs((a * r * r - 1.0) * r + q) < 1e-8 * max(1.0, a * abs(r) ** 3)

    def test_invalid(self):
        with pytest.raises(ValueError):
            BarrierCubic(s=-1.0, c2=1.0, c3=1.0, f0=1.0)
        with pytest.raises(ValueError):
            BarrierCubic(s=1.0, c2=math.nan, c3=1.0, f0=1.0)
        with pytest.raises(ValueError):
            barrier_analysis(BarrierCubic(s=0.0, c2=1.0, c3=1.0, f0=1.0))
        with pytest.raises(ValueError):
            barrier_h(-1.0, BarrierCubic(s=1.0, c2=1.0, c3=1.0, f0=1.0))

    def test_hypothesis_at_horizon_gives_root(self):
        k = round_constants()
        T = theorem1_T(k).T
        assert not barrier_analysis(BarrierCubic(T, k.c2, k.c3, k.f0)).hypothesis
        rep = barrier_analysis(BarrierCubic(T * (1 - 1e-6), k.c2, k.c3, k.f0))
        assert rep.hypothesis and rep.slope_ok and rep.h_f0_positive and rep.interval_min_negative
        assert k.f0 < rep.alpha < 2 * k.c3 * k.f0**2


class TestPhi:
    def test_circle(self):
        series = run(make_shape("round", {}, 1, 64), FlowConfig(t_end=0.3, snapshot_interval=0.01))
        k = compute_constants(series, 0.3)
        rep = phi_monitor(series, k)
        assert rep.verdict == PASS
        assert rep.kato_verdict == PASS
        # round: log|A|^2 + 2 log f = -2 log(1 - 2t), so max Phi decreases when B > 4 cH f_inf
        assert np.all(np.diff(rep.phi_max) < 0)

    def test_flower(self, flower_128):
        series, est = flower_128
        win = series.window(0.35)
        k = compute_constants(win, 0.35)
        rep = phi_monitor(win, k)
        assert rep.verdict == PASS
        assert rep.kato_verdict == PASS
        assert rep.kato_equality_error <= 1e-12

    def test_small_B_not_applicable(self):
        series = run(make_shape("round", {}, 1, 32), FlowConfig(t_end=0.02, snapshot_interval=0.01))
        k = compute_constants(series, 0.02)
        assert phi_monitor(series, k, B=0.1).verdict == NA

    def test_sphere_kato_not_applicable(self):
        series = run(make_shape("round", {}, 2, 33), FlowConfig(t_end=0.02, snapshot_interval=0.01))
        k = compute_constants(series, 0.02)
        rep = phi_monitor(series, k)
        assert rep.verdict == PASS and rep.kato_verdict == NA


class TestResiduals:
    def test_round_exact(self):
        series = run(make_shape("round", {}, 1, 32), FlowConfig(t_end=0.05, snapshot_interval=1e-3))
        rf = residual_f_evolution(series)
        # only the time difference error remains: O(dt^2)
        assert rf.max_residual < 1e-5
        assert residual_A_evolution(series).max_residual < 1e-4

    def test_sphere_A_not_applicable(self):
        series = run(make_shape("round", {}, 2, 33), FlowConfig(t_end=0.01, snapshot_interval=1e-3))
        assert not residual_A_evolution(series).applicable
        assert residual_f_evolution(series).max_residual < 1e-4

    def test_needs_snapshots(self):
        series = run(make_shape("round", {}, 1, 32), FlowConfig(t_end=0.01, snapshot_interval=None))
        with pytest.raises(ValueError):
            residual_f_evolution(series)

    def test_fitted_order(self):
        N = np.array([64, 128, 256])
        assert fitted_order(N, 3.0 / N**2) == pytest.approx(2.0, rel=1e-12)
