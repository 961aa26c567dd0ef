"""Constants, the cubic barrier and the two time bounds on a flower curve.

The gradient estimate holds up to a horizon T built from the initial data;
the barrier h(r) = s c2 r^3 - r + c3 f0^2 has a root alpha between f0 and
2 c3 f0^2 that caps f.  The same constants give a lower bound on the
blow-up time, far below the measured one but strictly positive.
"""

from starmcf import (
    BarrierCubic, FlowConfig, barrier_analysis, compute_constants, estimate_blowup_time,
    make_shape, phi_monitor, run, theorem1_T, theorem2_lower_bound, verify_gradient_bound,
)

shape = make_shape("flower", {"eps": 0.3, "k": 3}, 1, 256)
series = run(shape, FlowConfig())
T_c = estimate_blowup_time(series).t_c
win = series.window(0.39)  # H stays bounded on this window
k = compute_constants(win, T0=0.39)
for name, value in k.as_dict().items():
    print(f"{name:>10} = {value:.6g}")

hz = theorem1_T(k)
bound = verify_gradient_bound(win, k, hz.T)
print(f"\nhorizon T = {hz.T:.3e}; max f on [0, T] leaves margin {bound.margin_proved:.3f} "
      f"below 2 c3 f0^2 = {2 * k.c3 * k.f0**2:.3f} -> {bound.verdict}")

rep = barrier_analysis(BarrierCubic(0.999 * hz.T, k.c2, k.c3, k.f0))
print(f"barrier roots {rep.roots}, alpha = {rep.alpha:.6f}, "
      f"Cardano vs bisection {rep.agreement:.1e}")

lb = theorem2_lower_bound(k)
print(f"\nblow-up lower bound {lb.T_lower:.3e} < measured T_c {T_c:.5f}")
ph = phi_monitor(win, k)
print(f"max Phi never rises by more than {max(ph.worst_increase, 0.0):.1e} -> {ph.verdict}")
