"""Ishikawa, Noor and the two Bregman schemes side by side.

All four are driven towards the fixed point 0 of T x = x^2 on [0, 0.9] from
x1 = 0.9; the Bregman schemes use f = x^4.

The Halpern run maps z back to the primal space. Its literal form keeps z as
a dual vector and feeds it to grad f again, which only makes sense when
grad f is close to the identity. Here it leaves the domain of f within a few
steps; the demo shows that too.
"""
from bregfix.errors import DomainError
from bregfix import core, mappings as mp
from bregfix import iterations as it
from bregfix.core import Box

c = Box.cube(0, 0.9)
t = mp.square(c)
bf = core.quartic()
schedules = {
    "ishikawa": it.constant_schedule(0.5, 0.5, 0.5),
    "noor": it.constant_schedule(0.5, 0.5, 0.5),
    "bregman_noor": it.constant_schedule(0.5, 0.5, 0.5),
    "bregman_halpern": it.harmonic_schedule(0.5, 0.5),
}

for scheme, sched in schedules.items():
    cfg = it.IterationConfig(scheme, t, c, [0.9], sched, bf=bf, anchor_u=[0.9], max_iter=60,
                             z_space="primal" if scheme == "bregman_halpern" else None)
    trace = it.run(cfg)
    xs = trace.iterates()[:, 0]
    fej = it.check_fejer_monotonicity(trace, bf, [0.0], cfg.ref_orientation)
    print(f"{scheme:16s} x_11={xs[10]:.3e} x_61={xs[-1]:.3e} "
          f"fejer_violations={len(fej.violations)}")

literal = it.IterationConfig("bregman_halpern", t, c, [0.9], schedules["bregman_halpern"], bf=bf,
                             anchor_u=[0.9], max_iter=60, z_space="dual")
try:
    it.run(literal)
except DomainError as exc:
    print(f"\nliteral dual-z Halpern: {exc}")

print("\nThe Halpern run is anchored at u = 0.9 with gamma_n = 1/(n+1), so it")
print("approaches 0 only as fast as the anchor weight dies out.")
rep = it.check_control_conditions(it.harmonic_schedule(0.5, 0.5), 100_000)
print(f"gamma -> 0: {rep.gamma_to_zero}  sum gamma divergent: {rep.gamma_sum_divergent}")
