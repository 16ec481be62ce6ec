"""Bregman Halpern iteration for f = (4/5) x^2, T x = x / 5, u = 0.1.

Reproduces the 42-row reference table and shows the run settling at the
fixed point 0, the Bregman projection of u onto F(T) = {0}.
"""
from bregfix import experiments as ex
from bregfix.iterations import run

rep = ex.reproduce_table1()
print("\n".join(rep.lines()))

trace = run(ex.section6_config())
print("\n  n        z_n         y_n      x_{n+1}")
for r in trace.rows[:5] + trace.rows[-3:]:
    print(f"{r.n:3d} {r.z[0]:11.7f} {r.y[0]:11.7f} {r.x_next[0]:11.7f}")

print("\nWith z taken back to the primal space the first z would be:")
cfg = ex.section6_config(max_iter=1)
cfg.z_space = "primal"
print(f"  {run(cfg).rows[0].z[0]:.4f}  (reference table: -0.7680)")
