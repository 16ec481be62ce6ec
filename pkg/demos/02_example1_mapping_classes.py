"""Which mapping classes does T(x) = x^2 on [0, 0.9] belong to?

Every class is checked over all ordered pairs of a 0.01 grid. Violations come
with a witness pair; the Bregman class with f = x^4 is swept over alpha.
"""
from bregfix import core, mappings as mp

t = mp.square()
bf = core.quartic()

for check in (mp.check_nonexpansive, mp.check_condition_C):
    print(check(t, 91).to_line())

print("\nalpha-nonexpansive, alpha = 0.0 ... 0.9")
for a in mp.DEFAULT_ALPHAS:
    print(" ", mp.check_alpha_nonexpansive(t, a, 91).to_line())

print("\nBregman generalized alpha-nonexpansive with f = x^4")
for a in (0.4, 0.5, 0.52, 0.53, 0.6, 0.9):
    print(" ", mp.check_bregman_generalized_alpha(bf, t, a, 91).to_line())

print("\nThe alpha = 1/2 case fails at (0.9, 0.65); it holds on the grid from about 0.525 up.")
print("fixed points:", [p.tolist() for p in mp.find_fixed_points(t, 91)])
