"""A tour of Bregman distances on the real line.

The quartic f(x) = x^4 gives a distance that is far from symmetric; the
quadratic (4/5) x^2 gives a scaled squared Euclidean one. We check the
three-point identity, compute a conjugate numerically, and project onto a box.
"""
import numpy as np

from bregfix import core
from bregfix.core import Box

quartic = core.quartic()
quad = core.section6_quadratic()

print("Asymmetry of the quartic distance")
for x, y in [(0.9, 0.3), (0.3, 0.9)]:
    print(f"  D({x}, {y}) = {core.bregman_distance(quartic, x, y):.6f}")

print("\nThree-point identity residual at (0.2, 0.5, 0.8):")
print(f"  {core.three_point_residual(quartic, 0.2, 0.5, 0.8):.2e}")

print("\nConjugate of x^4 at 4: grid + Brent vs closed form")
num = core.conjugate_numeric(quartic, [4.0], Box.cube(-10, 10))
print(f"  numeric {num:.12f}  closed form {float(quartic.conj(np.array([4.0]))):.12f}")

print("\nV(x, x*) equals D(x, grad f*(x*)):")
x, xs = 0.3, 4.0
print(f"  V = {core.v_function(quartic, x, xs):.6f}  D = {core.bregman_distance(quartic, x, 1.0):.6f}")

c = Box.cube(-1, 1)
for point in (1.7, -0.4):
    p = core.bregman_project(quad, c, point)
    slack = core.projection_variational_slack(quad, c, point)
    print(f"\nprojection of {point} onto [-1, 1]: {p[0]:g} (variational slack {slack:.1e})")
