"""Epsilon-monotonicity of circle cocycles.

A circle-parametrized SL(2) cocycle is epsilon-monotonic when the projective
image of every direction sweeps the circle with slope above epsilon.  The
full rotation t |-> R_{2 pi t} has slope exactly 2 pi; any constant cocycle
has slope zero everywhere.
"""

import numpy as np
from fractions import Fraction

from cocycle_lab import (CocycleFactor, CocycleField, SkewProduct, TorusAutomorphism,
                         TrigPolynomial, constant_cocycle, epsilon_monotonicity_test,
                         make_leaf, restrict_to_leaf)

cat = TorusAutomorphism(np.array([[2, 1], [1, 1]]))
skew = SkewProduct(cat, TrigPolynomial(constant=0.0, ndim=2))
leaf = make_leaf(skew, (Fraction(0), Fraction(0)), 1)

full_rotation = CocycleField(1, [CocycleFactor(np.array([[0.0, 1.0], [-1.0, 0.0]]),
                                               TrigPolynomial.constant_field(0.0),
                                               winding=(0, 0, 1))])
B = restrict_to_leaf(full_rotation, skew, leaf)
res = epsilon_monotonicity_test(B, epsilon=6.0, t_grid=2048, w_samples=8, seed=0)
print("full rotation: margin", res.margin, " (2 pi =", 2 * np.pi, ")")
print("passes epsilon = 6.0:", res.passed)

Bc = restrict_to_leaf(constant_cocycle(np.array([[2.0, 1.0], [1.0, 1.0]])), skew, leaf)
for eps in (1e-3, 0.5, 6.0):
    r = epsilon_monotonicity_test(Bc, eps, 512, 4, 0)
    print(f"constant cocycle vs epsilon {eps:g}: margin {r.margin:.1e}, passed {r.passed}")

print("\nrefining the grid can only shrink the margin:")
for grid in (256, 512, 1024, 2048):
    r = epsilon_monotonicity_test(B, 1.0, grid, 4, 0)
    print(f"  grid {grid:4d}: margin {r.margin:.12f}")
