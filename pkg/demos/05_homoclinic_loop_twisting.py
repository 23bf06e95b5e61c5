"""Homoclinic loop holonomies and the weak twisting diagnostic.

For a constant hyperbolic cocycle every strong holonomy telescopes to the
identity, so the loop fixes the Oseledets directions: not twisting.  One
bump-localized transvection at the homoclinic fiber makes the loop move both
directions uniformly off themselves: twisting at the first power.
"""

import numpy as np
from fractions import Fraction

from cocycle_lab import (HomoclinicLoop, SkewProduct, TorusAutomorphism,
                         TransvectionStep, TrigPolynomial, certify_fiber_bunching,
                         constant_cocycle, find_homoclinic, make_leaf,
                         transvection_perturbation, weak_pinching_test,
                         weak_twisting_test)

cat = TorusAutomorphism(np.array([[2, 1], [1, 1]]))
skew = SkewProduct(cat, TrigPolynomial(constant=0.618034, freqs=[[1, 0]],
                                       cos_coeffs=[0.1], ndim=2))
leaf = make_leaf(skew, (Fraction(0), Fraction(0)), 1)
hom = find_homoclinic(cat, [0.0, 0.0], 0)

A = constant_cocycle(np.diag([np.exp(0.3), np.exp(-0.3)]))
cert = certify_fiber_bunching(A, skew, 24, (5, 5, 4))
loop = HomoclinicLoop(A, skew, leaf, hom, cert)

print("loop rotation number:", round(loop.rotation, 6))
print("loop matrix at t = 0.3 (constant cocycle):\n", loop.holonomy(0.3).entries)

pin = weak_pinching_test(A, skew, leaf, 4000, 4, 0)
print("\npinching:", pin.verdict, f"(leaf exponent {pin.estimate:.4f})")
before = weak_twisting_test(A, skew, loop, pin, 3, 32, 1e-2, 0)
print("twisting before perturbation:", before.verdict,
      "fractions per power:", before.fractions)

print("\n=== insert one transvection near the homoclinic fiber ===")
v = np.array([np.cos(0.9), np.sin(0.9)])
Ahat = transvection_perturbation(A, skew, hom, [TransvectionStep(v, 0.25, 1, 0)],
                                 radius=0.1)
cert2 = certify_fiber_bunching(Ahat, skew, 24, (5, 5, 4))
loop2 = HomoclinicLoop(Ahat, skew, leaf, hom, cert2)
print("loop matrix at t = 0.3 (perturbed):\n", loop2.holonomy(0.3).entries)
pin2 = weak_pinching_test(Ahat, skew, leaf, 4000, 4, 0)
after = weak_twisting_test(Ahat, skew, loop2, pin2, 3, 32, 1e-2, 0)
print("twisting after perturbation:", after.verdict,
      "at power", after.j_used, "on", f"{100 * after.fractions[0]:.0f}% of samples")
