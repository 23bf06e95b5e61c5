"""The partially hyperbolic base: cat map times circle rotations.

The base is f(x, t) = (g x, t + theta(x)) with g a hyperbolic torus
automorphism.  Periodic points of g are exact rationals, homoclinic points
are eigenline intersections, and the center holonomies between nearby fibers
are convergent series of shift differences.
"""

import numpy as np
from fractions import Fraction

from cocycle_lab import (SkewProduct, TorusAutomorphism, TrigPolynomial,
                         center_holonomy_shift, find_homoclinic,
                         homoclinic_center_shifts, make_leaf, periodic_base_points)

cat = TorusAutomorphism(np.array([[2, 1], [1, 1]]))
theta = TrigPolynomial(constant=0.618034, freqs=[[1, 0]], cos_coeffs=[0.1], ndim=2)
skew = SkewProduct(cat, theta)

print("=== hyperbolicity data ===")
print("expansion :", cat.expansion)
print("contraction:", cat.contraction)
print("unstable direction:", cat.e_u)

print("\n=== periodic points (exact rationals) ===")
for n in (1, 2, 3):
    pts = periodic_base_points(cat, n)
    print(f"period dividing {n}: {len(pts)} points;", "first:", pts[:3])

leaf = make_leaf(skew, (Fraction(0), Fraction(0)), 1)
print("\nfixed leaf rotation number:", leaf.rotation_number,
      "(rational:", leaf.rational_rotation, ")")

print("\n=== a homoclinic point of the origin ===")
hom = find_homoclinic(cat, [0.0, 0.0], 0)
print("point:", hom.point, " lattice offset:", hom.lattice_offset)
print("forward distances: ", [round(hom.distance_to_fixed(n), 5) for n in range(5)])
print("backward distances:", [round(hom.distance_to_fixed(-n), 5) for n in range(5)])

print("\n=== center holonomy between nearby fibers ===")
x = np.array([0.12, 0.34])
y = cat.stable_offset(x, 0.1)
shift = center_holonomy_shift(skew, x, y, "stable")
print(f"stable shift over distance 0.1: {shift:+.8f}")
du, ds = homoclinic_center_shifts(skew, hom)
print(f"homoclinic loop shifts: unstable {du:+.6f}, stable {ds:+.6f}")
print(f"loop rotation (their sum mod 1): {(du + ds) % 1.0:.6f}")
