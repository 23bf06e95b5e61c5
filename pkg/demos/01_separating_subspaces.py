"""Symplectic transvections and subspace separation.

A transvection u |-> u + a omega(u, v) v is a rank-one symplectic shear:
it fixes the omega-orthogonal hyperplane of its direction and is symplectic
for every strength.  Products of k such shears, each as close to the identity
as we like, move a subspace off a partner it meets in dimension k.
"""

import numpy as np

from cocycle_lab import (Subspace, intersection_dim, separate_many, separate_pair,
                         standard_form, transvection_matrix)

form = standard_form(3)
rng = np.random.default_rng(7)

print("=== a single transvection in the plane ===")
f1 = standard_form(1)
tau = transvection_matrix(f1, [1.0, 0.0], 1.0)
print("tau_{e1,1} =\n", tau.entries)
print("symplectic drift:", tau.drift)

print("\n=== separating a pair that meets in a plane ===")
common = rng.standard_normal((6, 2))
V = Subspace.from_spanning(np.hstack([common, rng.standard_normal((6, 1))]))
W = Subspace.from_spanning(np.hstack([common, rng.standard_normal((6, 1))]))
print("dim V =", V.dim, " dim W =", W.dim, " dim(V cap W) =", intersection_dim(V, W))

sigma, steps = separate_pair(V, W, delta=0.05, rng_seed=1, form=form)
print("transvections used:", len(steps), "(one per intersection dimension)")
for i, s in enumerate(steps):
    print(f"  step {i}: strength {s.strength:.4f}, intersection {s.dim_before} -> {s.dim_after}")
moved = V.apply(sigma.entries)
print("after:  dim(sigma V cap W) =", intersection_dim(moved, W))
print("||sigma - I|| =", np.linalg.norm(sigma.entries - np.eye(6), 2))

print("\n=== one map separating three pairs at once ===")
pairs = []
for _ in range(3):
    X = rng.standard_normal((6, 1))
    pairs.append((Subspace.from_spanning(np.hstack([X, rng.standard_normal((6, 2))])),
                  Subspace.from_spanning(np.hstack([X, rng.standard_normal((6, 2))]))))
print("before:", [intersection_dim(V, W) for V, W in pairs])
sigma, _ = separate_many(pairs, delta=0.1, rng_seed=2, form=form)
print("after: ", [intersection_dim(V.apply(sigma.entries), W) for V, W in pairs])
print("||sigma - I|| =", np.linalg.norm(sigma.entries - np.eye(6), 2), "<= 0.1")
