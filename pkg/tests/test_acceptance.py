"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance and runtime bound is pinned here.
"""

import time

import numpy as np
import pytest
from fractions import Fraction

from cocycle_lab.base import find_homoclinic, make_leaf
from cocycle_lab.cli import main
from cocycle_lab.cocycle import (CocycleFactor, CocycleField, constant_cocycle,
                                 cocycle_product, lebesgue_sampler, lyapunov_spectrum,
                                 random_sp_generator, restrict_to_leaf)
from cocycle_lab.diagnostics import (epsilon_monotonicity_test, weak_pinching_test,
                                     weak_twisting_test)
from cocycle_lab.fields import TrigPolynomial
from cocycle_lab.holonomy import (HomoclinicLoop, certify_fiber_bunching, stable_pair,
                                  strong_holonomy, theoretical_holder_constant)
from cocycle_lab.perturb import positivity_search, transvection_perturbation
from cocycle_lab.report import csv_body
from cocycle_lab.scenario import load_scenario
from cocycle_lab.symplectic import (Subspace, TransvectionStep, intersection_dim,
                                    separate_pair, standard_form, symplectic_drift,
                                    transvection_matrix)

from conftest import scenario_path


def report(num, label, elapsed, limit):
    print(f"[PASS] criterion {num}: {label} ({elapsed:.1f}s < {limit}s)")


def oracle_rank_dim(V, W):
    return V.dim + W.dim - np.linalg.matrix_rank(np.hstack([V.basis, W.basis]))


def forced_pair(rng, half_dim, k):
    n = 2 * half_dim
    dim_v = int(rng.integers(k, n - k + 1)) if k < half_dim else half_dim
    dim_v = max(k, min(dim_v, n - k))
    common = rng.standard_normal((n, k))
    V = Subspace.from_spanning(np.hstack([common, rng.standard_normal((n, dim_v - k))]))
    W = Subspace.from_spanning(np.hstack([common, rng.standard_normal((n, n - dim_v - k))]))
    return V, W


def test_criterion_01_symplecticity(bunched_cocycle):
    t0 = time.time()
    rng = np.random.default_rng(101)
    # 1000 random cocycle evaluations across 20 random fields
    total_evals = 0
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 3))
        form = standard_form(d)
        factors = []
        for _ in range(int(rng.integers(1, 4))):
            S = random_sp_generator(rng, d, scale=rng.uniform(0.1, 0.8))
            k = rng.integers(-2, 3, size=3)
            fld = TrigPolynomial(rng.uniform(-0.5, 0.5), [k],
                                 [rng.uniform(-0.5, 0.5)], [rng.uniform(-0.5, 0.5)])
            factors.append(CocycleFactor(S, fld))
        A = CocycleField(d, factors)
        pts = rng.random((50, 3))
        mats = A(pts)
        J = form.matrix
        drift = np.linalg.norm(np.swapaxes(mats, -1, -2) @ J @ mats - J,
                               ord=2, axis=(-2, -1)).max()
        worst = max(worst, float(drift))
        total_evals += 50
    assert total_evals == 1000
    # 200 random transvection products
    for _ in range(200):
        d = int(rng.integers(1, 4))
        form = standard_form(d)
        P = np.eye(2 * d)
        for _ in range(int(rng.integers(1, 6))):
            P = transvection_matrix(form, rng.standard_normal(2 * d),
                                    rng.uniform(-1, 1)).entries @ P
        worst = max(worst, symplectic_drift(P, form))
    elapsed = time.time() - t0
    assert worst <= 1e-10, f"worst drift {worst:.2e}"
    assert elapsed < 10
    report(1, f"1000 evaluations + 200 transvection products, drift <= {worst:.1e}",
           elapsed, 10)


def test_criterion_02_separation():
    t0 = time.time()
    rng = np.random.default_rng(102)
    checked = 0
    for half_dim, ks in ((2, (1, 2)), (3, (1, 2, 3))):
        form = standard_form(half_dim)
        for trial in range(100):
            k = ks[trial % len(ks)]
            V, W = forced_pair(rng, half_dim, k)
            while oracle_rank_dim(V, W) != k:
                V, W = forced_pair(rng, half_dim, k)
            sigma, steps = separate_pair(V, W, 0.05, 1000 + checked, form=form)
            moved = V.apply(sigma.entries)
            assert intersection_dim(moved, W, tol=1e-8) == 0
            assert oracle_rank_dim(moved, W) == 0
            assert len(steps) == k
            for s in steps:
                factor = transvection_matrix(form, s.direction, s.strength).entries
                assert np.linalg.norm(factor - np.eye(2 * half_dim), ord=2) <= 0.05
            checked += 1
    elapsed = time.time() - t0
    assert checked == 200
    assert elapsed < 30
    report(2, "200/200 pairs separated, factor counts exact, factors within 0.05",
           elapsed, 30)


def test_criterion_03_cocycle_identity(bunched_cocycle, skew):
    t0 = time.time()
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(-20, 21))
        n = int(rng.integers(-20, 21))
        x = rng.random(3)
        lhs = cocycle_product(bunched_cocycle, skew, x, m + n).entries
        rhs = (cocycle_product(bunched_cocycle, skew, skew.iterate_exact(x, n), m).entries
               @ cocycle_product(bunched_cocycle, skew, x, n).entries)
        rel = np.linalg.norm(lhs - rhs, ord=2) / max(1.0, np.linalg.norm(lhs, ord=2))
        worst = max(worst, float(rel))
    elapsed = time.time() - t0
    assert worst <= 1e-9
    assert elapsed < 10
    report(3, f"100 random (x, m, n): relative residual <= {worst:.1e}", elapsed, 10)


def test_criterion_04_exponent_ground_truths(skew):
    t0 = time.time()
    diag = load_scenario(scenario_path("diag_constant"))
    rep1 = lyapunov_spectrum(diag.make_cocycle(), diag.make_skew(), lebesgue_sampler,
                             100000, 8, diag.seed)
    assert abs(rep1.exponents[0] - np.log(2)) <= 1e-3
    assert abs(rep1.exponents[1] + np.log(2)) <= 1e-3

    cat = load_scenario(scenario_path("cat_constant"))
    rep2 = lyapunov_spectrum(cat.make_cocycle(), cat.make_skew(), lebesgue_sampler,
                             100000, 8, cat.seed)
    gold = float(np.log((3 + np.sqrt(5)) / 2))
    assert abs(rep2.exponents[0] - gold) <= 1e-3

    rot = load_scenario(scenario_path("rotation"))
    rep3 = lyapunov_spectrum(rot.make_cocycle(), rot.make_skew(), lebesgue_sampler,
                             100000, 8, rot.seed)
    assert np.abs(rep3.exponents).max() <= 2e-3
    elapsed = time.time() - t0
    assert elapsed < 60
    report(4, f"diag {rep1.exponents[0]:+.4f}, cat {rep2.exponents[0]:.4f} "
              f"(gold {gold:.4f}), rotation |lambda| <= {np.abs(rep3.exponents).max():.1e}",
           elapsed, 60)


def test_criterion_05_symplectic_pairing():
    t0 = time.time()
    sc = load_scenario(scenario_path("pairing_d2"))
    rep = lyapunov_spectrum(sc.make_cocycle(), sc.make_skew(), lebesgue_sampler,
                            100000, 8, sc.seed)
    bound = 3 * max(float(rep.stderr.max()), 1e-12)
    assert rep.symmetry_defect <= bound, (rep.symmetry_defect, bound)
    elapsed = time.time() - t0
    assert elapsed < 120
    report(5, f"d=2 pairing defect {rep.symmetry_defect:.1e} <= 3 x stderr {bound:.1e}",
           elapsed, 120)


def test_criterion_06_holonomy_properties(bunched_cocycle, skew):
    t0 = time.time()
    cert = certify_fiber_bunching(bunched_cocycle, skew, 30, (6, 6, 4))
    assert cert.passed
    L = theoretical_holder_constant(bunched_cocycle, skew, cert)
    rng = np.random.default_rng(106)
    worst1 = worst2 = 0.0
    for _ in range(50):
        p = rng.random(3)
        q = stable_pair(skew, p, rng.uniform(0.005, 0.08) * rng.choice([-1, 1]))
        H = strong_holonomy(bunched_cocycle, skew, p, q, "stable", cert)
        # property 3: one Holder constant for every pair
        assert np.linalg.norm(H.matrix - np.eye(2), 2) <= L * H.distance ** cert.alpha
        # property 1: equivariance under the cocycle, j = 1..3
        for j in (1, 2, 3):
            pj, qj = skew.iterate(p, j), skew.iterate(q, j)
            Hj = strong_holonomy(bunched_cocycle, skew, pj, qj, "stable", cert)
            Ap = cocycle_product(bunched_cocycle, skew, p, j).entries
            Aq = cocycle_product(bunched_cocycle, skew, q, j).entries
            worst1 = max(worst1, float(np.linalg.norm(
                Hj.matrix - Aq @ H.matrix @ np.linalg.inv(Ap), 2)))
        # property 2: groupoid through an intermediate point
        w = stable_pair(skew, p, 0.4 * rng.uniform(0.005, 0.08))
        Hpw = strong_holonomy(bunched_cocycle, skew, p, w, "stable", cert)
        Hwq = strong_holonomy(bunched_cocycle, skew, w, q, "stable", cert)
        worst2 = max(worst2, float(np.linalg.norm(H.matrix - Hwq.matrix @ Hpw.matrix, 2)))
    elapsed = time.time() - t0
    assert worst1 <= 1e-7 and worst2 <= 1e-7
    assert elapsed < 120
    report(6, f"50 pairs: equivariance {worst1:.1e}, groupoid {worst2:.1e}, "
              f"single L = {L:.2f}", elapsed, 120)


def test_criterion_07_loop_diagnostics(skew, cat_auto, const_hyperbolic, form1):
    t0 = time.time()
    leaf = make_leaf(skew, (Fraction(0), Fraction(0)), 1)
    hom = find_homoclinic(cat_auto, [0.0, 0.0], 0)
    cert = certify_fiber_bunching(const_hyperbolic, skew, 24, (5, 5, 4))
    loop = HomoclinicLoop(const_hyperbolic, skew, leaf, hom, cert)
    pin = weak_pinching_test(const_hyperbolic, skew, leaf, 4000, 4, 107)
    before = weak_twisting_test(const_hyperbolic, skew, loop, pin, 3, 40, 1e-2, 107)
    assert before.verdict == "negative"

    v = np.array([np.cos(0.9), np.sin(0.9)])       # mixes both eigendirections
    Ahat = transvection_perturbation(const_hyperbolic, skew, hom,
                                     [TransvectionStep(v, 0.25, 1, 0)], 0.1)
    cert2 = certify_fiber_bunching(Ahat, skew, 24, (5, 5, 4))
    loop2 = HomoclinicLoop(Ahat, skew, leaf, hom, cert2)
    pin2 = weak_pinching_test(Ahat, skew, leaf, 4000, 4, 107)
    after = weak_twisting_test(Ahat, skew, loop2, pin2, 3, 40, 1e-2, 107)
    assert after.verdict == "positive"
    assert after.j_used == 1
    assert after.fractions[0] >= 0.05
    elapsed = time.time() - t0
    assert elapsed < 180
    report(7, f"constant: not twisting; perturbed: twisting at j=1 on "
              f"{100 * after.fractions[0]:.0f}% of samples", elapsed, 180)


def test_criterion_08_monotonicity(skew_untwisted):
    t0 = time.time()
    leaf = make_leaf(skew_untwisted, (Fraction(0), Fraction(0)), 1)
    A = CocycleField(1, [CocycleFactor(np.array([[0.0, 1.0], [-1.0, 0.0]]),
                                       TrigPolynomial.constant_field(0.0),
                                       winding=(0, 0, 1))])
    B = restrict_to_leaf(A, skew_untwisted, leaf)
    res = epsilon_monotonicity_test(B, 6.0, 2048, 8, 108)
    assert res.passed
    assert res.margin >= 6.28 - 1e-6
    Bconst = restrict_to_leaf(constant_cocycle(np.array([[2.0, 1.0], [1.0, 1.0]])),
                              skew_untwisted, leaf)
    for eps in (1e-9, 1e-3, 0.5, 6.0):
        assert not epsilon_monotonicity_test(Bconst, eps, 2048, 8, 108).passed
    elapsed = time.time() - t0
    assert elapsed < 10
    report(8, f"rotation margin {res.margin:.6f} passes 6.0; constant fails all",
           elapsed, 10)


def test_criterion_09_rotation_pipeline(tmp_path):
    t0 = time.time()
    out = str(tmp_path / "sweep")
    assert main(["sweep", "--scenario", scenario_path("identity_pipeline"),
                 "--out", out]) == 0
    with open(f"{out}/sweep.csv") as fh:
        lines = fh.read().splitlines()
    rows = [line.split(",") for line in lines[2:] if line]
    hits = [float(r[0]) for r in rows if r[-1] == "positive"]
    assert hits and min(hits) <= 0.5

    sc = load_scenario(scenario_path("identity_pipeline"))
    rep = positivity_search(sc.make_cocycle(), sc.make_skew(), sc.pipeline_settings())
    assert rep.success
    top = rep.final_spectrum.top
    bar = float(rep.final_spectrum.stderr[0])
    assert top > 3 * bar
    elapsed = time.time() - t0
    assert elapsed < 300
    report(9, f"sweep positive at theta={min(hits)}; pipeline top {top:.4f} > "
              f"3 x {bar:.4f}", elapsed, 300)


def test_criterion_10_determinism(tmp_path):
    t0 = time.time()
    pairs = []
    for name, cmd, extra in (
            ("diag_constant", "spectrum", ["--set", "spectrum.n=5000"]),
            ("shear_rational", "sweep", []),
    ):
        bodies = []
        for run in ("a", "b"):
            out = str(tmp_path / f"{name}-{run}")
            assert main([cmd, "--scenario", scenario_path(name), "--out", out]
                        + extra) in (0, 2)
            bodies.append(csv_body(f"{out}/{cmd}.csv"))
        assert bodies[0] == bodies[1]
        pairs.append(name)
    elapsed = time.time() - t0
    report(10, f"byte-identical CSV bodies for {', '.join(pairs)}", elapsed, 60)
