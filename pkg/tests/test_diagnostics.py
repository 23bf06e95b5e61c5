import numpy as np
import pytest
from fractions import Fraction

from cocycle_lab.base import find_homoclinic, make_leaf
from cocycle_lab.cocycle import (CocycleFactor, CocycleField, constant_cocycle,
                                 identity_cocycle, restrict_to_leaf, sup_distance)
from cocycle_lab.diagnostics import (epsilon_monotonicity_test, weak_pinching_test,
                                     weak_twisting_test)
from cocycle_lab.fields import TrigPolynomial
from cocycle_lab.holonomy import HomoclinicLoop, certify_fiber_bunching
from cocycle_lab.perturb import (PipelineSettings, SupportCollisionError,
                                 positivity_search, rotate_perturbation,
                                 rotation_block, shear_perturbation,
                                 transvection_perturbation)
from cocycle_lab.symplectic import TransvectionStep, standard_form, symplectic_drift

CAT = np.array([[2.0, 1.0], [1.0, 1.0]])
CAT_TOP = float(np.log(np.max(np.abs(np.linalg.eigvals(CAT)))))


@pytest.fixture(scope="module")
def leaf(skew):
    return make_leaf(skew, (Fraction(0), Fraction(0)), 1)


@pytest.fixture(scope="module")
def leaf0(skew_untwisted):
    return make_leaf(skew_untwisted, (Fraction(0), Fraction(0)), 1)


@pytest.fixture(scope="module")
def rotation_field(form1):
    return CocycleField(1, [CocycleFactor(form1.matrix,
                                          TrigPolynomial.constant_field(0.3))])


class TestWeakPinching:
    def test_rotation_valued_is_zero(self, rotation_field, skew, leaf):
        v = weak_pinching_test(rotation_field, skew, leaf, 4000, 4, 3)
        assert v.verdict == "zero"
        assert v.route == "ergodic-average"

    def test_constant_cat_positive(self, skew, leaf):
        v = weak_pinching_test(constant_cocycle(CAT), skew, leaf, 8000, 4, 3)
        assert v.verdict == "positive"
        assert v.estimate == pytest.approx(CAT_TOP, abs=2e-3)
        assert v.estimate > 3 * v.stderr

    def test_rational_route_parabolic_zero(self, skew_untwisted, leaf0):
        par = constant_cocycle(np.array([[1.0, -1.0], [0.0, 1.0]]))
        v = weak_pinching_test(par, skew_untwisted, leaf0, 1000, 4, 3, grid=256)
        assert v.route == "eigenvalue-scan"
        assert v.verdict == "zero"
        assert v.positive_fraction == 0.0

    def test_rational_route_rotated_positive_everywhere(self, skew_untwisted, leaf0):
        par = constant_cocycle(np.array([[1.0, -1.0], [0.0, 1.0]]))
        v = weak_pinching_test(rotate_perturbation(par, 0.05), skew_untwisted,
                               leaf0, 1000, 4, 3, grid=256)
        assert v.verdict == "positive"
        assert v.positive_fraction == 1.0
        # eigenvalue oracle: log of the larger root of x^2 - T x + 1
        T = 2 * np.cos(0.05) + np.sin(0.05)
        gold = np.log((T + np.sqrt(T * T - 4)) / 2)
        assert v.estimate == pytest.approx(gold, abs=1e-12)

    def test_rational_route_open_arc(self, skew_untwisted, leaf0):
        # fiber-dependent shear: hyperbolic exactly on an open arc of t
        A = rotate_perturbation(shear_perturbation(identity_cocycle(1), 0.5), 0.1)
        v = weak_pinching_test(A, skew_untwisted, leaf0, 1000, 4, 3, grid=512)
        assert v.verdict == "positive"
        assert 0.0 < v.positive_fraction < 1.0


@pytest.fixture(scope="module")
def loop_pack(const_hyperbolic, skew, leaf, cat_auto):
    cert = certify_fiber_bunching(const_hyperbolic, skew, 24, (5, 5, 4))
    hom = find_homoclinic(cat_auto, [0.0, 0.0], 0)
    loop = HomoclinicLoop(const_hyperbolic, skew, leaf, hom, cert)
    pin = weak_pinching_test(const_hyperbolic, skew, leaf, 2000, 4, 3)
    return hom, loop, pin


class TestWeakTwisting:
    def test_constant_hyperbolic_not_twisting(self, const_hyperbolic, skew, loop_pack):
        _, loop, pin = loop_pack
        v = weak_twisting_test(const_hyperbolic, skew, loop, pin, 3, 24, 1e-2, 11)
        assert v.verdict == "negative"
        assert all(f == 0.0 for f in v.fractions)

    def test_transvection_makes_twisting(self, const_hyperbolic, skew, leaf, loop_pack):
        hom, _, _ = loop_pack
        v_dir = np.array([np.cos(0.9), np.sin(0.9)])
        Ahat = transvection_perturbation(const_hyperbolic, skew, hom,
                                         [TransvectionStep(v_dir, 0.25, 1, 0)], 0.1)
        cert = certify_fiber_bunching(Ahat, skew, 24, (5, 5, 4))
        loop = HomoclinicLoop(Ahat, skew, leaf, hom, cert)
        pin = weak_pinching_test(Ahat, skew, leaf, 2000, 4, 3)
        v = weak_twisting_test(Ahat, skew, loop, pin, 3, 24, 1e-2, 11)
        assert v.verdict == "positive"
        assert v.j_used == 1
        assert v.fractions[0] >= 0.05

    def test_zero_angle_threshold_rejected(self, const_hyperbolic, skew, loop_pack):
        _, loop, pin = loop_pack
        with pytest.raises(ValueError):
            weak_twisting_test(const_hyperbolic, skew, loop, pin, 3, 8, 0.0, 11)

    def test_requires_positive_pinching(self, rotation_field, skew, leaf, loop_pack):
        _, loop, _ = loop_pack
        zero_pin = weak_pinching_test(rotation_field, skew, leaf, 2000, 4, 3)
        with pytest.raises(ValueError):
            weak_twisting_test(rotation_field, skew, loop, zero_pin, 3, 8, 1e-2, 11)


@pytest.fixture(scope="module")
def full_rotation(skew_untwisted, leaf0):
    A = CocycleField(1, [CocycleFactor(np.array([[0.0, 1.0], [-1.0, 0.0]]),
                                       TrigPolynomial.constant_field(0.0),
                                       winding=(0, 0, 1))])
    return restrict_to_leaf(A, skew_untwisted, leaf0)


class TestMonotonicity:
    def test_full_rotation_margin_is_two_pi(self, full_rotation):
        res = epsilon_monotonicity_test(full_rotation, 6.0, 2048, 8, 5)
        assert res.passed
        assert res.margin == pytest.approx(2 * np.pi, abs=1e-6)

    def test_constant_fails_every_epsilon(self, skew_untwisted, leaf0):
        B = restrict_to_leaf(constant_cocycle(CAT), skew_untwisted, leaf0)
        for eps in (1e-6, 0.1, 1.0):
            res = epsilon_monotonicity_test(B, eps, 256, 4, 5)
            assert not res.passed
            assert res.margin <= 1e-12

    def test_grid_refinement_never_increases_margin(self, full_rotation):
        coarse = epsilon_monotonicity_test(full_rotation, 1.0, 512, 6, 5)
        fine = epsilon_monotonicity_test(full_rotation, 1.0, 1024, 6, 5)
        assert fine.margin <= coarse.margin + 1e-15

    def test_rigid_rotation_invariance(self, skew_untwisted, leaf0, bunched_cocycle):
        B = restrict_to_leaf(bunched_cocycle, skew_untwisted, leaf0)
        G = 256
        shift = 16 / G        # grid-aligned precomposition

        class Shifted:
            dim = 2
            def __call__(self, t):
                return B(np.mod(np.asarray(t) + shift, 1.0))

        base = epsilon_monotonicity_test(B, 0.05, G, 6, 5)
        moved = epsilon_monotonicity_test(Shifted(), 0.05, G, 6, 5)
        assert moved.margin == pytest.approx(base.margin, abs=1e-10)

    def test_positive_epsilon_required(self, full_rotation):
        with pytest.raises(ValueError):
            epsilon_monotonicity_test(full_rotation, 0.0, 128, 2, 5)


class TestRotatePerturbation:
    def test_zero_angle_unchanged(self, bunched_cocycle):
        assert rotate_perturbation(bunched_cocycle, 0.0) is bunched_cocycle

    def test_block_rotation_symplectic(self):
        for d in (1, 2, 3):
            form = standard_form(d)
            R = rotation_block(form, 0.37)
            assert symplectic_drift(R, form) <= 1e-14

    def test_perturbation_size_linear_in_angle(self, bunched_cocycle):
        sup_a = bunched_cocycle.sup_norm_bound()
        for theta in (1e-1, 1e-2, 1e-3):
            dist = sup_distance(bunched_cocycle,
                                rotate_perturbation(bunched_cocycle, theta))
            assert dist / theta <= sup_a + 1e-9

    def test_zero_to_positive_over_theta_grid(self, skew_untwisted, leaf0):
        # rotation alone flips the parabolic-shear verdict within theta <= 0.5
        par = constant_cocycle(np.array([[1.0, -1.0], [0.0, 1.0]]))
        base = weak_pinching_test(par, skew_untwisted, leaf0, 1000, 4, 3, grid=256)
        assert base.verdict == "zero"
        grid = np.round(np.arange(0.05, 0.501, 0.05), 10)
        verdicts = [weak_pinching_test(rotate_perturbation(par, th), skew_untwisted,
                                       leaf0, 1000, 4, 3, grid=256).verdict
                    for th in grid]
        assert "positive" in verdicts


@pytest.fixture(scope="module")
def hom(cat_auto):
    return find_homoclinic(cat_auto, [0.0, 0.0], 0)


class TestTransvectionPerturbation:
    def test_empty_steps_identity(self, const_hyperbolic, skew, hom):
        Ahat = transvection_perturbation(const_hyperbolic, skew, hom, [], 0.1)
        pts = np.random.default_rng(0).random((50, 3))
        assert np.allclose(Ahat(pts), const_hyperbolic(pts))

    def test_center_is_exact_product(self, const_hyperbolic, skew, hom, form1):
        v = np.array([0.6, 0.8])
        Ahat = transvection_perturbation(const_hyperbolic, skew, hom,
                                         [TransvectionStep(v, 0.2, 1, 0)], 0.1)
        sigma = np.eye(2) + 0.2 * np.outer(v, form1.matrix @ v)
        zpt = np.concatenate([hom.point, [0.37]])
        assert np.allclose(Ahat(zpt), sigma @ const_hyperbolic(zpt), atol=1e-14)

    def test_unchanged_outside_support(self, const_hyperbolic, skew, hom):
        v = np.array([0.6, 0.8])
        Ahat = transvection_perturbation(const_hyperbolic, skew, hom,
                                         [TransvectionStep(v, 0.2, 1, 0)], 0.1)
        rng = np.random.default_rng(1)
        from cocycle_lab.fields import torus_dist
        count = 0
        for _ in range(200):
            p = rng.random(3)
            if torus_dist(p[:2], hom.point) > 0.1:
                assert np.array_equal(Ahat(p), const_hyperbolic(p))
                count += 1
        assert count > 100

    def test_symplectic_everywhere(self, const_hyperbolic, skew, hom, form1):
        v = np.array([0.6, 0.8])
        Ahat = transvection_perturbation(const_hyperbolic, skew, hom,
                                         [TransvectionStep(v, 0.2, 1, 0),
                                          TransvectionStep([1.0, 0.2], -0.1, 1, 0)], 0.1)
        pts = np.random.default_rng(2).random((300, 3))
        J = form1.matrix
        mats = Ahat(pts)
        drift = np.linalg.norm(np.swapaxes(mats, -1, -2) @ J @ mats - J,
                               ord=2, axis=(-2, -1)).max()
        assert drift <= 1e-9

    def test_support_collision_names_iterate(self, const_hyperbolic, skew, hom):
        with pytest.raises(SupportCollisionError) as err:
            transvection_perturbation(const_hyperbolic, skew, hom,
                                      [TransvectionStep([1.0, 0.0], 0.1, 1, 0)], 0.3)
        assert "n=" in str(err.value)

    def test_fiber_localization(self, const_hyperbolic, skew, hom):
        v = np.array([0.6, 0.8])
        Ahat = transvection_perturbation(const_hyperbolic, skew, hom,
                                         [TransvectionStep(v, 0.2, 1, 0)], 0.1,
                                         fiber_center=0.3, fiber_width=0.1)
        far_fiber = np.concatenate([hom.point, [0.8]])
        assert np.array_equal(Ahat(far_fiber), const_hyperbolic(far_fiber))
        near_fiber = np.concatenate([hom.point, [0.3]])
        assert not np.allclose(Ahat(near_fiber), const_hyperbolic(near_fiber))


class TestPositivitySearch:
    def test_identity_pipeline(self, skew_untwisted):
        cfg = PipelineSettings(seed=3, spectrum_n=10000, spectrum_orbits=48,
                               pinch_n=2000, pinch_orbits=4, twist_samples=24)
        rep = positivity_search(identity_cocycle(1), skew_untwisted, cfg)
        names = [s["stage"] for s in rep.stages]
        assert names[0] == "pinching"
        assert any(s.get("outcome") == "obstructed-elliptic" for s in rep.stages)
        assert rep.success
        assert rep.budget_ok
        assert rep.final_spectrum.top > 3 * rep.final_spectrum.stderr[0]

    def test_already_positive_no_perturbation(self, skew, skew_untwisted):
        # run the pipeline once, then re-run on its output: nothing to do
        cfg = PipelineSettings(seed=3, spectrum_n=8000, spectrum_orbits=96,
                               pinch_n=2000, pinch_orbits=4, twist_samples=16)
        first = positivity_search(identity_cocycle(1), skew_untwisted, cfg)
        assert first.success
        second = positivity_search(first.final_cocycle, skew_untwisted, cfg)
        note = [s for s in second.stages if s["stage"] == "perturbation"]
        assert note and note[0]["outcome"] == "not-needed"
        assert second.sizes == {}

    def test_budget_enforced(self, skew_untwisted):
        cfg = PipelineSettings(seed=3, spectrum_n=4000, spectrum_orbits=16,
                               pinch_n=1000, pinch_orbits=4, twist_samples=12,
                               delta_total=0.01)     # far below the shear size
        rep = positivity_search(identity_cocycle(1), skew_untwisted, cfg)
        assert not rep.budget_ok
        assert not rep.success


class TestOseledetsContinuitySweep:
    def test_fractions_vanish_for_shrinking_perturbations(self, skew, leaf):
        A = constant_cocycle(CAT)
        from cocycle_lab.diagnostics import oseledets_continuity_sweep
        rows = oseledets_continuity_sweep(A, skew, leaf, rotate_perturbation,
                                          sizes=(0.3, 0.05, 0.005), eps_angle=0.05,
                                          samples=24, seed=5, frame_window=96)
        fracs = [r["deviation_fraction"] for r in rows]
        assert fracs[0] >= fracs[-1]
        assert fracs[-1] == 0.0


def test_avoid_points_collision(const_hyperbolic, skew, hom):
    near = np.asarray(hom.point) + np.array([0.05, 0.0])
    with pytest.raises(SupportCollisionError) as err:
        transvection_perturbation(const_hyperbolic, skew, hom,
                                  [TransvectionStep([0.6, 0.8], 0.1, 1, 0)], 0.1,
                                  avoid_points=[near])
    assert "avoid point" in str(err.value)
