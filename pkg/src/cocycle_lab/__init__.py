"""Numerical laboratory for symplectic cocycles over partially hyperbolic
skew products: transvection-based subspace separation, Lyapunov/Oseledets
estimation, invariant holonomies under fiber bunching, homoclinic loop
diagnostics, and the perturbation operators that drive exponents positive.
"""

from .base import (HomoclinicPoint, PeriodicLeaf, SkewProduct, TorusAutomorphism,
                   center_holonomy_shift, find_homoclinic, homoclinic_center_shifts,
                   iterate_base, make_leaf, periodic_base_points)
from .cocycle import (CircleCocycle, CocycleFactor, CocycleField, LyapunovReport,
                      OseledetsFrame, cocycle_product, constant_cocycle,
                      holder_norm_estimate, identity_cocycle, leaf_window,
                      lebesgue_sampler, lyapunov_spectrum, oseledets_frame,
                      restrict_to_leaf, skew_window, sup_distance)
from .diagnostics import (MonotonicityResult, PinchingVerdict, TwistingVerdict,
                          epsilon_monotonicity_test, oseledets_continuity_sweep,
                          weak_pinching_test, weak_twisting_test)
from .fields import BumpProfile, LocalizedBump, TrigPolynomial
from .holonomy import (FiberBunchingCertificate, HolonomyOperator, HomoclinicLoop,
                       certify_fiber_bunching, iterate_loop, loop_holonomy,
                       stable_pair, strong_holonomy, theoretical_holder_constant,
                       unstable_pair)
from .perturb import (PipelineSettings, PositivityReport, positivity_search,
                      rotate_perturbation, rotation_block, shear_perturbation,
                      transvection_perturbation)
from .report import REPORT_SCHEMA, __version__, validate_report
from .scenario import Scenario, ScenarioError, load_scenario
from .symplectic import (Subspace, SymplecticForm, SymplecticMatrix, Transvection,
                         TransvectionStep, certify_symplectic, intersection_dim,
                         principal_angles, separate_many, separate_pair,
                         standard_form, subspace_distance, symplectic_complement,
                         symplectic_drift, transvection_matrix)

__all__ = [name for name in dir() if not name.startswith("_")]
