"""Holder cocycles with values in the symplectic group: representation,
iteration, Lyapunov spectra, and Oseledets frames.

A cocycle is a product of Lie-algebra exponentials
    A(p) = exp(psi_1(p) S_1) ... exp(psi_m(p) S_m)
with each generator S_k in sp(2d, R) (i.e. S^T J + J S = 0) and each scalar
field psi_k a trigonometric polynomial, a localized bump, or either plus an
integer winding part 2 pi (w . p).  Symplecticity then holds by construction
at every point, and sup/Lipschitz data of the factors give analytic bounds
for the Holder norm.
"""

import concurrent.futures
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg

from .fields import TWO_PI, TrigPolynomial
from .symplectic import (SymplecticForm, Subspace, certify_symplectic,
                         principal_angles, standard_form, symplectic_drift,
                         symplectic_project)

GENERATOR_TOL = 1e-12         # sp-membership tolerance for generators
EVALUATION_DRIFT_TOL = 1e-10  # pointwise symplecticity of evaluations
PRODUCT_RECERTIFY_EVERY = 50  # factors between drift checks in long products
PRODUCT_DRIFT_LIMIT = 1e-6    # hard failure threshold after correction


class NumericalDegradationError(RuntimeError):
    """Raised when a long product cannot be kept symplectic."""


def generator_defect(S, form):
    """|| S^T J + J S ||, zero exactly on the symplectic Lie algebra."""
    S = np.asarray(S, dtype=float)
    J = form.matrix
    return float(np.linalg.norm(S.T @ J + J @ S, ord=2))


def random_sp_generator(rng, half_dim, scale=1.0):
    """Random element of sp(2d, R): J times a symmetric matrix."""
    form = standard_form(half_dim)
    Y = rng.standard_normal((form.dim, form.dim))
    return scale * form.matrix @ (Y + Y.T) / 2.0


class _ExpFamily:
    """Vectorized psi |-> exp(psi S) for a fixed square generator S.

    Diagonalizable generators use a cached eigendecomposition; defective ones
    fall back to a scaled Taylor series (exact after one term for nilpotent
    shear/transvection generators).
    """

    def __init__(self, S):
        self.S = np.asarray(S, dtype=float)
        self.dim = self.S.shape[0]
        self._mode = "series"
        try:
            w, V = np.linalg.eig(self.S)
            Vinv = np.linalg.inv(V)
            recon = (V * w) @ Vinv
            if (np.linalg.norm(recon - self.S, ord=2) <= 1e-12 * (1.0 + np.linalg.norm(self.S, ord=2))
                    and np.linalg.cond(V) < 1e8):
                self._mode = "eig"
                self._w, self._V, self._Vinv = w, V, Vinv
        except np.linalg.LinAlgError:
            pass
        if self._mode == "series":
            norm = np.linalg.norm(self.S, ord=2)
            powers = [np.eye(self.dim)]
            term = np.eye(self.dim)
            for m in range(1, 60):
                term = term @ self.S / m
                powers.append(term)
                if np.linalg.norm(term, ord=2) * np.exp(norm) < 1e-18:
                    break
            self._powers = np.stack(powers)

    def __call__(self, psi):
        psi = np.asarray(psi, dtype=float)
        if self._mode == "eig":
            E = np.exp(psi[..., None] * self._w)
            out = (self._V * E[..., None, :]) @ self._Vinv
            return np.ascontiguousarray(out.real)
        mono = psi[..., None] ** np.arange(len(self._powers))
        return np.tensordot(mono, self._powers, axes=(-1, 0))


@dataclass
class CocycleFactor:
    """One exponential factor exp(psi(p) S) of a cocycle.

    `winding` adds 2 pi (w . p) to the scalar field; it is only legal when
    exp(2 pi S) = I, so the factor stays continuous on the torus (this is how
    rotation-valued cocycles like p |-> R_{2 pi p_1} are represented).
    """

    generator: np.ndarray
    field: object                       # TrigPolynomial or LocalizedBump
    winding: tuple = (0, 0, 0)
    _family: _ExpFamily = dc_field(init=False, repr=False)

    def __post_init__(self):
        self.generator = np.asarray(self.generator, dtype=float)
        self.winding = tuple(int(w) for w in self.winding)
        self._family = _ExpFamily(self.generator)
        if any(self.winding):
            defect = np.linalg.norm(scipy.linalg.expm(TWO_PI * self.generator)
                                    - np.eye(self.generator.shape[0]), ord=2)
            if defect > 1e-9:
                raise ValueError("winding requires exp(2 pi S) = I "
                                 f"(defect {defect:.2e})")

    def phase(self, points):
        points = np.asarray(points, dtype=float)
        psi = np.asarray(self.field(points), dtype=float)
        if any(self.winding):
            psi = psi + TWO_PI * (points @ np.asarray(self.winding, dtype=float))
        return psi

    def evaluate(self, points, inverse=False):
        psi = self.phase(points)
        return self._family(-psi if inverse else psi)

    def sup_phase(self):
        return self.field.sup_bound() + TWO_PI * sum(abs(w) for w in self.winding)

    def phase_lipschitz(self):
        return self.field.lipschitz_bound() + TWO_PI * np.linalg.norm(self.winding)


@dataclass
class CocycleField:
    """Map from phase space to Sp(2d, R) as an ordered product of factors.

    factors[0] is the leftmost matrix in the product.  An empty factor list
    is the identity cocycle.
    """

    half_dim: int
    factors: list
    alpha: float = 1.0
    form: SymplecticForm = None

    def __post_init__(self):
        if self.form is None:
            self.form = standard_form(self.half_dim)
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("Holder exponent must lie in (0, 1]")
        for i, f in enumerate(self.factors):
            defect = generator_defect(f.generator, self.form)
            if defect > GENERATOR_TOL:
                raise ValueError(f"factor {i} generator is not in sp(2d): defect {defect:.2e}")
            if f.generator.shape != (self.dim, self.dim):
                raise ValueError(f"factor {i} generator has wrong shape")

    @property
    def dim(self):
        return 2 * self.half_dim

    def __call__(self, points):
        """Evaluate at points of shape (..., 3); returns (..., 2d, 2d)."""
        points = np.asarray(points, dtype=float)
        out = None
        for f in self.factors:         # ordered product: factors[0] leftmost
            block = f.evaluate(points)
            out = block if out is None else out @ block
        if out is None:
            out = np.broadcast_to(np.eye(self.dim),
                                  points.shape[:-1] + (self.dim, self.dim)).copy()
        return out

    def evaluate_inverse(self, points):
        """A(p)^{-1}, computed exactly as the reversed product of inverse factors."""
        points = np.asarray(points, dtype=float)
        out = None
        for f in reversed(self.factors):
            block = f.evaluate(points, inverse=True)
            out = block if out is None else out @ block
        if out is None:
            out = np.broadcast_to(np.eye(self.dim),
                                  points.shape[:-1] + (self.dim, self.dim)).copy()
        return out

    def sup_norm_bound(self):
        """Analytic bound for sup ||A||."""
        bound = 1.0
        for f in self.factors:
            bound *= float(np.exp(np.linalg.norm(f.generator, ord=2) * f.sup_phase()))
        return bound

    def lipschitz_bound(self):
        """Analytic Lipschitz bound from per-factor sup/Lipschitz data."""
        sups = [float(np.exp(np.linalg.norm(f.generator, ord=2) * f.sup_phase()))
                for f in self.factors]
        total = 0.0
        for k, f in enumerate(self.factors):
            others = float(np.prod([s for i, s in enumerate(sups) if i != k])) if sups else 1.0
            gnorm = np.linalg.norm(f.generator, ord=2)
            total += others * gnorm * sups[k] * f.phase_lipschitz()
        return total

    def with_factors(self, new_factors):
        return CocycleField(self.half_dim, list(new_factors), self.alpha, self.form)


def identity_cocycle(half_dim, alpha=1.0):
    return CocycleField(half_dim, [], alpha)


def constant_cocycle(matrix, alpha=1.0):
    """Constant cocycle from a fixed symplectic matrix (via its real log)."""
    M = np.asarray(matrix, dtype=float)
    half_dim = M.shape[0] // 2
    S = scipy.linalg.logm(M)
    if np.linalg.norm(S.imag, ord=2) > 1e-10:
        raise ValueError("matrix has no real logarithm; compose two factors instead")
    factor = CocycleFactor(S.real, TrigPolynomial.constant_field(1.0))
    return CocycleField(half_dim, [factor], alpha)


def sup_distance(A, B, samples=200, seed=0):
    """Sampled sup-norm distance between two cocycles."""
    rng = np.random.default_rng(seed)
    pts = rng.random((samples, 3))
    return float(np.max(np.linalg.norm(A(pts) - B(pts), ord=2, axis=(-2, -1))))


def holder_distance_bound(A, B, samples=200, seed=0):
    """Sampled sup-norm distance plus analytic Holder-quotient bound.

    The quotient part bounds the seminorm of the difference by the sum of the
    two Lipschitz bounds, so this is a (conservative) upper bound for the
    alpha-Holder distance; used for perturbation-size reporting.
    """
    sup = sup_distance(A, B, samples, seed)
    quot = A.lipschitz_bound() + B.lipschitz_bound()
    return sup + quot


def cocycle_product(A, skew, point, n, recertify_every=PRODUCT_RECERTIFY_EVERY):
    """Matrix of n cocycle steps over the skew product at the given point.

    Positive n multiplies A along the forward orbit (latest point leftmost);
    n = 0 is the identity; negative n is the inverse-branch product
    A(f^n p)^{-1} ... A(f^{-1} p)^{-1}.  The running product is drift-checked
    every `recertify_every` factors and re-projected onto the symplectic
    group when needed; the correction count is recorded on the result.
    """
    n = int(n)
    form = A.form
    if n == 0:
        return certify_symplectic(np.eye(A.dim), form)
    orbit = skew.orbit(point, n)
    if n > 0:
        mats = A(orbit[:-1])          # A(p), A(fp), ..., A(f^{n-1}p)
    else:
        mats = A.evaluate_inverse(orbit[1:])   # A(f^{-1}p)^{-1}, ..., A(f^{n}p)^{-1}
    out = np.eye(A.dim)
    corrections = 0
    for i, m in enumerate(mats):
        out = m @ out                 # each new factor acts on the left

        if (i + 1) % recertify_every == 0:
            drift = symplectic_drift(out, form)
            if drift > EVALUATION_DRIFT_TOL:
                out = symplectic_project(out, form)
                corrections += 1
                if symplectic_drift(out, form) > PRODUCT_DRIFT_LIMIT:
                    raise NumericalDegradationError(
                        f"drift {drift:.2e} not repairable after {i + 1} factors")
    drift = symplectic_drift(out, form)
    if drift > PRODUCT_DRIFT_LIMIT:
        raise NumericalDegradationError(f"final drift {drift:.2e} beyond hard limit")
    if drift > EVALUATION_DRIFT_TOL:
        out = symplectic_project(out, form)
        corrections += 1
    return certify_symplectic(out, form, tol=PRODUCT_DRIFT_LIMIT,
                              corrections=corrections)


@dataclass
class LyapunovReport:
    """Estimated Lyapunov spectrum with sampling metadata.

    Exponents are in log units per base iterate, sorted decreasing; stderr
    holds the per-exponent standard error across independent orbits, and
    symmetry_defect = max_i |lambda_i + lambda_{2d+1-i}| measures the
    symplectic pairing of the estimate.
    """

    exponents: np.ndarray
    stderr: np.ndarray
    per_orbit: np.ndarray
    n: int
    orbits: int
    seed: int
    measure: str
    symmetry_defect: float = dc_field(init=False)

    def __post_init__(self):
        lam = np.asarray(self.exponents, dtype=float)
        self.symmetry_defect = float(np.max(np.abs(lam + lam[::-1])))

    @property
    def top(self):
        return float(self.exponents[0])

    def to_dict(self):
        return {
            "exponents": [float(v) for v in self.exponents],
            "stderr": [float(v) for v in self.stderr],
            "n": int(self.n),
            "orbits": int(self.orbits),
            "seed": int(self.seed),
            "measure": self.measure,
            "symmetry_defect": float(self.symmetry_defect),
        }


def lebesgue_sampler(rng, count):
    """i.i.d. uniform points on torus x circle (the volume reference measure)."""
    return rng.random((count, 3))


def _benettin_batch(mats, Q, sums, qr_interval, start_index):
    """Advance a batch of Benettin accumulations through one chunk of steps."""
    chunk = mats.shape[0]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(chunk):
            Q = mats[i] @ Q
            if (start_index + i + 1) % qr_interval == 0:
                Q, R = np.linalg.qr(Q)
                diag = np.einsum("...ii->...i", R)
                sign = np.where(diag < 0, -1.0, 1.0)
                Q = Q * sign[..., None, :]
                sums += np.log(np.abs(diag))
    return Q, sums


def lyapunov_spectrum(A, skew, sampler, n, orbits, seed, qr_interval=None,
                      jobs=1, chunk=2048, measure_label="lebesgue"):
    """Benettin QR estimate of all 2d exponents over `orbits` sampled orbits.

    Orbit start points are drawn i.i.d. from `sampler`; each orbit runs n
    steps with QR re-orthonormalization every `qr_interval` steps (default 1
    for 2d <= 4, else 5), accumulating log diagonal entries.  Deterministic
    given (seed, n, orbits): per-orbit work is independent and the reduction
    order is fixed, so `jobs` only affects wall-clock time.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if qr_interval is None:
        qr_interval = 1 if A.dim <= 4 else 5
    rng = np.random.default_rng(seed)
    starts = np.asarray(sampler(rng, orbits), dtype=float)

    def run(block):
        pos = starts[block].copy()
        Q = np.broadcast_to(np.eye(A.dim), (len(block), A.dim, A.dim)).copy()
        sums = np.zeros((len(block), A.dim))
        done = 0
        with np.errstate(over="ignore", invalid="ignore"):   # checked below
            while done < n:
                size = min(chunk, n - done)
                pts = np.empty((size, len(block), 3))
                for i in range(size):
                    pts[i] = pos
                    pos = skew.step(pos)
                mats = A(pts)
                Q, sums = _benettin_batch(mats, Q, sums, qr_interval, done)
                done += size
        return sums

    blocks = np.array_split(np.arange(orbits), max(1, min(jobs, orbits)))
    blocks = [b for b in blocks if len(b)]
    if len(blocks) == 1:
        all_sums = run(blocks[0])
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=len(blocks)) as ex:
            parts = list(ex.map(run, blocks))
        all_sums = np.vstack(parts)
    if not np.all(np.isfinite(all_sums)):
        raise NumericalDegradationError(
            "non-finite accumulation; decrease the QR renormalization interval")
    per_orbit = np.sort(all_sums / n, axis=1)[:, ::-1]
    exponents = per_orbit.mean(axis=0)
    if orbits > 1:
        stderr = per_orbit.std(axis=0, ddof=1) / np.sqrt(orbits)
    else:
        stderr = np.zeros(A.dim)
    return LyapunovReport(exponents, stderr, per_orbit, n, orbits,
                          int(seed), measure_label)


@dataclass
class CircleCocycle:
    """Return cocycle of a periodic leaf: B(t) = A^{period}(leaf point, t)
    over the fiber rotation t |-> t + rotation_number."""

    leaf: object
    matrices: object            # callable t -> (..., 2d, 2d)
    inverse_matrices: object
    rotation_number: float
    dim: int
    measure: str

    def __call__(self, t):
        return self.matrices(np.asarray(t, dtype=float))

    def rotate(self, t, j=1):
        return np.mod(np.asarray(t, dtype=float) + j * self.rotation_number, 1.0)


def restrict_to_leaf(A, skew, leaf, measure="lebesgue"):
    """Restriction of the cocycle to a periodic center leaf.

    The result is the return cocycle over the rotation by the leaf's rotation
    number; a rational rotation number is flagged so callers can fall back to
    pointwise eigenvalue analysis.  The invariant fiber measure descriptor
    defaults to Lebesgue (for irrational rotation this is forced by unique
    ergodicity; for rational it is a reported choice).
    """
    base_pts = leaf.orbit_points

    def matrices(t):
        t = np.asarray(t, dtype=float)
        fibers = leaf.fiber_orbit(t)                      # (..., period)
        out = None
        for i in range(leaf.period):
            pts = np.concatenate([np.broadcast_to(base_pts[i], t.shape + (2,)),
                                  fibers[..., i][..., None]], axis=-1)
            block = A(pts)
            out = block if out is None else block @ out   # later steps act on the left
        return out

    def inverse_matrices(t):
        t = np.asarray(t, dtype=float)
        fibers = leaf.fiber_orbit(t)
        out = None
        for i in range(leaf.period):
            pts = np.concatenate([np.broadcast_to(base_pts[i], t.shape + (2,)),
                                  fibers[..., i][..., None]], axis=-1)
            block = A.evaluate_inverse(pts)
            out = block if out is None else out @ block
        return out

    label = measure if not leaf.rational_rotation else f"{measure} (rational rotation: choice)"
    return CircleCocycle(leaf, matrices, inverse_matrices,
                         leaf.rotation_number, A.dim, label)


@dataclass
class OseledetsFrame:
    """Estimated fast/slow splitting at a point.

    E_u comes from the top singular directions of the backward-window product
    pushed forward; E_s from the contracting right-singular directions of the
    forward-window product.  `residual` is the angular change between the
    window-n and window-n/2 estimates; `equivariance_residual` is the angle
    between the pushed splitting and the splitting estimated one step ahead
    (when the provider supplies step data); `degenerate` marks points whose
    top growth rate is numerically zero (whole-space convention applies).
    """

    E_u: Subspace
    E_s: Subspace
    residual: float
    growth_rate: float
    degenerate: bool
    convergent: bool
    n: int
    equivariance_residual: float = float("nan")


def _frame_split(P_back, Q_fwd, split_dim):
    Ub, _, _ = np.linalg.svd(P_back)
    _, _, Vf = np.linalg.svd(Q_fwd)
    E_u = Subspace.from_spanning(Ub[:, :split_dim])
    E_s = Subspace.from_spanning(Vf[-split_dim:, :].T)
    return E_u, E_s


def oseledets_frame(products, point, n, split_dim=None, degenerate_tol=1e-3,
                    residual_tol=1e-4, with_equivariance=False):
    """Estimate the Oseledets splitting at a point from window products.

    `products` must provide window(point, n) -> (P_back, Q_fwd) where P_back
    is the n-step product ending at the point (pushed forward from f^{-n}) and
    Q_fwd the n-step product starting at it.  For circle cocycles and full
    cocycles use `leaf_window` / `skew_window` below.  When the provider also
    carries `step(point) -> (matrix, next_point)` and `with_equivariance` is
    set, the pushed splitting is compared against the splitting estimated at
    the image point and the angle reported.
    """
    P_half, Q_half = products(point, n // 2)
    P_full, Q_full = products(point, n)
    dim = P_full.shape[0]
    if split_dim is None:
        split_dim = dim // 2
    growth = float(np.log(np.linalg.norm(Q_full, ord=2)) / n)
    degenerate = growth < degenerate_tol
    if degenerate:
        whole = Subspace(np.eye(dim))
        return OseledetsFrame(whole, whole, 0.0, growth, True, True, n)
    E_u2, E_s2 = _frame_split(P_half, Q_half, split_dim)
    E_u, E_s = _frame_split(P_full, Q_full, split_dim)
    res_u = float(np.max(principal_angles(E_u, E_u2))) if E_u.dim else 0.0
    res_s = float(np.max(principal_angles(E_s, E_s2))) if E_s.dim else 0.0
    residual = max(res_u, res_s)
    equiv = float("nan")
    if with_equivariance and hasattr(products, "step"):
        B, next_point = products.step(point)
        ahead = oseledets_frame(products, next_point, n, split_dim,
                                degenerate_tol, residual_tol)
        if not ahead.degenerate:
            equiv = max(float(np.max(principal_angles(E_u.apply(B), ahead.E_u))),
                        float(np.max(principal_angles(E_s.apply(B), ahead.E_s))))
    return OseledetsFrame(E_u, E_s, residual, growth, False,
                          residual <= residual_tol, n, equiv)


def leaf_window(B):
    """Window-product provider for a circle cocycle over its rotation."""

    def window(t, n):
        t = float(t)
        rot = B.rotation_number
        ts_back = np.mod(t - rot * np.arange(n, 0, -1), 1.0)
        ts_fwd = np.mod(t + rot * np.arange(0, n), 1.0)
        mb = B(ts_back)
        P = np.eye(B.dim)
        for m in mb:                  # oldest first: P = B(t - rot) ... B(t - n rot)
            P = m @ P
        mf = B(ts_fwd)
        Q = np.eye(B.dim)
        for m in mf:
            Q = m @ Q
        return P, Q

    window.step = lambda t: (B(np.asarray(float(t))), B.rotate(float(t)))
    return window


def skew_window(A, skew):
    """Window-product provider for the full cocycle over the skew product."""

    def window(point, n):
        P = cocycle_product(A, skew, skew.iterate_exact(point, -n), n).entries
        Q = cocycle_product(A, skew, point, n).entries
        return P, Q

    def step(point):
        pt = np.asarray([float(c) for c in point])
        return A(pt), skew.iterate_exact(point, 1)

    window.step = step
    return window


def holder_norm_estimate(A, samples, seed, alpha=None):
    """Sampled lower bound for the alpha-Holder norm of the cocycle.

    Draws sample points sequentially (so enlarging `samples` refines the
    estimate monotonically), maximizes the difference quotient over sampled
    pairs, and adds the sampled sup of ||A||.
    """
    from .fields import phase_dist
    if samples < 2:
        raise ValueError("need at least two samples")
    if alpha is None:
        alpha = A.alpha
    rng = np.random.default_rng(seed)
    pts = rng.random((samples, 3))
    mats = A(pts)
    norms = np.linalg.norm(mats, ord=2, axis=(-2, -1))
    sup_term = float(np.max(norms))
    quot = 0.0
    pairs_a = pts[:-1]
    pairs_b = pts[1:]
    dists = phase_dist(pairs_a, pairs_b)
    diffs = np.linalg.norm(mats[:-1] - mats[1:], ord=2, axis=(-2, -1))
    good = dists > 1e-12
    if np.any(good):
        quot = float(np.max(diffs[good] / dists[good] ** alpha))
    return sup_term + quot
