"""Symplectic linear algebra: standard form, certification, transvections,
subspaces, and the transvection-based subspace separation algorithm.

Convention: the standard form on R^(2d) is J = [[0, I_d], [-I_d, 0]] and the
pairing is omega(u, v) = u^T J v.  A symplectic transvection with unit
direction v and strength a acts by u |-> u + a * omega(u, v) * v, i.e. as the
matrix I + a * v (Jv)^T; it fixes the omega-orthogonal hyperplane of v
pointwise and is symplectic for every strength.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

SYMPLECTIC_TOL = 1e-10        # certification threshold after construction
TRANSVECTION_TOL = 1e-12      # transvections are symplectic to this accuracy
ORTHONORMAL_TOL = 1e-12
RANK_TOL = 1e-8               # default rank threshold for intersection dims
ANGLE_REJECT_TOL = 1e-6       # rejection band around excluded hyperplanes


class DegenerateInputError(ValueError):
    """Raised for inputs that are degenerate for the requested operation."""


class SymplecticityError(RuntimeError):
    """Raised when a matrix fails symplecticity certification."""


class SeparationError(RuntimeError):
    """Raised when the randomized separation search exhausts its retries."""


@dataclass(frozen=True)
class SymplecticForm:
    """Standard symplectic form on R^(2d)."""

    half_dim: int
    matrix: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.half_dim < 1:
            raise ValueError("half_dim must be a positive integer")
        d = self.half_dim
        J = np.zeros((2 * d, 2 * d))
        J[:d, d:] = np.eye(d)
        J[d:, :d] = -np.eye(d)
        object.__setattr__(self, "matrix", J)

    @property
    def dim(self):
        return 2 * self.half_dim

    def pairing(self, u, v):
        """omega(u, v) = u^T J v."""
        return np.asarray(u) @ self.matrix @ np.asarray(v)


def standard_form(half_dim):
    return SymplecticForm(half_dim)


def symplectic_drift(matrix, form):
    """Operator-norm defect || M^T J M - J ||."""
    M = np.asarray(matrix, dtype=float)
    J = form.matrix
    return float(np.linalg.norm(M.T @ J @ M - J, ord=2))


@dataclass
class SymplecticMatrix:
    """A real 2d x 2d matrix certified against the standard form.

    `drift` caches || M^T J M - J || at certification time; `corrections`
    counts in-place re-projections applied during long products.
    """

    entries: np.ndarray
    drift: float
    corrections: int = 0

    @property
    def dim(self):
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, SymplecticMatrix):
            return self.entries @ other.entries
        return self.entries @ other

    def to_json(self):
        """Row-major nested lists, the matrix form used in reports."""
        return [[float(v) for v in row] for row in self.entries]


def certify_symplectic(matrix, form, tol=SYMPLECTIC_TOL, corrections=0):
    """Wrap `matrix` as a SymplecticMatrix, raising if the drift exceeds tol."""
    M = np.asarray(matrix, dtype=float)
    if M.shape != (form.dim, form.dim):
        raise ValueError(f"expected shape {(form.dim, form.dim)}, got {M.shape}")
    drift = symplectic_drift(M, form)
    if drift > tol:
        raise SymplecticityError(f"symplectic drift {drift:.3e} exceeds tolerance {tol:.1e}")
    return SymplecticMatrix(M, drift, corrections)


def symplectic_project(matrix, form):
    """Re-symplectify a slightly drifted matrix by a symplectic Gram-Schmidt
    sweep on its column pairs (u_i, v_i).  Cheap and adequate for drifts well
    below 1e-3; used to reset accumulation error in long products.
    """
    M = np.asarray(matrix, dtype=float).copy()
    d = form.half_dim
    J = form.matrix
    for i in range(d):
        for w_idx in (i, d + i):
            w = M[:, w_idx]
            for j in range(i):
                u, v = M[:, j], M[:, d + j]
                w = w - (w @ J @ v) * u + (w @ J @ u) * v
            if w_idx == d + i:
                scale = M[:, i] @ J @ w
                if abs(scale) < 1e-14:
                    raise SymplecticityError("projection collapsed; drift too large to repair")
                w = w / scale
            M[:, w_idx] = w
    return M


@dataclass
class Subspace:
    """Linear subspace of R^(2d) stored as a column-orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2:
            raise ValueError("basis must be a 2-D array of column vectors")
        gram_defect = np.linalg.norm(B.T @ B - np.eye(B.shape[1]), ord=2) if B.shape[1] else 0.0
        if gram_defect > 1e-10:
            raise ValueError(f"basis not orthonormal (defect {gram_defect:.2e}); "
                             "use Subspace.from_spanning")
        self.basis = B

    @classmethod
    def from_spanning(cls, vectors, tol=1e-12):
        """Orthonormalize a spanning set (columns); drops dependent vectors."""
        V = np.asarray(vectors, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[1] == 0:
            return cls(np.zeros((V.shape[0], 0)))
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        rank = int(np.sum(s > tol * max(s[0], 1e-300)))
        return cls(U[:, :rank])

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    def project(self, vectors):
        """Orthogonal projection onto the subspace."""
        return self.basis @ (self.basis.T @ np.asarray(vectors, float))

    def distance_from(self, vector):
        """Norm of the component of `vector` orthogonal to the subspace."""
        v = np.asarray(vector, dtype=float)
        return float(np.linalg.norm(v - self.project(v)))

    def apply(self, matrix):
        """Image subspace under an invertible matrix."""
        return Subspace.from_spanning(np.asarray(matrix) @ self.basis)


def subspace_distance(V, W):
    """Gap metric || P_V - P_W ||_2 between subspaces."""
    PV = V.basis @ V.basis.T
    PW = W.basis @ W.basis.T
    return float(np.linalg.norm(PV - PW, ord=2))


def principal_angles(V, W):
    """Principal angles (radians, increasing) between two subspaces."""
    if V.dim == 0 or W.dim == 0:
        return np.zeros(0)
    s = np.linalg.svd(V.basis.T @ W.basis, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))[::-1][: min(V.dim, W.dim)][::-1]


def transvection_matrix(form, v, a):
    """Symplectic transvection u |-> u + a * omega(u, v) * v with v normalized.

    Returns a certified SymplecticMatrix equal to I + a * v (Jv)^T.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != form.dim:
        raise ValueError(f"direction has dimension {v.shape[0]}, expected {form.dim}")
    norm = np.linalg.norm(v)
    if norm < 1e-14:
        raise DegenerateInputError("transvection direction must be a nonzero vector")
    v = v / norm
    T = np.eye(form.dim) + float(a) * np.outer(v, form.matrix @ v)
    return certify_symplectic(T, form, tol=TRANSVECTION_TOL)


@dataclass(frozen=True)
class Transvection:
    """Direction/strength pair generating the rank-one symplectic shear."""

    direction: np.ndarray
    strength: float

    def matrix(self, form):
        return transvection_matrix(form, self.direction, self.strength)


def intersection_dim(V, W, tol=RANK_TOL):
    """dim(V ∩ W) from the singular values of the stacked bases.

    Uses dim V + dim W - rank[V | W]; the rank counts singular values above
    tol times the largest one, so the decision is deterministic given tol.
    """
    if V.ambient_dim != W.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {V.ambient_dim} vs {W.ambient_dim}")
    if V.dim == 0 or W.dim == 0:
        return 0
    stacked = np.hstack([V.basis, W.basis])
    s = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(s > tol * s[0]))
    return V.dim + W.dim - rank


def intersection_basis(V, W, tol=RANK_TOL):
    """Orthonormal basis of V ∩ W (empty matrix when transverse)."""
    k = intersection_dim(V, W, tol)
    if k == 0:
        return Subspace(np.zeros((V.ambient_dim, 0)))
    stacked = np.hstack([V.basis, -W.basis])
    _, _, vt = np.linalg.svd(stacked)
    # null vectors (a; b) of [V | -W] satisfy V a = W b, i.e. V a lies in the intersection;
    # the null space has dimension exactly k, spanned by the last k rows of vt
    null_cols = vt[-k:, : V.dim].T
    vectors = V.basis @ null_cols
    return Subspace.from_spanning(vectors)


def sum_subspace(V, W):
    return Subspace.from_spanning(np.hstack([V.basis, W.basis]))


def symplectic_complement(V, form):
    """omega-orthogonal complement: kernel of u |-> (omega(u, v_i))_i."""
    if V.ambient_dim != form.dim:
        raise ValueError("subspace ambient dimension does not match the form")
    if V.dim == 0:
        return Subspace(np.eye(form.dim))
    constraints = (form.matrix @ V.basis).T          # rows (J v_i)^T
    kernel = null_space(constraints)
    return Subspace.from_spanning(kernel) if kernel.size else Subspace(np.zeros((form.dim, 0)))


@dataclass(frozen=True)
class TransvectionStep:
    """One step of the separation induction: chosen direction, strength, and
    the intersection dimension before/after applying the transvection."""

    direction: np.ndarray
    strength: float
    dim_before: int
    dim_after: int


def _sample_direction(rng, V0, V1, max_tries):
    """Unit vector bounded away from the union of two proper subspaces."""
    n = V0.ambient_dim
    for _ in range(max_tries):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        if V0.distance_from(u) > ANGLE_REJECT_TOL and V1.distance_from(u) > ANGLE_REJECT_TOL:
            return u
    return None


def separate_pair(V, W, delta, rng_seed, form=None, tol=RANK_TOL, max_retries=60):
    """Build a product of dim(V ∩ W) transvections moving V off W.

    Each factor stays within delta / k of the identity (k the initial
    intersection dimension), so every factor is within delta of the identity
    and the product within about delta.  Returns (sigma, steps) where steps
    records each chosen direction and strength.  Raises SeparationError if a
    usable direction cannot be sampled (measure-zero event; seed reported).
    """
    if V.ambient_dim != W.ambient_dim:
        raise ValueError("subspaces live in different ambient dimensions")
    if V.ambient_dim % 2 != 0:
        raise ValueError("ambient dimension must be even")
    if form is None:
        form = standard_form(V.ambient_dim // 2)
    if V.dim + W.dim != form.dim:
        raise DegenerateInputError(
            f"dimensions must be complementary: {V.dim} + {W.dim} != {form.dim}")
    if delta <= 0:
        raise ValueError("delta must be positive")

    k0 = intersection_dim(V, W, tol)
    sigma = np.eye(form.dim)
    steps = []
    if k0 == 0:
        return certify_symplectic(sigma, form), steps

    # shaved slightly so rounding cannot push ||factor - I|| past delta / k0
    eps = delta / k0 * (1.0 - 1e-9)
    rng = np.random.default_rng(rng_seed)
    current = V
    k = k0
    while k > 0:
        X = intersection_basis(current, W, tol)
        V0 = sum_subspace(current, W)
        V1 = symplectic_complement(X, form)
        accepted = False
        for _ in range(max_retries):
            u0 = _sample_direction(rng, V0, V1, max_retries)
            if u0 is None:
                break
            tau = transvection_matrix(form, u0, eps).entries
            moved = current.apply(tau)
            k_new = intersection_dim(moved, W, tol)
            if k_new < k:
                steps.append(TransvectionStep(u0, eps, k, k_new))
                sigma = tau @ sigma
                current = moved
                k = k_new
                accepted = True
                break
        if not accepted:
            raise SeparationError(
                f"no admissible transvection direction found after {max_retries} tries "
                f"(rng_seed={rng_seed}, remaining intersection dim {k})")
    return certify_symplectic(sigma, form), steps


def separate_many(pairs, delta, rng_seed, form=None, tol=RANK_TOL, max_levels=8):
    """Single near-identity symplectic map separating every (V_j, W_j) pair.

    Pairs are processed in order with geometrically decaying per-pair strength
    budgets; after each pair the separation of all earlier pairs is re-checked
    (the separated condition is open but a later transvection can collapse a
    small margin).  On collapse all strengths are halved and the construction
    restarts, up to max_levels times.
    """
    pairs = list(pairs)
    if not pairs:
        if form is None:
            raise ValueError("empty pair list requires an explicit form")
        return certify_symplectic(np.eye(form.dim), form), []
    if form is None:
        form = standard_form(pairs[0][0].ambient_dim // 2)
    for j, (V, W) in enumerate(pairs):
        if V.dim + W.dim != form.dim:
            raise DegenerateInputError(f"pair {j} does not have complementary dimensions")

    for level in range(max_levels):
        shrink = 0.5 ** level
        sigma = np.eye(form.dim)
        trace = []
        ok = True
        for j, (V, W) in enumerate(pairs):
            budget = delta * shrink * 0.5 ** (j + 1)
            moved = V.apply(sigma)
            try:
                seed_j = np.random.SeedSequence(entropy=int(rng_seed), spawn_key=(level, j))
                sj, steps = separate_pair(moved, W, budget, seed_j, form=form, tol=tol)
            except SeparationError:
                ok = False
                break
            sigma = sj.entries @ sigma
            trace.extend(steps)
            if any(intersection_dim(pairs[i][0].apply(sigma), pairs[i][1], tol) > 0
                   for i in range(j + 1)):
                ok = False     # margin collapse: a later factor undid an earlier pair
                break
        if ok and np.linalg.norm(sigma - np.eye(form.dim), ord=2) <= delta:
            return certify_symplectic(sigma, form), trace
    raise SeparationError(
        f"separate_many failed after {max_levels} strength-halving levels (rng_seed={rng_seed})")
