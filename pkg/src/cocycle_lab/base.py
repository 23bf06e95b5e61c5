"""Partially hyperbolic base dynamics: a hyperbolic torus automorphism crossed
with circle fibers, f(x, t) = (g(x), t + theta(x)).

The torus part is linear, so stable/unstable sets are the eigenlines of the
integer matrix and all hyperbolicity constants are explicit (contraction is
exact with C = 1).  Periodic points are handled in exact rational arithmetic;
homoclinic points are stored through their stable/unstable line parameters so
their orbits can be evaluated without exponential error growth.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .fields import TrigPolynomial, torus_lift, torus_dist, wrap

SERIES_TOL = 1e-12            # tail threshold for center-holonomy series
MAX_PERIODIC_COUNT = 200_000  # refuse enumerations beyond this many points


class NotOnLeafError(ValueError):
    """Raised when a point is not on the required stable/unstable set."""


@dataclass
class TorusAutomorphism:
    """Hyperbolic automorphism of the 2-torus given by an integer matrix.

    Requires |det| = 1 and |trace| > 2, which forces real eigenvalues
    lambda_u, lambda_s with |lambda_u| > 1 > |lambda_s| and irrational
    eigendirections.
    """

    matrix: np.ndarray
    expansion: float = field(init=False)
    contraction: float = field(init=False)
    e_u: np.ndarray = field(init=False)
    e_s: np.ndarray = field(init=False)
    mu_u: float = field(init=False)     # signed eigenvalues
    mu_s: float = field(init=False)
    bracket_size: float = 0.2

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if M.shape != (2, 2) or not np.all(M == np.round(M)):
            raise ValueError("matrix must be 2x2 with integer entries")
        self.matrix = M.astype(np.int64)
        det = int(round(np.linalg.det(self.matrix)))
        tr = int(self.matrix[0, 0] + self.matrix[1, 1])
        if abs(det) != 1:
            raise ValueError(f"|det| must be 1, got {det}")
        if abs(tr) <= 2:
            raise ValueError(f"|trace| must exceed 2 for hyperbolicity, got {tr}")
        evals, evecs = np.linalg.eig(self.matrix.astype(float))
        order = np.argsort(np.abs(evals))
        self.mu_s = float(evals[order[0]])
        self.mu_u = float(evals[order[1]])
        self.e_s = evecs[:, order[0]] / np.linalg.norm(evecs[:, order[0]])
        self.e_u = evecs[:, order[1]] / np.linalg.norm(evecs[:, order[1]])
        self.expansion = abs(self.mu_u)
        self.contraction = abs(self.mu_s)

    @property
    def inverse_matrix(self):
        M = self.matrix
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        adj = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]], dtype=np.int64)
        return adj * det    # det is +-1

    def apply(self, points):
        return wrap(np.asarray(points, float) @ self.matrix.T.astype(float))

    def apply_inverse(self, points):
        return wrap(np.asarray(points, float) @ self.inverse_matrix.T.astype(float))

    def iterate(self, point, n):
        p = np.asarray(point, dtype=float)
        step = self.apply if n >= 0 else self.apply_inverse
        for _ in range(abs(int(n))):
            p = step(p)
        return p

    def bracket(self, x, y):
        """Unique local intersection of the stable set of x with the unstable
        set of y, for x, y within bracket_size of each other."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        delta = torus_lift(y - x)
        if np.linalg.norm(delta) > self.bracket_size:
            raise ValueError("points too far apart for the local bracket")
        # solve a e_s - b e_u = y - x, bracket point = x + a e_s
        coeffs = np.linalg.solve(np.column_stack([self.e_s, -self.e_u]), delta)
        return wrap(x + coeffs[0] * self.e_s)

    def stable_offset(self, x, distance):
        """Point at the given signed distance from x along the stable line."""
        return wrap(np.asarray(x, float) + distance * self.e_s)

    def unstable_offset(self, x, distance):
        return wrap(np.asarray(x, float) + distance * self.e_u)


@dataclass
class SkewProduct:
    """f(x, t) = (g(x), t + theta(x)) on torus x circle.

    theta is a trigonometric polynomial on the torus (frequency vectors of
    length 2).  The fiber maps are rotations, so the center rates are
    gamma = gamma_hat = 1 and the center exponents vanish identically;
    nu = nu_hat = the base contraction rate.
    """

    base: TorusAutomorphism
    shift: TrigPolynomial

    def __post_init__(self):
        if self.shift.ndim != 2:
            raise ValueError("fiber shift must be a trig polynomial on the torus (ndim=2)")

    @property
    def nu(self):
        return self.base.contraction

    @property
    def rates(self):
        return {"nu": self.nu, "nu_hat": self.nu, "gamma": 1.0, "gamma_hat": 1.0}

    def step(self, points):
        points = np.asarray(points, dtype=float)
        out = np.empty_like(points)
        out[..., :2] = self.base.apply(points[..., :2])
        out[..., 2] = np.mod(points[..., 2] + self.shift(points[..., :2]), 1.0)
        return out

    def step_inverse(self, points):
        points = np.asarray(points, dtype=float)
        out = np.empty_like(points)
        out[..., :2] = self.base.apply_inverse(points[..., :2])
        out[..., 2] = np.mod(points[..., 2] - self.shift(out[..., :2]), 1.0)
        return out

    def iterate(self, point, n):
        """n-fold composition (negative n uses the inverse map)."""
        p = np.asarray(point, dtype=float)
        step = self.step if n >= 0 else self.step_inverse
        for _ in range(abs(int(n))):
            p = step(p)
        return p

    @staticmethod
    def _exact_start(point):
        if isinstance(point, np.ndarray):
            px, py, pt = point.tolist()
        else:
            px, py, pt = point
        return (Fraction(px) % 1, Fraction(py) % 1), float(pt) % 1.0

    def orbit(self, point, n):
        """Forward (or backward, n < 0) orbit [point, f(point), ..., f^n(point)].

        Returns an array of shape (|n| + 1, 3) including the start point.
        The torus coordinates are advanced in exact dyadic arithmetic (the
        integer matrix action keeps float or Fraction inputs exactly
        representable), so orbit positions carry no exponentially amplified
        rounding; only the fiber coordinate, whose dynamics is isometric,
        stays in floats.  `point` may carry Fraction torus coordinates, e.g.
        from iterate_exact, to continue an orbit without any rounding handoff.
        """
        n = int(n)
        M = (self.base.matrix if n >= 0 else self.base.inverse_matrix).tolist()
        x, t = self._exact_start(point)
        out = np.empty((abs(n) + 1, 3))
        out[0] = [float(x[0]), float(x[1]), t]
        for i in range(abs(n)):
            if n >= 0:
                t = (t + float(self.shift(out[i, :2]))) % 1.0
                x = _exact_apply_mod1(M, x)
            else:
                x = _exact_apply_mod1(M, x)
                t = (t - float(self.shift(np.array([float(x[0]), float(x[1])])))) % 1.0
            out[i + 1] = [float(x[0]), float(x[1]), t]
        return out

    def iterate_exact(self, point, n):
        """n-fold iterate with exact torus coordinates.

        Returns (x1, x2, t) with x1, x2 Fractions; feed it back into orbit or
        iterate_exact to continue the trajectory without rounding handoffs.
        """
        n = int(n)
        M = (self.base.matrix if n >= 0 else self.base.inverse_matrix).tolist()
        x, t = self._exact_start(point)
        for _ in range(abs(n)):
            if n >= 0:
                t = (t + float(self.shift(np.array([float(x[0]), float(x[1])])))) % 1.0
                x = _exact_apply_mod1(M, x)
            else:
                x = _exact_apply_mod1(M, x)
                t = (t - float(self.shift(np.array([float(x[0]), float(x[1])])))) % 1.0
        return (x[0], x[1], t)


def iterate_base(skew, point, n):
    """n-fold application of the skew product (module-level alias)."""
    return skew.iterate(point, n)


def _exact_apply_mod1(matrix, point):
    x, y = point
    return ((matrix[0][0] * x + matrix[0][1] * y) % 1,
            (matrix[1][0] * x + matrix[1][1] * y) % 1)


def periodic_base_points(auto, n):
    """All points of period dividing n, as exact rationals.

    Solves (M^n - I) x = 0 mod Z^2: the solutions form the subgroup of
    (Q/Z)^2 generated by the columns of (M^n - I)^{-1}, and their number is
    |det(M^n - I)|.  Uses arbitrary-precision integers; enumerations larger
    than MAX_PERIODIC_COUNT are refused.
    """
    if n < 1:
        raise ValueError("period must be >= 1")
    M = [[int(auto.matrix[0, 0]), int(auto.matrix[0, 1])],
         [int(auto.matrix[1, 0]), int(auto.matrix[1, 1])]]
    P = [[1, 0], [0, 1]]
    for _ in range(n):
        P = [[P[0][0] * M[0][0] + P[0][1] * M[1][0], P[0][0] * M[0][1] + P[0][1] * M[1][1]],
             [P[1][0] * M[0][0] + P[1][1] * M[1][0], P[1][0] * M[0][1] + P[1][1] * M[1][1]]]
    B = [[P[0][0] - 1, P[0][1]], [P[1][0], P[1][1] - 1]]
    det = B[0][0] * B[1][1] - B[0][1] * B[1][0]
    if det == 0:
        raise ValueError("M^n - I singular; the matrix is not hyperbolic")
    count = abs(det)
    if count > MAX_PERIODIC_COUNT:
        raise ValueError(f"{count} periodic points exceeds the enumeration bound "
                         f"{MAX_PERIODIC_COUNT}")
    # columns of B^{-1} = adj(B)/det generate all solutions mod 1
    gens = [(Fraction(B[1][1], det) % 1, Fraction(-B[1][0], det) % 1),
            (Fraction(-B[0][1], det) % 1, Fraction(B[0][0], det) % 1)]
    points = {(Fraction(0), Fraction(0))}
    frontier = [(Fraction(0), Fraction(0))]
    while frontier:
        p = frontier.pop()
        for g in gens:
            q = ((p[0] + g[0]) % 1, (p[1] + g[1]) % 1)
            if q not in points:
                points.add(q)
                frontier.append(q)
    if len(points) != count:
        raise RuntimeError(f"enumerated {len(points)} points, expected {count}")
    return sorted(points)


def _rational_approx(value, max_den=64, tol=1e-9):
    """Best rational p/q with q <= max_den within tol, or None."""
    frac = Fraction(value).limit_denominator(max_den)
    if abs(float(frac) - value) <= tol:
        return frac
    return None


@dataclass
class PeriodicLeaf:
    """Periodic center leaf: a rational base point with its fiber return data.

    The return map on the fiber over the base point is the rotation by
    rotation_number (the theta-sums along the base period).  When the
    rotation number is (numerically) rational with small denominator the
    fiber dynamics is periodic: fiber_period steps of the return map, i.e.
    k_return = period * fiber_period base steps, act as the identity on the
    fiber; the invariant fiber measure is then not pinned down by unique
    ergodicity and defaults to Lebesgue (flagged in reports).
    """

    skew: SkewProduct
    point: tuple                 # pair of Fractions
    period: int
    rotation_number: float = field(init=False)
    orbit_points: np.ndarray = field(init=False)
    shift_partial_sums: np.ndarray = field(init=False)
    rational_rotation: bool = field(init=False)
    fiber_period: int = field(init=False)

    def __post_init__(self):
        p = (Fraction(self.point[0]), Fraction(self.point[1]))
        M = self.skew.base.matrix.tolist()
        orbit = [p]
        q = p
        for _ in range(self.period):
            q = _exact_apply_mod1(M, q)
            orbit.append(q)
        if orbit[-1] != p:
            raise ValueError(f"point {p} does not have exact period {self.period}")
        self.point = p
        self.orbit_points = np.array([[float(a), float(b)] for a, b in orbit[:-1]])
        shifts = self.skew.shift(self.orbit_points)
        self.shift_partial_sums = np.concatenate([[0.0], np.cumsum(shifts)])
        self.rotation_number = float(np.mod(self.shift_partial_sums[-1], 1.0))
        approx = _rational_approx(self.rotation_number)
        self.rational_rotation = approx is not None
        self.fiber_period = approx.denominator if approx is not None else 0

    @property
    def k_return(self):
        """Base steps after which the whole leaf returns pointwise (rational
        rotation only)."""
        if not self.rational_rotation:
            return None
        return self.period * max(self.fiber_period, 1)

    def fiber_orbit(self, t):
        """Fiber coordinates along one base period starting at fiber point t."""
        return np.mod(np.asarray(t, float)[..., None] + self.shift_partial_sums[:-1], 1.0)


def make_leaf(skew, point, period):
    return PeriodicLeaf(skew, point, period)


def _offset_order(limit):
    """Nonzero integer offsets sorted by (norm, angle) for stable enumeration."""
    offs = [(i, j) for i in range(-limit, limit + 1) for j in range(-limit, limit + 1)
            if (i, j) != (0, 0)]
    offs.sort(key=lambda k: (k[0] ** 2 + k[1] ** 2, np.arctan2(k[1], k[0])))
    return offs


@dataclass
class HomoclinicPoint:
    """Transverse intersection of the stable and unstable lines of a fixed point.

    Stored through both line parameters: z = p + s e_u (mod 1) = p + t e_s + k
    with k a nonzero lattice offset, so that forward orbits can be evaluated
    through the contracting stable parameter and backward orbits through the
    contracting unstable parameter (no exponential error growth).
    """

    auto: TorusAutomorphism
    fixed_point: np.ndarray
    lattice_offset: tuple
    unstable_param: float = field(init=False)
    stable_param: float = field(init=False)
    budget_forward: int = 60
    budget_backward: int = 60

    def __post_init__(self):
        self.fixed_point = np.asarray(self.fixed_point, dtype=float).reshape(2)
        k = np.asarray(self.lattice_offset, dtype=float)
        sol = np.linalg.solve(np.column_stack([self.auto.e_u, -self.auto.e_s]), k)
        self.unstable_param = float(sol[0])
        self.stable_param = float(sol[1])
        if abs(self.unstable_param) < 1e-12 or abs(self.stable_param) < 1e-12:
            raise ValueError("degenerate lattice offset gives the fixed point itself")

    @property
    def point(self):
        return self.point_at(0)

    def point_at(self, n):
        """g^n of the homoclinic point, exact up to one rounding step.

        Forward iterates contract along the stable line (z = p + t e_s mod 1,
        parameter scales by mu_s each step); backward iterates contract along
        the unstable line.
        """
        n = int(n)
        if n >= 0:
            param = self.stable_param * self.auto.mu_s ** n
            return wrap(self.fixed_point + param * self.auto.e_s)
        param = self.unstable_param * self.auto.mu_u ** n
        return wrap(self.fixed_point + param * self.auto.e_u)

    def distance_to_fixed(self, n):
        return float(torus_dist(self.point_at(n), self.fixed_point))

    def verify_convergence(self, C=1.0, slack=1e-9):
        """Check dist(g^n z, p) <= C * lambda^n * dist(z, p) over the budgets."""
        lam = self.auto.contraction
        d0f = abs(self.stable_param)
        d0b = abs(self.unstable_param)
        for n in range(self.budget_forward + 1):
            if self.distance_to_fixed(n) > C * lam ** n * d0f + slack:
                return False
        for n in range(self.budget_backward + 1):
            if self.distance_to_fixed(-n) > C * lam ** n * d0b + slack:
                return False
        return True


def find_homoclinic(auto, fixed_point, index, budget=60):
    """Enumerate homoclinic points of a fixed point by lattice offset.

    Intersects the unstable eigenline through the fixed point with the integer
    translates of the stable eigenline; `index` selects the offset in a fixed
    (norm, angle) order, so distinct indices give distinct intersections (and,
    checked by tests, distinct orbits for small indices).
    """
    fixed_point = np.asarray(fixed_point, dtype=float)
    if torus_dist(auto.apply(fixed_point), fixed_point) > 1e-12:
        raise ValueError("base point must be fixed by the automorphism")
    offsets = _offset_order(limit=max(3, int(np.ceil(np.sqrt(index + 1))) + 2))
    if index >= len(offsets):
        raise ValueError(f"index {index} out of the enumerated offset range")
    hom = HomoclinicPoint(auto, fixed_point, offsets[index],
                          budget_forward=budget, budget_backward=budget)
    if not hom.verify_convergence():
        raise RuntimeError("homoclinic convergence check failed; eigenvector "
                           "precision loss suspected")
    return hom


def center_holonomy_shift(skew, x, y, kind, tol=SERIES_TOL, max_terms=5000):
    """Fiber shift of the center holonomy between nearby fibers.

    For y on the local stable set of x the strong stable leaf through (x, t)
    meets the fiber over y at t + sum_{n>=0} (theta(g^n x) - theta(g^n y));
    the unstable version uses backward iterates.  The series is truncated
    when the geometric tail bound drops below tol.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    y = np.asarray(y, dtype=float).reshape(2)
    auto = skew.base
    delta = torus_lift(y - x)
    dist0 = float(np.linalg.norm(delta))
    if dist0 == 0.0:
        return 0.0
    if kind == "stable":
        direction, mu, forward = auto.e_s, auto.mu_s, True
    elif kind == "unstable":
        direction, mu, forward = auto.e_u, auto.mu_u, False
    else:
        raise ValueError("kind must be 'stable' or 'unstable'")
    if abs(abs(delta @ direction) - dist0) > 1e-8 * max(dist0, 1.0):
        raise NotOnLeafError(f"second point is not on the local {kind} set of the first")

    lam = auto.contraction
    lip = skew.shift.lipschitz_bound()
    if lip == 0.0:
        return 0.0
    total = 0.0
    pos = x.copy()
    offset = delta.copy()
    for n in range(max_terms):
        if forward:
            term = skew.shift(pos) - skew.shift(wrap(pos + offset))
        else:
            pos = auto.apply_inverse(pos)
            offset = offset / mu
            term = skew.shift(wrap(pos + offset)) - skew.shift(pos)
        total += float(term)
        tail = lip * dist0 * lam ** (n + 1) / (1.0 - lam)
        if tail < tol:
            break
        if forward:
            pos = auto.apply(pos)
            offset = offset * mu
    else:
        raise RuntimeError("center holonomy series did not reach its tail bound")
    return total


def homoclinic_center_shifts(skew, hom, tol=SERIES_TOL, max_terms=5000):
    """(unstable, stable) fiber shifts along a homoclinic connection.

    unstable: transports the fiber over the fixed point to the fiber over the
    homoclinic point (backward orbits converge); stable: transports the fiber
    over the homoclinic point back to the fixed-point fiber (forward orbits).
    """
    theta = skew.shift
    p = hom.fixed_point
    theta_p = float(theta(p))
    lam = hom.auto.contraction
    lip = theta.lipschitz_bound()

    delta_u = 0.0
    for n in range(1, max_terms):
        delta_u += float(theta(hom.point_at(-n))) - theta_p
        tail = lip * abs(hom.unstable_param) * lam ** (n + 1) / (1.0 - lam)
        if tail < tol:
            break
    delta_s = 0.0
    for n in range(0, max_terms):
        delta_s += float(theta(hom.point_at(n))) - theta_p
        tail = lip * abs(hom.stable_param) * lam ** (n + 1) / (1.0 - lam)
        if tail < tol:
            break
    return delta_u, delta_s
