"""Fiber-bunching certification and invariant holonomies.

Strong stable holonomies are computed as the truncated limit
    H_{p,q} = lim_n A^n(q)^{-1} A^n(p)
accumulated in telescoped form H = I + sum_n Q_n^{-1} (G_n - I) P_n with
G_n = A(f^n q)^{-1} A(f^n p): each term is bounded by
||A^n|| ||A^n||^{-1} * Lip(A) * dist(f^n p, f^n q)^alpha, which a passing
fiber-bunching certificate makes geometrically summable.  Unstable holonomies
run the same accumulation for the inverse cocycle over the inverse base map.
"""

from dataclasses import dataclass, field

import numpy as np

from .base import center_holonomy_shift, homoclinic_center_shifts, NotOnLeafError
from .fields import phase_dist, torus_lift, wrap
from .symplectic import certify_symplectic

TERM_TOL = 1e-10          # successive-value threshold for truncation
RESIDUAL_TOL = 1e-8       # required half-window residual
HOLONOMY_N_MAX = 400
BUNCHING_RATE_CAP = 0.95  # certificates require fitted theta below this
MONOTONE_SLACK = 0.02     # max per-step relative increase in the decay window


class HolonomyCertificateError(RuntimeError):
    """Raised when holonomies are requested without a passing certificate."""


class HolonomyConvergenceError(RuntimeError):
    """Raised when the holonomy limit fails to settle within its budget."""


@dataclass
class FiberBunchingCertificate:
    """Empirical fiber-bunching fit over a sampling grid.

    `curve[n-1]` holds sup_x ||A^n(x)|| ||A^n(x)^{-1}|| nu^(n alpha); the
    certificate passes when the fitted decay rate is at most
    BUNCHING_RATE_CAP and the curve is non-increasing (up to MONOTONE_SLACK)
    over the second half of the window.
    """

    alpha: float
    c3: float
    theta_rate: float
    passed: bool
    n_max: int
    grid_shape: tuple
    curve: np.ndarray
    monotone_ok: bool

    def to_dict(self):
        return {
            "alpha": float(self.alpha),
            "c3": float(self.c3),
            "theta_rate": float(self.theta_rate),
            "passed": bool(self.passed),
            "n_max": int(self.n_max),
            "grid_shape": list(self.grid_shape),
            "monotone_ok": bool(self.monotone_ok),
            "curve": [float(v) for v in self.curve],
        }


def certify_fiber_bunching(A, skew, n_max=30, grid=(8, 8, 8)):
    """Fit sup_x ||A^n(x)|| ||A^n(x)^{-1}|| nu^(n alpha) against C theta^n.

    The sup is taken over a regular grid of start points; products are
    accumulated batched over the grid.  Failing is a value, not an error.
    """
    if n_max < 10:
        raise ValueError("need n_max >= 10 for a meaningful fit")
    axes = [(np.arange(g) + 0.5) / g for g in grid]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    nu_alpha = skew.nu ** A.alpha

    P = np.broadcast_to(np.eye(A.dim), (mesh.shape[0], A.dim, A.dim)).copy()
    pos = mesh.copy()
    curve = np.empty(n_max)
    for n in range(1, n_max + 1):
        P = A(pos) @ P
        pos = skew.step(pos)
        svals = np.linalg.svd(P, compute_uv=False)
        curve[n - 1] = np.max(svals[:, 0] / svals[:, -1]) * nu_alpha ** n

    ns = np.arange(1, n_max + 1)
    slope, intercept = np.polyfit(ns, np.log(curve), 1)
    theta_rate = float(np.exp(slope))
    c3 = float(np.max(curve / theta_rate ** ns))
    half = n_max // 2
    ratios = curve[half:] / curve[half - 1:-1]
    monotone_ok = bool(np.all(ratios <= 1.0 + MONOTONE_SLACK))
    passed = theta_rate <= BUNCHING_RATE_CAP and monotone_ok
    return FiberBunchingCertificate(A.alpha, c3, theta_rate, passed,
                                    n_max, tuple(grid), curve, monotone_ok)


def theoretical_holder_constant(A, skew, certificate):
    """Single constant L with ||H - I|| <= L dist^alpha for all bunched pairs.

    From the telescoped series: each term is bounded by
    c3 (theta/nu^alpha)^n * sup||A^{-1}|| * Lip(A) * (C_eff nu^n d)^alpha,
    which sums to c3 sup||A|| Lip(A) C_eff^alpha / (1 - theta) * d^alpha.
    C_eff accounts for the fiber component of stable-pair distances.
    """
    c_eff = 1.0 + skew.shift.lipschitz_bound() / (1.0 - skew.nu)
    theta = min(certificate.theta_rate, BUNCHING_RATE_CAP)
    return (certificate.c3 * A.sup_norm_bound() * A.lipschitz_bound()
            * c_eff ** A.alpha / (1.0 - theta))


@dataclass
class HolonomyOperator:
    """Strong holonomy between two points on the same strong leaf."""

    point_from: np.ndarray
    point_to: np.ndarray
    kind: str
    matrix: np.ndarray
    n_used: int
    residual: float
    distance: float
    ratio: float = field(init=False)     # empirical Holder quotient ||H-I||/d^alpha
    alpha: float = 1.0

    def __post_init__(self):
        dev = np.linalg.norm(self.matrix - np.eye(self.matrix.shape[0]), ord=2)
        self.ratio = float(dev / self.distance ** self.alpha) if self.distance > 0 else 0.0

    @property
    def inverse(self):
        return np.linalg.inv(self.matrix)


def _holonomy_limit(stream, dim, term_tol=TERM_TOL, residual_tol=RESIDUAL_TOL,
                    n_max=HOLONOMY_N_MAX):
    """Accumulate H = I + sum Q_n^{-1}(G_n - I)P_n until terms and the
    half-window residual are below tolerance."""
    H = np.eye(dim)
    P = np.eye(dim)
    Qinv = np.eye(dim)
    snapshots = [H.copy()]
    term_trace = []
    for j in range(n_max):
        Bp, Bq_inv = stream(j)
        G = Bq_inv @ Bp
        term = Qinv @ (G - np.eye(dim)) @ P
        H = H + term
        snapshots.append(H.copy())
        P = Bp @ P
        Qinv = Qinv @ Bq_inv
        tnorm = float(np.linalg.norm(term, ord=2))
        term_trace.append(tnorm)
        if j >= 4 and tnorm < term_tol:
            residual = float(np.linalg.norm(H - snapshots[(j + 1) // 2], ord=2))
            if residual <= residual_tol:
                return H, j + 1, residual
        if np.linalg.norm(P, ord=2) > 1e100 or np.linalg.norm(Qinv, ord=2) > 1e100:
            break
    raise HolonomyConvergenceError(
        f"holonomy limit not settled within {n_max} steps; "
        f"last terms {term_trace[-5:]}")


def _local_pair_stream(A, skew, p, q, kind):
    """Step-matrix stream for a local stable/unstable pair.

    The second point is tracked through its exact eigenline offset from the
    first, so the pair geometry stays accurate for as long as the limit needs.
    """
    auto = skew.base
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    state = {"x": p[:2].copy(), "t": p[2], "off": torus_lift(q[:2] - p[:2]), "r": q[2]}

    if kind == "stable":
        def stream(j):
            x, t, off, r = state["x"], state["t"], state["off"], state["r"]
            y = wrap(x + off)
            Bp = A(np.concatenate([x, [t]]))
            Bq_inv = A.evaluate_inverse(np.concatenate([y, [r]]))
            state["t"] = (t + float(skew.shift(x))) % 1.0
            state["r"] = (r + float(skew.shift(y))) % 1.0
            state["x"] = auto.apply(x)
            state["off"] = off * auto.mu_s
            return Bp, Bq_inv
    elif kind == "unstable":
        def stream(j):
            x_next = auto.apply_inverse(state["x"])
            off_next = state["off"] / auto.mu_u
            y_next = wrap(x_next + off_next)
            t_next = (state["t"] - float(skew.shift(x_next))) % 1.0
            r_next = (state["r"] - float(skew.shift(y_next))) % 1.0
            state.update(x=x_next, t=t_next, off=off_next, r=r_next)
            # inverse cocycle over the inverse base: step matrices are
            # A(next point)^{-1} on the p side, A(next point) closing Q^{-1}
            Bp = A.evaluate_inverse(np.concatenate([x_next, [t_next]]))
            Bq_inv = A(np.concatenate([y_next, [r_next]]))
            return Bp, Bq_inv
    else:
        raise ValueError("kind must be 'stable' or 'unstable'")
    return stream


def check_local_pair(skew, p, q, kind, tol=1e-8):
    """Verify q lies on the local strong set of p (base line + fiber shift)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    shift = center_holonomy_shift(skew, p[:2], q[:2], kind)   # raises off-line
    fiber_defect = abs((p[2] + shift - q[2] + 0.5) % 1.0 - 0.5)
    if fiber_defect > tol:
        raise NotOnLeafError(
            f"fiber coordinate off the strong {kind} leaf by {fiber_defect:.2e}")


def stable_pair(skew, p, distance):
    """Point at the given base distance from p on its strong stable leaf."""
    p = np.asarray(p, dtype=float)
    y = skew.base.stable_offset(p[:2], distance)
    r = (p[2] + center_holonomy_shift(skew, p[:2], y, "stable")) % 1.0
    return np.concatenate([y, [r]])


def unstable_pair(skew, p, distance):
    p = np.asarray(p, dtype=float)
    y = skew.base.unstable_offset(p[:2], distance)
    r = (p[2] + center_holonomy_shift(skew, p[:2], y, "unstable")) % 1.0
    return np.concatenate([y, [r]])


def strong_holonomy(A, skew, p, q, kind, certificate, term_tol=TERM_TOL,
                    residual_tol=RESIDUAL_TOL, n_max=HOLONOMY_N_MAX):
    """Strong stable/unstable holonomy between two points on one local leaf.

    Requires a passing fiber-bunching certificate (the condition guaranteeing
    the limit exists); refuses to run without one.
    """
    if certificate is None or not certificate.passed:
        raise HolonomyCertificateError(
            "a passing fiber-bunching certificate is required for holonomies")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.allclose(p, q, atol=1e-15):
        return HolonomyOperator(p, q, kind, np.eye(A.dim), 0, 0.0, 0.0, alpha=A.alpha)
    check_local_pair(skew, p, q, kind)
    stream = _local_pair_stream(A, skew, p, q, kind)
    H, n_used, residual = _holonomy_limit(stream, A.dim, term_tol, residual_tol, n_max)
    return HolonomyOperator(p, q, kind, H, n_used, residual,
                            float(phase_dist(p, q)), alpha=A.alpha)


@dataclass
class HomoclinicLoop:
    """Loop through a homoclinic connection of a fixed center leaf.

    The circle map is h(t) = t + shift_unstable + shift_stable (a rotation);
    the per-point loop matrix is the stable holonomy back to the fixed-point
    fiber composed with the unstable holonomy out to the homoclinic fiber.
    """

    A: object
    skew: object
    leaf: object
    hom: object
    certificate: FiberBunchingCertificate
    shift_unstable: float = field(init=False)
    shift_stable: float = field(init=False)

    def __post_init__(self):
        if self.leaf.period != 1:
            raise ValueError("loop construction requires a fixed center leaf")
        if self.certificate is None or not self.certificate.passed:
            raise HolonomyCertificateError(
                "a passing fiber-bunching certificate is required for loops")
        du, ds = homoclinic_center_shifts(self.skew, self.hom)
        self.shift_unstable = du
        self.shift_stable = ds

    @property
    def rotation(self):
        return (self.shift_unstable + self.shift_stable) % 1.0

    def h(self, t, j=1):
        return np.mod(np.asarray(t, dtype=float) + j * self.rotation, 1.0)

    def h_unstable(self, t):
        return np.mod(np.asarray(t, dtype=float) + self.shift_unstable, 1.0)

    def _unstable_leg_stream(self, t):
        """Backward-orbit stream from (fixed point, t) to (homoclinic, h_u t)."""
        A, skew, hom = self.A, self.skew, self.hom
        theta_p = float(skew.shift(hom.fixed_point))
        state = {"tp": float(t), "tq": float(self.h_unstable(t)), "j": 0}

        def stream(j):
            state["j"] += 1
            k = state["j"]
            zp = hom.point_at(-k)
            state["tp"] = (state["tp"] - theta_p) % 1.0
            state["tq"] = (state["tq"] - float(skew.shift(zp))) % 1.0
            Bp = A.evaluate_inverse(np.concatenate([hom.fixed_point, [state["tp"]]]))
            Bq_inv = A(np.concatenate([zp, [state["tq"]]]))
            return Bp, Bq_inv

        return stream

    def _stable_leg_stream(self, t):
        """Forward-orbit stream from (homoclinic, h_u t) to (fixed point, h t)."""
        A, skew, hom = self.A, self.skew, self.hom
        theta_p = float(skew.shift(hom.fixed_point))
        state = {"tp": float(self.h_unstable(t)), "tq": float(self.h(t)), "j": 0}

        def stream(j):
            k = state["j"]
            zp = hom.point_at(k)
            Bp = A(np.concatenate([zp, [state["tp"]]]))
            Bq_inv = A.evaluate_inverse(np.concatenate([hom.fixed_point, [state["tq"]]]))
            state["tp"] = (state["tp"] + float(skew.shift(zp))) % 1.0
            state["tq"] = (state["tq"] + theta_p) % 1.0
            state["j"] += 1
            return Bp, Bq_inv

        return stream

    def legs(self, t, term_tol=TERM_TOL, residual_tol=RESIDUAL_TOL, n_max=HOLONOMY_N_MAX):
        """(unstable, stable) holonomy operators of the loop at fiber point t."""
        Hu_mat, nu_used, res_u = _holonomy_limit(
            self._unstable_leg_stream(t), self.A.dim, term_tol, residual_tol, n_max)
        Hs_mat, ns_used, res_s = _holonomy_limit(
            self._stable_leg_stream(t), self.A.dim, term_tol, residual_tol, n_max)
        p0 = np.concatenate([self.hom.fixed_point, [t]])
        q0 = np.concatenate([self.hom.point, [self.h_unstable(t)]])
        q1 = np.concatenate([self.hom.fixed_point, [float(self.h(t))]])
        Hu = HolonomyOperator(p0, q0, "unstable", Hu_mat, nu_used, res_u,
                              float(phase_dist(p0, q0)), alpha=self.A.alpha)
        Hs = HolonomyOperator(q0, q1, "stable", Hs_mat, ns_used, res_s,
                              float(phase_dist(q0, q1)), alpha=self.A.alpha)
        return Hu, Hs

    def holonomy(self, t):
        """Loop matrix at fiber point t (stable leg composed after unstable)."""
        Hu, Hs = self.legs(t)
        return certify_symplectic(Hs.matrix @ Hu.matrix, self.A.form, tol=1e-9)

    def continuity_modulus(self, grid=64):
        """Sampled modulus of continuity of t -> loop matrix over a fiber grid."""
        ts = np.arange(grid) / grid
        mats = np.stack([self.holonomy(t).entries for t in ts])
        diffs = np.linalg.norm(mats - np.roll(mats, -1, axis=0), ord=2, axis=(-2, -1))
        return float(np.max(diffs)), 1.0 / grid


def loop_holonomy(A, skew, loop, t):
    """Loop matrix at fiber coordinate t (module-level form)."""
    if loop.A is not A:
        raise ValueError("loop was built for a different cocycle")
    return loop.holonomy(t)


def iterate_loop(loop, t, j):
    """j-fold loop composition along the h-orbit: returns (h^j t, matrix)."""
    if j < 1:
        raise ValueError("loop iterate count must be >= 1")
    t_cur = float(t)
    out = np.eye(loop.A.dim)
    for _ in range(int(j)):
        out = loop.holonomy(t_cur).entries @ out
        t_cur = float(loop.h(t_cur))
    return t_cur, certify_symplectic(out, loop.A.form, tol=1e-8)
