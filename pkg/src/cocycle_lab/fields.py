"""Scalar fields and metric helpers on the torus-times-circle phase space.

Phase-space points are arrays of shape (..., 3): two torus coordinates
followed by one fiber (circle) coordinate, all understood mod 1.  Fields
carry enough coefficient data to bound their sup norm and Lipschitz
constant analytically, which downstream certificates rely on.
"""

import numpy as np

TWO_PI = 2.0 * np.pi

# Offsets of the 9 lattice translates used by the quotient metric.
_LATTICE_2D = np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1)], dtype=float)


def wrap(points):
    """Reduce coordinates to the fundamental domain [0, 1)."""
    return np.mod(np.asarray(points, dtype=float), 1.0)


def torus_lift(delta):
    """Minimal-norm lift of a difference vector on the 2-torus.

    `delta` has shape (..., 2); returns the representative of delta + Z^2
    closest to the origin (ties broken toward the smaller translate).
    """
    delta = np.asarray(delta, dtype=float)
    cands = delta[..., None, :] + _LATTICE_2D
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmin(norms, axis=-1)
    return np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]


def torus_dist(a, b):
    """Quotient-metric distance on the 2-torus (min over lattice translates)."""
    return np.linalg.norm(torus_lift(np.asarray(a, float) - np.asarray(b, float)), axis=-1)


def circle_dist(s, t):
    """Distance on the circle R/Z."""
    d = np.mod(np.asarray(s, float) - np.asarray(t, float), 1.0)
    return np.minimum(d, 1.0 - d)


def phase_dist(p, q):
    """Product metric on torus x circle: sqrt(d_torus^2 + d_circle^2)."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    dt = torus_dist(p[..., :2], q[..., :2])
    dc = circle_dist(p[..., 2], q[..., 2])
    return np.sqrt(dt * dt + dc * dc)


class TrigPolynomial:
    """Real trigonometric polynomial with integer frequency vectors.

    value(p) = constant + sum_j [ c_j cos(2 pi k_j . p) + s_j sin(2 pi k_j . p) ]

    Frequencies are integer vectors of length `ndim` (2 for fields on the
    torus base, 3 for fields on the full phase space).
    """

    def __init__(self, constant=0.0, freqs=None, cos_coeffs=None, sin_coeffs=None, ndim=3):
        self.constant = float(constant)
        if freqs is None:
            freqs = np.zeros((0, ndim), dtype=int)
        self.freqs = np.atleast_2d(np.asarray(freqs, dtype=int))
        if self.freqs.size == 0:
            self.freqs = self.freqs.reshape(0, ndim)
        self.ndim = self.freqs.shape[1]
        m = self.freqs.shape[0]
        self.cos_coeffs = np.zeros(m) if cos_coeffs is None else np.asarray(cos_coeffs, float)
        self.sin_coeffs = np.zeros(m) if sin_coeffs is None else np.asarray(sin_coeffs, float)
        if self.cos_coeffs.shape != (m,) or self.sin_coeffs.shape != (m,):
            raise ValueError("coefficient arrays must match the number of frequency rows")

    @classmethod
    def constant_field(cls, value, ndim=3):
        return cls(constant=value, ndim=ndim)

    @classmethod
    def cosine(cls, freq, amplitude, ndim=None):
        freq = np.asarray(freq, dtype=int)
        if ndim is None:
            ndim = freq.size
        return cls(freqs=freq.reshape(1, -1), cos_coeffs=[amplitude], ndim=ndim)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if self.freqs.shape[0] == 0:
            return np.full(points.shape[:-1], self.constant)
        phases = TWO_PI * (points @ self.freqs.T)
        return (self.constant
                + np.cos(phases) @ self.cos_coeffs
                + np.sin(phases) @ self.sin_coeffs)

    def amplitudes(self):
        return np.hypot(self.cos_coeffs, self.sin_coeffs)

    def sup_bound(self):
        """Upper bound for sup |value|."""
        return abs(self.constant) + float(np.sum(self.amplitudes()))

    def lipschitz_bound(self):
        """Upper bound for the Lipschitz constant w.r.t. the quotient metric."""
        if self.freqs.shape[0] == 0:
            return 0.0
        knorm = np.linalg.norm(self.freqs, axis=1)
        return float(TWO_PI * np.sum(knorm * self.amplitudes()))

    def __repr__(self):
        return (f"TrigPolynomial(constant={self.constant!r}, "
                f"terms={self.freqs.shape[0]}, ndim={self.ndim})")


class BumpProfile:
    """One-dimensional C^2 ramp: 1 on [0, inner], 0 on [outer, inf).

    The ramp is the quintic smoothstep, so the profile has two continuous
    derivatives and max slope 15/8 / (outer - inner).
    """

    def __init__(self, inner, outer):
        if not (0.0 <= inner < outer):
            raise ValueError("need 0 <= inner < outer")
        self.inner = float(inner)
        self.outer = float(outer)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        u = np.clip((r - self.inner) / (self.outer - self.inner), 0.0, 1.0)
        return 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)

    def lipschitz_bound(self):
        return 1.875 / (self.outer - self.inner)


class LocalizedBump:
    """Scalar field `scale * bump(base distance) [* bump(fiber distance)]`.

    Supported on a tube around the fiber circle over `center_base`; the
    optional fiber factor narrows the support to an arc around
    `fiber_center`.  Used to localize perturbation factors.
    """

    def __init__(self, center_base, profile, scale=1.0, fiber_center=None, fiber_profile=None):
        self.center_base = np.asarray(center_base, dtype=float).reshape(2)
        self.profile = profile
        self.scale = float(scale)
        self.fiber_center = None if fiber_center is None else float(fiber_center)
        self.fiber_profile = fiber_profile
        if (fiber_center is None) != (fiber_profile is None):
            raise ValueError("fiber_center and fiber_profile must be given together")

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        vals = self.profile(torus_dist(points[..., :2], self.center_base))
        if self.fiber_center is not None:
            vals = vals * self.fiber_profile(circle_dist(points[..., 2], self.fiber_center))
        return self.scale * vals

    def sup_bound(self):
        return abs(self.scale)

    def lipschitz_bound(self):
        # distance functions are 1-Lipschitz; product rule with sups <= 1
        lip = self.profile.lipschitz_bound()
        if self.fiber_profile is not None:
            lip += self.fiber_profile.lipschitz_bound()
        return abs(self.scale) * lip
