"""Executable diagnostics for the loop hypotheses: weak pinching of a
periodic leaf, weak twisting of the homoclinic loop, and epsilon-monotonicity
of circle cocycles.

Measure-theoretic statements ("positive measure of t") are rendered as
sample fractions with explicit seeds and floors; verdicts are values, never
exceptions, and inconclusive outcomes carry a diagnostic note.
"""

from dataclasses import dataclass

import numpy as np

from .cocycle import (leaf_window, oseledets_frame, restrict_to_leaf,
                      _benettin_batch)
from .holonomy import iterate_loop
from .symplectic import principal_angles

POSITIVE_FLOOR = 1e-8       # growth below this counts as numerically zero
ZERO_BAND = 0.02            # max 3*stderr for a clean "zero" verdict
TWISTING_FRACTION_FLOOR = 0.05
GAP_FLOOR = 1e-3


@dataclass
class PinchingVerdict:
    """Outcome of the leaf-restricted positivity test."""

    leaf_point: tuple
    estimate: float
    stderr: float
    verdict: str                  # "positive" | "zero" | "inconclusive"
    route: str                    # "ergodic-average" | "eigenvalue-scan"
    gap_fractions: tuple
    positive_fraction: float
    n: int
    orbits: int
    seed: int
    measure: str
    spectrum: tuple = ()          # all 2d leaf exponents, sorted decreasing

    def to_dict(self):
        return {
            "leaf_point": [str(c) for c in self.leaf_point],
            "estimate": float(self.estimate),
            "stderr": float(self.stderr),
            "verdict": self.verdict,
            "route": self.route,
            "gap_fractions": [float(g) for g in self.gap_fractions],
            "positive_fraction": float(self.positive_fraction),
            "n": int(self.n),
            "orbits": int(self.orbits),
            "seed": int(self.seed),
            "measure": self.measure,
            "spectrum": [float(v) for v in self.spectrum],
        }


def _verdict_from(estimate, stderr):
    if estimate > max(3.0 * stderr, POSITIVE_FLOOR):
        return "positive"
    if 3.0 * stderr <= ZERO_BAND:
        return "zero"
    return "inconclusive"


def leaf_lyapunov(B, n, orbits, seed):
    """Benettin QR spectrum of a circle cocycle over its rotation.

    Returns (per_orbit, exponents, stderr); exponents are per application of
    the return map, sorted decreasing.
    """
    rng = np.random.default_rng(seed)
    t0 = rng.random(orbits)
    Q = np.broadcast_to(np.eye(B.dim), (orbits, B.dim, B.dim)).copy()
    sums = np.zeros((orbits, B.dim))
    qr_interval = 1 if B.dim <= 4 else 5
    chunk = 2048
    done = 0
    while done < n:
        size = min(chunk, n - done)
        steps = done + np.arange(size)
        ts = np.mod(t0[None, :] + B.rotation_number * steps[:, None], 1.0)
        mats = B(ts)
        Q, sums = _benettin_batch(mats, Q, sums, qr_interval, done)
        done += size
    per_orbit = np.sort(sums / n, axis=1)[:, ::-1]
    exponents = per_orbit.mean(axis=0)
    stderr = (per_orbit.std(axis=0, ddof=1) / np.sqrt(orbits)
              if orbits > 1 else np.zeros(B.dim))
    return per_orbit, exponents, stderr


def _return_family(B, grid):
    """Full fiber-period return matrices over a grid of fiber points."""
    q = max(B.leaf.fiber_period, 1)
    ts = np.arange(grid) / grid
    out = None
    cur = ts
    for _ in range(q):
        block = B(cur)
        out = block if out is None else block @ out
        cur = np.mod(cur + B.rotation_number, 1.0)
    return ts, out, q


def weak_pinching_test(A, skew, leaf, n, orbits, seed, grid=512, measure="lebesgue"):
    """Positivity test for the cocycle restricted to a periodic center leaf.

    Irrational fiber rotation: ergodic Benettin averages over sampled fiber
    orbits.  Rational rotation (including the untwisted case): the return map
    over the full fiber period is evaluated pointwise on a grid and exponents
    are read off its eigenvalue moduli; positivity on an open parameter set
    shows up as a positive sample fraction.
    """
    B = restrict_to_leaf(A, skew, leaf, measure=measure)
    if leaf.rational_rotation:
        ts, mats, q = _return_family(B, grid)
        evals = np.linalg.eigvals(mats)
        mods = np.sort(np.abs(evals), axis=1)[:, ::-1]
        k = leaf.period * q
        lam = np.log(np.maximum(mods, 1e-300)) / k
        lam[np.abs(lam) < POSITIVE_FLOOR] = 0.0
        top = lam[:, 0]
        estimate = float(top.mean())
        stderr = float(top.std(ddof=1) / np.sqrt(grid)) if grid > 1 else 0.0
        gaps = lam[:, :-1] - lam[:, 1:]
        gap_fractions = tuple(float(np.mean(g > GAP_FLOOR)) for g in gaps.T)
        positive_fraction = float(np.mean(top > 0.0))
        verdict = _verdict_from(estimate, stderr)
        return PinchingVerdict(tuple(map(str, leaf.point)), estimate, stderr, verdict,
                               "eigenvalue-scan", gap_fractions, positive_fraction,
                               grid, 1, int(seed), B.measure,
                               tuple(float(v) for v in lam.mean(axis=0)))
    per_orbit, exponents, stderr = leaf_lyapunov(B, n, orbits, seed)
    gaps = per_orbit[:, :-1] - per_orbit[:, 1:]
    gap_fractions = tuple(float(np.mean(g > GAP_FLOOR)) for g in gaps.T)
    positive_fraction = float(np.mean(per_orbit[:, 0] > 3.0 * max(stderr[0], POSITIVE_FLOOR)))
    verdict = _verdict_from(float(exponents[0]), float(stderr[0]))
    return PinchingVerdict(tuple(map(str, leaf.point)), float(exponents[0]),
                           float(stderr[0]), verdict, "ergodic-average",
                           gap_fractions, positive_fraction, n, orbits,
                           int(seed), B.measure, tuple(float(v) for v in exponents))


@dataclass
class TwistingVerdict:
    """Outcome of the loop-vs-Oseledets transversality test."""

    verdict: str                  # "positive" | "negative" | "inconclusive"
    j_used: int                   # smallest twisting power (0 when none)
    fractions: tuple              # passing fraction per j = 1..j_max
    eps_angle: float
    samples: int
    excluded: tuple               # non-convergent sample counts per j
    note: str = ""

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "j_used": int(self.j_used),
            "fractions": [float(f) for f in self.fractions],
            "eps_angle": float(self.eps_angle),
            "samples": int(self.samples),
            "excluded": [int(e) for e in self.excluded],
            "note": self.note,
        }


def _line_angles(H, frame_from, frame_to):
    """Min angle between the pushed splitting and the target splitting."""
    angles = []
    for Ea in (frame_from.E_u, frame_from.E_s):
        moved = Ea.apply(H)
        for Eb in (frame_to.E_u, frame_to.E_s):
            ang = principal_angles(moved, Eb)
            angles.append(float(np.min(ang)) if ang.size else 0.0)
    return min(angles)


def weak_twisting_test(A, skew, loop, pinching, j_max, samples, eps_angle, seed,
                       frame_window=128, fraction_floor=TWISTING_FRACTION_FLOOR):
    """Check whether loop powers move the Oseledets splitting off itself.

    For sampled fiber points t the splitting at t is pushed through j loop
    steps and compared with the splitting at h^j(t); a sample passes at level
    j when all four line-pair angles exceed eps_angle.  Degenerate splittings
    (zero exponent, whole-space convention) fail; non-convergent frame
    estimates are excluded and counted.  Requires a positive pinching verdict.
    """
    if eps_angle <= 0:
        raise ValueError("eps_angle must be positive (zero trivializes the test)")
    if pinching.verdict != "positive":
        raise ValueError("weak twisting needs a positive pinching verdict "
                         f"(got {pinching.verdict})")
    rng = np.random.default_rng(seed)
    ts = rng.random(samples)
    B = restrict_to_leaf(A, skew, loop.leaf)
    window = leaf_window(B)

    frames = {}

    def frame_at(t):
        key = round(float(t), 12)
        if key not in frames:
            frames[key] = oseledets_frame(window, t, frame_window)
        return frames[key]

    fractions = []
    excluded_counts = []
    j_used = 0
    verdict = "negative"
    for j in range(1, j_max + 1):
        passes = 0
        excluded = 0
        for t in ts:
            fr0 = frame_at(t)
            tj = float(loop.h(t, j))
            frj = frame_at(tj)
            if not (fr0.convergent and frj.convergent):
                excluded += 1
                continue
            if fr0.degenerate or frj.degenerate:
                continue      # whole-space convention: intersection unavoidable
            _, Hj = iterate_loop(loop, t, j)
            if _line_angles(Hj.entries, fr0, frj) > eps_angle:
                passes += 1
        included = samples - excluded
        fractions.append(passes / included if included else 0.0)
        excluded_counts.append(excluded)
        if included and fractions[-1] >= fraction_floor and verdict == "negative":
            verdict = "positive"
            j_used = j
    if all(e == samples for e in excluded_counts):
        return TwistingVerdict("inconclusive", 0, tuple(fractions), eps_angle,
                               samples, tuple(excluded_counts),
                               note="all samples had non-convergent Oseledets frames")
    return TwistingVerdict(verdict, j_used, tuple(fractions), eps_angle,
                           samples, tuple(excluded_counts))


@dataclass
class MonotonicityResult:
    """Minimal projective-angle difference quotient of a circle cocycle."""

    margin: float
    epsilon: float
    passed: bool
    grid: int
    window: float
    directions: int
    seed: int

    def to_dict(self):
        return {
            "margin": float(self.margin),
            "epsilon": float(self.epsilon),
            "passed": bool(self.passed),
            "grid": int(self.grid),
            "window": float(self.window),
            "directions": int(self.directions),
            "seed": int(self.seed),
        }


def oseledets_continuity_sweep(A, skew, leaf, perturb, sizes, eps_angle=0.05,
                               samples=64, seed=0, frame_window=128):
    """Angle-deviation fractions of the Oseledets splitting under shrinking
    perturbations: for each size s, the fraction of sampled fiber points where
    the splitting of perturb(A, s) restricted to the leaf deviates from the
    splitting of A by more than eps_angle.  Degenerate or non-convergent
    frames on either side count as deviating (whole-space / unknown).
    """
    from .cocycle import leaf_window, oseledets_frame, restrict_to_leaf
    rng = np.random.default_rng(seed)
    ts = rng.random(samples)
    base_window = leaf_window(restrict_to_leaf(A, skew, leaf))
    base_frames = [oseledets_frame(base_window, t, frame_window) for t in ts]
    rows = []
    for size in sizes:
        moved = perturb(A, float(size))
        window = leaf_window(restrict_to_leaf(moved, skew, leaf))
        deviating = 0
        for t, fr0 in zip(ts, base_frames):
            fr1 = oseledets_frame(window, t, frame_window)
            if (fr0.degenerate or fr1.degenerate
                    or not (fr0.convergent and fr1.convergent)):
                deviating += 1
                continue
            ang = max(float(np.max(principal_angles(fr0.E_u, fr1.E_u))),
                      float(np.max(principal_angles(fr0.E_s, fr1.E_s))))
            if ang > eps_angle:
                deviating += 1
        rows.append({"size": float(size), "deviation_fraction": deviating / samples})
    return rows


def epsilon_monotonicity_test(B, epsilon, t_grid, w_samples, seed, window=1.0 / 64):
    """Slope test for t |-> B(t) w / ||B(t) w|| over all sampled directions.

    The direction image is tracked through its continuous angle lift on a
    circle grid (extended past the wrap by one window so every nearby pair is
    covered); the margin is the smallest |lift difference| / |t difference|
    over grid pairs within the window.  Nested grids (doubling t_grid with the
    same seed and window) can only shrink the margin.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    G = int(t_grid)
    m = max(1, int(round(window * G)))
    ts_ext = np.arange(G + m) / G
    mats = B(np.mod(ts_ext, 1.0))
    rng = np.random.default_rng(seed)
    margin = np.inf
    for _ in range(w_samples):
        w = rng.standard_normal(2)
        w /= np.linalg.norm(w)
        vecs = mats @ w
        lift = np.unwrap(np.arctan2(vecs[:, 1], vecs[:, 0]))
        for lag in range(1, m + 1):
            quot = np.abs(lift[lag:lag + G] - lift[:G]) / (lag / G)
            margin = min(margin, float(np.min(quot)))
    return MonotonicityResult(margin, float(epsilon), margin > epsilon,
                              G, window, w_samples, int(seed))
