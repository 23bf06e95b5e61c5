"""Scenario files: a single TOML document describing the base map, the
cocycle, the leaf/homoclinic selectors, and per-test parameters.

Validation is collective: every offending field is gathered and reported in
one error.  Overrides arrive as dotted `section.key=value` strings whose
values are parsed as TOML literals.
"""

import copy
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

from .base import SkewProduct, TorusAutomorphism, find_homoclinic, make_leaf
from .cocycle import CocycleFactor, CocycleField
from .fields import TrigPolynomial
from .perturb import PipelineSettings


class ScenarioError(ValueError):
    """Carries the full list of schema violations."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n" + "\n".join(f"  - {p}" for p in self.problems))


_DEFAULTS = {
    "spectrum": {"n": 100000, "orbits": 8, "qr_interval": 0},   # 0 = automatic
    "bunching": {"n_max": 30, "grid": [8, 8, 4]},
    "pinching": {"n": 20000, "orbits": 8, "grid": 512},
    "twisting": {"j_max": 3, "samples": 40, "eps_angle": 0.01, "frame_window": 128},
    "monotone": {"builtin": "leaf", "epsilon": 6.0, "grid": 2048,
                 "directions": 8, "window": 0.015625},
    "leaf": {"point": ["0", "0"], "period": 1},
    "homoclinic": {"index": 0, "budget": 60},
    "perturb": {},
    "sweep": {"parameter": "rotation_angle", "mode": "rotate",
              "grid": [round(0.05 * i, 10) for i in range(11)]},
}


def _parse_trig(node, ndim, where, problems):
    constant = node.get("constant", 0.0)
    if not isinstance(constant, (int, float)):
        problems.append(f"{where}.constant must be a number")
        constant = 0.0
    freqs, cos_c, sin_c = [], [], []
    for i, term in enumerate(node.get("terms", [])):
        k = term.get("k")
        if (not isinstance(k, list) or len(k) != ndim
                or not all(isinstance(v, int) for v in k)):
            problems.append(f"{where}.terms[{i}].k must be a list of {ndim} integers")
            continue
        freqs.append(k)
        cos_c.append(float(term.get("cos", 0.0)))
        sin_c.append(float(term.get("sin", 0.0)))
    if freqs:
        return TrigPolynomial(constant, freqs, cos_c, sin_c, ndim=ndim)
    return TrigPolynomial(constant=constant, ndim=ndim)


@dataclass
class Scenario:
    """Validated scenario with builders for every lab object."""

    data: dict
    path: str = "<memory>"

    @property
    def name(self):
        return self.data.get("name", "unnamed")

    @property
    def seed(self):
        return int(self.data["seed"])

    def section(self, key):
        merged = copy.deepcopy(_DEFAULTS.get(key, {}))
        merged.update(self.data.get(key, {}))
        return merged

    def make_automorphism(self):
        return TorusAutomorphism(np.array(self.data["base"]["matrix"], dtype=int))

    def make_skew(self):
        theta = _parse_trig(self.data["base"].get("theta", {}), 2, "base.theta", [])
        return SkewProduct(self.make_automorphism(), theta)

    def make_cocycle(self):
        node = self.data["cocycle"]
        half_dim = int(node["half_dim"])
        factors = []
        for fnode in node.get("factors", []):
            gen = np.array(fnode["generator"], dtype=float)
            winding = tuple(fnode.get("winding", [0, 0, 0]))
            fld = _parse_trig(fnode.get("field", {}), 3, "cocycle.factors.field", [])
            factors.append(CocycleFactor(gen, fld, winding))
        return CocycleField(half_dim, factors, float(node.get("alpha", 1.0)))

    def make_leaf(self, skew=None):
        skew = skew or self.make_skew()
        node = self.section("leaf")
        point = tuple(Fraction(str(c)) for c in node["point"])
        return make_leaf(skew, point, int(node["period"]))

    def make_homoclinic(self, skew=None):
        skew = skew or self.make_skew()
        node = self.section("homoclinic")
        leaf = self.section("leaf")
        point = [float(Fraction(str(c))) for c in leaf["point"]]
        return find_homoclinic(skew.base, point, int(node["index"]),
                               budget=int(node["budget"]))

    def pipeline_settings(self):
        node = self.section("perturb")
        leaf = self.section("leaf")
        hom = self.section("homoclinic")
        cfg = PipelineSettings(
            leaf_point=tuple(Fraction(str(c)) for c in leaf["point"]),
            leaf_period=int(leaf["period"]),
            homoclinic_index=int(hom["index"]),
            seed=self.seed,
        )
        for key in ("theta_grid", "shear_coefficient", "radius", "sigma_delta",
                    "delta_total", "pinch_n", "pinch_orbits", "pinch_grid",
                    "twist_j_max", "twist_samples", "eps_angle", "frame_window",
                    "spectrum_n", "spectrum_orbits", "bunching_n", "orbit_budget",
                    "max_rounds"):
            if key in node:
                value = node[key]
                setattr(cfg, key, tuple(value) if isinstance(value, list) else value)
        if "bunching_grid" in node:
            cfg.bunching_grid = tuple(node["bunching_grid"])
        return cfg


def _validate(data, problems):
    if data.get("schema") != 1:
        problems.append("schema must be the integer 1")
    if not isinstance(data.get("seed"), int):
        problems.append("seed must be an integer (explicit seeds are required)")

    base = data.get("base")
    if not isinstance(base, dict):
        problems.append("base table is required")
    else:
        M = base.get("matrix")
        ok_shape = (isinstance(M, list) and len(M) == 2
                    and all(isinstance(r, list) and len(r) == 2 for r in M)
                    and all(isinstance(v, int) for r in M for v in r))
        if not ok_shape:
            problems.append("base.matrix must be a 2x2 integer matrix")
        else:
            det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
            tr = M[0][0] + M[1][1]
            if abs(det) != 1:
                problems.append(f"base.matrix must have |det| = 1 (got {det})")
            if abs(tr) <= 2:
                problems.append(f"base.matrix must have |trace| > 2 (got {tr})")
        _parse_trig(base.get("theta", {}), 2, "base.theta", problems)

    coc = data.get("cocycle")
    if not isinstance(coc, dict):
        problems.append("cocycle table is required")
    else:
        half_dim = coc.get("half_dim")
        if not isinstance(half_dim, int) or half_dim < 1:
            problems.append("cocycle.half_dim must be a positive integer")
        alpha = coc.get("alpha", 1.0)
        if not isinstance(alpha, (int, float)) or not 0.0 < alpha <= 1.0:
            problems.append("cocycle.alpha must lie in (0, 1]")
        dim = 2 * half_dim if isinstance(half_dim, int) else None
        for i, fnode in enumerate(coc.get("factors", [])):
            gen = fnode.get("generator")
            good = (isinstance(gen, list) and dim is not None and len(gen) == dim
                    and all(isinstance(r, list) and len(r) == dim for r in gen))
            if not good:
                problems.append(f"cocycle.factors[{i}].generator must be a {dim}x{dim} matrix")
                continue
            winding = fnode.get("winding", [0, 0, 0])
            if not (isinstance(winding, list) and len(winding) == 3
                    and all(isinstance(v, int) for v in winding)):
                problems.append(f"cocycle.factors[{i}].winding must be 3 integers")
            _parse_trig(fnode.get("field", {}), 3, f"cocycle.factors[{i}].field", problems)
            try:
                CocycleFactor(np.array(gen, dtype=float),
                              TrigPolynomial.constant_field(0.0),
                              tuple(winding) if isinstance(winding, list) else (0, 0, 0))
            except ValueError as exc:
                problems.append(f"cocycle.factors[{i}]: {exc}")
        if isinstance(half_dim, int) and dim is not None and not coc.get("factors"):
            pass                                            # identity cocycle is legal
        # generator sp-membership is checked by building the field
        if not problems:
            try:
                Scenario(data).make_cocycle()
            except ValueError as exc:
                problems.append(f"cocycle: {exc}")

    leaf = data.get("leaf", {})
    if leaf:
        pt = leaf.get("point", ["0", "0"])
        try:
            [Fraction(str(c)) for c in pt]
        except (ValueError, ZeroDivisionError):
            problems.append("leaf.point entries must be exact rationals like '1/2'")
        if not isinstance(leaf.get("period", 1), int) or leaf.get("period", 1) < 1:
            problems.append("leaf.period must be a positive integer")

    for section, key, low in (("spectrum", "n", 1), ("spectrum", "orbits", 1),
                              ("pinching", "n", 1), ("pinching", "orbits", 1),
                              ("twisting", "samples", 1), ("twisting", "j_max", 1),
                              ("monotone", "grid", 2), ("monotone", "directions", 1)):
        node = data.get(section, {})
        if key in node and (not isinstance(node[key], int) or node[key] < low):
            problems.append(f"{section}.{key} must be an integer >= {low}")
    tw = data.get("twisting", {})
    if "eps_angle" in tw and not (isinstance(tw["eps_angle"], (int, float))
                                  and tw["eps_angle"] > 0):
        problems.append("twisting.eps_angle must be positive")
    mono = data.get("monotone", {})
    if mono.get("builtin", "leaf") not in ("leaf", "full_rotation"):
        problems.append("monotone.builtin must be 'leaf' or 'full_rotation'")
    sweep = data.get("sweep", {})
    if sweep.get("parameter", "rotation_angle") not in ("rotation_angle", "coefficient_scale"):
        problems.append("sweep.parameter must be 'rotation_angle' or 'coefficient_scale'")
    if sweep.get("mode", "rotate") not in ("rotate", "pipeline"):
        problems.append("sweep.mode must be 'rotate' or 'pipeline'")


def apply_override(data, spec):
    """Apply one 'dotted.path=value' override; the value is TOML-parsed."""
    if "=" not in spec:
        raise ScenarioError([f"override '{spec}' is not of the form key=value"])
    path, raw = spec.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError([f"override value {raw!r} is not a TOML literal: {exc}"])
    node = data
    keys = path.strip().split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ScenarioError([f"override path '{path}' crosses a non-table entry"])
    node[keys[-1]] = value
    return data


def load_scenario(path, overrides=(), seed=None):
    """Read, override, and validate a scenario file."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    for spec in overrides:
        apply_override(data, spec)
    if seed is not None:
        data["seed"] = int(seed)
    problems = []
    _validate(data, problems)
    if problems:
        raise ScenarioError(problems)
    return Scenario(data, str(path))
