from pathlib import Path

import numpy as np
import pytest

from cocycle_lab import (CocycleFactor, CocycleField, SkewProduct,
                         TorusAutomorphism, TrigPolynomial, constant_cocycle,
                         standard_form)

REPO_ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = REPO_ROOT / "scenarios"


def scenario_path(name):
    return str(SCENARIOS / f"{name}.toml")


@pytest.fixture(scope="session")
def cat_auto():
    return TorusAutomorphism(np.array([[2, 1], [1, 1]]))


@pytest.fixture(scope="session")
def skew(cat_auto):
    theta = TrigPolynomial(constant=0.618034, freqs=[[1, 0]], cos_coeffs=[0.1], ndim=2)
    return SkewProduct(cat_auto, theta)


@pytest.fixture(scope="session")
def skew_untwisted(cat_auto):
    return SkewProduct(cat_auto, TrigPolynomial(constant=0.0, ndim=2))


@pytest.fixture(scope="session")
def form1():
    return standard_form(1)


@pytest.fixture(scope="session")
def bunched_cocycle():
    S0 = np.array([[1.0, 0.0], [0.0, -1.0]])
    Ssh = np.array([[0.0, 1.0], [0.0, 0.0]])
    return CocycleField(1, [
        CocycleFactor(S0, TrigPolynomial(freqs=[[1, 0, 0]], cos_coeffs=[0.05], ndim=3)),
        CocycleFactor(Ssh, TrigPolynomial(freqs=[[0, 1, 1]], sin_coeffs=[0.04], ndim=3)),
    ])


@pytest.fixture(scope="session")
def const_hyperbolic():
    return constant_cocycle(np.diag([np.exp(0.3), np.exp(-0.3)]))
