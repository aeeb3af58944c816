"""Shared fixtures: reference problems used across the test modules.

The "supported" transition matrix is A = diag(-2 e^{i pi/3}, 1).  For
nu = 1/3 any real diagonal matrix is borderline (|xi11| = |xi12| exactly), so
a complex entry is needed to open the strict magnitude ordering; this one
gives |xi11| = |xi22| = sqrt(7/3) and |xi12| = 1/sqrt(3).
"""

import cmath

import numpy as np
import pytest

from slw.problem import Potential, SingularProblem, TransitionMatrix

A11_SUPPORTED = -2.0 * cmath.exp(1j * cmath.pi / 3.0)


def supported_matrix() -> TransitionMatrix:
    return TransitionMatrix(A11_SUPPORTED, 0.0, 0.0, 1.0)


def bump_potential(a: float = 1.0, amplitude=complex(1.0, 0.4)) -> Potential:
    # width 1/16 with the 8-width cutoff puts the support exactly on
    # [a + 0.3, a + 1.3]
    return Potential.gaussian_bump(center=a + 0.8, width=0.0625, amplitude=amplitude)


@pytest.fixture(scope="session")
def trivial_problem() -> SingularProblem:
    """nu = 1/2, A = I, q = 0: no singularity, everything closed-form."""
    return SingularProblem(a=1.0, nu=0.5, A=TransitionMatrix.identity(), T=1.5)


@pytest.fixture(scope="session")
def supported_free_problem() -> SingularProblem:
    """Supported regime, q = 0: fast path with genuine singularity."""
    return SingularProblem(a=1.0, nu=1.0 / 3.0, A=supported_matrix(), T=1.5)


@pytest.fixture(scope="session")
def supported_bump_problem() -> SingularProblem:
    """Supported regime with the reference bump on [a+0.3, a+1.3]."""
    return SingularProblem(a=1.0, nu=1.0 / 3.0, A=supported_matrix(), T=2.5,
                           q=bump_potential())


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260814)
