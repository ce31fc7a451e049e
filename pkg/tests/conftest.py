import numpy as np
import pytest

from stratbesov.group_core import StratifiedGroup
from stratbesov.lattice import LatticeSpec
from stratbesov.spectral import assemble


@pytest.fixture(scope="session")
def H1():
    return StratifiedGroup.heisenberg()


@pytest.fixture(scope="session")
def line():
    """Periodic abelian line with exact Fourier calculus."""
    return assemble(LatticeSpec.abelian(256, 0.1, periodic=True), "fourier")


@pytest.fixture(scope="session")
def line_cheb():
    return assemble(LatticeSpec.abelian(256, 0.25, periodic=True), "chebyshev")


@pytest.fixture(scope="session")
def heis_small():
    return assemble(LatticeSpec.heisenberg(8, 40, 1.0), "chebyshev")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
