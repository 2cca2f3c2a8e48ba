import numpy as np
import pytest

from tracesweep.geometry import Box, UniformGrid
from tracesweep.media import Constant
from tracesweep.operator import assemble
from tracesweep.pml import PmlSpec, build_coefficients


def pml_operator(dim=2, n=12, width=4, kappa=2 * np.pi, scale_by_J=True):
    """Operator on the unit box with ``n`` nodes per axis padded by ``width`` PML layers."""
    box = Box((0.0,) * dim, (1.0,) * dim)
    grid = UniformGrid(box, (n,) * dim).padded(width)
    coeffs = build_coefficients(PmlSpec(width), box, grid)
    return assemble(grid, coeffs, kappa, scale_by_J=scale_by_J)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def op12():
    """The 12^2-node operator padded to 20^2 that several oracles use."""
    return pml_operator(2, 12, 4)


@pytest.fixture
def unit_constant():
    return Constant(2 * np.pi)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
