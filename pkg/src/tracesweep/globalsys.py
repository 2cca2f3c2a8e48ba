"""The global truncated problem on the partitioned region plus its PML pad."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .direct import Factorization, factorize, solve
from .geometry import UniformGrid
from .media import WaveNumberModel, kappa_field
from .operator import SparseOperator, apply, assemble, scaled_rhs
from .pml import PmlSpec, build_coefficients


@dataclass
class GlobalSystem:
    """J-scaled operator on ``grid`` padded by ``pml.width`` layers.

    Vectors of this system are fields of shape ``padded.shape``; the
    physical region is ``interior`` (index slices into the padded grid).
    """

    grid: UniformGrid
    medium: WaveNumberModel
    pml: PmlSpec
    padded: UniformGrid = field(init=False)
    kappa: np.ndarray = field(init=False, repr=False)
    op: SparseOperator = field(init=False, repr=False)
    _factors: Factorization | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.padded = self.grid.padded(self.pml.width)
        # nearest-point extension of the wave number into the pad
        self.kappa = kappa_field(self.medium, self.padded, clamp_to=self.grid.box)
        coeffs = build_coefficients(self.pml, self.grid.box, self.padded)
        self.op = assemble(self.padded, coeffs, self.kappa)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.padded.shape

    @property
    def interior(self) -> tuple[slice, ...]:
        d = self.pml.width
        return tuple(slice(d, d + m) for m in self.grid.n)

    def embed(self, f_interior: np.ndarray) -> np.ndarray:
        """Zero-extend a field on the physical grid to the padded grid."""
        out = np.zeros(self.shape, dtype=complex)
        out[self.interior] = f_interior
        return out

    def rhs(self, f: np.ndarray) -> np.ndarray:
        """Matrix right-hand side for a padded-grid source ``f``."""
        return scaled_rhs(self.op, f)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return apply(self.op, u)

    def factors(self) -> Factorization:
        if self._factors is None:
            self._factors = factorize(self.op)
        return self._factors

    def solve(self, f: np.ndarray) -> np.ndarray:
        """Direct solve for a padded-grid source."""
        return solve(self.factors(), self.rhs(f))
