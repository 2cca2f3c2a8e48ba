"""Perfectly matched layer profiles and the stretched-coordinate coefficient fields.

With ``alpha_j = 1 + i*sigma_j(x_j)`` the truncated equation reads
``J^{-1} div(A grad u) + kappa^2 u = f`` where ``A = diag(J / alpha_j^2)`` and
``J = prod_j alpha_j``. Everything is separable across axes, so the fields are
kept as 1D factors and only expanded on demand.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import Box, UniformGrid


@dataclass(frozen=True)
class PmlSpec:
    """Absorbing layer settings.

    ``width`` is the number of grid layers outside the owning box, ``strength``
    the dimensionless peak of ``sigma`` and ``exponent`` the ramp power.
    ``onset`` delays the ramp by that many layers so the first exterior layer
    is still physical.
    """

    width: int = 30
    strength: float = 3.0
    exponent: int = 2
    onset: int = 1

    def __post_init__(self):
        if self.width < 1:
            raise ConfigurationError("pml width must be at least one layer")
        if self.strength <= 0:
            raise ConfigurationError("pml strength must be positive")
        if self.exponent < 1:
            raise ConfigurationError("pml exponent must be >= 1")
        if not 0 <= self.onset < self.width:
            raise ConfigurationError("pml onset must lie in [0, width)")


def sigma_profile(spec: PmlSpec, box: Box, axis: int, x, h: float):
    """Damping ``sigma_j(x)``: zero on the closed box, ramping to ``strength`` at ``width`` layers out."""
    x = np.asarray(x, dtype=float)
    t = np.maximum(box.lo[axis] - x, 0.0) + np.maximum(x - box.hi[axis], 0.0)
    ramp = (spec.width - spec.onset) * h
    t = np.maximum(t - spec.onset * h, 0.0)
    # round-off guard so nodes on the onset layer stay exactly physical
    t = np.where(t < 1e-9 * h, 0.0, t)
    s = spec.strength * (t / ramp) ** spec.exponent
    return s if s.ndim else float(s)


@dataclass(frozen=True)
class PmlCoefficients:
    """Per-axis stretching factors on nodes and half nodes of one grid."""

    grid: UniformGrid
    alpha: tuple[np.ndarray, ...]
    alpha_half: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.grid.dim

    def _shaped(self, arr: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = arr.size
        return arr.reshape(shape)

    def J(self) -> np.ndarray:
        """Jacobian ``prod_j alpha_j`` at the nodes."""
        out = np.ones(self.grid.shape, dtype=complex)
        for k in range(self.dim):
            out = out * self._shaped(self.alpha[k], k)
        return out

    def A(self, axis: int) -> np.ndarray:
        """Diagonal entry ``A_jj`` at the nodes."""
        out = np.ones(self.grid.shape, dtype=complex)
        for k in range(self.dim):
            a = self._shaped(self.alpha[k], k)
            out = out / a if k == axis else out * a
        return out

    def A_half(self, axis: int) -> np.ndarray:
        """``A_jj`` at the midpoints between neighbours along ``axis``.

        The stretched axis uses the exact half-node factor; the transverse
        factors are taken at the nodes, so no averaging is involved.
        """
        shape = list(self.grid.shape)
        shape[axis] -= 1
        out = np.ones(shape, dtype=complex)
        for k in range(self.dim):
            if k == axis:
                out = out / self._shaped(self.alpha_half[k], k)
            else:
                out = out * self._shaped(self.alpha[k], k)
        return out


def build_coefficients(spec: PmlSpec, box: Box, grid: UniformGrid) -> PmlCoefficients:
    """Stretching factors for ``grid``, which must cover ``box`` plus ``spec.width`` layers."""
    h = grid.h
    for k in range(grid.dim):
        need_lo = box.lo[k] - spec.width * h[k]
        need_hi = box.hi[k] + spec.width * h[k]
        tol = 1e-9 * h[k]
        if grid.box.lo[k] > need_lo + tol or grid.box.hi[k] < need_hi - tol:
            raise ConfigurationError(
                f"grid does not cover the padded box on axis {k}")
    alpha, alpha_half = [], []
    for k in range(grid.dim):
        alpha.append(1.0 + 1j * sigma_profile(spec, box, k, grid.axis_nodes(k), h[k]))
        alpha_half.append(1.0 + 1j * sigma_profile(spec, box, k, grid.axis_half_nodes(k), h[k]))
    return PmlCoefficients(grid, tuple(alpha), tuple(alpha_half))
