"""Reference solutions for convergence studies.

``make_reference`` solves the global problem on an ``r``-times refined grid
and injects the result at the coincident coarse nodes, optionally combined
with the coarse solve by Richardson extrapolation so that the second-order
error of the reference itself cancels. For 3D studies the
refined direct solve does not fit in memory at useful sizes, so a
closed-form free-space solution for the Gaussian source is provided instead.
"""
from __future__ import annotations

import numpy as np
from scipy.special import erf

from .errors import ConfigurationError, MemoryGuardError
from .geometry import UniformGrid
from .globalsys import GlobalSystem
from .media import WaveNumberModel
from .pml import PmlSpec

# rough bytes per unknown of a nested-dissection LU in 2D / 3D at the sizes we use
_BYTES_2D = 2500
_BYTES_3D = 25000


def estimate_direct_bytes(shape) -> int:
    n = int(np.prod(shape))
    return n * (_BYTES_2D if len(shape) == 2 else _BYTES_3D)


def make_reference(grid: UniformGrid, medium: WaveNumberModel, pml: PmlSpec, source,
                   r: int = 2, memory_limit: float = 2.5e9, extrapolate: bool = False) -> np.ndarray:
    """Global solve on the ``r``-refined grid, returned on ``grid`` padded by ``pml.width``.

    ``source`` is any object with ``sample(grid)``; it is re-sampled on the
    fine grid. The PML keeps its physical width. With ``extrapolate`` the
    result is ``(r^2 u_fine - u_coarse) / (r^2 - 1)``, which removes the
    leading ``h^2`` term of the discretization error.
    """
    if r < 1 or int(r) != r:
        raise ConfigurationError("refinement factor must be a positive integer")
    if extrapolate and r == 1:
        raise ConfigurationError("extrapolation needs a refinement factor of at least 2")
    fine = UniformGrid(grid.box, tuple((m - 1) * r + 1 for m in grid.n))
    fine_pml = PmlSpec(pml.width * r, pml.strength, pml.exponent, pml.onset)
    shape = fine.padded(fine_pml.width).shape
    need = estimate_direct_bytes(shape)
    if need > memory_limit:
        raise MemoryGuardError(
            f"refined reference on {shape} needs about {need / 1e9:.1f} GB; "
            "reduce the mesh, the refinement factor or the PML width")
    gs = GlobalSystem(fine, medium, fine_pml)
    u = gs.solve(gs.embed(source.sample(fine)))[tuple(slice(None, None, r) for _ in shape)]
    if not extrapolate:
        return u
    coarse = GlobalSystem(grid, medium, pml)
    uc = coarse.solve(coarse.embed(source.sample(grid)))
    return (r * r * u - uc) / (r * r - 1)


def _primitive(s, a: float, b: complex):
    """Antiderivative of ``s * exp(-a s^2 + b s)``."""
    sa = np.sqrt(a)
    g = 0.5 * np.sqrt(np.pi / a) * np.exp(b * b / (4 * a)) * erf(sa * s - b / (2 * sa))
    return -np.exp(-a * s * s + b * s) / (2 * a) + b / (2 * a) * g


def free_space_gaussian_3d(points, center, kappa: float) -> np.ndarray:
    """Outgoing solution of ``Δu + κ²u = f`` in R^3 for the unit-mass Gaussian
    ``f = (a/π)^{3/2} exp(-a|x-c|²)`` with ``a = (4κ/π)²``.

    With ``v = r u`` the problem is radial: ``v'' + κ² v = r f``, ``v(0) = 0``,
    outgoing at infinity, whose Green's function gives
    ``v(r) = -(1/κ)[e^{iκr} ∫_0^r sin(κs) s f ds + sin(κr) ∫_r^∞ e^{iκs} s f ds]``.
    Both integrals have closed forms in terms of the complex error function.
    """
    a = (4.0 * kappa / np.pi) ** 2
    amp = (a / np.pi) ** 1.5
    pts = np.asarray(points, dtype=float)
    r = np.sqrt(sum((pts[..., k] - center[k]) ** 2 for k in range(3)))
    ik = 1j * kappa
    Fp_r, Fm_r = _primitive(r, a, ik), _primitive(r, a, -ik)
    Fp_0, Fm_0 = _primitive(0.0, a, ik), _primitive(0.0, a, -ik)
    Fp_inf = 0.5 * np.sqrt(np.pi / a) * np.exp(ik * ik / (4 * a)) * ik / (2 * a)
    inner = amp * ((Fp_r - Fp_0) - (Fm_r - Fm_0)) / 2j
    outer = amp * (Fp_inf - Fp_r)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = -(np.exp(ik * r) * inner + np.sin(kappa * r) * outer) / (kappa * r)
    u0 = -amp * (Fp_inf - Fp_0)
    return np.where(r < 1e-12, u0, u)
