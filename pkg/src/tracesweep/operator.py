"""Second-order finite-difference assembly of the PML Helmholtz operator.

Nodes are numbered in C order of the grid shape, so a field ``u`` of shape
``grid.shape`` maps to the vector ``u.ravel()``. The outermost layer of nodes
carries a homogeneous Dirichlet condition: those rows are identity rows and
all couplings into them are dropped, which keeps the matrix symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError
from .geometry import UniformGrid
from .pml import PmlCoefficients


@dataclass
class SparseOperator:
    """Assembled matrix plus the data needed to rebuild interface couplings.

    ``links[k]`` holds the effective off-diagonal coupling between each node
    and its successor along axis ``k`` (zero where a Dirichlet node is
    involved); its shape is ``grid.shape`` with axis ``k`` shortened by one.
    """

    matrix: sp.csr_matrix
    grid: UniformGrid
    links: tuple[np.ndarray, ...]
    J: np.ndarray
    scaled_by_J: bool = True

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.grid.shape

    def row_scale(self) -> np.ndarray:
        """Factor turning a row of the J-scaled system back into the PML equation (``1/J``)."""
        return (1.0 / self.J).ravel()

    def boundary_mask(self) -> np.ndarray:
        return boundary_mask(self.grid.shape)


def boundary_mask(shape) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for k in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[k] = 0
        mask[tuple(idx)] = True
        idx[k] = -1
        mask[tuple(idx)] = True
    return mask


def assemble(grid: UniformGrid, coeffs: PmlCoefficients, kappa, scale_by_J: bool = True) -> SparseOperator:
    """Assemble ``div(A grad u) + J kappa^2 u`` (or its ``1/J`` row-scaled form).

    ``kappa`` is a scalar or an array of shape ``grid.shape``.
    """
    if coeffs.grid.shape != grid.shape:
        raise ConfigurationError("PML coefficients were built for a different grid")
    kappa = np.broadcast_to(np.asarray(kappa, dtype=float), grid.shape) \
        if np.ndim(kappa) == 0 else np.asarray(kappa, dtype=float)
    if kappa.shape != grid.shape:
        raise ConfigurationError(f"kappa field shape {kappa.shape} != grid shape {grid.shape}")

    shape = grid.shape
    dim = grid.dim
    N = grid.size
    ids = np.arange(N).reshape(shape)
    bnd = boundary_mask(shape)
    J = coeffs.J()

    diag = J * kappa ** 2
    rows, cols, vals = [], [], []
    links = []
    for k in range(dim):
        c = coeffs.A_half(k) / grid.h[k] ** 2
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        lo[k] = slice(0, -1)
        hi[k] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        # the -c u_p part of both neighbouring differences stays even when the
        # neighbour is a Dirichlet node
        diag = diag.copy()
        diag[lo] -= c
        diag[hi] -= c
        keep = ~(bnd[lo] | bnd[hi])
        link = np.where(keep, c, 0.0)
        links.append(link)
        a, b, v = ids[lo][keep], ids[hi][keep], c[keep]
        rows += [a, b]
        cols += [b, a]
        vals += [v, v]

    diag = np.where(bnd, 1.0, diag)
    rows.append(ids.ravel())
    cols.append(ids.ravel())
    vals.append(diag.ravel())
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N), dtype=complex)
    M.sum_duplicates()
    M.sort_indices()
    if not scale_by_J:
        s = np.where(bnd, 1.0, 1.0 / J).ravel()
        M = sp.diags(s) @ M
        M = M.tocsr()
    return SparseOperator(M, grid, tuple(links), J, scale_by_J)


def apply(op: SparseOperator, v) -> np.ndarray:
    """Sparse product ``op @ v`` for a vector or a field of the grid's shape."""
    v = np.asarray(v)
    flat = v.reshape(-1)
    if flat.size != op.n:
        raise ValueError(f"vector length {flat.size} != operator size {op.n}")
    out = op.matrix @ flat
    return out.reshape(v.shape)


def scaled_rhs(op: SparseOperator, f) -> np.ndarray:
    """Right-hand side matching the operator's row scaling; Dirichlet rows get zero."""
    f = np.asarray(f).reshape(op.grid.shape)
    rhs = (op.J * f) if op.scaled_by_J else f.astype(complex)
    return np.where(op.boundary_mask(), 0.0, rhs)
