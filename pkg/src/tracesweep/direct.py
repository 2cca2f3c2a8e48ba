"""Sparse direct factorization of grid operators.

Two interchangeable backends share one fill-reducing idea, a geometric nested
dissection of the structured grid (halve the longest axis, order both halves,
put the separating plane last):

* ``"multifrontal"``: our own multifrontal LU. Each dissection node owns a
  block of unknowns (a leaf box or a separator plane); its dense front is
  factored with LAPACK partial pivoting restricted to the owned block and the
  Schur complement is passed to the parent. Dense fronts make 3D fast.
* ``"superlu"``: SuperLU through ``scipy.sparse.linalg.splu`` on the
  symmetrically permuted matrix with natural column order. Its compiled
  triangular solves are the quicker choice for small 2D systems.

``method="auto"`` picks the multifrontal backend in 3D and SuperLU in 2D.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularMatrixError
from .operator import SparseOperator

PIVOT_THRESHOLD = 1e-14
_LEAF = 64


def _split(box):
    """Halve the longest axis of ``box`` (a tuple of (start, stop)); None for a leaf."""
    ext = [b - a for a, b in box]
    if int(np.prod(ext)) <= _LEAF or max(ext) < 3:
        return None
    ax = int(np.argmax(ext))
    a, b = box[ax]
    m = a + (b - a) // 2
    lo, sep, hi = list(box), list(box), list(box)
    lo[ax], sep[ax], hi[ax] = (a, m), (m, m + 1), (m + 1, b)
    return tuple(lo), tuple(sep), tuple(hi)


def _dissection(shape):
    """Post-ordered list of ``(region, own)`` boxes; leaves own their region."""
    out = []
    stack = [(tuple((0, n) for n in shape), False)]
    while stack:
        box, expanded = stack.pop()
        parts = _split(box)
        if parts is None:
            out.append((box, box))
        elif expanded:
            out.append((box, parts[1]))
        else:
            stack.append((box, True))
            stack.append((parts[2], False))
            stack.append((parts[0], False))
    return out


def nested_dissection(shape) -> np.ndarray:
    """Geometric nested-dissection permutation of a C-ordered structured grid."""
    ids = np.arange(int(np.prod(shape))).reshape(shape)
    return np.concatenate([ids[tuple(slice(a, b) for a, b in own)].ravel()
                           for _, own in _dissection(shape)])


def _boundary(ids: np.ndarray, box) -> np.ndarray:
    """Sorted grid indices one layer outside ``box`` across each face (star stencil)."""
    faces = []
    for k, (a, b) in enumerate(box):
        for j in (a - 1, b):
            if 0 <= j < ids.shape[k]:
                sl = [slice(s, t) for s, t in box]
                sl[k] = slice(j, j + 1)
                faces.append(ids[tuple(sl)].ravel())
    return np.sort(np.concatenate(faces)) if faces else np.zeros(0, dtype=np.int64)


@dataclass
class _Front:
    own: np.ndarray
    bnd: np.ndarray
    L: np.ndarray
    U: np.ndarray
    piv: np.ndarray
    L21: np.ndarray
    U12: np.ndarray


@dataclass
class MultifrontalLU:
    """Multifrontal LU factors in dissection post-order."""

    n: int
    fronts: list[_Front] = field(default_factory=list)

    @property
    def fill(self) -> int:
        return sum(f.own.size ** 2 + 2 * f.own.size * f.bnd.size for f in self.fronts)

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = np.array(b, dtype=complex, copy=True)
        for f in self.fronts:
            y = sla.solve_triangular(f.L, x[f.own][f.piv], lower=True, unit_diagonal=True,
                                     check_finite=False)
            x[f.own] = y
            if f.bnd.size:
                x[f.bnd] -= f.L21 @ y
        for f in reversed(self.fronts):
            r = x[f.own]
            if f.bnd.size:
                r = r - f.U12 @ x[f.bnd]
            x[f.own] = sla.solve_triangular(f.U, r, lower=False, check_finite=False)
        return x


def _multifrontal(M: sp.csr_matrix, shape) -> MultifrontalLU:
    n = M.shape[0]
    ids = np.arange(n).reshape(shape)
    Mc = M.tocsc()
    rowmax = np.asarray(abs(M).max(axis=1).todense()).ravel()
    pos = np.full(n, -1, dtype=np.int64)
    eliminated = np.zeros(n, dtype=bool)
    out = MultifrontalLU(n)
    pending: dict = {}
    for region, own_box in _dissection(shape):
        own = ids[tuple(slice(a, b) for a, b in own_box)].ravel()
        bnd = _boundary(ids, region)
        front = np.concatenate([own, bnd])
        k = own.size
        pos[front] = np.arange(front.size)
        F = np.zeros((front.size, front.size), dtype=complex)
        # original entries of the owned rows and columns that are not yet eliminated
        R = M[own].tocoo()
        keep = ~eliminated[R.col]
        F[R.row[keep], pos[R.col[keep]]] = R.data[keep]
        C = Mc[:, own].tocoo()
        keep = pos[C.row] >= k
        F[pos[C.row[keep]], C.col[keep]] = C.data[keep]
        for child in pending.pop(region, []):
            cb, upd = child
            p = pos[cb]
            F[np.ix_(p, p)] += upd
        P, L, U = sla.lu(F[:k, :k], check_finite=False)
        piv = np.argmax(P, axis=0)
        d = np.abs(np.diag(U))
        bad = np.flatnonzero(d <= PIVOT_THRESHOLD * np.maximum(rowmax[own[piv]], np.finfo(float).tiny))
        if bad.size:
            raise SingularMatrixError(int(own[piv[bad[0]]]), float(d[bad[0]]))
        U12 = sla.solve_triangular(L, F[:k, k:][piv], lower=True, unit_diagonal=True,
                                   check_finite=False)
        L21 = sla.solve_triangular(U, F[k:, :k].T, trans="T", lower=False,
                                   check_finite=False).T
        if bnd.size:
            parent = _parent_of(region, shape)
            pending.setdefault(parent, []).append((bnd, F[k:, k:] - L21 @ U12))
        out.fronts.append(_Front(own, bnd, L, U, piv, L21, U12))
        eliminated[own] = True
        pos[front] = -1
    return out


def _parent_of(region, shape):
    """Region of the dissection node whose children include ``region``."""
    box = tuple((0, n) for n in shape)
    while True:
        lo, sep, hi = _split(box)
        if lo == region or hi == region:
            return box
        ax = next(i for i, (s, b) in enumerate(zip(sep, box)) if s != b)
        box = lo if region[ax][1] <= sep[ax][0] else hi


@dataclass
class Factorization:
    """Reusable LU factors of a permuted operator."""

    backend: object
    perm: np.ndarray
    n: int
    fill: int
    seconds: float

    @property
    def memory_bytes(self) -> int:
        # complex128 values plus an int32 index per stored entry
        return self.fill * (16 + 4)

    def solve(self, rhs) -> np.ndarray:
        return solve(self, rhs)


def _superlu(B: sp.csc_matrix):
    try:
        lu = spla.splu(B, permc_spec="NATURAL", diag_pivot_thresh=PIVOT_THRESHOLD,
                       options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        # SuperLU reports exact singularity as "Factor is exactly singular"
        raise SingularMatrixError(-1, 0.0) from exc
    return lu


def factorize(op: SparseOperator | sp.spmatrix, shape=None, method: str = "auto") -> Factorization:
    """Factor ``op`` with a nested-dissection ordering; raises SingularMatrixError on a tiny pivot.

    ``shape`` (taken from the operator's grid when available) enables the
    geometric ordering; without it the matrix is factored by SuperLU in its
    given order.
    """
    if isinstance(op, SparseOperator):
        M, shape = op.matrix, op.grid.shape
    else:
        M = sp.csr_matrix(op)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    if method == "auto":
        method = "multifrontal" if shape is not None and len(shape) == 3 else "superlu"
    if method not in ("multifrontal", "superlu"):
        raise ValueError(f"unknown factorization method {method!r}")
    if method == "multifrontal" and shape is None:
        raise ValueError("the multifrontal backend needs the grid shape")
    M = sp.csr_matrix(M, dtype=complex)
    t0 = time.perf_counter()
    if method == "multifrontal":
        mf = _multifrontal(M, tuple(shape))
        return Factorization(mf, np.arange(n), n, mf.fill, time.perf_counter() - t0)

    perm = nested_dissection(shape) if shape is not None else np.arange(n)
    B = M[perm][:, perm].tocsc()
    lu = _superlu(B)
    seconds = time.perf_counter() - t0
    rowmax = abs(B).max(axis=1).toarray().ravel()
    scale = np.empty_like(rowmax)
    scale[lu.perm_r] = rowmax
    piv = np.abs(lu.U.diagonal())
    bad = np.flatnonzero(piv <= PIVOT_THRESHOLD * np.maximum(scale, np.finfo(float).tiny))
    if bad.size:
        j = int(bad[0])
        row = int(np.flatnonzero(lu.perm_r == j)[0])
        raise SingularMatrixError(int(perm[row]), float(piv[j]))
    return Factorization(lu, perm, n, int(lu.L.nnz + lu.U.nnz), seconds)


def solve(f: Factorization, rhs) -> np.ndarray:
    """Solve with precomputed factors; ``rhs`` may be a vector, a field, or an ``(n, k)`` block."""
    rhs = np.asarray(rhs)
    block = rhs.ndim == 2 and rhs.shape[0] == f.n and rhs.size != f.n
    flat = rhs if block else rhs.reshape(-1)
    if flat.shape[0] != f.n:
        raise ValueError(f"rhs length {flat.shape[0]} != system size {f.n}")
    if isinstance(f.backend, MultifrontalLU):
        out = f.backend.solve(flat)
    else:
        x = f.backend.solve(flat[f.perm].astype(complex))
        out = np.empty_like(x)
        out[f.perm] = x
    return out if block else out.reshape(rhs.shape)
