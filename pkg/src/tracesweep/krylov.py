"""Full GMRES with right preconditioning."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class GmresConfig:
    tol: float = 1e-6
    maxit: int = 100
    record_history: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("GMRES tolerance must be positive")
        if self.maxit < 1:
            raise ValueError("GMRES needs at least one iteration")


@dataclass
class GmresResult:
    x: np.ndarray
    history: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False
    breakdown: bool = False

    @property
    def residual(self) -> float:
        return self.history[-1] if self.history else 0.0


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    # real cosine c and complex sine s with [c s; -conj(s) c] [a; b] = [r; 0]
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    t = np.hypot(abs(a), abs(b))
    c = abs(a) / t
    s = (a / abs(a)) * np.conj(b) / t
    return c, s


def gmres(matvec: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
          precond: Callable[[np.ndarray], np.ndarray] | None = None,
          cfg: GmresConfig = GmresConfig(), x0: np.ndarray | None = None) -> GmresResult:
    """Solve ``A x = b`` with ``A M y = b``, ``x = M y`` (right preconditioning).

    The Arnoldi basis is built with modified Gram-Schmidt and the small least
    squares problem is updated with Givens rotations, so ``history`` holds the
    true relative residual ``|b - A x_k| / |b|`` of each iterate (in exact
    arithmetic). No restarts.
    """
    shape = np.shape(b)
    b = np.asarray(b, dtype=complex).ravel()
    M = (lambda v: v) if precond is None else (lambda v: np.asarray(precond(v.reshape(shape))).ravel())
    A = lambda v: np.asarray(matvec(v.reshape(shape))).ravel()

    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=complex).ravel().copy()
    if bnorm == 0.0:
        return GmresResult(x.reshape(shape), [0.0], 0, True)
    r = b - A(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    hist = [beta / bnorm]
    if hist[0] <= cfg.tol:
        return GmresResult(x.reshape(shape), hist, 0, True)

    m = cfg.maxit
    V = [r / beta]
    H = np.zeros((m + 1, m), dtype=complex)
    cs = np.zeros(m)
    sn = np.zeros(m, dtype=complex)
    g = np.zeros(m + 1, dtype=complex)
    g[0] = beta
    k = 0
    breakdown = False
    converged = False
    for j in range(m):
        w = A(M(V[j]))
        for i in range(j + 1):
            H[i, j] = np.vdot(V[i], w)
            w = w - H[i, j] * V[i]
        H[j + 1, j] = np.linalg.norm(w)
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        hn = H[j + 1, j]
        cs[j], sn[j] = _givens(H[j, j], hn)
        H[j, j] = cs[j] * H[j, j] + sn[j] * hn
        H[j + 1, j] = 0.0
        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        if cfg.record_history:
            hist.append(abs(g[j + 1]) / bnorm)
        if abs(g[j + 1]) / bnorm <= cfg.tol:
            converged = True
            break
        if abs(hn) <= 1e-14 * bnorm:
            breakdown = True
            converged = True
            break
        V.append(w / hn)
    y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k else np.zeros(0)
    if k:
        x = x + M(sum(yi * vi for yi, vi in zip(y, V[:k])))
    if not cfg.record_history:
        hist.append(abs(g[k]) / bnorm)
    return GmresResult(x.reshape(shape), hist, k, converged, breakdown)
