"""Relative discrete L2 and H1 errors."""
from __future__ import annotations

import numpy as np

from ..errors import DataError


def _norms(e: np.ndarray, h) -> tuple[float, float]:
    vol = float(np.prod(h))
    l2 = vol * np.sum(np.abs(e) ** 2)
    grad = 0.0
    for k, hk in enumerate(h):
        d = np.diff(e, axis=k) / hk
        grad += vol * np.sum(np.abs(d) ** 2)
    return l2, grad


def compute_errors(u, u_ref, h, region: tuple[slice, ...] | None = None) -> tuple[float, float]:
    """Relative L2 and H1 errors of ``u`` against ``u_ref`` over ``region``.

    Gradients are forward differences between nodes of the region, so only
    region nodes are used.
    """
    u = np.asarray(u)
    u_ref = np.asarray(u_ref)
    if u.shape != u_ref.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {u_ref.shape}")
    if region is not None:
        u, u_ref = u[region], u_ref[region]
    l2r, g_r = _norms(u_ref, h)
    if l2r == 0.0:
        raise DataError("reference field vanishes on the comparison region")
    l2e, g_e = _norms(u - u_ref, h)
    return float(np.sqrt(l2e / l2r)), float(np.sqrt((l2e + g_e) / (l2r + g_r)))


def fit_rate(h, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    h = np.log(np.asarray(h, float))
    e = np.log(np.asarray(errors, float))
    return float(np.polyfit(h, e, 1)[0])
