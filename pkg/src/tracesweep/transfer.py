"""Interface traces: extraction, conversion into equivalent sources, and assembly.

A trace is the pair of grid lines (planes in 3D) ``u0`` on the shared face and
``um1`` one layer back into the generating subdomain, taken over the whole
padded transverse extent. For a receiver ``R`` with operator ``M`` the source

    rhs[y0]  = -c * um1,    rhs[y-1] = +c * u0,

with ``c`` the coupling of ``M`` across the face, gives ``M^{-1} rhs`` equal to
the generator's field in front of the face whenever the generating sources sit
strictly behind it. On a single grid this is exact: it is the commutator of
``M`` with the sharp indicator of the half space in front of the face.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ExtentMismatchError
from .geometry import AssemblyWeights, SubdomainLayout
from .operator import SparseOperator


def cardinal_directions(dim: int) -> list[tuple[int, ...]]:
    """Axis directions ordered ``+e1, -e1, +e2, -e2, ...``."""
    out = []
    for k in range(dim):
        for s in (1, -1):
            d = [0] * dim
            d[k] = s
            out.append(tuple(d))
    return out


def _axis_sign(direction: Sequence[int]) -> tuple[int, int]:
    nz = [k for k, v in enumerate(direction) if v != 0]
    if len(nz) != 1 or abs(direction[nz[0]]) != 1:
        raise ValueError(f"{tuple(direction)} is not a cardinal direction")
    return nz[0], int(direction[nz[0]])


def _line(arr: np.ndarray, axis: int, index: int) -> tuple:
    sl = [slice(None)] * arr.ndim
    sl[axis] = index
    return tuple(sl)


@dataclass
class TraceRecord:
    """Two interface lines travelling in ``direction`` away from subdomain ``source``."""

    source: tuple[int, ...]
    direction: tuple[int, ...]
    u0: np.ndarray
    um1: np.ndarray
    target_sweep: int | None = None

    @property
    def axis(self) -> int:
        return _axis_sign(self.direction)[0]

    def is_zero(self) -> bool:
        return not (np.any(self.u0) or np.any(self.um1))


def extract_trace(u_local: np.ndarray, layout: SubdomainLayout,
                  direction: Sequence[int]) -> TraceRecord | None:
    """Copy the face line and the line behind it toward ``direction``; None if no neighbour there."""
    axis, sign = _axis_sign(direction)
    if layout.partition.neighbor(layout.idx, direction) is None:
        return None
    face = layout.face(axis, sign)
    inner = face - sign
    return TraceRecord(layout.idx, tuple(direction),
                       u_local[_line(u_local, axis, face)].copy(),
                       u_local[_line(u_local, axis, inner)].copy())


def equivalent_source(op: SparseOperator, axis: int, y0: int, sign: int,
                      u0: np.ndarray, um1: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Two-line source that continues a field travelling in direction ``sign`` along ``axis``.

    ``u0`` is the field on line ``y0`` and ``um1`` on line ``y0 - sign``. If
    ``u`` solves ``M u = f`` with ``f`` vanishing on and in front of ``y0``,
    then ``M^{-1}`` of the returned source equals ``u`` on and in front of
    ``y0`` and vanishes behind line ``y0 - sign``.
    """
    shape = op.grid.shape
    if out is None:
        out = np.zeros(shape, dtype=complex)
    ym1 = y0 - sign
    if not (0 <= min(y0, ym1) and max(y0, ym1) < shape[axis]):
        raise ValueError(f"lines {ym1}, {y0} lie outside axis {axis} of extent {shape[axis]}")
    line_shape = shape[:axis] + shape[axis + 1:]
    if np.shape(u0) != line_shape or np.shape(um1) != line_shape:
        raise ExtentMismatchError(
            f"trace lines {np.shape(u0)} do not match receiver extent {line_shape}")
    link = op.links[axis]
    c = link[_line(link, axis, min(y0, ym1))]
    out[_line(out, axis, y0)] -= c * um1
    out[_line(out, axis, ym1)] += c * u0
    return out


def trace_to_source(t: TraceRecord, layout: SubdomainLayout, op: SparseOperator,
                    out: np.ndarray | None = None) -> np.ndarray:
    """Equivalent source on the receiver ``layout`` for an incoming trace; adds into ``out`` if given."""
    axis, sign = _axis_sign(t.direction)
    # the trace enters through the receiver's face opposite to its travel direction
    return equivalent_source(op, axis, layout.face(axis, -sign), sign, t.u0, t.um1, out)


def accumulate(global_field: np.ndarray, u_local: np.ndarray, weights: AssemblyWeights,
               layout: SubdomainLayout) -> np.ndarray:
    """Add ``w * u_local`` over the nodes the subdomain owns (in place).

    ``global_field`` lives on the partitioned grid padded by ``weights.layers``;
    with ``layers == 0`` pad values of ``u_local`` are discarded.
    """
    if weights.layers == 0:
        global_field[layout.global_slices] += weights[layout.idx] * u_local[layout.core]
    else:
        global_field[layout.global_owned] += weights[layout.idx] * u_local[layout.owned]
    return global_field


def split_source(f: np.ndarray, layout: SubdomainLayout,
                 weights: AssemblyWeights | None = None) -> np.ndarray:
    """Local copy of a global source over the nodes owned by ``layout``.

    ``f`` lives on the partitioned grid padded by ``layout.layers``. Each
    subdomain gets the full source on its closed box, face nodes included:
    the equivalent sources never carry a source that sits on the face
    itself, so a face source has to be present in full on both sides to be
    seen once by the assembled field. With ``weights`` the shared nodes are
    scaled by the assembly weights instead.
    """
    out = np.zeros(layout.grid.shape, dtype=complex)
    piece = f[layout.global_owned]
    if weights is not None:
        piece = piece * weights[layout.idx]
    out[layout.owned] = piece
    return out


class TraceMailbox:
    """Pending traces keyed by (receiver, sweep); summed in a canonical order on read.

    Deposits may come from concurrent workers; reading sorts by generator
    index and direction before summing, so the result does not depend on
    arrival order.
    """

    def __init__(self):
        self._box: dict[tuple, list[TraceRecord]] = {}
        self._lock = threading.Lock()

    def deposit(self, receiver: tuple[int, ...], sweep: int, trace: TraceRecord) -> None:
        with self._lock:
            self._box.setdefault((tuple(receiver), sweep), []).append(trace)

    def take(self, receiver: tuple[int, ...], sweep: int) -> list[TraceRecord]:
        with self._lock:
            items = self._box.pop((tuple(receiver), sweep), [])
        return sorted(items, key=lambda t: (t.source, t.direction))

    def pending(self) -> int:
        with self._lock:
            return sum(len(v) for v in self._box.values())

    def source_for(self, receiver, sweep, layout: SubdomainLayout, op: SparseOperator):
        """Summed equivalent source of all traces waiting for ``receiver`` in ``sweep``, or None."""
        items = self.take(receiver, sweep)
        if not items:
            return None
        rhs = np.zeros(op.grid.shape, dtype=complex)
        for t in items:
            trace_to_source(t, layout, op, out=rhs)
        return rhs
