"""Boxes, uniform grids, checkerboard partitions and sweep step groups.

Subdomain indices are 1-based tuples ``(i, j)`` or ``(i, j, k)``, with ``i``
running along the first axis.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo[0], hi[0]] x ... x [lo[d-1], hi[d-1]]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or len(lo) not in (2, 3):
            raise ConfigurationError("box must be 2D or 3D with matching lo/hi")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigurationError(f"degenerate box lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def size(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, x, closed: bool = True) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if closed:
            return bool(np.all((x >= lo) & (x <= hi)))
        return bool(np.all((x > lo) & (x < hi)))

    def expanded(self, widths: Sequence[float]) -> "Box":
        return Box(tuple(a - w for a, w in zip(self.lo, widths)),
                   tuple(b + w for b, w in zip(self.hi, widths)))


@dataclass(frozen=True)
class UniformGrid:
    """Node-centred uniform grid; the first and last node of each axis sit on the box faces."""

    box: Box
    n: tuple[int, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if len(n) != self.box.dim:
            raise ConfigurationError("node counts do not match box dimension")
        if any(v < 2 for v in n):
            raise ConfigurationError("need at least two nodes per axis")
        object.__setattr__(self, "n", n)

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((b - a) / (m - 1) for a, b, m in zip(self.box.lo, self.box.hi, self.n))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    def axis_nodes(self, axis: int) -> np.ndarray:
        lo, h = self.box.lo[axis], self.h[axis]
        return lo + h * np.arange(self.n[axis])

    def axis_half_nodes(self, axis: int) -> np.ndarray:
        """Midpoints between consecutive nodes along ``axis``."""
        return self.axis_nodes(axis)[:-1] + 0.5 * self.h[axis]

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per axis."""
        out = []
        for k in range(self.dim):
            shape = [1] * self.dim
            shape[k] = self.n[k]
            out.append(self.axis_nodes(k).reshape(shape))
        return out

    def padded(self, layers: int) -> "UniformGrid":
        """Same spacing, ``layers`` extra nodes on every side."""
        h = self.h
        return UniformGrid(self.box.expanded([layers * hk for hk in h]),
                           tuple(m + 2 * layers for m in self.n))

    @classmethod
    def from_spacing(cls, box: Box, h: float) -> "UniformGrid":
        n = []
        for length in box.size:
            m = length / h
            if abs(m - round(m)) > 1e-9 * max(1.0, m):
                raise ConfigurationError(f"box length {length} is not a multiple of h={h}")
            n.append(int(round(m)) + 1)
        return cls(box, tuple(n))


@dataclass(frozen=True)
class Partition:
    """Checkerboard split of ``grid`` into ``counts`` equal boxes whose cuts lie on grid lines."""

    grid: UniformGrid
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != self.grid.dim:
            raise ConfigurationError("partition counts do not match grid dimension")
        for k, (c, m) in enumerate(zip(counts, self.grid.n)):
            if c < 1:
                raise ConfigurationError(f"partition count on axis {k} must be >= 1")
            if (m - 1) % c:
                raise ConfigurationError(
                    f"axis {k}: {m - 1} grid intervals not divisible by {c} subdomains")
        object.__setattr__(self, "counts", counts)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def intervals(self) -> tuple[int, ...]:
        """Grid intervals per subdomain along each axis."""
        return tuple((m - 1) // c for m, c in zip(self.grid.n, self.counts))

    def cuts(self, axis: int) -> np.ndarray:
        """Cut coordinates including both outer faces (``counts[axis] + 1`` values)."""
        lo, hi = self.grid.box.lo[axis], self.grid.box.hi[axis]
        c = self.counts[axis]
        return lo + (hi - lo) * np.arange(c + 1) / c

    def subdomains(self) -> Iterator[tuple[int, ...]]:
        yield from itertools.product(*(range(1, c + 1) for c in self.counts))

    def __len__(self) -> int:
        return int(np.prod(self.counts))

    def node_range(self, idx: Sequence[int]) -> tuple[tuple[int, int], ...]:
        """Inclusive global node index range ``(first, last)`` per axis, faces included."""
        self._check(idx)
        m = self.intervals
        return tuple(((i - 1) * mk, i * mk) for i, mk in zip(idx, m))

    def box(self, idx: Sequence[int]) -> Box:
        self._check(idx)
        lo, hi = [], []
        for k, i in enumerate(idx):
            c = self.cuts(k)
            lo.append(c[i - 1])
            hi.append(c[i])
        return Box(tuple(lo), tuple(hi))

    def neighbor(self, idx: Sequence[int], direction: Sequence[int]):
        """Index of the face neighbour in ``direction``, or None outside the partition."""
        out = tuple(i + d for i, d in zip(idx, direction))
        if all(1 <= i <= c for i, c in zip(out, self.counts)):
            return out
        return None

    def _check(self, idx):
        if len(idx) != self.dim or not all(1 <= i <= c for i, c in zip(idx, self.counts)):
            raise ConfigurationError(f"subdomain index {tuple(idx)} outside {self.counts}")


def partition_domain(grid: UniformGrid, counts: Sequence[int]) -> Partition:
    """Split ``grid`` into ``counts`` subdomains; raises ConfigurationError if cuts miss grid lines."""
    return Partition(grid, tuple(counts))


def _axis_weights(p: Partition, idx: Sequence[int], layers: int = 0) -> list[np.ndarray]:
    # one-axis Heaviside factor: 1 inside, 1/2 on an interior cut; boundary
    # subdomains also own ``layers`` pad nodes beyond the outer face
    out = []
    m = p.intervals
    for k, i in enumerate(idx):
        first = i == 1
        last = i == p.counts[k]
        w = np.ones(m[k] + 1 + layers * (first + last))
        if not first:
            w[0] = 0.5
        if not last:
            w[-1] = 0.5
        out.append(w)
    return out


def owned_slices(p: Partition, idx: Sequence[int], layers: int = 0) -> tuple[slice, ...]:
    """Nodes owned by ``idx`` on the grid padded by ``layers`` (the closed box, plus the
    outer pad on boundary sides)."""
    p._check(idx)
    out = []
    for k, i in enumerate(idx):
        m = p.intervals[k]
        lo = (i - 1) * m + (0 if i == 1 else layers)
        hi = i * m + layers + (layers if i == p.counts[k] else 0)
        out.append(slice(lo, hi + 1))
    return tuple(out)


def local_weights(p: Partition, idx: Sequence[int], layers: int = 0) -> np.ndarray:
    """Assembly weights of subdomain ``idx`` over the nodes it owns."""
    ws = _axis_weights(p, idx, layers)
    out = ws[0]
    for w in ws[1:]:
        out = np.multiply.outer(out, w)
    return out


class AssemblyWeights:
    """Per-subdomain partition-of-unity weights.

    With ``layers > 0`` the weights live on the partitioned grid padded by that
    many layers, the outer pad belonging to the adjacent boundary subdomains.
    Weights are stored per subdomain over its owned nodes only.
    """

    def __init__(self, partition: Partition, layers: int = 0):
        self.partition = partition
        self.layers = layers
        self._w = {idx: local_weights(partition, idx, layers) for idx in partition.subdomains()}

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m + 2 * self.layers for m in self.partition.grid.n)

    def __getitem__(self, idx) -> np.ndarray:
        return self._w[tuple(idx)]

    def slices(self, idx) -> tuple[slice, ...]:
        return owned_slices(self.partition, idx, self.layers)

    def global_field(self, idx) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.slices(idx)] = self._w[tuple(idx)]
        return out

    def total(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for idx, w in self._w.items():
            out[self.slices(idx)] += w
        return out

    def exact_total_is_one(self) -> bool:
        """Partition-of-unity check in exact rational arithmetic."""
        total = np.full(self.shape, Fraction(0), dtype=object)
        for idx, w in self._w.items():
            frac = np.vectorize(Fraction, otypes=[object])(w)
            total[self.slices(idx)] += frac
        return bool(np.all(total == 1))


def assembly_weights(p: Partition, grid: UniformGrid | None = None) -> AssemblyWeights:
    if grid is not None and grid != p.grid:
        raise ConfigurationError("weights requested on a grid other than the partitioned one")
    return AssemblyWeights(p)


def step_count(counts: Sequence[int]) -> int:
    """Anti-diagonal steps per sweep: ``N1+N2-1`` in 2D, ``N1+N2+N3-2`` in 3D."""
    return int(sum(counts)) - len(counts) + 1


def step_index(counts: Sequence[int], idx: Sequence[int], direction: Sequence[int]) -> int:
    """1-based step at which subdomain ``idx`` is solved in a sweep along ``direction``."""
    s = 1
    for i, c, d in zip(idx, counts, direction):
        s += (i - 1) if d > 0 else (c - i)
    return s


def step_group(p: Partition | Sequence[int], direction: Sequence[int], s: int) -> list[tuple[int, ...]]:
    """Subdomains on the ``s``-th anti-diagonal of a sweep along ``direction``, sorted."""
    counts = p.counts if isinstance(p, Partition) else tuple(p)
    total = step_count(counts)
    if not 1 <= s <= total:
        raise ValueError(f"step {s} outside 1..{total}")
    return [idx for idx in itertools.product(*(range(1, c + 1) for c in counts))
            if step_index(counts, idx, direction) == s]


@dataclass(frozen=True)
class SubdomainLayout:
    """Placement of one subdomain's padded local grid relative to the global grid."""

    partition: Partition
    idx: tuple[int, ...]
    layers: int

    @property
    def box(self) -> Box:
        return self.partition.box(self.idx)

    @property
    def grid(self) -> UniformGrid:
        core = UniformGrid(self.box, tuple(m + 1 for m in self.partition.intervals))
        return core.padded(self.layers)

    @property
    def core(self) -> tuple[slice, ...]:
        """Local index slices of the closed subdomain box."""
        d = self.layers
        return tuple(slice(d, d + m + 1) for m in self.partition.intervals)

    @property
    def global_slices(self) -> tuple[slice, ...]:
        """Global node slices of the closed subdomain box (unpadded global grid)."""
        return tuple(slice(a, b + 1) for a, b in self.partition.node_range(self.idx))

    @property
    def global_owned(self) -> tuple[slice, ...]:
        """Owned nodes on the global grid padded by ``layers``."""
        return owned_slices(self.partition, self.idx, self.layers)

    @property
    def owned(self) -> tuple[slice, ...]:
        """The same nodes in local indices."""
        return tuple(slice(g.start - (i - 1) * m, g.stop - (i - 1) * m)
                     for g, i, m in zip(self.global_owned, self.idx, self.partition.intervals))

    def face(self, axis: int, side: int) -> int:
        """Local index of the low (``side < 0``) or high (``side > 0``) face along ``axis``."""
        return self.layers if side < 0 else self.layers + self.partition.intervals[axis]
