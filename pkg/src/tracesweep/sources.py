"""Source terms sampled on grids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import UniformGrid


@dataclass(frozen=True)
class Gaussian:
    """Unit-mass Gaussian whose width scales with the wave number: exp(-(4 kappa/pi)^2 |x-c|^2)."""

    center: tuple[float, ...]
    kappa: float

    @property
    def a(self) -> float:
        return (4.0 * self.kappa / np.pi) ** 2

    @property
    def amplitude(self) -> float:
        d = len(self.center)
        # 16 k^2/pi^3 in 2D, 64 k^3/pi^(9/2) in 3D
        return (self.a / np.pi) ** (d / 2)

    def sample(self, grid: UniformGrid) -> np.ndarray:
        r2 = sum((x - c) ** 2 for x, c in zip(grid.coordinates(), self.center))
        return (self.amplitude * np.exp(-self.a * r2)).astype(complex)


@dataclass(frozen=True)
class GridDelta:
    """Discrete delta at the node nearest ``position``, scaled by ``1/prod(h)``."""

    position: tuple[float, ...]
    weight: complex = 1.0

    def node(self, grid: UniformGrid) -> tuple[int, ...]:
        return tuple(int(round((p - lo) / h)) for p, lo, h in zip(self.position, grid.box.lo, grid.h))

    def sample(self, grid: UniformGrid) -> np.ndarray:
        out = np.zeros(grid.shape, dtype=complex)
        node = self.node(grid)
        if not all(0 <= i < m for i, m in zip(node, grid.n)):
            raise ValueError(f"delta position {self.position} lies outside the grid")
        out[node] = self.weight / np.prod(grid.h)
        return out


@dataclass(frozen=True)
class ShotSet:
    """Several sources solved as separate right-hand sides."""

    shots: tuple

    def sample(self, grid: UniformGrid) -> list[np.ndarray]:
        return [s.sample(grid) for s in self.shots]


def four_sources(box_lo: Sequence[float], box_hi: Sequence[float]) -> ShotSet:
    """Deltas at the quarter points of a 2D box."""
    (x0, y0), (x1, y1) = box_lo, box_hi
    pts = [(x0 + (x1 - x0) * a, y0 + (y1 - y0) * b) for a in (0.25, 0.75) for b in (0.25, 0.75)]
    return ShotSet(tuple(GridDelta(p) for p in pts))


def random_shots(box_lo, box_hi, count: int, seed: int | None = None) -> ShotSet:
    """``count`` deltas at uniformly random positions inside the box."""
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(box_lo, float), np.asarray(box_hi, float)
    pts = lo + (hi - lo) * rng.random((count, lo.size))
    return ShotSet(tuple(GridDelta(tuple(p)) for p in pts))
