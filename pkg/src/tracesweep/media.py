"""Wave-number models, their nearest-point extension to padded subdomain grids,
and velocity-grid file input."""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DataError
from .geometry import Box, Partition, UniformGrid


@dataclass(frozen=True)
class Constant:
    kappa: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise DataError("wave number must be positive")


@dataclass(frozen=True)
class TwoLayered:
    """``kappa_down`` below ``eta``, ``kappa_up`` above ``eta + epsilon``, linear in between."""

    kappa_up: float
    kappa_down: float
    eta: float
    epsilon: float = 0.0
    axis: int = 1

    def __post_init__(self):
        if not (self.kappa_up > 0 and self.kappa_down > 0):
            raise DataError("wave numbers must be positive")
        if self.epsilon < 0:
            raise DataError("transition width must be non-negative")


@dataclass(frozen=True)
class Gridded:
    """``kappa = omega / c`` with ``c`` sampled (multi)linearly from a velocity grid."""

    velocity: np.ndarray
    spacing: tuple[float, ...]
    origin: tuple[float, ...]
    omega: float
    _interp: RegularGridInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.velocity, dtype=float)
        if v.ndim != len(self.spacing) or v.ndim != len(self.origin):
            raise DataError("velocity grid, spacing and origin disagree in dimension")
        if not np.all(v > 0):
            raise DataError("velocity grid contains non-positive values")
        axes = [o + s * np.arange(m) for o, s, m in zip(self.origin, self.spacing, v.shape)]
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "_interp", RegularGridInterpolator(axes, v))

    @property
    def hull(self) -> Box:
        return Box(tuple(self.origin),
                   tuple(o + s * (m - 1) for o, s, m in zip(self.origin, self.spacing, self.velocity.shape)))

    def sample_velocity(self, pts: np.ndarray) -> np.ndarray:
        hull = self.hull
        pts = np.clip(pts, hull.lo, hull.hi)
        return self._interp(pts)


WaveNumberModel = Constant | TwoLayered | Gridded


def eval_kappa(m: WaveNumberModel, x) -> np.ndarray | float:
    """Wave number at point(s) ``x``; the last axis of ``x`` holds the coordinates."""
    x = np.asarray(x, dtype=float)
    if isinstance(m, Constant):
        out = np.full(x.shape[:-1], m.kappa)
    elif isinstance(m, TwoLayered):
        y = x[..., m.axis]
        if m.epsilon > 0:
            t = np.clip((y - m.eta) / m.epsilon, 0.0, 1.0)
            out = m.kappa_down + t * (m.kappa_up - m.kappa_down)
        else:
            out = np.where(y > m.eta, m.kappa_up, m.kappa_down)
    elif isinstance(m, Gridded):
        out = m.omega / m.sample_velocity(x.reshape(-1, x.shape[-1])).reshape(x.shape[:-1])
    else:
        raise TypeError(f"unknown wave-number model {type(m).__name__}")
    return float(out) if out.ndim == 0 else out


def kappa_field(m: WaveNumberModel, grid: UniformGrid, clamp_to: Box | None = None) -> np.ndarray:
    """Wave number at every node; with ``clamp_to`` each node is first projected onto that box."""
    axes = []
    for k in range(grid.dim):
        a = grid.axis_nodes(k)
        if clamp_to is not None:
            a = np.clip(a, clamp_to.lo[k], clamp_to.hi[k])
        axes.append(a)
    if isinstance(m, Constant):
        return np.full(grid.shape, m.kappa)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return np.asarray(eval_kappa(m, pts), dtype=float).reshape(grid.shape)


@dataclass(frozen=True)
class SubdomainMedium:
    idx: tuple[int, ...]
    kappa: np.ndarray

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.kappa == self.kappa.flat[0]))


def extend_to_subdomain(m: WaveNumberModel, p: Partition, idx: Sequence[int],
                        padded: UniformGrid) -> SubdomainMedium:
    """Local wave number on ``padded``: the global value at the nearest point of the closed subdomain box."""
    box = p.box(idx)
    return SubdomainMedium(tuple(idx), kappa_field(m, padded, clamp_to=box))


def check_interface_alignment(m: WaveNumberModel, p: Partition) -> bool:
    """Warn and return True when a layered interface lies on a subdomain cut."""
    if not isinstance(m, TwoLayered):
        return False
    cuts = p.cuts(m.axis)
    h = p.grid.h[m.axis]
    edges = [m.eta] + ([m.eta + m.epsilon] if m.epsilon > 0 else [])
    hit = any(np.min(np.abs(cuts - e)) < 1e-9 * h for e in edges)
    if hit:
        warnings.warn("media interface coincides with a subdomain cut", stacklevel=2)
    return hit


# velocity-grid files -------------------------------------------------------

_MAGIC = b"VGRD"


def save_velocity_grid(path, velocity, spacing, origin) -> None:
    """Binary layout: magic, dim (u32), dims (u32 each), spacing and origin (f64 each),
    then row-major float32 velocities."""
    v = np.ascontiguousarray(velocity, dtype="<f4")
    dim = v.ndim
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", dim))
        fh.write(struct.pack(f"<{dim}I", *v.shape))
        fh.write(struct.pack(f"<{dim}d", *spacing))
        fh.write(struct.pack(f"<{dim}d", *origin))
        fh.write(v.tobytes())


def _load_binary(path):
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise DataError(f"{path}: not a velocity grid file")
    off = 4
    (dim,) = struct.unpack_from("<I", raw, off)
    off += 4
    dims = struct.unpack_from(f"<{dim}I", raw, off)
    off += 4 * dim
    spacing = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    origin = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    count = int(np.prod(dims))
    if len(raw) - off != 4 * count:
        raise DataError(f"{path}: payload size does not match header")
    v = np.frombuffer(raw, dtype="<f4", count=count, offset=off).reshape(dims)
    return v.astype(float), spacing, origin


def _load_csv(path):
    """CSV fallback: ``# dims=..; spacing=..; origin=..`` header then one value per row-major entry."""
    text = Path(path).read_text().splitlines()
    meta = {}
    body = []
    for line in text:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for part in line[1:].split(";"):
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k.strip()] = [float(t) for t in v.replace(",", " ").split()]
            continue
        body.extend(float(t) for t in line.replace(",", " ").split())
    try:
        dims = tuple(int(d) for d in meta["dims"])
        spacing, origin = tuple(meta["spacing"]), tuple(meta["origin"])
    except KeyError as exc:
        raise DataError(f"{path}: missing header field {exc}") from None
    if len(body) != int(np.prod(dims)):
        raise DataError(f"{path}: expected {int(np.prod(dims))} values, found {len(body)}")
    return np.array(body).reshape(dims), spacing, origin


def load_velocity_grid(path, omega: float) -> Gridded:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        v, spacing, origin = _load_csv(path)
    else:
        v, spacing, origin = _load_binary(path)
    return Gridded(v, tuple(spacing), tuple(origin), float(omega))
