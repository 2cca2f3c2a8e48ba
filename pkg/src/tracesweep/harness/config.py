"""Run configuration: a YAML file of nested sections plus dotted-key overrides.

Example::

    mode: direct
    domain: {lo: [0, 0], hi: [1, 1]}
    grid: {n: 121}
    partition: [4, 4]
    media: {kind: constant, kappa: 31.4159}
    pml: {width: 20, strength: 3.0}
    source: {kind: gaussian, center: [0.3, 0.4]}
    sweep: {rounds: 1, workers: 1}
    gmres: {tol: 1.0e-6, maxit: 50}
    output: {dir: out}

``domain`` is the physical (PML-free) box; the PML pad is added outside it,
so the full computational box is ``domain`` grown by ``pml.width`` layers.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from ..errors import ConfigurationError
from ..geometry import Box, UniformGrid, partition_domain
from ..krylov import GmresConfig
from ..media import Constant, TwoLayered, WaveNumberModel, kappa_field, load_velocity_grid
from ..pml import PmlSpec
from ..sources import Gaussian, GridDelta, ShotSet, four_sources, random_shots

MODES = ("direct", "precond", "converge", "pipeline")

DEFAULTS: dict[str, Any] = {
    "mode": "direct",
    "domain": {"lo": [0.0, 0.0], "hi": [1.0, 1.0]},
    "grid": {"n": 61, "min_density": 6.0},
    "partition": [2, 2],
    "media": {"kind": "constant", "kappa": 10 * np.pi},
    "pml": {"width": 20, "strength": 3.0, "exponent": 2, "onset": 1},
    "source": {"kind": "gaussian", "center": None},
    "sweep": {"rounds": 1, "workers": 1},
    "gmres": {"tol": 1e-6, "maxit": 50},
    "converge": {"levels": [49, 97, 193], "refine": 2, "reference": "extrapolated"},
    "precond": {"ladder": [[2, 2], [4, 4]], "subdomain_intervals": 100, "density": 10.0},
    "pipeline": {"counts": [8, 8, 8], "n_iter": 5, "n_rhs": 44, "t0": 1.0, "measure_t0": False},
    "output": {"dir": "out", "fields": True},
    "seed": None,
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_dotted(tree: dict, key: str, value) -> None:
    """Set ``a.b.c`` in a nested dict, creating sections as needed."""
    parts = key.split(".")
    node = tree
    for p in parts[:-1]:
        child = node.setdefault(p, {})
        if not isinstance(child, dict):
            raise ConfigurationError(f"cannot set {key!r}: {p!r} is not a section")
        node = child
    node[parts[-1]] = value


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value`` with the value read as YAML (numbers, lists, booleans)."""
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse value of {key!r}: {exc}") from None
    if isinstance(value, str):
        # YAML 1.1 leaves forms like 1e-8 as strings
        try:
            value = float(value)
        except ValueError:
            pass
    return key.strip(), value


def _vector(v, dim: int, name: str) -> tuple:
    if np.isscalar(v):
        return (v,) * dim
    v = tuple(v)
    if len(v) != dim:
        raise ConfigurationError(f"{name} needs {dim} entries, got {len(v)}")
    return v


@dataclass
class RunConfig:
    """Validated view of a configuration tree."""

    raw: dict

    def __post_init__(self):
        self.mode  # validate eagerly
        if self.mode != "pipeline":
            self.grid
            self.partition_counts
            self.pml
            self.medium
            self.check_density()
        if self.mode == "direct":
            partition_domain(self.grid, self.partition_counts)

    @classmethod
    def from_dict(cls, tree: dict | None = None, overrides=()) -> "RunConfig":
        raw = _merge(DEFAULTS, tree or {})
        for item in overrides:
            key, value = parse_override(item) if isinstance(item, str) else item
            set_dotted(raw, key, value)
        return cls(raw)

    @classmethod
    def load(cls, path, overrides=()) -> "RunConfig":
        path = Path(path)
        try:
            tree = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config {path} is not valid YAML: {exc}") from None
        if not isinstance(tree, dict):
            raise ConfigurationError(f"config {path} must hold a mapping at top level")
        return cls.from_dict(tree, overrides)

    def get(self, key: str, default=None):
        node = self.raw
        for p in key.split("."):
            if not isinstance(node, dict) or p not in node:
                return default
            node = node[p]
        return node

    @property
    def mode(self) -> str:
        m = self.raw["mode"]
        if m not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {m!r}")
        return m

    @property
    def domain(self) -> Box:
        d = self.raw["domain"]
        try:
            return Box(tuple(map(float, d["lo"])), tuple(map(float, d["hi"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid domain: {exc}") from None

    @property
    def dim(self) -> int:
        return self.domain.dim

    def grid_with(self, n) -> UniformGrid:
        n = tuple(int(v) for v in _vector(n, self.dim, "grid.n"))
        if min(n) < 2:
            raise ConfigurationError("grid.n must be at least 2 per axis")
        return UniformGrid(self.domain, n)

    @property
    def grid(self) -> UniformGrid:
        return self.grid_with(self.raw["grid"]["n"])

    @property
    def computational_box(self) -> Box:
        """The physical domain grown by the PML pad."""
        g = self.grid
        return self.domain.expanded(tuple(self.pml.width * h for h in g.h))

    @property
    def partition_counts(self) -> tuple[int, ...]:
        c = tuple(int(v) for v in _vector(self.raw["partition"], self.dim, "partition"))
        if min(c) < 1:
            raise ConfigurationError("partition counts must be positive")
        return c

    @property
    def pml(self) -> PmlSpec:
        p = self.raw["pml"]
        return PmlSpec(int(p["width"]), float(p["strength"]), int(p["exponent"]), int(p.get("onset", 1)))

    @property
    def medium(self) -> WaveNumberModel:
        m = self.raw["media"]
        kind = m.get("kind", "constant")
        try:
            if kind == "constant":
                return Constant(float(m["kappa"]))
            if kind == "two_layered":
                return TwoLayered(float(m["kappa_up"]), float(m["kappa_down"]), float(m["eta_L"]),
                                  float(m.get("epsilon", 0.0)), int(m.get("axis", self.dim - 1)))
            if kind == "gridded":
                return load_velocity_grid(m["velocity_file"], float(m["omega"]))
        except KeyError as exc:
            raise ConfigurationError(f"media.{exc.args[0]} is required for media.kind={kind}") from None
        raise ConfigurationError(f"unknown media.kind {kind!r}")

    def max_kappa(self, grid: UniformGrid | None = None) -> float:
        m = self.medium
        if isinstance(m, Constant):
            return m.kappa
        if isinstance(m, TwoLayered):
            return max(m.kappa_up, m.kappa_down)
        return float(np.max(kappa_field(m, grid or self.grid)))

    def density(self, grid: UniformGrid | None = None) -> float:
        """Nodes per shortest wavelength, ``2 pi / (kappa_max h_max)``."""
        grid = grid or self.grid
        return 2 * np.pi / (self.max_kappa(grid) * max(grid.h))

    def check_density(self, grid: UniformGrid | None = None) -> float:
        d = self.density(grid)
        floor = float(self.raw["grid"].get("min_density", 0.0))
        if d < floor:
            raise ConfigurationError(
                f"mesh density {d:.2f} nodes per wavelength is below the floor {floor:g}; "
                "refine the grid or lower grid.min_density")
        return d

    @property
    def sources(self) -> ShotSet:
        s = self.raw["source"]
        kind = s.get("kind", "gaussian")
        box = self.domain
        center = s.get("center")
        if center is None:
            center = [lo + 0.45 * (hi - lo) for lo, hi in zip(box.lo, box.hi)]
        if kind == "gaussian":
            return ShotSet((Gaussian(tuple(map(float, center)), float(s.get("kappa", self.max_kappa()))),))
        if kind == "delta":
            return ShotSet((GridDelta(tuple(map(float, s.get("position", center))),
                                      complex(s.get("weight", 1.0))),))
        if kind == "zero":
            return ShotSet((GridDelta(tuple(map(float, center)), 0.0),))
        if kind == "four":
            if self.dim != 2:
                raise ConfigurationError("source.kind=four is defined for 2D domains")
            return four_sources(box.lo, box.hi)
        if kind == "random":
            return random_shots(box.lo, box.hi, int(s.get("count", 4)), self.raw.get("seed"))
        raise ConfigurationError(f"unknown source.kind {kind!r}")

    @property
    def rounds(self) -> int:
        r = int(self.raw["sweep"]["rounds"])
        if r < 1:
            raise ConfigurationError("sweep.rounds must be >= 1")
        return r

    @property
    def workers(self) -> int:
        return max(1, int(self.raw["sweep"].get("workers", 1)))

    @property
    def gmres(self) -> GmresConfig:
        g = self.raw["gmres"]
        try:
            return GmresConfig(float(g["tol"]), int(g["maxit"]))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output"]["dir"])
