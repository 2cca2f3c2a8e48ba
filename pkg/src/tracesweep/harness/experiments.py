"""Experiment drivers behind the command line: direct, converge, precond and pipeline."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, MemoryGuardError
from ..geometry import UniformGrid, partition_domain
from ..globalsys import GlobalSystem
from ..media import Constant, check_interface_alignment
from ..pipeline import (PipelineScenario, average_time_per_rhs, simulate_pipeline,
                        weak_scaling_efficiency)
from ..pml import PmlSpec
from ..preconditioner import SweepingPreconditioner, solve_preconditioned
from ..reference import estimate_direct_bytes, free_space_gaussian_3d, make_reference
from ..sources import Gaussian
from ..sweeper import SolveReport, build_subdomain_states, ddm_solve
from .config import RunConfig
from .io import write_csv, write_field
from .metrics import compute_errors, fit_rate

log = logging.getLogger(__name__)

MEMORY_LIMIT = 2.5e9


@dataclass
class RunResult:
    mode: str
    rows: list[dict]
    artifacts: list[Path] = field(default_factory=list)
    report: SolveReport | None = None
    summary: dict = field(default_factory=dict)


def run(cfg: RunConfig) -> RunResult:
    """Execute the configured mode and write its CSV table (and field dumps)."""
    drivers = {"direct": run_direct, "converge": run_converge,
               "precond": run_precond, "pipeline": run_pipeline}
    return drivers[cfg.mode](cfg)


def _errors(u, u_ref, h) -> tuple[float, float]:
    # a zero reference only has a meaningful error when the solution is zero too
    if not np.any(u_ref):
        return (0.0, 0.0) if not np.any(u) else (float("inf"), float("inf"))
    return compute_errors(u, u_ref, h)


def _fmt_counts(c) -> str:
    return "x".join(str(v) for v in c)


def run_direct(cfg: RunConfig) -> RunResult:
    """Sweeping solve used as a direct solver, compared with the global direct solve."""
    grid, counts = cfg.grid, cfg.partition_counts
    density = cfg.check_density()
    gs = GlobalSystem(grid, cfg.medium, cfg.pml)
    partition = partition_domain(grid, counts)
    if check_interface_alignment(cfg.medium, partition):
        log.warning("medium interface coincides with a subdomain cut")
    t0 = time.perf_counter()
    states = build_subdomain_states(partition, cfg.medium, cfg.pml)
    t_setup = time.perf_counter() - t0
    compare = estimate_direct_bytes(gs.shape) <= MEMORY_LIMIT
    if not compare:
        log.warning("global system %s too large for a reference solve; errors left blank", gs.shape)
    out = cfg.output_dir
    rows, artifacts, last = [], [], None
    for k, shot in enumerate(cfg.sources.shots):
        f = gs.embed(shot.sample(grid))
        t0 = time.perf_counter()
        u, rep = ddm_solve(states, partition, f, cfg.rounds, cfg.workers)
        t_solve = time.perf_counter() - t0
        l2 = h1 = float("nan")
        if compare:
            u_ref = gs.solve(f)
            l2, h1 = _errors(u[gs.interior], u_ref[gs.interior], grid.h)
            rep.residual_history.append(_relative_residual(gs, f, u))
        if cfg.raw["output"].get("fields", True):
            artifacts.append(write_field(out / f"field_{k}.bin", u[gs.interior], grid.h))
        rows.append(dict(shot=k, mesh=_fmt_counts(grid.n), partition=_fmt_counts(counts),
                         kappa_max=cfg.max_kappa(), density=density, rounds=cfg.rounds,
                         l2_error=l2, h1_error=h1, solves=rep.solves, t_setup=t_setup,
                         t_solve=t_solve))
        last = rep
    artifacts.append(write_csv(out / "direct.csv", rows))
    return RunResult("direct", rows, artifacts, last)


def _relative_residual(gs: GlobalSystem, f, u) -> float:
    b = gs.rhs(f)
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(b - gs.matvec(u)) / nb) if nb else 0.0


def level_pml(cfg: RunConfig, n_intervals: int, base_intervals: int) -> PmlSpec:
    """PML of the same physical width on every level when ``converge.pml_scale`` is set."""
    p = cfg.pml
    if not cfg.get("converge.pml_scale", True):
        return p
    width = p.width * n_intervals // base_intervals
    if width * base_intervals != p.width * n_intervals:
        raise ConfigurationError("pml.width does not scale to an integer on every level")
    return PmlSpec(width, p.strength, p.exponent, p.onset)


def run_converge(cfg: RunConfig) -> RunResult:
    """Errors of the sweeping solution on nested meshes against a fine reference, with fitted rates."""
    levels = sorted(int(n) for n in cfg.get("converge.levels"))
    if len(levels) < 3:
        raise ConfigurationError("a convergence study needs at least three levels")
    base = levels[0] - 1
    finest = levels[-1] - 1
    counts = cfg.partition_counts
    medium, shots = cfg.medium, cfg.sources.shots
    if len(shots) != 1:
        raise ConfigurationError("convergence studies use a single source")
    shot = shots[0]
    ref_kind = cfg.get("converge.reference", "extrapolated")
    solver = cfg.get("converge.solver", "ddm")
    r = int(cfg.get("converge.refine", 2))

    t0 = time.perf_counter()
    if ref_kind in ("refined", "extrapolated"):
        for n in levels:
            if finest % (n - 1):
                raise ConfigurationError(f"level {n} is not nested in the finest level {levels[-1]}")
        fine_grid = cfg.grid_with(levels[-1])
        fine_pml = level_pml(cfg, finest, base)
        gs_f = GlobalSystem(fine_grid, medium, fine_pml)
        ref_full = make_reference(fine_grid, medium, fine_pml, shot, r=r, memory_limit=MEMORY_LIMIT,
                                  extrapolate=ref_kind == "extrapolated")[gs_f.interior]

        def reference(grid):
            step = finest // (grid.n[0] - 1)
            return ref_full[(slice(None, None, step),) * cfg.dim]
    elif ref_kind == "analytic":
        if not (cfg.dim == 3 and isinstance(medium, Constant) and isinstance(shot, Gaussian)):
            raise ConfigurationError("the analytic reference covers a 3D Gaussian in a constant medium")

        def reference(grid):
            pts = np.stack(np.broadcast_arrays(*grid.coordinates()), axis=-1)
            return free_space_gaussian_3d(pts, shot.center, medium.kappa)
    else:
        raise ConfigurationError(f"unknown converge.reference {ref_kind!r}")
    t_ref = time.perf_counter() - t0

    rows, artifacts, hs, e2, e1 = [], [], [], [], []
    rep = None
    for n in levels:
        grid = cfg.grid_with(n)
        density = cfg.check_density(grid)
        pml = level_pml(cfg, n - 1, base)
        gs = GlobalSystem(grid, medium, pml)
        partition = partition_domain(grid, counts)
        t0 = time.perf_counter()
        f = gs.embed(shot.sample(grid))
        if solver == "ddm":
            states = build_subdomain_states(partition, medium, pml)
            u, rep = ddm_solve(states, partition, f, cfg.rounds, cfg.workers)
            n_iter = 0
        elif solver == "gmres":
            pre = SweepingPreconditioner(gs, counts, cfg.rounds, cfg.workers)
            res = solve_preconditioned(gs, f, pre, cfg.gmres)
            u, n_iter, rep = res.x, res.n_iter, pre.reports[-1] if pre.reports else None
        else:
            raise ConfigurationError(f"unknown converge.solver {solver!r}")
        secs = time.perf_counter() - t0
        l2, h1 = compute_errors(u[gs.interior], reference(grid), grid.h)
        hs.append(max(grid.h))
        e2.append(l2)
        e1.append(h1)
        row = dict(mesh=_fmt_counts(grid.n), h=max(grid.h), density=density, pml_width=pml.width,
                   l2_error=l2, h1_error=h1, l2_rate="", h1_rate="", n_iter=n_iter, seconds=secs)
        if len(hs) > 1:
            row["l2_rate"] = fit_rate(hs[-2:], e2[-2:])
            row["h1_rate"] = fit_rate(hs[-2:], e1[-2:])
        rows.append(row)
        if n == levels[-1] and cfg.raw["output"].get("fields", True):
            artifacts.append(write_field(cfg.output_dir / "converge_field.bin", u[gs.interior], grid.h))
    summary = dict(l2_rate=fit_rate(hs, e2), h1_rate=fit_rate(hs, e1), reference_seconds=t_ref)
    rows.append(dict(mesh="fit", l2_rate=summary["l2_rate"], h1_rate=summary["h1_rate"]))
    artifacts.append(write_csv(cfg.output_dir / "converge.csv", rows))
    return RunResult("converge", rows, artifacts, rep, summary)


def _ladder(cfg: RunConfig) -> list[dict]:
    m = int(cfg.get("precond.subdomain_intervals", 100))
    density = float(cfg.get("precond.density", 10.0))
    out = []
    for item in cfg.get("precond.ladder"):
        if isinstance(item, dict):
            counts = tuple(int(c) for c in item["counts"])
            n = int(item.get("n", m * counts[0]))
            freq = item.get("omega_over_2pi")
        else:
            counts = tuple(int(c) for c in item)
            n, freq = m * counts[0], None
        out.append(dict(counts=counts, intervals=n, freq=freq, density=density))
    return out


def precond_rung(cfg: RunConfig, counts, intervals: int, freq: float | None = None,
                 density: float = 10.0) -> dict:
    """One GMRES solve with the sweeping preconditioner on a square mesh of ``intervals``."""
    box = cfg.domain
    dim = box.dim
    if len(counts) != dim:
        raise ConfigurationError(f"ladder partition {counts} does not match the {dim}D domain")
    grid = UniformGrid(box, (intervals + 1,) * dim)
    h = max(grid.h)
    kappa = 2 * np.pi * freq if freq is not None else 2 * np.pi / (density * h)
    pml = cfg.pml
    local = tuple(intervals // c + 1 + 2 * pml.width for c in counts)
    if estimate_direct_bytes(local) > MEMORY_LIMIT:
        raise MemoryGuardError(f"subdomain systems of shape {local} exceed the memory limit")
    medium = Constant(kappa)
    gs = GlobalSystem(grid, medium, pml)
    center = cfg.get("source.center") or [lo + 0.45 * (hi - lo) for lo, hi in zip(box.lo, box.hi)]
    f = gs.embed(Gaussian(tuple(center), kappa).sample(grid))
    t0 = time.perf_counter()
    pre = SweepingPreconditioner(gs, counts, cfg.rounds, cfg.workers)
    t_fact = time.perf_counter() - t0
    t0 = time.perf_counter()
    res = solve_preconditioned(gs, f, pre, cfg.gmres)
    t_slv = time.perf_counter() - t0
    return dict(mesh=_fmt_counts(grid.n), partition=_fmt_counts(counts),
                omega_over_2pi=kappa / (2 * np.pi), density=2 * np.pi / (kappa * h),
                n_iter=res.n_iter, converged=res.converged, residual=float(res.residual),
                true_residual=_relative_residual(gs, f, res.x), t_fact=t_fact, t_slv=t_slv,
                t0=pre.median_solve_seconds())


def run_precond(cfg: RunConfig) -> RunResult:
    """GMRES iteration counts with the sweeping preconditioner along a ladder of partitions."""
    rows = []
    for rung in _ladder(cfg):
        try:
            row = precond_rung(cfg, rung["counts"], rung["intervals"], rung["freq"], rung["density"])
        except MemoryGuardError as exc:
            log.warning("skipping rung %s: %s", rung["counts"], exc)
            continue
        log.info("precond %s: %d iterations", row["partition"], row["n_iter"])
        rows.append(row)
    path = write_csv(cfg.output_dir / "precond.csv", rows)
    return RunResult("precond", rows, [path])


def measured_t0(cfg: RunConfig) -> float:
    """Median subdomain solve time of one sweeping solve of the configured problem."""
    grid = cfg.grid
    partition = partition_domain(grid, cfg.partition_counts)
    states = build_subdomain_states(partition, cfg.medium, cfg.pml)
    pad = cfg.pml.width
    f = np.zeros(grid.padded(pad).shape, dtype=complex)
    f[tuple(slice(pad, pad + m) for m in grid.n)] = cfg.sources.shots[0].sample(grid)
    _, rep = ddm_solve(states, partition, f, 1, cfg.workers)
    return rep.median_solve_seconds


def run_pipeline(cfg: RunConfig) -> RunResult:
    """Closed-form and simulated pipeline averages, plus optional weak-scaling rows."""
    p = cfg.raw["pipeline"]
    t0 = measured_t0(cfg) if p.get("measure_t0") else float(p.get("t0", 1.0))
    scen = PipelineScenario(tuple(int(c) for c in p["counts"]), int(p["n_rhs"]), int(p["n_iter"]), t0)
    rows = [_pipeline_row(scen)]
    artifacts = [write_csv(cfg.output_dir / "pipeline.csv", rows)]
    weak = p.get("weak_scaling") or []
    if weak:
        scen_list = [PipelineScenario(tuple(int(c) for c in w["counts"]), int(w["n_rhs"]),
                                      int(w["n_iter"]), t0) for w in weak]
        wrows = []
        for s in scen_list:
            row = _pipeline_row(s)
            row["efficiency"] = weak_scaling_efficiency(scen_list[0], s)
            wrows.append(row)
        artifacts.append(write_csv(cfg.output_dir / "weak_scaling.csv", wrows))
        rows += wrows
    return RunResult("pipeline", rows, artifacts, summary=dict(t0=t0))


def _pipeline_row(s: PipelineScenario) -> dict:
    est = average_time_per_rhs(s)
    sim = simulate_pipeline(s)
    return dict(counts=_fmt_counts(s.counts), n_rhs=s.n_rhs, n_iter=s.n_iter, t0=s.t0,
                predicted=est.average, simulated=sim.average, idle_fraction=est.idle_fraction,
                simulated_busy=sim.busy_fraction)
