"""Diagonal sweep plans, trace routing, subdomain set-up and the sweeping solver."""
from __future__ import annotations

import hashlib
import itertools
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .direct import Factorization, factorize, solve
from .geometry import AssemblyWeights, Partition, SubdomainLayout, step_count, step_group
from .media import WaveNumberModel, extend_to_subdomain
from .operator import SparseOperator, assemble, scaled_rhs
from .pml import PmlSpec, build_coefficients
from .transfer import TraceMailbox, accumulate, cardinal_directions, extract_trace, split_source

SWEEPS_2D = ((1, 1), (-1, 1), (1, -1), (-1, -1))
SWEEPS_3D = ((1, 1, 1), (-1, 1, 1), (1, -1, 1), (-1, -1, 1),
             (1, 1, -1), (-1, 1, -1), (1, -1, -1), (-1, -1, -1))


def similar(d1: Sequence[int], d2: Sequence[int]) -> bool:
    """Positive dot product and, in 3D, no component of opposite sign."""
    dot = sum(a * b for a, b in zip(d1, d2))
    if len(d1) == 2:
        return dot > 0
    return dot > 0 and all(a * b >= 0 for a, b in zip(d1, d2))


def _opposite(d1, d2) -> bool:
    return all(a == -b for a, b in zip(d1, d2))


def blocked(trace_dir: Sequence[int], born: Sequence[int], later: Sequence[int]) -> bool:
    """Whether a trace generated in sweep ``born`` is barred from sweep ``later``.

    2D: the two sweeps point in opposite directions. 3D: some coordinate-plane
    projection of the trace has exactly one zero component while the
    projections of the two sweeps are opposite. A trace whose projection is
    the zero vector does not trigger the 3D test.
    """
    if len(trace_dir) == 2:
        return _opposite(born, later)
    for a, b in ((0, 1), (0, 2), (1, 2)):
        zeros = (trace_dir[a] == 0) + (trace_dir[b] == 0)
        if zeros == 1 and _opposite((born[a], born[b]), (later[a], later[b])):
            return True
    return False


@dataclass(frozen=True)
class SweepPlan:
    """Sweep directions repeated over ``rounds``; sweeps are numbered from 1."""

    counts: tuple[int, ...]
    rounds: int = 1

    def __post_init__(self):
        if len(self.counts) not in (2, 3):
            raise ValueError("sweep plans exist for 2D and 3D partitions only")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def directions(self) -> tuple[tuple[int, ...], ...]:
        base = SWEEPS_2D if self.dim == 2 else SWEEPS_3D
        return base * self.rounds

    @property
    def n_sweeps(self) -> int:
        return len(self.directions)

    @property
    def steps(self) -> int:
        return step_count(self.counts)

    def direction(self, sweep: int) -> tuple[int, ...]:
        return self.directions[sweep - 1]

    def group(self, sweep: int, s: int) -> list[tuple[int, ...]]:
        return step_group(self.counts, self.direction(sweep), s)


def route_trace(plan: SweepPlan, born: int, trace_dir: Sequence[int]) -> int | None:
    """First sweep ``l' >= born`` allowed to consume the trace, or None to discard it."""
    d_born = plan.direction(born)
    for later in range(born, plan.n_sweeps + 1):
        d = plan.direction(later)
        if similar(trace_dir, d) and not (later > born and blocked(trace_dir, d_born, d)):
            return later
    return None


def routing_table(plan: SweepPlan) -> dict[tuple[int, tuple[int, ...]], int | None]:
    return {(l, d): route_trace(plan, l, d)
            for l in range(1, plan.n_sweeps + 1) for d in cardinal_directions(plan.dim)}


@dataclass
class SubdomainState:
    """Everything one subdomain needs to solve: padded layout, operator and factors."""

    layout: SubdomainLayout
    kappa: np.ndarray
    op: SparseOperator
    factors: Factorization

    @property
    def idx(self) -> tuple[int, ...]:
        return self.layout.idx


def _medium_key(kappa: np.ndarray, layout: SubdomainLayout, pml: PmlSpec) -> tuple:
    digest = hashlib.sha1(np.ascontiguousarray(kappa).tobytes()).hexdigest()
    h = tuple(round(v, 15) for v in layout.grid.h)
    return digest, kappa.shape, h, pml


def build_subdomain_states(partition: Partition, medium: WaveNumberModel, pml: PmlSpec,
                           share: bool = True) -> dict[tuple[int, ...], SubdomainState]:
    """Assemble and factor every local problem.

    With ``share`` the subdomains whose padded wave-number field, spacing and
    PML agree reuse one factorization; in a constant medium that is all of
    them. Equal inputs give equal matrices, so sharing is exact.
    """
    cache: dict[tuple, tuple[SparseOperator, Factorization]] = {}
    states = {}
    for idx in partition.subdomains():
        layout = SubdomainLayout(partition, idx, pml.width)
        grid = layout.grid
        kappa = extend_to_subdomain(medium, partition, idx, grid).kappa
        key = _medium_key(kappa, layout, pml)
        if share and key in cache:
            op, fac = cache[key]
        else:
            coeffs = build_coefficients(pml, layout.box, grid)
            op = assemble(grid, coeffs, kappa)
            fac = factorize(op)
            cache[key] = (op, fac)
        states[idx] = SubdomainState(layout, kappa, op, fac)
    return states


@dataclass
class SolveReport:
    """Bookkeeping from one sweeping solve."""

    sweeps: int = 0
    solves: int = 0
    skipped: int = 0
    generated: int = 0
    routed: int = 0
    discarded: int = 0
    solve_seconds: list[float] = field(default_factory=list)
    step_seconds: list[tuple[int, int, float]] = field(default_factory=list)
    nonzero_sweeps: set[int] = field(default_factory=set)
    sweep_norms: dict[int, float] = field(default_factory=dict)
    residual_history: list[float] = field(default_factory=list)

    @property
    def median_solve_seconds(self) -> float:
        return float(np.median(self.solve_seconds)) if self.solve_seconds else 0.0


def _default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def ddm_solve(states: dict[tuple[int, ...], SubdomainState], partition: Partition, f: np.ndarray,
              rounds: int = 1, workers: int | None = 1, weighted_split: bool = False):
    """Approximate the global PML solution for source ``f`` by diagonal sweeps.

    ``f`` and the returned field live on the partitioned grid padded by the
    PML width, i.e. the grid of the global truncated problem. Returns the
    assembled field and a SolveReport. Subdomains of one step are solved
    concurrently when ``workers > 1``; traces are summed in canonical order
    so the result does not depend on ``workers``.
    """
    plan = SweepPlan(partition.counts, rounds)
    layers = next(iter(states.values())).layout.layers
    weights = AssemblyWeights(partition, layers)
    f = np.asarray(f)
    if f.shape != weights.shape:
        raise ValueError(f"source shape {f.shape} != padded grid shape {weights.shape}")
    workers = _default_workers() if workers is None else max(1, int(workers))
    report = SolveReport()
    mailbox = TraceMailbox()
    pending_source = {idx: True for idx in partition.subdomains()}
    u = np.zeros(weights.shape, dtype=complex)
    dirs = cardinal_directions(partition.dim)

    def local_rhs(idx, sweep):
        st = states[idx]
        rhs = mailbox.source_for(idx, sweep, st.layout, st.op)
        if pending_source[idx]:
            pending_source[idx] = False
            fl = split_source(f, st.layout, weights if weighted_split else None)
            if np.any(fl):
                local = scaled_rhs(st.op, fl)
                rhs = local if rhs is None else rhs + local
        return rhs

    def work(item):
        idx, rhs = item
        t0 = time.perf_counter()
        ul = solve(states[idx].factors, rhs)
        return idx, ul, time.perf_counter() - t0

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for sweep in range(1, plan.n_sweeps + 1):
            report.sweeps += 1
            for s in range(1, plan.steps + 1):
                t_step = time.perf_counter()
                group = plan.group(sweep, s)
                jobs = []
                for idx in group:
                    rhs = local_rhs(idx, sweep)
                    if rhs is None or not np.any(rhs):
                        report.skipped += 1
                    else:
                        jobs.append((idx, rhs))
                results = list(pool.map(work, jobs)) if pool else [work(j) for j in jobs]
                # results come back in group order regardless of scheduling
                for idx, ul, secs in results:
                    report.solves += 1
                    report.solve_seconds.append(secs)
                    report.nonzero_sweeps.add(sweep)
                    st = states[idx]
                    contrib = np.linalg.norm(ul[st.layout.core])
                    report.sweep_norms[sweep] = float(np.hypot(report.sweep_norms.get(sweep, 0.0), contrib))
                    for d in dirs:
                        tr = extract_trace(ul, st.layout, d)
                        if tr is None:
                            continue
                        report.generated += 1
                        target = route_trace(plan, sweep, d)
                        if target is None:
                            report.discarded += 1
                            continue
                        tr.target_sweep = target
                        report.routed += 1
                        mailbox.deposit(partition.neighbor(idx, d), target, tr)
                    accumulate(u, ul, weights, st.layout)
                report.step_seconds.append((sweep, s, time.perf_counter() - t_step))
    finally:
        if pool:
            pool.shutdown()
    return u, report


def subdomains_in_plan_order(plan: SweepPlan, sweep: int):
    return list(itertools.chain.from_iterable(plan.group(sweep, s) for s in range(1, plan.steps + 1)))
