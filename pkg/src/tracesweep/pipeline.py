"""Cost model for pipelined sweeps over many right-hand sides.

Each subdomain is one processor. A right-hand side runs ``n_iter``
preconditioner applications of ``2^dim`` sweeps each; a sweep is a chain of
anti-diagonal steps and a step occupies every processor of its group for one
solve time ``T0``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import step_count, step_index
from .sweeper import SWEEPS_2D, SWEEPS_3D


@dataclass(frozen=True)
class PipelineScenario:
    counts: tuple[int, ...]
    n_rhs: int
    n_iter: int
    t0: float = 1.0

    def __post_init__(self):
        if len(self.counts) not in (2, 3) or min(self.counts) < 1:
            raise ValueError("counts must be 2 or 3 positive integers")
        if self.n_rhs < 1 or self.n_iter < 1 or not self.t0 > 0:
            raise ValueError("n_rhs, n_iter and t0 must be positive")

    @property
    def sweeps(self) -> int:
        return 2 ** len(self.counts)

    @property
    def steps(self) -> int:
        return step_count(self.counts)

    @property
    def processors(self) -> int:
        return int(np.prod(self.counts))


@dataclass(frozen=True)
class PipelineEstimate:
    average: float
    idle_fraction: float


def average_time_per_rhs(s: PipelineScenario) -> PipelineEstimate:
    """Closed form ``(sweeps * n_iter + steps / n_rhs) * T0`` and the idle fraction
    ``steps / (sweeps * n_iter * n_rhs)``."""
    busy = s.sweeps * s.n_iter
    return PipelineEstimate((busy + s.steps / s.n_rhs) * s.t0,
                            s.steps / (busy * s.n_rhs))


@dataclass
class PipelineSchedule:
    completion: np.ndarray
    makespan: float
    busy_fraction: float

    @property
    def average(self) -> float:
        """Mean gap between successive completions, counted from time zero."""
        return self.makespan / self.completion.size


def _group_masks(counts) -> list[list[int]]:
    dirs = SWEEPS_2D if len(counts) == 2 else SWEEPS_3D
    procs = list(itertools.product(*(range(1, c + 1) for c in counts)))
    S = step_count(counts)
    out = []
    for d in dirs:
        masks = [0] * S
        for p, idx in enumerate(procs):
            masks[step_index(counts, idx, d) - 1] |= 1 << p
        out.append(masks)
    return out


def simulate_pipeline(s: PipelineScenario) -> PipelineSchedule:
    """Slot-synchronous list schedule of all (rhs, sweep, step) tasks.

    Every task lasts ``T0`` and needs all processors of its step group. At each
    slot the unfinished right-hand sides are visited least-progressed first
    (ties by index) and each one starts its next task if that task's
    processors are idle; a right-hand side's tasks run strictly in sequence.
    Because all tasks have the same length the slot-synchronous schedule is
    the event-driven one. Serving the laggards first keeps the schedule close
    to the lower bound ``Q N + 2 (S - 1)`` slots.
    """
    masks = _group_masks(s.counts)
    S = s.steps
    chain = s.sweeps * s.n_iter * S
    nxt = np.zeros(s.n_rhs, dtype=np.int64)
    done = np.full(s.n_rhs, -1, dtype=np.int64)
    active = list(range(s.n_rhs))
    slot = 0
    busy_slots = 0
    while active:
        busy = 0
        finished = []
        for r in sorted(active, key=lambda r: (nxt[r], r)):
            g = int(nxt[r])
            sweep, step = divmod(g, S)
            m = masks[sweep % s.sweeps][step]
            if busy & m:
                continue
            busy |= m
            busy_slots += m.bit_count()
            nxt[r] = g + 1
            if g + 1 == chain:
                done[r] = slot + 1
                finished.append(r)
        for r in finished:
            active.remove(r)
        slot += 1
    completion = done.astype(float) * s.t0
    makespan = float(completion.max())
    return PipelineSchedule(completion, makespan, busy_slots / (s.processors * slot))


def weak_scaling_efficiency(base: PipelineScenario, scaled: PipelineScenario) -> float:
    """Modelled efficiency of ``scaled`` relative to ``base`` at equal work per processor."""
    return average_time_per_rhs(base).average / average_time_per_rhs(scaled).average
