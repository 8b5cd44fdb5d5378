"""Classical Markov-chain baseline of the lattice transfer process.

A probability vector evolves under the pairwise stochastic matrix applied
over the exact same pass schedule as the quantum automaton, so a schedule
bug cannot hide in a mismatched baseline.  The fully dephased automaton
must reproduce this trajectory entrywise.
"""

from __future__ import annotations

import numpy as np

from .automaton import LatticeConfig, PassSchedule, schedule
from .channels import StochasticMatrix2
from .measurement import TRACE_FLOOR, ReceptorConfig, RunRecord


class ClassicalState:
    """Nonnegative site-probability vector; the sum may drop after absorption."""

    __slots__ = ("probs",)

    def __init__(self, probs, *, copy: bool = True):
        probs = np.array(probs, dtype=float, copy=copy)
        if probs.ndim != 1:
            raise ValueError(f"probability vector must be 1-d, got shape {probs.shape}")
        self.probs = probs

    @property
    def n_sites(self) -> int:
        return self.probs.shape[0]

    def total(self) -> float:
        return float(self.probs.sum())

    def copy(self) -> "ClassicalState":
        return ClassicalState(self.probs)

    def validate(self, tol: float = 1e-12) -> None:
        if np.any(self.probs < -tol):
            raise ValueError(f"negative probability {self.probs.min()!r}")
        if not -tol <= self.total() <= 1.0 + tol:
            raise ValueError(f"probability sum {self.total()!r} outside [0, 1]")


def point_mass(n_sites: int, site: int) -> ClassicalState:
    """All probability on one site (1-based)."""
    if not 1 <= site <= n_sites:
        raise IndexError(f"site {site} out of range 1..{n_sites}")
    probs = np.zeros(n_sites)
    probs[site - 1] = 1.0
    return ClassicalState(probs, copy=False)


class ClassicalAutomaton:
    """Pass-scheduled application of the pairwise transition matrix."""

    def __init__(self, sched: PassSchedule, t: StochasticMatrix2):
        self.t = t
        self._passes = []
        for pairs in sched.passes:
            a = np.array([p.a - 1 for p in pairs], dtype=np.intp)
            b = np.array([p.b - 1 for p in pairs], dtype=np.intp)
            self._passes.append((a, b))

    def apply_pass(self, state: ClassicalState, which: int) -> ClassicalState:
        a, b = self._passes[which]
        if a.size:
            probs = state.probs
            pa = probs[a]
            pb = probs[b]
            probs[a] = (1.0 - self.t.p) * pa + self.t.q * pb
            probs[b] = self.t.p * pa + (1.0 - self.t.q) * pb
        return state

    def step(self, state: ClassicalState) -> ClassicalState:
        self.apply_pass(state, 0)
        self.apply_pass(state, 1)
        return state


def classical_step(state: ClassicalState, config: LatticeConfig, t: StochasticMatrix2) -> ClassicalState:
    """One full two-pass classical step; ``p`` hops each pair's first site to its second."""
    if state.n_sites != config.n_sites:
        raise ValueError(f"state has {state.n_sites} sites, config expects {config.n_sites}")
    return ClassicalAutomaton(schedule(config), t).step(state)


def classical_measure(state: ClassicalState, site: int) -> tuple[float, ClassicalState]:
    """Absorb the receptor probability: returns the weight, zeroes the entry."""
    if not 1 <= site <= state.n_sites:
        raise IndexError(f"site {site} out of range 1..{state.n_sites}")
    weight = float(state.probs[site - 1])
    state.probs[site - 1] = 0.0
    return weight, state


def run_classical(
    t: StochasticMatrix2,
    config: LatticeConfig,
    receptor: ReceptorConfig,
    t_steps: int,
    initial_site: int = 1,
) -> tuple[ClassicalState, RunRecord]:
    """Measured classical run with the same cadence and bookkeeping as the automaton."""
    if t_steps < 0:
        raise ValueError(f"t_steps must be >= 0, got {t_steps}")
    auto = ClassicalAutomaton(schedule(config), t)
    state = point_mass(config.n_sites, initial_site)
    record = RunRecord()
    record.append(0.0, state.probs[receptor.site - 1], 0.0, 0.0, 1.0)
    for step_idx in range(1, t_steps + 1):
        for pass_idx in (0, 1):
            auto.apply_pass(state, pass_idx)
            if not receptor.measures_at(step_idx, pass_idx):
                continue
            before = state.total()
            if before < TRACE_FLOOR:
                return state, record
            weight, _ = classical_measure(state, receptor.site)
            after = state.total()
            step_value = float(step_idx)
            if receptor.granularity == "per_pass" and pass_idx == 0:
                step_value -= 0.5
            record.append(step_value, weight, weight / before, 1.0 - after, after)
    return state, record
