"""Partitioned two-pass lattice update built from the pair channel.

One automaton step applies the composite pair channel (unitary, dephasing,
damping) to one sublattice of disjoint neighbouring pairs and then to the
sublattice shifted by one site.  With the default ``offset1_first`` ordering
the shifted pairs (2,3), (4,5), ... go first and the aligned pairs (1,2),
(3,4), ... second, so on an even open chain the pair containing the far end
is the last one applied within a step.  On a ring the wrap pair ``(N, 1)``
joins the shifted pass; rings require an even number of sites.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .channels import ChannelParams, build_unitary
from .measurement import StateExhausted
from .state import (
    PairIndex,
    SectorState,
    damp_on_pairs,
    dephase_on_pairs,
    unitary_on_pairs,
)

TOPOLOGIES = ("open", "ring")
PASS_ORDERS = ("offset1_first", "offset0_first")

Hook = Callable[[SectorState, int, int], None]


@dataclass(frozen=True)
class LatticeConfig:
    """Lattice geometry plus the channel parameters of every pair update."""

    n_sites: int
    topology: str
    params: ChannelParams
    pass_order: str = "offset1_first"

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.topology == "ring" and self.n_sites % 2 != 0:
            raise ValueError(f"ring topology requires an even number of sites, got {self.n_sites}")
        if self.pass_order not in PASS_ORDERS:
            raise ValueError(f"pass_order must be one of {PASS_ORDERS}, got {self.pass_order!r}")


@dataclass(frozen=True)
class PassSchedule:
    """The two ordered pair lists making up one automaton step."""

    passes: tuple[tuple[PairIndex, ...], tuple[PairIndex, ...]]

    def all_pairs(self) -> tuple[PairIndex, ...]:
        return self.passes[0] + self.passes[1]


def schedule(config: LatticeConfig) -> PassSchedule:
    """Partition the adjacent pairs into the two passes of one step."""
    n = config.n_sites
    offset0 = tuple(PairIndex(a, a + 1) for a in range(1, n, 2))
    offset1 = tuple(PairIndex(a, a + 1) for a in range(2, n, 2))
    if config.topology == "ring":
        offset1 = offset1 + (PairIndex(n, 1),)
    if config.pass_order == "offset1_first":
        return PassSchedule(passes=(offset1, offset0))
    return PassSchedule(passes=(offset0, offset1))


class Automaton:
    """Precompiled two-pass update for a fixed lattice configuration."""

    def __init__(self, config: LatticeConfig):
        self.config = config
        self.schedule = schedule(config)
        self._u2 = build_unitary(config.params.unitary)
        self._xi = config.params.xi
        self._eta = config.params.eta
        self._passes = []
        for pairs in self.schedule.passes:
            a = np.array([p.a - 1 for p in pairs], dtype=np.intp)
            b = np.array([p.b - 1 for p in pairs], dtype=np.intp)
            self._passes.append((a, b, np.concatenate([a, b])))

    def apply_pass(self, state: SectorState, which: int) -> SectorState:
        """Apply every pair channel of pass ``which`` (0 or 1) in place."""
        self._check_state(state)
        a, b, paired = self._passes[which]
        if a.size:
            rho = state.rho
            unitary_on_pairs(rho, a, b, self._u2)
            dephase_on_pairs(rho, paired, self._xi)
            damp_on_pairs(rho, a, b, self._eta)
        return state

    def step(self, state: SectorState) -> SectorState:
        self.apply_pass(state, 0)
        self.apply_pass(state, 1)
        return state

    def _check_state(self, state: SectorState) -> None:
        if state.n_sites != self.config.n_sites:
            raise ValueError(
                f"state has {state.n_sites} sites, config expects {self.config.n_sites}"
            )


def step(state: SectorState, config: LatticeConfig) -> SectorState:
    """Run one full automaton step (both passes) on ``state``."""
    return Automaton(config).step(state)


def run(
    config: LatticeConfig,
    initial: SectorState,
    t_steps: int,
    hooks: Iterable[Hook] = (),
    *,
    debug_psd: bool = False,
) -> SectorState:
    """Iterate the automaton, invoking hooks after every pass.

    Hooks are called as ``hook(state, step_index, pass_index)`` with step
    indices starting at 1 and pass indices 0 or 1; measurement trackers
    decide internally which ticks they act on.  A hook raising
    :class:`StateExhausted` ends the run cleanly (nothing left to absorb);
    other exceptions propagate.
    """
    if t_steps < 0:
        raise ValueError(f"t_steps must be >= 0, got {t_steps}")
    auto = Automaton(config)
    hooks = tuple(hooks)
    state = initial
    try:
        for t in range(1, t_steps + 1):
            for pass_idx in (0, 1):
                auto.apply_pass(state, pass_idx)
                for hook in hooks:
                    hook(state, t, pass_idx)
            if debug_psd:
                state.check(psd=True)
    except StateExhausted:
        pass
    return state
