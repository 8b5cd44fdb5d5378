"""Receptor absorption as repeated projective measurement with conditioning.

A measurement event reads the receptor population, records it as absorbed
weight, and zeroes the receptor's row and column.  The surviving state is
deliberately left unnormalised: its trace is the survival probability, so
the integrated absorption probability is exactly ``1 - trace`` at every
event.  The normalised product recursion over conditional event
probabilities is kept as an independent cross-check observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelParams, build_unitary
from .state import SectorState

TRACE_FLOOR = 1e-15


class StateExhausted(RuntimeError):
    """Surviving trace underflowed: the run is effectively complete."""


@dataclass(frozen=True)
class ReceptorConfig:
    """Where and how often the absorption measurement is performed.

    ``period`` counts ticks between measurements; a tick is a full step for
    ``per_step`` granularity and a single pass for ``per_pass``.
    """

    site: int
    period: int = 1
    granularity: str = "per_step"

    def __post_init__(self):
        if self.site < 1:
            raise ValueError(f"receptor site must be >= 1, got {self.site}")
        if int(self.period) != self.period or self.period < 1:
            raise ValueError(f"period must be a positive integer, got {self.period!r}")
        object.__setattr__(self, "period", int(self.period))
        if self.granularity not in ("per_step", "per_pass"):
            raise ValueError(
                f"granularity must be 'per_step' or 'per_pass', got {self.granularity!r}"
            )

    @classmethod
    def for_lattice(cls, config, period: int = 1, granularity: str = "per_step"):
        """Default receptor: last site of an open chain, opposite site of a ring."""
        site = config.n_sites if config.topology == "open" else config.n_sites // 2 + 1
        return cls(site=site, period=period, granularity=granularity)

    def measures_at(self, step: int, pass_idx: int) -> bool:
        if self.granularity == "per_step":
            return pass_idx == 1 and step % self.period == 0
        tick = 2 * (step - 1) + pass_idx + 1
        return tick % self.period == 0


def measure_and_condition(state: SectorState, site: int) -> tuple[float, SectorState]:
    """One absorption attempt at ``site`` (1-based).

    Returns the unnormalised weight captured by this event and the
    conditioned state with the receptor row and column zeroed.  Raises
    :class:`StateExhausted` when the surviving trace has underflowed below
    ``TRACE_FLOOR`` before the attempt.
    """
    state._check_site(site)
    if state.trace() < TRACE_FLOOR:
        raise StateExhausted(f"state trace below {TRACE_FLOOR}; nothing left to absorb")
    r = site - 1
    weight = float(state.rho[r, r].real)
    state.rho[r, :] = 0.0
    state.rho[:, r] = 0.0
    return weight, state


class RunRecord:
    """Per-event time series of one measured run.

    Columns: ``step`` (half-integers under per-pass measurement),
    ``rho_rr`` (unnormalised receptor weight at the event), ``p_abs_inst``
    (conditional probability of absorption at the event), ``p_tot``
    (integrated absorption probability) and ``trace`` (surviving trace).
    Row zero is the pre-measurement baseline of the initial state.
    """

    columns = ("step", "rho_rr", "p_abs_inst", "p_tot", "trace")

    def __init__(self):
        self._rows: list[tuple[float, float, float, float, float]] = []

    def append(self, step, rho_rr, p_abs_inst, p_tot, trace) -> None:
        self._rows.append(
            (float(step), float(rho_rr), float(p_abs_inst), float(p_tot), float(trace))
        )

    def __len__(self) -> int:
        return len(self._rows)

    def rows(self):
        return iter(self._rows)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self._rows])

    @property
    def step(self) -> np.ndarray:
        return self.column("step")

    @property
    def rho_rr(self) -> np.ndarray:
        return self.column("rho_rr")

    @property
    def p_abs_inst(self) -> np.ndarray:
        return self.column("p_abs_inst")

    @property
    def p_tot(self) -> np.ndarray:
        return self.column("p_tot")

    @property
    def trace(self) -> np.ndarray:
        return self.column("trace")

    def validate(self, tol: float = 1e-12) -> None:
        p_tot = self.p_tot
        if len(p_tot) == 0:
            return
        if np.any(np.diff(p_tot) < -tol):
            raise ValueError("p_tot is not nondecreasing")
        if p_tot[0] < -tol or p_tot[-1] > 1.0 + tol:
            raise ValueError(f"p_tot outside [0, 1]: {p_tot[0]!r}..{p_tot[-1]!r}")
        gap = np.max(np.abs((1.0 - self.trace) - p_tot))
        if gap > tol:
            raise ValueError(f"1 - trace deviates from p_tot by {gap:.3e}")


class AbsorptionTracker:
    """Run hook performing the periodic measurement and the bookkeeping."""

    def __init__(self, receptor: ReceptorConfig, initial: SectorState | None = None):
        self.receptor = receptor
        self.record = RunRecord()
        if initial is not None:
            trace = initial.trace()
            self.record.append(
                0.0, initial.population(receptor.site), 0.0, 1.0 - trace, trace
            )

    def __call__(self, state: SectorState, step: int, pass_idx: int) -> None:
        if not self.receptor.measures_at(step, pass_idx):
            return
        before = state.trace()
        weight, _ = measure_and_condition(state, self.receptor.site)
        after = state.trace()
        step_value = float(step)
        if self.receptor.granularity == "per_pass" and pass_idx == 0:
            step_value -= 0.5
        self.record.append(step_value, weight, weight / before, 1.0 - after, after)


def integrated_probability(record: RunRecord) -> np.ndarray:
    """Product recursion over the conditional event probabilities.

    Returns ``1 - prod(1 - p_hat)`` cumulatively; must agree with the
    ``p_tot`` column produced by the unnormalised bookkeeping.
    """
    survival = np.cumprod(1.0 - record.p_abs_inst)
    return 1.0 - survival


def predict_next_absorption(state: SectorState, params: ChannelParams) -> float:
    """Receptor weight expected after the next step, from the 3x3 tail block.

    Valid for an open chain whose receptor row/column are currently zeroed
    (post-measurement) when the step about to run acts unitarily on the tail
    (no dephasing, no damping): the prediction then matches the simulated
    next event weight exactly.
    """
    n = state.n_sites
    if n < 3:
        raise ValueError("tail-block prediction needs at least 3 sites")
    u = build_unitary(params.unitary)
    u21, u22 = u[1, 0], u[1, 1]
    rho = state.rho
    raa = rho[n - 3, n - 3].real
    rbb = rho[n - 2, n - 2].real
    rab = rho[n - 3, n - 2]
    w21 = abs(u21) ** 2
    w22 = abs(u22) ** 2
    cross = 2.0 * (u21 * np.conj(u22) * rab).real
    return float(w21 * (w21 * raa + w22 * rbb + cross))


def coherence_within_bound(state: SectorState, site_a: int, site_b: int, tol: float = 1e-10) -> bool:
    """Check the positivity bound |rho_ab| <= sqrt(rho_aa rho_bb) + tol."""
    i, j = site_a - 1, site_b - 1
    rho = state.rho
    bound = math.sqrt(max(rho[i, i].real, 0.0) * max(rho[j, j].real, 0.0))
    return abs(rho[i, j]) <= bound + tol
