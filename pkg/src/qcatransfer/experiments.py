"""Scenario runs, parameter sweeps, grid optimisation, and result emission.

A scenario fixes the lattice, the hop probabilities, the phase sum, and a
list of dephasing strengths; running it produces one absorption record per
dephasing value plus the classical Markov baseline.  Sweeps evaluate a named
reducer over a cartesian grid of scenario parameters, and the optimiser is
an exhaustive argmax over one axis with ties broken toward the smaller
parameter value.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .automaton import PASS_ORDERS, TOPOLOGIES, LatticeConfig, run
from .channels import StochasticMatrix2, classical_to_channel
from .classical import run_classical
from .configfile import ConfigError, check_schema_version, normalize_keys
from .measurement import AbsorptionTracker, ReceptorConfig, RunRecord
from .state import basis_state

CSV_HEADER = "step,rho_rr,p_abs_inst,p_tot,trace"

#: scenario parameters a sweep or optimiser axis may range over
AXIS_KEYS = ("p", "q", "xi", "phi_sum", "period", "n_sites", "t_max", "initial_site")

ALIASES = {"xi": "xi_values"}

SCENARIO_KEYS = {
    "schema_version",
    "name",
    "n_sites",
    "topology",
    "p",
    "q",
    "phi_sum",
    "xi_values",
    "t_max",
    "initial_site",
    "receptor_site",
    "period",
    "granularity",
    "pass_order",
    "outputs",
}

SWEEP_KEYS = SCENARIO_KEYS | {"axes", "reducer", "max_cells"} | {
    f"sweep_{axis}" for axis in AXIS_KEYS
}

OPTIMIZE_KEYS = SCENARIO_KEYS | {"axis", "axis_values", "objective"}

REDUCERS = ("ptot_at", "class_minus_quantum_at", "first_classical_catchup")


@dataclass(frozen=True)
class Scenario:
    """One reproducible experiment configuration."""

    name: str
    n_sites: int
    topology: str
    p: float
    q: float
    phi_sum: float
    xi_values: tuple[float, ...]
    t_max: int
    initial_site: int = 1
    receptor_site: int | None = None
    period: int = 1
    granularity: str = "per_step"
    pass_order: str = "offset1_first"
    outputs: tuple[str, ...] = ("csv",)

    def __post_init__(self):
        if not self.name or not all(c.isalnum() or c in "._-" for c in self.name):
            raise ValueError(f"name must be a nonempty filename-safe token, got {self.name!r}")
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.topology == "ring" and self.n_sites % 2 != 0:
            raise ValueError(f"ring topology requires an even number of sites, got {self.n_sites}")
        if self.pass_order not in PASS_ORDERS:
            raise ValueError(f"pass_order must be one of {PASS_ORDERS}, got {self.pass_order!r}")
        StochasticMatrix2(self.p, self.q)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "phi_sum", float(self.phi_sum))
        xi_values = tuple(float(v) for v in self.xi_values)
        if not xi_values:
            raise ValueError("xi_values must not be empty")
        if len(set(xi_values)) != len(xi_values):
            raise ValueError(f"xi_values contains duplicates: {xi_values}")
        for value in xi_values:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"xi_values entries must be in [0, 1], got {value!r}")
        object.__setattr__(self, "xi_values", xi_values)
        if int(self.t_max) != self.t_max or self.t_max < 0:
            raise ValueError(f"t_max must be an integer >= 0, got {self.t_max!r}")
        object.__setattr__(self, "t_max", int(self.t_max))
        if not 1 <= self.initial_site <= self.n_sites:
            raise ValueError(
                f"initial_site must be in 1..{self.n_sites}, got {self.initial_site!r}"
            )
        if self.receptor_site is not None and not 1 <= self.receptor_site <= self.n_sites:
            raise ValueError(
                f"receptor_site must be in 1..{self.n_sites}, got {self.receptor_site!r}"
            )
        unknown = set(self.outputs) - {"csv", "svg"}
        if unknown:
            raise ValueError(f"outputs entries must be 'csv' or 'svg', got {sorted(unknown)}")

    def stochastic(self) -> StochasticMatrix2:
        return StochasticMatrix2(self.p, self.q)

    def lattice_for(self, xi: float) -> LatticeConfig:
        params = classical_to_channel(self.stochastic(), xi=xi, phi1=self.phi_sum, phi2=0.0)
        return LatticeConfig(
            n_sites=self.n_sites,
            topology=self.topology,
            params=params,
            pass_order=self.pass_order,
        )

    def receptor(self) -> ReceptorConfig:
        site = self.receptor_site
        if site is None:
            site = self.n_sites if self.topology == "open" else self.n_sites // 2 + 1
        return ReceptorConfig(site, self.period, self.granularity)


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian grid of scenario parameters with a per-cell reducer."""

    base: Scenario
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    reducer: str
    max_cells: int = 4096

    def __post_init__(self):
        if not self.axes:
            raise ValueError("sweep needs at least one axis")
        for name, values in self.axes:
            if name not in AXIS_KEYS:
                raise ValueError(f"unknown sweep axis {name!r} (allowed: {AXIS_KEYS})")
            if not values:
                raise ValueError(f"axis {name!r} has no values")
        _parse_reducer(self.reducer)
        if self.n_cells > self.max_cells:
            raise ValueError(
                f"sweep budget exceeded: {self.n_cells} cells > max_cells={self.max_cells}"
            )

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    @property
    def n_cells(self) -> int:
        return math.prod(len(values) for _, values in self.axes)

    def cells(self):
        names = self.axis_names
        for combo in itertools.product(*(values for _, values in self.axes)):
            assignment = dict(zip(names, combo))
            yield assignment, _with_axes(self.base, assignment)


@dataclass(frozen=True)
class OptimizeSpec:
    """Exhaustive single-axis search configuration."""

    base: Scenario
    axis: str
    values: tuple[float, ...]
    objective: str

    def __post_init__(self):
        if self.axis not in AXIS_KEYS:
            raise ValueError(f"unknown optimise axis {self.axis!r} (allowed: {AXIS_KEYS})")
        if not self.values:
            raise ValueError("axis_values must not be empty")
        _parse_reducer(self.objective)


def _with_axes(base: Scenario, assignment: dict) -> Scenario:
    updates: dict = {}
    for name, value in assignment.items():
        if name == "xi":
            updates["xi_values"] = (float(value),)
        elif name in ("p", "q", "phi_sum"):
            updates[name] = float(value)
        else:
            as_int = int(value)
            if as_int != value:
                raise ValueError(f"axis {name!r} needs integer values, got {value!r}")
            updates[name] = as_int
    return replace(base, **updates)


def _quantum_record(scenario: Scenario, xi: float, *, debug_psd: bool = False) -> RunRecord:
    config = scenario.lattice_for(xi)
    state = basis_state(scenario.n_sites, scenario.initial_site)
    tracker = AbsorptionTracker(scenario.receptor(), initial=state)
    run(config, state, scenario.t_max, hooks=(tracker,), debug_psd=debug_psd)
    return tracker.record


def _classical_record(scenario: Scenario) -> RunRecord:
    _, record = run_classical(
        scenario.stochastic(),
        scenario.lattice_for(1.0),
        scenario.receptor(),
        scenario.t_max,
        scenario.initial_site,
    )
    return record


def run_scenario(scenario: Scenario, *, debug_psd: bool = False) -> dict[str, RunRecord]:
    """One record per dephasing value plus the classical baseline."""
    records: dict[str, RunRecord] = {}
    for xi in scenario.xi_values:
        records[f"xi{xi:g}"] = _quantum_record(scenario, xi, debug_psd=debug_psd)
    records["classical"] = _classical_record(scenario)
    return records


def p_tot_series(record: RunRecord, steps) -> np.ndarray:
    """Integrated absorption evaluated at arbitrary step values.

    Records are step functions: the value at ``s`` is the one from the
    latest event at or before ``s``.  A run that ended early because the
    state was exhausted correctly holds its final value afterwards.
    """
    if len(record) == 0:
        raise ValueError("record has no events")
    idx = np.searchsorted(record.step, np.asarray(steps, dtype=float) + 1e-9) - 1
    if np.any(idx < 0):
        raise ValueError(f"record starts at step {record.step[0]}, queried earlier")
    return record.p_tot[idx]


def p_tot_at(record: RunRecord, step: float) -> float:
    """Latest integrated absorption value recorded at or before ``step``."""
    return float(p_tot_series(record, [step])[0])


def first_classical_catchup(
    quantum: RunRecord, classical: RunRecord, tol: float = 1e-12
) -> float:
    """First step at which the classical curve has caught the quantum one.

    The quantum series must first have led strictly (beyond ``tol``);
    returns NaN when it never does or is never caught up with.
    """
    steps = np.union1d(quantum.step, classical.step)
    q_series = p_tot_series(quantum, steps)
    c_series = p_tot_series(classical, steps)
    led = False
    for step_value, q, c in zip(steps, q_series, c_series):
        if led and c >= q - tol:
            return float(step_value)
        if q > c + tol:
            led = True
    return math.nan


def _parse_reducer(spec: str) -> tuple[str, int | None]:
    name, _, arg = str(spec).partition(":")
    if name not in REDUCERS:
        raise ValueError(f"unknown reducer {spec!r} (known: {REDUCERS})")
    if name.endswith("_at"):
        try:
            step = int(arg)
        except ValueError:
            raise ValueError(f"reducer {name!r} needs an integer step, got {spec!r}") from None
        if step < 0:
            raise ValueError(f"reducer step must be >= 0, got {spec!r}")
        return name, step
    if arg:
        raise ValueError(f"reducer {name!r} takes no argument, got {spec!r}")
    return name, None


def evaluate_reducer(scenario: Scenario, spec: str) -> float:
    """Evaluate a named observable for one scenario cell."""
    name, step = _parse_reducer(spec)
    if step is not None and step > scenario.t_max:
        raise ValueError(
            f"reducer step {step} is beyond the scenario horizon t_max={scenario.t_max}"
        )
    if name == "ptot_at":
        if len(scenario.xi_values) != 1:
            raise ValueError(
                "reducer 'ptot_at' needs exactly one xi value per cell "
                f"(got {scenario.xi_values})"
            )
        return p_tot_at(_quantum_record(scenario, scenario.xi_values[0]), step)
    if name == "class_minus_quantum_at":
        most_classical = p_tot_at(_quantum_record(scenario, 1.0), step)
        most_quantum = p_tot_at(_quantum_record(scenario, 0.0), step)
        return most_classical - most_quantum
    return first_classical_catchup(_quantum_record(scenario, 0.0), _classical_record(scenario))


def _evaluate_cell(payload: tuple[Scenario, str]) -> float:
    scenario, reducer = payload
    return evaluate_reducer(scenario, reducer)


def sweep(grid: SweepGrid, *, workers: int = 1) -> list[dict]:
    """Evaluate the reducer on every grid cell.

    Cells are independent; with ``workers > 1`` they run in a process pool
    and results are gathered by cell index, so the output order never
    depends on completion order.
    """
    cells = list(grid.cells())
    payloads = [(scenario, grid.reducer) for _, scenario in cells]
    if workers <= 1:
        values = [_evaluate_cell(payload) for payload in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_evaluate_cell, payloads))
    rows = []
    for (assignment, _), value in zip(cells, values):
        row = dict(assignment)
        row["value"] = float(value)
        rows.append(row)
    return rows


def optimize(objective: Callable[[float], float], axis: Sequence[float]) -> float:
    """Exhaustive argmax over ``axis``; ties go to the smaller parameter."""
    values = sorted(axis)
    if not values:
        raise ValueError("optimize needs a nonempty axis")
    best_param = values[0]
    best_value = -math.inf
    for param in values:
        value = objective(param)
        if value > best_value:
            best_param, best_value = param, value
    return best_param


def optimize_scenario(
    base: Scenario, axis: str, values: Sequence[float], objective_spec: str
) -> tuple[float, list[dict]]:
    """Grid-search one scenario parameter; returns the winner and the table."""
    spec = OptimizeSpec(base, axis, tuple(float(v) for v in values), objective_spec)
    cache: dict[float, float] = {}

    def objective(param: float) -> float:
        cache[param] = evaluate_reducer(_with_axes(spec.base, {spec.axis: param}), spec.objective)
        return cache[param]

    best = optimize(objective, spec.values)
    rows = [{spec.axis: param, "value": cache[param]} for param in sorted(spec.values)]
    return best, rows


def _format_value(value) -> str:
    return repr(float(value))


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="ascii")
    except OSError as exc:
        raise RuntimeError(f"failed writing {path}: {exc}") from exc


def write_record_csv(record: RunRecord, path) -> None:
    lines = [CSV_HEADER]
    for row in record.rows():
        lines.append(",".join(_format_value(v) for v in row))
    _write_text(Path(path), "\n".join(lines) + "\n")


def read_series(path) -> dict[str, np.ndarray]:
    """Parse a record CSV back into column arrays."""
    text = Path(path).read_text(encoding="ascii")
    lines = [line for line in text.splitlines() if line]
    header = lines[0].split(",")
    if header != CSV_HEADER.split(","):
        raise ValueError(f"{path}: unexpected CSV header {lines[0]!r}")
    columns = {name: [] for name in header}
    for line in lines[1:]:
        for name, token in zip(header, line.split(",")):
            columns[name].append(float(token))
    return {name: np.array(values) for name, values in columns.items()}


def write_sweep_csv(rows: list[dict], axis_names: Sequence[str], path) -> None:
    header = list(axis_names) + ["value"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_value(row[name]) for name in header))
    _write_text(Path(path), "\n".join(lines) + "\n")


def _write_svg(records: dict[str, RunRecord], path: Path) -> None:
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError(
            "SVG emission requires matplotlib (pip install 'qcatransfer[plots]')"
        ) from exc
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, record in records.items():
        ax.plot(record.step, record.p_tot, label=label)
    ax.set_xlabel("automaton step")
    ax.set_ylabel("integrated absorption probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg")
    except OSError as exc:
        raise RuntimeError(f"failed writing {path}: {exc}") from exc
    finally:
        plt.close(fig)


def emit(
    records: dict[str, RunRecord], out_dir, base_name: str, *, svg: bool = False
) -> list[Path]:
    """Write one CSV per record, plus an optional combined SVG line plot."""
    if not records:
        raise ValueError("no records to emit")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"failed creating output directory {out}: {exc}") from exc
    written: list[Path] = []
    for label, record in records.items():
        path = out / f"{base_name}_{label}.csv"
        write_record_csv(record, path)
        written.append(path)
    if svg:
        path = out / f"{base_name}.svg"
        _write_svg(records, path)
        written.append(path)
    return written


def _require(data: dict, key: str, source: str):
    if key not in data:
        raise ConfigError(f"{source}: missing required key {key!r}")
    return data[key]


def _as_tuple(value) -> tuple:
    return value if isinstance(value, tuple) else (value,)


def _scenario_fields(data: dict, source: str) -> dict:
    check_schema_version(data, source)
    fields = {
        "name": str(_require(data, "name", source)),
        "n_sites": _require(data, "n_sites", source),
        "topology": str(_require(data, "topology", source)),
        "p": _require(data, "p", source),
        "q": _require(data, "q", source),
        "phi_sum": _require(data, "phi_sum", source),
        "xi_values": tuple(_as_tuple(_require(data, "xi_values", source))),
        "t_max": _require(data, "t_max", source),
    }
    for key in ("initial_site", "receptor_site", "period", "granularity", "pass_order"):
        if key in data:
            fields[key] = data[key]
    if "outputs" in data:
        fields["outputs"] = tuple(str(v) for v in _as_tuple(data["outputs"]))
    return fields


def scenario_from_config(data: dict, source: str = "<config>") -> Scenario:
    data = normalize_keys(data, SCENARIO_KEYS, ALIASES, source)
    return Scenario(**_scenario_fields(data, source))


def sweep_from_config(data: dict, source: str = "<config>") -> SweepGrid:
    data = normalize_keys(data, SWEEP_KEYS, ALIASES, source)
    axis_names = tuple(str(a) for a in _as_tuple(_require(data, "axes", source)))
    axes = []
    for name in axis_names:
        key = f"sweep_{name}"
        values = tuple(float(v) for v in _as_tuple(_require(data, key, source)))
        axes.append((name, values))
    reducer = str(_require(data, "reducer", source))
    base_data = {k: v for k, v in data.items() if k in SCENARIO_KEYS}
    base = Scenario(**_scenario_fields(base_data, source))
    kwargs = {}
    if "max_cells" in data:
        kwargs["max_cells"] = int(data["max_cells"])
    return SweepGrid(base=base, axes=tuple(axes), reducer=reducer, **kwargs)


def optimize_from_config(data: dict, source: str = "<config>") -> OptimizeSpec:
    data = normalize_keys(data, OPTIMIZE_KEYS, ALIASES, source)
    axis = str(_require(data, "axis", source))
    values = tuple(float(v) for v in _as_tuple(_require(data, "axis_values", source)))
    objective = str(_require(data, "objective", source))
    base_data = {k: v for k, v in data.items() if k in SCENARIO_KEYS}
    base = Scenario(**_scenario_fields(base_data, source))
    return OptimizeSpec(base=base, axis=axis, values=values, objective=objective)
