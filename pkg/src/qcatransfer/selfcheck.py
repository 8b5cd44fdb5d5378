"""Fast deterministic invariant suite behind ``qcat selfcheck``.

All randomised checks draw from a generator seeded with ``SELFCHECK_SEED``,
so repeated invocations produce identical numbers and identical verdicts.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .automaton import LatticeConfig, run
from .channels import (
    DegenerateEmbeddingWarning,
    DiagState2,
    StochasticMatrix2,
    amp_damp_2d,
    amp_damp_kraus,
    classical_to_channel,
    dephase_2d,
    dephasing_kraus,
    embedded_apply,
    stochastic_apply,
)
from .classical import run_classical
from .measurement import AbsorptionTracker, ReceptorConfig, integrated_probability
from .state import basis_state

SELFCHECK_SEED = 1729


def _check_embedding(rng) -> tuple[bool, str]:
    worst = 0.0
    for p, q, m, xi in rng.random((2000, 4)):
        t = StochasticMatrix2(p, q)
        expected = stochastic_apply(t, DiagState2(m)).m
        got = embedded_apply(t, m, xi=xi).m
        worst = max(worst, abs(got - expected))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def _check_channel_cptp(rng) -> tuple[bool, str]:
    worst = 0.0
    for _ in range(200):
        xi = rng.random()
        eta = rng.uniform(-1.0, 1.0)
        for kraus in (dephasing_kraus(xi), amp_damp_kraus(eta)):
            total = sum(k.conj().T @ k for k in kraus)
            worst = max(worst, float(np.max(np.abs(total - np.eye(2)))))
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        for out in (dephase_2d(rho, xi), amp_damp_2d(rho, eta)):
            worst = max(worst, float(np.max(np.abs(out - out.conj().T))))
            worst = max(worst, abs(np.trace(out).real - 1.0))
            worst = max(worst, max(0.0, -float(np.linalg.eigvalsh(out)[0])))
    return worst < 1e-12, f"max defect {worst:.2e}"


def _check_classical_equivalence(rng) -> tuple[bool, str]:
    worst = 0.0
    for p, q in ((0.5, 0.5), (0.7, 0.5), (0.3, 0.8)):
        for topology in ("open", "ring"):
            params = classical_to_channel(StochasticMatrix2(p, q), xi=1.0)
            config = LatticeConfig(n_sites=8, topology=topology, params=params)
            receptor = ReceptorConfig.for_lattice(config)
            state = basis_state(8, 1)
            tracker = AbsorptionTracker(receptor, initial=state)
            run(config, state, 50, hooks=(tracker,))
            _, classical_record = run_classical(
                StochasticMatrix2(p, q), config, receptor, 50
            )
            worst = max(
                worst,
                float(np.max(np.abs(tracker.record.p_tot - classical_record.p_tot))),
            )
    return worst < 1e-12, f"max deviation {worst:.2e}"


def _check_trace_conservation(rng) -> tuple[bool, str]:
    params = classical_to_channel(StochasticMatrix2(0.7, 0.5), xi=0.1, phi1=math.pi)
    config = LatticeConfig(n_sites=32, topology="open", params=params)
    state = basis_state(32, 1)
    run(config, state, 200)
    drift = abs(state.trace() - 1.0)
    return drift < 1e-12, f"trace drift {drift:.2e}"


def _check_phase_sum(rng) -> tuple[bool, str]:
    delta = 0.8375
    records = []
    for phi1, phi2 in ((math.pi, 0.0), (math.pi + delta, -delta)):
        params = classical_to_channel(StochasticMatrix2(0.7, 0.5), xi=0.2, phi1=phi1, phi2=phi2)
        config = LatticeConfig(n_sites=16, topology="open", params=params)
        state = basis_state(16, 1)
        tracker = AbsorptionTracker(ReceptorConfig(site=16), initial=state)
        run(config, state, 60, hooks=(tracker,))
        records.append(tracker.record)
    gap = float(np.max(np.abs(records[0].p_tot - records[1].p_tot)))
    return gap < 1e-12, f"max series gap {gap:.2e}"


def _check_bookkeeping(rng) -> tuple[bool, str]:
    params = classical_to_channel(StochasticMatrix2(0.5, 0.5), xi=0.0, phi1=math.pi)
    config = LatticeConfig(n_sites=16, topology="open", params=params)
    state = basis_state(16, 1)
    tracker = AbsorptionTracker(ReceptorConfig(site=16), initial=state)
    run(config, state, 120, hooks=(tracker,))
    record = tracker.record
    record.validate()
    gap = float(np.max(np.abs(integrated_probability(record) - record.p_tot)))
    return gap < 1e-12, f"max recursion gap {gap:.2e}"


CHECKS = (
    ("embedding-identities", _check_embedding),
    ("channel-cptp", _check_channel_cptp),
    ("classical-equivalence", _check_classical_equivalence),
    ("trace-conservation", _check_trace_conservation),
    ("phase-sum-invariance", _check_phase_sum),
    ("absorption-bookkeeping", _check_bookkeeping),
)


def run_selfcheck(report=print) -> bool:
    """Run every check with the fixed seed; report one line per check."""
    rng = np.random.default_rng(SELFCHECK_SEED)
    all_ok = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateEmbeddingWarning)
        for name, check in CHECKS:
            ok, detail = check(rng)
            all_ok = all_ok and ok
            report(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    report(f"selfcheck {'passed' if all_ok else 'FAILED'} (seed {SELFCHECK_SEED})")
    return all_ok
