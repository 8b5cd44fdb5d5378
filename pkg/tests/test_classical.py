import numpy as np
import pytest

from qcatransfer import (
    AbsorptionTracker,
    Automaton,
    ClassicalState,
    LatticeConfig,
    ReceptorConfig,
    StochasticMatrix2,
    basis_state,
    classical_measure,
    classical_step,
    classical_to_channel,
    point_mass,
    run,
    run_classical,
    schedule,
)


def lattice(n, topology="open", p=0.5, q=0.5):
    params = classical_to_channel(StochasticMatrix2(p, q), xi=1.0)
    return LatticeConfig(n_sites=n, topology=topology, params=params)


class TestClassicalStep:
    def test_two_site_split(self):
        state = point_mass(2, 1)
        classical_step(state, lattice(2), StochasticMatrix2(0.5, 0.5))
        assert np.allclose(state.probs, [0.5, 0.5], atol=1e-15)

    def test_identity_matrix_is_noop(self, rng):
        probs = rng.random(6)
        probs /= probs.sum()
        state = ClassicalState(probs)
        classical_step(state, lattice(6), StochasticMatrix2(0.0, 0.0))
        assert np.array_equal(state.probs, probs)

    def test_four_site_hand_computed(self):
        # pass one {(2,3)} sees no probability; pass two applies the pair
        # matrix on (1,2) and (3,4): (1,0,0,0) -> (0.3, 0.7, 0, 0)
        state = point_mass(4, 1)
        classical_step(state, lattice(4), StochasticMatrix2(0.7, 0.5))
        assert np.allclose(state.probs, [0.3, 0.7, 0.0, 0.0], atol=1e-15)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            classical_step(point_mass(4, 1), lattice(6), StochasticMatrix2(0.5, 0.5))


class TestClassicalMeasure:
    def test_absorbs_receptor_weight(self):
        state = ClassicalState(np.array([0.25, 0.5, 0.25]))
        weight, out = classical_measure(state, 1)
        assert weight == 0.25
        assert out.total() == pytest.approx(0.75, abs=1e-15)
        assert out.probs[0] == 0.0

    def test_noop_on_empty_site(self):
        state = point_mass(3, 1)
        weight, out = classical_measure(state, 3)
        assert weight == 0.0
        assert out.total() == 1.0


class TestConservation:
    def test_probability_conserved_without_measurement(self, rng):
        probs = rng.random(10)
        probs /= probs.sum()
        state = ClassicalState(probs)
        cfg = lattice(10, p=0.65, q=0.3)
        t = StochasticMatrix2(0.65, 0.3)
        previous = state.total()
        worst_step_drift = 0.0
        for _ in range(200):
            classical_step(state, cfg, t)
            current = state.total()
            worst_step_drift = max(worst_step_drift, abs(current - previous))
            previous = current
        assert worst_step_drift < 1e-15
        assert abs(state.total() - 1.0) < 1e-13
        state.validate()


class TestCrossModuleEquivalence:
    @pytest.mark.parametrize("n,topology", [(8, "ring"), (9, "open")])
    def test_record_matches_dephased_automaton(self, n, topology):
        t = StochasticMatrix2(0.7, 0.5)
        cfg = LatticeConfig(n, topology, classical_to_channel(t, xi=1.0))
        receptor = ReceptorConfig.for_lattice(cfg)
        state = basis_state(n, 1)
        tracker = AbsorptionTracker(receptor, initial=state)
        run(cfg, state, 60, hooks=(tracker,))
        final, record = run_classical(t, cfg, receptor, 60)
        assert len(record) == len(tracker.record)
        assert np.max(np.abs(record.p_tot - tracker.record.p_tot)) < 1e-12
        assert np.max(np.abs(record.rho_rr - tracker.record.rho_rr)) < 1e-12
        assert np.max(np.abs(final.probs - state.populations())) < 1e-12

    @pytest.mark.parametrize(
        "period,granularity", [(2, "per_step"), (1, "per_pass"), (3, "per_pass")]
    )
    def test_nondefault_cadences_stay_equivalent(self, period, granularity):
        t = StochasticMatrix2(0.6, 0.4)
        cfg = LatticeConfig(8, "open", classical_to_channel(t, xi=1.0))
        receptor = ReceptorConfig(site=8, period=period, granularity=granularity)
        state = basis_state(8, 1)
        tracker = AbsorptionTracker(receptor, initial=state)
        run(cfg, state, 50, hooks=(tracker,))
        _, record = run_classical(t, cfg, receptor, 50)
        assert np.array_equal(record.step, tracker.record.step)
        assert np.max(np.abs(record.p_tot - tracker.record.p_tot)) < 1e-12

    def test_total_absorbed_is_one_minus_survivors(self):
        t = StochasticMatrix2(0.5, 0.5)
        cfg = lattice(8)
        receptor = ReceptorConfig.for_lattice(cfg)
        final, record = run_classical(t, cfg, receptor, 100)
        assert record.p_tot[-1] == pytest.approx(1.0 - final.total(), abs=1e-12)
        record.validate()


class TestClassicalState:
    def test_validate_rejects_negative_entries(self):
        state = ClassicalState(np.array([0.5, -0.1, 0.6]))
        with pytest.raises(ValueError):
            state.validate()

    def test_point_mass_bounds(self):
        with pytest.raises(IndexError):
            point_mass(4, 5)

    def test_schedule_is_shared_with_quantum_automaton(self):
        # the classical pass arrays come from the same schedule object
        cfg = lattice(8, topology="ring")
        sched = schedule(cfg)
        quantum = Automaton(cfg)
        assert quantum.schedule == sched
