import math

import numpy as np
import pytest

from qcatransfer import (
    DiagState2,
    PairIndex,
    SectorState,
    StochasticMatrix2,
    UnitaryParams,
    amp_damp_kraus,
    apply_kraus,
    basis_state,
    build_unitary,
    classical_to_channel,
    pair_damp,
    pair_dephase,
    pair_unitary,
    stochastic_apply,
)
from conftest import random_sector_state


def embed_pair(n, a, b, block):
    """Full n x n matrix acting as ``block`` on sites (a, b) and identity elsewhere."""
    full = np.eye(n, dtype=complex)
    i, j = a - 1, b - 1
    full[i, i], full[i, j] = block[0, 0], block[0, 1]
    full[j, i], full[j, j] = block[1, 0], block[1, 1]
    return full


class TestBasisState:
    def test_matrix_layout(self):
        s = basis_state(4, 1)
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        assert np.array_equal(s.rho, expected)

    @pytest.mark.parametrize("n,site", [(2, 1), (5, 3), (8, 8)])
    def test_unit_trace_and_diagonal(self, n, site):
        s = basis_state(n, site)
        assert s.trace() == 1.0
        assert np.max(np.abs(s.rho - np.diag(s.rho.diagonal()))) == 0.0

    def test_rejects_out_of_range(self):
        with pytest.raises(IndexError):
            basis_state(4, 5)
        with pytest.raises(IndexError):
            basis_state(4, 0)


class TestPairIndex:
    def test_rejects_equal_sites(self):
        with pytest.raises(ValueError):
            PairIndex(2, 2)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            PairIndex(0, 1)


class TestPairUnitary:
    def test_three_site_example(self):
        # |1> under a quarter rotation on pair (1, 2); oracle: direct 3x3 product
        s = basis_state(3, 1)
        u = UnitaryParams(math.pi / 4)
        pair_unitary(s, PairIndex(1, 2), u)
        full = embed_pair(3, 1, 2, build_unitary(u))
        expected = full @ basis_state(3, 1).rho @ full.conj().T
        assert np.max(np.abs(s.rho - expected)) < 1e-15
        assert np.allclose(s.populations(), [0.5, 0.5, 0.0])
        assert s.rho[0, 1] == pytest.approx(-0.5, abs=1e-15)

    def test_zero_angle_keeps_populations(self, rng):
        s = random_sector_state(5, rng)
        before = s.populations()
        pair_unitary(s, PairIndex(2, 3), UnitaryParams(0.0, 1.3, 0.4))
        assert np.allclose(s.populations(), before, atol=1e-14)

    def test_matches_full_conjugation_oracle(self, rng):
        u = UnitaryParams(1.1, 0.7, 2.9)
        for a, b in ((1, 2), (3, 4), (6, 1)):
            s = random_sector_state(6, rng)
            expected = embed_pair(6, a, b, build_unitary(u)) @ s.rho @ embed_pair(6, a, b, build_unitary(u)).conj().T
            pair_unitary(s, PairIndex(a, b), u)
            assert np.max(np.abs(s.rho - expected)) < 1e-13

    def test_preserves_trace(self, rng):
        for _ in range(20):
            s = random_sector_state(7, rng)
            before = s.trace()
            pair_unitary(s, PairIndex(4, 5), UnitaryParams(0.9, 0.2, 5.1))
            assert abs(s.trace() - before) < 1e-12


class TestPairDephase:
    def test_complete_dephasing_block_rule(self, rng):
        s = random_sector_state(5, rng)
        pair_dephase(s, PairIndex(2, 3), 1.0)
        rho = s.rho
        assert rho[1, 2] == 0.0 and rho[2, 1] == 0.0
        for m in (0, 3, 4):
            assert rho[1, m] == 0.0 and rho[m, 1] == 0.0
            assert rho[2, m] == 0.0 and rho[m, 2] == 0.0

    def test_zero_strength_is_identity(self, rng):
        s = random_sector_state(5, rng)
        before = s.rho.copy()
        pair_dephase(s, PairIndex(2, 3), 0.0)
        assert np.array_equal(s.rho, before)

    def test_partial_strength_factors(self, rng):
        # xi = 0.75: in-pair coherence x 0.25, pair-rest x 0.5, rest untouched
        s = random_sector_state(5, rng)
        before = s.rho.copy()
        pair_dephase(s, PairIndex(2, 3), 0.75)
        rho = s.rho
        assert rho[1, 2] == pytest.approx(before[1, 2] * 0.25, abs=1e-15)
        assert rho[1, 0] == pytest.approx(before[1, 0] * 0.5, abs=1e-15)
        assert rho[4, 2] == pytest.approx(before[4, 2] * 0.5, abs=1e-15)
        assert rho[0, 4] == before[0, 4]
        assert np.allclose(rho.diagonal(), before.diagonal())

    def test_matches_elementwise_mask_oracle(self, rng):
        for xi in (0.2, 0.6, 1.0):
            s = random_sector_state(6, rng)
            f = math.sqrt(1.0 - xi)
            g = np.ones(6)
            g[[2, 3]] = f
            mask = np.outer(g, g)
            np.fill_diagonal(mask, 1.0)
            expected = s.rho * mask
            pair_dephase(s, PairIndex(3, 4), xi)
            assert np.max(np.abs(s.rho - expected)) < 1e-15

    def test_pair_block_matches_two_dimensional_channel(self, rng):
        from qcatransfer import dephase_2d

        s = random_sector_state(4, rng)
        block = s.rho[np.ix_([1, 2], [1, 2])].copy()
        pair_dephase(s, PairIndex(2, 3), 0.35)
        assert np.max(np.abs(s.rho[np.ix_([1, 2], [1, 2])] - dephase_2d(block, 0.35))) < 1e-15

    def test_rejects_bad_strength(self, rng):
        with pytest.raises(ValueError):
            pair_dephase(random_sector_state(4, rng), PairIndex(1, 2), 1.5)


class TestPairDamp:
    def test_full_damping_collects_pair_population(self):
        rho = np.diag([0.2, 0.8, 0.0]).astype(complex)
        s = SectorState(rho)
        pair_damp(s, PairIndex(1, 2), 1.0)
        assert np.allclose(s.populations(), [1.0, 0.0, 0.0])

    def test_zero_strength_is_identity(self, rng):
        s = random_sector_state(5, rng)
        before = s.rho.copy()
        pair_damp(s, PairIndex(2, 3), 0.0)
        assert np.array_equal(s.rho, before)

    def test_swapped_direction(self):
        rho = np.diag([0.2, 0.8, 0.0]).astype(complex)
        s = SectorState(rho)
        pair_damp(s, PairIndex(1, 2), -1.0)
        assert np.allclose(s.populations(), [0.0, 1.0, 0.0])

    def test_matches_embedded_kraus_oracle(self, rng):
        # oracle: the pair Kraus set padded with identity / zero on the rest
        for eta in (0.45, -0.7, 1.0):
            s = random_sector_state(6, rng)
            l0, l1 = amp_damp_kraus(eta)
            k0 = embed_pair(6, 2, 3, l0)
            k1 = np.zeros((6, 6), dtype=complex)
            k1[np.ix_([1, 2], [1, 2])] = l1
            expected = apply_kraus([k0, k1], s.rho)
            pair_damp(s, PairIndex(2, 3), eta)
            assert np.max(np.abs(s.rho - expected)) < 1e-14

    def test_block_rule_entries(self, rng):
        s = random_sector_state(5, rng)
        before = s.rho.copy()
        eta = 0.36
        r = math.sqrt(1 - eta)
        pair_damp(s, PairIndex(2, 3), eta)
        rho = s.rho
        assert rho[1, 1] == pytest.approx(before[1, 1] + eta * before[2, 2], abs=1e-14)
        assert rho[2, 2] == pytest.approx(before[2, 2] * (1 - eta), abs=1e-14)
        assert rho[1, 2] == pytest.approx(before[1, 2] * r, abs=1e-14)
        assert rho[2, 4] == pytest.approx(before[2, 4] * r, abs=1e-14)
        assert rho[1, 4] == before[1, 4]
        assert rho[0, 4] == before[0, 4]

    def test_preserves_trace(self, rng):
        for eta in (-0.9, -0.3, 0.5, 1.0):
            s = random_sector_state(7, rng)
            before = s.trace()
            pair_damp(s, PairIndex(3, 4), eta)
            assert abs(s.trace() - before) < 1e-12


class TestInvariants:
    def test_all_ops_preserve_trace_and_psd(self, rng):
        for _ in range(20):
            s = random_sector_state(6, rng)
            before = s.trace()
            pair_unitary(s, PairIndex(2, 3), UnitaryParams(0.8, 0.1, 0.2))
            pair_dephase(s, PairIndex(4, 5), 0.6)
            pair_damp(s, PairIndex(5, 6), -0.4)
            assert abs(s.trace() - before) < 1e-12
            assert s.min_eigenvalue() > -1e-10
            assert s.hermiticity_defect() < 1e-12

    def test_diagonal_stays_diagonal_under_noise_ops(self, rng):
        diag = rng.random(5)
        diag /= diag.sum()
        s = SectorState(np.diag(diag).astype(complex))
        pair_dephase(s, PairIndex(2, 3), 0.7)
        pair_damp(s, PairIndex(3, 4), 0.5)
        assert np.max(np.abs(s.rho - np.diag(s.rho.diagonal()))) == 0.0

    def test_pair_composite_equals_stochastic_on_diagonals(self, rng):
        # unitary -> complete dephasing -> damping restricted to one pair acts
        # as the stochastic matrix on the two populations, brute forced at N=3
        for _ in range(1000):
            p, q = rng.random(2)
            t = StochasticMatrix2(p, q)
            params = classical_to_channel(t, xi=1.0)
            diag = rng.random(3)
            s = SectorState(np.diag(diag).astype(complex))
            pair_unitary(s, PairIndex(1, 2), params.unitary)
            pair_dephase(s, PairIndex(1, 2), 1.0)
            pair_damp(s, PairIndex(1, 2), params.eta)
            pops = s.populations()
            expected = t.matrix() @ diag[:2]
            assert np.max(np.abs(pops[:2] - expected)) < 1e-12
            assert pops[2] == diag[2]
            # normalised form: the excitation probability within the pair
            weight = diag[0] + diag[1]
            m_next = stochastic_apply(t, DiagState2(diag[0] / weight)).m
            assert pops[0] == pytest.approx(weight * m_next, abs=1e-12)


class TestSectorStateUtilities:
    def test_check_flags_nonhermitian(self):
        rho = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            SectorState(rho).check()

    def test_check_psd_flag(self):
        rho = np.array([[0.6, 0.59], [0.59, 0.4]], dtype=complex)
        state = SectorState(rho)
        state.check()  # hermitian and unit trace
        with pytest.raises(ValueError, match="PSD"):
            state.check(psd=True)

    def test_dump_csv_round_trip(self, rng, tmp_path):
        s = random_sector_state(4, rng)
        path = tmp_path / "state.csv"
        s.dump_csv(path)
        rows = []
        for line in path.read_text().splitlines():
            values = [float(tok) for tok in line.split(",")]
            rows.append([complex(re, im) for re, im in zip(values[::2], values[1::2])])
        assert np.array_equal(np.array(rows), s.rho)
