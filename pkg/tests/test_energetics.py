import numpy as np
import pytest

from toricbath.couplings import ModelParams, build_kernel, center_stabilizer, mu_at, uniform_pattern
from toricbath.energetics import (
    AnyonConfig,
    classify_phase,
    config_energy,
    delta_N,
    mf_energy,
    move_delta,
    solve_self_consistent,
)
from toricbath.geometry import SPECIES_P, SPECIES_S, build_code_lattice


@pytest.fixture(scope="module")
def setup_L8():
    lat = build_code_lattice(8)
    par = ModelParams(A=1.0, t=1.0, beta=1.0, L=8)
    pat = uniform_pattern(lat, 1.0)
    ker = build_kernel(lat, pat, par)
    return lat, par, pat, ker


class TestAnyonConfig:
    def test_rejects_odd_species_count(self):
        occ = np.zeros(32, dtype=np.uint8)
        occ[0] = 1
        with pytest.raises(ValueError):
            AnyonConfig(occ)

    def test_counts(self):
        occ = np.zeros(32, dtype=np.uint8)
        occ[[0, 3, 16, 17]] = 1
        cfg = AnyonConfig(occ)
        assert cfg.counts == (2, 2)

    def test_rejects_non_bits(self):
        with pytest.raises(ValueError):
            AnyonConfig(np.full(32, 2))


class TestConfigEnergy:
    def test_vacuum_zero(self, setup_L8):
        lat, par, pat, ker = setup_L8
        assert config_energy(np.zeros(lat.n_stabs), ker) == 0.0

    def test_single_anyon_costs_mu(self):
        lat = build_code_lattice(16)
        par = ModelParams(A=1.0, t=1.0, beta=1.0, L=16)
        ker = build_kernel(lat, uniform_pattern(lat, 1.0), par)
        c = center_stabilizer(lat)
        occ = np.zeros(lat.n_stabs)
        occ[c] = 1
        assert config_energy(occ, ker) == pytest.approx(ker.mu[c], rel=1e-12)

    def test_adjacent_pair_attraction(self, setup_L8):
        lat, par, pat, ker = setup_L8
        # nearest cross-species pair at r = sqrt(2)/2
        p1, p2 = 0, 64
        occ = np.zeros(lat.n_stabs)
        occ[[p1, p2]] = 1
        e = config_energy(occ, ker)
        expected = ker.mu[p1] + ker.mu[p2] + 8 * ker.pair_table[p1, p2]
        assert e == pytest.approx(expected, rel=1e-12)
        assert e < ker.mu[p1] + ker.mu[p2]

    def test_species_relabeling_symmetry(self, setup_L8):
        # inversion through the patch center maps the s sublattice onto the
        # p sublattice preserving every pairwise distance
        lat, par, pat, ker = setup_L8
        L, n = 8, 64

        def invert(idx):
            base, rem = (n, idx) if idx < n else (0, idx - n)
            i, j = rem % L, rem // L
            return base + (L - 1 - j) * L + (L - 1 - i)

        rng = np.random.default_rng(2)
        sites = [3, 9, n + 17, n + 40]
        occ = np.zeros(2 * n)
        occ[sites] = 1
        swapped = np.zeros(2 * n)
        swapped[[invert(s) for s in sites]] = 1
        assert config_energy(occ, ker) == pytest.approx(
            config_energy(swapped, ker), rel=1e-12)


class TestMoveDelta:
    def test_pair_creation_cost(self, setup_L8):
        lat, par, pat, ker = setup_L8
        occ = np.zeros(lat.n_stabs)
        spin = 20
        q1, q2 = lat.spin_stabs[spin, SPECIES_S]
        de = move_delta(occ, spin, SPECIES_S, lat, ker)
        assert de == pytest.approx(ker.mu[q1] + ker.mu[q2] + 8 * ker.pair_table[q1, q2])

    def test_pair_creation_near_delta0(self, setup_L8):
        # the mean-field constant uses the continuum kernel at unit distance
        lat, par, pat, ker = setup_L8
        occ = np.zeros(lat.n_stabs)
        spin = 20
        de = move_delta(occ, spin, SPECIES_S, lat, ker)
        c = center_stabilizer(lat)
        delta0 = 2 * mu_at(lat, pat, par, c) - par.A**2 / (4 * np.pi * par.t)
        assert de == pytest.approx(delta0, rel=0.15)

    def test_annihilation_reverses_creation(self, setup_L8):
        lat, par, pat, ker = setup_L8
        occ = np.zeros(lat.n_stabs)
        spin = 33
        de = move_delta(occ, spin, SPECIES_P, lat, ker)
        q1, q2 = lat.spin_stabs[spin, SPECIES_P]
        occ[[q1, q2]] = 1
        assert move_delta(occ, spin, SPECIES_P, lat, ker) == pytest.approx(-de, rel=1e-12)

    @pytest.mark.parametrize("species", [SPECIES_S, SPECIES_P])
    def test_matches_full_recomputation(self, setup_L8, species):
        lat, par, pat, ker = setup_L8
        rng = np.random.default_rng(42)
        for _ in range(25):
            flips_e = rng.random(lat.n_spins) < 0.06
            flips_m = rng.random(lat.n_spins) < 0.06
            from toricbath.geometry import anyon_occupation
            occ = anyon_occupation(lat, flips_e, flips_m).astype(float)
            spin = int(rng.integers(lat.n_spins))
            de = move_delta(occ, spin, species, lat, ker)
            occ2 = occ.copy()
            q1, q2 = lat.spin_stabs[spin, species]
            occ2[q1] = 1 - occ2[q1]
            occ2[q2] = 1 - occ2[q2]
            full = config_energy(occ2, ker) - config_energy(occ, ker)
            assert de == pytest.approx(full, rel=1e-9, abs=1e-12)

    def test_hop_bound(self, setup_L8):
        lat, par, pat, ker = setup_L8
        occ = np.zeros(lat.n_stabs)
        occ[[10, 11, 70, 71]] = 1
        spin = lat.step_spin[11, 0]
        de = move_delta(occ, spin, SPECIES_S, lat, ker)
        nmax = occ.sum()
        assert abs(de) <= 8 * np.abs(ker.pair_table).max() * nmax + abs(ker.mu).max() * 2


class TestMeanFieldForms:
    def test_delta_N_endpoints(self):
        assert delta_N(0, 3.0, 8) == 3.0
        assert delta_N((8 * 8 - 2) / 4, 3.0, 8) == pytest.approx(0.0, abs=1e-12)
        assert delta_N(1, 5.0, 8) == pytest.approx(5.0 * (1 - 4 / 62))

    def test_mf_energy_symmetry(self):
        L = 10
        for N in (0, 3, 11, 17, 25):
            assert mf_energy(N, 2.5, L) == pytest.approx(
                mf_energy(L * L / 2 - N, 2.5, L), rel=1e-12)

    def test_mf_energy_telescopes(self):
        L, d0 = 10, 1.7
        for N in range(21):
            tele = sum(delta_N(i, d0, L) for i in range(N))
            assert mf_energy(N, d0, L) == pytest.approx(tele, rel=1e-12, abs=1e-12)

    def test_mf_energy_zero_at_vacuum(self):
        assert mf_energy(0, 4.0, 12) == 0.0


class TestSelfConsistency:
    def test_subcritical_single_root(self):
        sol = solve_self_consistent(1.0)
        assert sol.roots == (0.5,)
        assert sol.stable == (True,)
        assert sol.regime == "subcritical"

    def test_supercritical_three_roots(self):
        sol = solve_self_consistent(4.0)
        assert len(sol.roots) == 3
        lo, mid, hi = sol.roots
        assert mid == 0.5
        assert lo == pytest.approx(1 - hi, abs=1e-9)
        assert sol.stable == (True, False, True)
        assert sol.regime == "supercritical"

    def test_deep_supercritical_bound(self):
        sol = solve_self_consistent(10.0)
        nstar = sol.roots[0]
        assert nstar < 2 * np.exp(-10.0)
        assert nstar == pytest.approx(4.54e-5, rel=0.01)

    def test_root_count_always_one_or_three(self):
        for bd in (0.5, 1.9, 2.1, 3.0, 6.0, 12.0):
            sol = solve_self_consistent(bd)
            assert len(sol.roots) in (1, 3)

    def test_nstar_monotone_and_bounded(self):
        prev = 0.5
        for bd in (4.0, 6.0, 10.0, 20.0):
            nstar = solve_self_consistent(bd).roots[0]
            assert nstar < prev
            if bd * np.exp(-bd) < np.log(2) / 4:
                assert nstar < 2 * np.exp(-bd)
            prev = nstar

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            solve_self_consistent(-1.0)
        with pytest.raises(ValueError):
            solve_self_consistent(2.0, tol=0.0)


class TestClassifyPhase:
    def test_threshold(self):
        assert classify_phase(1.999) == "subcritical"
        assert classify_phase(2.001) == "supercritical"
        assert classify_phase(2.0) == "critical"
        assert classify_phase(2.0 + 1e-12) == "critical"
