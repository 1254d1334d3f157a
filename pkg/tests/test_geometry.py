import json

import numpy as np
import pytest

from toricbath.geometry import (
    SPECIES_P,
    SPECIES_S,
    CodeLattice,
    LatticeSizeError,
    anyon_occupation,
    build_code_lattice,
    lattice_to_json,
    planar_distance,
    stabilizer_parity,
    toroidal_distance,
    toroidal_displacement,
)


def test_counts_smallest_lattice():
    lat = build_code_lattice(2)
    assert lat.n_stabs == 8
    assert lat.n_spins == 8
    # every spin belongs to exactly 2 stabilizers of each species
    counts = np.zeros((lat.n_spins, 2), dtype=int)
    for q in range(lat.n_stabs):
        for sp in lat.stab_spins[q]:
            counts[sp, lat.stab_species[q]] += 1
    assert (counts == 2).all()


@pytest.mark.parametrize("L", [2, 4, 6, 8])
def test_incidence_invariants(L):
    lat = build_code_lattice(L)
    assert lat.stab_spins.shape == (2 * L * L, 4)
    # stab_spins rows contain 4 distinct spins
    for q in range(lat.n_stabs):
        assert len(set(lat.stab_spins[q])) == 4
    # spin_stabs is the exact inverse of stab_spins
    for sigma in range(lat.n_spins):
        for species in (SPECIES_S, SPECIES_P):
            for q in lat.spin_stabs[sigma, species]:
                assert lat.stab_species[q] == species
                assert sigma in lat.stab_spins[q]
    # stabilizer product relation: each species covers every spin twice
    for species in (SPECIES_S, SPECIES_P):
        rows = lat.stab_spins[lat.stab_species == species]
        hist = np.bincount(rows.ravel(), minlength=lat.n_spins)
        assert (hist == 2).all()


def test_positions_convention():
    lat = build_code_lattice(4)
    n = 16
    s_pos = lat.stab_pos[:n]
    p_pos = lat.stab_pos[n:]
    assert np.array_equal(s_pos, np.floor(s_pos))
    assert np.allclose(p_pos - np.floor(p_pos), 0.5)
    # spins on edge midpoints: exactly one half-integer coordinate
    frac = lat.spin_pos - np.floor(lat.spin_pos)
    assert np.allclose(frac.sum(axis=1), 0.5)


def test_reject_bad_sizes():
    for L in (0, -2, 3, 7):
        with pytest.raises(LatticeSizeError):
            build_code_lattice(L)


@pytest.mark.parametrize("L", [4, 16])
def test_logical_reps_weight_and_trivial_syndrome(L):
    lat = build_code_lattice(L)
    assert len(lat.logical_reps) == 4
    for (species, _), rep in lat.logical_reps.items():
        assert rep.size == L
        flips = np.zeros(lat.n_spins, dtype=bool)
        flips[rep] = True
        tgt = SPECIES_S if species == "e" else SPECIES_P
        assert stabilizer_parity(lat, flips, tgt).sum() == 0


def test_single_flip_creates_one_pair_per_species():
    lat = build_code_lattice(6)
    rng = np.random.default_rng(7)
    for sigma in rng.integers(0, lat.n_spins, size=12):
        flips = np.zeros(lat.n_spins, dtype=bool)
        flips[sigma] = True
        occ = anyon_occupation(lat, flips, flips)
        assert occ[: 36].sum() == 2
        assert occ[36:].sum() == 2
        assert set(np.nonzero(occ)[0]) == set(lat.spin_stabs[sigma].ravel())


@pytest.mark.parametrize("L", [2, 4, 8])
def test_step_tables_move_one_anyon(L):
    lat = build_code_lattice(L)
    rng = np.random.default_rng(3)
    for q in rng.integers(0, lat.n_stabs, size=16):
        species = int(lat.stab_species[q])
        for d in range(4):
            flips = np.zeros(lat.n_spins, dtype=bool)
            flips[lat.step_spin[q, d]] = True
            occ = stabilizer_parity(lat, flips, species)
            toggled = set(np.nonzero(occ)[0])
            assert toggled == {q, lat.step_dest[q, d]}
            # opposite species untouched
            assert stabilizer_parity(lat, flips, 1 - species)[q] in (0, 1)


def test_planar_distance_examples():
    lat = build_code_lattice(8)
    assert planar_distance(0, 0, lat) == 0.0
    # s(0,0) to s(3,4): 3-4-5 triangle
    a = 0
    b = 4 * 8 + 3
    assert planar_distance(a, b, lat) == pytest.approx(5.0)
    # s(0,0) to p(0,0) at (1/2, 1/2)
    assert planar_distance(0, 64, lat) == pytest.approx(np.sqrt(2) / 2)


def test_planar_triangle_inequality():
    lat = build_code_lattice(6)
    rng = np.random.default_rng(11)
    trip = rng.integers(0, lat.n_stabs, size=(200, 3))
    dab = planar_distance(trip[:, 0], trip[:, 1], lat)
    dbc = planar_distance(trip[:, 1], trip[:, 2], lat)
    dac = planar_distance(trip[:, 0], trip[:, 2], lat)
    assert (dac <= dab + dbc + 1e-12).all()


def test_toroidal_distance_examples():
    lat = build_code_lattice(8)
    a = 0            # s(0,0)
    b = 7            # s(7,0)
    assert toroidal_distance(a, b, lat) == pytest.approx(1.0)
    c = 4            # s(4,0)
    assert toroidal_distance(a, c, lat) == pytest.approx(4.0)


def test_toroidal_distance_matches_image_enumeration():
    lat = build_code_lattice(6)
    rng = np.random.default_rng(5)
    pairs = rng.integers(0, lat.n_stabs, size=(100, 2))
    for a, b in pairs:
        pa, pb = lat.stab_pos[a], lat.stab_pos[b]
        best = np.inf
        for sx in (-1, 0, 1):
            for sy in (-1, 0, 1):
                img = pb + 6 * np.array([sx, sy])
                best = min(best, float(np.hypot(*(img - pa))))
        assert toroidal_distance(a, b, lat) == pytest.approx(best)


def test_toroidal_displacement_is_minimal_image():
    lat = build_code_lattice(8)
    rng = np.random.default_rng(9)
    for a, b in rng.integers(0, lat.n_stabs, size=(50, 2)):
        d = toroidal_displacement(a, b, lat)
        assert np.hypot(*d) == pytest.approx(float(toroidal_distance(a, b, lat)))
        assert (np.abs(d) <= 4 + 1e-12).all()


def test_json_export_roundtrip():
    lat = build_code_lattice(4)
    payload = json.loads(lattice_to_json(lat))
    assert payload["L"] == 4
    assert len(payload["stab_spins"]) == 32
    assert sorted(payload["logical_reps"]) == ["e_x", "e_y", "m_x", "m_y"]
    for rep in payload["logical_reps"].values():
        assert len(rep) == 4


def test_lattice_arrays_read_only():
    lat = build_code_lattice(4)
    with pytest.raises(ValueError):
        lat.stab_spins[0, 0] = 99
