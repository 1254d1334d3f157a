"""Syndrome extraction, matching decoder, and logical-failure tests.

Decoding is an analysis tool layered on trajectories, not part of the
physical dynamics. Matching is exact (brute force over pairings) up to 10
anyons per species and greedy nearest-pair beyond; ties are broken
lexicographically by stabilizer index so trajectories stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    SPECIES_P,
    SPECIES_S,
    CodeLattice,
    stabilizer_parity,
    toroidal_displacement,
    toroidal_distance,
)

EXACT_MATCH_LIMIT = 10


@dataclass(frozen=True)
class Syndrome:
    """Occupied stabilizer indices per anyon species (global indexing)."""

    e: np.ndarray
    m: np.ndarray


@dataclass(frozen=True)
class Correction:
    """Spin flip sets, one boolean array over spins per species."""

    flips_e: np.ndarray
    flips_m: np.ndarray


def extract_syndrome(flips_e, flips_m, lattice: CodeLattice) -> Syndrome:
    """Stabilizers with an odd number of flipped incident spins, per species."""
    occ_e = stabilizer_parity(lattice, np.asarray(flips_e, dtype=bool), SPECIES_S)
    occ_m = stabilizer_parity(lattice, np.asarray(flips_m, dtype=bool), SPECIES_P)
    return Syndrome(e=np.nonzero(occ_e)[0], m=np.nonzero(occ_m)[0])


def syndrome_from_occupation(occ, lattice: CodeLattice) -> Syndrome:
    """Split a stabilizer occupation array into per-species index lists."""
    occ = np.asarray(occ)
    n = lattice.L * lattice.L
    idx = np.nonzero(occ)[0]
    return Syndrome(e=idx[idx < n], m=idx[idx >= n])


def _exact_match(indices, lattice):
    """First-found minimum over all pairings; first-found = lexicographic."""
    indices = tuple(int(i) for i in indices)
    if not indices:
        return 0.0, []
    a = indices[0]
    best_w, best_pairs = None, None
    for k in range(1, len(indices)):
        b = indices[k]
        rest = indices[1:k] + indices[k + 1:]
        w, pairs = _exact_match(rest, lattice)
        w += float(toroidal_distance(a, b, lattice))
        if best_w is None or w < best_w:
            best_w, best_pairs = w, [(a, b)] + pairs
    return best_w, best_pairs


def _greedy_match(indices, lattice):
    remaining = sorted(int(i) for i in indices)
    pairs = []
    while remaining:
        best = None
        for i, a in enumerate(remaining):
            for b in remaining[i + 1:]:
                d = float(toroidal_distance(a, b, lattice))
                if best is None or d < best[0]:
                    best = (d, a, b)
        _, a, b = best
        pairs.append((a, b))
        remaining.remove(a)
        remaining.remove(b)
    return pairs


def match_anyons(indices, lattice: CodeLattice):
    """Pair up same-species anyons minimizing total toroidal path length.

    Exact for up to EXACT_MATCH_LIMIT anyons, greedy nearest-pair beyond
    (documented approximation for the dense regime).
    """
    indices = sorted(int(i) for i in indices)
    if len(indices) % 2:
        raise ValueError("odd anyon count cannot be matched on the torus")
    if not indices:
        return []
    if len(indices) <= EXACT_MATCH_LIMIT:
        return _exact_match(indices, lattice)[1]
    return _greedy_match(indices, lattice)


def path_flips(a: int, b: int, lattice: CodeLattice) -> np.ndarray:
    """Spins flipped moving an anyon from stabilizer a to b.

    L-shaped path: first coordinate, then second, each along the shortest
    toroidal displacement. Both stabilizers must share a species.
    """
    if lattice.stab_species[a] != lattice.stab_species[b]:
        raise ValueError("anyons of different species cannot be paired")
    d = toroidal_displacement(a, b, lattice)
    dx, dy = int(round(d[0])), int(round(d[1]))
    flips = np.zeros(lattice.n_spins, dtype=bool)
    cur = int(a)
    for step, count in ((0 if dx > 0 else 1, abs(dx)), (2 if dy > 0 else 3, abs(dy))):
        for _ in range(count):
            flips[lattice.step_spin[cur, step]] ^= True
            cur = int(lattice.step_dest[cur, step])
    assert cur == b
    return flips


def decode(syndrome: Syndrome, lattice: CodeLattice) -> Correction:
    """Matching correction whose application empties the syndrome."""
    out = []
    for indices in (syndrome.e, syndrome.m):
        if len(indices) % 2:
            raise ValueError("odd syndrome cardinality; invariant breach upstream")
        flips = np.zeros(lattice.n_spins, dtype=bool)
        for a, b in match_anyons(indices, lattice):
            flips ^= path_flips(a, b, lattice)
        out.append(flips)
    return Correction(flips_e=out[0], flips_m=out[1])


def is_logical_failure(error_e, error_m, correction: Correction,
                       lattice: CodeLattice) -> dict:
    """Winding parity of error + correction against each logical class.

    The combined flip set must have an empty syndrome; the parity of its
    overlap with the transverse opposite-species representative detects a
    winding cycle in each (species, direction) class.
    """
    comb_e = np.asarray(error_e, dtype=bool) ^ correction.flips_e
    comb_m = np.asarray(error_m, dtype=bool) ^ correction.flips_m
    if stabilizer_parity(lattice, comb_e, SPECIES_S).any():
        raise ValueError("residual e syndrome nonempty; not a correction")
    if stabilizer_parity(lattice, comb_m, SPECIES_P).any():
        raise ValueError("residual m syndrome nonempty; not a correction")
    reps = lattice.logical_reps
    return {
        ("e", "x"): bool(comb_e[reps[("m", "y")]].sum() % 2),
        ("e", "y"): bool(comb_e[reps[("m", "x")]].sum() % 2),
        ("m", "x"): bool(comb_m[reps[("e", "y")]].sum() % 2),
        ("m", "y"): bool(comb_m[reps[("e", "x")]].sum() % 2),
    }


def decode_and_check(error_e, error_m, lattice: CodeLattice) -> dict:
    """Full pipeline: syndrome, matching, correction, failure verdict."""
    syn = extract_syndrome(error_e, error_m, lattice)
    corr = decode(syn, lattice)
    return is_logical_failure(error_e, error_m, corr, lattice)


def make_failure_hook(lattice: CodeLattice):
    """Decoder hook for lifetime runs: error sets -> (failed, classes)."""

    def hook(error_e, error_m):
        classes = decode_and_check(error_e, error_m, lattice)
        return any(classes.values()), classes

    return hook
