"""Toric-code lattice geometry on a torus.

Spins sit on the edges of an L x L periodic square lattice. Stabilizers come
in two species: s-type on the vertices (integer coordinates) and p-type on the
faces (half-integer coordinates), so each unit cell carries one of each and
the areal stabilizer density is 2. Anyons of species e live on s-stabilizers,
species m on p-stabilizers.

Index conventions (i fastest, j*L + i):
  horizontal spin h(i,j) -> j*L + i          at (i + 1/2, j)
  vertical spin   v(i,j) -> L^2 + j*L + i    at (i, j + 1/2)
  s-stabilizer    s(i,j) -> j*L + i          at (i, j)
  p-stabilizer    p(i,j) -> L^2 + j*L + i    at (i + 1/2, j + 1/2)
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

SPECIES_S = 0
SPECIES_P = 1
SPECIES_NAMES = ("s", "p")
ANYON_NAMES = ("e", "m")
DIRECTIONS = ("+x", "-x", "+y", "-y")


class LatticeSizeError(ValueError):
    """Raised for lattice sizes the construction cannot tile."""


@dataclass(frozen=True)
class CodeLattice:
    """Immutable incidence and position data for one toric code.

    Arrays are read-only views; the lattice can be shared freely across
    workers.

    spin_pos     (2L^2, 2) spin positions in lattice constants
    stab_pos     (2L^2, 2) stabilizer positions
    stab_species (2L^2,)   0 for s, 1 for p
    stab_spins   (2L^2, 4) incident spin indices per stabilizer
    spin_stabs   (2L^2, 2, 2) for each spin the two stabilizers of each
                 species it belongs to, indexed [spin, species, :]
    step_spin    (2L^2, 4) spin flipped when an anyon on that stabilizer
                 hops in direction (+x, -x, +y, -y)
    step_dest    (2L^2, 4) destination stabilizer for the same hop
    logical_reps dict keyed by (anyon species, direction), each a length-L
                 spin-index array forming a winding cycle
    """

    L: int
    spin_pos: np.ndarray
    stab_pos: np.ndarray
    stab_species: np.ndarray
    stab_spins: np.ndarray
    spin_stabs: np.ndarray
    step_spin: np.ndarray
    step_dest: np.ndarray
    logical_reps: dict

    @property
    def n_spins(self) -> int:
        return 2 * self.L * self.L

    @property
    def n_stabs(self) -> int:
        return 2 * self.L * self.L

    def species_indices(self, species: int) -> np.ndarray:
        n = self.L * self.L
        return np.arange(n) if species == SPECIES_S else np.arange(n, 2 * n)


@dataclass(frozen=True)
class BathLattice:
    """Cubic boson lattice of Lambda^3 sites enclosing the code patch.

    The embedding sends a stabilizer at (x, y) to the 3D point
    (x + off, y + off, z0) in the cube's central site plane. The offset is
    the integer (Lambda - L) // 2 so that s-stabilizers land exactly on bath
    sites (the density oracle needs that alignment); mode sums depend only on
    separations, so the half-site of extra centering slack is immaterial.
    """

    Lambda: int
    L: int

    def __post_init__(self):
        if self.Lambda <= self.L:
            raise LatticeSizeError(
                f"bath must enclose the code patch, need Lambda > L "
                f"(got Lambda={self.Lambda}, L={self.L})")

    @property
    def offset(self) -> np.ndarray:
        off = (self.Lambda - self.L) // 2
        return np.array([off, off, self.Lambda // 2], dtype=float)

    def embed(self, pos2d: np.ndarray) -> np.ndarray:
        """Map (..., 2) stabilizer positions to (..., 3) bath coordinates."""
        pos2d = np.asarray(pos2d, dtype=float)
        out = np.concatenate([pos2d, np.zeros(pos2d.shape[:-1] + (1,))], axis=-1)
        return out + self.offset


def build_code_lattice(L: int) -> CodeLattice:
    """Construct the periodic code lattice for even L >= 2."""
    if not isinstance(L, (int, np.integer)) or L < 2 or L % 2 != 0:
        raise LatticeSizeError(f"L must be a positive even integer >= 2, got {L!r}")
    L = int(L)
    n = L * L
    idx = np.arange(n)
    gi = idx % L
    gj = idx // L

    def h(i, j):
        return (j % L) * L + (i % L)

    def v(i, j):
        return n + (j % L) * L + (i % L)

    def s(i, j):
        return (j % L) * L + (i % L)

    def p(i, j):
        return n + (j % L) * L + (i % L)

    spin_pos = np.empty((2 * n, 2))
    spin_pos[:n, 0] = gi + 0.5
    spin_pos[:n, 1] = gj
    spin_pos[n:, 0] = gi
    spin_pos[n:, 1] = gj + 0.5

    stab_pos = np.empty((2 * n, 2))
    stab_pos[:n, 0] = gi
    stab_pos[:n, 1] = gj
    stab_pos[n:, 0] = gi + 0.5
    stab_pos[n:, 1] = gj + 0.5

    stab_species = np.empty(2 * n, dtype=np.uint8)
    stab_species[:n] = SPECIES_S
    stab_species[n:] = SPECIES_P

    stab_spins = np.empty((2 * n, 4), dtype=np.int64)
    stab_spins[:n] = np.stack([h(gi, gj), h(gi - 1, gj), v(gi, gj), v(gi, gj - 1)], axis=1)
    stab_spins[n:] = np.stack([h(gi, gj), h(gi, gj + 1), v(gi, gj), v(gi + 1, gj)], axis=1)

    spin_stabs = np.empty((2 * n, 2, 2), dtype=np.int64)
    spin_stabs[:n, SPECIES_S, 0] = s(gi, gj)
    spin_stabs[:n, SPECIES_S, 1] = s(gi + 1, gj)
    spin_stabs[:n, SPECIES_P, 0] = p(gi, gj)
    spin_stabs[:n, SPECIES_P, 1] = p(gi, gj - 1)
    spin_stabs[n:, SPECIES_S, 0] = s(gi, gj)
    spin_stabs[n:, SPECIES_S, 1] = s(gi, gj + 1)
    spin_stabs[n:, SPECIES_P, 0] = p(gi, gj)
    spin_stabs[n:, SPECIES_P, 1] = p(gi - 1, gj)

    # hop order: +x, -x, +y, -y
    step_spin = np.empty((2 * n, 4), dtype=np.int64)
    step_spin[:n] = np.stack([h(gi, gj), h(gi - 1, gj), v(gi, gj), v(gi, gj - 1)], axis=1)
    step_spin[n:] = np.stack([v(gi + 1, gj), v(gi, gj), h(gi, gj + 1), h(gi, gj)], axis=1)

    step_dest = np.empty((2 * n, 4), dtype=np.int64)
    step_dest[:n] = np.stack([s(gi + 1, gj), s(gi - 1, gj), s(gi, gj + 1), s(gi, gj - 1)], axis=1)
    step_dest[n:] = np.stack([p(gi + 1, gj), p(gi - 1, gj), p(gi, gj + 1), p(gi, gj - 1)], axis=1)

    logical_reps = {
        ("e", "x"): np.array([h(i, 0) for i in range(L)], dtype=np.int64),
        ("e", "y"): np.array([v(0, j) for j in range(L)], dtype=np.int64),
        ("m", "x"): np.array([v(i, 0) for i in range(L)], dtype=np.int64),
        ("m", "y"): np.array([h(0, j) for j in range(L)], dtype=np.int64),
    }

    for arr in (spin_pos, stab_pos, stab_species, stab_spins, spin_stabs,
                step_spin, step_dest, *logical_reps.values()):
        arr.setflags(write=False)

    return CodeLattice(L=L, spin_pos=spin_pos, stab_pos=stab_pos,
                       stab_species=stab_species, stab_spins=stab_spins,
                       spin_stabs=spin_stabs, step_spin=step_spin,
                       step_dest=step_dest, logical_reps=logical_reps)


def planar_distance(a, b, lattice: CodeLattice):
    """Euclidean distance between stabilizers a and b in the flat plane.

    The mediated interaction uses this open-plane metric even though the
    code itself is periodic; the decoder uses toroidal_distance instead.
    """
    d = lattice.stab_pos[a] - lattice.stab_pos[b]
    return np.hypot(d[..., 0], d[..., 1])


def toroidal_distance(a, b, lattice: CodeLattice):
    """Minimum-image Euclidean distance on the L-periodic torus."""
    L = lattice.L
    d = lattice.stab_pos[a] - lattice.stab_pos[b]
    d = d - L * np.round(d / L)
    return np.hypot(d[..., 0], d[..., 1])


def toroidal_displacement(a, b, lattice: CodeLattice):
    """Signed minimum-image displacement from stabilizer a to b."""
    L = lattice.L
    d = lattice.stab_pos[b] - lattice.stab_pos[a]
    return d - L * np.round(d / L)


def stabilizer_parity(lattice: CodeLattice, flips: np.ndarray, species: int) -> np.ndarray:
    """Occupation (syndrome) of one stabilizer species for a spin-flip set.

    flips is a boolean array over all 2L^2 spins; the result is a uint8
    array over all 2L^2 stabilizers, nonzero only on the given species.
    """
    flips = np.asarray(flips)
    counts = np.zeros(lattice.n_stabs, dtype=np.int64)
    flipped = np.nonzero(flips)[0]
    np.add.at(counts, lattice.spin_stabs[flipped, species, :].ravel(), 1)
    return (counts % 2).astype(np.uint8)


def anyon_occupation(lattice: CodeLattice, flips_e: np.ndarray, flips_m: np.ndarray) -> np.ndarray:
    """Full stabilizer occupation from per-species error chains."""
    occ = stabilizer_parity(lattice, flips_e, SPECIES_S)
    occ |= stabilizer_parity(lattice, flips_m, SPECIES_P)
    return occ


def lattice_to_json(lattice: CodeLattice) -> str:
    """Dump positions, incidence and logical representatives for diffing."""
    payload = {
        "L": lattice.L,
        "spin_pos": lattice.spin_pos.tolist(),
        "stab_pos": lattice.stab_pos.tolist(),
        "stab_species": lattice.stab_species.tolist(),
        "stab_spins": lattice.stab_spins.tolist(),
        "logical_reps": {f"{sp}_{dr}": arr.tolist()
                         for (sp, dr), arr in lattice.logical_reps.items()},
    }
    return json.dumps(payload, indent=1, sort_keys=True)
