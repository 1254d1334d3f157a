"""Bath-mediated stabilizer-stabilizer kernels and chemical potentials.

Two interaction kinds are supported. The displacement kind follows from
exactly displacing the bath conditioned on stabilizer values and decays as
1/r; the density kind is the second-order perturbative result for a coupling
to the local boson density and decays as 1/r^2 with a prefactor linear in
temperature. Both are attractive between anyons.

Distances entering the kernels are open-plane Euclidean (planar_distance),
not toroidal; see geometry module notes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SPECIES_S, CodeLattice, build_code_lattice

WATSON_SELF_CONST = -0.253
KIND_DISPLACEMENT = "displacement"
KIND_DENSITY = "density"
RATE_LAWS = ("glauber", "metropolis", "symmetric-exponential")


@dataclass(frozen=True)
class ModelParams:
    """Physical and algorithmic parameters for one model instance.

    A       stabilizer-boson coupling (energy)
    t       boson hopping (energy)
    beta    inverse temperature (1/energy)
    L       code linear size
    Lambda  bath cube edge (sites); optional, needed by bath-side ops
    """

    A: float
    t: float
    beta: float
    L: int
    Lambda: int | None = None
    coupling_kind: str = KIND_DISPLACEMENT
    gamma0: float = 1.0
    rate_law: str = "glauber"

    def __post_init__(self):
        if not (self.A > 0 and self.t > 0 and self.beta > 0 and self.gamma0 > 0):
            raise ValueError("A, t, beta, gamma0 must all be positive")
        if self.coupling_kind not in (KIND_DISPLACEMENT, KIND_DENSITY):
            raise ValueError(f"unknown coupling_kind {self.coupling_kind!r}")
        if self.rate_law not in RATE_LAWS:
            raise ValueError(f"unknown rate_law {self.rate_law!r}")
        if self.coupling_kind == KIND_DENSITY and self.A > 0.1 * self.t:
            raise ValueError("density coupling is perturbative, need A/t <= 0.1")
        if self.Lambda is not None and self.Lambda <= self.L:
            raise ValueError("bath must enclose the code patch, need Lambda > L")

    @property
    def T(self) -> float:
        return 1.0 / self.beta


@dataclass(frozen=True)
class CouplingPattern:
    """Per-stabilizer coupling amplitudes A_p.

    Uniform patterns have A_w == A_s. The checkerboard trap pattern marks a
    quarter of each species weak.
    """

    amplitudes: np.ndarray
    A_s: float
    A_w: float

    @property
    def uniform(self) -> bool:
        return self.A_s == self.A_w

    def weak_mask(self) -> np.ndarray:
        if self.uniform:
            return np.zeros(self.amplitudes.shape, dtype=bool)
        return self.amplitudes == self.A_w


@dataclass(frozen=True)
class InteractionKernel:
    """Symmetric pair table J_{p,p'} with per-stabilizer chemical potential.

    The diagonal of pair_table is held at zero; the on-site piece lives in
    self_term so that mu_p = -4 * sum_{p'} J_{p,p'} holds as a plain row sum.
    """

    kind: str
    pair_table: np.ndarray
    mu: np.ndarray
    self_term: float


def uniform_pattern(lattice: CodeLattice, A: float) -> CouplingPattern:
    amps = np.full(lattice.n_stabs, float(A))
    amps.setflags(write=False)
    return CouplingPattern(amplitudes=amps, A_s=float(A), A_w=float(A))


def build_pattern_square(lattice: CodeLattice, A_s: float, A_w: float) -> CouplingPattern:
    """Checkerboard trap layout: both integer coordinate parts even -> weak.

    Per species exactly one quarter of the stabilizers is weak, and every
    single- or two-spin anyon move between distinct weak plaquettes passes
    through a strong one (see pattern_validity).
    """
    if A_w > A_s:
        raise ValueError("need A_w <= A_s")
    L = lattice.L
    n = L * L
    gi = np.arange(n) % L
    gj = np.arange(n) // L
    weak_cell = (gi % 2 == 0) & (gj % 2 == 0)
    amps = np.full(2 * n, float(A_s))
    amps[:n][weak_cell] = A_w
    amps[n:][weak_cell] = A_w
    amps.setflags(write=False)
    return CouplingPattern(amplitudes=amps, A_s=float(A_s), A_w=float(A_w))


def kernel_displacement(r, A_p, A_pp, t):
    """Mediated pair energy -A_p A_p' / (4 pi t r); r > 0 required."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive; the on-site term is handled separately")
    return -(A_p * A_pp) / (4.0 * np.pi * t * r)


def kernel_density(r, A, t, T):
    """Second-order pair energy -A^2 T / (32 pi^2 t^2 r^2); r > 0 required."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive; the on-site term is handled separately")
    return -(A * A * T) / (32.0 * np.pi**2 * t * t * r * r)


def _pair_row(lattice, pattern, params, idx, radius=None):
    """Kernel row J_{idx, :} with J_{idx, idx} = 0.

    radius, when given, zeroes entries beyond that planar distance. Used by
    mu_at and by the full table build so both take the identical formula
    path.
    """
    pos = lattice.stab_pos
    d = pos - pos[idx]
    r = np.hypot(d[:, 0], d[:, 1])
    row = np.zeros(lattice.n_stabs)
    mask = r > 0
    if radius is not None:
        mask &= r <= radius
    amps = pattern.amplitudes
    if params.coupling_kind == KIND_DISPLACEMENT:
        row[mask] = kernel_displacement(r[mask], amps[idx], amps[mask], params.t)
    else:
        row[mask] = -(amps[idx] * amps[mask] * params.T) / (
            32.0 * np.pi**2 * params.t**2 * r[mask] ** 2)
    return row


def build_kernel(lattice: CodeLattice, pattern: CouplingPattern,
                 params: ModelParams) -> InteractionKernel:
    """Dense pair table over all stabilizer pairs plus mu_p per Eq.-row sums.

    O(L^4) memory; fine at simulation sizes (L <= 32). For chemical
    potentials at larger L use mu_at, which needs a single row.
    """
    n = lattice.n_stabs
    table = np.empty((n, n))
    for idx in range(n):
        table[idx] = _pair_row(lattice, pattern, params, idx)
    # enforce exact symmetry against floating-point asymmetries
    table = 0.5 * (table + table.T)
    mu = -4.0 * table.sum(axis=1)
    if params.coupling_kind == KIND_DISPLACEMENT:
        self_term = WATSON_SELF_CONST * params.A**2 / params.t
    else:
        self_term = 0.0
    table.setflags(write=False)
    mu.setflags(write=False)
    return InteractionKernel(kind=params.coupling_kind, pair_table=table,
                             mu=mu, self_term=self_term)


def mu_at(lattice: CodeLattice, pattern: CouplingPattern, params: ModelParams,
          idx: int, radius: float | None = None) -> float:
    """Chemical potential at one stabilizer, optionally disk-restricted.

    radius = L/2 reproduces the continuum disk estimate; radius None sums
    the whole patch (what an anyon actually feels).
    """
    return float(-4.0 * _pair_row(lattice, pattern, params, idx, radius=radius).sum())


def chemical_potential_disk(lattice: CodeLattice, pattern: CouplingPattern,
                            params: ModelParams, idx: int | None = None) -> float:
    """mu restricted to the disk of radius L/2 around the chosen stabilizer."""
    if idx is None:
        idx = center_stabilizer(lattice)
    return mu_at(lattice, pattern, params, idx, radius=lattice.L / 2.0)


def center_stabilizer(lattice: CodeLattice, species: int = SPECIES_S) -> int:
    """Index of the species stabilizer nearest the patch center."""
    L = lattice.L
    base = 0 if species == SPECIES_S else L * L
    return base + (L // 2) * L + L // 2


def lattice_sum_inverse_r(L: int, exponent: int) -> float:
    """Dimensionless sum of 1/|R|^exponent over all stabilizers but the center.

    Density-2 stabilizer lattice (both species), open-plane distances from
    the center s-stabilizer. exponent 1 grows linearly with L, exponent 2
    logarithmically.
    """
    if exponent not in (1, 2):
        raise ValueError("exponent must be 1 or 2")
    lattice = build_code_lattice(L)
    c = center_stabilizer(lattice)
    d = lattice.stab_pos - lattice.stab_pos[c]
    r = np.hypot(d[:, 0], d[:, 1])
    r = r[r > 0]
    return float(np.sum(1.0 / r**exponent))


def self_term_integral(t: float, A: float, k_grid: int = 128) -> float:
    """Numeric Brillouin-zone integral for the on-site displacement energy.

    -A^2/(2 pi)^3 * integral d^3k / eps_k over the cube, eps_k the cubic
    tight-binding dispersion. Midpoint grid keeps k = 0 off the mesh; the
    1/eps singularity is integrable in 3D.
    """
    if k_grid < 32:
        raise ValueError("k_grid must be at least 32")
    k = (np.arange(k_grid) + 0.5) * (2.0 * np.pi / k_grid) - np.pi
    ck = np.cos(k)
    eps = 2.0 * t * (3.0 - ck[:, None, None] - ck[None, :, None] - ck[None, None, :])
    return float(-(A * A) * np.mean(1.0 / eps))


def pattern_validity(lattice: CodeLattice, pattern: CouplingPattern) -> list:
    """Exhaustively enumerate 1- and 2-spin anyon moves between weak sites.

    Returns the list of violating moves, each a tuple
    (species, start, intermediate or None, end), where a violation is a
    single anyon relocating between distinct weak stabilizers with every
    intermediate also weak. Empty list means the trap pattern is valid.
    """
    weak = pattern.weak_mask()
    violations = []
    for q in np.nonzero(weak)[0]:
        for d1 in range(4):
            q1 = lattice.step_dest[q, d1]
            if q1 != q and weak[q1]:
                violations.append((int(lattice.stab_species[q]), int(q), None, int(q1)))
            for d2 in range(4):
                q2 = lattice.step_dest[q1, d2]
                if q2 != q and weak[q1] and weak[q2]:
                    violations.append((int(lattice.stab_species[q]), int(q), int(q1), int(q2)))
    return violations
