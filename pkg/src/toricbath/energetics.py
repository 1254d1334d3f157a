"""Exact configuration energies, incremental move costs, and the mean field.

The anyon sector is a lattice gas over stabilizers with pairwise attraction
from the bath-mediated kernel. Energy zero is the anyon vacuum. The mean
field follows the uniform-smearing treatment: pair creation cost falls
linearly with the number of pairs already present, giving a self-consistency
equation with a symmetry-breaking bifurcation at beta*delta(0) = 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .couplings import InteractionKernel
from .geometry import CodeLattice


@dataclass
class AnyonConfig:
    """Occupation bits over all 2L^2 stabilizers, s block first.

    On the torus anyons appear in same-species pairs, so both species
    counts must be even.
    """

    occupation: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupation, dtype=np.uint8)
        if occ.ndim != 1 or occ.size % 2 != 0:
            raise ValueError("occupation must be a flat array over 2L^2 stabilizers")
        if not np.isin(occ, (0, 1)).all():
            raise ValueError("occupation bits must be 0 or 1")
        n = occ.size // 2
        if occ[:n].sum() % 2 or occ[n:].sum() % 2:
            raise ValueError("each species' anyon count must be even on the torus")
        self.occupation = occ

    @property
    def counts(self) -> tuple:
        n = self.occupation.size // 2
        return int(self.occupation[:n].sum()), int(self.occupation[n:].sum())


def _occ_array(config) -> np.ndarray:
    occ = config.occupation if isinstance(config, AnyonConfig) else config
    return np.asarray(occ, dtype=np.float64)


def config_energy(config, kernel: InteractionKernel) -> float:
    """E = sum_p mu_p n_p + 4 sum_{p != p'} J_{p,p'} n_p n_{p'} (ordered pairs).

    The pair table has zero diagonal, so the quadratic form counts each
    unordered pair twice, which is exactly the ordered-pair sum.
    """
    occ = _occ_array(config)
    return float(kernel.mu @ occ + 4.0 * occ @ kernel.pair_table @ occ)


def local_field(occ, kernel: InteractionKernel, q: int) -> float:
    """h_q = mu_q + 8 sum_{p' occupied} J_{q,p'}; O(#anyons) per call."""
    occ = np.asarray(occ)
    occupied = np.nonzero(occ)[0]
    return float(kernel.mu[q] + 8.0 * kernel.pair_table[q, occupied].sum())


def move_delta(config, spin: int, species: int, lattice: CodeLattice,
               kernel: InteractionKernel) -> float:
    """Exact energy change from flipping one spin of one Pauli species.

    The flip toggles the two species stabilizers adjacent to the spin; with
    d_i = +1 for creation and -1 for annihilation at site q_i,

        dE = d1 h_q1 + d2 h_q2 + 8 J_{q1,q2} d1 d2

    where h is the local field of the current configuration. Matches full
    recomputation to float precision.
    """
    occ = _occ_array(config)
    q1, q2 = (int(x) for x in lattice.spin_stabs[spin, species])
    d1 = 1.0 - 2.0 * occ[q1]
    d2 = 1.0 - 2.0 * occ[q2]
    h1 = local_field(occ, kernel, q1)
    h2 = local_field(occ, kernel, q2)
    return float(d1 * h1 + d2 * h2 + 8.0 * kernel.pair_table[q1, q2] * d1 * d2)


def delta_N(N, delta0: float, L: int):
    """Pair creation cost with N pairs present: delta(0) (1 - 4N/(L^2-2))."""
    N = np.asarray(N, dtype=float)
    out = delta0 * (1.0 - 4.0 * N / (L * L - 2.0))
    return float(out) if out.ndim == 0 else out


def mf_energy(N, delta0: float, L: int):
    """Mean-field energy of N pairs: delta(0) N (L^2 - 2N)/(L^2 - 2)."""
    N = np.asarray(N, dtype=float)
    out = delta0 * N * (L * L - 2.0 * N) / (L * L - 2.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MeanFieldSolution:
    """Roots of the self-consistency equation at one beta*delta(0).

    roots are densities in [0,1] sorted ascending; stable[i] marks roots the
    dynamics flows into. The root list is closed under n <-> 1-n and always
    contains 1/2.
    """

    beta_delta0: float
    roots: tuple
    stable: tuple
    regime: str


def _mf_f(n, beta_delta0):
    return 1.0 / (np.exp(beta_delta0 * (1.0 - 2.0 * n)) + 1.0) - n


GRID_POINTS = 10_000


def solve_self_consistent(beta_delta0: float, tol: float = 1e-12) -> MeanFieldSolution:
    """All roots of n = 1/(exp(beta delta0 (1-2n)) + 1) in [0, 1].

    Sign-bracketed bisection on a 10^4-point grid; a root is stable where f
    crosses from + to -. Below the threshold beta*delta0 = 2 the only root
    is 1/2; above it the outer pair is stable and 1/2 turns unstable.
    """
    if beta_delta0 <= 0 or tol <= 0:
        raise ValueError("need beta_delta0 > 0 and tol > 0")
    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    fg = _mf_f(grid, beta_delta0)
    roots, stable = [], []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], fg[:-1], fg[1:]):
        if fa == 0.0:
            roots.append(float(a))
            stable.append(bool(fb < 0))
            continue
        if fa * fb > 0:
            continue
        lo, hi, flo = float(a), float(b), float(fa)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            fm = _mf_f(mid, beta_delta0)
            if fm == 0.0:
                lo = hi = mid
                break
            if flo * fm < 0:
                hi = mid
            else:
                lo, flo = mid, fm
        root = 0.5 * (lo + hi)
        if abs(_mf_f(root, beta_delta0)) >= tol:
            raise RuntimeError(f"bisection did not reach |f| < {tol} near "
                               f"n={root} at beta_delta0={beta_delta0}")
        roots.append(root)
        stable.append(fa > 0)
    # the midpoint root is exact by symmetry; snap it
    roots = [0.5 if abs(r - 0.5) < 1e-9 else r for r in roots]
    order = np.argsort(roots)
    roots = tuple(float(roots[i]) for i in order)
    stable = tuple(bool(stable[i]) for i in order)
    return MeanFieldSolution(beta_delta0=float(beta_delta0), roots=roots,
                             stable=stable, regime=classify_phase(beta_delta0))


def classify_phase(beta_delta0: float, tol: float = 1e-9) -> str:
    """subcritical below beta*delta0 = 2, supercritical above, critical at it."""
    if abs(beta_delta0 - 2.0) <= tol:
        return "critical"
    return "subcritical" if beta_delta0 < 2.0 else "supercritical"
