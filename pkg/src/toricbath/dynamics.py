"""Kinetic Monte Carlo for anyon dynamics under the bath-mediated kernel.

Single-spin-flip processes only: each event toggles one spin of one Pauli
species, which creates, moves, or annihilates a pair of same-species anyons.
Gillespie sampling with exact waiting times; the local field vector h is
maintained incrementally (two rank-1 column updates per event), so an event
costs O(L^2) instead of O(L^4).

All stochastic state lives in one numpy Generator per trajectory; a seed
fixes the event sequence bitwise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

from .couplings import InteractionKernel, ModelParams
from .decoder import decode, is_logical_failure, syndrome_from_occupation
from .energetics import config_energy
from .geometry import CodeLattice, toroidal_distance

WORKERS_ENV = "TORICBATH_WORKERS"

# guard for the unnormalisable tail of the symmetric-exponential law: rates
# are capped at e^700 so the sampler keeps finite arithmetic instead of
# producing inf, which would break categorical sampling
_EXP_CAP = 700.0


class Event(NamedTuple):
    time: float
    spin: int
    species: int
    delta_e: float


def rates(delta_e, beta: float, law: str = "glauber", gamma0: float = 1.0):
    """Transition rate for a proposed energy change, vectorized.

    glauber               gamma0 / (1 + e^{beta dE})
    metropolis            gamma0 min(1, e^{-beta dE})
    symmetric-exponential gamma0 e^{-beta dE / 2}

    All three satisfy detailed balance with ratio e^{-beta dE}. They differ
    at dE = 0 (gamma0/2, gamma0, gamma0) and in how fast downhill moves
    saturate; the symmetric form is unbounded below.
    """
    delta_e = np.asarray(delta_e, dtype=float)
    if law == "glauber":
        return gamma0 * expit(-beta * delta_e)
    if law == "metropolis":
        return gamma0 * np.exp(np.minimum(-beta * delta_e, 0.0))
    if law == "symmetric-exponential":
        return gamma0 * np.exp(np.minimum(-0.5 * beta * delta_e, _EXP_CAP))
    raise ValueError(f"unknown rate law {law!r}")


@dataclass(frozen=True)
class ProcessTable:
    """Static process enumeration: index k = species * n_spins + spin."""

    q1: np.ndarray
    q2: np.ndarray
    spin: np.ndarray
    species: np.ndarray
    j12: np.ndarray
    pair_table: np.ndarray


def build_process_table(lattice: CodeLattice, kernel: InteractionKernel) -> ProcessTable:
    n = lattice.n_spins
    spin = np.tile(np.arange(n), 2)
    species = np.repeat(np.array([0, 1]), n)
    q1 = lattice.spin_stabs[spin, species, 0].astype(np.int64)
    q2 = lattice.spin_stabs[spin, species, 1].astype(np.int64)
    return ProcessTable(q1=q1, q2=q2, spin=spin, species=species,
                        j12=kernel.pair_table[q1, q2].copy(),
                        pair_table=kernel.pair_table)


@dataclass
class KMCState:
    occ: np.ndarray
    h: np.ndarray
    energy: float
    time: float = 0.0


def make_state(lattice: CodeLattice, kernel: InteractionKernel,
               occ=None) -> KMCState:
    if occ is None:
        occ = np.zeros(lattice.n_stabs, dtype=np.int8)
    else:
        occ = np.asarray(occ, dtype=np.int8).copy()
    h = kernel.mu + 8.0 * kernel.pair_table @ occ
    return KMCState(occ=occ, h=h, energy=config_energy(occ, kernel))


def process_deltas(state: KMCState, table: ProcessTable) -> np.ndarray:
    """Energy change of every process in the current configuration."""
    d1 = 1.0 - 2.0 * state.occ[table.q1]
    d2 = 1.0 - 2.0 * state.occ[table.q2]
    return d1 * state.h[table.q1] + d2 * state.h[table.q2] + 8.0 * table.j12 * d1 * d2


def kmc_step(state: KMCState, table: ProcessTable, params: ModelParams,
             rng: np.random.Generator, horizon: float | None = None):
    """One Gillespie event, applied in place.

    Returns the Event, or None if the sampled waiting time would carry the
    clock past the horizon (the state is then advanced to the horizon with
    no flip; valid by memorylessness of the exponential clock).
    """
    de = process_deltas(state, table)
    r = rates(de, params.beta, params.rate_law, params.gamma0)
    total = float(r.sum())
    if not total > 0.0:
        raise RuntimeError("total event rate vanished; no dynamics possible")
    wait = rng.exponential(1.0 / total)
    if horizon is not None and state.time + wait > horizon:
        state.time = horizon
        return None
    u = rng.random() * total
    k = min(int(np.searchsorted(np.cumsum(r), u, side="right")), r.size - 1)
    q1, q2 = int(table.q1[k]), int(table.q2[k])
    d1 = 1.0 - 2.0 * state.occ[q1]
    d2 = 1.0 - 2.0 * state.occ[q2]
    state.occ[q1] ^= 1
    state.occ[q2] ^= 1
    state.h += 8.0 * (table.pair_table[:, q1] * d1 + table.pair_table[:, q2] * d2)
    state.energy += float(de[k])
    state.time += wait
    return Event(time=state.time, spin=int(table.spin[k]),
                 species=int(table.species[k]), delta_e=float(de[k]))


@dataclass
class Trajectory:
    """Event log of one run plus its termination record."""

    seed: int
    times: np.ndarray
    spins: np.ndarray
    species: np.ndarray
    deltas: np.ndarray
    anyon_counts: np.ndarray
    termination: str
    lifetime: float
    censored: bool
    failure_classes: dict | None = None
    final_occ: np.ndarray | None = None
    final_energy: float = 0.0

    @property
    def n_events(self) -> int:
        return int(self.times.size)


def _pack(seed, events, counts, termination, lifetime, censored,
          classes, state) -> Trajectory:
    arr = np.array(events, dtype=float).reshape(-1, 4)
    return Trajectory(
        seed=int(seed), times=arr[:, 0].copy(),
        spins=arr[:, 1].astype(np.int64), species=arr[:, 2].astype(np.int64),
        deltas=arr[:, 3].copy(), anyon_counts=np.array(counts, dtype=np.int64),
        termination=termination, lifetime=float(lifetime),
        censored=censored, failure_classes=classes,
        final_occ=state.occ.copy(), final_energy=float(state.energy))


def run_lifetime(lattice: CodeLattice, kernel: InteractionKernel,
                 params: ModelParams, horizon: float, seed: int,
                 decoder_stride: int = 1, max_events: int = 10**7,
                 failure_hook: Callable | None = None) -> Trajectory:
    """Evolve from vacuum until the accumulated error decodes to a logical
    failure, the horizon passes, or the event budget runs out.

    The exact spin-error set is tracked per species; every decoder_stride
    events the matching correction is applied to a copy and the combined
    cycle tested for winding.
    """
    if decoder_stride < 1:
        raise ValueError("decoder_stride must be at least 1")
    rng = np.random.default_rng(seed)
    state = make_state(lattice, kernel)
    table = build_process_table(lattice, kernel)
    flips = np.zeros((2, lattice.n_spins), dtype=bool)
    events, counts = [], []
    n = 0
    while True:
        ev = kmc_step(state, table, params, rng, horizon=horizon)
        if ev is None:
            return _pack(seed, events, counts, "horizon", horizon, True,
                         None, state)
        n += 1
        events.append(ev)
        counts.append(int(state.occ.sum()))
        flips[ev.species, ev.spin] ^= True
        if n % decoder_stride == 0:
            if failure_hook is not None:
                failed, classes = failure_hook(flips[0], flips[1])
            else:
                syn = syndrome_from_occupation(state.occ, lattice)
                corr = decode(syn, lattice)
                classes = is_logical_failure(flips[0], flips[1], corr, lattice)
                failed = any(classes.values())
            if failed:
                return _pack(seed, events, counts, "failure", ev.time,
                             False, classes, state)
        if n >= max_events:
            return _pack(seed, events, counts, "max_events", state.time,
                         True, None, state)


@dataclass
class HinderingResult:
    seed: int
    escaped: bool
    time: float
    reason: str
    n_events: int


def run_hindering(lattice: CodeLattice, kernel: InteractionKernel,
                  params: ModelParams, weak_mask: np.ndarray,
                  pair: tuple, horizon: float, seed: int,
                  max_events: int = 10**6) -> HinderingResult:
    """Escape time of a pair seeded on weak plaquettes.

    Escape: any anyon occupies a weak stabilizer outside the seeded pair of
    sites, or any same-species pair separates beyond L/4. Annihilation and
    the horizon censor the run.
    """
    a, b = (int(x) for x in pair)
    if a == b:
        raise ValueError("pair must occupy two distinct stabilizers")
    if lattice.stab_species[a] != lattice.stab_species[b]:
        raise ValueError("seeded pair must share a species")
    if not (weak_mask[a] and weak_mask[b]):
        raise ValueError("seeded pair must start on weak plaquettes")
    rng = np.random.default_rng(seed)
    occ0 = np.zeros(lattice.n_stabs, dtype=np.int8)
    occ0[[a, b]] = 1
    state = make_state(lattice, kernel, occ0)
    table = build_process_table(lattice, kernel)
    home = {a, b}
    threshold = lattice.L / 4.0
    n = 0
    while True:
        ev = kmc_step(state, table, params, rng, horizon=horizon)
        if ev is None:
            return HinderingResult(seed, False, horizon, "horizon", n)
        n += 1
        occupied = np.nonzero(state.occ)[0]
        if occupied.size == 0:
            return HinderingResult(seed, False, ev.time, "annihilated", n)
        for q in occupied:
            if weak_mask[q] and int(q) not in home:
                return HinderingResult(seed, True, ev.time, "weak_region", n)
        for i in range(occupied.size):
            for j in range(i + 1, occupied.size):
                qi, qj = int(occupied[i]), int(occupied[j])
                if lattice.stab_species[qi] != lattice.stab_species[qj]:
                    continue
                if toroidal_distance(qi, qj, lattice) > threshold:
                    return HinderingResult(seed, True, ev.time, "separation", n)
        if n >= max_events:
            return HinderingResult(seed, False, state.time, "max_events", n)


@dataclass
class EquilibriumResult:
    seed: int
    mean_count: float
    density: float
    t_averaged: float
    n_events: int


def run_equilibrium(lattice: CodeLattice, kernel: InteractionKernel,
                    params: ModelParams, t_max: float, seed: int,
                    burn_in: float = 0.2) -> EquilibriumResult:
    """Time-weighted mean anyon count over [burn_in * t_max, t_max]."""
    rng = np.random.default_rng(seed)
    state = make_state(lattice, kernel)
    table = build_process_table(lattice, kernel)
    t0 = burn_in * t_max
    acc = 0.0
    n = 0
    while state.time < t_max:
        prev_t = state.time
        count = int(state.occ.sum())
        ev = kmc_step(state, table, params, rng, horizon=t_max)
        hi = state.time
        lo = max(prev_t, t0)
        if hi > lo:
            acc += count * (hi - lo)
        if ev is None:
            break
        n += 1
    span = t_max - t0
    mean = acc / span
    return EquilibriumResult(seed=seed, mean_count=mean,
                             density=mean / lattice.n_stabs,
                             t_averaged=span, n_events=n)


def two_state_sojourn(delta_e: float, beta: float, law: str, n_cycles: int,
                      seed: int, gamma0: float = 1.0) -> tuple:
    """Total times spent in the empty and excited states of a two-state
    toy (one fixed pair site) over n_cycles alternations."""
    k_up = float(rates(delta_e, beta, law, gamma0))
    k_dn = float(rates(-delta_e, beta, law, gamma0))
    rng = np.random.default_rng(seed)
    t0 = rng.exponential(1.0 / k_up, size=n_cycles).sum()
    t1 = rng.exponential(1.0 / k_dn, size=n_cycles).sum()
    return float(t0), float(t1)


def worker_count() -> int:
    """Worker processes for ensemble runs; TORICBATH_WORKERS overrides."""
    raw = os.environ.get(WORKERS_ENV, "")
    if not raw:
        return 1
    count = int(raw)
    if count < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer")
    return count


def trajectory_seeds(seed: int, n: int) -> np.ndarray:
    """Independent per-trajectory seeds derived from one root seed."""
    return np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)


def _lifetime_task(args):
    lattice, kernel, params, horizon, s, stride, max_events = args
    return run_lifetime(lattice, kernel, params, horizon, int(s),
                        decoder_stride=stride, max_events=max_events)


def run_lifetime_ensemble(lattice, kernel, params, horizon, n_traj, seed,
                          decoder_stride: int = 1,
                          max_events: int = 10**7) -> list:
    """n_traj independent lifetime runs; parallel iff worker_count() > 1.

    Results are ordered by trajectory index, so the output is identical
    whatever the worker count.
    """
    seeds = trajectory_seeds(seed, n_traj)
    tasks = [(lattice, kernel, params, horizon, s, decoder_stride, max_events)
             for s in seeds]
    workers = worker_count()
    if workers == 1:
        return [_lifetime_task(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_lifetime_task, tasks))


def _hindering_task(args):
    lattice, kernel, params, weak_mask, pair, horizon, s, max_events = args
    return run_hindering(lattice, kernel, params, weak_mask, pair, horizon,
                         int(s), max_events=max_events)


def run_hindering_ensemble(lattice, kernel, params, weak_mask, pair, horizon,
                           n_traj, seed, max_events: int = 10**6) -> list:
    seeds = trajectory_seeds(seed, n_traj)
    tasks = [(lattice, kernel, params, weak_mask, pair, horizon, s, max_events)
             for s in seeds]
    workers = worker_count()
    if workers == 1:
        return [_hindering_task(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_hindering_task, tasks))
