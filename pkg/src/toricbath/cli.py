"""Command line front end: one subcommand per experiment.

Grammar: toricbath <experiment> --config <path> [--out <dir>] [--seed <u64>]

The config is a JSON object; --out and --seed override its "out" and "seed"
fields. Every artifact (CSV, summary JSON, PNG) begins with or embeds the
tool version, a canonical echo of the resolved configuration, and the master
seed, so a run can be reproduced from any one of its outputs.

Exit codes: 0 success, 2 unknown experiment, 3 invalid parameters or
unparseable config, 4 unwritable output path. Failures print a single JSON
line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import bath, dynamics, reports
from .couplings import (
    KIND_DENSITY,
    KIND_DISPLACEMENT,
    ModelParams,
    build_kernel,
    build_pattern_square,
    center_stabilizer,
    chemical_potential_disk,
    kernel_density,
    kernel_displacement,
    lattice_sum_inverse_r,
    mu_at,
    uniform_pattern,
)
from .decoder import decode, extract_syndrome, is_logical_failure
from .energetics import config_energy, solve_self_consistent
from .geometry import BathLattice, build_code_lattice, planar_distance

EXIT_OK = 0
EXIT_UNKNOWN_EXPERIMENT = 2
EXIT_INVALID_PARAMS = 3
EXIT_UNWRITABLE_OUTPUT = 4

KERNEL_DUMP_MAX_L = 24

STOCHASTIC = frozenset({"simulate", "hinder", "decode-test",
                        "oracle-displacement"})


class CLIError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _invalid(message: str) -> CLIError:
    return CLIError(EXIT_INVALID_PARAMS, "invalid_parameters", message)


@dataclass
class RunConfig:
    experiment: str
    params: ModelParams
    pattern_A_s: float
    pattern_A_w: float
    ensemble: int
    horizon: float
    seed: int | None
    out: str
    stride: int
    options: dict

    def to_dict(self) -> dict:
        p = self.params
        return {
            "experiment": self.experiment,
            "params": {
                "A": p.A, "t": p.t, "beta": p.beta, "L": p.L,
                "Lambda": p.Lambda, "coupling_kind": p.coupling_kind,
                "gamma0": p.gamma0, "rate_law": p.rate_law,
            },
            "pattern": {"A_s": self.pattern_A_s, "A_w": self.pattern_A_w},
            "ensemble": self.ensemble,
            "horizon": self.horizon,
            "seed": self.seed,
            "out": self.out,
            "stride": self.stride,
            "options": self.options,
        }


_TOP_KEYS = {"experiment", "params", "pattern", "ensemble", "horizon",
             "seed", "out", "stride", "options"}
_PARAM_KEYS = {"A", "t", "beta", "L", "Lambda", "coupling_kind", "gamma0",
               "rate_law"}


def config_from_dict(data: dict, experiment: str, out=None, seed=None) -> RunConfig:
    if not isinstance(data, dict):
        raise _invalid("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise _invalid(f"unknown config keys: {sorted(unknown)}")
    cfg_exp = data.get("experiment")
    if cfg_exp is not None and cfg_exp != experiment:
        raise _invalid(f"config experiment {cfg_exp!r} does not match "
                       f"subcommand {experiment!r}")
    raw_params = dict(data.get("params") or {})
    bad = set(raw_params) - _PARAM_KEYS
    if bad:
        raise _invalid(f"unknown params keys: {sorted(bad)}")
    merged = {"A": 1.0, "t": 1.0, "beta": 1.0, "L": 8, "Lambda": None,
              "coupling_kind": KIND_DISPLACEMENT, "gamma0": 1.0,
              "rate_law": "glauber"}
    merged.update(raw_params)
    for key in ("L", "Lambda"):
        val = merged[key]
        if val is not None:
            try:
                if val != int(val):
                    raise ValueError
            except (TypeError, ValueError):
                raise _invalid(f"{key} must be an integer")
            merged[key] = int(val)
    # the code lattice only exists for even L; reject here so every
    # experiment agrees instead of only the ones that build a lattice
    if merged["L"] < 2 or merged["L"] % 2:
        raise _invalid("L must be an even integer >= 2")
    try:
        params = ModelParams(**merged)
    except (ValueError, TypeError) as exc:
        raise _invalid(str(exc))
    pattern = data.get("pattern") or {}
    if set(pattern) - {"A_s", "A_w"}:
        raise _invalid("pattern accepts only A_s and A_w")
    a_s = float(pattern.get("A_s", params.A))
    a_w = float(pattern.get("A_w", a_s))
    if not (a_s > 0 and a_w > 0) or a_w > a_s:
        raise _invalid("pattern needs 0 < A_w <= A_s")
    if seed is None:
        seed = data.get("seed")
    if seed is not None:
        seed = int(seed)
        if seed < 0 or seed >= 2 ** 64:
            raise _invalid("seed must fit in an unsigned 64-bit integer")
    try:
        ensemble = int(data.get("ensemble", 20))
        horizon = float(data.get("horizon", 1e7))
        stride = int(data.get("stride", 1))
    except (TypeError, ValueError) as exc:
        raise _invalid(str(exc))
    if ensemble < 1 or not horizon > 0 or stride < 1:
        raise _invalid("need ensemble >= 1, horizon > 0, stride >= 1")
    options = data.get("options") or {}
    if not isinstance(options, dict):
        raise _invalid("options must be a JSON object")
    if experiment in STOCHASTIC and seed is None:
        raise _invalid(f"{experiment} is stochastic; a master seed is required")
    return RunConfig(experiment=experiment, params=params,
                     pattern_A_s=a_s, pattern_A_w=a_w, ensemble=ensemble,
                     horizon=horizon, seed=seed,
                     out=str(out if out is not None else data.get("out", ".")),
                     stride=stride, options=options)


def _make_pattern(cfg: RunConfig, lattice):
    if cfg.pattern_A_w == cfg.pattern_A_s:
        return uniform_pattern(lattice, cfg.pattern_A_s)
    return build_pattern_square(lattice, cfg.pattern_A_s, cfg.pattern_A_w)


def _opt(cfg: RunConfig, key: str, default):
    return cfg.options.get(key, default)


def _path(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out, name)


# ---------------------------------------------------------------- handlers


def run_sum_scan(cfg: RunConfig) -> list:
    l_values = [int(x) for x in _opt(cfg, "L_values", [8, 16, 32, 64])]
    exponent = int(_opt(cfg, "exponent", 1))
    sums = [lattice_sum_inverse_r(L, exponent) for L in l_values]
    fit = reports.linear_fit(l_values, sums) if len(l_values) > 1 else None
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "sum_scan.csv"), echo, cfg.seed,
                               {"L": l_values, "lattice_sum": sums})]
    paths.append(reports.write_summary(_path(cfg, "sum_scan_summary.json"),
                                       echo, cfg.seed,
                                       {"exponent": exponent, "fit": fit}))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.plot(l_values, sums, "o", label="lattice sum")
    if fit:
        xs = np.linspace(min(l_values), max(l_values), 50)
        ax.plot(xs, fit["slope"] * xs + fit["intercept"], "-",
                label=f"fit slope {fit['slope']:.4f}")
    ax.set_xlabel("L")
    ax.set_ylabel(f"sum of 1/r^{exponent}")
    ax.legend()
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "sum_scan.png")))
    return paths


def run_kernel(cfg: RunConfig) -> list:
    p = cfg.params
    if p.L > KERNEL_DUMP_MAX_L:
        raise _invalid(f"kernel dump capped at L = {KERNEL_DUMP_MAX_L}")
    lattice = build_code_lattice(p.L)
    pattern = _make_pattern(cfg, lattice)
    kernel = build_kernel(lattice, pattern, p)
    center = center_stabilizer(lattice)
    qs = [q for q in range(lattice.n_stabs) if q != center]
    rs = [float(planar_distance(center, q, lattice)) for q in qs]
    js = [float(kernel.pair_table[center, q]) for q in qs]
    if p.coupling_kind == KIND_DISPLACEMENT:
        cont = [float(kernel_displacement(r, pattern.amplitudes[center],
                                          pattern.amplitudes[q], p.t))
                for q, r in zip(qs, rs)]
    else:
        cont = [float(kernel_density(r, p.A, p.t, p.T)) for r in rs]
    echo = cfg.to_dict()
    paths = [reports.write_csv(
        _path(cfg, "kernel.csv"), echo, cfg.seed,
        {"p": [center] * len(qs), "q": qs, "r": rs, "J": js,
         "J_continuum": cont})]
    paths.append(reports.write_summary(
        _path(cfg, "kernel_summary.json"), echo, cfg.seed,
        {"center": center, "mu_center": float(kernel.mu[center]),
         "self_term": kernel.self_term}))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.loglog(rs, np.abs(js), ".", label="|J| lattice")
    order = np.argsort(rs)
    ax.loglog(np.array(rs)[order], np.abs(np.array(cont))[order], "-",
              lw=1, label="|J| continuum")
    ax.set_xlabel("r")
    ax.set_ylabel("|J|")
    ax.legend()
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "kernel.png")))
    return paths


def run_mu_scan(cfg: RunConfig) -> list:
    l_values = [int(x) for x in _opt(cfg, "L_values", [8, 16, 32, 64])]
    p = cfg.params
    full, disk, full_norm, disk_norm = [], [], [], []
    for L in l_values:
        lattice = build_code_lattice(L)
        params = ModelParams(A=p.A, t=p.t, beta=p.beta, L=L,
                             coupling_kind=p.coupling_kind, gamma0=p.gamma0,
                             rate_law=p.rate_law)
        pattern = uniform_pattern(lattice, p.A)
        center = center_stabilizer(lattice)
        mf = mu_at(lattice, pattern, params, center)
        md = chemical_potential_disk(lattice, pattern, params)
        full.append(mf)
        disk.append(md)
        full_norm.append(mf * p.t / (p.A ** 2 * L))
        disk_norm.append(md * p.t / (p.A ** 2 * L))
    echo = cfg.to_dict()
    paths = [reports.write_csv(
        _path(cfg, "mu_scan.csv"), echo, cfg.seed,
        {"L": l_values, "mu_full": full, "mu_disk": disk,
         "mu_full_norm": full_norm, "mu_disk_norm": disk_norm})]
    paths.append(reports.write_summary(
        _path(cfg, "mu_scan_summary.json"), echo, cfg.seed,
        {"fit_full": reports.linear_fit(l_values, full),
         "fit_disk": reports.linear_fit(l_values, disk)}))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.plot(l_values, full, "o-", label="mu, whole patch")
    ax.plot(l_values, disk, "s-", label="mu, disk of radius L/2")
    ax.set_xlabel("L")
    ax.set_ylabel("mu")
    ax.legend()
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "mu_scan.png")))
    return paths


def run_oracle_displacement(cfg: RunConfig) -> list:
    p = cfg.params
    if p.Lambda is None:
        raise _invalid("oracle-displacement needs params.Lambda")
    lattice = build_code_lattice(p.L)
    blat = BathLattice(Lambda=p.Lambda, L=p.L)
    rng = np.random.default_rng(cfg.seed)
    n_sites = int(_opt(cfg, "n_sites", 6))
    if not (2 <= n_sites <= lattice.n_stabs):
        raise _invalid("n_sites must be between 2 and the stabilizer count")
    cols = {"config": [], "n_sites": [], "e_mode_sum": [], "e_pairwise": [],
            "rel_err": []}
    for i in range(cfg.ensemble):
        stabs = rng.choice(lattice.n_stabs, size=n_sites, replace=False)
        weights = rng.choice([-1.0, 1.0], size=n_sites)
        pos3d = blat.embed(lattice.stab_pos[stabs])
        em = bath.mode_sum_config_energy(weights, pos3d, p)
        ep = bath.pairwise_config_energy(weights, pos3d, p)
        cols["config"].append(i)
        cols["n_sites"].append(n_sites)
        cols["e_mode_sum"].append(em)
        cols["e_pairwise"].append(ep)
        cols["rel_err"].append(abs(em - ep) / max(abs(ep), 1e-300))
    r_grid = np.arange(1.0, float(_opt(cfg, "r_max", 5)) + 0.5)
    disp = np.zeros((r_grid.size, 3))
    disp[:, 0] = r_grid
    jd = bath.discrete_kernel(disp, p)
    cont = kernel_displacement(r_grid, p.A, p.A, p.t)
    dev = np.abs(jd - cont) / np.abs(cont)
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "oracle_displacement.csv"), echo,
                               cfg.seed, cols)]
    paths.append(reports.write_summary(
        _path(cfg, "oracle_displacement_summary.json"), echo, cfg.seed,
        {"max_rel_err": max(cols["rel_err"]),
         "kernel_deviation": {str(int(r)): float(d)
                              for r, d in zip(r_grid, dev)}}))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.plot(r_grid, dev, "o-")
    ax.set_xlabel("r")
    ax.set_ylabel("relative deviation from continuum kernel")
    fig.tight_layout()
    paths.append(reports.save_figure(fig,
                                     _path(cfg, "oracle_displacement.png")))
    return paths


def run_oracle_density(cfg: RunConfig) -> list:
    p = cfg.params
    if p.Lambda is None or p.coupling_kind != KIND_DENSITY:
        raise _invalid("oracle-density needs params.Lambda and "
                       'coupling_kind "density"')
    lattice = build_code_lattice(p.L)
    n = p.L * p.L
    site = int(_opt(cfg, "site", center_stabilizer(lattice)))
    if not (0 <= site < n):
        raise _invalid("site must index an s-species stabilizer")
    m = _opt(cfg, "m", 0.06)
    m = None if m is None else float(m)
    w0 = np.ones(n)
    w1 = w0.copy()
    w1[site] = -1.0

    def free_energy_diff(amp):
        return (bath.density_oracle(w1, p, m=m, A=amp)
                - bath.density_oracle(w0, p, m=m, A=amp))

    # the A <-> -A average cancels odd orders, isolating the piece the
    # second-order pair kernel models
    df = 0.5 * (free_energy_diff(p.A) + free_energy_diff(-p.A))
    pos = lattice.stab_pos[:n]
    d = np.hypot(*(pos - pos[site]).T)
    pred = float(-4.0 * kernel_density(d[d > 0], p.A, p.t, p.T).sum())
    ratio = df / pred
    echo = cfg.to_dict()
    names = ["dF_symmetrized", "kernel_prediction", "ratio"]
    vals = [df, pred, ratio]
    paths = [reports.write_csv(_path(cfg, "oracle_density.csv"), echo,
                               cfg.seed, {"quantity": names, "value": vals})]
    paths.append(reports.write_summary(
        _path(cfg, "oracle_density_summary.json"), echo, cfg.seed,
        {"site": site, "dF": df, "prediction": pred, "ratio": ratio,
         "positive": bool(df > 0)}))
    return paths


def run_chi(cfg: RunConfig) -> list:
    p = cfg.params
    if p.Lambda is None:
        raise _invalid("chi needs params.Lambda")
    q_max = int(_opt(cfg, "q_max", 6))
    if not (1 <= q_max < p.Lambda):
        raise _invalid("q_max must be in [1, Lambda)")
    cols = {"n": [], "q_mag": [], "chi_pinned": [], "chi_symmetric": [],
            "ratio_pinned": [], "ratio_symmetric": []}
    for nq in range(1, q_max + 1):
        q = [nq, 0, 0]
        cp = bath.susceptibility(q, p.beta, p.t, p.Lambda)
        cs = bath.susceptibility_symmetric(q, p.beta, p.t, p.Lambda)
        qmag = 2.0 * np.pi * nq / p.Lambda
        scale = 8.0 * p.t ** 2 * qmag * p.beta
        cols["n"].append(nq)
        cols["q_mag"].append(qmag)
        cols["chi_pinned"].append(cp)
        cols["chi_symmetric"].append(cs)
        cols["ratio_pinned"].append(cp * scale)
        cols["ratio_symmetric"].append(cs * scale)
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "chi.csv"), echo, cfg.seed, cols)]
    paths.append(reports.write_summary(
        _path(cfg, "chi_summary.json"), echo, cfg.seed,
        {"smallest_two_pinned": cols["ratio_pinned"][:2],
         "smallest_two_symmetric": cols["ratio_symmetric"][:2]}))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.plot(cols["q_mag"], cols["ratio_pinned"], "o-", label="pinned form")
    ax.plot(cols["q_mag"], cols["ratio_symmetric"], "s-",
            label="difference-quotient form")
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xlabel("|q|")
    ax.set_ylabel("chi * 8 t^2 |q| / T")
    ax.legend()
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "chi.png")))
    return paths


def run_moments(cfg: RunConfig) -> list:
    p = cfg.params
    orders = [int(x) for x in _opt(cfg, "orders", [2, 3, 4, 5, 6, 7, 8])]
    values = [bath.moment(x, p) for x in orders]
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "moments.csv"), echo, cfg.seed,
                               {"order": orders, "C_n": values})]
    paths.append(reports.write_summary(
        _path(cfg, "moments_summary.json"), echo, cfg.seed,
        {"sigma_fast": bath.sigma_fast(p),
         "wick_checked": all(bath.wick_identity_check(k, 0.7)
                             for k in range(1, 21))}))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    even = [(k, v) for k, v in zip(orders, values) if k % 2 == 0]
    if even:
        ax.plot([k for k, _ in even], [v for _, v in even], "o-")
    ax.set_xlabel("order n")
    ax.set_ylabel("C_n")
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "moments.png")))
    return paths


def run_meanfield(cfg: RunConfig) -> list:
    grid = _opt(cfg, "grid", None)
    if grid is None:
        grid = [0.5 + 0.25 * i for i in range(23)]
    cols = {"beta_delta0": [], "root": [], "stable": [], "regime": []}
    for bd in grid:
        sol = solve_self_consistent(float(bd))
        for root, stable in zip(sol.roots, sol.stable):
            cols["beta_delta0"].append(float(bd))
            cols["root"].append(root)
            cols["stable"].append(stable)
            cols["regime"].append(sol.regime)
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "meanfield.csv"), echo, cfg.seed,
                               cols)]
    paths.append(reports.write_summary(
        _path(cfg, "meanfield_summary.json"), echo, cfg.seed,
        {"grid_points": len(grid), "rows": len(cols["root"])}))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    b = np.array(cols["beta_delta0"])
    r = np.array(cols["root"])
    s = np.array(cols["stable"], dtype=bool)
    ax.plot(b[s], r[s], "o", ms=3, label="stable")
    if (~s).any():
        ax.plot(b[~s], r[~s], "x", ms=4, label="unstable")
    ax.set_xlabel("beta * delta(0)")
    ax.set_ylabel("self-consistent density")
    ax.legend()
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "meanfield.png")))
    return paths


def run_simulate(cfg: RunConfig) -> list:
    p = cfg.params
    lattice = build_code_lattice(p.L)
    pattern = _make_pattern(cfg, lattice)
    kernel = build_kernel(lattice, pattern, p)
    table = dynamics.build_process_table(lattice, kernel)
    d0 = float(dynamics.process_deltas(
        dynamics.make_state(lattice, kernel), table).min())
    targets = _opt(cfg, "bd0_targets", None)
    if targets is None:
        targets = [p.beta * d0]
    targets = [float(x) for x in targets]
    if any(x <= 0 for x in targets):
        raise _invalid("bd0_targets must be positive")
    cols = {"bd0_target": [], "trajectory": [], "traj_seed": [],
            "lifetime": [], "censored": [], "n_events": [],
            "termination": []}
    medians = []
    for k, target in enumerate(targets):
        beta = target / d0
        params = ModelParams(A=p.A, t=p.t, beta=beta, L=p.L,
                             Lambda=p.Lambda, coupling_kind=p.coupling_kind,
                             gamma0=p.gamma0, rate_law=p.rate_law)
        if p.coupling_kind == KIND_DENSITY:
            # this kernel carries a factor T, so it must track the scan
            # beta; the target still refers to the base kernel's d0
            kern_k = build_kernel(lattice, pattern, params)
        else:
            kern_k = kernel
        trs = dynamics.run_lifetime_ensemble(
            lattice, kern_k, params, cfg.horizon, cfg.ensemble,
            cfg.seed + k, decoder_stride=cfg.stride)
        medians.append(float(np.median([tr.lifetime for tr in trs])))
        for i, tr in enumerate(trs):
            cols["bd0_target"].append(target)
            cols["trajectory"].append(i)
            cols["traj_seed"].append(int(tr.seed))
            cols["lifetime"].append(tr.lifetime)
            cols["censored"].append(tr.censored)
            cols["n_events"].append(tr.n_events)
            cols["termination"].append(tr.termination)
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "simulate.csv"), echo, cfg.seed,
                               cols)]
    results = {"delta0_min": d0, "targets": targets, "medians": medians}
    if len(targets) > 1:
        results["log_median_fit"] = reports.linear_fit(targets,
                                                       np.log(medians))
    paths.append(reports.write_summary(_path(cfg, "simulate_summary.json"),
                                       echo, cfg.seed, results))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    if len(targets) > 1:
        ax.semilogy(targets, medians, "o-")
        ax.set_xlabel("beta * delta(0)")
        ax.set_ylabel("median lifetime")
    else:
        ax.hist(cols["lifetime"], bins=max(5, cfg.ensemble // 4))
        ax.set_xlabel("lifetime")
        ax.set_ylabel("trajectories")
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "simulate.png")))
    return paths


def run_hinder(cfg: RunConfig) -> list:
    p = cfg.params
    a_w_values = [float(x) for x in _opt(cfg, "A_w_values",
                                         [0.85, 0.70, 0.55])]
    pair = tuple(int(x) for x in _opt(cfg, "pair", [0, 2]))
    if len(pair) != 2:
        raise _invalid("pair must hold two stabilizer indices")
    lattice = build_code_lattice(p.L)
    n = p.L * p.L
    cols = {"A_w": [], "barrier": [], "trajectory": [], "traj_seed": [],
            "escaped": [], "reason": [], "time": [], "n_events": []}
    barriers, medians = [], []
    for k, a_w in enumerate(a_w_values):
        pattern = build_pattern_square(lattice, cfg.pattern_A_s, a_w)
        kernel = build_kernel(lattice, pattern, p)
        mask = pattern.weak_mask()
        mu_strong = float(kernel.mu[:n][~mask[:n]].mean())
        barrier = (1.0 - a_w / cfg.pattern_A_s) * mu_strong
        res = dynamics.run_hindering_ensemble(
            lattice, kernel, p, mask, pair, cfg.horizon, cfg.ensemble,
            cfg.seed + k)
        esc = [r.time for r in res if r.escaped]
        barriers.append(barrier)
        medians.append(float(np.median(esc)) if esc else float("nan"))
        for i, r in enumerate(res):
            cols["A_w"].append(a_w)
            cols["barrier"].append(barrier)
            cols["trajectory"].append(i)
            cols["traj_seed"].append(int(r.seed))
            cols["escaped"].append(r.escaped)
            cols["reason"].append(r.reason)
            cols["time"].append(r.time)
            cols["n_events"].append(r.n_events)
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "hinder.csv"), echo, cfg.seed,
                               cols)]
    results = {"A_w_values": a_w_values, "barriers": barriers,
               "median_escape_times": medians}
    finite = [(b, m) for b, m in zip(barriers, medians) if np.isfinite(m)]
    if len(finite) > 1:
        results["log_median_fit"] = reports.linear_fit(
            [b for b, _ in finite], np.log([m for _, m in finite]))
    paths.append(reports.write_summary(_path(cfg, "hinder_summary.json"),
                                       echo, cfg.seed, results))
    fig = reports.new_figure(figsize=(5, 4))
    ax = fig.add_subplot()
    ax.semilogy(barriers, medians, "o-")
    ax.set_xlabel("barrier (1 - A_w/A_s) mu_strong")
    ax.set_ylabel("median escape time")
    fig.tight_layout()
    paths.append(reports.save_figure(fig, _path(cfg, "hinder.png")))
    return paths


def run_decode_test(cfg: RunConfig) -> list:
    lattice = build_code_lattice(cfg.params.L)
    n_instances = int(_opt(cfg, "n_instances", 100))
    max_weight = int(_opt(cfg, "max_weight", max(1, cfg.params.L // 4)))
    if n_instances < 1 or max_weight < 0 or max_weight > lattice.n_spins:
        raise _invalid("need n_instances >= 1 and "
                       "0 <= max_weight <= spin count")
    rng = np.random.default_rng(cfg.seed)
    cols = {"instance": [], "weight_e": [], "weight_m": [], "anyons_e": [],
            "anyons_m": [], "correction_weight": [], "failed": []}
    failures = 0
    for i in range(n_instances):
        err_e = np.zeros(lattice.n_spins, dtype=bool)
        err_m = np.zeros(lattice.n_spins, dtype=bool)
        we = int(rng.integers(0, max_weight + 1))
        wm = int(rng.integers(0, max_weight + 1))
        err_e[rng.choice(lattice.n_spins, size=we, replace=False)] = True
        err_m[rng.choice(lattice.n_spins, size=wm, replace=False)] = True
        syn = extract_syndrome(err_e, err_m, lattice)
        corr = decode(syn, lattice)
        classes = is_logical_failure(err_e, err_m, corr, lattice)
        failed = any(classes.values())
        failures += failed
        cols["instance"].append(i)
        cols["weight_e"].append(we)
        cols["weight_m"].append(wm)
        cols["anyons_e"].append(int(syn.e.size))
        cols["anyons_m"].append(int(syn.m.size))
        cols["correction_weight"].append(
            int(corr.flips_e.sum() + corr.flips_m.sum()))
        cols["failed"].append(bool(failed))
    echo = cfg.to_dict()
    paths = [reports.write_csv(_path(cfg, "decode_test.csv"), echo, cfg.seed,
                               cols)]
    paths.append(reports.write_summary(
        _path(cfg, "decode_test_summary.json"), echo, cfg.seed,
        {"instances": n_instances, "failures": failures,
         "failure_rate": failures / n_instances}))
    return paths


def run_energy(cfg: RunConfig) -> list:
    lattice = build_code_lattice(cfg.params.L)
    pattern = _make_pattern(cfg, lattice)
    kernel = build_kernel(lattice, pattern, cfg.params)
    occupied = [int(q) for q in _opt(cfg, "occupied", [])]
    occ = np.zeros(lattice.n_stabs, dtype=np.int8)
    for q in occupied:
        if not (0 <= q < lattice.n_stabs):
            raise _invalid(f"stabilizer index {q} out of range")
        if occ[q]:
            raise _invalid(f"stabilizer index {q} repeated")
        occ[q] = 1
    n = lattice.L * lattice.L
    if occ[:n].sum() % 2 or occ[n:].sum() % 2:
        raise _invalid("anyon counts must be even per species")
    h = kernel.mu + 8.0 * kernel.pair_table @ occ
    sites = sorted(occupied)
    echo = cfg.to_dict()
    paths = [reports.write_csv(
        _path(cfg, "energy.csv"), echo, cfg.seed,
        {"stabilizer": sites,
         "species": [int(lattice.stab_species[q]) for q in sites],
         "mu": [float(kernel.mu[q]) for q in sites],
         "local_field": [float(h[q]) for q in sites]})]
    paths.append(reports.write_summary(
        _path(cfg, "energy_summary.json"), echo, cfg.seed,
        {"total_energy": float(config_energy(occ, kernel)),
         "anyons_e": int(occ[:n].sum()), "anyons_m": int(occ[n:].sum())}))
    return paths


EXPERIMENTS = {
    "sum-scan": run_sum_scan,
    "kernel": run_kernel,
    "mu-scan": run_mu_scan,
    "oracle-displacement": run_oracle_displacement,
    "oracle-density": run_oracle_density,
    "chi": run_chi,
    "moments": run_moments,
    "meanfield": run_meanfield,
    "simulate": run_simulate,
    "hinder": run_hinder,
    "decode-test": run_decode_test,
    "energy": run_energy,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _invalid(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toricbath", add_help=True,
                     description=__doc__.splitlines()[0])
    parser.add_argument("experiment", help="experiment subcommand")
    parser.add_argument("--config", required=True,
                        help="path to the JSON run configuration")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides config)")
    return parser


def load_config(path: str, experiment: str, out, seed) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _invalid(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise _invalid(f"config {path} is not valid JSON: {exc}")
    return config_from_dict(data, experiment, out=out, seed=seed)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.experiment not in EXPERIMENTS:
            raise CLIError(EXIT_UNKNOWN_EXPERIMENT, "unknown_experiment",
                           f"unknown experiment {args.experiment!r}; choose "
                           f"from {sorted(EXPERIMENTS)}")
        cfg = load_config(args.config, args.experiment, args.out, args.seed)
        try:
            paths = EXPERIMENTS[args.experiment](cfg)
        except OSError as exc:
            raise CLIError(EXIT_UNWRITABLE_OUTPUT, "unwritable_output",
                           f"cannot write under {cfg.out}: {exc}")
        except ValueError as exc:
            raise _invalid(str(exc))
        for path in paths:
            print(path)
        return EXIT_OK
    except CLIError as exc:
        sys.stderr.write(json.dumps(
            {"error": exc.kind, "message": str(exc)}) + "\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
