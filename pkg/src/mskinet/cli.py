"""Command-line front end: config parsing, experiment runs, reports.

Subcommands
-----------
simulate        integrate the configured run; diagnostics CSV, Fisher
                monotonicity CSV, final-state snapshots, manifest.
verify-generic  structural audit of the reversible/dissipative split on a
                small phase-space state; report plus manifest.
grazing         concentration sweep plus the two small-angle identity
                checks; CSV tables plus manifest.
oracle          brute-force equivalence suite on a tiny grid, comparing
                the production operators against direct-sum references.

Config format (INI, '#' comments).  Sections and fields, with defaults:

  [species]  count (1), masses ("1.0"), statistics ("classical"; names or
             -1/0/+1, comma-separated, one per species)
  [kernel]   kind (required: maxwell | power-law | tabulated), c (1.0),
             gamma (0.0, power-law only), b_const (1.0), r_table/a_table
             (comma lists, tabulated only)
  [grid]     d (2), n (16), L (6.0), K (16)
  [run]      operator (boltzmann), integrator (euler), dt (1e-3),
             t_end (0.1), stride (10), projection (on), seed (12345),
             initial_1..initial_N ("gaussian w=1 u=0,.. T=1"); gaussian
             components are joined with '+', equilibrium takes mu/u/T
  [checks]   lambda_b (0.0), eps_list (0.8,0.4,0.2,0.1),
             theta_list (1e-1,1e-2,1e-3), n_pairs (20), verify_nx (3),
             verify_n (16), verify_K (8)

Exit codes: 0 all enabled checks pass; 1 validation/parse failures or a
failed check suite; 2 resolution aborts.  A manifest of key: value lines
is always written, recording the failure if any.  CSV outputs use CRLF
line ends, '.' decimals, and %.17g floats, and repeated runs with the
same config and seed are bitwise identical.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import math
import os
import re
import sys

import numpy as np

from . import __version__, boltzmann, landau, reference
from .fisher import monotonicity_audit
from .generic import FLAVORS, PhaseGrid, degeneracy_report, report_text
from .grid import SphereQuadrature, VelocityGrid, save_field
from .solver import (SimConfig, default_test_battery, grazing_lemma_check,
                     grazing_sweep, h_theorem_audit, initial_state,
                     perp_identity_check, simulate, GaussPolyTest)
from .species import SpeciesSet, make_kernel

__all__ = ["ConfigError", "RunManifest", "main", "oracle_suite",
           "cmd_simulate", "cmd_verify_generic", "cmd_grazing", "cmd_oracle"]


class ConfigError(ValueError):
    """Configuration or validation failure; maps to exit code 1."""


# ----- config parsing ----------------------------------------------------

_STATS_NAMES = {"fermi": -1, "classical": 0, "bose": 1,
                "-1": -1, "0": 0, "1": 1, "+1": 1}


def _conv(section: str, field: str, raw: str, conv, what: str):
    try:
        return conv(raw)
    except ConfigError:
        raise
    except Exception:
        raise ConfigError(
            f"config parse error in [{section}] {field}: "
            f"expected {what}, got {raw!r}") from None


def _get(cp, section: str, field: str, default, conv, what: str):
    if not cp.has_section(section) or not cp.has_option(section, field):
        return default
    return _conv(section, field, cp.get(section, field), conv, what)


def _floats(text: str):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_initial(text: str, field: str, d: int) -> dict:
    toks = text.split()
    if not toks:
        raise ConfigError(f"config parse error in [run] {field}: empty spec")
    kind = toks[0]

    def kv(parts):
        out = {}
        for part in parts:
            if "=" not in part:
                raise ConfigError(
                    f"config parse error in [run] {field}: token {part!r} "
                    f"is not key=value")
            key, val = part.split("=", 1)
            out[key] = val
        return out

    if kind == "gaussian":
        comps = []
        for chunk in " ".join(toks[1:]).split("+"):
            parts = chunk.split()
            if not parts:
                continue
            kw = kv(parts)
            for need in ("w", "u", "T"):
                if need not in kw:
                    raise ConfigError(
                        f"config parse error in [run] {field}: gaussian "
                        f"component lacks {need}=")
            u = _floats(kw["u"])
            if len(u) != d:
                raise ConfigError(
                    f"config parse error in [run] {field}: u has "
                    f"{len(u)} components for a {d}-dimensional grid")
            comps.append({"weight": float(kw["w"]), "u": u,
                          "T": float(kw["T"])})
        if not comps:
            raise ConfigError(
                f"config parse error in [run] {field}: no components")
        return {"type": "gaussian", "components": comps}
    if kind == "equilibrium":
        kw = kv(toks[1:])
        for need in ("mu", "u", "T"):
            if need not in kw:
                raise ConfigError(
                    f"config parse error in [run] {field}: equilibrium "
                    f"lacks {need}=")
        u = _floats(kw["u"])
        if len(u) != d:
            raise ConfigError(
                f"config parse error in [run] {field}: u has {len(u)} "
                f"components for a {d}-dimensional grid")
        return {"type": "equilibrium", "mu": float(kw["mu"]), "u": u,
                "T": float(kw["T"])}
    raise ConfigError(
        f"config parse error in [run] {field}: unknown kind {kind!r}")


def _parse_statistics(text: str):
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok not in _STATS_NAMES:
            raise ConfigError(
                f"config parse error in [species] statistics: unknown "
                f"value {tok!r}")
        out.append(_STATS_NAMES[tok])
    return out


def parse_config(path: str):
    """Parse an INI config into (SimConfig, checks dict)."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    count = _get(cp, "species", "count", 1, int, "an integer")
    masses = _get(cp, "species", "masses", [1.0] * count, _floats,
                  "a comma list of floats")
    stats = _get(cp, "species", "statistics", [0] * count,
                 _parse_statistics, "statistics names")
    if len(masses) != count:
        raise ConfigError(
            f"config parse error in [species] masses: {len(masses)} values "
            f"for count = {count}")
    if len(stats) != count:
        raise ConfigError(
            f"config parse error in [species] statistics: {len(stats)} "
            f"values for count = {count}")
    species = SpeciesSet.create(masses, stats)

    if not cp.has_section("kernel"):
        raise ConfigError('config parse error: missing section "kernel"')
    kind = _get(cp, "kernel", "kind", None, str.strip, "a kernel kind")
    if kind is None:
        raise ConfigError('config parse error in [kernel] kind: required')
    if kind not in ("maxwell", "power-law", "tabulated"):
        raise ConfigError(
            f'config parse error in [kernel] kind: unknown kind {kind!r}')
    kern_kw = dict(
        c=_get(cp, "kernel", "c", 1.0, float, "a float"),
        gamma=_get(cp, "kernel", "gamma", 0.0, float, "a float"),
        b_const=_get(cp, "kernel", "b_const", 1.0, float, "a float"),
    )
    if kind == "tabulated":
        r_table = _get(cp, "kernel", "r_table", None, _floats, "floats")
        a_table = _get(cp, "kernel", "a_table", None, _floats, "floats")
        if r_table is None or a_table is None:
            raise ConfigError(
                "config parse error in [kernel]: tabulated kind needs "
                "r_table and a_table")
        kern_kw.update(r_table=r_table, a_table=a_table)
    try:
        kernel = make_kernel(kind, **kern_kw)
    except ValueError as exc:
        raise ConfigError(f"config parse error in [kernel]: {exc}") from None

    d = _get(cp, "grid", "d", 2, int, "an integer")
    n = _get(cp, "grid", "n", 16, int, "an integer")
    L = _get(cp, "grid", "L", 6.0, float, "a float")
    K = _get(cp, "grid", "K", 16, int, "an even integer")
    try:
        grid = VelocityGrid(d, n, L)
        squad = SphereQuadrature(d, K)
    except ValueError as exc:
        raise ConfigError(f"config parse error in [grid]: {exc}") from None

    operator = _get(cp, "run", "operator", "boltzmann", str.strip, "a name")
    integrator = _get(cp, "run", "integrator", "euler", str.strip, "a name")
    dt = _get(cp, "run", "dt", 1e-3, float, "a float")
    t_end = _get(cp, "run", "t_end", 0.1, float, "a float")
    stride = _get(cp, "run", "stride", 10, int, "an integer")
    projection = _get(cp, "run", "projection", True,
                      lambda s: s.strip().lower() in ("on", "true", "1",
                                                      "yes"),
                      "a boolean")
    seed = _get(cp, "run", "seed", 12345, int, "an integer")
    initial = []
    for s in range(count):
        field = f"initial_{s + 1}"
        if cp.has_option("run", field):
            initial.append(_parse_initial(cp.get("run", field), field, d))
        else:
            initial.append({"type": "gaussian",
                            "components": [{"weight": 1.0, "u": [0.0] * d,
                                            "T": 1.0}]})
    try:
        cfg = SimConfig(species=species, kernels=kernel, grid=grid,
                        squad=squad, operator=operator, integrator=integrator,
                        dt=dt, t_end=t_end, stride=stride,
                        projection=projection, initial=initial, seed=seed)
    except ValueError as exc:
        raise ConfigError(f"config parse error in [run]: {exc}") from None

    checks = {
        "lambda_b": _get(cp, "checks", "lambda_b", 0.0, float, "a float"),
        "eps_list": _get(cp, "checks", "eps_list", [0.8, 0.4, 0.2, 0.1],
                         _floats, "a comma list of floats"),
        "theta_list": _get(cp, "checks", "theta_list", [1e-1, 1e-2, 1e-3],
                           _floats, "a comma list of floats"),
        "n_pairs": _get(cp, "checks", "n_pairs", 20, int, "an integer"),
        "verify_nx": _get(cp, "checks", "verify_nx", 3, int, "an integer"),
        "verify_n": _get(cp, "checks", "verify_n", 16, int, "an integer"),
        "verify_K": _get(cp, "checks", "verify_K", 8, int, "an integer"),
    }
    return cfg, checks


# ----- manifest ----------------------------------------------------------

class RunManifest:
    """Ordered key: value record of a command run; always written."""

    def __init__(self):
        self.entries: list = []

    def add(self, key: str, value) -> None:
        self.entries.append((key, value))

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            for key, value in self.entries:
                fh.write(f"{key}: {value}\n")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\r\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                             for v in row) + "\r\n")


def _parse_overrides(pairs, known: dict) -> dict:
    tols = dict(known)
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(
                f"bad --tol-override {pair!r}: expected NAME=VALUE")
        name, val = pair.split("=", 1)
        if name not in known:
            raise ConfigError(
                f"unknown tolerance {name!r}; known: "
                f"{', '.join(sorted(known))}")
        try:
            tols[name] = float(val)
        except ValueError:
            raise ConfigError(
                f"bad --tol-override value {val!r} for {name}") from None
    return tols


def _fermi_field_error(exc: ValueError) -> ConfigError:
    msg = str(exc)
    m = re.search(r"species (\d+)", msg)
    if m:
        field = f"initial_{int(m.group(1)) + 1}"
        return ConfigError(f"config field [run] {field}: {msg}")
    return ConfigError(msg)


# ----- oracle suite (shared with the test battery) -----------------------

def oracle_suite(cfg: SimConfig, tol_equiv: float = 1e-9,
                 tol_ws: float = 1e-8) -> list:
    """Brute-force equivalence rows comparing optimized vs direct paths.

    Returns dicts with check, impl, oracle, residual (relative), tol,
    status.  The grid is capped at n = 16; direct sums get expensive fast.
    """
    grid, squad = cfg.grid, cfg.squad
    species = cfg.species
    kern = cfg.kernels
    if grid.n > 16:
        raise ConfigError(
            f"config field [grid] n: oracle suite is capped at n = 16, "
            f"got {grid.n}")
    fs = initial_state(cfg)
    ns = len(species)
    masses = species.masses
    alphas = species.alphas
    cell = grid.cell_volume()
    floors = [boltzmann.state_floor(f) for f in fs]
    battery = default_test_battery(species, grid)[0]
    phis = [np.asarray(p(grid.nodes()), dtype=float).reshape(grid.shape)
            for p in battery]

    rows = []

    def add(check, impl, orc, resid, tol):
        rows.append({"check": check, "impl": impl, "oracle": orc,
                     "residual": resid, "tol": tol,
                     "status": "pass" if resid <= tol else "fail"})

    def rel_fields(a_list, b_list):
        num = max(float(np.max(np.abs(a - b)))
                  for a, b in zip(a_list, b_list))
        den = max(max(float(np.max(np.abs(b))) for b in b_list), 1e-300)
        return num / den, den

    def rel_scalar(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300)

    # strong boltzmann
    qs = boltzmann.q_total(fs, species, kern, grid, squad).qs
    q_ref = [np.zeros(grid.shape) for _ in range(ns)]
    for i in range(ns):
        q_ref[i] += reference.ref_q_pair(grid, squad, kern, fs[i], fs[i],
                                         masses[i], masses[i], alphas[i],
                                         alphas[i], True)
        for j in range(ns):
            if j == i:
                continue
            q_ref[i] += reference.ref_q_pair(grid, squad, kern, fs[i], fs[j],
                                             masses[i], masses[j], alphas[i],
                                             alphas[j], False)
    resid, _ = rel_fields(qs, q_ref)
    add("strong_boltzmann", max(float(np.max(np.abs(q))) for q in qs),
        max(float(np.max(np.abs(q))) for q in q_ref), resid, tol_equiv)

    # weak + dissipation vs reference ordered-pair sums
    wk_ref = 0.0
    dis_ref = 0.0
    for i in range(ns):
        for j in range(ns):
            wk1, dis1 = reference.ref_weak_dis(
                grid, squad, kern, fs[i], fs[j], masses[i], masses[j],
                alphas[i], alphas[j], i == j, floors[i] * floors[j],
                phi_i=phis[i], phi_j=phis[j])
            wk_ref += wk1
            dis_ref += dis1
    wk = boltzmann.weak_form(fs, species, kern, grid, squad, phis)
    dis = boltzmann.entropy_dissipation_B(fs, species, kern, grid, squad)
    add("weak_boltzmann", wk, wk_ref, rel_scalar(wk, wk_ref), tol_equiv)
    add("dissipation_boltzmann", dis, dis_ref, rel_scalar(dis, dis_ref),
        tol_equiv)

    # weak vs strong (both production routes)
    strong_pair = float(sum(cell * np.sum(p * q) for p, q in zip(phis, qs)))
    scale = float(sum(cell * np.sum(np.abs(p) * np.abs(q))
                      for p, q in zip(phis, qs))) + 1e-300
    add("weak_vs_strong_boltzmann", wk, strong_pair,
        abs(wk - strong_pair) / max(abs(strong_pair), scale), tol_ws)

    # linear boltzmann
    xs = [np.cos(0.7 * grid.speed_sq() + 0.3 * s) for s in range(ns)]
    ql = boltzmann.q_linear_B(xs, species, kern, grid, squad).qs
    ql_ref = [np.zeros(grid.shape) for _ in range(ns)]
    for i in range(ns):
        ql_ref[i] += reference.ref_q_linear_pair(grid, squad, kern, xs[i],
                                                 xs[i], masses[i], masses[i],
                                                 True)
        for j in range(ns):
            if j == i:
                continue
            ql_ref[i] += reference.ref_q_linear_pair(grid, squad, kern,
                                                    xs[i], xs[j], masses[i],
                                                    masses[j], False)
    resid, _ = rel_fields(ql, ql_ref)
    add("linear_boltzmann", max(float(np.max(np.abs(q))) for q in ql),
        max(float(np.max(np.abs(q))) for q in ql_ref), resid, tol_equiv)

    # strong landau
    qs_l = landau.q_landau_total(fs, species, kern, grid).qs
    ql_ref2 = [np.zeros(grid.shape) for _ in range(ns)]
    for i in range(ns):
        for j in range(ns):
            ql_ref2[i] += reference.ref_landau_q(
                grid, kern, fs[i], fs[j], masses[i], masses[j], alphas[i],
                alphas[j], floors[i], floors[j])
    resid, _ = rel_fields(qs_l, ql_ref2)
    add("strong_landau", max(float(np.max(np.abs(q))) for q in qs_l),
        max(float(np.max(np.abs(q))) for q in ql_ref2), resid, tol_equiv)

    # landau weak vs strong + dissipation vs reference
    wk_l = landau.weak_form_L(fs, species, kern, grid, phis)
    strong_l = float(sum(cell * np.sum(p * q) for p, q in zip(phis, qs_l)))
    scale_l = float(sum(cell * np.sum(np.abs(p) * np.abs(q))
                        for p, q in zip(phis, qs_l))) + 1e-300
    add("weak_vs_strong_landau", wk_l, strong_l,
        abs(wk_l - strong_l) / max(abs(strong_l), scale_l), tol_ws)

    dis_l = landau.entropy_dissipation_L(fs, species, kern, grid)
    wkd_ref = 0.0
    disd_ref = 0.0
    for i in range(ns):
        for j in range(ns):
            w1, d1 = reference.ref_landau_weak_dis(
                grid, kern, fs[i], fs[j], masses[i], masses[j], alphas[i],
                alphas[j], floors[i], floors[j], phi_i=phis[i],
                phi_j=phis[j])
            wkd_ref += w1
            disd_ref += d1
    add("dissipation_landau", dis_l, disd_ref, rel_scalar(dis_l, disd_ref),
        tol_equiv)
    add("weak_landau", wk_l, wkd_ref, rel_scalar(wk_l, wkd_ref), tol_equiv)

    # linear landau
    ql_l = landau.q_linear_L(xs, species, kern, grid).qs
    ql_l_ref = [reference.ref_q_linear_landau(grid, kern, xs, masses, i)
                for i in range(ns)]
    resid, _ = rel_fields(ql_l, ql_l_ref)
    add("linear_landau", max(float(np.max(np.abs(q))) for q in ql_l),
        max(float(np.max(np.abs(q))) for q in ql_l_ref), resid, tol_equiv)

    return rows


# ----- commands ----------------------------------------------------------

def _phase_state(fs, species, nx: int):
    """Positivity-preserving spatial modulation of a velocity state."""
    xs = np.arange(nx) / nx
    out = []
    for s, (f, sp) in enumerate(zip(fs, species)):
        amp = 0.2
        if sp.statistics == -1:
            peak = float(np.max(f))
            if peak > 0.0:
                amp = min(amp, 0.9 * max(1.0 - peak, 0.0) / peak)
        mod = 1.0 + amp * np.cos(2.0 * math.pi * xs + 0.3 * s)
        out.append(mod.reshape((nx,) + (1,) * f.ndim) * f[None])
    return out


def cmd_simulate(args) -> int:
    man = RunManifest()
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    code = 0
    try:
        man.add("tool", f"mskinet {__version__}")
        man.add("command", "simulate")
        man.add("started", datetime.datetime.now().isoformat())
        man.add("config", os.path.abspath(args.config))
        man.add("threads", args.threads)
        tols = _parse_overrides(args.tol_override, {"mismatch_rel": 0.05})
        cfg, checks = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        man.add("seed", cfg.seed)
        man.add("operator", cfg.operator)
        man.add("integrator", cfg.integrator)
        man.add("grid", f"d={cfg.grid.d} n={cfg.grid.n} L={cfg.grid.L} "
                        f"K={cfg.squad.K}")
        man.add("species_count", len(cfg.species))
        man.add("dt", cfg.dt)
        man.add("t_end", cfg.t_end)
        man.add("stride", cfg.stride)
        man.add("projection", "on" if cfg.projection else "off")
        for name, val in tols.items():
            man.add(f"tol.{name}", val)

        try:
            initial_state(cfg)
        except ValueError as exc:
            raise _fermi_field_error(exc) from None

        traj = simulate(cfg)
        if traj.step_warning:
            man.add("warning", traj.step_warning)

        diag_path = os.path.join(out_dir, "diagnostics.csv")
        traj.diagnostics_csv(diag_path)
        man.add("output", diag_path)

        fisher = monotonicity_audit(traj.times, traj.states, cfg.species,
                                    cfg.grid, cfg.kernels,
                                    lambda_b=checks["lambda_b"])
        fisher_path = os.path.join(out_dir, "fisher.csv")
        fisher.to_csv(fisher_path)
        man.add("output", fisher_path)
        man.add("fisher.hypothesis_ok", fisher.hypothesis_ok)
        if fisher.hypothesis_note:
            man.add("fisher.note", fisher.hypothesis_note)
        man.add("fisher.violations", fisher.violations)

        for s in range(len(cfg.species)):
            snap = os.path.join(out_dir, f"state_{s + 1}.field")
            save_field(snap, cfg.grid, traj.states[-1][s], species_index=s)
            man.add("output", snap)

        if traj.aborted:
            man.add("aborted", traj.abort_message)
            man.add("suite.run", "fail")
            code = 2
        else:
            man.add("suite.run", "pass")
            audit = h_theorem_audit(traj)
            man.add("h_theorem.max_rel_mismatch", audit["max_rel_mismatch"])
            man.add("h_theorem.monotone", audit["monotone"])
            ok_h = (audit["monotone"]
                    and audit["max_rel_mismatch"] <= tols["mismatch_rel"])
            man.add("suite.h_theorem", "pass" if ok_h else "fail")
            ok_f = (not fisher.hypothesis_ok) or fisher.violations == 0
            man.add("suite.fisher", "pass" if ok_f else "fail")
            if not (ok_h and ok_f):
                code = 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", str(exc))
        code = 1
    except Exception as exc:   # noqa: BLE001 - manifest must record it
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", f"{type(exc).__name__}: {exc}")
        code = 1
    finally:
        man.add("finished", datetime.datetime.now().isoformat())
        man.add("exit_code", code)
        man.write(os.path.join(out_dir, "manifest.txt"))
    return code


def cmd_verify_generic(args) -> int:
    man = RunManifest()
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    code = 0
    try:
        man.add("tool", f"mskinet {__version__}")
        man.add("command", "verify-generic")
        man.add("started", datetime.datetime.now().isoformat())
        man.add("config", os.path.abspath(args.config))
        man.add("threads", args.threads)
        tols = _parse_overrides(args.tol_override, {
            "antisym": 1e-10, "m_sym": 1e-8, "psd_floor": -1e-12,
            "m_de": 1e-12,
        })
        cfg, checks = parse_config(args.config)
        seed = args.seed if args.seed is not None else cfg.seed
        man.add("seed", seed)
        for name, val in tols.items():
            man.add(f"tol.{name}", val)

        vgrid = VelocityGrid(cfg.grid.d, checks["verify_n"], cfg.grid.L)
        squad = SphereQuadrature(cfg.grid.d, checks["verify_K"])
        small = SimConfig(species=cfg.species, kernels=cfg.kernels,
                          grid=vgrid, squad=squad, operator=cfg.operator,
                          dt=cfg.dt, t_end=cfg.t_end, stride=cfg.stride,
                          initial=cfg.initial, seed=seed)
        try:
            fs = initial_state(small)
        except ValueError as exc:
            raise _fermi_field_error(exc) from None
        pgrid = PhaseGrid(checks["verify_nx"], vgrid)
        F = _phase_state(fs, cfg.species, checks["verify_nx"])
        man.add("phase_grid", f"nx={pgrid.nx} n={vgrid.n} K={squad.K}")

        sign = -1.0 if getattr(args, "flip_m_sign", False) else 1.0
        if sign < 0:
            man.add("note", "mobility sign flipped (fault injection)")
        rep = degeneracy_report(F, cfg.species, cfg.kernels, pgrid, squad,
                                n_pairs=checks["n_pairs"], seed=seed,
                                mobility_sign=sign)
        report_path = os.path.join(out_dir, "generic_report.txt")
        with open(report_path, "w") as fh:
            fh.write(report_text(rep) + "\n")
        man.add("output", report_path)

        ok = rep["L_antisymmetry_defect"] <= tols["antisym"]
        man.add("suite.L_antisymmetry", "pass" if ok else "fail")
        all_ok = ok
        for flavor in FLAVORS:
            ok_de = rep[f"r2_M_dE[{flavor}]"] <= tols["m_de"]
            ok_sym = rep[f"M_symmetry_defect[{flavor}]"] <= tols["m_sym"]
            ok_psd = rep[f"M_pairing_min[{flavor}]"] >= tols["psd_floor"]
            man.add(f"suite.M_dE[{flavor}]", "pass" if ok_de else "fail")
            man.add(f"suite.M_symmetry[{flavor}]",
                    "pass" if ok_sym else "fail")
            man.add(f"suite.M_psd[{flavor}]", "pass" if ok_psd else "fail")
            all_ok = all_ok and ok_de and ok_sym and ok_psd
        man.add("r1_L_dS", rep["r1_L_dS"])
        if not all_ok:
            code = 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", str(exc))
        code = 1
    except Exception as exc:   # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", f"{type(exc).__name__}: {exc}")
        code = 1
    finally:
        man.add("finished", datetime.datetime.now().isoformat())
        man.add("exit_code", code)
        man.write(os.path.join(out_dir, "manifest.txt"))
    return code


def cmd_grazing(args) -> int:
    man = RunManifest()
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    code = 0
    try:
        man.add("tool", f"mskinet {__version__}")
        man.add("command", "grazing")
        man.add("started", datetime.datetime.now().isoformat())
        man.add("config", os.path.abspath(args.config))
        man.add("threads", args.threads)
        tols = _parse_overrides(args.tol_override, {
            "rel_gap_final": 0.05, "lemma_order": 1.0, "perp_order": 1.0,
        })
        cfg, checks = parse_config(args.config)
        if cfg.grid.d != 2:
            raise ConfigError(
                "config field [grid] d: the grazing checks are "
                "two-dimensional")
        if args.eps:
            eps_list = _conv("cli", "--eps", args.eps, _floats,
                             "a comma list of floats")
        else:
            eps_list = checks["eps_list"]
        for eps in eps_list:
            if not (0.0 < eps < 1.0):
                raise ConfigError(
                    f"config field [checks] eps_list: eps must lie in "
                    f"(0, 1), got {eps}")
        man.add("eps_list", ",".join(_fmt(e) for e in eps_list))
        for name, val in tols.items():
            man.add(f"tol.{name}", val)

        try:
            fs = initial_state(cfg)
        except ValueError as exc:
            raise _fermi_field_error(exc) from None

        rows = grazing_sweep(fs, cfg.species, cfg.kernels, cfg.grid,
                             eps_list=eps_list)
        gaps_path = os.path.join(out_dir, "grazing_gaps.csv")
        _write_csv(gaps_path,
                   ["eps", "K", "min_support", "abs_gap", "rel_gap"],
                   [[r["eps"], r["K"], r["min_support"], r["abs_gap"],
                     r["rel_gap"]] for r in rows])
        man.add("output", gaps_path)

        decreasing = all(rows[k + 1]["abs_gap"] < rows[k]["abs_gap"]
                         for k in range(len(rows) - 1))
        final_rel = rows[-1]["rel_gap"]
        man.add("gap.decreasing", decreasing)
        man.add("gap.final_rel", final_rel)
        ok_gap = ((len(rows) < 2 or decreasing)
                  and final_rel <= tols["rel_gap_final"])
        man.add("suite.grazing_gap", "pass" if ok_gap else "fail")

        L = cfg.grid.L
        v_i = np.array([0.23 * L, -0.11 * L])
        v_j = np.array([-0.17 * L, 0.19 * L])
        battery = default_test_battery(cfg.species, cfg.grid)
        dens = [GaussPolyTest(np.array([0.2 - 0.1 * s, -0.3 + 0.15 * s]),
                              1.4, p0=0.35)
                for s in range(len(cfg.species))]
        f_funcs = [(g, g.grad) for g in dens]
        lemma = grazing_lemma_check(cfg.species, 0, len(cfg.species) - 1,
                                    v_i, v_j, battery[-1], f_funcs=f_funcs,
                                    theta_list=tuple(checks["theta_list"]))
        lemma_path = os.path.join(out_dir, "grazing_lemma.csv")
        _write_csv(lemma_path, ["theta", "lhs", "rhs", "residual"],
                   [[t, l, lemma["rhs"], r]
                    for t, l, r in zip(lemma["theta"], lemma["lhs"],
                                       lemma["residual"])])
        man.add("output", lemma_path)
        man.add("lemma.order", lemma["order"])
        ok_lemma = lemma["order"] >= tols["lemma_order"]
        man.add("suite.grazing_lemma", "pass" if ok_lemma else "fail")

        perp = perp_identity_check(theta_list=tuple(checks["theta_list"]))
        perp_path = os.path.join(out_dir, "perp_identity.csv")
        _write_csv(perp_path, ["theta", "max_deviation"],
                   [[t, r] for t, r in zip(perp["theta"],
                                           perp["residual"])])
        man.add("output", perp_path)
        man.add("perp.order", perp["order"])
        ok_perp = perp["order"] >= tols["perp_order"]
        man.add("suite.perp_identity", "pass" if ok_perp else "fail")

        if not (ok_gap and ok_lemma and ok_perp):
            code = 1
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", str(exc))
        code = 1
    except Exception as exc:   # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", f"{type(exc).__name__}: {exc}")
        code = 1
    finally:
        man.add("finished", datetime.datetime.now().isoformat())
        man.add("exit_code", code)
        man.write(os.path.join(out_dir, "manifest.txt"))
    return code


def cmd_oracle(args) -> int:
    man = RunManifest()
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    code = 0
    try:
        man.add("tool", f"mskinet {__version__}")
        man.add("command", "oracle")
        man.add("started", datetime.datetime.now().isoformat())
        man.add("config", os.path.abspath(args.config))
        man.add("threads", args.threads)
        tols = _parse_overrides(args.tol_override,
                                {"equivalence": 1e-9, "weak_strong": 1e-8})
        cfg, _ = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        man.add("seed", cfg.seed)
        for name, val in tols.items():
            man.add(f"tol.{name}", val)

        rows = oracle_suite(cfg, tol_equiv=tols["equivalence"],
                            tol_ws=tols["weak_strong"])
        path = os.path.join(out_dir, "oracle_suite.csv")
        _write_csv(path,
                   ["check", "impl", "oracle", "residual", "tol", "status"],
                   [[r["check"], r["impl"], r["oracle"], r["residual"],
                     r["tol"], r["status"]] for r in rows])
        man.add("output", path)
        for r in rows:
            man.add(f"suite.{r['check']}", r["status"])
        if any(r["status"] != "pass" for r in rows):
            code = 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", str(exc))
        code = 1
    except Exception as exc:   # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        man.add("error", f"{type(exc).__name__}: {exc}")
        code = 1
    finally:
        man.add("finished", datetime.datetime.now().isoformat())
        man.add("exit_code", code)
        man.write(os.path.join(out_dir, "manifest.txt"))
    return code


# ----- entry point -------------------------------------------------------

def _add_common(parser, with_eps: bool = False):
    parser.add_argument("--config", required=True, help="INI config path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker-thread cap (execution is serial; "
                             "recorded in the manifest)")
    parser.add_argument("--tol-override", action="append", metavar="N=V",
                        help="override a named tolerance (repeatable)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    if with_eps:
        parser.add_argument("--eps", default=None,
                            help="comma list of concentration parameters")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mskinet",
        description="Structure-preserving multi-species kinetic toolkit")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="integrate the configured run")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-generic",
                       help="audit the reversible/dissipative split")
    _add_common(p)
    p.add_argument("--flip-m-sign", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify_generic)

    p = sub.add_parser("grazing", help="concentration sweep and identities")
    _add_common(p, with_eps=True)
    p.set_defaults(func=cmd_grazing)

    p = sub.add_parser("oracle", help="brute-force equivalence suite")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
