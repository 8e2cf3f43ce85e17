"""Homogeneous time integration, diagnostics, and limit experiments.

The solver integrates dF/dt = Q(F, F) with explicit Euler or classical
RK4, optionally projecting every right-hand-side evaluation onto the
discrete collision-invariant kernel (which makes per-species mass exact
per step and total momentum/energy exact up to roundoff accumulation).
Negative values produced by a step are clipped to zero (Fermi values also
to one) with the clipped mass recorded; a clip above one part in 10^3 of
a species' mass aborts the run as under-resolved.

Diagnostics rows carry per-species mass, total momentum and energy, the
entropy H, the operator-matched dissipation D, and the Fisher
information; the H-theorem audit compares the recorded entropy slope
against the trapezoid of D over each recording interval.

The grazing experiments concentrate the angular kernel at small
deviation angles under a pinned second angular moment and compare the
binary-collision weak form against the diffusive one, plus two pointwise
small-angle identities with analytically assembled limits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import boltzmann, landau
from .boltzmann import conservative_projection
from .functionals import (energy_E, entropy_H, mass_per_species, momentum_M)
from .fisher import fisher_total
from .grid import VelocityGrid, SphereQuadrature
from .species import (GrazingFamily, PairKernel, SpeciesSet, post_collision)
from . import _core

__all__ = [
    "OPERATORS",
    "ResolutionError",
    "SimConfig",
    "Trajectory",
    "initial_state",
    "rhs_eval",
    "operator_dissipation",
    "step",
    "simulate",
    "h_theorem_audit",
    "default_test_battery",
    "grazing_quadrature_K",
    "grazing_sweep",
    "grazing_lemma_check",
    "perp_identity_check",
]

OPERATORS = ("boltzmann", "landau", "boltzmann-linear", "landau-linear")


class ResolutionError(RuntimeError):
    """Raised when clipping removes too much mass for the run to stand."""


@dataclass
class SimConfig:
    """Everything a run needs; built directly or parsed from a config file."""

    species: SpeciesSet
    kernels: object
    grid: VelocityGrid
    squad: SphereQuadrature | None
    operator: str = "boltzmann"
    integrator: str = "euler"
    dt: float = 1e-3
    t_end: float = 1.0
    stride: int = 10
    projection: bool = True
    initial: list = field(default_factory=list)
    seed: int = 12345

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(
                f"operator must be one of {OPERATORS}, got {self.operator!r}")
        if self.integrator not in ("euler", "rk4"):
            raise ValueError(
                f"integrator must be 'euler' or 'rk4', got {self.integrator!r}")
        if not (self.dt > 0.0):
            raise ValueError("dt must be positive")
        if not (self.t_end > 0.0):
            raise ValueError("t_end must be positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.operator.startswith("boltzmann") and self.squad is None:
            raise ValueError("boltzmann operators need a sphere quadrature")


def _maxwellian(grid: VelocityGrid, mass: float, weight: float, u, T: float):
    if T <= 0.0:
        raise ValueError("temperature must be positive")
    u = np.asarray(u, dtype=float)
    sq = np.zeros(grid.shape)
    for ax, c in enumerate(grid.coords()):
        sq += (c - u[ax]) ** 2
    norm = weight * (mass / (2.0 * math.pi * T)) ** (grid.d / 2.0)
    return norm * np.exp(-0.5 * mass * sq / T)


def initial_state(cfg: SimConfig):
    """Build per-species densities from the config's initial-condition spec.

    Spec entries (one per species):
      {"type": "gaussian", "components": [{"weight", "u", "T"}, ...]}
      {"type": "equilibrium", "mu": .., "u": .., "T": ..}
    Fermi species are validated to stay within [0, 1]; the offending
    species and peak value are named otherwise.
    """
    from .grid import equilibrium
    if len(cfg.initial) != len(cfg.species):
        raise ValueError(
            f"initial-condition spec has {len(cfg.initial)} entries for "
            f"{len(cfg.species)} species")
    out = []
    for s, (spec, sp) in enumerate(zip(cfg.initial, cfg.species)):
        kind = spec.get("type")
        if kind == "gaussian":
            f = np.zeros(cfg.grid.shape)
            comps = spec.get("components", [])
            if not comps:
                raise ValueError(f"species {s}: empty gaussian mixture")
            for comp in comps:
                f += _maxwellian(cfg.grid, sp.mass, float(comp["weight"]),
                                 comp["u"], float(comp["T"]))
        elif kind == "equilibrium":
            f = equilibrium(cfg.grid, sp.mass, sp.statistics,
                            float(spec["mu"]), spec["u"], float(spec["T"]))
        else:
            raise ValueError(
                f"species {s}: unknown initial-condition type {kind!r}")
        if sp.statistics == -1 and float(np.max(f)) > 1.0:
            raise ValueError(
                f"initial condition invalid for species {s}: Fermi density "
                f"peaks at {float(np.max(f)):.6g} > 1")
        out.append(f)
    return out


def rhs_eval(fs, cfg: SimConfig):
    """Operator evaluation, projected when the config asks for it."""
    if cfg.operator == "boltzmann":
        qs = boltzmann.q_total(fs, cfg.species, cfg.kernels, cfg.grid,
                               cfg.squad).qs
    elif cfg.operator == "landau":
        qs = landau.q_landau_total(fs, cfg.species, cfg.kernels, cfg.grid).qs
    elif cfg.operator == "boltzmann-linear":
        qs = boltzmann.q_linear_B(fs, cfg.species, cfg.kernels, cfg.grid,
                                  cfg.squad).qs
    else:
        qs = landau.q_linear_L(fs, cfg.species, cfg.kernels, cfg.grid).qs
    if cfg.projection:
        qs, _ = conservative_projection(qs, cfg.species, cfg.grid)
    return qs


def operator_dissipation(fs, cfg: SimConfig) -> float:
    """Dissipation matched to the configured operator.

    Nonlinear flavors: the entropy dissipation of the respective
    quadrature.  Linear flavors: the quadratic-form dissipation
    -<F, Q_lin F>, which is the quantity those operators make decay.
    """
    if cfg.operator == "boltzmann":
        return boltzmann.entropy_dissipation_B(fs, cfg.species, cfg.kernels,
                                               cfg.grid, cfg.squad)
    if cfg.operator == "landau":
        return landau.entropy_dissipation_L(fs, cfg.species, cfg.kernels,
                                            cfg.grid)
    qs = rhs_eval(fs, cfg)
    cell = cfg.grid.cell_volume()
    return -float(sum(cell * np.sum(f * q) for f, q in zip(fs, qs)))


def _clip_state(fs, species: SpeciesSet, grid: VelocityGrid):
    """Clip to the admissible range; returns (clipped fs, per-species mass)."""
    cell = grid.cell_volume()
    out = []
    clipped = np.zeros(len(species))
    for s, (f, sp) in enumerate(zip(fs, species)):
        g = np.maximum(f, 0.0)
        removed = cell * float(np.sum(g - f))
        if sp.statistics == -1:
            h = np.minimum(g, 1.0)
            removed += cell * float(np.sum(g - h))
            g = h
        out.append(g)
        clipped[s] = removed
    return out, clipped


def step(fs, cfg: SimConfig, dt: float | None = None):
    """One explicit step; returns (next state, per-species clipped mass).

    Raises ResolutionError when the clipped mass of any species exceeds
    1e-3 of that species' mass.
    """
    dt = cfg.dt if dt is None else float(dt)
    if cfg.integrator == "euler":
        k1 = rhs_eval(fs, cfg)
        cand = [f + dt * q for f, q in zip(fs, k1)]
    else:
        k1 = rhs_eval(fs, cfg)
        s2 = [np.maximum(f + 0.5 * dt * q, 0.0) for f, q in zip(fs, k1)]
        k2 = rhs_eval(s2, cfg)
        s3 = [np.maximum(f + 0.5 * dt * q, 0.0) for f, q in zip(fs, k2)]
        k3 = rhs_eval(s3, cfg)
        s4 = [np.maximum(f + dt * q, 0.0) for f, q in zip(fs, k3)]
        k4 = rhs_eval(s4, cfg)
        cand = [f + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
                for f, a, b, c, d in zip(fs, k1, k2, k3, k4)]
    out, clipped = _clip_state(cand, cfg.species, cfg.grid)
    masses = mass_per_species(out, cfg.grid)
    for s in range(len(cfg.species)):
        if clipped[s] > 1e-3 * max(masses[s], 1e-300):
            raise ResolutionError(
                f"resolution insufficient: clipped mass {clipped[s]:.3e} "
                f"exceeds 1e-3 of species {s} mass {masses[s]:.3e}")
    return out, clipped


@dataclass
class Trajectory:
    """Recorded run: snapshot states plus one diagnostics row per record."""

    times: list
    states: list
    diagnostics: list
    config: SimConfig
    aborted: bool = False
    abort_message: str = ""
    step_warning: str = ""

    def diagnostics_csv(self, path) -> None:
        ns = len(self.config.species)
        d = self.config.grid.d
        cols = (["t"] + [f"mass_{s + 1}" for s in range(ns)]
                + ["px", "py", "pz"][:d] + ["E", "H", "D", "I",
                                            "clipped_mass"])
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\r\n")
            for row in self.diagnostics:
                vals = ([row["t"]] + list(row["mass"]) + list(row["p"])
                        + [row["E"], row["H"], row["D"], row["I"],
                           row["clipped_mass"]])
                fh.write(",".join(f"{v:.17g}" for v in vals) + "\r\n")


def _diag_row(t, fs, cfg: SimConfig, clipped_total: float) -> dict:
    return {
        "t": t,
        "mass": mass_per_species(fs, cfg.grid),
        "p": momentum_M(fs, cfg.species, cfg.grid),
        "E": energy_E(fs, cfg.species, cfg.grid),
        "H": entropy_H(fs, cfg.species, cfg.grid),
        "D": operator_dissipation(fs, cfg),
        "I": fisher_total(fs, cfg.grid),
        "clipped_mass": clipped_total,
    }


def simulate(cfg: SimConfig, fs0=None) -> Trajectory:
    """Integrate to t_end, recording diagnostics every `stride` steps.

    A ResolutionError mid-run yields a partial trajectory with the abort
    recorded instead of propagating the exception.
    """
    fs = [np.array(f, dtype=float) for f in (fs0 if fs0 is not None
                                             else initial_state(cfg))]
    n_steps = int(round(cfg.t_end / cfg.dt))
    if n_steps < 1:
        raise ValueError("t_end shorter than one step")

    warn_msg = ""
    q0 = rhs_eval(fs, cfg)
    qmax = max(float(np.max(np.abs(q))) for q in q0)
    fmax = max(float(np.max(f)) for f in fs)
    if cfg.dt * qmax > 0.1 * fmax:
        warn_msg = (f"step size check: dt*max|Q| = {cfg.dt * qmax:.3e} "
                    f"exceeds 0.1*max f = {0.1 * fmax:.3e}")
        warnings.warn(warn_msg, stacklevel=2)

    clipped_total = 0.0
    traj = Trajectory(times=[0.0], states=[[f.copy() for f in fs]],
                      diagnostics=[_diag_row(0.0, fs, cfg, 0.0)], config=cfg,
                      step_warning=warn_msg)
    for k in range(1, n_steps + 1):
        try:
            fs, clipped = step(fs, cfg)
        except ResolutionError as exc:
            traj.aborted = True
            traj.abort_message = str(exc)
            return traj
        clipped_total += float(np.sum(clipped))
        if k % cfg.stride == 0 or k == n_steps:
            t = k * cfg.dt
            traj.times.append(t)
            traj.states.append([f.copy() for f in fs])
            traj.diagnostics.append(_diag_row(t, fs, cfg, clipped_total))
    return traj


def h_theorem_audit(traj: Trajectory) -> dict:
    """Compare recorded entropy slopes against the trapezoid of D.

    Per recording interval: slope = (H_next - H_prev) / dt_rec and
    dbar = (D_prev + D_next) / 2; the relative mismatch is
    |slope + dbar| / max(|dbar|, tiny).  Also reports whether H was
    non-increasing at every recorded step.
    """
    rows = traj.diagnostics
    if len(rows) < 2:
        raise ValueError("audit needs at least two recorded rows")
    mismatches = []
    increases = 0
    worst_increase = 0.0
    for a, b in zip(rows[:-1], rows[1:]):
        dt_rec = b["t"] - a["t"]
        slope = (b["H"] - a["H"]) / dt_rec
        dbar = 0.5 * (a["D"] + b["D"])
        mismatches.append(abs(slope + dbar) / max(abs(dbar), 1e-300))
        if b["H"] > a["H"]:
            increases += 1
            worst_increase = max(worst_increase, b["H"] - a["H"])
    return {
        "max_rel_mismatch": float(max(mismatches)),
        "mean_rel_mismatch": float(np.mean(mismatches)),
        "monotone": increases == 0,
        "entropy_increases": increases,
        "worst_increase": worst_increase,
        "intervals": len(mismatches),
    }


# ----- grazing-limit experiments ----------------------------------------

class GaussPolyTest:
    """Gaussian-times-polynomial test function with analytic derivatives.

    value(v) = p(v) * exp(-|v - c|^2 / (2 w^2)), p affine-quadratic with
    coefficients (p0, lin, quad): p = p0 + lin . v + v . quad v.  Gradient
    and Hessian are closed forms, which the small-angle identities need.
    """

    def __init__(self, center, width: float, p0: float = 1.0, lin=None,
                 quad=None):
        self.c = np.asarray(center, dtype=float)
        self.w = float(width)
        d = self.c.size
        self.p0 = float(p0)
        self.lin = (np.zeros(d) if lin is None
                    else np.asarray(lin, dtype=float))
        self.quad = (np.zeros((d, d)) if quad is None
                     else 0.5 * (np.asarray(quad, dtype=float)
                                 + np.asarray(quad, dtype=float).T))

    def _gauss(self, v):
        dv = v - self.c
        return np.exp(-0.5 * np.sum(dv * dv, axis=-1) / (self.w * self.w))

    def _poly(self, v):
        return (self.p0 + np.sum(self.lin * v, axis=-1)
                + np.sum(v * (v @ self.quad), axis=-1))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return self._poly(v) * self._gauss(v)

    def grad(self, v):
        v = np.asarray(v, dtype=float)
        g = self._gauss(v)
        dp = self.lin + 2.0 * (v @ self.quad)
        dg = -(v - self.c) / (self.w * self.w)
        return (dp + self._poly(v)[..., None] * dg) * g[..., None]

    def hess(self, v):
        v = np.asarray(v, dtype=float)
        d = self.c.size
        g = self._gauss(v)
        p = self._poly(v)
        dp = self.lin + 2.0 * (v @ self.quad)
        a = -(v - self.c) / (self.w * self.w)
        hp = 2.0 * self.quad
        da = -np.eye(d) / (self.w * self.w)
        outer_pa = dp[..., :, None] * a[..., None, :]
        h = (hp + outer_pa + np.swapaxes(outer_pa, -1, -2)
             + p[..., None, None] * (a[..., :, None] * a[..., None, :] + da))
        return h * g[..., None, None]


def default_test_battery(species: SpeciesSet, grid: VelocityGrid):
    """Fixed battery of smooth per-species test tuples for weak pairings."""
    d = grid.d
    half = 0.5 * grid.L

    def centered(shift):
        c = np.zeros(d)
        c[0] = shift
        return c

    battery = []
    widths = (1.2, 1.8)
    shifts = (-0.3 * half, 0.25 * half)
    for w, s0 in zip(widths, shifts):
        battery.append([GaussPolyTest(centered(s0 * (1 + 0.2 * k)), w,
                                      p0=1.0,
                                      lin=0.3 * np.arange(1, d + 1))
                        for k in range(len(species))])
    quad = np.zeros((d, d))
    quad[0, 0] = 0.15
    quad[0, 1] = 0.1
    battery.append([GaussPolyTest(np.full(d, 0.2 * k - 0.4), 1.5,
                                  p0=0.5, quad=quad)
                    for k in range(len(species))])
    return battery


def grazing_quadrature_K(eps: float, K_min: int = 16) -> int:
    """Angular node count resolving the concentrated support [0, eps/2].

    Twice the minimum refinement rate, so roughly 20 nodes land inside
    the support arc whatever its alignment with the node set.
    """
    return max(K_min, 2 * int(math.ceil(64.0 / eps)))


def _min_support(tabs) -> int:
    return int(tabs.min_support)


def grazing_sweep(fs, species: SpeciesSet, radial_kernel: PairKernel,
                  grid: VelocityGrid, eps_list=(0.8, 0.4, 0.2, 0.1),
                  phis_battery=None, K_min: int = 16) -> list:
    """Concentration sweep: binary-collision vs diffusive weak forms.

    For every eps, the angular part is the pinned-moment concentrated
    rate and the sphere quadrature is refined with it; the diffusive side
    uses the same radial factor.  Returns one row per eps with the
    battery-aggregated absolute and relative gaps; raises if fewer than
    16 quadrature nodes land inside the angular support of any pair.
    """
    for eps in eps_list:
        if not (0.0 < eps < 1.0):
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if phis_battery is None:
        phis_battery = default_test_battery(species, grid)
    ns = len(species)
    masses = species.masses

    landau_vals = []
    for phis in phis_battery:
        nodal = [np.asarray(phi(grid.nodes()), dtype=float).reshape(grid.shape)
                 for phi in phis]
        landau_vals.append(landau.weak_form_L(fs, species, radial_kernel,
                                              grid, nodal))
    landau_vals = np.asarray(landau_vals)
    lscale = math.sqrt(float(np.sum(landau_vals ** 2)))

    rows = []
    for eps in eps_list:
        K = grazing_quadrature_K(eps, K_min)
        squad = SphereQuadrature(grid.d, K)
        kernels = {}
        support_min = None
        for i in range(ns):
            for j in range(i, ns):
                fam = GrazingFamily(radial_kernel, masses[i], masses[j],
                                    grid.d)
                kern = fam.kernel(eps)
                kernels[(i, j)] = kern
                tabs = _core.TABLES.get(kern, grid, squad, masses[i],
                                        masses[j], halfspace=(i == j))
                ms = _min_support(tabs)
                support_min = ms if support_min is None else min(support_min,
                                                                 ms)
        if support_min is not None and support_min < 16:
            raise ValueError(
                f"unresolved angular quadrature at eps = {eps}: only "
                f"{support_min} nodes inside the support; raise K")

        bvals = boltzmann.weak_form_battery(fs, species, kernels, grid,
                                            squad, phis_battery)
        diffs = bvals - landau_vals
        gap = math.sqrt(float(np.sum(diffs ** 2)))
        rows.append({
            "eps": eps,
            "K": K,
            "min_support": support_min,
            "boltzmann_values": bvals.tolist(),
            "landau_values": landau_vals.tolist(),
            "abs_gap": gap,
            "rel_gap": gap / max(lscale, 1e-300),
        })
    return rows


def _fit_order(xs, residuals) -> float:
    """Least-squares slope of log residual against log parameter."""
    xs = np.asarray(xs, dtype=float)
    rs = np.maximum(np.asarray(residuals, dtype=float), 1e-300)
    lx = np.log(xs)
    lr = np.log(rs)
    a = np.vstack([lx, np.ones_like(lx)]).T
    slope, _ = np.linalg.lstsq(a, lr, rcond=None)[0]
    return float(slope)


def grazing_lemma_check(species: SpeciesSet, i: int, j: int, v_i, v_j,
                        phis, f_funcs=None,
                        theta_list=(1e-1, 1e-2, 1e-3)) -> dict:
    """Small-angle limit of the occupancy-weighted pair difference (d = 2).

    LHS(theta) sums tau_i' tau_j' times the pair difference of the test
    tuple over the two perpendicular directions and divides by theta^2;
    the reference value is assembled from analytic first and second
    derivatives of the tests and first derivatives of the densities.
    f_funcs is a per-species list of (value, gradient) callables for the
    occupancy factors, or None for flat occupancy (classical statistics).
    """
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    if v_i.shape != (2,) or v_j.shape != (2,):
        raise ValueError("the small-angle check is two-dimensional")
    u = v_i - v_j
    r = float(np.sqrt(np.sum(u * u)))
    if r == 0.0:
        raise ValueError("coincident velocities leave the geometry undefined")
    m_i = species[i].mass
    m_j = species[j].mass
    a_i = species[i].statistics
    a_j = species[j].statistics
    k = u / r
    gamma0 = np.array([-k[1], k[0]])
    phi_i, phi_j = phis[i], phis[j]

    def tau_at(s, alpha, v):
        if f_funcs is None:
            return 1.0, np.zeros(2)
        fval, fgrad = f_funcs[s]
        return (1.0 + alpha * float(fval(v)),
                alpha * np.asarray(fgrad(v), dtype=float))

    tau_i0, dtau_i = tau_at(i, a_i, v_i)
    tau_j0, dtau_j = tau_at(j, a_j, v_j)

    base = float(phi_i(v_i)) + float(phi_j(v_j))
    rows = []
    for theta in theta_list:
        lhs = 0.0
        for gsign in (+1.0, -1.0):
            omega = k * math.cos(theta) + gsign * gamma0 * math.sin(theta)
            vip, vjp = post_collision(v_i, v_j, m_i, m_j, omega)
            bracket = float(phi_i(vip)) + float(phi_j(vjp)) - base
            ti, _ = tau_at(i, a_i, vip)
            tj, _ = tau_at(j, a_j, vjp)
            lhs += ti * tj * bracket
        rows.append(lhs / (theta * theta))

    # reference limit from analytic derivatives
    mu = m_i * m_j / (m_i + m_j)
    cval = (m_i * m_j) ** 2 / (m_i + m_j) ** 2      # |S^0| / (2 (d-1)) = 1
    g = phi_i.grad(v_i) / m_i - phi_j.grad(v_j) / m_j
    gtau = dtau_i * tau_j0 / m_i - dtau_j * tau_i0 / m_j
    proj_g = g - k * float(np.dot(k, g))
    W = r * r * np.eye(2) - np.outer(u, u)
    hess_sum = phi_i.hess(v_i) / m_i ** 2 + phi_j.hess(v_j) / m_j ** 2
    div_part = (-(1.0 / mu) * float(np.dot(u, g))
                + float(np.sum(W * hess_sum)))
    rhs = cval * (2.0 * r * r * float(np.dot(gtau, proj_g))
                  + tau_i0 * tau_j0 * div_part)

    residuals = [abs(val - rhs) for val in rows]
    return {
        "theta": list(theta_list),
        "lhs": rows,
        "rhs": rhs,
        "residual": residuals,
        "order": _fit_order(theta_list, residuals),
    }


def perp_identity_check(theta_list=(1e-1, 1e-2, 1e-3), k=None) -> dict:
    """Leading tensor of the summed direction-deviation outer product (d = 2).

    sum over the two perpendicular signs of (omega - k) (x) (omega - k)
    divided by theta^2 tends to twice the projector off k; rows report
    the maximum entry deviation and the fitted order.
    """
    k = np.array([1.0, 0.0]) if k is None else np.asarray(k, dtype=float)
    k = k / np.sqrt(np.sum(k * k))
    gamma0 = np.array([-k[1], k[0]])
    target = 2.0 * np.outer(gamma0, gamma0)
    rows = []
    residuals = []
    for theta in theta_list:
        acc = np.zeros((2, 2))
        for gsign in (+1.0, -1.0):
            omega = k * math.cos(theta) + gsign * gamma0 * math.sin(theta)
            dv = omega - k
            acc += np.outer(dv, dv)
        coeff = acc / (theta * theta)
        dev = float(np.max(np.abs(coeff - target)))
        rows.append(coeff)
        residuals.append(dev)
    return {
        "theta": list(theta_list),
        "coefficients": [c.tolist() for c in rows],
        "target": target.tolist(),
        "residual": residuals,
        "order": _fit_order(theta_list, residuals),
    }
