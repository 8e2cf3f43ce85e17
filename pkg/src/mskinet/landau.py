"""Multi-species grazing-limit (Landau) collision operator.

Flux form: for species pair (i, j) the flux at node a is

    flux_i[a] = h^d sum_b S(r) w_i[a] w_j[b] P_ab (G_i[a] - G_j[b]),

with S(r) = r^2 * radial(r) the symmetric pair strength (equal to
m_i A_ij = m_j A_ji), w = f tau the mobility weight, P_ab the projection
off the line v_a - v_b, and G_s = grad_v log(f_s/tau_s) / m_s.  The
collision term is Q_ij = div(flux)/m_i, with the divergence the exact
negative adjoint of the gradient, so the weak pairing equals the pair
quadrature identically and the dissipation keeps its sign.

Coincident node pairs are skipped (the projection is undefined on the
diagonal and the continuum integrand is bounded there).  Cells below the
positivity floor carry zero mobility weight, and the log fields are
evaluated on floored values so their gradients stay finite.

All pair sums run in numpy blocks over the partner index; nothing here
needs the compiled kernel.
"""

from __future__ import annotations

import numpy as np

from .boltzmann import (CollisionResult, kernel_for, state_floor,
                        conservative_projection, _check_state)
from .grid import VelocityGrid, grad_v, div_v
from .species import SpeciesSet

__all__ = [
    "pi_projection", "grad_tilde", "log_gradient_fields", "q_landau_pair",
    "q_landau_total", "weak_form_L", "entropy_dissipation_L", "q_linear_L",
    "metric_apply_L",
]

_CHUNK = 512


def pi_projection(v_i, v_j):
    """Projection matrix off the direction v_i - v_j."""
    u = np.asarray(v_i, dtype=float) - np.asarray(v_j, dtype=float)
    r2 = float(u @ u)
    if r2 == 0.0:
        raise ValueError("projection undefined for coincident velocities")
    return np.eye(u.shape[0]) - np.outer(u, u) / r2


def grad_tilde(grad_phi_i, grad_phi_j, pi, m_i, m_j):
    """Pair gradient: projected difference of mass-scaled gradients."""
    return pi @ (np.asarray(grad_phi_i) / m_i - np.asarray(grad_phi_j) / m_j)


def log_gradient_fields(fs, species: SpeciesSet, grid: VelocityGrid):
    """Per-species (weight, G) with the floor conventions.

    weight = f tau(f), zeroed at cells at or below the species floor;
    G = grad_v log(f/tau) / m evaluated on floored values.
    """
    weights = []
    grads = []
    for f, sp in zip(fs, species):
        floor = state_floor(f)
        safe = np.maximum(f, floor) if floor > 0.0 else np.maximum(f, 1e-300)
        dh = np.log(safe / (1.0 + sp.statistics * safe))
        w = f * (1.0 + sp.statistics * f)
        w = np.where(f > floor, w, 0.0)
        weights.append(w)
        grads.append(grad_v(grid, dh) / sp.mass)
    return weights, grads


def _radial_kernel(kern, r):
    return np.asarray(kern.radial(r), dtype=float)


def _pair_sweep(grid, kern, w_i, w_j, g_i, g_j, want_flux,
                pg_i=None, pg_j=None, coef=1.0):
    """One blocked sweep over all (a, b) node pairs of one species pair.

    g fields have shape (d,) + grid.shape.  Returns (flux, weak, dis):
    flux is the un-divided flux field (or None), weak/dis the quadrature
    sums with the given pair-counting coefficient folded in.
    """
    d = grid.d
    nodes = grid.nodes().reshape(-1, d)
    npts = nodes.shape[0]
    cell = grid.cell_volume()

    wi = w_i.reshape(-1)
    wj = w_j.reshape(-1)
    gi = g_i.reshape(d, -1).T                            # (npts, d)
    gj = g_j.reshape(d, -1).T
    if pg_i is not None:
        pgi = pg_i.reshape(d, -1).T
        pgj = pg_j.reshape(d, -1).T

    flux = np.zeros((npts, d)) if want_flux else None
    weak_parts = []
    dis_parts = []
    active = wi != 0.0
    # bound the (npts, chunk, d) scratch blocks to a few tens of MB
    chunk = max(32, min(_CHUNK, 4_000_000 // max(npts, 1)))

    for c0 in range(0, npts, chunk):
        sel = slice(c0, min(c0 + chunk, npts))
        vb = nodes[sel]
        u = nodes[:, None, :] - vb[None, :, :]           # (npts, nc, d)
        r2 = np.sum(u * u, axis=2)
        rad = _radial_kernel(kern, np.sqrt(r2))
        # mask the diagonal a == b
        nc = vb.shape[0]
        diag = np.arange(c0, c0 + nc)
        rad[diag, np.arange(nc)] = 0.0
        s_ab = r2 * rad

        wprod = wi[:, None] * wj[None, sel]
        g = gi[:, None, :] - gj[None, sel, :]
        udotg = np.sum(u * g, axis=2)
        if want_flux:
            core = (s_ab * wprod)[:, :, None] * g \
                - (rad * wprod * udotg)[:, :, None] * u
            flux += cell * np.sum(core, axis=1)
        if coef != 0.0:
            quad = wprod * (s_ab * np.sum(g * g, axis=2) - rad * udotg ** 2)
            dis_parts.append(np.sum(quad[active]))
            if pg_i is not None:
                gp = pgi[:, None, :] - pgj[None, sel, :]
                qw = wprod * (s_ab * np.sum(g * gp, axis=2)
                              - rad * udotg * np.sum(u * gp, axis=2))
                weak_parts.append(np.sum(qw[active]))

    cell2 = cell * cell
    dis = coef * cell2 * float(np.sum(np.asarray(dis_parts))) if dis_parts \
        else 0.0
    weak = -coef * cell2 * float(np.sum(np.asarray(weak_parts))) \
        if weak_parts else 0.0
    if want_flux:
        flux = flux.T.reshape((d,) + grid.shape)
    return flux, weak, dis


def q_landau_pair(fs, species: SpeciesSet, kernels, grid: VelocityGrid,
                  i: int, j: int) -> np.ndarray:
    """Collision term of species i against species j, flux-then-divergence."""
    _check_state(fs, species)
    weights, grads = log_gradient_fields(fs, species, grid)
    kern = kernel_for(kernels, i, j)
    flux, _, _ = _pair_sweep(grid, kern, weights[i], weights[j], grads[i],
                             grads[j], want_flux=True, coef=0.0)
    return div_v(grid, flux) / species.masses[i]


def q_landau_total(fs, species: SpeciesSet, kernels, grid: VelocityGrid,
                   project: bool = False) -> CollisionResult:
    _check_state(fs, species)
    ns = len(species)
    weights, grads = log_gradient_fields(fs, species, grid)
    qs = []
    pair_norms = {}
    for i in range(ns):
        acc = np.zeros((grid.d,) + grid.shape)
        for j in range(ns):
            kern = kernel_for(kernels, i, j)
            flux, _, _ = _pair_sweep(grid, kern, weights[i], weights[j],
                                     grads[i], grads[j], want_flux=True,
                                     coef=0.0)
            acc += flux
            pair_norms[(i, j)] = float(np.max(np.abs(flux)))
        qs.append(div_v(grid, acc) / species.masses[i])
    correction = None
    if project:
        qs, correction = conservative_projection(qs, species, grid)
    return CollisionResult(qs, pair_norms, correction)


def _phi_gradients(phis, species, grid):
    return [grad_v(grid, phi) / sp.mass for phi, sp in zip(phis, species)]


def weak_form_L(fs, species: SpeciesSet, kernels, grid: VelocityGrid,
                phis) -> float:
    """Symmetrized weak pairing over ordered species pairs."""
    _check_state(fs, species)
    ns = len(species)
    weights, grads = log_gradient_fields(fs, species, grid)
    pgs = _phi_gradients(phis, species, grid)
    total = 0.0
    for i in range(ns):
        for j in range(i, ns):
            kern = kernel_for(kernels, i, j)
            coef = 0.5 if i == j else 1.0
            _, wk, _ = _pair_sweep(grid, kern, weights[i], weights[j],
                                   grads[i], grads[j], want_flux=False,
                                   pg_i=pgs[i], pg_j=pgs[j], coef=coef)
            total += wk
    return total


def entropy_dissipation_L(fs, species: SpeciesSet, kernels,
                          grid: VelocityGrid) -> float:
    _check_state(fs, species)
    ns = len(species)
    weights, grads = log_gradient_fields(fs, species, grid)
    total = 0.0
    for i in range(ns):
        for j in range(i, ns):
            kern = kernel_for(kernels, i, j)
            coef = 0.5 if i == j else 1.0
            _, _, dis = _pair_sweep(grid, kern, weights[i], weights[j],
                                    grads[i], grads[j], want_flux=False,
                                    coef=coef)
            total += dis
    return total


def q_linear_L(xs, species: SpeciesSet, kernels, grid: VelocityGrid
               ) -> CollisionResult:
    """Linearized operator: unit mobility, field gradient in place of G."""
    ns = len(species)
    ones = np.ones(grid.shape)
    pgs = _phi_gradients(xs, species, grid)
    qs = []
    for i in range(ns):
        acc = np.zeros((grid.d,) + grid.shape)
        for j in range(ns):
            kern = kernel_for(kernels, i, j)
            flux, _, _ = _pair_sweep(grid, kern, ones, ones, pgs[i], pgs[j],
                                     want_flux=True, coef=0.0)
            acc += flux
        qs.append(0.5 * div_v(grid, acc) / species.masses[i])
    return CollisionResult(qs)


def metric_apply_L(fs, xis, species: SpeciesSet, kernels,
                   grid: VelocityGrid, linear: bool = False):
    """Mobility operator of the grazing-limit flavor; PSD, kills dE."""
    ns = len(species)
    pgs = _phi_gradients(xis, species, grid)
    if linear:
        out = q_linear_L(xis, species, kernels, grid)
        return [-q for q in out.qs]
    _check_state(fs, species)
    weights, _ = log_gradient_fields(fs, species, grid)
    result = []
    for i in range(ns):
        acc = np.zeros((grid.d,) + grid.shape)
        for j in range(ns):
            kern = kernel_for(kernels, i, j)
            flux, _, _ = _pair_sweep(grid, kern, weights[i], weights[j],
                                     pgs[i], pgs[j], want_flux=True, coef=0.0)
            acc += flux
        result.append(-div_v(grid, acc) / species.masses[i])
    return result
