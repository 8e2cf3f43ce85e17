"""Multi-species binary-collision operator with quantum occupancy factors.

The operator, its weak form, and its entropy dissipation are all built on
one quadrature: an enumeration of (node pair, sphere direction) terms whose
post-collision values enter through clamped cubic interpolation, organized
in adjoint (scatter) form.  Writing the weak pairing

    <Phi, Q> = -1/4 sum_p mu_p B_p (a_p - b_p) gbar(Phi)_p

and defining Q as the exact transpose of the discrete pair gradient gbar
makes the collision-invariant annihilation, the weak/strong identity, and
the sign of the dissipation linear-algebra facts instead of quadrature
claims.  The pointwise gather evaluation of the same quadrature is what
the naive oracle twin computes; the two agree to discretization error and
the adjoint form is the one that keeps the structural identities exact.

Occupancy tau(f) = 1 + alpha f with alpha = +1 (Bose), 0 (classical),
-1 (Fermi).  a_p / b_p are the gain/loss products
f_i' f_j' tau_i tau_j and f_i f_j tau_i' tau_j'.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _core
from .grid import VelocityGrid, SphereQuadrature, interpolate
from .means import log_mean                                   # noqa: F401
from .species import SpeciesSet, PairKernel, post_collision

__all__ = [
    "FLOOR_SCALE", "CollisionResult", "tau", "state_floor", "q_pair",
    "q_total", "weak_form", "entropy_dissipation_B", "q_linear_B",
    "metric_apply", "metric_form", "pair_gradient", "pair_gradient_grid",
    "collision_invariants", "conservative_projection",
]

FLOOR_SCALE = 1e-12


@dataclass
class CollisionResult:
    """Per-species collision terms plus bookkeeping."""

    qs: list
    pair_norms: dict = field(default_factory=dict)
    projection_correction: float | None = None

    def __iter__(self):
        return iter(self.qs)

    def __getitem__(self, s):
        return self.qs[s]


def tau(species, f):
    """Occupancy factor 1 + alpha f; validates the Fermi range."""
    f = np.asarray(f, dtype=float)
    if species.statistics == -1 and np.any(f > 1.0):
        node = np.unravel_index(int(np.argmax(f)), f.shape)
        raise ValueError(
            f"Fermi occupancy overflow: f = {float(f[node]):.6g} > 1 "
            f"at node {node}")
    return 1.0 + species.statistics * f


def state_floor(f) -> float:
    """Positivity floor for one species: FLOOR_SCALE times the peak."""
    m = float(np.max(f)) if f.size else 0.0
    return FLOOR_SCALE * m if m > 0.0 else 0.0


def _check_state(fs, species: SpeciesSet):
    for s, (f, sp) in enumerate(zip(fs, species)):
        if np.any(f < 0.0):
            node = np.unravel_index(int(np.argmin(f)), f.shape)
            raise ValueError(
                f"negative density for species {s} at node {node}")
        if sp.statistics == -1 and np.any(f > 1.0):
            node = np.unravel_index(int(np.argmax(f)), f.shape)
            raise ValueError(
                f"Fermi occupancy overflow for species {s}: "
                f"f = {float(f[node]):.6g} > 1 at node {node}")


def kernel_for(kernels, i: int, j: int) -> PairKernel:
    """Resolve the kernel of an unordered species pair.

    Accepts a single kernel (applied to every pair) or a dict keyed by
    (i, j) tuples in either order.
    """
    if isinstance(kernels, PairKernel):
        return kernels
    k = kernels.get((i, j))
    if k is None:
        k = kernels.get((j, i))
    if k is None:
        raise KeyError(f"no kernel registered for species pair ({i}, {j})")
    return k


def _pair_tables(kernels, grid, squad, species, i, j):
    kern = kernel_for(kernels, i, j)
    masses = species.masses
    return kern, _core.TABLES.get(kern, grid, squad, masses[i], masses[j],
                                  halfspace=(i == j))


def q_pair(fs, species: SpeciesSet, kernels, grid: VelocityGrid,
           squad: SphereQuadrature, i: int, j: int) -> np.ndarray:
    """Collision term of species i due to encounters with species j."""
    _check_state(fs, species)
    al = species.alphas
    q = np.zeros(grid.shape)
    scale = 0.5 * grid.cell_volume()
    if i == j:
        _, tabs = _pair_tables(kernels, grid, squad, species, i, i)
        _core.scatter_apply(0, fs[i], fs[i], al[i], al[i], None, None, tabs,
                            scale, True, 0.0, q, q)
    else:
        kern = kernel_for(kernels, i, j)
        tabs = _core.TABLES.get(kern, grid, squad, species.masses[i],
                                species.masses[j], halfspace=False)
        _core.scatter_apply(0, fs[i], fs[j], al[i], al[j], None, None, tabs,
                            scale, False, 0.0, q, q)
    return q


def q_total(fs, species: SpeciesSet, kernels, grid: VelocityGrid,
            squad: SphereQuadrature, project: bool = False) -> CollisionResult:
    """Sum of all pair collision terms, one sweep per unordered pair.

    A cross-pair sweep deposits into both species at once; this equals the
    ordered q_pair sums up to summation order.
    """
    _check_state(fs, species)
    ns = len(species)
    al = species.alphas
    qs = [np.zeros(grid.shape) for _ in range(ns)]
    scale = 0.5 * grid.cell_volume()
    pair_norms = {}
    for i in range(ns):
        for j in range(i, ns):
            _, tabs = _pair_tables(kernels, grid, squad, species, i, j)
            if i == j:
                part = np.zeros(grid.shape)
                _core.scatter_apply(0, fs[i], fs[i], al[i], al[i], None,
                                    None, tabs, scale, True, 0.0, part, part)
                qs[i] += part
                pair_norms[(i, i)] = float(np.max(np.abs(part)))
            else:
                part_i = np.zeros(grid.shape)
                part_j = np.zeros(grid.shape)
                _core.scatter_apply(0, fs[i], fs[j], al[i], al[j], None,
                                    None, tabs, scale, True, 0.0, part_i,
                                    part_j)
                qs[i] += part_i
                qs[j] += part_j
                pair_norms[(i, j)] = float(max(np.max(np.abs(part_i)),
                                               np.max(np.abs(part_j))))
    correction = None
    if project:
        qs, correction = conservative_projection(qs, species, grid)
    return CollisionResult(qs, pair_norms, correction)


def _phi_pair(phis, i, j, mode):
    if mode == "analytic":
        return dict(phi_fn_i=phis[i], phi_fn_j=phis[j])
    return dict(phi_i=phis[i], phi_j=phis[j])


def weak_form(fs, species: SpeciesSet, kernels, grid: VelocityGrid,
              squad: SphereQuadrature, phis, mode: str = "sampled") -> float:
    """Weak pairing of the test battery with the collision operator.

    -1/4 sum over species pairs and quadrature terms of
    B * (a - b) * gbar(Phi), the exact transpose of the scatter assembly,
    so the result matches the strong pairing <Phi, q_total> to roundoff.

    mode "sampled": phis are nodal arrays, interpolated at primed points
    like the state.  mode "analytic": phis are callables on (..., d)
    points, evaluated exactly at the primed points (used where the
    interpolation floor of the sampled route would mask a limit).
    """
    if mode not in ("sampled", "analytic"):
        raise ValueError("mode must be 'sampled' or 'analytic'")
    _check_state(fs, species)
    ns = len(species)
    al = species.alphas
    scale2 = 0.5 * grid.cell_volume() ** 2
    axes = [grid.axis] * grid.d if mode == "analytic" else None
    floors = [state_floor(f) for f in fs]
    parts = []
    for i in range(ns):
        for j in range(i, ns):
            _, tabs = _pair_tables(kernels, grid, squad, species, i, j)
            wk, _ = _core.pair_quadrature(
                0, fs[i], fs[j], al[i], al[j], None, None, tabs, scale2,
                floors[i] * floors[j], axes=axes,
                **_phi_pair(phis, i, j, mode))
            parts.append(wk)
    return float(np.sum(np.asarray(parts)))


def weak_form_battery(fs, species: SpeciesSet, kernels, grid: VelocityGrid,
                      squad: SphereQuadrature, batteries) -> np.ndarray:
    """Analytic-mode weak_form for a whole battery of test functions.

    batteries is a sequence of per-species callable tuples; the return
    value is the vector of weak_form(..., mode="analytic") results, one
    per battery entry, computed in a single sweep per species pair so the
    state-side quadrature work is shared across the battery.
    """
    _check_state(fs, species)
    ns = len(species)
    al = species.alphas
    scale2 = 0.5 * grid.cell_volume() ** 2
    axes = [grid.axis] * grid.d
    vals = np.zeros(len(batteries))
    for i in range(ns):
        for j in range(i, ns):
            _, tabs = _pair_tables(kernels, grid, squad, species, i, j)
            vals += _core.weak_analytic_batch(
                fs[i], fs[j], al[i], al[j], tabs, scale2,
                [phis[i] for phis in batteries],
                [phis[j] for phis in batteries], axes)
    return vals


def entropy_dissipation_B(fs, species: SpeciesSet, kernels,
                          grid: VelocityGrid,
                          squad: SphereQuadrature) -> float:
    """Collision entropy dissipation; a sum of nonnegative terms."""
    _check_state(fs, species)
    ns = len(species)
    al = species.alphas
    scale2 = 0.5 * grid.cell_volume() ** 2
    floors = [state_floor(f) for f in fs]
    total = 0.0
    for i in range(ns):
        for j in range(i, ns):
            _, tabs = _pair_tables(kernels, grid, squad, species, i, j)
            _, dis = _core.pair_quadrature(
                0, fs[i], fs[j], al[i], al[j], None, None, tabs, scale2,
                floors[i] * floors[j])
            total += dis
    return total


def q_linear_B(xs, species: SpeciesSet, kernels, grid: VelocityGrid,
               squad: SphereQuadrature) -> CollisionResult:
    """State-free linearized collision operator applied to the fields xs.

    Same quadrature with the mobility weight replaced by 1 and the entropy
    gradient replaced by the field itself; the induced quadratic form
    <x, Q_lin x> is minus a sum of squares, so the operator is dissipative
    by construction.
    """
    ns = len(species)
    qs = [np.zeros(grid.shape) for _ in range(ns)]
    scale = 0.5 * grid.cell_volume()
    for i in range(ns):
        for j in range(i, ns):
            _, tabs = _pair_tables(kernels, grid, squad, species, i, j)
            if i == j:
                _core.scatter_apply(2, xs[i], xs[i], 0.0, 0.0, xs[i], xs[i],
                                    tabs, scale, True, 0.0, qs[i], qs[i])
            else:
                _core.scatter_apply(2, xs[i], xs[j], 0.0, 0.0, xs[i], xs[j],
                                    tabs, scale, True, 0.0, qs[i], qs[j])
    return CollisionResult(qs)


def metric_apply(fs, xis, species: SpeciesSet, kernels, grid: VelocityGrid,
                 squad: SphereQuadrature, linear: bool = False):
    """The symmetric PSD mobility operator applied to per-species fields.

    <phi, M xi> = 1/4 sum mu B w gbar(phi) gbar(xi) with w = logmean(a, b)
    at the state fs (floor-masked), or w = 1 for the linear flavor.
    M applied to -dH reproduces q_total exactly.
    """
    ns = len(species)
    al = species.alphas
    out = [np.zeros(grid.shape) for _ in range(ns)]
    scale = 0.5 * grid.cell_volume()
    mode = 2 if linear else 1
    floors = [state_floor(f) for f in fs]
    for i in range(ns):
        for j in range(i, ns):
            _, tabs = _pair_tables(kernels, grid, squad, species, i, j)
            fl = floors[i] * floors[j]
            if i == j:
                _core.scatter_apply(mode, fs[i], fs[i], al[i], al[i], xis[i],
                                    xis[i], tabs, scale, True, fl, out[i],
                                    out[i])
            else:
                _core.scatter_apply(mode, fs[i], fs[j], al[i], al[j], xis[i],
                                    xis[j], tabs, scale, True, fl, out[i],
                                    out[j])
    # scatter_apply accumulates the transpose-gradient with the collision
    # sign convention; the metric operator is its negation
    return [-q for q in out]


def metric_form(fs, xis, phis, species: SpeciesSet, kernels,
                grid: VelocityGrid, squad: SphereQuadrature,
                linear: bool = False) -> float:
    """Bilinear form <phi, M xi> evaluated directly by quadrature."""
    ns = len(species)
    al = species.alphas
    scale2 = 0.5 * grid.cell_volume() ** 2
    mode = 2 if linear else 1
    floors = [state_floor(f) for f in fs]
    total = 0.0
    for i in range(ns):
        for j in range(i, ns):
            _, tabs = _pair_tables(kernels, grid, squad, species, i, j)
            wk, _ = _core.pair_quadrature(
                mode, fs[i], fs[j], al[i], al[j], xis[i], xis[j], tabs,
                scale2, floors[i] * floors[j], phi_i=phis[i], phi_j=phis[j])
            total += wk
    return total


def pair_gradient(phi_i, phi_j, v_i, v_j, m_i, m_j, omega) -> float:
    """Discrete pair gradient with exact primed-point evaluation.

    phi_i, phi_j are callables on velocity points.  Collision invariants
    annihilate this by the conservation laws of post_collision.
    """
    vi_p, vj_p = post_collision(v_i, v_j, m_i, m_j, omega)
    return (float(phi_i(vi_p)) + float(phi_j(vj_p))
            - float(phi_i(v_i)) - float(phi_j(v_j)))


def pair_gradient_grid(grid: VelocityGrid, phi_i, phi_j, a, b, m_i, m_j,
                       omega) -> float:
    """Pair gradient with nodal test arrays and interpolated primed values.

    a, b are node multi-indices; this is the gbar the collision quadrature
    uses, exposed for diagnostics.
    """
    nodes = grid.nodes()
    v_i = nodes[tuple(a)]
    v_j = nodes[tuple(b)]
    vi_p, vj_p = post_collision(v_i, v_j, m_i, m_j, omega)
    return (float(interpolate(grid, phi_i, vi_p[None, :])[0])
            + float(interpolate(grid, phi_j, vj_p[None, :])[0])
            - float(phi_i[tuple(a)]) - float(phi_j[tuple(b)]))


def collision_invariants(grid: VelocityGrid, species: SpeciesSet):
    """Nodal invariant fields: per-species mass, total momentum, energy.

    Returns a list of length N + d + 1; each element is a per-species list
    of nodal arrays.
    """
    ns = len(species)
    coords = grid.coords()
    rows = []
    for s in range(ns):
        rows.append([np.ones(grid.shape) if t == s else np.zeros(grid.shape)
                     for t in range(ns)])
    for ax in range(grid.d):
        rows.append([species.masses[s] * coords[ax] for s in range(ns)])
    speed2 = grid.speed_sq()
    rows.append([0.5 * species.masses[s] * speed2 for s in range(ns)])
    return rows


def conservative_projection(qs, species: SpeciesSet, grid: VelocityGrid):
    """Least-squares correction zeroing the invariant moments of qs.

    Minimal in the cell-weighted L2 norm subject to N + d + 1 linear
    constraints (per-species mass, total momentum, total energy moments of
    the collision output all zero).  Returns (corrected list, correction
    norm).
    """
    rows = collision_invariants(grid, species)
    cell = grid.cell_volume()
    nr = len(rows)
    resid = np.empty(nr)
    for k, row in enumerate(rows):
        resid[k] = cell * np.sum(np.asarray(
            [np.sum(c * q) for c, q in zip(row, qs)]))
    gram = np.empty((nr, nr))
    for k in range(nr):
        for l in range(k, nr):
            val = cell * np.sum(np.asarray(
                [np.sum(ck * cl) for ck, cl in zip(rows[k], rows[l])]))
            gram[k, l] = val
            gram[l, k] = val
    try:
        lam = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), resid)
    except scipy.linalg.LinAlgError as exc:
        raise ValueError(
            "degenerate invariant Gram matrix; grid cannot separate the "
            "collision invariants") from exc
    out = [q.copy() for q in qs]
    norm2 = 0.0
    for s in range(len(species)):
        corr = np.zeros(grid.shape)
        for k, row in enumerate(rows):
            if np.any(row[s]):
                corr += lam[k] * row[s]
        out[s] -= corr
        norm2 += cell * float(np.sum(corr * corr))
    return out, float(np.sqrt(norm2))
