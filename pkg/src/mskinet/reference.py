"""Naive direct-sum twins of the collision operators.

Everything here enumerates node pairs and sphere nodes with plain loops and
evaluates the defining formulas term by term, with none of the table,
rectangle, or sliding-window machinery of the production backends.  The
point is an independent route to the same numbers: tests freeze values
produced here and require the optimized backends to reproduce them.

Too slow for production use; keep grids small (n <= 12).

Shared conventions that are part of the operator definition, not of any
implementation: the admitted-term rule (both primed-point stencils fully
interior, partner node on the grid), the lattice snap of primed-point
offsets within 1e-9 cells of an integer, the pole/equator snap of the
deviation cosine (see species.snap_cosine), the clamping of interpolated
state values at zero, the positivity floor under logarithms, and the
series branch of the logarithmic mean below a 1e-8 log gap.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import VelocityGrid, SphereQuadrature
from .species import post_collision, deviation_angle

__all__ = [
    "ref_q_pair", "ref_weak_dis", "ref_landau_q", "ref_landau_weak_dis",
    "ref_q_linear_pair", "ref_q_linear_landau",
]


def _lagrange4(s: float):
    """Cubic Lagrange weights on nodes {0,1,2,3} by the product formula."""
    w = [1.0, 1.0, 1.0, 1.0]
    for m in range(4):
        for k in range(4):
            if k != m:
                w[m] *= (s - k) / (m - k)
    return w


def _stencil(grid: VelocityGrid, node_idx, v_node, v):
    """Interior stencil (base indices, per-axis weights) or None.

    The primed point v is located relative to the unprimed node (integer
    index node_idx at coordinate v_node) and the offset is snapped to the
    lattice when within 1e-9 cells of an exact integer, the same
    knife-edge rule the table route applies before flooring.
    """
    bases = []
    weights = []
    for ax in range(grid.d):
        s = (v[ax] - v_node[ax]) / grid.h
        rs = round(s)
        if abs(s - rs) <= 1e-9:
            s = float(rs)
        t = node_idx[ax] + s
        base = int(math.floor(t)) - 1
        if base < 0 or base > grid.n - 4:
            return None
        bases.append(base)
        weights.append(_lagrange4(t - base))
    return bases, weights


def _interp_at(f, st):
    bases, weights = st
    val = 0.0
    if len(bases) == 2:
        for r in range(4):
            for l in range(4):
                val += weights[0][r] * weights[1][l] * f[bases[0] + r,
                                                         bases[1] + l]
    else:
        for r in range(4):
            for l in range(4):
                for m in range(4):
                    val += (weights[0][r] * weights[1][l] * weights[2][m]
                            * f[bases[0] + r, bases[1] + l, bases[2] + m])
    return val


def _deposit(q, st, amount):
    bases, weights = st
    if len(bases) == 2:
        for r in range(4):
            for l in range(4):
                q[bases[0] + r, bases[1] + l] -= (weights[0][r] * weights[1][l]
                                                  * amount)
    else:
        for r in range(4):
            for l in range(4):
                for m in range(4):
                    q[bases[0] + r, bases[1] + l, bases[2] + m] -= (
                        weights[0][r] * weights[1][l] * weights[2][m] * amount)


def _logmean(a: float, b: float) -> float:
    g = math.log(a) - math.log(b)
    if abs(g) < 1e-8:
        x = 0.5 * g
        return math.sqrt(a * b) * (1.0 + x * x / 6.0 + x ** 4 / 120.0)
    return (a - b) / g


def _pair_terms(grid, squad, kernel, m_i, m_j):
    """Yield one admitted quadrature term at a time.

    Yields (a, b, w_q * B, interp stencil and primed info) for every ordered
    node pair a != b and sphere node with positive kernel value and both
    primed points interior.
    """
    nodes = grid.nodes().reshape(-1, grid.d)
    shape = grid.shape
    omega, w_omega = squad.nodes_weights()
    nq = omega.shape[0]
    idx = [np.unravel_index(k, shape) for k in range(nodes.shape[0])]
    for ka in range(nodes.shape[0]):
        va = nodes[ka]
        for kb in range(nodes.shape[0]):
            if ka == kb:
                continue
            vb = nodes[kb]
            for q in range(nq):
                om = omega[q]
                th = deviation_angle(va, vb, om)
                r = float(np.linalg.norm(va - vb))
                bval = float(kernel.B(r, th))
                if bval <= 0.0:
                    continue
                vi_p, vj_p = post_collision(va, vb, m_i, m_j, om)
                st_i = _stencil(grid, idx[ka], va, vi_p)
                st_j = _stencil(grid, idx[kb], vb, vj_p)
                if st_i is None or st_j is None:
                    continue
                yield idx[ka], idx[kb], w_omega[q] * bval, st_i, st_j


def ref_q_pair(grid: VelocityGrid, squad: SphereQuadrature, kernel,
               f_i, f_j, m_i, m_j, alpha_i, alpha_j, same_species: bool):
    """Collision term of the first species due to the (i, j) pair.

    For same_species=True both deposit slots land in the one output array
    and the quadrature carries the 1/4 pair-counting factor; otherwise the
    factor is 1/2 and only the first slot is deposited.
    """
    q = np.zeros(grid.shape)
    coef = 0.25 if same_species else 0.5
    cell = grid.h ** grid.d
    for a, b, wb, st_i, st_j in _pair_terms(grid, squad, kernel, m_i, m_j):
        fa = f_i[a]
        fb = f_j[b]
        pi = max(_interp_at(f_i, st_i), 0.0)
        pj = max(_interp_at(f_j, st_j), 0.0)
        ap = pi * pj * (1.0 + alpha_i * fa) * (1.0 + alpha_j * fb)
        bp = fa * fb * (1.0 + alpha_i * pi) * (1.0 + alpha_j * pj)
        y = coef * cell * wb * (ap - bp)
        q[a] += y
        _deposit(q, st_i, y)
        if same_species:
            q[b] += y
            _deposit(q, st_j, y)
    return q


def ref_weak_dis(grid: VelocityGrid, squad: SphereQuadrature, kernel,
                 f_i, f_j, m_i, m_j, alpha_i, alpha_j, same_species: bool,
                 floor_prod: float, phi_i=None, phi_j=None):
    """Entropy quadrature of one ordered species pair.

    Returns (weak, dis): the weak pairing of the pair's collision terms
    with nodal test functions (0.0 if none given) and the pair's entropy
    dissipation.  The weak sum carries the bare a - b difference on every
    admitted term, matching the deposit route term for term; the
    dissipation goes through the logmean * log-gap factorization with the
    positivity floor, which pins its sign.  Ordered pairs (i, j) and
    (j, i) contribute equally; callers sum over ordered pairs, so the
    coefficient is 1/4 throughout.
    """
    wk = 0.0
    dis = 0.0
    cell2 = grid.h ** (2 * grid.d)
    for a, b, wb, st_i, st_j in _pair_terms(grid, squad, kernel, m_i, m_j):
        fa = f_i[a]
        fb = f_j[b]
        pi = max(_interp_at(f_i, st_i), 0.0)
        pj = max(_interp_at(f_j, st_j), 0.0)
        ap = pi * pj * (1.0 + alpha_i * fa) * (1.0 + alpha_j * fb)
        bp = fa * fb * (1.0 + alpha_i * pi) * (1.0 + alpha_j * pj)
        if phi_i is not None:
            gphi = (_interp_at(phi_i, st_i) + _interp_at(phi_j, st_j)
                    - phi_i[a] - phi_j[b])
            wk -= 0.25 * cell2 * wb * (ap - bp) * gphi
        if ap <= floor_prod or bp <= floor_prod:
            continue
        lam = _logmean(ap, bp)
        glog = math.log(ap) - math.log(bp)
        dis += 0.25 * cell2 * wb * lam * glog * glog
    if same_species:
        # the loop above already enumerated both orderings of each
        # unordered pair (a != b runs over ordered node pairs), nothing
        # further to fold in
        pass
    return wk, dis


def ref_q_linear_pair(grid: VelocityGrid, squad: SphereQuadrature, kernel,
                      x_i, x_j, m_i, m_j, same_species: bool):
    """Linearized collision term of the first slot, direct sum.

    Same deposit pattern as ref_q_pair with the bracket replaced by the
    raw (unclamped) pair gradient of the input fields and no occupancies.
    """
    q = np.zeros(grid.shape)
    coef = 0.25 if same_species else 0.5
    cell = grid.h ** grid.d
    for a, b, wb, st_i, st_j in _pair_terms(grid, squad, kernel, m_i, m_j):
        g = (_interp_at(x_i, st_i) + _interp_at(x_j, st_j)
             - x_i[a] - x_j[b])
        y = coef * cell * wb * g
        q[a] += y
        _deposit(q, st_i, y)
        if same_species:
            q[b] += y
            _deposit(q, st_j, y)
    return q


def ref_q_linear_landau(grid: VelocityGrid, kernel, xs, masses, i: int):
    """Linearized grazing-limit term of species i, direct double sum."""
    from .grid import grad_v, div_v

    d = grid.d
    nodes = grid.nodes().reshape(-1, d)
    npts = nodes.shape[0]
    cell = grid.h ** d
    pgs = [grad_v(grid, x).reshape(d, -1) / m for x, m in zip(xs, masses)]

    flux = np.zeros((d, npts))
    for j in range(len(xs)):
        for ka in range(npts):
            va = nodes[ka]
            for kb in range(npts):
                if ka == kb:
                    continue
                u = va - nodes[kb]
                r = float(np.linalg.norm(u))
                s_ab = r * r * float(kernel.radial(np.asarray(r)))
                if s_ab == 0.0:
                    continue
                diff = pgs[i][:, ka] - pgs[j][:, kb]
                proj = diff - (u @ diff) / (r * r) * u
                flux[:, ka] += cell * s_ab * proj
    flux = flux.reshape((d,) + grid.shape)
    return 0.5 * div_v(grid, flux) / masses[i]


def _grad_fields(grid: VelocityGrid, f, alpha, mass, floor):
    """Nodal d/dv of log(f / (1 + alpha f)) / mass with floored values."""
    from .grid import grad_v
    safe = np.maximum(f, floor)
    dh = np.log(safe / (1.0 + alpha * safe))
    return grad_v(grid, dh) / mass


def ref_landau_q(grid: VelocityGrid, kernel, f_i, f_j, m_i, m_j,
                 alpha_i, alpha_j, floor_i, floor_j):
    """Grazing-limit collision term of species i against species j.

    Direct double sum over node pairs of the projected-difference flux,
    then the negative-adjoint divergence of the first-axis gradient
    operator applied per component.
    """
    from .grid import div_v

    d = grid.d
    nodes = grid.nodes().reshape(-1, d)
    shape = grid.shape
    npts = nodes.shape[0]
    cell = grid.h ** d

    gi = _grad_fields(grid, f_i, alpha_i, m_i, floor_i).reshape(d, -1)
    gj = _grad_fields(grid, f_j, alpha_j, m_j, floor_j).reshape(d, -1)
    wi_ = (f_i * (1.0 + alpha_i * f_i)).reshape(-1) * (f_i.reshape(-1) > floor_i)
    wj_ = (f_j * (1.0 + alpha_j * f_j)).reshape(-1) * (f_j.reshape(-1) > floor_j)

    flux = np.zeros((d, npts))
    for ka in range(npts):
        if wi_[ka] == 0.0:
            continue
        va = nodes[ka]
        for kb in range(npts):
            if ka == kb or wj_[kb] == 0.0:
                continue
            u = va - nodes[kb]
            r = float(np.linalg.norm(u))
            a_r = r * r * float(kernel.radial(np.asarray(r))) / m_i
            if a_r == 0.0:
                continue
            diff = gi[:, ka] - gj[:, kb]
            proj = diff - (u @ diff) / (r * r) * u
            flux[:, ka] += cell * a_r * wi_[ka] * wj_[kb] * proj
    flux = flux.reshape((d,) + shape)
    return div_v(grid, flux)


def ref_landau_weak_dis(grid: VelocityGrid, kernel, f_i, f_j, m_i, m_j,
                        alpha_i, alpha_j, floor_i, floor_j,
                        phi_i=None, phi_j=None):
    """Weak pairing and dissipation of one ordered grazing-limit pair.

    Ordered-pair coefficient 1/2; callers sum over ordered pairs.
    """
    from .grid import grad_v

    d = grid.d
    nodes = grid.nodes().reshape(-1, d)
    npts = nodes.shape[0]
    cell = grid.h ** d

    gi = _grad_fields(grid, f_i, alpha_i, m_i, floor_i).reshape(d, -1)
    gj = _grad_fields(grid, f_j, alpha_j, m_j, floor_j).reshape(d, -1)
    wi_ = (f_i * (1.0 + alpha_i * f_i)).reshape(-1) * (f_i.reshape(-1) > floor_i)
    wj_ = (f_j * (1.0 + alpha_j * f_j)).reshape(-1) * (f_j.reshape(-1) > floor_j)
    if phi_i is not None:
        pgi = (grad_v(grid, phi_i) / m_i).reshape(d, -1)
        pgj = (grad_v(grid, phi_j) / m_j).reshape(d, -1)

    wk = 0.0
    dis = 0.0
    for ka in range(npts):
        if wi_[ka] == 0.0:
            continue
        va = nodes[ka]
        for kb in range(npts):
            if ka == kb or wj_[kb] == 0.0:
                continue
            u = va - nodes[kb]
            r = float(np.linalg.norm(u))
            a_r = r * r * float(kernel.radial(np.asarray(r))) / m_i
            if a_r == 0.0:
                continue
            diff = gi[:, ka] - gj[:, kb]
            proj = diff - (u @ diff) / (r * r) * u
            # symmetric pair strength m_i * A_ij = r^2 * radial(r)
            wgt = 0.5 * cell * cell * (m_i * a_r) * wi_[ka] * wj_[kb]
            dis += wgt * (proj @ diff)
            if phi_i is not None:
                dphi = pgi[:, ka] - pgj[:, kb]
                wk -= wgt * (proj @ dphi)
    return wk, dis
