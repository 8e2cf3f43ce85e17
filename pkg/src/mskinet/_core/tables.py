"""Precomputed geometry tables for the discrete binary-collision quadrature.

The collision quadrature runs over (node pair, sphere node) tuples.  For a
uniform lattice everything that does not depend on the densities — the
kernel value, the post-collision interpolation stencils, and the admissible
node rectangle — depends on the pair only through the node-index difference
delta = a - b.  These tables enumerate all active (delta, sphere node)
combinations once per (grid, kernel, mass pair, quadrature) and are reused
for every operator application.

Entry layout (one row per active combination, deterministic delta-major,
sphere-node-minor order):

    ints  (nact, 5d) int32     : delta[d], lo[d], hi[d], bi[d], bj[d]
    wb    (nact,)    float64   : w_q * B(r, theta)
    wi/wj (nact, d, 4) float64 : per-axis cubic Lagrange weights for the
                                 primed points of slot 0 / slot 1
    sh0/sh1 (nact, d) float64  : physical displacement of each primed point
                                 from its unprimed node (analytic routes)

For node a (slot 0) and b = a - delta (slot 1), the interpolation stencil
of the slot-0 primed point starts at absolute index a + bi per axis, with
separable weights wi; analogously for slot 1 with bj, wj.  The admissible
a-rectangle [lo, hi] (per axis) keeps b on the grid and both stencils fully
inside the node range, so the pair gradient is polynomial-exact on every
admitted term and the conservation and symmetry identities of the operators
reduce to exact linear algebra.

A combination is active when the kernel value is positive and the rectangle
is nonempty.  delta = 0 is always skipped (primed velocities coincide with
the originals and the bracket vanishes identically).
"""

from __future__ import annotations

import numpy as np

from ..grid import SphereQuadrature, VelocityGrid, _lagrange_weights
from ..species import snap_cosine

__all__ = ["PairTables", "build_pair_tables", "TableCache", "TABLES"]

_CHUNK = 512        # deltas per build chunk, bounds peak memory at large K
_SNAP = 1e-9        # lattice snap threshold for primed-point displacements


class PairTables:
    """Flat arrays describing all active quadrature combinations."""

    __slots__ = ("d", "n", "h", "cell", "halfspace", "ints", "wb", "wi", "wj",
                 "sh0", "sh1", "min_support")

    def __init__(self, d, n, h, halfspace, ints, wb, wi, wj, sh0, sh1,
                 min_support):
        self.d = d
        self.n = n
        self.h = h
        self.cell = h ** d
        self.halfspace = halfspace
        self.ints = ints
        self.wb = wb
        self.wi = wi
        self.wj = wj
        self.sh0 = sh0
        self.sh1 = sh1
        # smallest per-delta count of sphere nodes inside the angular
        # support, before the rectangle test; a resolution diagnostic
        self.min_support = min_support

    @property
    def n_entries(self) -> int:
        return self.wb.shape[0]


def _delta_list(n: int, d: int, halfspace: bool) -> np.ndarray:
    """All node-index differences, delta = 0 excluded, lexicographic order.

    With halfspace=True only the lexicographically positive half is kept
    (same-species layout; each entry then stands for itself and its mirror
    under swapping the pair and reflecting the sphere node).
    """
    rng = np.arange(-(n - 1), n)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    deltas = np.stack([g.reshape(-1) for g in grids], axis=1)
    deltas = deltas[np.any(deltas != 0, axis=1)]
    if halfspace:
        keep = np.zeros(deltas.shape[0], dtype=bool)
        decided = np.zeros(deltas.shape[0], dtype=bool)
        for ax in range(d):
            pos = ~decided & (deltas[:, ax] > 0)
            neg = ~decided & (deltas[:, ax] < 0)
            keep |= pos
            decided |= pos | neg
        deltas = deltas[keep]
    return deltas


def build_pair_tables(kernel, grid: VelocityGrid, squad: SphereQuadrature,
                      m_first: float, m_second: float,
                      halfspace: bool) -> PairTables:
    """Build tables for one ordered species slot assignment.

    Slot 0 carries mass m_first (node a), slot 1 carries m_second
    (node b = a - delta).  halfspace=True is the same-species layout.
    """
    if squad.d != grid.d:
        raise ValueError("sphere quadrature dimension does not match the grid")
    d, n, h = grid.d, grid.n, grid.h
    omega, w_omega = squad.nodes_weights()
    nq = omega.shape[0]
    msum = m_first + m_second

    deltas_all = _delta_list(n, d, halfspace)
    nd_all = deltas_all.shape[0]

    parts_ints, parts_wb, parts_wi, parts_wj = [], [], [], []
    parts_sh0, parts_sh1 = [], []
    min_support = nq

    for start in range(0, nd_all, _CHUNK):
        deltas = deltas_all[start:start + _CHUNK]
        u = deltas.astype(float) * h                       # (nd, d)
        r = np.sqrt(np.sum(u * u, axis=1))
        khat = u / r[:, None]

        # same pole/equator cosine snap as deviation_angle: admission at
        # the support boundary theta = pi/2 must not depend on rounding
        ct = snap_cosine(np.clip(khat @ omega.T, -1.0, 1.0))   # (nd, nq)
        theta = np.arccos(ct)
        rr = np.broadcast_to(r[:, None], theta.shape)
        bval = np.asarray(kernel.B(rr, theta), dtype=float)
        wb_full = bval * w_omega[None, :]

        in_support = np.asarray(kernel.angular(theta), dtype=float) > 0.0
        min_support = min(min_support, int(np.sum(in_support, axis=1).min()))

        # primed-point displacements: slot 0 moves by (m2/M)(r omega - u),
        # slot 1 by -(m1/M)(r omega - u)
        dv = r[:, None, None] * omega[None, :, :] - u[:, None, :]
        sh0 = (m_second / msum) * dv                       # (nd, nq, d)
        sh1 = -(m_first / msum) * dv
        s_i = sh0 / h
        s_j = sh1 / h

        # knife-edge rule: displacements within 1e-9 cells of an exact
        # lattice offset are taken AS that offset, so admission does not
        # depend on which side of an integer the rounding noise lands
        ri = np.round(s_i)
        rj = np.round(s_j)
        s_i = np.where(np.abs(s_i - ri) <= _SNAP, ri, s_i)
        s_j = np.where(np.abs(s_j - rj) <= _SNAP, rj, s_j)
        sh0 = s_i * h
        sh1 = s_j * h

        fi = np.floor(s_i).astype(np.int64)
        fj = np.floor(s_j).astype(np.int64)
        bi = fi - 1
        bj = fj - 1
        loc_i = s_i - fi + 1.0                             # local coord in [1, 2)
        loc_j = s_j - fj + 1.0

        dd = deltas[:, None, :]
        zero = np.zeros_like(fi)
        lo = np.maximum.reduce([zero, dd + zero, 1 - fi, 1 - fj + dd])
        hi = np.minimum.reduce([zero + (n - 1), (n - 1) + dd + zero,
                                (n - 3) - fi, (n - 3) - fj + dd])

        active = (wb_full > 0.0) & np.all(lo <= hi, axis=2)
        idx_d, idx_q = np.nonzero(active)                  # C-order: delta-major
        nact = idx_d.shape[0]
        if nact == 0:
            continue

        ints = np.empty((nact, 5 * d), dtype=np.int32)
        ints[:, 0:d] = deltas[idx_d]
        ints[:, d:2 * d] = lo[idx_d, idx_q]
        ints[:, 2 * d:3 * d] = hi[idx_d, idx_q]
        ints[:, 3 * d:4 * d] = bi[idx_d, idx_q]
        ints[:, 4 * d:5 * d] = bj[idx_d, idx_q]
        parts_ints.append(ints)
        parts_wb.append(wb_full[idx_d, idx_q])
        parts_wi.append(np.stack(_lagrange_weights(loc_i[idx_d, idx_q]), axis=2))
        parts_wj.append(np.stack(_lagrange_weights(loc_j[idx_d, idx_q]), axis=2))
        parts_sh0.append(sh0[idx_d, idx_q])
        parts_sh1.append(sh1[idx_d, idx_q])

    if parts_ints:
        ints = np.ascontiguousarray(np.concatenate(parts_ints, axis=0))
        wb = np.ascontiguousarray(np.concatenate(parts_wb, axis=0))
        wi = np.ascontiguousarray(np.concatenate(parts_wi, axis=0))
        wj = np.ascontiguousarray(np.concatenate(parts_wj, axis=0))
        sh0 = np.ascontiguousarray(np.concatenate(parts_sh0, axis=0))
        sh1 = np.ascontiguousarray(np.concatenate(parts_sh1, axis=0))
    else:
        ints = np.empty((0, 5 * d), dtype=np.int32)
        wb = np.empty((0,), dtype=float)
        wi = np.empty((0, d, 4), dtype=float)
        wj = np.empty((0, d, 4), dtype=float)
        sh0 = np.empty((0, d), dtype=float)
        sh1 = np.empty((0, d), dtype=float)

    return PairTables(d, n, h, halfspace, ints, wb, wi, wj, sh0, sh1,
                      min_support)


class TableCache:
    """Reuse tables across operator applications.

    Keyed by kernel identity (a strong reference is kept so the id stays
    valid), grid, quadrature, ordered mass pair, and layout; a fixed-size
    FIFO keeps memory bounded.
    """

    def __init__(self, capacity: int = 16):
        self.capacity = capacity
        self._store: dict = {}
        self._order: list = []

    def get(self, kernel, grid: VelocityGrid, squad: SphereQuadrature,
            m_first: float, m_second: float, halfspace: bool) -> PairTables:
        key = (id(kernel), grid.key(), squad.key(), float(m_first),
               float(m_second), bool(halfspace))
        hit = self._store.get(key)
        if hit is not None and hit[0] is kernel:
            return hit[1]
        tab = build_pair_tables(kernel, grid, squad, m_first, m_second,
                                halfspace)
        self._store[key] = (kernel, tab)
        self._order.append(key)
        while len(self._order) > self.capacity:
            old = self._order.pop(0)
            self._store.pop(old, None)
        return tab


TABLES = TableCache()
