"""Velocity grids, discrete calculus, sphere quadrature, and field I/O.

The velocity domain is the cube [-L, L]^d sampled on a cell-centered uniform
lattice: n nodes per axis at v_k = -L + (k + 1/2) h with h = 2L/n.  Densities
are plain float64 arrays of shape (n,)*d; they are treated as 0 outside the
box, so L should be taken >= 6 thermal widths of the fastest species to keep
truncation below roundoff-sized tolerances.

Differentiation uses fourth-order central differences with one-sided stencils
on the two outermost layers, applied as a banded 1-D matrix along each axis.
The divergence is the negative transpose of the gradient, which makes
summation by parts exact and is what downstream operators rely on for their
conservation and symmetry identities.

Interpolation is separable 4-point cubic (Lagrange): exact for per-axis cubic
polynomials everywhere inside the box (stencil windows shift near the edge
instead of sampling phantom nodes), hard zero outside the box.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "VelocityGrid",
    "SphereQuadrature",
    "interpolate",
    "grad_v",
    "div_v",
    "moments",
    "equilibrium",
    "save_field",
    "load_field",
    "field_to_csv",
]


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centered lattice on [-L, L]^d."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not (self.L > 0.0) or not math.isfinite(self.L):
            raise ValueError(f"box half-width must be positive and finite, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def axis(self):
        """Node coordinates along one axis, shape (n,)."""
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    def coords(self):
        """List of d arrays of shape (n,)*d with node coordinates."""
        ax = self.axis
        return list(np.meshgrid(*([ax] * self.d), indexing="ij"))

    def nodes(self):
        """All node positions, shape (n^d, d)."""
        return np.stack([c.reshape(-1) for c in self.coords()], axis=1)

    def speed_sq(self):
        """|v|^2 at the nodes, shape (n,)*d."""
        out = np.zeros(self.shape)
        for c in self.coords():
            out += c * c
        return out

    def cell_volume(self) -> float:
        return self.h ** self.d

    # ----- banded differentiation matrix -------------------------------

    def diff_matrix(self) -> np.ndarray:
        """1-D differentiation matrix D, shape (n, n).

        Fourth-order central rows in the interior, fourth-order one-sided
        rows at the two outermost layers; exact on cubics everywhere.
        """
        n, h = self.n, self.h
        D = np.zeros((n, n))
        c = 1.0 / (12.0 * h)
        for i in range(2, n - 2):
            D[i, i - 2:i + 3] = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) * c
        D[0, 0:5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) * c
        D[1, 0:5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) * c
        D[n - 1, n - 5:n] = -D[0, 0:5][::-1]
        D[n - 2, n - 5:n] = -D[1, 0:5][::-1]
        return D

    def key(self):
        return (self.d, self.n, float(self.L))


_DIFF_CACHE: dict = {}


def _diff(grid: VelocityGrid) -> np.ndarray:
    D = _DIFF_CACHE.get(grid.key())
    if D is None:
        D = grid.diff_matrix()
        _DIFF_CACHE[grid.key()] = D
    return D


def _apply_axis(M: np.ndarray, f: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(M, f, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def grad_v(grid: VelocityGrid, f: np.ndarray) -> np.ndarray:
    """Gradient of a nodal field, shape (d,) + grid.shape."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    D = _diff(grid)
    return np.stack([_apply_axis(D, f, ax) for ax in range(grid.d)])


def div_v(grid: VelocityGrid, vec: np.ndarray) -> np.ndarray:
    """Divergence of a vector field of shape (d,) + grid.shape.

    Implemented as the negative adjoint of grad_v, so
    sum(phi * div_v(g)) == -sum(grad_v(phi) . g) holds to roundoff.
    """
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (grid.d,) + grid.shape:
        raise ValueError("vector field must have shape (d,) + grid.shape")
    DT = _diff(grid).T
    out = np.zeros(grid.shape)
    for ax in range(grid.d):
        out -= _apply_axis(DT, vec[ax], ax)
    return out


# ----- interpolation ----------------------------------------------------

def _lagrange_weights(s: np.ndarray):
    """Cubic Lagrange weights at local coordinate s over nodes {0,1,2,3}."""
    w0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0
    w1 = s * (s - 2.0) * (s - 3.0) / 2.0
    w2 = -s * (s - 1.0) * (s - 3.0) / 2.0
    w3 = s * (s - 1.0) * (s - 2.0) / 6.0
    return w0, w1, w2, w3


def interpolate(grid: VelocityGrid, f: np.ndarray, points: np.ndarray,
                nonneg: bool = False) -> np.ndarray:
    """Separable cubic interpolation of nodal values at arbitrary points.

    points has shape (..., d).  Returns 0 for points outside [-L, L]^d;
    near the box edge the 4-node window shifts inward so polynomial
    reproduction (up to cubics per axis) holds on the whole box.  With
    nonneg=True, values are clamped to >= 0 (cubic overshoot removal for
    use inside collision rates).
    """
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != grid.d:
        raise ValueError("points must have trailing axis of length d")
    flat = pts.reshape(-1, grid.d)
    n, h, L = grid.n, grid.h, grid.L

    inside = np.all(np.abs(flat) <= L, axis=1)
    t = (flat + L) / h - 0.5                     # node units: node k sits at t = k
    base = np.floor(t).astype(np.int64) - 1
    np.clip(base, 0, n - 4, out=base)
    s = t - base                                  # local coordinate in [0, 3]

    vals = np.zeros(flat.shape[0])
    idx = [base[:, ax][:, None] + np.arange(4)[None, :] for ax in range(grid.d)]
    wts = [np.stack(_lagrange_weights(s[:, ax]), axis=1) for ax in range(grid.d)]
    if grid.d == 2:
        sub = f[idx[0][:, :, None], idx[1][:, None, :]]
        vals = np.einsum("pij,pi,pj->p", sub, wts[0], wts[1])
    else:
        sub = f[idx[0][:, :, None, None], idx[1][:, None, :, None], idx[2][:, None, None, :]]
        vals = np.einsum("pijk,pi,pj,pk->p", sub, wts[0], wts[1], wts[2])
    vals = np.where(inside, vals, 0.0)
    if nonneg:
        np.maximum(vals, 0.0, out=vals)
    out = vals.reshape(pts.shape[:-1])
    return out if out.ndim else float(out)


# ----- moments and equilibrium -----------------------------------------

def moments(grid: VelocityGrid, f: np.ndarray, mass: float = 1.0) -> dict:
    """Number density, momentum, and kinetic energy of one species field.

    mass   = h^d sum f
    moment = mass-weighted h^d sum m v f        (length-d array)
    energy = h^d sum (m/2) |v|^2 f
    """
    f = np.asarray(f, dtype=float)
    hv = grid.cell_volume()
    mom = np.array([hv * mass * np.sum(c * f) for c in grid.coords()])
    return {
        "mass": hv * float(np.sum(f)),
        "momentum": mom,
        "energy": hv * 0.5 * mass * float(np.sum(grid.speed_sq() * f)),
    }


def equilibrium(grid: VelocityGrid, mass: float, statistics: int,
                mu: float, u, T: float) -> np.ndarray:
    """Equilibrium density f(v) = 1 / (exp((m|v-u|^2/2 - mu)/T) - alpha).

    alpha = +1 (Bose) requires the exponent to be positive at every node,
    otherwise the expression leaves (0, inf); the offending node is named.
    """
    if T <= 0.0:
        raise ValueError("temperature must be positive")
    if mass <= 0.0:
        raise ValueError("mass must be positive")
    if statistics not in (-1, 0, 1):
        raise ValueError("statistics must be one of {+1, 0, -1}")
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.d,):
        raise ValueError(f"drift velocity must have shape ({grid.d},)")
    sq = np.zeros(grid.shape)
    for ax, c in enumerate(grid.coords()):
        sq += (c - u[ax]) ** 2
    g = (0.5 * mass * sq - mu) / T
    if statistics == 1 and np.any(g <= 0.0):
        bad = np.unravel_index(int(np.argmin(g)), grid.shape)
        raise ValueError(
            f"Bose condensation regime not representable: exponent {g[bad]:.6g} "
            f"<= 0 at node {bad}; lower mu or shift u off the lattice"
        )
    # large exponents: 1/(e^g - alpha) ~ e^-g, avoids overflow
    big = g > 40.0
    out = np.empty(grid.shape)
    with np.errstate(over="ignore"):
        safe = np.where(big, 1.0, g)
        out = np.where(big, np.exp(-g), 1.0 / (np.exp(safe) - statistics))
    return out


# ----- sphere quadrature ------------------------------------------------

@dataclass(frozen=True)
class SphereQuadrature:
    """Quadrature nodes and weights on S^(d-1).

    d=2: K uniform angles, weight 2 pi / K each.
    d=3: K-node Gauss-Legendre in cos(theta) x 2K uniform azimuths.

    Both node sets are symmetric under omega -> -omega (K must be even),
    which the collision assembly uses to pair mirrored contributions.
    """

    d: int
    K: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.K < 8:
            raise ValueError(f"angular resolution K must be >= 8, got {self.K}")
        if self.K % 2 != 0:
            raise ValueError("K must be even (antipodal symmetry of the node set)")

    def nodes_weights(self):
        # build the smallest arc explicitly and fill the rest by exact
        # sign flips / coordinate swaps, so every node has its antipode in
        # the set bit-for-bit and (for 4 | K) the axis nodes are exactly
        # (+-1, 0), (0, +-1) rather than cos/sin of multiples of pi/2
        if self.d == 2:
            if self.K % 4 == 0:
                quarter = self.K // 4
                phi = 2.0 * math.pi * np.arange(quarter) / self.K
                c, s = np.cos(phi), np.sin(phi)
                nodes = np.concatenate([
                    np.stack([c, s], axis=1),
                    np.stack([-s, c], axis=1),
                    np.stack([-c, -s], axis=1),
                    np.stack([s, -c], axis=1),
                ], axis=0)
            else:
                half = self.K // 2
                phi = 2.0 * math.pi * np.arange(half) / self.K
                top = np.stack([np.cos(phi), np.sin(phi)], axis=1)
                nodes = np.concatenate([top, -top], axis=0)
            w = np.full(self.K, 2.0 * math.pi / self.K)
            return nodes, w
        x, glw = np.polynomial.legendre.leggauss(self.K)
        phi = 2.0 * math.pi * np.arange(2 * self.K) / (2 * self.K)
        st = np.sqrt(np.maximum(1.0 - x * x, 0.0))
        half = np.empty((self.K // 2 * 2 * self.K, 3))
        wh = np.empty(self.K // 2 * 2 * self.K)
        k = 0
        for p in range(self.K // 2):
            for q in range(2 * self.K):
                half[k] = (st[p] * math.cos(phi[q]), st[p] * math.sin(phi[q]),
                           x[p])
                wh[k] = glw[p] * math.pi / self.K
                k += 1
        nodes = np.concatenate([half, -half], axis=0)
        w = np.concatenate([wh, wh])
        return nodes, w

    @property
    def count(self) -> int:
        return self.K if self.d == 2 else 2 * self.K * self.K

    def key(self):
        return (self.d, self.K)


# ----- serialization ----------------------------------------------------

_MAGIC = "mskinet-field 1"


def save_field(path, grid: VelocityGrid, f: np.ndarray, species_index: int = 0,
               mass: float = 1.0, statistics: int = 0) -> None:
    """Write a field snapshot: short text header + little-endian float64 payload."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError("field shape does not match grid")
    header = (
        f"{_MAGIC}\n"
        f"d {grid.d}\n"
        f"n {grid.n}\n"
        f"L {grid.L!r}\n"
        f"species {species_index}\n"
        f"mass {mass!r}\n"
        f"statistics {statistics}\n"
        "end\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(f, dtype="<f8").tobytes())


def load_field(path):
    """Read a snapshot written by save_field; returns (grid, f, meta)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.index(b"\n")
    if blob[:nl].decode("ascii", "replace") != _MAGIC:
        raise ValueError(f"not a field snapshot: {path}")
    text = io.BytesIO(blob)
    meta = {}
    pos = 0
    for raw in text:
        pos += len(raw)
        line = raw.decode("ascii").strip()
        if line == _MAGIC:
            continue
        if line == "end":
            break
        k, v = line.split(None, 1)
        meta[k] = v
    grid = VelocityGrid(int(meta["d"]), int(meta["n"]), float(meta["L"]))
    payload = np.frombuffer(blob[pos:], dtype="<f8")
    if payload.size != grid.size:
        raise ValueError(
            f"payload has {payload.size} values, grid expects {grid.size}"
        )
    f = payload.astype(float).reshape(grid.shape)
    out_meta = {
        "species": int(meta["species"]),
        "mass": float(meta["mass"]),
        "statistics": int(meta["statistics"]),
    }
    return grid, f, out_meta


def field_to_csv(path, grid: VelocityGrid, f: np.ndarray) -> None:
    """Write node coordinates and values as CSV (meant for small grids)."""
    f = np.asarray(f, dtype=float)
    cols = [c.reshape(-1) for c in grid.coords()]
    names = ["vx", "vy", "vz"][: grid.d]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names + ["f"]) + "\r\n")
        for row in zip(*cols, f.reshape(-1)):
            fh.write(",".join(f"{x:.17g}" for x in row) + "\r\n")
