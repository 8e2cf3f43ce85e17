"""Fisher information, sphere jump/carre-du-champ operators, and audits.

The velocity-space functional is computed in the |grad f|^2 / f form (the
same value as |grad log f|^2 f in exact arithmetic, without taking logs of
small densities); cells at or below the positivity floor are excluded.

Sphere machinery lives on a uniform circle grid (d = 2, the certified
path) or a cell-centered latitude-longitude grid (d = 3, provided for
exploration; its polar differentiation is low order).  The jump operator

    (B f)(w) = int (f(w') - f(w)) b(w . w') dw'

annihilates constants identically by construction, and its weighted
integral vanishes to roundoff because the kernel matrix is symmetric.

The functional inequality audit compares

    LHS(f) = int Gamma2(log f, log f) f dw
    RHS(f) = int int |f - f'|^2 / (f + f') b(w . w') dw' dw

and the constant is estimated by minimizing LHS/RHS over random positive
even densities, then locally refining the worst sample.  The estimate is
an upper bound of the optimal constant; downstream audits use half of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boltzmann import kernel_for, state_floor
from .grid import VelocityGrid, grad_v
from .species import SpeciesSet, assumption_check

__all__ = [
    "fisher_I",
    "fisher_total",
    "CircleGrid",
    "LatLongGrid",
    "circle_derivative",
    "circle_laplacian",
    "sphere_B",
    "gamma_delta",
    "gamma_delta_defining",
    "gamma2",
    "lsi_gap",
    "sample_even_density",
    "estimate_lambda_b",
    "FisherReport",
    "monotonicity_audit",
]


# ----- velocity-space Fisher information --------------------------------

def fisher_I(f, grid: VelocityGrid, floor: float | None = None) -> float:
    """h^d sum of |grad f|^2 / max(f, floor) over cells with f > floor."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0.0):
        node = np.unravel_index(int(np.argmin(f)), f.shape)
        raise ValueError(f"negative density at node {node}")
    if floor is None:
        floor = state_floor(f)
    g = grad_v(grid, f)
    mask = f > floor
    denom = np.maximum(f, floor if floor > 0.0 else 1e-300)
    integrand = np.where(mask, np.sum(g * g, axis=0) / denom, 0.0)
    return grid.cell_volume() * float(np.sum(integrand))


def fisher_total(fs, grid: VelocityGrid) -> float:
    """Sum of per-species Fisher informations."""
    return float(sum(fisher_I(f, grid) for f in fs))


# ----- sphere grids -----------------------------------------------------

@dataclass(frozen=True)
class CircleGrid:
    """K uniform angles on the unit circle, node k at 2 pi k / K."""

    K: int

    def __post_init__(self):
        if self.K < 8 or self.K % 2 != 0:
            raise ValueError(f"K must be even and >= 8, got {self.K}")

    @property
    def theta(self):
        return 2.0 * math.pi * np.arange(self.K) / self.K

    @property
    def weights(self):
        return np.full(self.K, 2.0 * math.pi / self.K)

    def nodes(self):
        th = self.theta
        return np.stack([np.cos(th), np.sin(th)], axis=1)


@dataclass(frozen=True)
class LatLongGrid:
    """Cell-centered colatitude x uniform azimuth grid on S^2.

    theta_i = (i + 1/2) pi / n_theta keeps nodes off both poles; the
    product weights sin(theta) dtheta dphi integrate smooth functions at
    second order, which is all the exploratory d = 3 path promises.
    """

    n_theta: int
    n_phi: int

    def __post_init__(self):
        if self.n_theta < 8 or self.n_phi < 8:
            raise ValueError("latitude-longitude grid needs >= 8 nodes per axis")

    @property
    def theta(self):
        return (np.arange(self.n_theta) + 0.5) * math.pi / self.n_theta

    @property
    def phi(self):
        return 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def shape(self):
        return (self.n_theta, self.n_phi)

    @property
    def weights(self):
        dth = math.pi / self.n_theta
        dph = 2.0 * math.pi / self.n_phi
        w = np.sin(self.theta)[:, None] * dth * dph
        return np.broadcast_to(w, self.shape).copy()

    def nodes(self):
        th = self.theta[:, None]
        ph = self.phi[None, :]
        st = np.sin(th)
        out = np.empty(self.shape + (3,))
        out[..., 0] = st * np.cos(ph)
        out[..., 1] = st * np.sin(ph)
        out[..., 2] = np.cos(th) * np.ones_like(ph)
        return out


def _flat_nodes_weights(sgrid):
    if isinstance(sgrid, CircleGrid):
        return sgrid.nodes(), sgrid.weights
    return sgrid.nodes().reshape(-1, 3), sgrid.weights.reshape(-1)


# ----- circle spectral calculus -----------------------------------------

def _circle_modes(K: int):
    k = np.arange(K // 2 + 1, dtype=float)
    return k


def circle_derivative(sgrid: CircleGrid, f):
    """d/dtheta by Fourier differentiation (Nyquist mode dropped)."""
    f = np.asarray(f, dtype=float)
    K = sgrid.K
    fh = np.fft.rfft(f)
    ik = 1j * _circle_modes(K)
    ik[-1] = 0.0
    return np.fft.irfft(fh * ik, n=K)


def circle_laplacian(sgrid: CircleGrid, f):
    """d^2/dtheta^2 by Fourier differentiation."""
    f = np.asarray(f, dtype=float)
    K = sgrid.K
    fh = np.fft.rfft(f)
    k = _circle_modes(K)
    return np.fft.irfft(fh * (-(k * k)), n=K)


# ----- d = 3 polar calculus (exploratory) -------------------------------

def _theta_derivative(sgrid: LatLongGrid, f):
    # second-order central in the interior, one-sided at the polar rows
    dth = math.pi / sgrid.n_theta
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * dth)
    out[0] = (-1.5 * f[0] + 2.0 * f[1] - 0.5 * f[2]) / dth
    out[-1] = (1.5 * f[-1] - 2.0 * f[-2] + 0.5 * f[-3]) / dth
    return out


def _phi_derivative2(sgrid: LatLongGrid, f):
    fh = np.fft.rfft(f, axis=1)
    k = np.arange(fh.shape[1], dtype=float)
    return np.fft.irfft(fh * (-(k * k))[None, :], n=sgrid.n_phi, axis=1)


def _sphere_laplacian(sgrid: LatLongGrid, f):
    st = np.sin(sgrid.theta)[:, None]
    polar = _theta_derivative(sgrid, st * _theta_derivative(sgrid, f)) / st
    return polar + _phi_derivative2(sgrid, f) / (st * st)


# ----- jump operator and carre du champ ---------------------------------

def _kernel_matrix(sgrid, b):
    nodes, w = _flat_nodes_weights(sgrid)
    cosang = np.clip(nodes @ nodes.T, -1.0, 1.0)
    bm = np.asarray(b(cosang), dtype=float)
    if np.any(bm < 0.0):
        raise ValueError("angular rate b must be nonnegative")
    return bm, w


def sphere_B(sgrid, f, b):
    """Jump operator (B f)(w) = int (f(w') - f(w)) b(w . w') dw'.

    b is a callable of the inner product w . w' in [-1, 1].  Constants map
    to zero identically; the weighted integral of the output vanishes to
    roundoff by symmetry of the kernel matrix.
    """
    f = np.asarray(f, dtype=float)
    shape = f.shape
    bm, w = _kernel_matrix(sgrid, b)
    fv = f.reshape(-1)
    out = bm @ (w * fv) - fv * (bm @ w)
    return out.reshape(shape)


def gamma_delta(sgrid, f, g):
    """First carre du champ: the surface gradient product of f and g."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if isinstance(sgrid, CircleGrid):
        return circle_derivative(sgrid, f) * circle_derivative(sgrid, g)
    return gamma_delta_defining(sgrid, f, g)


def gamma_delta_defining(sgrid, f, g):
    """Same object through (Delta(fg) - Delta f g - f Delta g) / 2."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    lap = (circle_laplacian if isinstance(sgrid, CircleGrid)
           else _sphere_laplacian)
    return 0.5 * (lap(sgrid, f * g) - lap(sgrid, f) * g - f * lap(sgrid, g))


def gamma2(sgrid, f, g, b):
    """Mixed second carre du champ of the jump operator and the Laplacian.

    (B Gamma(f, g) - Gamma(B f, g) - Gamma(f, B g)) / 2, assembled from
    sphere_B and gamma_delta; bilinear and symmetric by construction.
    """
    gd = gamma_delta(sgrid, f, g)
    return 0.5 * (sphere_B(sgrid, gd, b)
                  - gamma_delta(sgrid, sphere_B(sgrid, f, b), g)
                  - gamma_delta(sgrid, f, sphere_B(sgrid, g, b)))


# ----- functional inequality --------------------------------------------

def _lsi_sides(sgrid, f, b):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0.0):
        raise ValueError("density must be strictly positive on the sphere")
    logf = np.log(f)
    g2 = gamma2(sgrid, logf, logf, b)
    _, w = _flat_nodes_weights(sgrid)
    lhs = float(np.sum(w * (g2 * f).reshape(-1)))
    bm, _ = _kernel_matrix(sgrid, b)
    fv = f.reshape(-1)
    diff = fv[:, None] - fv[None, :]
    quot = diff * diff / (fv[:, None] + fv[None, :])
    rhs = float(w @ (bm * quot) @ w)
    return lhs, rhs


def lsi_gap(sgrid, f, b, lam: float) -> float:
    """LHS - lam * RHS of the sphere inequality at the density f."""
    lhs, rhs = _lsi_sides(sgrid, f, b)
    return lhs - lam * rhs


def sample_even_density(sgrid: CircleGrid, rng: np.random.Generator,
                        k_max: int = 3, sigma: float = 0.6):
    """Positive even density exp(sum_k a_k cos 2k theta) on the circle."""
    coeffs = sigma * rng.standard_normal(k_max) / np.arange(1, k_max + 1)
    return _density_from_coeffs(sgrid, coeffs), coeffs


def _density_from_coeffs(sgrid: CircleGrid, coeffs):
    th = sgrid.theta
    expo = np.zeros(sgrid.K)
    for k, a in enumerate(coeffs, start=1):
        expo += a * np.cos(2.0 * k * th)
    return np.exp(expo)


def estimate_lambda_b(b, d: int = 2, n_samples: int = 200, K: int = 128,
                      seed: int = 7, k_max: int = 3,
                      descent_rounds: int = 4) -> float:
    """Estimate the inequality constant by sampled ratio minimization.

    Draws n_samples positive even circle densities, takes the smallest
    LHS/RHS ratio (samples with vanishing RHS are skipped), then runs a
    short coordinate descent on the worst sample's coefficients.  Returns
    an upper-bound estimate; callers wanting a safety margin halve it.
    """
    if d != 2:
        raise ValueError("constant estimation is provided on the circle only")
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100 for a usable estimate")
    sgrid = CircleGrid(K)
    rng = np.random.default_rng(seed)
    floor_rhs = 1e-12

    def ratio(coeffs):
        fdens = _density_from_coeffs(sgrid, coeffs)
        lhs, rhs = _lsi_sides(sgrid, fdens, b)
        if rhs <= floor_rhs:
            return None
        return lhs / rhs

    best = None
    best_coeffs = None
    for _ in range(n_samples):
        _, coeffs = sample_even_density(sgrid, rng, k_max=k_max)
        r = ratio(coeffs)
        if r is not None and (best is None or r < best):
            best = r
            best_coeffs = coeffs
    if best is None:
        raise ValueError(
            "degenerate sample family: every sampled density has a "
            "vanishing inequality right-hand side for this angular rate")

    step = 0.25
    coeffs = np.array(best_coeffs, dtype=float)
    for _ in range(descent_rounds):
        for k in range(len(coeffs)):
            for sign in (+1.0, -1.0):
                trial = coeffs.copy()
                trial[k] += sign * step
                r = ratio(trial)
                if r is not None and r < best:
                    best = r
                    coeffs = trial
        step *= 0.5
    return float(best)


# ----- monotonicity audit ----------------------------------------------

@dataclass
class FisherReport:
    """Fisher-information time series with violation bookkeeping."""

    times: list
    values: list
    tol_mono: float
    hypothesis_ok: bool
    hypothesis_note: str
    violations: int = 0
    max_violation: float = 0.0
    deltas: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,I,dI,violation\r\n")
            for k, (t, v) in enumerate(zip(self.times, self.values)):
                dI = self.deltas[k]
                flag = 1 if dI > self.tol_mono else 0
                fh.write(f"{t:.17g},{v:.17g},{dI:.17g},{flag}\r\n")


def monotonicity_audit(times, states, species: SpeciesSet,
                       grid: VelocityGrid, kernels,
                       lambda_b: float = 0.0) -> FisherReport:
    """Audit the Fisher information along a stored trajectory.

    Flags every step whose increase exceeds

        tol_mono = 1e-6 * I_0  +  5 h^2 * I_0

    (the h^2 allowance absorbs discretization transfer between cells; it
    is a convention of this artifact, not a statement of the underlying
    monotonicity result).  The radial-slope hypothesis is checked for
    every pair kernel against 2 sqrt(lambda_b); when it fails the report
    is marked not-expected and violations are informational.
    """
    times = list(times)
    if len(times) != len(states) or not times:
        raise ValueError("times and states must align and be nonempty")

    hyp_ok = True
    notes = []
    ns = len(species)
    for i in range(ns):
        for j in range(i, ns):
            kern = kernel_for(kernels, i, j)
            chk = assumption_check(kern, lambda_b)
            if not chk["holds"]:
                hyp_ok = False
                notes.append(
                    f"pair ({i},{j}): radial slope {chk['worst_ratio']:.3g} "
                    f"exceeds bound {chk['bound']:.3g}")
    note = ("hypothesis satisfied" if hyp_ok else
            "hypothesis not satisfied; monotonicity not expected ("
            + "; ".join(notes) + ")")

    values = [fisher_total(fs, grid) for fs in states]
    i0 = values[0]
    tol = 1e-6 * i0 + 5.0 * grid.h ** 2 * i0
    deltas = [0.0]
    violations = 0
    max_v = 0.0
    for k in range(1, len(values)):
        dI = values[k] - values[k - 1]
        deltas.append(dI)
        if dI > tol:
            violations += 1
            max_v = max(max_v, dI - tol)
    return FisherReport(times=times, values=values, tol_mono=tol,
                        hypothesis_ok=hyp_ok, hypothesis_note=note,
                        violations=violations, max_violation=max_v,
                        deltas=deltas)
