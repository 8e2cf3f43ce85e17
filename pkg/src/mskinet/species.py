"""Species data, binary collision geometry, and collision kernels.

A mixture is a list of species, each carrying a mass m > 0 and a statistics
flag alpha in {+1, 0, -1} (bosons, classical particles, fermions).  The
occupancy factor

    tau(f) = 1 + alpha * f

multiplies gain/loss products everywhere; for fermions it enforces exclusion
(f must stay in [0, 1] for tau >= 0).

Binary collisions between species i and j exchange momentum along a unit
vector omega on the sphere:

    v_i' = (m_i v_i + m_j v_j + m_j |v_i - v_j| omega) / (m_i + m_j)
    v_j' = (m_i v_i + m_j v_j - m_i |v_i - v_j| omega) / (m_i + m_j)

which conserves momentum m_i v_i + m_j v_j, kinetic energy
m_i |v_i|^2 + m_j |v_j|^2, and the relative speed |v_i - v_j| exactly.

Collision rates factor into a radial and an angular part,

    B_ij(r, theta) = alpha_ij(r) * b_ij(theta),

where r is the relative speed and theta = arccos((v_i - v_j) . omega / r)
is the deviation angle.  The angular part is supported in [0, pi/2].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BOSE",
    "CLASSICAL",
    "FERMI",
    "Species",
    "SpeciesSet",
    "AngularPart",
    "ConstantAngular",
    "GrazingAngular",
    "PairKernel",
    "make_kernel",
    "GrazingFamily",
    "post_collision",
    "deviation_angle",
    "kernel_B",
    "kernel_A",
    "assumption_check",
    "sphere_area",
]

BOSE = 1
CLASSICAL = 0
FERMI = -1

_VALID_STATISTICS = (BOSE, CLASSICAL, FERMI)


def sphere_area(k: int) -> float:
    """Surface measure |S^k| of the unit k-sphere; |S^0| = 2 (two points)."""
    if k < 0:
        raise ValueError("sphere dimension must be >= 0")
    if k == 0:
        return 2.0
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


@dataclass(frozen=True)
class Species:
    """One particle species: mass and quantum statistics flag."""

    mass: float
    statistics: int = CLASSICAL

    def __post_init__(self):
        if not (self.mass > 0.0) or not math.isfinite(self.mass):
            raise ValueError(f"species mass must be positive and finite, got {self.mass}")
        if self.statistics not in _VALID_STATISTICS:
            raise ValueError(
                f"statistics must be one of {{+1, 0, -1}}, got {self.statistics}"
            )

    def tau(self, f):
        """Occupancy factor 1 + alpha*f (elementwise)."""
        if self.statistics == CLASSICAL:
            return np.ones_like(np.asarray(f, dtype=float))
        return 1.0 + self.statistics * np.asarray(f, dtype=float)


@dataclass(frozen=True)
class SpeciesSet:
    """An ordered list of species."""

    species: tuple

    def __post_init__(self):
        if len(self.species) == 0:
            raise ValueError("species set must not be empty")
        for s in self.species:
            if not isinstance(s, Species):
                raise TypeError("SpeciesSet entries must be Species")

    @classmethod
    def create(cls, masses, statistics) -> "SpeciesSet":
        masses = list(masses)
        statistics = list(statistics)
        if len(masses) != len(statistics):
            raise ValueError("masses and statistics must have equal length")
        return cls(tuple(Species(m, a) for m, a in zip(masses, statistics)))

    def __len__(self):
        return len(self.species)

    def __getitem__(self, i) -> Species:
        return self.species[i]

    def __iter__(self):
        return iter(self.species)

    @property
    def masses(self):
        return np.array([s.mass for s in self.species])

    @property
    def alphas(self):
        return np.array([s.statistics for s in self.species], dtype=int)


# ---------------------------------------------------------------------------
# collision geometry
# ---------------------------------------------------------------------------

def post_collision(v_i, v_j, m_i: float, m_j: float, omega):
    """Post-collision velocities for masses (m_i, m_j) and unit vector omega.

    Accepts broadcastable arrays with trailing axis of length d.  Returns
    (v_i', v_j').  Momentum, total kinetic energy and the relative speed are
    conserved exactly (up to roundoff); omega must be unit length.
    """
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if m_i <= 0.0 or m_j <= 0.0:
        raise ValueError("masses must be positive")
    nrm = np.sum(omega * omega, axis=-1)
    if not np.allclose(nrm, 1.0, atol=1e-9):
        raise ValueError("omega must be a unit vector")
    msum = m_i + m_j
    rel = v_i - v_j
    r = np.sqrt(np.sum(rel * rel, axis=-1))[..., None]
    center = (m_i * v_i + m_j * v_j) / msum
    v_ip = center + (m_j / msum) * r * omega
    v_jp = center - (m_i / msum) * r * omega
    return v_ip, v_jp


def deviation_angle(v_i, v_j, omega):
    """Angle between the relative velocity v_i - v_j and omega, in [0, pi].

    The cosine is clamped to [-1, 1] before arccos so roundoff at the poles
    cannot produce NaN, and cosines within 1e-12 of -1, 0, +1 are taken AS
    those values: aligned, perpendicular and reversed geometries must give
    exactly 0, pi/2, pi so that support-boundary decisions (theta <= pi/2)
    do not depend on rounding noise.  Coincident velocities leave the angle
    undefined.
    """
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    omega = np.asarray(omega, dtype=float)
    rel = v_i - v_j
    r = np.sqrt(np.sum(rel * rel, axis=-1))
    if np.any(r == 0.0):
        raise ValueError("deviation angle undefined for coincident velocities")
    c = np.clip(np.sum(rel * omega, axis=-1) / r, -1.0, 1.0)
    c = snap_cosine(c)
    return np.arccos(c)


def snap_cosine(c):
    """Snap cosines within 1e-12 of the exact poles and equator."""
    c = np.where(np.abs(c) <= 1e-12, 0.0, c)
    c = np.where(np.abs(c - 1.0) <= 1e-12, 1.0, c)
    c = np.where(np.abs(c + 1.0) <= 1e-12, -1.0, c)
    return c


# ---------------------------------------------------------------------------
# angular parts
# ---------------------------------------------------------------------------

class AngularPart:
    """Angular collision rate b(theta), supported inside [0, pi/2].

    Subclasses implement `_eval(theta)` on their support; outside
    [0, support_max] the rate is zero.
    """

    support_max: float = math.pi / 2.0

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        mask = (theta >= 0.0) & (theta <= self.support_max)
        if np.any(mask):
            out[mask] = self._eval(theta[mask])
        return out if out.ndim else float(out)

    def _eval(self, theta):
        raise NotImplementedError


class ConstantAngular(AngularPart):
    """b(theta) = const on [0, pi/2]."""

    def __init__(self, value: float):
        if value < 0.0:
            raise ValueError("angular rate must be nonnegative")
        self.value = float(value)

    def _eval(self, theta):
        return np.full_like(theta, self.value)


class CallableAngular(AngularPart):
    """Wrap a user callable; values outside [0, pi/2] are dropped to zero.

    A construction-time probe warns if the callable is nonzero outside the
    quarter range (that mass is discarded).
    """

    def __init__(self, func, support_max: float = math.pi / 2.0):
        if support_max > math.pi / 2.0 + 1e-15:
            warnings.warn(
                "angular support beyond pi/2 is truncated to zero", stacklevel=2
            )
            support_max = math.pi / 2.0
        self.func = func
        self.support_max = float(support_max)
        probe = np.asarray(func(np.array([math.pi / 2 + 0.2, 2.5])), dtype=float)
        if np.any(np.abs(probe) > 0.0):
            warnings.warn(
                "angular rate is nonzero outside [0, pi/2]; that part is ignored",
                stacklevel=2,
            )

    def _eval(self, theta):
        return np.maximum(np.asarray(self.func(theta), dtype=float), 0.0)


class GrazingAngular(AngularPart):
    """Concentrated angular rate b^eps built from a base density.

    Given a base density beta on [0, pi/2] and eps in (0, 1],

        beta^eps(theta) = (pi/eps)^3 * beta(pi*theta/eps),
        b^eps(theta)    = beta^eps(theta) / sin(theta)^(d-2),

    supported in [0, eps/2].  The scaling keeps the second angular moment
    of beta^eps equal to that of beta while the total mass grows like
    (pi/eps)^2, which concentrates collisions at vanishing deviation angles.
    """

    def __init__(self, base_beta, eps: float, d: int):
        if not (0.0 < eps <= 1.0):
            raise ValueError(f"eps must lie in (0, 1], got {eps}")
        if d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        self.base_beta = base_beta
        self.eps = float(eps)
        self.d = int(d)
        self.support_max = eps / 2.0

    def _eval(self, theta):
        scale = (math.pi / self.eps) ** 3
        vals = scale * np.asarray(self.base_beta(math.pi * theta / self.eps), dtype=float)
        if self.d == 3:
            s = np.sin(theta)
            vals = np.where(s > 0.0, vals / np.where(s > 0.0, s, 1.0), 0.0)
        return vals


# ---------------------------------------------------------------------------
# pair kernels
# ---------------------------------------------------------------------------

_RADIAL_KINDS = ("maxwell", "power-law", "tabulated")


@dataclass(frozen=True)
class PairKernel:
    """Factorized collision rate for one species pair.

    radial_kind selects alpha_ij(r):
      maxwell    alpha(r) = c                     params: c
      power-law  alpha(r) = c * r^gamma           params: c, gamma
      tabulated  piecewise-linear in r            params: r_table, a_table
                 (values clamped to the end values outside the table range)

    The angular part is an AngularPart instance; the full rate is
    B(r, theta) = alpha(r) * b(theta).  The same object serves both
    orderings of the pair (the rate is symmetric in the two species).
    """

    radial_kind: str
    c: float = 1.0
    gamma: float = 0.0
    r_table: tuple = ()
    a_table: tuple = ()
    angular: AngularPart = field(default_factory=lambda: ConstantAngular(1.0))

    def __post_init__(self):
        if self.radial_kind not in _RADIAL_KINDS:
            raise ValueError(
                f"unknown radial kind {self.radial_kind!r}, expected one of {_RADIAL_KINDS}"
            )
        if self.radial_kind == "tabulated":
            r = np.asarray(self.r_table, dtype=float)
            a = np.asarray(self.a_table, dtype=float)
            if r.size < 2 or r.size != a.size:
                raise ValueError("tabulated kernel needs matching r/alpha tables, >= 2 rows")
            if np.any(np.diff(r) <= 0.0):
                raise ValueError("tabulated kernel radii must be strictly increasing")
            if np.any(r < 0.0) or np.any(a < 0.0):
                raise ValueError("tabulated kernel entries must be nonnegative")
        elif self.c < 0.0:
            raise ValueError("radial strength c must be nonnegative")

    def radial(self, r):
        """alpha_ij(r) >= 0 for r >= 0."""
        r = np.asarray(r, dtype=float)
        if self.radial_kind == "maxwell":
            out = np.full_like(r, self.c)
        elif self.radial_kind == "power-law":
            if self.gamma == 0.0:
                out = np.full_like(r, self.c)
            else:
                # r = 0 maps to 0 for growing laws and is excluded for decaying ones
                out = self.c * np.where(r > 0.0, r, 1.0) ** self.gamma
                out = np.where(r > 0.0, out, 0.0)
        else:
            out = np.interp(r, self.r_table, self.a_table)
        return out if out.ndim else float(out)

    def radial_log_slope(self, r):
        """r * |alpha'(r)| / alpha(r), the grazing-kernel hypothesis quantity.

        Closed form for maxwell (0) and power-law (|gamma|); central
        differences with step 1e-6 * max(r, 1) for tabulated kernels.
        """
        r = np.asarray(r, dtype=float)
        if self.radial_kind == "maxwell":
            return np.zeros_like(r)
        if self.radial_kind == "power-law":
            return np.full_like(r, abs(self.gamma))
        h = 1e-6 * np.maximum(r, 1.0)
        da = (self.radial(r + h) - self.radial(r - h)) / (2.0 * h)
        a = np.asarray(self.radial(r), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(a > 0.0, r * np.abs(da) / np.where(a > 0.0, a, 1.0), np.inf)
        return out

    def B(self, r, theta):
        """Full rate alpha(r) * b(theta); zero outside the angular support."""
        if np.any(np.asarray(r) < 0.0):
            raise ValueError("relative speed must be nonnegative")
        return np.asarray(self.radial(r), dtype=float) * np.asarray(
            self.angular(theta), dtype=float
        )

    def with_angular(self, angular: AngularPart) -> "PairKernel":
        return PairKernel(
            radial_kind=self.radial_kind,
            c=self.c,
            gamma=self.gamma,
            r_table=self.r_table,
            a_table=self.a_table,
            angular=angular,
        )


def make_kernel(kind: str, *, c: float = 1.0, gamma: float = 0.0,
                b_const: float = 1.0, r_table=(), a_table=(),
                angular: AngularPart | None = None) -> PairKernel:
    """Convenience constructor: radial kind + constant angular part by default."""
    if angular is None:
        angular = ConstantAngular(b_const)
    return PairKernel(kind, c=c, gamma=gamma, r_table=tuple(r_table),
                      a_table=tuple(a_table), angular=angular)


def kernel_B(kernel: PairKernel, v_i, v_j, omega):
    """Collision rate B(|v_i - v_j|, theta) at given velocities and omega."""
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    rel = v_i - v_j
    r = np.sqrt(np.sum(rel * rel, axis=-1))
    theta = deviation_angle(v_i, v_j, omega)
    return kernel.B(r, theta)


def kernel_A(kernel: PairKernel, r, m_i: float):
    """Diffusion strength A_ij(r) = r^2 alpha_ij(r) / m_i of the grazing limit.

    Satisfies m_i A_ij = m_j A_ji because alpha is symmetric in the pair.
    """
    if m_i <= 0.0:
        raise ValueError("mass must be positive")
    r = np.asarray(r, dtype=float)
    return r * r * np.asarray(kernel.radial(r), dtype=float) / m_i


# ---------------------------------------------------------------------------
# grazing family
# ---------------------------------------------------------------------------

def _default_base_beta(u):
    """Smooth bump on [0, pi/2], zero at both ends."""
    u = np.asarray(u, dtype=float)
    out = u * u * (math.pi / 2.0 - u) ** 2
    return np.where((u >= 0.0) & (u <= math.pi / 2.0), out, 0.0)


class GrazingFamily:
    """Family of concentrating angular rates with a pinned second moment.

    The base angular density beta(theta) = sin(theta)^(d-2) b(theta) is
    rescaled at construction so that

        int_0^{pi/2} theta^2 beta(theta) dtheta
            = 2(d-1)/|S^{d-2}| * (m_i + m_j)^2 / (m_i^2 m_j^2),

    the normalization under which the concentrated operators converge to the
    diffusive one with A_ij(r) = r^2 alpha_ij(r)/m_i and no extra constant.
    scaled(eps) returns the angular part b^eps; the radial part is shared.
    """

    def __init__(self, radial: PairKernel, m_i: float, m_j: float, d: int,
                 base_beta=None):
        if d not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if m_i <= 0.0 or m_j <= 0.0:
            raise ValueError("masses must be positive")
        self.radial_kernel = radial
        self.m_i = float(m_i)
        self.m_j = float(m_j)
        self.d = int(d)
        raw = base_beta if base_beta is not None else _default_base_beta
        target = self.moment_target(m_i, m_j, d)
        raw_moment = self._second_moment(raw)
        if not raw_moment > 0.0:
            raise ValueError("base angular density has vanishing second moment")
        scale = target / raw_moment
        self.base_beta = lambda u, _raw=raw, _s=scale: _s * np.asarray(_raw(u), dtype=float)
        self._moment = target

    @staticmethod
    def moment_target(m_i: float, m_j: float, d: int) -> float:
        return (2.0 * (d - 1) / sphere_area(d - 2)
                * (m_i + m_j) ** 2 / (m_i ** 2 * m_j ** 2))

    @staticmethod
    def _second_moment(beta, npts: int = 400) -> float:
        # Gauss-Legendre on [0, pi/2]; the integrand is smooth for the bases used here
        x, w = np.polynomial.legendre.leggauss(npts)
        u = 0.25 * math.pi * (x + 1.0)
        return float(0.25 * math.pi * np.sum(w * u * u * np.asarray(beta(u), dtype=float)))

    def second_moment(self, eps: float | None = None) -> float:
        """Second angular moment of beta (eps-independent by construction)."""
        if eps is None:
            return self._second_moment(self.base_beta)
        scaled = lambda u: (math.pi / eps) ** 3 * np.asarray(
            self.base_beta(math.pi * u / eps), dtype=float)
        x, w = np.polynomial.legendre.leggauss(400)
        half = eps / 2.0
        u = 0.5 * half * (x + 1.0)
        return float(0.5 * half * np.sum(w * u * u * scaled(u)))

    def scaled(self, eps: float) -> GrazingAngular:
        """Angular part b^eps with support [0, eps/2]."""
        return GrazingAngular(self.base_beta, eps, self.d)

    def kernel(self, eps: float) -> PairKernel:
        """Full pair kernel alpha_ij(r) * b^eps(theta)."""
        return self.radial_kernel.with_angular(self.scaled(eps))

    def landau_strength(self, r, m_i: float | None = None):
        """The matching diffusive strength A_ij(r) for this family's radial part."""
        return kernel_A(self.radial_kernel, r, self.m_i if m_i is None else m_i)


def assumption_check(kernel: PairKernel, lambda_b: float, r_min: float = 1e-3,
                     r_max: float = 30.0, num: int = 500):
    """Check sup_r r|alpha'(r)|/alpha(r) <= 2 sqrt(lambda_b).

    Returns {"worst_ratio", "bound", "holds"}.  The sup is exact for maxwell
    and power-law radial parts; tabulated parts are scanned on a log grid with
    central differences.
    """
    if lambda_b < 0.0:
        raise ValueError("lambda_b must be nonnegative")
    bound = 2.0 * math.sqrt(lambda_b)
    if kernel.radial_kind == "maxwell":
        sup = 0.0
    elif kernel.radial_kind == "power-law":
        sup = abs(kernel.gamma)
    else:
        r = np.geomspace(max(r_min, 1e-12), r_max, num)
        sup = float(np.max(kernel.radial_log_slope(r)))
    return {"worst_ratio": sup, "bound": bound, "holds": bool(sup <= bound)}
