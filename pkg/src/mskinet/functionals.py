"""Mass, momentum, energy, and entropy functionals of mixture states.

The entropy density of one species with statistics flag alpha is

    h(f) = f log f - (1/alpha) tau log tau,   tau = 1 + alpha f   (alpha != 0)
    h(f) = f log f - f                                            (alpha == 0)

with the 0 log 0 = 0 convention.  This is the antiderivative of
log(f / tau), so the entropy gradient used by the collision operators is
exactly h'(f) for every statistics choice:

    alpha = +1:  h = f log f - (1+f) log(1+f)
    alpha = -1:  h = f log f + (1-f) log(1-f)
    alpha =  0:  h = f log f - f.

Fermi values outside [0, 1] have no finite entropy; they produce the +inf
sentinel rather than an exception so that audits can report the state.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import xlogy

from .boltzmann import state_floor
from .grid import VelocityGrid
from .species import SpeciesSet

__all__ = [
    "entropy_density",
    "entropy_H",
    "energy_E",
    "momentum_M",
    "mass_per_species",
    "mixture_moments",
    "dH_fields",
]


def entropy_density(f, statistics: int):
    """Pointwise entropy density h(f); +inf where a Fermi value leaves [0, 1].

    Nonnegative input is required for Bose/classical statistics (checked).
    """
    f = np.asarray(f, dtype=float)
    if statistics == -1:
        bad = (f < 0.0) | (f > 1.0)
        fc = np.clip(f, 0.0, 1.0)
        h = xlogy(fc, fc) + xlogy(1.0 - fc, 1.0 - fc)
        return np.where(bad, np.inf, h)
    if np.any(f < 0.0):
        node = np.unravel_index(int(np.argmin(f)), f.shape)
        raise ValueError(f"negative density at node {node}")
    if statistics == 1:
        return xlogy(f, f) - xlogy(1.0 + f, 1.0 + f)
    return xlogy(f, f) - f


def entropy_H(fs, species: SpeciesSet, grid: VelocityGrid) -> float:
    """Total entropy: cell volume times the summed entropy densities."""
    cell = grid.cell_volume()
    total = 0.0
    for f, sp in zip(fs, species):
        val = float(np.sum(entropy_density(f, sp.statistics)))
        if math.isinf(val) or math.isnan(val):
            return math.inf
        total += cell * val
    return total


def energy_E(fs, species: SpeciesSet, grid: VelocityGrid) -> float:
    """Total kinetic energy sum_s (m_s / 2) h^d sum |v|^2 f_s."""
    cell = grid.cell_volume()
    sq = grid.speed_sq()
    return float(sum(cell * 0.5 * sp.mass * np.sum(sq * f)
                     for f, sp in zip(fs, species)))


def momentum_M(fs, species: SpeciesSet, grid: VelocityGrid) -> np.ndarray:
    """Total momentum sum_s m_s h^d sum v f_s, shape (d,)."""
    cell = grid.cell_volume()
    coords = grid.coords()
    out = np.zeros(grid.d)
    for f, sp in zip(fs, species):
        for ax in range(grid.d):
            out[ax] += cell * sp.mass * float(np.sum(coords[ax] * f))
    return out


def mass_per_species(fs, grid: VelocityGrid) -> np.ndarray:
    """Number mass h^d sum f_s of every species, shape (N,)."""
    cell = grid.cell_volume()
    return np.array([cell * float(np.sum(f)) for f in fs])


def mixture_moments(fs, species: SpeciesSet, grid: VelocityGrid):
    """(per-species mass, total momentum, total energy) of a mixture state."""
    if len(fs) != len(species):
        raise ValueError(f"state has {len(fs)} fields for {len(species)} species")
    for s, f in enumerate(fs):
        if np.shape(f) != grid.shape:
            raise ValueError(
                f"species {s} field shape {np.shape(f)} does not match grid "
                f"{grid.shape}")
    return (mass_per_species(fs, grid), momentum_M(fs, species, grid),
            energy_E(fs, species, grid))


def dH_fields(fs, species: SpeciesSet, grid: VelocityGrid, floors=None):
    """Entropy gradients log(f / tau) evaluated on floored densities.

    Cells below the positivity floor are evaluated at the floor (the same
    convention the mobility weight uses, so M applied to -dH matches the
    collision term on the admitted set).  Fermi densities are also kept a
    floor's distance below 1 to keep tau positive.
    """
    if floors is None:
        floors = [state_floor(f) for f in fs]
    out = []
    for f, sp, fl in zip(fs, species, floors):
        fl = fl if fl > 0.0 else 1e-300
        if sp.statistics == -1:
            fc = np.clip(f, fl, 1.0 - fl)
        else:
            fc = np.maximum(f, fl)
        out.append(np.log(fc / (1.0 + sp.statistics * fc)))
    return out
