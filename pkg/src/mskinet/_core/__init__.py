"""Backend selection for the collision quadrature kernels.

Two interchangeable implementations of one contract: a compiled d=2 kernel
(Cython, built at install time) and a dimension-generic numpy fallback.
The compiled kernel is picked at import when present; `set_backend` can
force either, and `MSKINET_BACKEND=python|compiled` in the environment
overrides the default at import time.  Analytic test-function quadrature
always runs through the numpy path (it calls back into Python anyway).
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback
from .tables import TABLES, PairTables, build_pair_tables

try:
    from . import _collide
except ImportError:          # pure-python install
    _collide = None

__all__ = ["have_compiled", "active_backend", "set_backend", "scatter_apply",
           "pair_quadrature", "weak_analytic_batch", "TABLES", "PairTables",
           "build_pair_tables"]

_DUMMY = np.zeros((1, 1))


def have_compiled() -> bool:
    return _collide is not None


_backend = "compiled" if _collide is not None else "python"
_env = os.environ.get("MSKINET_BACKEND", "").strip().lower()
if _env in ("python", "compiled"):
    if _env == "compiled" and _collide is None:
        raise ImportError(
            "MSKINET_BACKEND=compiled but the compiled kernel is not built")
    _backend = _env


def active_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select 'compiled', 'python', or 'auto'; returns the active choice."""
    global _backend
    if name == "auto":
        _backend = "compiled" if _collide is not None else "python"
    elif name == "compiled":
        if _collide is None:
            raise RuntimeError("compiled kernel is not available")
        _backend = "compiled"
    elif name == "python":
        _backend = "python"
    else:
        raise ValueError("backend must be 'auto', 'compiled', or 'python'")
    return _backend


def _use_compiled(tabs: PairTables) -> bool:
    return _backend == "compiled" and tabs.d == 2 and _collide is not None


def scatter_apply(mode, fi, fj, alpha_i, alpha_j, xi_i, xi_j, tabs, scale,
                  deposit_j, floor_prod, q_i, q_j):
    """Dispatch one table sweep of the scatter form (accumulates in place)."""
    if _use_compiled(tabs):
        buf = np.zeros(6 * (tabs.n + 8))
        _collide.scatter_apply_2d(
            mode, fi, fj, float(alpha_i), float(alpha_j),
            xi_i if xi_i is not None else _DUMMY,
            xi_j if xi_j is not None else _DUMMY,
            tabs.ints, tabs.wb, tabs.wi, tabs.wj,
            float(scale), bool(deposit_j), float(floor_prod), q_i, q_j, buf)
    else:
        fallback.scatter_apply(mode, fi, fj, alpha_i, alpha_j, xi_i, xi_j,
                               tabs, scale, deposit_j, floor_prod, q_i, q_j)


def pair_quadrature(mode, fi, fj, alpha_i, alpha_j, xi_i, xi_j, tabs, scale2,
                    floor_prod, phi_i=None, phi_j=None, phi_fn_i=None,
                    phi_fn_j=None, axes=None):
    """Dispatch one table sweep of the bilinear/entropy quadrature."""
    if phi_fn_i is None and _use_compiled(tabs):
        buf = np.zeros(8 * (tabs.n + 8))
        has_phi = phi_i is not None
        return _collide.pair_quadrature_2d(
            mode, fi, fj, float(alpha_i), float(alpha_j),
            xi_i if xi_i is not None else _DUMMY,
            xi_j if xi_j is not None else _DUMMY,
            has_phi,
            phi_i if has_phi else _DUMMY,
            phi_j if has_phi else _DUMMY,
            tabs.ints, tabs.wb, tabs.wi, tabs.wj,
            float(scale2), float(floor_prod), buf)
    return fallback.pair_quadrature(mode, fi, fj, alpha_i, alpha_j, xi_i,
                                    xi_j, tabs, scale2, floor_prod,
                                    phi_i=phi_i, phi_j=phi_j,
                                    phi_fn_i=phi_fn_i, phi_fn_j=phi_fn_j,
                                    axes=axes)


def weak_analytic_batch(fi, fj, alpha_i, alpha_j, tabs, scale2,
                        fns_i, fns_j, axes):
    """Batched analytic weak pairing (numpy path by design; see module doc)."""
    return fallback.weak_analytic_batch(fi, fj, alpha_i, alpha_j, tabs,
                                        scale2, fns_i, fns_j, axes)
