"""Velocity grid calculus: layout, interpolation, moments, sphere quadrature, I/O."""

import math

import numpy as np
import pytest

from mskinet.functionals import mixture_moments
from mskinet.grid import (SphereQuadrature, VelocityGrid, equilibrium,
                          field_to_csv, grad_v, div_v, interpolate, load_field,
                          moments, save_field)
from mskinet.species import SpeciesSet


# ----- construction and layout -----------------------------------------

def test_grid_rejects_bad_parameters():
    with pytest.raises(ValueError):
        VelocityGrid(2, 9, 5.0)          # odd n
    with pytest.raises(ValueError):
        VelocityGrid(2, 4, 2.0)          # below the minimum resolution
    with pytest.raises(ValueError):
        VelocityGrid(4, 12, 5.0)
    with pytest.raises(ValueError):
        VelocityGrid(2, 12, 0.0)
    with pytest.raises(ValueError):
        VelocityGrid(2, 12, math.inf)


def test_grid_node_layout_unit_spacing():
    g = VelocityGrid(2, 8, 4.0)
    assert g.h == 1.0
    np.testing.assert_allclose(
        g.axis, [-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5], rtol=0, atol=0)


def test_grid_node_formula_recomputed():
    g = VelocityGrid(2, 12, 5.0)
    h = 2.0 * 5.0 / 12
    expected = np.array([-5.0 + (k + 0.5) * h for k in range(12)])
    np.testing.assert_allclose(g.axis, expected, rtol=0, atol=1e-15)
    assert g.h == pytest.approx(h, rel=1e-15)


def test_grid_counts_3d():
    g = VelocityGrid(3, 8, 4.0)
    assert g.size == 512
    assert g.shape == (8, 8, 8)
    assert g.nodes().shape == (512, 3)
    assert g.cell_volume() == pytest.approx(1.0)


def test_speed_sq_matches_coords():
    g = VelocityGrid(2, 12, 5.0)
    X, Y = g.coords()
    np.testing.assert_allclose(g.speed_sq(), X * X + Y * Y, rtol=1e-15)


# ----- differentiation --------------------------------------------------

def test_diff_matrix_exact_on_cubics():
    g = VelocityGrid(2, 12, 5.0)
    D = g.diff_matrix()
    v = g.axis
    p = 2.0 * v**3 - 0.5 * v**2 + 3.0 * v - 1.0
    dp = 6.0 * v**2 - v + 3.0
    np.testing.assert_allclose(D @ p, dp, rtol=0, atol=1e-11)


def test_grad_constant_is_zero():
    g = VelocityGrid(2, 12, 5.0)
    gr = grad_v(g, np.full(g.shape, 3.7))
    assert np.max(np.abs(gr)) < 1e-13


def test_grad_of_half_speed_sq_is_velocity():
    g = VelocityGrid(2, 12, 5.0)
    gr = grad_v(g, 0.5 * g.speed_sq())
    X, Y = g.coords()
    np.testing.assert_allclose(gr[0], X, rtol=0, atol=1e-12)
    np.testing.assert_allclose(gr[1], Y, rtol=0, atol=1e-12)


def test_grad_affine_exact():
    g = VelocityGrid(3, 8, 3.0)
    X, Y, Z = g.coords()
    f = 1.5 * X - 0.25 * Y + 4.0 * Z + 2.0
    gr = grad_v(g, f)
    assert np.max(np.abs(gr[0] - 1.5)) < 1e-12
    assert np.max(np.abs(gr[1] + 0.25)) < 1e-12
    assert np.max(np.abs(gr[2] - 4.0)) < 1e-12


def test_grad_gaussian_refinement_fourth_order():
    # max-norm error against the analytic gradient of exp(-|v|^2/2) shrinks
    # at fourth order; slope measured over three grids in the asymptotic range
    errs, hs = [], []
    for n in (24, 32, 48):
        g = VelocityGrid(2, n, 6.0)
        f = np.exp(-0.5 * g.speed_sq())
        gr = grad_v(g, f)
        X, Y = g.coords()
        errs.append(np.max(np.abs(gr - np.stack([-X * f, -Y * f]))))
        hs.append(g.h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 3.5


def test_divergence_is_negative_adjoint_of_gradient():
    rng = np.random.default_rng(42)
    for gspec in [(2, 12, 5.0), (3, 8, 3.0)]:
        g = VelocityGrid(*gspec)
        phi = rng.standard_normal(g.shape)
        vec = rng.standard_normal((g.d,) + g.shape)
        lhs = np.sum(phi * div_v(g, vec))
        rhs = -sum(np.sum(grad_v(g, phi)[ax] * vec[ax]) for ax in range(g.d))
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) / scale < 1e-13


def test_grad_shape_validation():
    g = VelocityGrid(2, 12, 5.0)
    with pytest.raises(ValueError):
        grad_v(g, np.zeros((12, 10)))
    with pytest.raises(ValueError):
        div_v(g, np.zeros((3,) + g.shape))


# ----- interpolation ----------------------------------------------------

def test_interpolate_reproduces_node_values():
    g = VelocityGrid(2, 12, 5.0)
    rng = np.random.default_rng(3)
    f = rng.random(g.shape)
    pts = g.nodes()[rng.integers(0, g.size, size=25)]
    vals = interpolate(g, f, pts)
    idx = np.round((pts + g.L) / g.h - 0.5).astype(int)
    expected = f[idx[:, 0], idx[:, 1]]
    np.testing.assert_allclose(vals, expected, rtol=1e-12)


def test_interpolate_constant_field():
    g = VelocityGrid(2, 12, 5.0)
    f = np.full(g.shape, 2.5)
    rng = np.random.default_rng(4)
    pts = rng.uniform(-g.L, g.L, size=(40, 2))
    np.testing.assert_allclose(interpolate(g, f, pts), 2.5, rtol=1e-13)


def test_interpolate_linear_coordinate_exact():
    g = VelocityGrid(2, 16, 4.0)
    X, _ = g.coords()
    rng = np.random.default_rng(5)
    pts = rng.uniform(-g.L + 1e-6, g.L - 1e-6, size=(60, 2))
    np.testing.assert_allclose(interpolate(g, X, pts), pts[:, 0],
                               rtol=0, atol=1e-12)


def test_interpolate_cubic_product_exact():
    g = VelocityGrid(2, 16, 4.0)
    X, Y = g.coords()
    f = (X**3 - 2.0 * X) * (Y**2 + Y + 0.5)
    rng = np.random.default_rng(6)
    pts = rng.uniform(-g.L + 1e-9, g.L - 1e-9, size=(80, 2))
    exact = (pts[:, 0]**3 - 2.0 * pts[:, 0]) * (pts[:, 1]**2 + pts[:, 1] + 0.5)
    np.testing.assert_allclose(interpolate(g, f, pts), exact, rtol=0, atol=1e-10)


def test_interpolate_outside_box_is_zero():
    g = VelocityGrid(2, 12, 5.0)
    f = np.ones(g.shape)
    pts = np.array([[5.2, 0.0], [0.0, -6.0], [7.0, 7.0]])
    np.testing.assert_array_equal(interpolate(g, f, pts), 0.0)


def test_interpolate_clamped_mode_removes_overshoot():
    g = VelocityGrid(2, 8, 4.0)
    f = np.zeros(g.shape)
    f[4, 4] = 1.0
    # one cell to the side of the spike the cubic kernel has a negative lobe
    # of exactly -1/16 at the cell midpoint
    pt = np.array([g.axis[2] + 0.5 * g.h, g.axis[4]])
    raw = interpolate(g, f, pt)
    assert raw == pytest.approx(-0.0625, abs=1e-12)
    assert interpolate(g, f, pt, nonneg=True) == 0.0


def test_interpolate_scalar_point_returns_float():
    g = VelocityGrid(2, 12, 5.0)
    out = interpolate(g, np.ones(g.shape), np.zeros(2))
    assert isinstance(out, float)


# ----- moments ----------------------------------------------------------

def test_moments_single_cell_indicator():
    g = VelocityGrid(2, 12, 5.0)
    f = np.zeros(g.shape)
    f[7, 3] = 1.0 / g.cell_volume()
    v_cell = np.array([g.axis[7], g.axis[3]])
    m = 1.4
    mom = moments(g, f, mass=m)
    assert mom["mass"] == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(mom["momentum"], m * v_cell, rtol=1e-14)
    assert mom["energy"] == pytest.approx(0.5 * m * np.dot(v_cell, v_cell),
                                          rel=1e-14)


def test_moments_opposite_gaussians_cancel_momentum():
    g = VelocityGrid(2, 32, 6.0)
    u = np.array([0.8, -0.4])
    f1 = equilibrium(g, 1.0, 0, 0.0, u, 0.5)
    f2 = equilibrium(g, 1.0, 0, 0.0, -u, 0.5)
    total = moments(g, f1)["momentum"] + moments(g, f2)["momentum"]
    assert np.max(np.abs(total)) < 1e-13


def test_moments_maxwellian_match_analytic():
    # rho e^{-m|v-u|^2/(2T)} (m/(2 pi T))  has mass rho, momentum rho m u,
    # energy rho (m|u|^2/2 + T) in two dimensions
    m, T, rho = 1.3, 1.0, 0.7
    u = np.array([0.5, -0.25])
    g = VelocityGrid(2, 64, 8.0)
    mu = T * math.log(rho * m / (2.0 * math.pi * T))
    f = equilibrium(g, m, 0, mu, u, T)
    mom = moments(g, f, mass=m)
    assert abs(mom["mass"] - rho) < 1e-8
    assert np.max(np.abs(mom["momentum"] - rho * m * u)) < 1e-8
    assert abs(mom["energy"] - rho * (0.5 * m * np.dot(u, u) + T)) < 1e-8


def test_moment_refinement_order():
    m, T, rho = 1.3, 1.0, 0.7
    u = np.array([0.5, -0.25])
    mu = T * math.log(rho * m / (2.0 * math.pi * T))
    e_exact = rho * (0.5 * m * np.dot(u, u) + T)
    errs, hs = [], []
    for n in (8, 12, 16):
        g = VelocityGrid(2, n, 8.0)
        mom = moments(g, equilibrium(g, m, 0, mu, u, T), mass=m)
        errs.append(max(abs(mom["mass"] - rho),
                        np.max(np.abs(mom["momentum"] - rho * m * u)),
                        abs(mom["energy"] - e_exact)))
        hs.append(g.h)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 3.5


def test_mixture_moments_totals_and_validation():
    g = VelocityGrid(2, 12, 5.0)
    sp = SpeciesSet.create([1.0, 2.0], [0, 0])
    f1 = equilibrium(g, 1.0, 0, 0.0, np.array([0.3, 0.0]), 0.5)
    f2 = equilibrium(g, 2.0, 0, 0.0, np.array([-0.1, 0.2]), 0.4)
    masses, p, e = mixture_moments([f1, f2], sp, g)
    m1 = moments(g, f1, mass=1.0)
    m2 = moments(g, f2, mass=2.0)
    np.testing.assert_allclose(masses, [m1["mass"], m2["mass"]], rtol=1e-14)
    np.testing.assert_allclose(p, m1["momentum"] + m2["momentum"], rtol=1e-13)
    assert e == pytest.approx(m1["energy"] + m2["energy"], rel=1e-13)
    with pytest.raises(ValueError, match="does not match grid"):
        mixture_moments([f1, np.zeros((8, 8))], sp, g)
    with pytest.raises(ValueError, match="fields for"):
        mixture_moments([f1], sp, g)


# ----- equilibrium states ----------------------------------------------

def test_equilibrium_classical_is_maxwellian():
    g = VelocityGrid(2, 12, 5.0)
    m, T, mu = 1.5, 0.8, -0.3
    u = np.array([0.2, -0.1])
    f = equilibrium(g, m, 0, mu, u, T)
    X, Y = g.coords()
    g_exp = (0.5 * m * ((X - u[0])**2 + (Y - u[1])**2) - mu) / T
    np.testing.assert_allclose(f, np.exp(-g_exp), rtol=1e-13)


def test_equilibrium_fermi_values_in_unit_interval():
    g = VelocityGrid(2, 16, 5.0)
    for mu in (-1.0, 0.0, 2.0):
        f = equilibrium(g, 1.0, -1, mu, np.zeros(2), 0.7)
        assert np.all(f > 0.0) and np.all(f < 1.0)


def test_equilibrium_bose_value_at_origin():
    # continuum formula at v=0 with T=1, mu=-1 gives 1/(e-1); read it off the
    # lattice with cubic interpolation (h here keeps that error below 1e-3)
    g = VelocityGrid(2, 64, 6.0)
    f = equilibrium(g, 1.0, 1, -1.0, np.zeros(2), 1.0)
    v0 = interpolate(g, f, np.zeros(2))
    assert v0 == pytest.approx(1.0 / (math.e - 1.0), abs=1e-3)


def test_equilibrium_bose_node_formula():
    g = VelocityGrid(2, 12, 5.0)
    f = equilibrium(g, 1.0, 1, -1.0, np.zeros(2), 1.0)
    v = np.array([g.axis[6], g.axis[6]])
    expected = 1.0 / (math.exp(0.5 * np.dot(v, v) + 1.0) - 1.0)
    assert f[6, 6] == pytest.approx(expected, rel=1e-14)


def test_equilibrium_bose_condensation_rejected():
    g = VelocityGrid(2, 12, 5.0)
    # smallest exponent on this lattice is |v_min|^2/2 = (h/2)^2 at the four
    # innermost nodes; mu above it leaves the representable range
    gap = g.speed_sq().min() / 2.0
    with pytest.raises(ValueError, match="condensation regime not representable"):
        equilibrium(g, 1.0, 1, gap + 1e-3, np.zeros(2), 1.0)
    f = equilibrium(g, 1.0, 1, gap - 1e-3, np.zeros(2), 1.0)
    assert np.all(np.isfinite(f)) and np.all(f > 0.0)


def test_equilibrium_validation():
    g = VelocityGrid(2, 12, 5.0)
    with pytest.raises(ValueError):
        equilibrium(g, 1.0, 0, 0.0, np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        equilibrium(g, -1.0, 0, 0.0, np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        equilibrium(g, 1.0, 2, 0.0, np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        equilibrium(g, 1.0, 0, 0.0, np.zeros(3), 1.0)


# ----- sphere quadrature ------------------------------------------------

def test_sphere_weights_sum_to_surface_area():
    assert abs(SphereQuadrature(2, 8).nodes_weights()[1].sum()
               - 2.0 * math.pi) < 1e-12
    assert abs(SphereQuadrature(3, 8).nodes_weights()[1].sum()
               - 4.0 * math.pi) < 1e-12


def test_sphere_second_moment_identity_2d():
    nodes, w = SphereQuadrature(2, 8).nodes_weights()
    M = np.einsum("q,qi,qj->ij", w, nodes, nodes)
    assert np.max(np.abs(M - math.pi * np.eye(2))) < 1e-12


def test_sphere_degree_four_exact_3d():
    nodes, w = SphereQuadrature(3, 8).nodes_weights()
    assert abs(np.sum(w * nodes[:, 2]**4) - 4.0 * math.pi / 5.0) < 1e-12
    assert abs(np.sum(w * nodes[:, 0]**2 * nodes[:, 1]**2)
               - 4.0 * math.pi / 15.0) < 1e-12
    assert abs(np.sum(w * nodes[:, 0] * nodes[:, 1]**3)) < 1e-12


def test_sphere_nodes_have_bitwise_antipodes():
    for d, K in [(2, 8), (2, 10), (3, 8)]:
        nodes, _ = SphereQuadrature(d, K).nodes_weights()
        seen = {n.tobytes() for n in nodes}
        for n in nodes:
            assert (-n).tobytes() in seen


def test_sphere_axis_nodes_exact_when_divisible_by_four():
    # exact values, not cos/sin roundings; sign of zero is irrelevant
    nodes, _ = SphereQuadrature(2, 12).nodes_weights()
    for axis_node in ([1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]):
        hits = np.all(nodes == np.array(axis_node), axis=1)
        assert np.count_nonzero(hits) == 1


def test_sphere_validation():
    with pytest.raises(ValueError):
        SphereQuadrature(2, 6)
    with pytest.raises(ValueError):
        SphereQuadrature(2, 9)
    with pytest.raises(ValueError):
        SphereQuadrature(4, 8)
    assert SphereQuadrature(3, 8).count == 128


# ----- serialization ----------------------------------------------------

def test_field_save_load_roundtrip(tmp_path):
    g = VelocityGrid(2, 12, 5.0)
    rng = np.random.default_rng(9)
    f = rng.random(g.shape)
    path = tmp_path / "snap.field"
    save_field(path, g, f, species_index=1, mass=2.5, statistics=-1)
    g2, f2, meta = load_field(path)
    assert g2 == g
    np.testing.assert_array_equal(f2, f)
    assert meta == {"species": 1, "mass": 2.5, "statistics": -1}


def test_load_field_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"something else\n" + b"\x00" * 64)
    with pytest.raises(ValueError, match="not a field snapshot"):
        load_field(path)


def test_load_field_rejects_truncated_payload(tmp_path):
    g = VelocityGrid(2, 12, 5.0)
    path = tmp_path / "snap.field"
    save_field(path, g, np.ones(g.shape))
    blob = path.read_bytes()
    path.write_bytes(blob[:-16])
    with pytest.raises(ValueError, match="payload"):
        load_field(path)


def test_field_to_csv_layout(tmp_path):
    g = VelocityGrid(2, 12, 5.0)
    f = np.arange(g.size, dtype=float).reshape(g.shape)
    path = tmp_path / "field.csv"
    field_to_csv(path, g, f)
    raw = path.read_bytes()
    assert raw.count(b"\r\n") == g.size + 1
    lines = raw.decode().split("\r\n")
    assert lines[0] == "vx,vy,f"
    first = [float(x) for x in lines[1].split(",")]
    assert first == [g.axis[0], g.axis[0], 0.0]
