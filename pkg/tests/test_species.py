"""Collision geometry, pair kernels, and the concentrating angular family."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mskinet.species import (
    CallableAngular,
    ConstantAngular,
    GrazingFamily,
    Species,
    SpeciesSet,
    assumption_check,
    deviation_angle,
    kernel_A,
    kernel_B,
    make_kernel,
    post_collision,
    snap_cosine,
    sphere_area,
)


def test_head_on_equal_mass_exchange():
    vi, vj = post_collision([1.0, 0.0], [-1.0, 0.0], 1.0, 1.0, [0.0, 1.0])
    np.testing.assert_allclose(vi, [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(vj, [0.0, -1.0], atol=1e-15)


def test_omega_along_relative_velocity_is_identity():
    v_i = np.array([0.3, -0.7])
    v_j = np.array([-0.2, 0.5])
    omega = (v_i - v_j) / np.linalg.norm(v_i - v_j)
    vi, vj = post_collision(v_i, v_j, 1.0, 2.0, omega)
    np.testing.assert_allclose(vi, v_i, atol=1e-14)
    np.testing.assert_allclose(vj, v_j, atol=1e-14)


def test_unequal_mass_values_against_componentwise_formula():
    # center of mass (2/3, 0), relative speed 1, omega = e_y:
    # vi' = (2/3, 1/3), vj' = (2/3, -2/3), worked by hand from the
    # center +/- (m_other/M) r omega form
    vi, vj = post_collision([1.0, 0.0], [0.0, 0.0], 2.0, 1.0, [0.0, 1.0])
    np.testing.assert_allclose(vi, [2.0 / 3.0, 1.0 / 3.0], rtol=1e-14)
    np.testing.assert_allclose(vj, [2.0 / 3.0, -2.0 / 3.0], rtol=1e-14)


def test_equal_velocities_returned_unchanged():
    v = np.array([0.4, 0.4])
    vi, vj = post_collision(v, v, 1.0, 3.0, [1.0, 0.0])
    np.testing.assert_array_equal(vi, v)
    np.testing.assert_array_equal(vj, v)


def test_non_unit_omega_rejected():
    with pytest.raises(ValueError):
        post_collision([1.0, 0.0], [0.0, 0.0], 1.0, 1.0, [0.5, 0.5])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_pair_conservation_and_speed_preservation(seed):
    rng = np.random.default_rng(seed)
    v_i = rng.normal(size=2) * 3.0
    v_j = rng.normal(size=2) * 3.0
    m_i, m_j = rng.uniform(0.2, 5.0, size=2)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    omega = np.array([math.cos(phi), math.sin(phi)])
    vi, vj = post_collision(v_i, v_j, m_i, m_j, omega)

    p0 = m_i * v_i + m_j * v_j
    p1 = m_i * vi + m_j * vj
    e0 = m_i * np.dot(v_i, v_i) + m_j * np.dot(v_j, v_j)
    e1 = m_i * np.dot(vi, vi) + m_j * np.dot(vj, vj)
    scale = max(np.max(np.abs(p0)), 1.0)
    assert np.max(np.abs(p1 - p0)) <= 1e-12 * scale
    assert abs(e1 - e0) <= 1e-12 * max(abs(e0), 1.0)
    r0 = np.linalg.norm(v_i - v_j)
    r1 = np.linalg.norm(vi - vj)
    assert abs(r1 - r0) <= 1e-12 * max(r0, 1.0)


def test_collision_is_reversible_with_same_omega():
    rng = np.random.default_rng(11)
    for _ in range(50):
        v_i = rng.normal(size=2)
        v_j = rng.normal(size=2)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        omega = np.array([math.cos(phi), math.sin(phi)])
        vi, vj = post_collision(v_i, v_j, 1.3, 0.7, omega)
        # the primed pair has relative velocity r*omega, so the
        # generating omega maps it back
        v_i2, v_j2 = post_collision(vi, vj, 1.3, 0.7,
                                    (vi - vj) / np.linalg.norm(vi - vj))
        del v_i2, v_j2
        back_i, back_j = post_collision(
            vi, vj, 1.3, 0.7,
            (v_i - v_j) / np.linalg.norm(v_i - v_j))
        np.testing.assert_allclose(back_i, v_i, atol=1e-10)
        np.testing.assert_allclose(back_j, v_j, atol=1e-10)


def test_deviation_angle_basic_geometry():
    assert deviation_angle([1.0, 0.0], [0.0, 0.0], [1.0, 0.0]) == 0.0
    assert deviation_angle([1.0, 0.0], [0.0, 0.0],
                           [0.0, 1.0]) == pytest.approx(math.pi / 2.0)
    assert deviation_angle([1.0, 1.0], [0.0, 0.0],
                           [1.0, 0.0]) == pytest.approx(math.pi / 4.0)


def test_deviation_angle_equal_velocities_error():
    with pytest.raises(ValueError, match="deviation angle"):
        deviation_angle([1.0, 2.0], [1.0, 2.0], [1.0, 0.0])


def test_snap_cosine_pins_poles_and_equator():
    c = snap_cosine(np.array([3e-13, -4e-13, 1.0 - 5e-13, -1.0 + 2e-13, 0.5]))
    np.testing.assert_array_equal(c[:4], [0.0, 0.0, 1.0, -1.0])
    assert c[4] == 0.5


def test_kernel_B_maxwell_constant_and_support():
    kern = make_kernel("maxwell", c=1.0, b_const=0.7)
    assert kernel_B(kern, [1.0, 0.0], [0.0, 0.0],
                    [math.cos(math.pi / 4), math.sin(math.pi / 4)]) \
        == pytest.approx(0.7)
    # deviation 3pi/4 lies outside the angular support
    assert kern.B(2.0, 3.0 * math.pi / 4.0) == 0.0


def test_kernel_B_power_law_with_cosine_angular():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ang = CallableAngular(np.cos)
    kern = make_kernel("power-law", c=1.0, gamma=1.0, angular=ang)
    # alpha(2) * cos(pi/3) = 2 * 0.5, checked by hand
    assert kern.B(2.0, math.pi / 3.0) == pytest.approx(1.0, rel=1e-14)


def test_kernel_B_negative_r_rejected():
    kern = make_kernel("maxwell", c=1.0, b_const=1.0)
    with pytest.raises(ValueError):
        kern.B(-0.5, 0.3)


def test_kernel_A_values_and_symmetry():
    kern = make_kernel("maxwell", c=1.0, b_const=1.0)
    assert kernel_A(kern, 0.0, 2.0) == 0.0
    assert kernel_A(kern, 3.0, 2.0) == pytest.approx(4.5)
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = rng.uniform(0.0, 8.0)
        m_i, m_j = rng.uniform(0.1, 4.0, size=2)
        assert m_i * kernel_A(kern, r, m_i) == pytest.approx(
            m_j * kernel_A(kern, r, m_j), rel=1e-14)


def test_statistics_values():
    assert Species(1.0, 0).statistics == 0
    assert Species(1.0, 1).tau(2.0) == pytest.approx(3.0)
    assert Species(1.0, -1).tau(0.25) == pytest.approx(0.75)
    assert Species(2.0, 0).tau(5.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Species(1.0, 2)
    with pytest.raises(ValueError):
        Species(-2.0, 0)


def test_species_set_create():
    ss = SpeciesSet.create([1.0, 2.0, 0.5], [0, 1, -1])
    assert len(ss) == 3
    np.testing.assert_array_equal(ss.masses, [1.0, 2.0, 0.5])
    np.testing.assert_array_equal(ss.alphas, [0, 1, -1])


def test_grazing_moment_matches_paper_normalization():
    base = make_kernel("maxwell", c=1.0, b_const=1.0)
    fam = GrazingFamily(base, 1.0, 1.0, 2)
    # 2(d-1)/|S^(d-2)| * (m_i+m_j)^2/(m_i^2 m_j^2) = 2*1/2 * 4 = 4
    target = 4.0
    ang = fam.scaled(0.8)
    val, err = quad(lambda t: t * t * ang(t), 0.0, ang.support_max,
                    limit=200)
    assert err < 1e-9
    assert val == pytest.approx(target, rel=1e-6)


@pytest.mark.parametrize("eps", [0.8, 0.4, 0.2])
def test_grazing_moment_invariant_under_concentration(eps):
    base = make_kernel("maxwell", c=1.0, b_const=1.0)
    fam = GrazingFamily(base, 1.0, 1.5, 2)
    ang = fam.scaled(eps)
    val, _ = quad(lambda t: t * t * ang(t), 0.0, ang.support_max, limit=200)
    base_val, _ = quad(lambda t: t * t * fam.base_beta(t), 0.0,
                       math.pi / 2.0, limit=200)
    assert val == pytest.approx(base_val, rel=1e-6)
    assert ang(eps / 2.0 + 1e-9) == 0.0


def test_grazing_moment_target_formula():
    assert GrazingFamily.moment_target(1.0, 1.0, 2) == pytest.approx(4.0)
    assert sphere_area(0) == pytest.approx(2.0)


def test_assumption_check_maxwell_holds():
    kern = make_kernel("maxwell", c=1.0, b_const=1.0)
    rep = assumption_check(kern, 0.01)
    assert rep["holds"]
    assert rep["worst_ratio"] == pytest.approx(0.0, abs=1e-8)


def test_assumption_check_power_law_ratio_is_gamma():
    kern = make_kernel("power-law", c=1.0, gamma=0.5, b_const=1.0)
    rep = assumption_check(kern, 1.0)
    assert rep["worst_ratio"] == pytest.approx(0.5, rel=1e-4)
    assert rep["holds"]          # 0.5 <= 2 sqrt(1)
    rep2 = assumption_check(kern, 0.01)
    assert not rep2["holds"]     # 0.5 > 2 sqrt(0.01)


def test_assumption_check_exponential_kernel_fails():
    r = np.linspace(1e-3, 12.0, 4000)
    kern = make_kernel("tabulated", r_table=tuple(r),
                       a_table=tuple(np.exp(r)), b_const=1.0)
    rep = assumption_check(kern, 4.0, r_min=0.01, r_max=10.0)
    assert rep["worst_ratio"] == pytest.approx(10.0, rel=0.05)
    assert not rep["holds"]      # 10 > 2 sqrt(4) = 4
