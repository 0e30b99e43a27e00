import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ericksen import energy as en
from ericksen.fem import P1Quadrature, assemble_stiffness
from ericksen.mesh import build_box_mesh_3d, build_rect_mesh_2d
from ericksen.potential import quartic_well

from conftest import random_state, two_triangle_mesh
from test_fem import dense_dirichlet


def brute_e1(K, kappa, s, n):
    """Double loop over all ordered node pairs."""
    total = 0.0
    N = len(s)
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            ds = s[i] - s[j]
            dn = n[i] - n[j]
            total += 0.5 * kappa * K[i, j] * ds ** 2
            total += 0.5 * K[i, j] * 0.5 * (s[i] ** 2 + s[j] ** 2) * dn @ dn
    return total


@pytest.fixture(scope="module")
def square8():
    m = build_rect_mesh_2d(8, 8)
    return m, assemble_stiffness(m), P1Quadrature(m)


def test_e1_constant_state_vanishes(square8):
    m, g, _ = square8
    n = np.tile([0.6, 0.8], (m.num_nodes, 1))
    assert en.e1h(g, 2.0, np.full(m.num_nodes, 0.7), n) == 0.0


def test_e1_constant_director_is_scaled_dirichlet(square8, rng):
    m, g, _ = square8
    s = rng.uniform(-0.4, 0.9, m.num_nodes)
    n = np.tile([0.0, 1.0], (m.num_nodes, 1))
    assert en.e1h(g, 0.3, s, n) == pytest.approx(0.3 * dense_dirichlet(m, s), rel=1e-10)


@pytest.mark.parametrize("kappa", [0.1, 1.0, 2.0])
def test_e1_matches_brute_force_pairs(kappa, rng):
    m = two_triangle_mesh()
    g = assemble_stiffness(m)
    for _ in range(5):
        s, n = random_state(m, rng)
        assert en.e1h(g, kappa, s, n) == pytest.approx(brute_e1(g.matrix.toarray(), kappa, s, n), rel=1e-13)


def test_e1_dimension_mismatch(square8):
    _, g, _ = square8
    with pytest.raises(ValueError):
        en.e1h(g, 1.0, np.zeros(3), np.zeros((3, 2)))


def test_e2_examples(square8):
    m, _, q = square8
    pot = quartic_well()
    assert en.e2h(q, pot, np.zeros(m.num_nodes)) == 0.0
    val = en.e2h(q, pot, np.full(m.num_nodes, pot.s_star))
    assert val == pytest.approx(float(pot.psi(pot.s_star)), rel=1e-13)
    assert en.e2h(q, quartic_well(enabled=False), np.full(m.num_nodes, 0.3)) == 0.0


def test_e2_quartic_exact_on_affine_field():
    # psi of an affine field is a quartic polynomial; compare with the 1D antiderivative
    m = build_rect_mesh_2d(3, 3)
    pot = quartic_well()
    s = -0.4 + 1.3 * m.vertices[:, 0]
    anti = pot.psi_c.integ() - pot.psi_e.integ()
    exact = (anti(0.9) - anti(-0.4)) / 1.3
    assert en.e2h(P1Quadrature(m), pot, s) == pytest.approx(exact, rel=1e-12)


def test_tilde_constant_director(square8, rng):
    m, g, _ = square8
    s = rng.uniform(-0.4, 0.9, m.num_nodes)
    n = np.tile([0.6, -0.8], (m.num_nodes, 1))
    u = en.director_product(s, n)
    assert en.e1h_tilde(g, 2.0, s, u) == pytest.approx(2.0 * dense_dirichlet(m, s), rel=1e-10)


def test_consistency_trivial_cases(square8, rng):
    m, g, _ = square8
    s, n = random_state(m, rng)
    assert en.consistency_c1h(g, s, np.tile([1.0, 0.0], (m.num_nodes, 1))) == 0.0
    assert en.consistency_c1h(g, np.full(m.num_nodes, 0.5), n) == 0.0
    assert en.consistency_c1h(g, s, n) >= 0.0


def test_abs_field_reduces_gradient():
    m = two_triangle_mesh()
    g = assemble_stiffness(m)
    s = np.array([0.5, 0.4, 0.3, 0.6])
    flipped = s.copy()
    flipped[2] = -flipped[2]
    assert en.dirichlet_energy(g, en.abs_field(flipped)) <= en.dirichlet_energy(g, flipped)
    np.testing.assert_array_equal(en.abs_field(s), s)
    np.testing.assert_array_equal(en.abs_field(np.full(4, -0.2)), np.full(4, 0.2))


def test_breakdown_identity(suite_meshes, rng):
    for m in suite_meshes.values():
        g = assemble_stiffness(m)
        s, n = random_state(m, rng)
        eb = en.energy_breakdown(g, P1Quadrature(m), quartic_well(), 0.7, s, n)
        assert abs(eb.identity_residual) <= 1e-10 * (1 + abs(eb.e1))
        assert eb.total == eb.e1 + eb.e2
        assert set(eb.as_dict()) == {"e1", "e2", "e1_tilde", "c1", "total"}


def test_check_director():
    with pytest.raises(ValueError):
        en.check_director(np.array([[1.0, 0.1]]))
    with pytest.raises(ValueError):
        en.check_director(np.array([1.0, 0.0]))


# first variations -------------------------------------------------------

def tangent_direction(n, rng):
    v = rng.normal(size=n.shape)
    return v - np.einsum("id,id->i", v, n)[:, None] * n


@pytest.mark.parametrize("mesh", [build_rect_mesh_2d(5, 5), build_box_mesh_3d(3, 3, 3)])
def test_var_n_central_difference(mesh, rng):
    g = assemble_stiffness(mesh)
    s, n = random_state(mesh, rng)
    v = tangent_direction(n, rng)
    eps = 1e-3
    fd = (en.e1h(g, 1.3, s, n + eps * v) - en.e1h(g, 1.3, s, n - eps * v)) / (2 * eps)
    assert en.var_n_e1h(g, s, n, v) == pytest.approx(fd, rel=1e-8)
    # the operator form gives the same bilinear value
    A = en.director_operator(g, s)
    assert np.sum(n * (A @ v)) == pytest.approx(fd, rel=1e-8)


def test_var_n_degenerate_cases(rng):
    m = build_rect_mesh_2d(3, 3)
    g = assemble_stiffness(m)
    s, n = random_state(m, rng)
    v = tangent_direction(n, rng)
    assert en.var_n_e1h(g, s, n, np.zeros_like(n)) == 0.0
    assert en.var_n_e1h(g, np.zeros(m.num_nodes), n, v) == 0.0
    with pytest.raises(ValueError):
        en.var_n_e1h(g, s, n, n)


@pytest.mark.parametrize("mesh", [build_rect_mesh_2d(5, 5), build_box_mesh_3d(3, 3, 3)])
def test_var_s_central_difference(mesh, rng):
    g = assemble_stiffness(mesh)
    s, n = random_state(mesh, rng)
    z = rng.normal(size=mesh.num_nodes)
    eps = 1e-3
    fd = (en.e1h(g, 0.1, s + eps * z, n) - en.e1h(g, 0.1, s - eps * z, n)) / (2 * eps)
    assert en.var_s_e1h(g, 0.1, s, n, z) == pytest.approx(fd, rel=1e-8)
    B = en.orientation_operator(g, 0.1, n)
    assert z @ (B @ s) == pytest.approx(fd, rel=1e-8)


def test_var_s_constant_director_is_polarized_dirichlet(rng):
    m = build_rect_mesh_2d(4, 4)
    g = assemble_stiffness(m)
    s = rng.normal(size=m.num_nodes)
    z = rng.normal(size=m.num_nodes)
    n = np.tile([1.0, 0.0], (m.num_nodes, 1))
    polar = (dense_dirichlet(m, s + z) - dense_dirichlet(m, s - z)) / 4
    assert en.var_s_e1h(g, 2.0, s, n, z) == pytest.approx(2 * 2.0 * polar, rel=1e-10)


def test_orientation_operator_rows(rng):
    m = build_rect_mesh_2d(3, 3)
    g = assemble_stiffness(m)
    s, n = random_state(m, rng)
    B = en.orientation_operator(g, 0.5, n).toarray()
    for i in (0, 5, 7):
        z = np.zeros(m.num_nodes)
        z[i] = 1.0
        assert en.var_s_e1h(g, 0.5, s, n, z) == pytest.approx(B[i] @ s, rel=1e-12, abs=1e-14)
    np.testing.assert_allclose(B, B.T, atol=1e-14)


def test_var_s_e2_examples(rng):
    m = build_rect_mesh_2d(4, 4)
    q = P1Quadrature(m)
    z = rng.normal(size=m.num_nodes)
    zero = np.zeros(m.num_nodes)
    assert en.var_s_e2h(q, quartic_well(enabled=False), zero + 0.3, zero, z) == 0.0
    assert en.var_s_e2h(q, quartic_well(), zero, zero, z) == 0.0


def test_convex_split_variation_bounds_increment(rng):
    m = build_rect_mesh_2d(6, 6)
    q = P1Quadrature(m)
    pot = quartic_well()
    for _ in range(100):
        a = rng.uniform(-0.45, 0.95, m.num_nodes)
        b = rng.uniform(-0.45, 0.95, m.num_nodes)
        lhs = en.e2h(q, pot, b) - en.e2h(q, pot, a)
        assert lhs <= en.var_s_e2h(q, pot, b, a, b - a) + 1e-10


_unit = st.floats(-0.45, 0.95)


@settings(max_examples=60, deadline=None)
@given(s=arrays(float, 4, elements=_unit), angles=arrays(float, 4, elements=st.floats(0, 2 * np.pi)),
       kappa=st.sampled_from([0.1, 2.0]))
def test_identity_and_inequalities_property(s, angles, kappa):
    m = two_triangle_mesh()
    g = assemble_stiffness(m)
    n = np.column_stack([np.cos(angles), np.sin(angles)])
    e1 = en.e1h(g, kappa, s, n)
    u = en.director_product(s, n)
    assert abs(e1 - en.e1h_tilde(g, kappa, s, u) - en.consistency_c1h(g, s, n) / 4) <= 1e-10 * (1 + e1)
    assert e1 >= en.e1h_tilde(g, kappa, s, u) - 1e-12
    st_ = en.abs_field(s)
    assert e1 >= en.e1h_tilde(g, kappa, st_, en.director_product(st_, n)) - 1e-12
