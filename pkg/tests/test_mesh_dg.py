import numpy as np
import pytest

from nsacdg.mesh_dg import (
    Basis, DGField, FaceTraces, broken_norm_l2, build_mesh, elementwise_ibp_check, face_traces,
    gauss_lobatto_nodes, integrate, jump_avg, l2_project, quad_points,
)
from oracles import fit_slope


def test_build_mesh_examples():
    m = build_mesh(1)
    assert m.n_cells == 1 and m.h == 1.0
    np.testing.assert_array_equal(build_mesh(4).vertices, [0, 0.25, 0.5, 0.75, 1.0])
    assert build_mesh(64).h == pytest.approx(1 / 64, rel=1e-14)


def test_build_mesh_rejects_zero_cells():
    with pytest.raises(ValueError):
        build_mesh(0)


@pytest.mark.parametrize("k", range(6))
def test_basis_is_nodal(k):
    b = Basis(k)
    np.testing.assert_allclose(b.eval(b.nodes), np.eye(k + 1), atol=1e-13)
    assert b.n_quad >= k + 2


@pytest.mark.parametrize("k", range(1, 6))
def test_lobatto_nodes_include_endpoints(k):
    nodes = gauss_lobatto_nodes(k)
    assert nodes[0] == -1.0 and nodes[-1] == 1.0
    assert np.all(np.diff(nodes) > 0)


def test_basis_degree_zero_derivative_vanishes():
    b = Basis(0)
    np.testing.assert_array_equal(b.derivs, 0.0)
    np.testing.assert_allclose(b.values, 1.0)


@pytest.mark.parametrize("k", [0, 2, 4])
def test_quadrature_exactness(k):
    b = Basis(k)
    for deg in range(2 * b.n_quad):
        exact = (1 - (-1) ** (deg + 1)) / (deg + 1)
        got = np.sum(b.quad_weights * b.quad_points**deg)
        assert got == pytest.approx(exact, rel=1e-13, abs=1e-14)


def test_projection_of_constant_and_polynomial():
    mesh, b = build_mesh(5), Basis(3)
    np.testing.assert_allclose(l2_project(lambda x: 2.5 + 0 * x, mesh, b).coeffs, 2.5, atol=1e-13)
    poly = lambda x: 1 - 2 * x + 3 * x**3  # noqa: E731
    u = l2_project(poly, mesh, b)
    np.testing.assert_allclose(u.at_quad(), poly(quad_points(mesh, b)), atol=1e-12)


def test_projection_rate_k2():
    errs = []
    ns = [8, 16, 32, 64]
    for n in ns:
        mesh, b = build_mesh(n), Basis(2)
        f = lambda x: np.cos(2 * np.pi * x)  # noqa: E731
        errs.append(broken_norm_l2(l2_project(f, mesh, b), f))
    assert -fit_slope(ns, errs) == pytest.approx(3.0, abs=0.2)


def test_projection_idempotent(rng):
    mesh, b = build_mesh(6), Basis(3)
    u = DGField(mesh, b, rng.normal(size=(6, 4)))

    def evaluate(x):
        cell = np.clip(np.searchsorted(mesh.vertices, x, side="right") - 1, 0, 5)
        # quadrature points are cell interior, so the cell lookup is unambiguous
        return u.eval_in_cell(cell.ravel(), x.ravel()).reshape(x.shape)

    np.testing.assert_allclose(l2_project(evaluate, mesh, b).coeffs, u.coeffs, atol=1e-13)


def test_traces_match_evaluation_from_each_side(rng):
    mesh, b = build_mesh(5), Basis(2)
    u = DGField(mesh, b, rng.normal(size=(5, 3)))
    tr = face_traces(u)
    inner = mesh.vertices[1:-1]
    left_vals = u.eval_in_cell(np.arange(4), inner)
    right_vals = u.eval_in_cell(np.arange(1, 5), inner)
    np.testing.assert_allclose(tr.left, left_vals, atol=1e-14)
    np.testing.assert_allclose(tr.right, right_vals, atol=1e-14)
    # a shared vertex takes the value from the cell to its right
    np.testing.assert_allclose(u(inner), right_vals, atol=1e-14)


def test_jump_avg_examples():
    mesh, b = build_mesh(2), Basis(1)
    u = DGField(mesh, b, np.array([[0.0, 1.0], [3.0, 5.0]]))
    assert jump_avg(u, 1) == (pytest.approx(-2.0), pytest.approx(2.0))
    jump, avg = jump_avg(u, 2)
    assert jump == 5.0 and avg == 5.0
    jump, avg = jump_avg(u, 0)
    assert jump == 0.0 and avg == 0.0
    with pytest.raises(IndexError):
        jump_avg(u, 3)


def test_continuous_field_has_no_jumps():
    mesh, b = build_mesh(7), Basis(3)
    u = l2_project(lambda x: 1 + x, mesh, b)
    np.testing.assert_allclose(face_traces(u).jump, 0.0, atol=1e-13)


def test_boundary_normals():
    np.testing.assert_array_equal(FaceTraces.boundary_normals, [-1.0, 1.0])


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_elementwise_integration_identity(rng, k):
    mesh, b = build_mesh(8), Basis(k)
    for _ in range(100):
        u = DGField(mesh, b, rng.normal(size=(8, k + 1)))
        phi = DGField(mesh, b, rng.normal(size=(8, k + 1)))
        assert abs(elementwise_ibp_check(u, phi)) <= 1e-11


def test_elementwise_integration_constants():
    mesh, b = build_mesh(3), Basis(2)
    one = l2_project(lambda x: np.ones_like(x), mesh, b)
    assert abs(elementwise_ibp_check(one, one)) <= 1e-14


def test_elementwise_integration_rejects_mismatch():
    u = DGField.zeros(build_mesh(3), Basis(1))
    with pytest.raises(ValueError):
        elementwise_ibp_check(u, DGField.zeros(build_mesh(3), Basis(2)))
    with pytest.raises(ValueError):
        elementwise_ibp_check(u, DGField.zeros(build_mesh(4), Basis(1)))


def test_broken_norm_examples():
    mesh, b = build_mesh(16), Basis(2)
    zero = DGField.zeros(mesh, b)
    assert broken_norm_l2(zero, lambda x: np.ones_like(x)) == pytest.approx(1.0, rel=1e-14)
    assert broken_norm_l2(zero, lambda x: np.cos(2 * np.pi * x)) == pytest.approx(np.sqrt(0.5), rel=1e-10)
    f = lambda x: x**2  # noqa: E731
    assert broken_norm_l2(l2_project(f, mesh, b), f) <= 1e-12


def test_integrate_matches_cell_sum():
    mesh, b = build_mesh(4), Basis(1)
    assert integrate(np.ones((4, b.n_quad)), mesh, b) == pytest.approx(1.0, rel=1e-15)


def test_dgfield_shape_checked():
    with pytest.raises(ValueError):
        DGField(build_mesh(3), Basis(1), np.zeros((3, 3)))
