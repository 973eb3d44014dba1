import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from biot_majorant.fem import (
    CENTROID,
    DEGREE2,
    DEGREE4,
    DegenerateSystemError,
    MaterialParams,
    assemble_diffusion_system,
    assemble_elasticity_system,
    cell_integrals,
    compliance,
    energy_density,
    integrate,
    interpolate,
    load_vector,
    mass_matrix,
    p1_at_points,
    stiffness_matrix,
    stress,
)
from biot_majorant.mesh import Mesh2D, refine_uniform, unit_rectangle_mesh


def monomial_integral(i, j, a=1.0, b=1.0):
    return a ** (i + 1) * b ** (j + 1) / ((i + 1) * (j + 1))


@pytest.mark.parametrize("rule", [CENTROID, DEGREE2, DEGREE4], ids=["centroid", "deg2", "deg4"])
def test_quadrature_exact_on_monomials(rule):
    m = unit_rectangle_mesh(1.5, 0.8, 3)
    for i in range(rule.degree + 1):
        for j in range(rule.degree + 1 - i):
            val = integrate(m, lambda x, y: x**i * y**j, rule)
            assert val == pytest.approx(monomial_integral(i, j, 1.5, 0.8), abs=1e-13)


def test_rule_weights_sum_to_one():
    for rule in (CENTROID, DEGREE2, DEGREE4):
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)


def test_degree4_rule_not_exact_at_degree5():
    m = unit_rectangle_mesh(1, 1, 1)
    errs = [abs(integrate(m, lambda x, y: x**i * y ** (6 - i), DEGREE4) - monomial_integral(i, 6 - i)) for i in range(7)]
    assert max(errs) > 1e-8


def test_cell_integrals_sum():
    m = unit_rectangle_mesh(1, 1, 4)
    ci = cell_integrals(m, lambda x, y: x * y)
    assert ci.shape == (m.n_cells,)
    assert ci.sum() == pytest.approx(0.25, abs=1e-14)


def test_stiffness_n2_hand_values():
    # interior vertex of the 2x2 criss mesh: diagonal 4, axis neighbours -1, diagonal neighbours 0
    K = stiffness_matrix(unit_rectangle_mesh(1, 1, 2)).toarray()
    assert K[4, 4] == pytest.approx(4.0, abs=1e-14)
    for j in (1, 3, 5, 7):
        assert K[4, j] == pytest.approx(-1.0, abs=1e-14)
    for j in (0, 8):
        assert K[4, j] == pytest.approx(0.0, abs=1e-14)


def test_stiffness_symmetric_constant_kernel():
    K = stiffness_matrix(refine_uniform(unit_rectangle_mesh(2, 1, 3)))
    assert abs(K - K.T).max() < 1e-14
    assert np.abs(K @ np.ones(K.shape[0])).max() < 1e-13


def test_mass_matrix_element_formula():
    m = Mesh2D(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]), (2.0, 1.0))
    M = mass_matrix(m).toarray()
    area = 1.0
    assert np.allclose(M, area / 12.0 * (np.ones((3, 3)) + np.eye(3)), atol=1e-15)


def test_mass_matrix_total_area():
    M = mass_matrix(unit_rectangle_mesh(3, 2, 4))
    assert M.sum() == pytest.approx(6.0, rel=1e-13)


def test_load_vector_constant():
    m = unit_rectangle_mesh(1, 1, 3)
    b = load_vector(m, lambda x, y: 2.0 + 0 * x)
    assert b.sum() == pytest.approx(2.0, abs=1e-14)
    assert np.allclose(b, mass_matrix(m) @ (2.0 * np.ones(m.n_vertices)), atol=1e-14)


def test_p1_interpolation_exact_at_points():
    m = unit_rectangle_mesh(1, 1, 3)
    f = lambda x, y: 1.0 + 2 * x - 3 * y  # noqa: E731
    vals = p1_at_points(m, interpolate(m, f), DEGREE4)
    from biot_majorant.fem import quadrature_points

    x, y = quadrature_points(m, DEGREE4)
    assert np.allclose(vals, f(x, y), atol=1e-14)


def test_material_params_validation():
    with pytest.raises(ValueError):
        MaterialParams(k1=0.0)
    with pytest.raises(ValueError):
        MaterialParams(kappa=-1.0)
    with pytest.raises(ValueError):
        MaterialParams(lame_mu=0.0)
    p = MaterialParams(k1=2.0, k2=3.0, kappa=0.5)
    assert np.allclose(p.A, np.diag([2.0, 3.0]))
    assert np.allclose(p.B, 0.5 * np.array([[1, -1], [-1, 1]]))


@settings(max_examples=40, deadline=None)
@given(
    lam=st.floats(0, 100),
    mu=st.floats(0.01, 100),
    e=st.lists(st.floats(-10, 10), min_size=3, max_size=3),
)
def test_compliance_inverts_stress(lam, mu, e):
    p = MaterialParams(lame_lambda=lam, lame_mu=mu)
    eps = np.array([[e[0], e[2]], [e[2], e[1]]])
    sig = stress(p, eps)
    assert np.allclose(compliance(p, sig), eps, atol=1e-9 * (1 + np.abs(eps).max()))
    expected = 2 * mu * np.sum(eps * eps) + lam * np.trace(eps) ** 2
    assert energy_density(p, eps) == pytest.approx(expected, rel=1e-12, abs=1e-12)
    assert energy_density(p, eps) >= 0


def test_diffusion_system_structure():
    m = unit_rectangle_mesh(1, 1, 4)
    p = MaterialParams(k1=2.0, k2=3.0, kappa=0.7)
    zero = lambda x, y: 0 * x  # noqa: E731
    s = assemble_diffusion_system(m, p, (zero, zero))
    ni = len(m.interior_vertices)
    assert s.dimension == 2 * ni
    assert abs(s.matrix - s.matrix.T).max() < 1e-13
    assert np.all(np.linalg.eigvalsh(s.matrix.toarray()) > 0)
    assert np.array_equal(s.dofs[:ni], m.interior_vertices)
    assert np.array_equal(s.dofs[ni:], m.n_vertices + m.interior_vertices)
    r, c, v = s.triplets()
    assert np.allclose(sp.coo_matrix((v, (r, c)), shape=s.matrix.shape).toarray(), s.matrix.toarray())


def test_degenerate_mesh_rejected():
    m = unit_rectangle_mesh(1, 1, 1)
    zero = lambda x, y: 0 * x  # noqa: E731
    with pytest.raises(DegenerateSystemError):
        assemble_diffusion_system(m, MaterialParams(), (zero, zero))
    with pytest.raises(DegenerateSystemError):
        assemble_elasticity_system(m, MaterialParams(), lambda x, y: (0 * x, 0 * x))


def test_elasticity_rigid_motions_in_kernel():
    from biot_majorant.fem import elasticity_element_matrices

    m = unit_rectangle_mesh(1, 1, 3)
    local = elasticity_element_matrices(m, MaterialParams(lame_lambda=2.0, lame_mu=0.5))
    for c in range(m.n_cells):
        X = m.vertices[m.cells[c]]
        for u in (np.tile([1.0, 0.0], 3), np.tile([0.0, 1.0], 3), np.column_stack([-X[:, 1], X[:, 0]]).ravel()):
            assert np.abs(local[c] @ u).max() < 1e-13
