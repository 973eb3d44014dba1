import math

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, settings
from hypothesis import strategies as st

from biot_majorant.fem import DEGREE4, MaterialParams, elasticity_element_matrices, mass_matrix, p1_at_points, quadrature_points, stiffness_matrix
from biot_majorant.majorant import (
    ConstraintViolation,
    DF_final,
    DG_final,
    Loads,
    compound_DF_fenchel,
    compound_DF_paper,
    compound_DG,
    coupled_constant,
    coupled_estimate,
    discrete_dirichlet_eigenvalue,
    elastic_majorant,
    elastic_terms,
    friedrichs_constant,
    korn_constant,
    majorant_constrained,
    majorant_total,
    optimal_beta,
    optimal_beta3,
    optimize_coupled_betas,
    pressure_split_factor,
    split_value,
)
from biot_majorant.mesh import unit_rectangle_mesh
from biot_majorant.reconstruction import FluxPair, field_divergence, flux_nodal_average, stress_nodal_average
from biot_majorant.solvers import DisplacementField, PressurePair, solve_double_diffusion, solve_elasticity
from biot_majorant.verification import exact_diffusion_error, exact_elastic_error, manufactured_case

from conftest import C_F_UNIT


def constrained_data(rng, m, c):
    """Random pressures and fluxes with rho_1 + rho_2 = 0 exactly."""
    a, b = rng.standard_normal(2)
    h1 = lambda x, y: a * np.sin(3 * x) + b * y**2  # noqa: E731
    h2 = lambda x, y: -h1(x, y) + c  # noqa: E731
    y1 = rng.standard_normal((m.n_vertices, 2))
    y2 = -y1 - 0.5 * c * m.vertices
    q = PressurePair(m, *rng.standard_normal((2, m.n_vertices)))
    return q, FluxPair(m, y1, y2), Loads(h1, h2)


# ---- constants -----------------------------------------------------------


def test_friedrichs_unit_square():
    assert friedrichs_constant(1, 1) == pytest.approx(1 / (math.sqrt(2) * math.pi), abs=1e-15)
    assert friedrichs_constant(2, 1) == pytest.approx(1 / (math.pi * math.sqrt(1.25)))
    with pytest.raises(ValueError):
        friedrichs_constant(0, 1)


def test_discrete_eigenvalue_oracles():
    m = unit_rectangle_mesh(1, 1, 16)
    lam = discrete_dirichlet_eigenvalue(m)
    i = m.interior_vertices
    K = stiffness_matrix(m)[i][:, i].tocsc()
    M = mass_matrix(m)[i][:, i].tocsc()
    ref = spla.eigsh(K, k=1, M=M, sigma=0, which="LM")[0][0]
    assert lam == pytest.approx(ref, rel=1e-9)
    # conforming P1 eigenvalues lie above the continuous one and converge to it
    assert 2 * math.pi**2 <= lam <= 2 * math.pi**2 * 1.05


def test_korn_constant_bound(rng):
    p = MaterialParams(lame_lambda=2.0, lame_mu=0.5)
    m = unit_rectangle_mesh(1, 1, 6)
    C_K = korn_constant(p, C_F_UNIT)
    assert C_K == pytest.approx(C_F_UNIT / math.sqrt(0.5))
    local = elasticity_element_matrices(m, p)
    M = mass_matrix(m)
    for _ in range(20):
        w = np.zeros((m.n_vertices, 2))
        w[m.interior_vertices] = rng.standard_normal((len(m.interior_vertices), 2))
        wl = w[m.cells].reshape(m.n_cells, 6)
        energy = np.einsum("ci,cij,cj->", wl, local, wl)
        l2 = sum(w[:, d] @ (M @ w[:, d]) for d in range(2))
        assert l2 <= C_K**2 * energy


# ---- beta selection ---------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(X=st.floats(1e-6, 1e6), Y=st.floats(1e-6, 1e6))
def test_optimal_beta_closed_form(X, Y):
    b = optimal_beta(X, Y)
    assert split_value(b, X, Y) == pytest.approx((math.sqrt(X) + math.sqrt(Y)) ** 2, rel=1e-12)
    for t in (0.5, 0.9, 1.1, 2.0):
        assert split_value(b, X, Y) <= split_value(b * t, X, Y) * (1 + 1e-14)


def test_optimal_beta_edge_cases():
    assert optimal_beta(0, 0) == 1.0
    assert optimal_beta(0, 1) >= 1e12
    assert optimal_beta(1, 0) <= 1e-12
    assert optimal_beta(1, 4) == pytest.approx(2.0)
    assert split_value(2.0, 1, 4) == pytest.approx(9.0)
    with pytest.raises(ValueError):
        optimal_beta(-1, 1)


@settings(max_examples=50, deadline=None)
@given(k1=st.floats(1e-3, 1e3), k2=st.floats(1e-3, 1e3))
def test_beta3_balances_split(k1, k2):
    p = MaterialParams(k1=k1, k2=k2)
    b3 = optimal_beta3(p)
    best = pressure_split_factor(p, b3)
    assert best == pytest.approx(1 / k1 + 1 / k2, rel=1e-12)
    for t in (0.8, 1.25):
        assert best <= pressure_split_factor(p, b3 * t) * (1 + 1e-12)


# ---- compound functionals ---------------------------------------------------


def test_DG_zero_for_matching_flux():
    m = unit_rectangle_mesh(1, 1, 4)
    x, y = m.vertices.T
    p = MaterialParams(k1=2, k2=3)
    q = PressurePair(m, x + y, 2 * x)
    yp = FluxPair(m, np.tile([2.0, 2.0], (m.n_vertices, 1)), np.tile([6.0, 0.0], (m.n_vertices, 1)))
    assert abs(compound_DG(q, yp, p)) < 1e-13


def test_DF_paper_exact_solution_equals_exchange(ms1):
    # at the exact solution the closed form equals kappa ||p1 - p2||^2 = 1/4 for MS1
    m = unit_rectangle_mesh(1, 1, 16)
    val = compound_DF_paper(ms1.exact_pressure(m), ms1.exact_flux(m), ms1.params, ms1.loads)
    assert val == pytest.approx(0.25, rel=1e-6)
    fen = compound_DF_fenchel(ms1.exact_pressure(m), ms1.exact_flux(m), ms1.params, ms1.loads)
    assert abs(fen) < 1e-14


def test_constraint_enforced(ms1_n8, ms1):
    _, q, y = ms1_n8
    with pytest.raises(ConstraintViolation):
        compound_DF_paper(q, y, ms1.params, ms1.loads)
    with pytest.raises(ValueError):
        majorant_constrained(q, y, ms1.params, ms1.loads, mode="other")


def test_kappa_zero_rejected(ms1_n8, ms1):
    _, q, y = ms1_n8
    with pytest.raises(ZeroDivisionError):
        majorant_total(q, y, MaterialParams(kappa=0.0), ms1.loads, C_F_UNIT)


def test_cross_term_identity(rng):
    m = unit_rectangle_mesh(1, 1, 4)
    p = MaterialParams(k1=1.3, k2=0.7, kappa=2.5)
    for _ in range(10):
        c = rng.uniform(-2, 2)
        q, y, loads = constrained_data(rng, m, c)
        x, yy = quadrature_points(m, DEGREE4)
        rho1 = field_divergence(y)[:, 0][:, None] + loads.h1(x, yy)
        diff = p1_at_points(m, q.q1 - q.q2, DEGREE4)
        pairing = float(np.sum(m.signed_areas()[:, None] * DEGREE4.weights * rho1 * diff))
        gap = compound_DF_paper(q, y, p, loads) - compound_DF_fenchel(q, y, p, loads)
        assert gap == pytest.approx(pairing, abs=1e-12)


def test_compound_integrands_cellwise_nonnegative(rng):
    m = unit_rectangle_mesh(1, 1, 4)
    p = MaterialParams(k1=0.4, k2=5.0, kappa=0.3)
    for _ in range(10):
        q, y, loads = constrained_data(rng, m, rng.uniform(-1, 1))
        assert compound_DG(q, y, p, cellwise=True).min() >= -1e-14
        assert compound_DF_fenchel(q, y, p, loads, cellwise=True).min() >= -1e-14


def test_constrained_majorant_bounds_half_energy(ms1):
    # the analytic flux lies in the equilibration subspace
    for n in (4, 8, 16):
        m = unit_rectangle_mesh(1, 1, n)
        q = solve_double_diffusion(m, ms1.params, ms1.loads)
        err = exact_diffusion_error(q, ms1)
        val = majorant_constrained(q, ms1.exact_flux(m), ms1.params, ms1.loads, mode="fenchel")
        assert 0.5 * err <= val * (1 + 1e-10)


# ---- penalized majorant -----------------------------------------------------


def test_DG_variant_selection():
    m = unit_rectangle_mesh(1, 1, 8)
    p = MaterialParams(k1=1.0, k2=10.0, kappa=1.0)
    s = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)  # noqa: E731
    loads = Loads(s, s)  # zero flux: equal residuals rho_1 = rho_2 = s
    q, y = PressurePair.zero(m), FluxPair.zero(m)
    both = DG_final(q, y, p, loads, 1.0, C_F_UNIT)
    assert both == pytest.approx(DG_final(q, y, p, loads, 1.0, C_F_UNIT, component=2))
    assert both < DG_final(q, y, p, loads, 1.0, C_F_UNIT, component=1)


def test_DF_final_against_cell_loop(ms1_n8, ms1):
    from biot_majorant.mesh import cell_geometry

    m, q, y = ms1_n8
    b2 = 0.7
    div = field_divergence(y)
    x, yy = quadrature_points(m, DEGREE4)
    h1, h2 = ms1.h1(x, yy), ms1.h2(x, yy)
    ex = r1 = r2 = 0.0
    for c in range(m.n_cells):
        area, _ = cell_geometry(m, c)
        v = m.cells[c]
        d = DEGREE4.points @ (q.q1[v] - q.q2[v])
        w = area * DEGREE4.weights
        ex += w @ d**2
        r1 += w @ (div[c, 0] + h1[c]) ** 2
        r2 += w @ (div[c, 1] + h2[c]) ** 2
    ref = 0.5 * ex + (1 + b2) / 4 * (r1 + r2) + (1 + 1 / b2) / 4 * r1
    assert DF_final(q, y, ms1.params, ms1.loads, b2, component=1) == pytest.approx(ref, rel=1e-10)
    with pytest.raises(ValueError):
        DF_final(q, y, ms1.params, ms1.loads, 0.0)


@pytest.mark.parametrize("mode", ["paper", "tight"])
def test_report_consistency(ms1_n8, ms1, mode):
    _, q, y = ms1_n8
    rep = majorant_total(q, y, ms1.params, ms1.loads, C_F_UNIT, mode)
    assert rep.combine() == pytest.approx(rep.total, rel=1e-14)
    assert rep.energy_bound == pytest.approx(rep.total * (2 if mode == "paper" else 1))
    scan = majorant_total(q, y, ms1.params, ms1.loads, C_F_UNIT, mode, beta_strategy="scan")
    assert rep.total <= scan.total * (1 + 1e-12)
    assert scan.total <= rep.total * 1.001
    fixed = majorant_total(q, y, ms1.params, ms1.loads, C_F_UNIT, mode, betas=(3.0, 0.2))
    assert rep.total <= fixed.total
    assert set(rep.to_dict()) >= {"DG_flux", "DG_div_penalty", "DF_B", "DF_equilibrium", "DF_div_penalty", "beta1", "beta2", "total"}


def test_exact_data_tight_majorant_vanishes(ms2):
    m = unit_rectangle_mesh(1, 1, 8)
    rep = majorant_total(ms2.exact_pressure(m), ms2.exact_flux(m), ms2.params, ms2.loads, C_F_UNIT, "tight")
    assert rep.total <= 1e-10


@pytest.mark.parametrize("mode", ["paper", "tight"])
def test_penalized_guarantee_random_fluxes(ms2, rng, mode):
    m = unit_rectangle_mesh(1, 1, 6)
    q = solve_double_diffusion(m, ms2.params, ms2.loads)
    err = exact_diffusion_error(q, ms2)
    target = 0.5 * err if mode == "paper" else err
    for scale in (0.0, 0.1, 1.0, 10.0):
        y = flux_nodal_average(q, ms2.params)
        yr = FluxPair(m, y.y1 + scale * rng.standard_normal(y.y1.shape), y.y2 + scale * rng.standard_normal(y.y2.shape))
        assert target <= majorant_total(q, yr, ms2.params, ms2.loads, C_F_UNIT, mode).total


# ---- elasticity and coupling ---------------------------------------------------


def test_elastic_terms_vanish_for_exact_fields():
    me1 = manufactured_case("ME1")
    m = unit_rectangle_mesh(1, 1, 8)
    t = elastic_terms(me1.exact_displacement(m), me1.exact_stress(m), me1.exact_pressure(m), me1.params, me1.f)
    assert t.constitutive < 1e-25 and t.equilibrium < 1e-20


def test_elastic_majorant_guarantee():
    me1 = manufactured_case("ME1")
    C_K = korn_constant(me1.params, C_F_UNIT)
    for n in (4, 8, 16):
        m = unit_rectangle_mesh(1, 1, n)
        v = solve_elasticity(m, me1.params, me1.f)
        tau = stress_nodal_average(v, me1.params)
        bound = elastic_majorant(v, tau, PressurePair.zero(m), me1.params, me1.f, C_K, 1.0, 0.0)
        assert exact_elastic_error(v, me1) <= bound


def test_coupled_constant_properties():
    p = MaterialParams(k1=2.0, k2=0.5, alpha1=1.0, alpha2=0.5)
    C_K = korn_constant(p, C_F_UNIT)
    base = coupled_constant(p, C_K, 4.0, 1.0, 1.0)
    assert base >= 1.0
    assert coupled_constant(p, C_K, 4.0, 2.0, 1.0) < base
    assert coupled_constant(p, C_K, 4.0, 1.0, 2.0) < base
    big = MaterialParams(alpha1=3.0)
    assert coupled_constant(big, C_K, 1.0, 1.0, 1.0) == pytest.approx(
        1 + 9 * (coupled_constant(MaterialParams(), C_K, 1.0, 1.0, 1.0) - 1)
    )


def test_coupled_beta_descent_not_worse():
    from biot_majorant.majorant import _coupled_rhs

    p = MaterialParams(alpha1=1.0, alpha2=0.5)
    C_K = korn_constant(p, C_F_UNIT)
    A, B, bound = 0.3, 2.0, 0.1
    betas = optimize_coupled_betas(A, B, bound, p, C_K)
    start = _coupled_rhs((optimal_beta3(p), 1.0, 1.0, 1.0), A, B, bound, p, C_K)[0]
    assert _coupled_rhs(betas, A, B, bound, p, C_K)[0] <= start


def test_coupled_zero_data():
    case = manufactured_case("MC1").zero_variant()
    m = unit_rectangle_mesh(1, 1, 4)
    q = solve_double_diffusion(m, case.params, case.loads)
    v = solve_elasticity(m, case.params, case.f, q)
    rep = majorant_total(q, flux_nodal_average(q, case.params), case.params, case.loads, C_F_UNIT)
    est = coupled_estimate(q, v, stress_nodal_average(v, case.params), case.params, case.f, rep,
                           korn_constant(case.params, C_F_UNIT), lhs_error=0.0)
    assert est.rhs_bound == 0.0 and est.holds
    with pytest.raises(ValueError):
        coupled_estimate(q, v, stress_nodal_average(v, case.params), case.params, case.f, rep, 1.0, betas=(1, 1, 0, 1))
