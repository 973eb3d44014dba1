"""Fast invariant checks run by ``biot-majorant check``."""
from __future__ import annotations

import math
from typing import Callable, Iterator

import numpy as np

from .fem import DEGREE2, DEGREE4, integrate
from .majorant import (
    compound_DG,
    friedrichs_constant,
    majorant_total,
    optimal_beta,
    split_value,
)
from .mesh import refine_uniform, unit_rectangle_mesh
from .reconstruction import FluxPair, flux_nodal_average, minimize_majorant_flux
from .solvers import PressurePair, energy_a, functional_J, solve_double_diffusion
from .verification import exact_diffusion_error, manufactured_case


def _mesh_invariants() -> tuple[bool, str]:
    m = refine_uniform(unit_rectangle_mesh(2.0, 1.0, 3))
    area_ok = abs(m.signed_areas().sum() - 2.0) < 1e-12
    _, grads = m.geometry()
    return area_ok and np.abs(grads.sum(axis=1)).max() < 1e-12, f"{m.n_cells} cells"


def _quadrature_exactness() -> tuple[bool, str]:
    m = unit_rectangle_mesh(1.0, 1.0, 3)
    worst = 0.0
    for rule in (DEGREE2, DEGREE4):
        for i in range(rule.degree + 1):
            for j in range(rule.degree + 1 - i):
                exact = 1.0 / ((i + 1) * (j + 1))
                worst = max(worst, abs(integrate(m, lambda x, y: x**i * y**j, rule) - exact))
    return worst < 1e-13, f"max error {worst:.1e}"


def _quadratic_identity() -> tuple[bool, str]:
    case = manufactured_case("MS2")
    m = unit_rectangle_mesh(1.0, 1.0, 6)
    qh = solve_double_diffusion(m, case.params, case.loads)
    rng = np.random.default_rng(0)
    w = np.zeros((m.n_vertices, 2))
    w[m.interior_vertices] = rng.standard_normal((len(m.interior_vertices), 2))
    q = PressurePair(m, qh.q1 + w[:, 0], qh.q2 + w[:, 1])
    d = q - qh
    gap = functional_J(q, case.params, case.loads) - functional_J(qh, case.params, case.loads)
    diff = abs(gap - 0.5 * energy_a(d, d, case.params))
    return diff < 1e-10, f"|J(q) - J(q_h) - a/2| = {diff:.1e}"


def _beta_optimality() -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    grid = np.logspace(-4, 4, 1000)
    for X, Y in rng.uniform(1e-3, 10, size=(100, 2)):
        best = split_value(optimal_beta(X, Y), X, Y)
        if best > np.min(split_value(grid, X, Y)) + 1e-12:
            return False, f"X={X}, Y={Y}"
    return True, "100 pairs"


def _guarantees() -> tuple[bool, str]:
    C_F = friedrichs_constant(1.0, 1.0)
    worst = math.inf
    for cid in ("MS1", "MS2"):
        case = manufactured_case(cid)
        for n in (4, 8):
            m = unit_rectangle_mesh(1.0, 1.0, n)
            q = solve_double_diffusion(m, case.params, case.loads)
            y = flux_nodal_average(q, case.params)
            err = exact_diffusion_error(q, case)
            for mode, measure in (("paper", 0.5 * err), ("tight", err)):
                total = majorant_total(q, y, case.params, case.loads, C_F, mode).total
                worst = min(worst, (total - measure) / measure)
    return worst >= -1e-8, f"min relative slack {worst:.3f}"


def _sharpening() -> tuple[bool, str]:
    case = manufactured_case("MS1")
    C_F = friedrichs_constant(1.0, 1.0)
    m = unit_rectangle_mesh(1.0, 1.0, 8)
    q = solve_double_diffusion(m, case.params, case.loads)
    y0 = flux_nodal_average(q, case.params)
    history: list[float] = []
    y = minimize_majorant_flux(q, y0, case.params, case.loads, C_F, iters=20, history=history)
    before = majorant_total(q, y0, case.params, case.loads, C_F).total
    after = majorant_total(q, y, case.params, case.loads, C_F).total
    mono = bool(np.all(np.diff(history) <= 1e-12 * history[0]))
    return mono and after <= before, f"{before:.4f} -> {after:.4f}"


def _perfect_duality() -> tuple[bool, str]:
    case = manufactured_case("MS2")
    m = unit_rectangle_mesh(1.0, 1.0, 4)
    # a continuous P1 flux equals A grad q only for globally affine q
    x, y = m.vertices[:, 0], m.vertices[:, 1]
    qa = PressurePair(m, 2 * x - y, x + 3 * y)
    ya = FluxPair(m, np.tile([2.0 * case.params.k1, -case.params.k1], (m.n_vertices, 1)),
                  np.tile([case.params.k2, 3.0 * case.params.k2], (m.n_vertices, 1)))
    val = compound_DG(qa, ya, case.params)
    return abs(val) < 1e-13, f"D_G = {val:.1e}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "mesh invariants": _mesh_invariants,
    "quadrature exactness": _quadrature_exactness,
    "quadratic identity J(q) - J(q_h)": _quadratic_identity,
    "beta closed form optimality": _beta_optimality,
    "majorant guarantees (MS1, MS2)": _guarantees,
    "flux minimization descent": _sharpening,
    "D_G vanishes for y = A grad q": _perfect_duality,
}


def run_checks() -> Iterator[tuple[str, bool, str]]:
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        yield name, ok, detail
