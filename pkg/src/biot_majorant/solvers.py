"""Linear solves, discrete fields, and the energy functionals of the diffusion problem."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .fem import (
    DEGREE2,
    MaterialParams,
    QuadratureRule,
    ScalarField,
    SparseSystem,
    VectorField,
    assemble_diffusion_system,
    assemble_elasticity_system,
    integrate,
    p1_at_points,
    p1_gradients,
    quadrature_points,
)
from .mesh import Mesh2D

log = logging.getLogger(__name__)

DENSE_LIMIT = 500


class SolverError(RuntimeError):
    """Iterative solve did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float


def pcg(
    apply_A: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    x0: np.ndarray | None = None,
    diag: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    callback: Callable[[np.ndarray], None] | None = None,
    raise_on_fail: bool = True,
) -> SolveResult:
    """Jacobi-preconditioned conjugate gradients.

    Stops when ``||b - A x|| <= tol * ||b||``. ``callback`` is invoked with
    the iterate after every step.
    """
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    inv_d = np.ones_like(b) if diag is None else 1.0 / diag
    r = b - apply_A(x)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveResult(np.zeros_like(b), 0, 0.0)
    z = inv_d * r
    d = z.copy()
    rz = r @ z
    it = 0
    res = np.linalg.norm(r) / bnorm
    while res > tol and it < max_iter:
        Ad = apply_A(d)
        dAd = d @ Ad
        if dAd <= 0.0:
            break
        step = rz / dAd
        x += step * d
        r -= step * Ad
        z = inv_d * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
        it += 1
        res = np.linalg.norm(r) / bnorm
        if callback is not None:
            callback(x)
    if res > tol and raise_on_fail:
        raise SolverError("conjugate gradients did not converge", res, it)
    return SolveResult(x, it, res)


def solve_spd(
    system: SparseSystem | sp.spmatrix | np.ndarray,
    rhs: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int | None = None,
    method: str = "auto",
) -> SolveResult:
    """Solve a symmetric positive definite system.

    ``method`` is ``"dense"`` (Cholesky), ``"cg"``, or ``"auto"`` which uses
    Cholesky below ``DENSE_LIMIT`` unknowns.
    """
    if isinstance(system, SparseSystem):
        A, b = system.matrix, system.rhs
    else:
        A, b = system, rhs
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if method == "auto":
        method = "dense" if n < DENSE_LIMIT else "cg"
    if method == "dense":
        dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        x = sla.cho_solve(sla.cho_factor(dense), b)
        bnorm = np.linalg.norm(b)
        res = np.linalg.norm(b - dense @ x) / bnorm if bnorm > 0 else 0.0
        return SolveResult(x, 1, float(res))
    if method != "cg":
        raise ValueError(f"unknown method {method!r}")
    A = sp.csr_matrix(A)
    result = pcg(A.dot, b, diag=A.diagonal(), tol=tol, max_iter=max_iter or 10 * n)
    log.debug("pcg: %d iterations, residual %.2e", result.iterations, result.residual)
    return result


# --------------------------------------------------------------------------
# fields
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PressurePair:
    """Nodal P1 values of ``(q1, q2)`` including boundary values set by ``lift``."""

    mesh: Mesh2D
    q1: np.ndarray
    q2: np.ndarray
    lift: Optional[np.ndarray] = None

    @classmethod
    def zero(cls, m: Mesh2D) -> "PressurePair":
        return cls(m, np.zeros(m.n_vertices), np.zeros(m.n_vertices))

    @property
    def values(self) -> np.ndarray:
        """Stacked nodal values, shape (nv, 2)."""
        return np.column_stack([self.q1, self.q2])

    def homogeneous(self) -> "PressurePair":
        """The part ``q - lift`` vanishing on the boundary."""
        if self.lift is None:
            return self
        return PressurePair(self.mesh, self.q1 - self.lift, self.q2 - self.lift)

    def __sub__(self, other: "PressurePair") -> "PressurePair":
        _check_mesh(self.mesh, other.mesh)
        return PressurePair(self.mesh, self.q1 - other.q1, self.q2 - other.q2)

    def gradients(self) -> tuple[np.ndarray, np.ndarray]:
        return p1_gradients(self.mesh, self.q1), p1_gradients(self.mesh, self.q2)

    def sample(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """Values (nc, nq, 2) and gradients (nc, nq, 2, 2) indexed [component, direction]."""
        vals = p1_at_points(self.mesh, self.values, rule)
        g = np.stack(self.gradients(), axis=1)
        return vals, np.repeat(g[:, None], len(rule.weights), axis=1)


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Nodal vector-P1 displacement, shape (nv, 2)."""

    mesh: Mesh2D
    values: np.ndarray

    @classmethod
    def zero(cls, m: Mesh2D) -> "DisplacementField":
        return cls(m, np.zeros((m.n_vertices, 2)))

    def strain(self) -> np.ndarray:
        """Cellwise constant symmetric gradient, shape (nc, 2, 2)."""
        _, grads = self.mesh.geometry()
        G = np.einsum("ckd,cke->cde", self.values[self.mesh.cells], grads)  # G[d, e] = d u_d / d x_e
        return 0.5 * (G + np.swapaxes(G, 1, 2))

    def sample(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """Values (nc, nq, 2) and strains (nc, nq, 2, 2)."""
        vals = p1_at_points(self.mesh, self.values, rule)
        return vals, np.repeat(self.strain()[:, None], len(rule.weights), axis=1)


def _check_mesh(a: Mesh2D, b: Mesh2D) -> None:
    if a is not b:
        raise ValueError("fields live on different meshes")


# --------------------------------------------------------------------------
# physics solves
# --------------------------------------------------------------------------


def solve_double_diffusion(
    m: Mesh2D,
    params: MaterialParams,
    loads: tuple[ScalarField, ScalarField],
    lift: np.ndarray | None = None,
    tol: float = 1e-10,
) -> PressurePair:
    """Discrete minimizer of the double-diffusion energy in the P1 pair space."""
    system = assemble_diffusion_system(m, params, loads, lift)
    x = solve_spd(system, tol=tol).x
    nv = m.n_vertices
    full = np.zeros(2 * nv)
    full[system.dofs] = x
    base = np.zeros(nv) if lift is None else np.asarray(lift, dtype=float)
    return PressurePair(m, full[:nv] + base, full[nv:] + base, None if lift is None else base)


def pressure_load(q: PressurePair, params: MaterialParams) -> np.ndarray:
    """Cellwise ``alpha1 grad q1 + alpha2 grad q2``."""
    g1, g2 = q.gradients()
    return params.alpha1 * g1 + params.alpha2 * g2


def solve_elasticity(
    m: Mesh2D,
    params: MaterialParams,
    f: VectorField,
    q: PressurePair | None = None,
    tol: float = 1e-10,
) -> DisplacementField:
    """Plane-strain displacement driven by ``f`` and the pressure gradients of ``q``."""
    grads = None if q is None else pressure_load(q, params)
    system = assemble_elasticity_system(m, params, f, grads)
    x = solve_spd(system, tol=tol).x
    full = np.zeros(2 * m.n_vertices)
    full[system.dofs] = x
    return DisplacementField(m, full.reshape(-1, 2))


# --------------------------------------------------------------------------
# energy forms
# --------------------------------------------------------------------------


def energy_a(d1: PressurePair, d2: PressurePair, params: MaterialParams) -> float:
    """``int A grad d1 : grad d2 + B d1 . d2``."""
    m = d1.mesh
    _check_mesh(m, d2.mesh)
    area = m.signed_areas()
    g11, g12 = d1.gradients()
    g21, g22 = d2.gradients()
    diffusion = area @ (params.k1 * np.sum(g11 * g21, axis=1) + params.k2 * np.sum(g12 * g22, axis=1))
    s1 = p1_at_points(m, d1.q1 - d1.q2, DEGREE2)
    s2 = p1_at_points(m, d2.q1 - d2.q2, DEGREE2)
    exchange = params.kappa * integrate(m, s1 * s2, DEGREE2)
    return float(diffusion + exchange)


def load_functional(
    w: PressurePair,
    params: MaterialParams,
    loads: tuple[ScalarField, ScalarField],
    lift: np.ndarray | None = None,
    rule: QuadratureRule = DEGREE2,
) -> float:
    """``l(w) = int h . w - k_i grad lift . grad w_i``; ``w`` must vanish on the boundary."""
    m = w.mesh
    x, y = quadrature_points(m, rule)
    total = 0.0
    for h, wi in zip(loads, (w.q1, w.q2)):
        total += integrate(m, np.asarray(h(x, y)) * p1_at_points(m, wi, rule), rule)
    if lift is not None:
        gl = p1_gradients(m, lift)
        area = m.signed_areas()
        for k, wi in zip(params.k, (w.q1, w.q2)):
            total -= k * float(area @ np.sum(gl * p1_gradients(m, wi), axis=1))
    return total


def functional_J(
    q: PressurePair,
    params: MaterialParams,
    loads: tuple[ScalarField, ScalarField],
    rule: QuadratureRule = DEGREE2,
) -> float:
    """Energy ``F(q) + G(grad q)`` of the homogeneous part of ``q``.

    The default rule matches the one used for load assembly, so the
    quadratic identity ``J(q) - J(q_h) = a(q - q_h, q - q_h) / 2`` holds to
    solver precision in the discrete space.
    """
    w = q.homogeneous()
    return 0.5 * energy_a(w, w, params) - load_functional(w, params, loads, q.lift, rule)
