"""P1 assembly for the double-diffusion and plane-strain elasticity problems."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh2D

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


class DegenerateSystemError(ValueError):
    """The mesh has no free (interior) unknowns."""


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Barycentric quadrature on triangles; weights sum to one (multiply by area)."""

    points: np.ndarray  # (nq, 3)
    weights: np.ndarray  # (nq,)
    degree: int

    def __post_init__(self) -> None:
        if not np.isclose(self.weights.sum(), 1.0, rtol=0, atol=1e-14):
            raise ValueError("quadrature weights must sum to 1")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")


def _sym3(a: float) -> np.ndarray:
    b = 1.0 - 2.0 * a
    return np.array([[b, a, a], [a, b, a], [a, a, b]])


CENTROID = QuadratureRule(np.full((1, 3), 1.0 / 3.0), np.ones(1), 1)
DEGREE2 = QuadratureRule(_sym3(1.0 / 6.0), np.full(3, 1.0 / 3.0), 2)
# Dunavant 6-point rule
DEGREE4 = QuadratureRule(
    np.vstack([_sym3(0.445948490915965), _sym3(0.091576213509771)]),
    np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
    4,
)


def quadrature_points(m: Mesh2D, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    """Physical coordinates ``(x, y)``, each of shape (nc, nq)."""
    p = m.vertices[m.cells]  # (nc, 3, 2)
    xy = np.einsum("qk,ckd->cqd", rule.points, p)
    return xy[..., 0], xy[..., 1]


def p1_at_points(m: Mesh2D, values: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    """Evaluate nodal P1 data at quadrature points.

    ``values`` may have trailing dimensions, e.g. (nv, 2) for vector fields.
    """
    values = np.asarray(values, dtype=float)
    return np.einsum("qk,ck...->cq...", rule.points, values[m.cells])


def p1_gradients(m: Mesh2D, values: np.ndarray) -> np.ndarray:
    """Cellwise constant gradient of a nodal P1 field, shape (nc, 2)."""
    _, grads = m.geometry()
    return np.einsum("ck,ckd->cd", np.asarray(values, dtype=float)[m.cells], grads)


def interpolate(m: Mesh2D, f: ScalarField) -> np.ndarray:
    """Nodal interpolant of an analytic scalar field."""
    return np.asarray(f(m.vertices[:, 0], m.vertices[:, 1]), dtype=float) * np.ones(m.n_vertices)


Integrand = Union[ScalarField, np.ndarray, float]


def integrate(m: Mesh2D, integrand: Integrand, rule: QuadratureRule = DEGREE4) -> float:
    """Area-weighted quadrature over all cells.

    ``integrand`` is either a callable ``f(x, y)`` evaluated at the
    quadrature points, or an array of values already sampled at them with
    shape (nc, nq).
    """
    return float(np.sum(cell_integrals(m, integrand, rule)))


def cell_integrals(m: Mesh2D, integrand: Integrand, rule: QuadratureRule = DEGREE4) -> np.ndarray:
    """Per-cell integrals; shape (nc,)."""
    area = m.signed_areas()
    if callable(integrand):
        x, y = quadrature_points(m, rule)
        vals = np.asarray(integrand(x, y), dtype=float) * np.ones_like(x)
    else:
        vals = np.broadcast_to(np.asarray(integrand, dtype=float), (m.n_cells, len(rule.weights)))
    return area * (vals @ rule.weights)


# --------------------------------------------------------------------------
# material data
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MaterialParams:
    """Scalar model coefficients.

    ``k1, k2`` are permeabilities, ``kappa`` the exchange rate, ``alpha1,
    alpha2`` the Biot coupling coefficients and ``lame_lambda, lame_mu`` the
    plane-strain Lame constants.
    """

    k1: float = 1.0
    k2: float = 1.0
    kappa: float = 1.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    lame_lambda: float = 1.0
    lame_mu: float = 1.0

    def __post_init__(self) -> None:
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("permeabilities k1, k2 must be positive")
        if not self.kappa >= 0:
            raise ValueError("kappa must be non-negative")
        if not self.lame_lambda >= 0:
            raise ValueError("lame_lambda must be non-negative")
        if not self.lame_mu > 0:
            raise ValueError("lame_mu must be positive")

    @property
    def A(self) -> np.ndarray:
        return np.diag([self.k1, self.k2])

    @property
    def B(self) -> np.ndarray:
        return self.kappa * np.array([[1.0, -1.0], [-1.0, 1.0]])

    @property
    def k(self) -> tuple[float, float]:
        return (self.k1, self.k2)

    @property
    def alpha(self) -> tuple[float, float]:
        return (self.alpha1, self.alpha2)


def stress(params: MaterialParams, strain: np.ndarray) -> np.ndarray:
    """Hooke's law ``2 mu eps + lambda tr(eps) I`` on stacked (..., 2, 2) tensors."""
    tr = strain[..., 0, 0] + strain[..., 1, 1]
    out = 2.0 * params.lame_mu * strain
    out[..., 0, 0] += params.lame_lambda * tr
    out[..., 1, 1] += params.lame_lambda * tr
    return out


def compliance(params: MaterialParams, sigma: np.ndarray) -> np.ndarray:
    """Inverse of ``stress``."""
    mu, lam = params.lame_mu, params.lame_lambda
    tr = sigma[..., 0, 0] + sigma[..., 1, 1]
    out = sigma / (2.0 * mu)
    shift = lam * tr / (2.0 * mu * (2.0 * mu + 2.0 * lam))
    out[..., 0, 0] -= shift
    out[..., 1, 1] -= shift
    return out


def energy_density(params: MaterialParams, strain: np.ndarray) -> np.ndarray:
    """``L eps : eps``."""
    tr = strain[..., 0, 0] + strain[..., 1, 1]
    return 2.0 * params.lame_mu * np.einsum("...ij,...ij->...", strain, strain) + params.lame_lambda * tr**2


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """A symmetric sparse system over the free unknowns.

    ``dofs`` maps each row to its global index in the full (all-vertex)
    numbering used by the assembler that produced it.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofs: np.ndarray

    def __post_init__(self) -> None:
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n) or self.rhs.shape != (n,) or self.dofs.shape != (n,):
            raise ValueError("inconsistent system dimensions")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Row-major ordered (row, col, value) arrays."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]


def _scatter(m: Mesh2D, local: np.ndarray, n: int) -> sp.csr_matrix:
    rows = np.repeat(m.cells, 3, axis=1).ravel()
    cols = np.tile(m.cells, (1, 3)).ravel()
    mat = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def stiffness_matrix(m: Mesh2D) -> sp.csr_matrix:
    """Unweighted P1 stiffness ``int grad phi_i . grad phi_j`` on all vertices."""
    area, grads = m.geometry()
    local = area[:, None, None] * np.einsum("cid,cjd->cij", grads, grads)
    return _scatter(m, local, m.n_vertices)


def mass_matrix(m: Mesh2D) -> sp.csr_matrix:
    """Consistent P1 mass matrix on all vertices."""
    area = m.signed_areas()
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return _scatter(m, area[:, None, None] * ref, m.n_vertices)


def load_vector(m: Mesh2D, f: ScalarField, rule: QuadratureRule = DEGREE2) -> np.ndarray:
    """``int f phi_j`` for every vertex."""
    x, y = quadrature_points(m, rule)
    fx = np.asarray(f(x, y), dtype=float) * np.ones_like(x)
    local = m.signed_areas()[:, None] * np.einsum("cq,q,qk->ck", fx, rule.weights, rule.points)
    return np.bincount(m.cells.ravel(), weights=local.ravel(), minlength=m.n_vertices)


def assemble_diffusion_system(
    m: Mesh2D,
    params: MaterialParams,
    loads: tuple[ScalarField, ScalarField],
    lift: np.ndarray | None = None,
) -> SparseSystem:
    """Block system for the homogeneous parts ``(q1 - lift, q2 - lift)``.

    Unknowns are ordered ``[q1 on interior vertices, q2 on interior
    vertices]``; ``dofs`` holds ``component * nv + vertex``. The lift enters
    the right-hand side only through the stiffness terms, since its
    exchange contributions cancel.
    """
    interior = m.interior_vertices
    if len(interior) == 0:
        raise DegenerateSystemError("mesh has no interior vertices")
    nv = m.n_vertices
    K = stiffness_matrix(m)
    M = mass_matrix(m)
    Ki = K[interior][:, interior]
    Mi = M[interior][:, interior]
    kap = params.kappa
    mat = sp.bmat(
        [[params.k1 * Ki + kap * Mi, -kap * Mi], [-kap * Mi, params.k2 * Ki + kap * Mi]],
        format="csr",
    )
    mat.sort_indices()
    rhs = []
    for k, h in zip(params.k, (loads[0], loads[1])):
        b = load_vector(m, h)
        if lift is not None:
            b = b - k * (K @ np.asarray(lift, dtype=float))
        rhs.append(b[interior])
    dofs = np.concatenate([interior, nv + interior])
    return SparseSystem(mat, np.concatenate(rhs), dofs)


def elasticity_element_matrices(m: Mesh2D, params: MaterialParams) -> np.ndarray:
    """Local (nc, 6, 6) stiffness for interleaved dofs ``(u0x, u0y, u1x, ...)``."""
    area, grads = m.geometry()
    nc = m.n_cells
    Bm = np.zeros((nc, 3, 6))
    Bm[:, 0, 0::2] = grads[:, :, 0]
    Bm[:, 1, 1::2] = grads[:, :, 1]
    Bm[:, 2, 0::2] = grads[:, :, 1]
    Bm[:, 2, 1::2] = grads[:, :, 0]
    lam, mu = params.lame_lambda, params.lame_mu
    D = np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])
    return area[:, None, None] * np.einsum("cai,ab,cbj->cij", Bm, D, Bm)


def assemble_elasticity_system(
    m: Mesh2D,
    params: MaterialParams,
    body: VectorField,
    pressure_grads: np.ndarray | None = None,
) -> SparseSystem:
    """Vector-P1 system for ``int L eps(u) : eps(w) = int (f - g) . w``.

    ``pressure_grads`` is the cellwise constant ``alpha1 grad q1 + alpha2
    grad q2`` of shape (nc, 2). Displacements vanish on the whole boundary.
    Global dofs are interleaved, ``2 * vertex + component``.
    """
    interior = m.interior_vertices
    if len(interior) == 0:
        raise DegenerateSystemError("mesh has no interior vertices")
    nv = m.n_vertices
    local = elasticity_element_matrices(m, params)
    gdofs = np.stack([2 * m.cells, 2 * m.cells + 1], axis=2).reshape(-1, 6)
    rows = np.repeat(gdofs, 6, axis=1).ravel()
    cols = np.tile(gdofs, (1, 6)).ravel()
    K = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(2 * nv, 2 * nv))
    K.sum_duplicates()

    rule = DEGREE2
    x, y = quadrature_points(m, rule)
    fx, fy = body(x, y)
    f = np.stack([np.asarray(fx) * np.ones_like(x), np.asarray(fy) * np.ones_like(x)], axis=2)
    if pressure_grads is not None:
        f = f - np.asarray(pressure_grads)[:, None, :]
    local_b = m.signed_areas()[:, None, None] * np.einsum("cqd,q,qk->ckd", f, rule.weights, rule.points)
    b = np.bincount(gdofs.ravel(), weights=local_b.reshape(-1), minlength=2 * nv)

    free = np.stack([2 * interior, 2 * interior + 1], axis=1).ravel()
    mat = K[free][:, free].tocsr()
    mat.sort_indices()
    return SparseSystem(mat, b[free], free)
