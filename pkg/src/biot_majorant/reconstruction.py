"""Admissible flux and stress reconstructions.

Both reconstructed fields are continuous and piecewise linear, so they are
H(div)-conforming with cellwise constant divergence.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .fem import MaterialParams, QuadratureRule, p1_at_points, stress
from .mesh import Mesh2D
from .solvers import DisplacementField, PressurePair

if TYPE_CHECKING:
    from .majorant import Loads


@dataclass(frozen=True, eq=False)
class FluxPair:
    """Nodal values of the two vector fluxes, each of shape (nv, 2)."""

    mesh: Mesh2D
    y1: np.ndarray
    y2: np.ndarray

    @classmethod
    def zero(cls, m: Mesh2D) -> "FluxPair":
        return cls(m, np.zeros((m.n_vertices, 2)), np.zeros((m.n_vertices, 2)))

    @classmethod
    def from_vector(cls, m: Mesh2D, c: np.ndarray) -> "FluxPair":
        c = np.asarray(c).reshape(m.n_vertices, 2, 2)
        return cls(m, c[:, 0, :].copy(), c[:, 1, :].copy())

    def as_vector(self) -> np.ndarray:
        """Flat coefficients ordered (vertex, component, direction)."""
        return np.stack([self.y1, self.y2], axis=1).ravel()

    def divergence(self) -> np.ndarray:
        return field_divergence(self)

    def sample(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """Values (nc, nq, 2, 2) indexed [component, direction] and divergences (nc, nq, 2)."""
        vals = p1_at_points(self.mesh, np.stack([self.y1, self.y2], axis=1), rule)
        div = np.repeat(self.divergence()[:, None, :], len(rule.weights), axis=1)
        return vals, div


@dataclass(frozen=True, eq=False)
class StressField:
    """Nodal symmetric stress stored as ``(tau11, tau22, tau12)``, shape (nv, 3)."""

    mesh: Mesh2D
    values: np.ndarray

    def tensor_nodal(self) -> np.ndarray:
        t = self.values
        return np.stack([np.stack([t[:, 0], t[:, 2]], 1), np.stack([t[:, 2], t[:, 1]], 1)], 1)

    def divergence(self) -> np.ndarray:
        return field_divergence(self)

    def sample(self, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
        """Tensors (nc, nq, 2, 2) and row-wise divergences (nc, nq, 2)."""
        vals = p1_at_points(self.mesh, self.tensor_nodal(), rule)
        div = np.repeat(self.divergence()[:, None, :], len(rule.weights), axis=1)
        return vals, div


def _average_to_nodes(m: Mesh2D, cell_values: np.ndarray) -> np.ndarray:
    """Area-weighted nodal average of cellwise constant data of shape (nc, ...)."""
    area = m.signed_areas()
    flat = cell_values.reshape(m.n_cells, -1)
    weight = np.bincount(m.cells.ravel(), weights=np.repeat(area, 3), minlength=m.n_vertices)
    out = np.empty((m.n_vertices, flat.shape[1]))
    for j in range(flat.shape[1]):
        out[:, j] = np.bincount(
            m.cells.ravel(), weights=np.repeat(area * flat[:, j], 3), minlength=m.n_vertices
        )
    out /= weight[:, None]
    return out.reshape((m.n_vertices,) + cell_values.shape[1:])


def flux_nodal_average(q: PressurePair, params: MaterialParams) -> FluxPair:
    """Average the cellwise fluxes ``k_i grad q_i`` to the vertices."""
    g1, g2 = q.gradients()
    m = q.mesh
    return FluxPair(m, _average_to_nodes(m, params.k1 * g1), _average_to_nodes(m, params.k2 * g2))


def stress_nodal_average(v: DisplacementField, params: MaterialParams) -> StressField:
    """Average the cellwise stress ``L eps(v)`` to the vertices."""
    sig = stress(params, v.strain())
    comps = np.column_stack([sig[:, 0, 0], sig[:, 1, 1], sig[:, 0, 1]])
    return StressField(v.mesh, _average_to_nodes(v.mesh, comps))


def field_divergence(y: FluxPair | StressField) -> np.ndarray:
    """Exact cellwise divergence of a nodal P1 field, shape (nc, 2).

    For a ``FluxPair`` the columns are ``div y1, div y2``; for a
    ``StressField`` they are the divergences of the two tensor rows.
    """
    if isinstance(y, FluxPair):
        nodal = np.stack([y.y1, y.y2], axis=1)  # (nv, i, d)
    elif isinstance(y, StressField):
        nodal = y.tensor_nodal()  # (nv, row, col)
    else:
        raise TypeError(f"cannot take the divergence of {type(y).__name__}")
    m = y.mesh
    _, grads = m.geometry()
    return np.einsum("ckid,ckd->ci", nodal[m.cells], grads)


def minimize_majorant_flux(
    q: PressurePair,
    start: FluxPair,
    params: MaterialParams,
    loads: "Loads",
    C_F: float,
    betas: Sequence[float] | None = None,
    iters: int = 50,
    mode: str = "tight",
    history: list[float] | None = None,
) -> FluxPair:
    """Sharpen the flux by conjugate gradients on the quadratic majorant.

    ``betas`` are held fixed during the descent; when omitted they are the
    closed-form optimum at ``start``. Each iteration lowers the fixed-beta
    majorant, so re-optimizing the betas afterwards cannot undo the gain.
    If ``history`` is given, the fixed-beta majorant value at the start and
    after every iteration is appended to it.
    """
    from .majorant import flux_quadratic_form

    if iters < 0:
        raise ValueError("iters must be non-negative")
    if iters == 0:
        return start
    form = flux_quadratic_form(q, start, params, loads, C_F, mode, betas)
    c0 = start.as_vector()
    if history is not None:
        history.append(form.value(c0))
        callback = lambda c: history.append(form.value(c))  # noqa: E731
    else:
        callback = None
    c = form.minimize(c0, iters, callback)
    return FluxPair.from_vector(q.mesh, c)
