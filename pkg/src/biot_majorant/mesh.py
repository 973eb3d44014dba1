"""Conforming triangulations of axis-aligned rectangles.

Meshes are immutable: vertex coordinates and connectivity live in read-only
numpy arrays and every operation returns a new ``Mesh2D``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Raised for invalid mesh arguments or malformed meshes."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _boundary_edges(cells: np.ndarray) -> np.ndarray:
    edges = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, idx, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
    # keep the orientation the edge has in its (single) cell, sorted by first occurrence
    once = np.sort(idx[counts == 1])
    return edges[once]


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Simplicial mesh of a rectangle ``[0, a] x [0, b]``.

    Attributes:
        vertices: (nv, 2) float array of coordinates.
        cells: (nc, 3) int array, counterclockwise vertex indices.
        boundary_edges: (ne, 2) int array of edges owned by a single cell.
        boundary_vertices: sorted int array of vertices on ``boundary_edges``.
        bounding_box: ``(a, b)``.
    """

    vertices: np.ndarray
    cells: np.ndarray
    bounding_box: tuple[float, float]
    boundary_edges: np.ndarray = field(init=False)
    boundary_vertices: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float)
        cells = np.asarray(self.cells, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise MeshError("vertices must have shape (nv, 2)")
        if cells.ndim != 2 or cells.shape[1] != 3:
            raise MeshError("cells must have shape (nc, 3)")
        if not np.all(np.isfinite(verts)):
            raise MeshError("vertex coordinates must be finite")
        if cells.size and (cells.min() < 0 or cells.max() >= len(verts)):
            raise MeshError("cell refers to a non-existent vertex")
        bedges = _boundary_edges(cells)
        object.__setattr__(self, "vertices", _readonly(verts))
        object.__setattr__(self, "cells", _readonly(cells))
        object.__setattr__(self, "bounding_box", (float(self.bounding_box[0]), float(self.bounding_box[1])))
        object.__setattr__(self, "boundary_edges", _readonly(bedges))
        object.__setattr__(self, "boundary_vertices", _readonly(np.unique(bedges)))
        if np.any(self.signed_areas() <= 0.0):
            raise MeshError("every cell must have strictly positive signed area")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def interior_vertices(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.flatnonzero(mask)

    @property
    def h(self) -> float:
        """Largest edge length."""
        p = self.vertices[self.cells]
        lengths = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return float(lengths.max())

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.cells]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def edges(self) -> np.ndarray:
        """All distinct edges as sorted vertex pairs."""
        c = self.cells
        e = np.concatenate([c[:, [0, 1]], c[:, [1, 2]], c[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def geometry(self) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized ``cell_geometry`` for all cells.

        Returns:
            areas of shape (nc,) and basis gradients of shape (nc, 3, 2).
        """
        p = self.vertices[self.cells]
        area = self.signed_areas()
        # gradient of lambda_i is the inward normal of the opposite edge / (2 area)
        x, y = p[..., 0], p[..., 1]
        gx = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        gy = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        grads = np.stack([gx, gy], axis=2) / (2.0 * area)[:, None, None]
        return area, grads


def unit_rectangle_mesh(a: float, b: float, n: int) -> Mesh2D:
    """Uniform criss triangulation of ``[0, a] x [0, b]`` with ``n`` squares per side.

    Each grid square is split along the diagonal from its lower-left to its
    upper-right corner. Vertices and cells are numbered row-major.
    """
    if not (a > 0 and b > 0):
        raise MeshError(f"rectangle sides must be positive, got a={a}, b={b}")
    if int(n) != n or n < 1:
        raise MeshError(f"n must be a positive integer, got {n}")
    n = int(n)
    xs = np.linspace(0.0, a, n + 1)
    ys = np.linspace(0.0, b, n + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh2D(vertices, cells, (a, b))


def refine_uniform(m: Mesh2D) -> Mesh2D:
    """Red refinement: split every triangle into four through its edge midpoints.

    Existing vertices keep their indices; midpoints are appended in the order
    of the sorted edge list.
    """
    edges = m.edges()
    nv = m.n_vertices
    mid = 0.5 * (m.vertices[edges[:, 0]] + m.vertices[edges[:, 1]])
    lookup = {(int(u), int(v)): nv + k for k, (u, v) in enumerate(edges)}

    def midpoint(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        return np.array([lookup[(int(x), int(y))] for x, y in zip(lo, hi)], dtype=np.int64)

    c = m.cells
    m01 = midpoint(c[:, 0], c[:, 1])
    m12 = midpoint(c[:, 1], c[:, 2])
    m20 = midpoint(c[:, 2], c[:, 0])
    children = np.stack(
        [
            np.column_stack([c[:, 0], m01, m20]),
            np.column_stack([m01, c[:, 1], m12]),
            np.column_stack([m20, m12, c[:, 2]]),
            np.column_stack([m01, m12, m20]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return Mesh2D(np.vstack([m.vertices, mid]), children, m.bounding_box)


def cell_geometry(m: Mesh2D, c: int) -> tuple[float, np.ndarray]:
    """Area of cell ``c`` and the (3, 2) gradients of its P1 basis functions."""
    if not 0 <= c < m.n_cells:
        raise IndexError(f"cell index {c} out of range [0, {m.n_cells})")
    p = m.vertices[m.cells[c]]
    T = np.array([p[1] - p[0], p[2] - p[0]]).T
    area = 0.5 * np.linalg.det(T)
    ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return float(area), ref @ np.linalg.inv(T)


def write_mesh(m: Mesh2D, path: str | Path) -> None:
    """Plain-text export: a vertex block ``index x y`` then a cell block ``index v0 v1 v2``."""
    lines = [f"vertices {m.n_vertices}"]
    lines += [f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(m.vertices.tolist())]
    lines.append(f"cells {m.n_cells}")
    lines += [f"{i} {a} {b} {c}" for i, (a, b, c) in enumerate(m.cells.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path: str | Path) -> Mesh2D:
    """Inverse of ``write_mesh``; the bounding box is taken from the vertex extent."""
    text = Path(path).read_text().split("\n")
    nv = int(text[0].split()[1])
    verts = np.array([[float(t) for t in line.split()[1:]] for line in text[1 : 1 + nv]])
    nc = int(text[1 + nv].split()[1])
    cells = np.array([[int(t) for t in line.split()[1:]] for line in text[2 + nv : 2 + nv + nc]])
    return Mesh2D(verts, cells, tuple(verts.max(axis=0) - verts.min(axis=0)))
