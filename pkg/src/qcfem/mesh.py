"""Structured axis-aligned cuboid meshes of a box.

Global numbering is lexicographic with x fastest. Edges come in three blocks
(x-, y-, then z-parallel) and faces in three blocks (x-, y-, then z-normal).
All tangents and normals point along the positive axes, so neighbouring cells
always agree on orientation.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import reference_element as ref


@dataclass(frozen=True)
class CellGeometry:
    center: np.ndarray
    half_extents: np.ndarray

    @property
    def B(self) -> np.ndarray:
        return np.diag(self.half_extents)

    @property
    def det(self) -> float:
        return float(np.prod(self.half_extents))

    @property
    def diameter(self) -> float:
        return float(2 * np.linalg.norm(self.half_extents))

    def map(self, xhat: np.ndarray) -> np.ndarray:
        return np.asarray(xhat) * self.half_extents + self.center


@dataclass(frozen=True)
class Mesh:
    bounds: tuple[tuple[float, float], ...]
    divisions: tuple[int, int, int]

    # counts --------------------------------------------------------------
    @property
    def num_cells(self) -> int:
        n1, n2, n3 = self.divisions
        return n1 * n2 * n3

    @property
    def num_vertices(self) -> int:
        n1, n2, n3 = self.divisions
        return (n1 + 1) * (n2 + 1) * (n3 + 1)

    def _edge_shape(self, t: int) -> tuple[int, int, int]:
        return tuple(n if k == t else n + 1 for k, n in enumerate(self.divisions))

    def _face_shape(self, t: int) -> tuple[int, int, int]:
        return tuple(n + 1 if k == t else n for k, n in enumerate(self.divisions))

    @cached_property
    def edge_offsets(self) -> tuple[int, int, int, int]:
        sizes = [int(np.prod(self._edge_shape(t))) for t in range(3)]
        return (0, sizes[0], sizes[0] + sizes[1], sum(sizes))

    @cached_property
    def face_offsets(self) -> tuple[int, int, int, int]:
        sizes = [int(np.prod(self._face_shape(t))) for t in range(3)]
        return (0, sizes[0], sizes[0] + sizes[1], sum(sizes))

    @property
    def num_edges(self) -> int:
        return self.edge_offsets[3]

    @property
    def num_faces(self) -> int:
        return self.face_offsets[3]

    @property
    def h(self) -> np.ndarray:
        """Cell side lengths along each axis."""
        return np.array([(b - a) / n for (a, b), n in zip(self.bounds, self.divisions)])

    @property
    def h_max(self) -> float:
        return float(np.linalg.norm(self.h))

    # indexing ------------------------------------------------------------
    @staticmethod
    def _lex(idx, shape) -> np.ndarray:
        i, j, k = idx
        return i + shape[0] * (j + shape[1] * k)

    def vertex_id(self, i, j, k):
        n1, n2, _ = self.divisions
        return self._lex((i, j, k), (n1 + 1, n2 + 1))

    def edge_id(self, t: int, i, j, k):
        return self.edge_offsets[t] + self._lex((i, j, k), self._edge_shape(t))

    def face_id(self, t: int, i, j, k):
        return self.face_offsets[t] + self._lex((i, j, k), self._face_shape(t))

    @cached_property
    def cell_index(self) -> np.ndarray:
        """(ncells, 3) integer position of each cell."""
        n1, n2, n3 = self.divisions
        k, j, i = np.meshgrid(np.arange(n3), np.arange(n2), np.arange(n1), indexing="ij")
        return np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1)

    @cached_property
    def cell_vertices(self) -> np.ndarray:
        ijk = self.cell_index
        out = np.empty((self.num_cells, 8), dtype=np.int64)
        for v in range(8):
            a, b, c = v & 1, (v >> 1) & 1, (v >> 2) & 1
            out[:, v] = self.vertex_id(ijk[:, 0] + a, ijk[:, 1] + b, ijk[:, 2] + c)
        return out

    @cached_property
    def cell_edges(self) -> np.ndarray:
        ijk = self.cell_index
        out = np.empty((self.num_cells, 12), dtype=np.int64)
        for e in range(12):
            t = ref.edge_axis(e)
            off = [0, 0, 0]
            for k, val in ref.edge_fixed(e).items():
                off[k] = (val + 1) // 2
            out[:, e] = self.edge_id(t, ijk[:, 0] + off[0], ijk[:, 1] + off[1], ijk[:, 2] + off[2])
        return out

    @cached_property
    def cell_faces(self) -> np.ndarray:
        ijk = self.cell_index
        out = np.empty((self.num_cells, 6), dtype=np.int64)
        for f in range(6):
            t = ref.face_axis(f)
            off = [0, 0, 0]
            off[t] = (ref.face_side(f) + 1) // 2
            out[:, f] = self.face_id(t, ijk[:, 0] + off[0], ijk[:, 1] + off[1], ijk[:, 2] + off[2])
        return out

    # geometry ------------------------------------------------------------
    @cached_property
    def cell_centers(self) -> np.ndarray:
        lo = np.array([a for a, _ in self.bounds])
        return lo + (self.cell_index + 0.5) * self.h

    @property
    def half_extents(self) -> np.ndarray:
        return self.h / 2

    def cell_geometry(self, cell: int) -> CellGeometry:
        if not 0 <= cell < self.num_cells:
            raise IndexError(f"cell {cell} out of range")
        return CellGeometry(self.cell_centers[cell].copy(), self.half_extents.copy())

    @cached_property
    def edge_centers(self) -> np.ndarray:
        lo = np.array([a for a, _ in self.bounds])
        out = np.empty((self.num_edges, 3))
        for t in range(3):
            shape = self._edge_shape(t)
            k, j, i = np.meshgrid(*(np.arange(m) for m in shape[::-1]), indexing="ij")
            pos = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1).astype(float)
            pos[:, t] += 0.5
            out[self.edge_id(t, i, j, k).ravel()] = lo + pos * self.h
        return out

    @cached_property
    def edge_axes(self) -> np.ndarray:
        return np.repeat(np.arange(3), np.diff(self.edge_offsets))

    @cached_property
    def face_centers(self) -> np.ndarray:
        lo = np.array([a for a, _ in self.bounds])
        out = np.empty((self.num_faces, 3))
        for t in range(3):
            shape = self._face_shape(t)
            k, j, i = np.meshgrid(*(np.arange(m) for m in shape[::-1]), indexing="ij")
            pos = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1).astype(float)
            pos[:, [a for a in range(3) if a != t]] += 0.5
            out[self.face_id(t, i, j, k).ravel()] = lo + pos * self.h
        return out

    @cached_property
    def face_axes(self) -> np.ndarray:
        return np.repeat(np.arange(3), np.diff(self.face_offsets))

    @cached_property
    def vertex_coords(self) -> np.ndarray:
        lo = np.array([a for a, _ in self.bounds])
        n1, n2, n3 = self.divisions
        k, j, i = np.meshgrid(np.arange(n3 + 1), np.arange(n2 + 1), np.arange(n1 + 1), indexing="ij")
        pos = np.stack([i.ravel(), j.ravel(), k.ravel()], axis=1)
        return lo + pos * self.h

    def map_points(self, xhat: np.ndarray) -> np.ndarray:
        """Reference points (nq, 3) to physical points (ncells, nq, 3)."""
        return self.cell_centers[:, None, :] + np.asarray(xhat)[None, :, :] * self.half_extents

    # boundary ------------------------------------------------------------
    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        n = self.divisions
        mask = np.zeros(self.num_vertices, dtype=bool)
        k, j, i = np.meshgrid(*(np.arange(m + 1) for m in n[::-1]), indexing="ij")
        on = (i == 0) | (i == n[0]) | (j == 0) | (j == n[1]) | (k == 0) | (k == n[2])
        mask[self.vertex_id(i, j, k).ravel()] = on.ravel()
        return mask

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        mask = np.zeros(self.num_edges, dtype=bool)
        for t in range(3):
            shape = self._edge_shape(t)
            k, j, i = np.meshgrid(*(np.arange(m) for m in shape[::-1]), indexing="ij")
            pos = (i, j, k)
            on = np.zeros(i.shape, dtype=bool)
            for a in range(3):
                if a != t:
                    on |= (pos[a] == 0) | (pos[a] == self.divisions[a])
            mask[self.edge_id(t, i, j, k).ravel()] = on.ravel()
        return mask

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        mask = np.zeros(self.num_faces, dtype=bool)
        for t in range(3):
            shape = self._face_shape(t)
            k, j, i = np.meshgrid(*(np.arange(m) for m in shape[::-1]), indexing="ij")
            pos = (i, j, k)
            on = (pos[t] == 0) | (pos[t] == self.divisions[t])
            mask[self.face_id(t, i, j, k).ravel()] = on.ravel()
        return mask

    def boundary_entities(self) -> dict[str, np.ndarray]:
        return {
            "vertices": np.flatnonzero(self.boundary_vertices),
            "edges": np.flatnonzero(self.boundary_edges),
            "faces": np.flatnonzero(self.boundary_faces),
        }

    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_faces - self.num_cells


def build_box_mesh(bounds=((0.0, 1.0),) * 3, divisions=(2, 2, 2)) -> Mesh:
    bounds = tuple((float(a), float(b)) for a, b in bounds)
    divisions = tuple(int(n) for n in divisions)
    if len(bounds) != 3 or len(divisions) != 3:
        raise ValueError("need three bounds and three division counts")
    if any(n < 1 for n in divisions):
        raise ValueError(f"divisions must be >= 1, got {divisions}")
    if any(b <= a for a, b in bounds):
        raise ValueError(f"degenerate box {bounds}")
    return Mesh(bounds, divisions)


def unit_cube_mesh(n: int) -> Mesh:
    return build_box_mesh(((0.0, 1.0),) * 3, (n, n, n))


def boundary_entities(m: Mesh) -> dict[str, np.ndarray]:
    return m.boundary_entities()


def cell_geometry(m: Mesh, cell: int) -> CellGeometry:
    return m.cell_geometry(cell)
