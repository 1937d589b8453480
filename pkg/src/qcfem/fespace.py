"""Global spaces S_h^r, V_h^{r-1}, W_h, Q_h on a structured mesh.

Each space keeps a ``(ncells, nloc)`` map from local to global DOFs and a
boolean mask of DOFs that live on the boundary. Because every cell of a
structured box mesh has the same shape, one pushed-forward table serves all
cells.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import reference_element as ref
from .mesh import CellGeometry, Mesh
from .polynomials import curl, grad

KINDS = ("V", "S", "W", "Q")


@dataclass(frozen=True, eq=False)
class FESpace:
    kind: str
    r: int
    mesh: Mesh
    ndofs: int
    cell_dofs: np.ndarray
    boundary_mask: np.ndarray

    @property
    def nloc(self) -> int:
        return self.cell_dofs.shape[1]

    @cached_property
    def free_dofs(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @cached_property
    def owner_mask(self) -> np.ndarray:
        """True at (cell, local) for the first cell that touches each global DOF."""
        flat = self.cell_dofs.ravel()
        _, first = np.unique(flat, return_index=True)
        mask = np.zeros(flat.size, dtype=bool)
        mask[first] = True
        return mask.reshape(self.cell_dofs.shape)

    def __repr__(self) -> str:
        return f"FESpace({self.kind}, r={self.r}, ndofs={self.ndofs}, mesh={self.mesh.divisions})"


def build_space(m: Mesh, kind: str, r: int = 1) -> FESpace:
    """Build one of the four spaces with deterministic global numbering.

    V: edge moments grouped by edge then order, followed by face DOFs grouped
    by face then tangent. S: vertex values then (r=2) edge integrals.
    W: three face moments per face. Q: one value per cell.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind in ("V", "S") and r not in (1, 2):
        raise ValueError(f"r must be 1 or 2, got {r}")
    ne, nf = m.num_edges, m.num_faces
    if kind == "V":
        edge_part = (m.cell_edges[:, :, None] * r + np.arange(r)).reshape(m.num_cells, 12 * r)
        face_part = (r * ne + m.cell_faces[:, :, None] * 2 + np.arange(2)).reshape(m.num_cells, 12)
        cell_dofs = np.hstack([edge_part, face_part])
        mask = np.concatenate([np.repeat(m.boundary_edges, r), np.repeat(m.boundary_faces, 2)])
        ndofs = r * ne + 2 * nf
    elif kind == "S":
        parts = [m.cell_vertices]
        masks = [m.boundary_vertices]
        if r == 2:
            parts.append(m.num_vertices + m.cell_edges)
            masks.append(m.boundary_edges)
        cell_dofs = np.hstack(parts)
        mask = np.concatenate(masks)
        ndofs = m.num_vertices + (r - 1) * ne
    elif kind == "W":
        cell_dofs = (m.cell_faces[:, :, None] * 3 + np.arange(3)).reshape(m.num_cells, 18)
        mask = np.repeat(m.boundary_faces, 3)
        ndofs = 3 * nf
    else:
        cell_dofs = np.arange(m.num_cells)[:, None]
        mask = np.zeros(m.num_cells, dtype=bool)
        ndofs = m.num_cells
    return FESpace(kind, r, m, ndofs, cell_dofs, mask)


# ------------------------------------------------------------ DOF scaling

def v_dof_scale(r: int, half_extents) -> np.ndarray:
    """Factor turning pushed-forward reference dual functions into physical ones.

    Edge moments are invariant under the covariant map. A face moment picks up
    h_tau / h_n, so the matching basis function is multiplied by h_n / h_tau.
    """
    h = np.asarray(half_extents, dtype=float)
    scale = np.ones(12 * r + 12)
    for i, d in enumerate(ref.v_dofs(r)):
        if d.kind == "face_curl_tangential":
            n = ref.face_axis(d.entity)
            t = ref.face_tangent_axes(d.entity)[d.index]
            scale[i] = h[n] / h[t]
    return scale


def s_dof_scale(r: int, half_extents) -> np.ndarray:
    """Vertex values are invariant; the edge integral scales with the half-length."""
    h = np.asarray(half_extents, dtype=float)
    scale = np.ones(8 + (12 if r == 2 else 0))
    if r == 2:
        for e in range(12):
            scale[8 + e] = 1.0 / h[ref.edge_axis(e)]
    return scale


def w_dof_factor(half_extents) -> np.ndarray:
    """Physical face moment of a contravariantly mapped field = factor * reference moment."""
    h = np.asarray(half_extents, dtype=float)
    fac = np.empty(18)
    for f in range(6):
        n = ref.face_axis(f)
        for k in range(3):
            fac[3 * f + k] = h[k] / h[n]
    return fac


# ---------------------------------------------------------- pushforward

@dataclass
class PhysicalCellTable:
    """Physical basis data on one cell shape; shapes as in ReferenceTable."""

    values: np.ndarray
    curls: np.ndarray
    gradcurls: np.ndarray
    weights: np.ndarray
    points_ref: np.ndarray


def pushforward(geom: CellGeometry, table: ref.ReferenceTable, r: int | None = None) -> PhysicalCellTable:
    """Covariant map of values; curl and grad-curl follow the contravariant rule.

    When ``r`` is given the face-DOF rescaling is applied so the result is dual
    to the physical DOFs.
    """
    h = np.asarray(geom.half_extents, dtype=float)
    det = float(np.prod(h))
    values = table.values / h
    curls = table.curls * (h / det)
    gradcurls = table.gradcurls * (h / det)[:, None] / h[None, :]
    if r is not None:
        s = v_dof_scale(r, h)
        values = values * s[:, None, None]
        curls = curls * s[:, None, None]
        gradcurls = gradcurls * s[:, None, None, None]
    weights = table.rule.weights * det
    return PhysicalCellTable(values, curls, gradcurls, weights, table.rule.points)


@dataclass
class ScalarCellTable:
    values: np.ndarray
    grads: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def _s_reference(r: int, n: int):
    basis = ref.build_serendipity_basis(r)
    rule = ref.gauss_rule(n, "cell")
    vals = ref.ScalarPolyTable(basis.functions)(rule.points)
    grads = ref.VectorPolyTable([grad(p) for p in basis.functions])(rule.points)
    return vals, grads, rule


def pushforward_scalar(geom: CellGeometry, r: int, n: int) -> ScalarCellTable:
    vals, grads, rule = _s_reference(r, n)
    h = np.asarray(geom.half_extents, dtype=float)
    s = s_dof_scale(r, h)
    return ScalarCellTable(
        vals * s[:, None], grads / h * s[:, None, None], rule.weights * float(np.prod(h))
    )


@lru_cache(maxsize=None)
def reference_table(r: int, n: int) -> ref.ReferenceTable:
    return ref.tabulate(ref.build_dual_basis(r), ref.gauss_rule(n, "cell"))


def physical_table(space: FESpace, n: int) -> PhysicalCellTable:
    geom = space.mesh.cell_geometry(0)
    return pushforward(geom, reference_table(space.r, n), space.r)


# ------------------------------------------------------- local operators

def _frac_array(rows) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in rows])


@lru_cache(maxsize=None)
def reference_grad_matrix(r: int) -> np.ndarray:
    """V-DOFs of the gradients of the S dual basis on the reference cube."""
    sb = ref.build_serendipity_basis(r)
    dofs = ref.v_dofs(r)
    return _frac_array([[ref.apply_dof(d, grad(p)) for p in sb.functions] for d in dofs])


@lru_cache(maxsize=None)
def reference_curl_matrix(r: int) -> np.ndarray:
    """W-DOFs (face moments) of the curls of the V dual basis on the reference cube."""
    vb = ref.build_dual_basis(r)
    wf = ref.w_functionals()
    return _frac_array([[phi(curl(f)) for f in vb.functions] for phi in wf])


def reference_div_matrix() -> np.ndarray:
    """Cell integral of div w as a combination of W face moments (divergence theorem)."""
    D = np.zeros((1, 18))
    for f in range(6):
        D[0, 3 * f + ref.face_axis(f)] = ref.face_side(f)
    return D


def local_grad(r: int, half_extents) -> np.ndarray:
    return reference_grad_matrix(r) * s_dof_scale(r, half_extents)[None, :]


def local_curl(r: int, half_extents) -> np.ndarray:
    return (
        w_dof_factor(half_extents)[:, None]
        * reference_curl_matrix(r)
        * v_dof_scale(r, half_extents)[None, :]
    )


def local_div(half_extents) -> np.ndarray:
    # W-DOF -> cell integral; a physical normal moment already integrates w.n dA
    return reference_div_matrix()


def global_operator(row_space: FESpace, col_space: FESpace, local: np.ndarray):
    """Assemble a DOF-to-DOF operator, taking each row from its owner cell."""
    import scipy.sparse as sp

    rows, cols, vals = [], [], []
    owner = row_space.owner_mask
    for c in range(row_space.mesh.num_cells):
        rsel = np.flatnonzero(owner[c])
        if rsel.size == 0:
            continue
        block = local[rsel]
        rr = np.repeat(row_space.cell_dofs[c, rsel], local.shape[1])
        cc = np.tile(col_space.cell_dofs[c], rsel.size)
        rows.append(rr)
        cols.append(cc)
        vals.append(block.ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    keep = vals != 0
    return sp.csr_matrix(
        (vals[keep], (rows[keep], cols[keep])), shape=(row_space.ndofs, col_space.ndofs)
    )
