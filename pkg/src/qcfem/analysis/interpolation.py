"""Canonical interpolation operators defined by the DOFs of each space.

Because the global bases are dual to the physical DOFs, the interpolant's
coefficient vector is just the vector of DOF values, evaluated here by Gauss
quadrature on the physical edges, faces and cells.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

from .. import reference_element as ref
from ..assembly import SolutionField
from ..fespace import FESpace, build_space
from ..mesh import Mesh

Evaluator = Callable[[np.ndarray], np.ndarray]

DOF_QUAD = 6


def _edge_points(m: Mesh, n: int):
    """Quadrature points (nedges, n, 3), reference abscissae s (n,), weights (n,) and half-lengths."""
    s, w = np.polynomial.legendre.leggauss(n)
    half = m.half_extents[m.edge_axes]
    pts = np.repeat(m.edge_centers[:, None, :], n, axis=1)
    idx = np.arange(m.num_edges)
    pts[idx[:, None], np.arange(n)[None, :], m.edge_axes[:, None]] += s[None, :] * half[:, None]
    return pts, s, w, half


def _face_points(m: Mesh, n: int):
    """Quadrature points (nfaces, n*n, 3), reference abscissae (n*n, 2), weights and area factor."""
    s, w = np.polynomial.legendre.leggauss(n)
    sa, sb = np.meshgrid(s, s, indexing="ij")
    st = np.stack([sa.ravel(), sb.ravel()], axis=1)
    ww = np.outer(w, w).ravel()
    pts = np.repeat(m.face_centers[:, None, :], n * n, axis=1)
    area = np.empty(m.num_faces)
    for t in range(3):
        sl = slice(m.face_offsets[t], m.face_offsets[t + 1])
        a, b = (k for k in range(3) if k != t)
        pts[sl, :, a] += st[None, :, 0] * m.half_extents[a]
        pts[sl, :, b] += st[None, :, 1] * m.half_extents[b]
        area[sl] = m.half_extents[a] * m.half_extents[b]
    return pts, ww, area


def edge_moments(m: Mesh, v: Evaluator, r: int, n: int = DOF_QUAD) -> np.ndarray:
    """∫_e v·τ q ds for q in {1, s}[:r]; returns (nedges, r)."""
    pts, s, w, half = _edge_points(m, n)
    vals = v(pts.reshape(-1, 3)).reshape(m.num_edges, n, 3)
    vt = np.take_along_axis(vals, m.edge_axes[:, None, None], axis=2)[..., 0]
    out = np.empty((m.num_edges, r))
    for q in range(r):
        out[:, q] = (vt * (w * s**q)[None, :]).sum(axis=1) * half
    return out


def face_moments(m: Mesh, v: Evaluator, n: int = DOF_QUAD) -> np.ndarray:
    """∫_f v dA per face; returns (nfaces, 3)."""
    pts, ww, area = _face_points(m, n)
    vals = v(pts.reshape(-1, 3)).reshape(m.num_faces, -1, 3)
    return np.einsum("fqk,q->fk", vals, ww) * area[:, None]


def face_tangential_curl(m: Mesh, curl_v: Evaluator, n: int = DOF_QUAD) -> np.ndarray:
    """∫_f curl v·τ¹ dA and ∫_f curl v·τ² dA; returns (nfaces, 2)."""
    fm = face_moments(m, curl_v, n)
    out = np.empty((m.num_faces, 2))
    for t in range(3):
        sl = slice(m.face_offsets[t], m.face_offsets[t + 1])
        a, b = (k for k in range(3) if k != t)
        out[sl, 0] = fm[sl, a]
        out[sl, 1] = fm[sl, b]
    return out


def interpolate_R(u: Evaluator, curl_u: Evaluator, V: FESpace, n: int = DOF_QUAD) -> SolutionField:
    """R_h u: match edge moments of u and tangential face moments of curl u."""
    m = V.mesh
    e = edge_moments(m, u, V.r, n)
    f = face_tangential_curl(m, curl_u, n)
    return SolutionField(V, np.concatenate([e.ravel(), f.ravel()]))


def interpolate_S(s: Callable[[np.ndarray], np.ndarray], S: FESpace, n: int = DOF_QUAD) -> SolutionField:
    """π_h s: vertex values, plus (r=2) ∫_e s ds."""
    m = S.mesh
    vals = [np.asarray(s(m.vertex_coords), dtype=float)]
    if S.r == 2:
        pts, _, w, half = _edge_points(m, n)
        sv = np.asarray(s(pts.reshape(-1, 3)), dtype=float).reshape(m.num_edges, n)
        vals.append((sv * w).sum(axis=1) * half)
    return SolutionField(S, np.concatenate(vals))


def interpolate_W(w: Evaluator, W: FESpace, n: int = DOF_QUAD) -> SolutionField:
    """Π_h w: face moments ∫_f w dA."""
    return SolutionField(W, face_moments(W.mesh, w, n).ravel())


def interpolate_Q(q: Callable[[np.ndarray], np.ndarray], Q: FESpace, n: int = DOF_QUAD) -> SolutionField:
    """𝒫_h q: cell integrals."""
    m = Q.mesh
    rule = ref.gauss_rule(n, "cell")
    pts = m.map_points(rule.points)
    vals = np.asarray(q(pts.reshape(-1, 3)), dtype=float).reshape(m.num_cells, -1)
    return SolutionField(Q, vals @ rule.weights * float(np.prod(m.half_extents)))


# ---------------------------------------------------- edge-only subspace

def build_edge_space(m: Mesh, r: int) -> FESpace:
    """Conforming edge-element subspace (kind ``"Vc"``); its DOFs are V's edge DOFs."""
    V = build_space(m, "V", r)
    ne = 12 * r
    return FESpace("Vc", r, m, r * m.num_edges, V.cell_dofs[:, :ne].copy(), V.boundary_mask[: r * m.num_edges].copy())


def interpolate_I(v, r: int, m: Mesh | None = None, n: int = DOF_QUAD) -> SolutionField:
    """I_h: keep only the edge moments and expand in the edge-element subspace.

    ``v`` is either a SolutionField of V_h (edge moments read off its
    coefficients) or an analytic evaluator (edge moments by quadrature).
    """
    if isinstance(v, SolutionField):
        if v.space.kind != "V":
            raise ValueError("interpolate_I expects a field of V_h")
        m = v.space.mesh
        Vc = build_edge_space(m, v.space.r)
        return SolutionField(Vc, v.coefficients[: Vc.ndofs].copy())
    if m is None:
        raise ValueError("mesh required for analytic input")
    Vc = build_edge_space(m, r)
    return SolutionField(Vc, edge_moments(m, v, r, n).ravel())


@lru_cache(maxsize=None)
def edge_space_reference(r: int, n: int):
    nb = ref.build_nedelec_basis(r)
    return ref.tabulate(nb.functions, ref.gauss_rule(n, "cell"))
