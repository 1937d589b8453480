"""Element-wise error norms against a manufactured solution."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..assembly import ProblemParams, SolutionField
from ..fespace import physical_table, pushforward_scalar
from .manufactured import ManufacturedSolution

ERROR_QUAD = 6
_CHUNK = 2048


@dataclass(frozen=True)
class ErrorReport:
    """Error norms of u - u_h.

    ``energy`` is the a_h-norm, sqrt(eps*curl_h1^2 + alpha*curl_l2^2 + beta*l2^2).
    ``energy_sum`` adds the weighted norms instead of their squares,
    sqrt(eps)*curl_h1 + sqrt(alpha)*curl_l2 + sqrt(beta)*l2, the convention
    used by the boundary-layer reference values.
    """

    l2: float
    curl_l2: float
    curl_h1: float
    energy: float
    gradcurl: float
    energy_sum: float

    def as_dict(self) -> dict:
        return asdict(self)


def _combine(l2, cl2, ch1, params: ProblemParams) -> ErrorReport:
    e, a, b = params.eps, params.alpha, params.beta
    return ErrorReport(
        l2=l2,
        curl_l2=cl2,
        curl_h1=ch1,
        energy=math.sqrt(e * ch1**2 + a * cl2**2 + b * l2**2),
        gradcurl=math.sqrt(e * ch1**2 + cl2**2 + l2**2),
        energy_sum=math.sqrt(e) * ch1 + math.sqrt(a) * cl2 + math.sqrt(b) * l2,
    )


def error_norms(
    exact: ManufacturedSolution,
    u_h: SolutionField,
    params: ProblemParams | None = None,
    quad: int = ERROR_QUAD,
) -> ErrorReport:
    params = params or exact.params
    V = u_h.space
    m = V.mesh
    t = physical_table(V, quad)
    coef = u_h.local()
    s_l2 = s_c = s_g = 0.0
    for start in range(0, m.num_cells, _CHUNK):
        cells = slice(start, min(start + _CHUNK, m.num_cells))
        pts = m.map_points(t.points_ref)[cells].reshape(-1, 3)
        c = coef[cells]
        nc = c.shape[0]
        uh = np.einsum("cj,jqk->cqk", c, t.values)
        ch = np.einsum("cj,jqk->cqk", c, t.curls)
        gh = np.einsum("cj,jqkl->cqkl", c, t.gradcurls)
        du = exact.u(pts).reshape(nc, -1, 3) - uh
        dc = exact.curl_u(pts).reshape(nc, -1, 3) - ch
        dg = exact.gradcurl_u(pts).reshape(nc, -1, 3, 3) - gh
        s_l2 += float(np.einsum("cqk,q->", du**2, t.weights))
        s_c += float(np.einsum("cqk,q->", dc**2, t.weights))
        s_g += float(np.einsum("cqkl,q->", dg**2, t.weights))
    return _combine(math.sqrt(s_l2), math.sqrt(s_c), math.sqrt(s_g), params)


def field_l2_norm(field: SolutionField, quad: int = ERROR_QUAD) -> float:
    """L2 norm of a V_h or S_h field."""
    sp_ = field.space
    m = sp_.mesh
    c = field.local()
    if sp_.kind == "V":
        t = physical_table(sp_, quad)
        vals = np.einsum("cj,jqk->cqk", c, t.values)
        return math.sqrt(float(np.einsum("cqk,q->", vals**2, t.weights)))
    if sp_.kind == "S":
        st = pushforward_scalar(m.cell_geometry(0), sp_.r, quad)
        vals = c @ st.values
        return math.sqrt(float(((vals**2) @ st.weights).sum()))
    raise ValueError(f"no L2 norm for space kind {sp_.kind}")


def function_l2_norm(fn, mesh, quad: int = ERROR_QUAD) -> float:
    """L2 norm of an analytic vector field over the mesh."""
    from ..reference_element import gauss_rule

    rule = gauss_rule(quad, "cell")
    w = rule.weights * float(np.prod(mesh.half_extents))
    total = 0.0
    for start in range(0, mesh.num_cells, _CHUNK):
        pts = mesh.map_points(rule.points)[start:start + _CHUNK]
        vals = fn(pts.reshape(-1, 3)).reshape(pts.shape[0], -1, 3)
        total += float(np.einsum("cqk,q->", vals**2, w))
    return math.sqrt(total)
