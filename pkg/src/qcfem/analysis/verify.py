"""Structural checks: unisolvence, complex exactness, commuting interpolations,
the jump property of the edge-only interpolant, and the discrete Poincaré
inequality on divergence-free subspaces."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction as Fr

import numpy as np
import scipy.linalg as sla

from .. import reference_element as ref
from ..assembly import global_form, local_forms
from ..fespace import (
    build_space,
    global_operator,
    local_curl,
    local_div,
    local_grad,
    v_dof_scale,
)
from ..mesh import Mesh
from ..polynomials import (
    X,
    Y,
    Z,
    Poly3,
    PolyVec3,
    curl,
    div,
    evaluate_many,
    grad,
    poincare_p,
    poincare_p3,
    random_field,
    random_poly,
)
from .interpolation import interpolate_Q, interpolate_R, interpolate_S, interpolate_W

RANK_RTOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def vector_evaluator(v: PolyVec3):
    return lambda pts: np.stack([evaluate_many(c, pts) for c in v], axis=-1)


def scalar_evaluator(p):
    return lambda pts: evaluate_many(p, pts)


# ------------------------------------------------------------ unisolvence

def verify_unisolvence(r: int) -> CheckResult:
    basis = ref.build_dual_basis(r)
    G = np.array([[float(x) for x in row] for row in basis.dof_matrix])
    C = np.array([[float(x) for x in row] for row in basis.dual_basis])
    err = float(np.abs(G @ C - np.eye(len(G))).max())
    return CheckResult(
        f"unisolvence r={r}", err <= 1e-12, err, 1e-12,
        {"ndofs": basis.ndofs, "condition": basis.condition},
    )


# Closed-form r = 1 reference functions: the y-parallel edge at x = +1, z = -1,
# both tangential curl moments of the x = +1 face, and the conforming edge
# function of that same edge.
def _known_basis() -> dict[str, PolyVec3]:
    one = Poly3.const(1)
    zero = Poly3()
    n_edge = PolyVec3((
        Fr(3, 64) * X * X * Y + Fr(3, 64) * Y**3 - Fr(1, 16) * Y,
        Fr(3, 16) * X - Fr(3, 64) * X * Y * Y - Fr(1, 8) * X * Z - Fr(3, 64) * X**3
        + Fr(3, 64) * Y * Y * Z + Fr(3, 64) * Z**3 - Fr(3, 16) * Z + Fr(1, 8) * one,
        Fr(1, 16) * Y - Fr(3, 64) * Y * Z * Z - Fr(3, 64) * Y**3,
    ))
    f_t1 = PolyVec3((
        Fr(3, 64) * Z * X * X + Fr(1, 24) * Z * X - Fr(1, 64) * Z,
        zero,
        Fr(3, 64) * X - Fr(1, 24) * X * X - Fr(3, 64) * X**3 + Fr(1, 24) * one,
    ))
    f_t2 = PolyVec3((
        Fr(1, 64) * Y - Fr(1, 24) * Y * X - Fr(3, 64) * Y * X * X,
        Fr(3, 64) * X**3 + Fr(1, 24) * X * X - Fr(3, 64) * X - Fr(1, 24) * one,
        zero,
    ))
    nc_edge = PolyVec3((zero, Fr(1, 8) * (one - Z) * (one + X), zero))
    return {"y_edge": n_edge, "xplus_face_t1": f_t1, "xplus_face_t2": f_t2, "y_edge_conforming": nc_edge}


def _max_coeff_diff(a: PolyVec3, b: PolyVec3) -> Fr:
    d = a - b
    return max((abs(c) for comp in d for c in comp.terms.values()), default=Fr(0))


def verify_known_basis() -> CheckResult:
    """Match each closed-form function against the computed dual bases up to sign."""
    pub = _known_basis()
    vfun = ref.build_dual_basis(1).functions
    nfun = ref.build_nedelec_basis(1).functions
    found: dict[str, tuple[int, int]] = {}
    worst = Fr(0)
    for name, target in pub.items():
        pool = nfun if name.endswith("conforming") else vfun
        best = None
        for i, g in enumerate(pool):
            for sign in (1, -1):
                diff = _max_coeff_diff(g * sign, target)
                if best is None or diff < best[0]:
                    best = (diff, i, sign)
        worst = max(worst, best[0])
        found[name] = (best[1], best[2])
    return CheckResult("closed-form r=1 basis functions", worst == 0, float(worst), 1e-12, found)


def verify_poincare(nrandom: int = 50, degree: int = 3, seed: int = 0) -> CheckResult:
    """curl p(w) + p3(div w) = w exactly, on the W generators and random fields."""
    rng = np.random.default_rng(seed)
    fields = ref.w_space_generators() + [random_field(rng, degree) for _ in range(nrandom)]
    worst = Fr(0)
    for w in fields:
        worst = max(worst, _max_coeff_diff(curl(poincare_p(w)) + poincare_p3(div(w)), w))
    return CheckResult("Poincaré homotopy identity", worst == 0, float(worst), 0.0, {"fields": len(fields)})


# ---------------------------------------------------------------- complex

@dataclass
class ComplexReport:
    r: int
    with_bc: bool
    dims: dict
    ranks: dict
    composition: dict
    alternating_sum: int
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def complex_matrices(m: Mesh, r: int):
    S, V, W, Q = (build_space(m, k, r) for k in ("S", "V", "W", "Q"))
    h = m.half_extents
    Gr = global_operator(V, S, local_grad(r, h))
    Cu = global_operator(W, V, local_curl(r, h))
    Dv = global_operator(Q, W, local_div(h))
    return (S, V, W, Q), (Gr, Cu, Dv)


def verify_complex(m: Mesh, r: int, with_bc: bool) -> ComplexReport:
    (S, V, W, Q), (Gr, Cu, Dv) = complex_matrices(m, r)
    Gr, Cu, Dv = Gr.toarray(), Cu.toarray(), Dv.toarray()
    if with_bc:
        fs, fv, fw = S.free_dofs, V.free_dofs, W.free_dofs
        Gr = Gr[np.ix_(fv, fs)]
        Cu = Cu[np.ix_(fw, fv)]
        Dv = Dv[:, fw]
        dims = {"S": fs.size, "V": fv.size, "W": fw.size, "Q": Q.ndofs - 1}
    else:
        dims = {"S": S.ndofs, "V": V.ndofs, "W": W.ndofs, "Q": Q.ndofs}
    rk = {"grad": numerical_rank(Gr), "curl": numerical_rank(Cu), "div": numerical_rank(Dv)}
    scale = max(np.abs(Gr).max(initial=0), np.abs(Cu).max(initial=0), np.abs(Dv).max(initial=0), 1.0)
    comp = {
        "curl_grad": float(np.abs(Cu @ Gr).max(initial=0)) / scale,
        "div_curl": float(np.abs(Dv @ Cu).max(initial=0)) / scale,
    }
    if with_bc:
        alt = dims["S"] - dims["V"] + dims["W"] - dims["Q"]
        grad_rank_expected = dims["S"]
        mean_free = float(np.abs(np.ones(Q.ndofs) @ Dv).max(initial=0)) <= 1e-12 * scale
    else:
        alt = 1 - dims["S"] + dims["V"] - dims["W"] + dims["Q"]
        grad_rank_expected = dims["S"] - 1
        mean_free = True
    checks = {
        "curl∘grad = 0": comp["curl_grad"] <= 1e-12,
        "div∘curl = 0": comp["div_curl"] <= 1e-12,
        "rank grad": rk["grad"] == grad_rank_expected,
        "exact at V": dims["V"] - rk["curl"] == rk["grad"],
        "exact at W": dims["W"] - rk["div"] == rk["curl"],
        "div onto Q": rk["div"] == dims["Q"] and mean_free,
        "alternating sum": alt == 0,
    }
    return ComplexReport(r, with_bc, dims, rk, comp, alt, checks)


# ------------------------------------------------------------- commuting

@dataclass
class CommutingReport:
    curl: float
    div: float
    grad: float

    @property
    def max_residual(self) -> float:
        return max(self.curl, self.div, self.grad)


def verify_commuting(m: Mesh, r: int, nfields: int = 20, degree: int = 3, seed: int = 0) -> CommutingReport:
    """Π_h curl u = curl_h R_h u, 𝒫_h div w = div_h Π_h w, R_h grad s = grad π_h s."""
    rng = np.random.default_rng(seed)
    (S, V, W, Q), (Gr, Cu, Dv) = complex_matrices(m, r)
    res = {"curl": 0.0, "div": 0.0, "grad": 0.0}
    for _ in range(nfields):
        u = random_field(rng, degree)
        cu = curl(u)
        Ru = interpolate_R(vector_evaluator(u), vector_evaluator(cu), V)
        lhs = interpolate_W(vector_evaluator(cu), W).coefficients
        res["curl"] = max(res["curl"], float(np.abs(lhs - Cu @ Ru.coefficients).max()))

        w = random_field(rng, degree)
        lhs = interpolate_Q(scalar_evaluator(div(w)), Q).coefficients
        rhs = Dv @ interpolate_W(vector_evaluator(w), W).coefficients
        res["div"] = max(res["div"], float(np.abs(lhs - rhs).max()))

        s = random_poly(rng, degree)
        gs = grad(s)
        zero = PolyVec3.zero()
        lhs = interpolate_R(vector_evaluator(gs), vector_evaluator(zero), V).coefficients
        rhs = Gr @ interpolate_S(scalar_evaluator(s), S).coefficients
        res["grad"] = max(res["grad"], float(np.abs(lhs - rhs).max()))
    return CommutingReport(**res)


# ---------------------------------------------------------- jump property

def _face_rule(n: int):
    s, w = np.polynomial.legendre.leggauss(n)
    a, b = np.meshgrid(s, s, indexing="ij")
    return np.stack([a.ravel(), b.ravel()], axis=1), np.outer(w, w).ravel()


@dataclass
class JumpReport:
    max_residual: float
    max_without_interpolant: float


def verify_jump_property(r: int, m: Mesh, n: int = 4) -> JumpReport:
    """max |∫_{∂K} q·(v - I_h v) x n dA| over cells, dual basis functions and constant q."""
    vb = ref.build_dual_basis(r)
    nb = ref.build_nedelec_basis(r)
    vtab = ref.VectorPolyTable(vb.functions)
    ntab = ref.VectorPolyTable(nb.functions)
    st, sw = _face_rule(n)
    es, ew = np.polynomial.legendre.leggauss(n)
    worst = 0.0
    worst_zero = 0.0
    for c in range(m.num_cells):
        g = m.cell_geometry(c)
        h = g.half_extents
        scale = v_dof_scale(r, h)
        # edge moments of every physical dual function on every physical edge
        moments = np.zeros((12 * r, len(vb.functions)))
        for e in range(12):
            t = ref.edge_axis(e)
            pts = np.zeros((n, 3))
            pts[:, t] = es
            for k, val in ref.edge_fixed(e).items():
                pts[:, k] = val
            vals = vtab(pts)[:, :, t] / h[t] * scale[:, None]
            for q in range(r):
                moments[r * e + q] = (vals * (ew * es**q)[None, :]).sum(axis=1) * h[t]
        surf = np.zeros((3, len(vb.functions)))
        surf_zero = np.zeros((3, len(vb.functions)))
        for f in range(6):
            nax, side = ref.face_axis(f), ref.face_side(f)
            a, b = ref.face_tangent_axes(f)
            pts = np.zeros((len(sw), 3))
            pts[:, a], pts[:, b], pts[:, nax] = st[:, 0], st[:, 1], side
            v = vtab(pts) / h * scale[:, None, None]
            Iv = np.einsum("ij,iqk->jqk", moments, ntab(pts) / h)
            normal = np.zeros(3)
            normal[nax] = side
            w = sw * h[a] * h[b]
            surf += np.einsum("jqk,q->kj", np.cross(v - Iv, normal), w)
            surf_zero += np.einsum("jqk,q->kj", np.cross(v, normal), w)
        # q = e_k picks the k-th component of ∫ (v - I v) x n
        worst = max(worst, float(np.abs(surf).max()))
        worst_zero = max(worst_zero, float(np.abs(surf_zero).max()))
    return JumpReport(worst, worst_zero)


# ------------------------------------------------------ Poincaré witness

def discrete_poincare_constant(m: Mesh, r: int = 1) -> float:
    """min ‖curl_h v‖²/‖v‖² over v in V̊_h with b(v, q) = 0 for all q in S̊_h."""
    V, S = build_space(m, "V", r), build_space(m, "S", r)
    forms = local_forms(V, S)
    fv, fs = V.free_dofs, S.free_dofs
    M = global_form(V, forms["mass"]).toarray()[np.ix_(fv, fv)]
    K = global_form(V, forms["curl"]).toarray()[np.ix_(fv, fv)]
    B = global_form(V, forms["coupling"], S).toarray()[np.ix_(fv, fs)]
    Z = sla.null_space(B.T) if B.size else np.eye(len(fv))
    vals = sla.eigh(Z.T @ K @ Z, Z.T @ M @ Z, eigvals_only=True)
    return float(vals.min())


# ------------------------------------------------------------------ suite

def run_verification(r: int = 1, sizes: tuple[int, ...] = (2, 3), nfields: int = 20) -> list[CheckResult]:
    from ..mesh import unit_cube_mesh

    out = [verify_unisolvence(r)]
    if r == 1:
        out.append(verify_known_basis())
    out.append(verify_poincare())
    for n in sizes:
        for bc in (False, True):
            rep = verify_complex(unit_cube_mesh(n), r, bc)
            bad = [k for k, ok in rep.checks.items() if not ok]
            tag = "with BC" if bc else "no BC"
            out.append(CheckResult(
                f"complex r={r} {n}^3 {tag}", rep.passed,
                max(rep.composition.values()), 1e-12,
                {"dims": rep.dims, "ranks": rep.ranks, "failed": bad},
            ))
    m2 = unit_cube_mesh(sizes[0])
    com = verify_commuting(m2, r, nfields=nfields)
    out.append(CheckResult(f"commuting diagram r={r}", com.max_residual <= 1e-10, com.max_residual, 1e-10))
    jump = verify_jump_property(r, m2)
    out.append(CheckResult(
        f"jump property r={r}", jump.max_residual <= 1e-12, jump.max_residual, 1e-12,
        {"without interpolant": jump.max_without_interpolant},
    ))
    lams = [discrete_poincare_constant(unit_cube_mesh(n), r) for n in sizes]
    ok = all(v > 0 for v in lams) and all(b >= 0.8 * a for a, b in zip(lams, lams[1:]))
    out.append(CheckResult(f"discrete Poincaré r={r}", ok, min(lams), 0.0, {"eigenvalues": lams}))
    return out
