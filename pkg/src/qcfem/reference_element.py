"""Shape spaces, degrees of freedom and dual bases on the reference cube (-1, 1)^3.

Local numbering:

* vertices ``a + 2b + 4c`` for the corner ``(-1 + 2a, -1 + 2b, -1 + 2c)``;
* edges 0-3 are x-parallel, 4-7 y-parallel, 8-11 z-parallel; inside each group
  the index is ``i + 2j`` where ``(i, j)`` select the two fixed coordinates in
  increasing axis order;
* faces x-, x+, y-, y+, z-, z+; a face's two tangents are the positive unit
  vectors of the remaining axes in increasing order.

All construction is done in exact rational arithmetic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .polynomials import (
    Poly3,
    PolyVec3,
    curl,
    differentiate,
    grad,
    integrate_interval,
    poincare_p,
    substitute,
)

NUM_EDGES = 12
NUM_FACES = 6


class UnisolvenceError(RuntimeError):
    """DOF matrix is singular or generators are dependent."""


# ---------------------------------------------------------------- geometry

def vertex_coords(v: int) -> tuple[int, int, int]:
    return (-1 + 2 * (v & 1), -1 + 2 * ((v >> 1) & 1), -1 + 2 * ((v >> 2) & 1))


def edge_axis(e: int) -> int:
    return e // 4


def edge_fixed(e: int) -> dict[int, int]:
    """Fixed coordinates of a local edge, as ``{axis: ±1}``."""
    t = e // 4
    i, j = e % 2, (e // 2) % 2
    others = [k for k in range(3) if k != t]
    return {others[0]: -1 + 2 * i, others[1]: -1 + 2 * j}


def edge_vertices(e: int) -> tuple[int, int]:
    """Start and end vertex, ordered along the +axis tangent."""
    t = e // 4
    fixed = edge_fixed(e)
    ends = []
    for s in (-1, 1):
        c = [0, 0, 0]
        c[t] = s
        for k, val in fixed.items():
            c[k] = val
        ends.append(sum(((c[k] + 1) // 2) << k for k in range(3)))
    return ends[0], ends[1]


def face_axis(f: int) -> int:
    return f // 2


def face_side(f: int) -> int:
    return -1 if f % 2 == 0 else 1


def face_tangent_axes(f: int) -> tuple[int, int]:
    n = f // 2
    a, b = (k for k in range(3) if k != n)
    return a, b


def face_edges(f: int) -> list[int]:
    n, side = face_axis(f), face_side(f)
    return [e for e in range(NUM_EDGES) if edge_fixed(e).get(n) == side]


# ----------------------------------------------------------- shape spaces

def superlinear_degree(exp: Sequence[int]) -> int:
    return sum(e for e in exp if e >= 2)


@lru_cache(maxsize=None)
def _serendipity_exponents(r: int) -> tuple[tuple[int, int, int], ...]:
    if r not in (1, 2):
        raise ValueError(f"r must be 1 or 2, got {r}")
    rng = range(r + 1)
    exps = [(a, b, c) for a in rng for b in rng for c in rng if superlinear_degree((a, b, c)) <= r]
    exps.sort(key=lambda e: (sum(e), e[::-1]))
    return tuple(exps)


def serendipity_monomials(r: int) -> list[Poly3]:
    """Monomial basis of the serendipity space: superlinear degree at most ``r``."""
    return [Poly3.monomial(*e) for e in _serendipity_exponents(r)]


def w_space_generators() -> list[PolyVec3]:
    """[P1]^3 plus the six quadratic fields enriching the face-moment element."""
    z = Poly3()
    one = Poly3.const(1)
    lin = [one, Poly3.monomial(1, 0, 0), Poly3.monomial(0, 1, 0), Poly3.monomial(0, 0, 1)]
    gens = []
    for k in range(3):
        for p in lin:
            comps = [z, z, z]
            comps[k] = p
            gens.append(PolyVec3(comps))
    sq = {0: Poly3.monomial(2, 0, 0), 1: Poly3.monomial(0, 2, 0), 2: Poly3.monomial(0, 0, 2)}
    for k in range(3):
        for j in range(3):
            if j != k:
                comps = [z, z, z]
                comps[k] = sq[j]
                gens.append(PolyVec3(comps))
    return gens


def _radial_w_index(gens: list[PolyVec3]) -> int:
    target = PolyVec3((Poly3(), Poly3(), Poly3.monomial(0, 0, 1)))
    return gens.index(target)


def build_generators(r: int) -> list[PolyVec3]:
    """grad S^r (non-constants) followed by the Poincaré images of W minus (0, 0, z)."""
    grads = [grad(m) for m in serendipity_monomials(r) if m.degree() > 0]
    w = w_space_generators()
    drop = _radial_w_index(w)
    pw = [poincare_p(g) for i, g in enumerate(w) if i != drop]
    gens = grads + pw
    expected = {1: 24, 2: 36}[r]
    rank = _sampling_rank(gens)
    if rank != expected or len(gens) != expected:
        raise UnisolvenceError(f"generator rank {rank}, expected {expected}")
    return gens


def nedelec_generators(r: int) -> list[PolyVec3]:
    """Conforming edge-element subspace used by the edge-only interpolation.

    grad S^r plus Poincaré images of span{1,x} x span{1,y} x span{1,z}, with
    (0, 0, z) dropped because its image is linearly dependent.
    """
    z = Poly3()
    one = Poly3.const(1)
    fields = []
    for k in range(3):
        for p in (one, Poly3.monomial(*[1 if j == k else 0 for j in range(3)])):
            comps = [z, z, z]
            comps[k] = p
            fields.append(PolyVec3(comps))
    fields = fields[:-1]
    grads = [grad(m) for m in serendipity_monomials(r) if m.degree() > 0]
    gens = grads + [poincare_p(f) for f in fields]
    expected = 12 * r
    rank = _sampling_rank(gens)
    if rank != expected:
        raise UnisolvenceError(f"edge subspace rank {rank}, expected {expected}")
    return gens


def _sampling_rank(gens: list[PolyVec3], npts: int = 60, seed: int = 7) -> int:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(npts, 3))
    cols = []
    for g in gens:
        cols.append(np.concatenate([_eval_float(c, pts) for c in g]))
    mat = np.array(cols).T
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > 1e-10 * s[0]))


def _eval_float(p: Poly3, pts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(pts))
    for (a, b, c), coeff in p.items():
        out += float(coeff) * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c
    return out


# ------------------------------------------------------------------- DOFs

@dataclass(frozen=True)
class DofDescriptor:
    """One functional on the reference cube.

    ``kind`` is ``"edge_moment"`` (``index`` = weight order q: 1 or s) or
    ``"face_curl_tangential"`` (``index`` = 0 for the first tangent, 1 for the second).
    """

    kind: str
    entity: int
    index: int = 0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "entity": self.entity, "index": self.index}


def integrate_entity(p: Poly3, free_axes: Sequence[int], fixed: dict[int, int]) -> Fraction:
    """Exact integral over the face/edge where ``free_axes`` range over (-1, 1)."""
    q = substitute(p, fixed) if fixed else p
    for k in free_axes:
        q = integrate_interval(q, k)
    if q.is_zero():
        return Fraction(0)
    if set(q.terms) != {(0, 0, 0)}:
        raise ValueError("integrand still depends on a free variable")
    return q.terms[(0, 0, 0)]


def edge_weight(e: int, order: int) -> Poly3:
    """q(s) for the edge moment of the given order; s is the +axis coordinate."""
    if order == 0:
        return Poly3.const(1)
    t = edge_axis(e)
    exp = [0, 0, 0]
    exp[t] = order
    return Poly3.monomial(*exp)


def apply_dof(d: DofDescriptor, v: PolyVec3) -> Fraction:
    if d.kind == "edge_moment":
        t = edge_axis(d.entity)
        return integrate_entity(v[t] * edge_weight(d.entity, d.index), [t], edge_fixed(d.entity))
    if d.kind == "face_curl_tangential":
        n = face_axis(d.entity)
        tang = face_tangent_axes(d.entity)
        c = curl(v)[tang[d.index]]
        return integrate_entity(c, tang, {n: face_side(d.entity)})
    raise ValueError(f"unknown DOF kind {d.kind!r}")


def v_dofs(r: int) -> list[DofDescriptor]:
    """Edge moments (grouped by edge, then order) followed by face curl moments."""
    dofs = [DofDescriptor("edge_moment", e, q) for e in range(NUM_EDGES) for q in range(r)]
    dofs += [DofDescriptor("face_curl_tangential", f, j) for f in range(NUM_FACES) for j in range(2)]
    return dofs


def edge_dofs(r: int) -> list[DofDescriptor]:
    return [DofDescriptor("edge_moment", e, q) for e in range(NUM_EDGES) for q in range(r)]


# ----------------------------------------------------------- exact algebra

def solve_exact(G: list[list[Fraction]], rhs: list[list[Fraction]] | None = None) -> list[list[Fraction]]:
    """Gauss-Jordan elimination over the rationals; returns G^{-1} rhs (or G^{-1})."""
    n = len(G)
    if rhs is None:
        rhs = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    m = len(rhs[0])
    aug = [list(map(Fraction, G[i])) + list(rhs[i]) for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise UnisolvenceError(f"singular DOF matrix (column {col})")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        row = [x / pv for x in aug[col]]
        aug[col] = row
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], row)]
    return [r_[n:n + m] for r_ in aug]


def _combine(gens: Sequence, coeffs: Sequence[Fraction]):
    out = None
    for g, c in zip(gens, coeffs):
        if c == 0:
            continue
        term = g * c
        out = term if out is None else out + term
    if out is None:
        out = gens[0] * 0
    return out


# ------------------------------------------------------------ dual bases

@dataclass
class DualBasis:
    """Generic dual basis over a generator family."""

    generators: list
    functionals: list
    dof_matrix: list[list[Fraction]]
    dual: list[list[Fraction]]
    functions: list
    condition: float


def dual_basis(generators: Sequence, functionals: Sequence[Callable]) -> DualBasis:
    n = len(generators)
    if len(functionals) != n:
        raise UnisolvenceError(f"{len(functionals)} functionals for {n} generators")
    G = [[Fraction(phi(g)) for g in generators] for phi in functionals]
    C = solve_exact(G)
    funcs = [_combine(generators, [C[k][j] for k in range(n)]) for j in range(n)]
    Gf = np.array([[float(x) for x in row] for row in G])
    cond = float(np.linalg.cond(Gf))
    return DualBasis(list(generators), list(functionals), G, C, funcs, cond)


@dataclass
class ReferenceElementBasis:
    """Dual basis of the 24- (r=1) or 36-DOF (r=2) element on the reference cube."""

    r: int
    generators: list[PolyVec3]
    dofs: list[DofDescriptor]
    dof_matrix: list[list[Fraction]]
    dual_basis: list[list[Fraction]]
    functions: list[PolyVec3]
    condition: float

    @property
    def ndofs(self) -> int:
        return len(self.dofs)

    def edge_dof_indices(self) -> list[int]:
        return [i for i, d in enumerate(self.dofs) if d.kind == "edge_moment"]

    def face_dof_indices(self) -> list[int]:
        return [i for i, d in enumerate(self.dofs) if d.kind == "face_curl_tangential"]

    def to_json(self) -> str:
        def poly_terms(p: Poly3):
            return [[list(e), str(c)] for e, c in sorted(p.items())]

        doc = {
            "r": self.r,
            "generators": [{"comp": [poly_terms(c) for c in g]} for g in self.generators],
            "dual": [[str(x) for x in row] for row in self.dual_basis],
            "dofs": [d.to_dict() for d in self.dofs],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> ReferenceElementBasis:
        doc = json.loads(text)
        gens = [
            PolyVec3([Poly3({tuple(e): Fraction(c) for e, c in comp}) for comp in g["comp"]])
            for g in doc["generators"]
        ]
        dofs = [DofDescriptor(**d) for d in doc["dofs"]]
        C = [[Fraction(x) for x in row] for row in doc["dual"]]
        n = len(gens)
        funcs = [_combine(gens, [C[k][j] for k in range(n)]) for j in range(n)]
        G = [[apply_dof(d, g) for g in gens] for d in dofs]
        cond = float(np.linalg.cond(np.array([[float(x) for x in row] for row in G])))
        return cls(doc["r"], gens, dofs, G, C, funcs, cond)


@lru_cache(maxsize=None)
def build_dual_basis(r: int) -> ReferenceElementBasis:
    if r not in (1, 2):
        raise ValueError(f"r must be 1 or 2, got {r}")
    gens = build_generators(r)
    dofs = v_dofs(r)
    db = dual_basis(gens, [lambda v, d=d: apply_dof(d, v) for d in dofs])
    return ReferenceElementBasis(r, gens, dofs, db.dof_matrix, db.dual, db.functions, db.condition)


@lru_cache(maxsize=None)
def build_nedelec_basis(r: int) -> DualBasis:
    """Dual basis of the edge-element subspace for the edge moments alone."""
    gens = nedelec_generators(r)
    return dual_basis(gens, [lambda v, d=d: apply_dof(d, v) for d in edge_dofs(r)])


def s_functionals(r: int) -> list[Callable[[Poly3], Fraction]]:
    """Vertex values, then (r=2) edge integrals ∫_e u ds."""
    funcs: list[Callable] = []
    for v in range(8):
        c = vertex_coords(v)
        funcs.append(lambda p, c=c: integrate_entity(p, [], {0: c[0], 1: c[1], 2: c[2]}))
    if r == 2:
        for e in range(NUM_EDGES):
            funcs.append(lambda p, e=e: integrate_entity(p, [edge_axis(e)], edge_fixed(e)))
    return funcs


@lru_cache(maxsize=None)
def build_serendipity_basis(r: int) -> DualBasis:
    return dual_basis(serendipity_monomials(r), s_functionals(r))


def w_functionals() -> list[Callable[[PolyVec3], Fraction]]:
    """Face moments ∫_f u_k dA, face-major then component."""
    funcs = []
    for f in range(NUM_FACES):
        n = face_axis(f)
        tang = face_tangent_axes(f)
        for k in range(3):
            funcs.append(
                lambda v, f=f, n=n, tang=tang, k=k: integrate_entity(v[k], tang, {n: face_side(f)})
            )
    return funcs


@lru_cache(maxsize=None)
def build_w_basis() -> DualBasis:
    return dual_basis(w_space_generators(), w_functionals())


def expand_in(field_: PolyVec3, generators: Sequence[PolyVec3]) -> tuple[list[Fraction], PolyVec3]:
    """Least-squares-free exact expansion; returns coefficients and the residual field.

    Solves on the monomial coefficients via exact elimination over a maximal
    independent subset of rows.
    """
    keys = sorted(
        {(k, e) for g in list(generators) + [field_] for k, comp in enumerate(g) for e, _ in comp.items()}
    )
    idx = {key: i for i, key in enumerate(keys)}
    m, n = len(keys), len(generators)
    A = [[Fraction(0)] * n for _ in range(m)]
    for j, g in enumerate(generators):
        for k, comp in enumerate(g):
            for e, c in comp.items():
                A[idx[(k, e)]][j] = c
    b = [Fraction(0)] * m
    for k, comp in enumerate(field_):
        for e, c in comp.items():
            b[idx[(k, e)]] = c
    # row-echelon on [A | b]
    rows = [A[i] + [b[i]] for i in range(m)]
    pivots = []
    r_ = 0
    for col in range(n):
        piv = next((i for i in range(r_, m) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r_], rows[piv] = rows[piv], rows[r_]
        pv = rows[r_][col]
        rows[r_] = [x / pv for x in rows[r_]]
        for i in range(m):
            if i != r_ and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * c for a, c in zip(rows[i], rows[r_])]
        pivots.append(col)
        r_ += 1
    coeffs = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        coeffs[col] = rows[i][n]
    residual = field_ - _combine(list(generators), coeffs)
    return coeffs, residual


# ------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureRule:
    domain: str
    points: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


_DIMS = {"edge": 1, "face": 2, "cell": 3}


@lru_cache(maxsize=None)
def gauss_rule(n: int, domain: str = "cell") -> QuadratureRule:
    """Tensor Gauss-Legendre rule on (-1, 1)^dim; points are (npts, dim)."""
    if n < 1:
        raise ValueError("need at least one point per direction")
    dim = _DIMS[domain]
    x, w = np.polynomial.legendre.leggauss(n)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    # last coordinate fastest -> reverse so x varies fastest
    pts = np.stack([g.ravel() for g in grids[::-1]], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(domain, pts, wts)


# -------------------------------------------------------------- tabulation

class VectorPolyTable:
    """Float coefficient arrays for fast evaluation of many polynomial fields."""

    def __init__(self, fields: Sequence[PolyVec3]):
        exps = sorted({e for f in fields for comp in f for e, _ in comp.items()}) or [(0, 0, 0)]
        self.exponents = np.array(exps, dtype=int)
        index = {e: i for i, e in enumerate(exps)}
        self.coeffs = np.zeros((len(fields), 3, len(exps)))
        for j, f in enumerate(fields):
            for k, comp in enumerate(f):
                for e, c in comp.items():
                    self.coeffs[j, k, index[e]] = float(c)

    def monomials(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        e = self.exponents
        return pts[:, None, 0] ** e[None, :, 0] * pts[:, None, 1] ** e[None, :, 1] * pts[:, None, 2] ** e[None, :, 2]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Values with shape (nfields, npts, 3)."""
        return np.einsum("jkm,qm->jqk", self.coeffs, self.monomials(pts))


class ScalarPolyTable(VectorPolyTable):
    def __init__(self, polys: Sequence[Poly3]):
        z = Poly3()
        super().__init__([PolyVec3((p, z, z)) for p in polys])

    def __call__(self, pts):
        return super().__call__(pts)[..., 0]


@dataclass
class ReferenceTable:
    """Dual basis values, curls and grad-of-curl at cell quadrature points.

    Shapes: ``values``/``curls`` (nbasis, nq, 3); ``gradcurls`` (nbasis, nq, 3, 3)
    with ``gradcurls[j, q, i, k] = d(curl_i)/dx_k``.
    """

    rule: QuadratureRule
    values: np.ndarray
    curls: np.ndarray
    gradcurls: np.ndarray


def gradcurl_fields(functions: Sequence[PolyVec3]) -> list[list[PolyVec3]]:
    """For each field, the three fields d(curl v)/dx_k, k = 0..2."""
    out = []
    for f in functions:
        c = curl(f)
        out.append([PolyVec3([differentiate(c[i], k) for i in range(3)]) for k in range(3)])
    return out


def tabulate(basis: ReferenceElementBasis | Sequence[PolyVec3], rule: QuadratureRule) -> ReferenceTable:
    if rule.domain != "cell":
        raise ValueError("tabulate needs a cell rule")
    funcs = basis.functions if isinstance(basis, ReferenceElementBasis) else list(basis)
    pts = rule.points
    values = VectorPolyTable(funcs)(pts)
    curls = VectorPolyTable([curl(f) for f in funcs])(pts)
    gc = gradcurl_fields(funcs)
    nb, nq = len(funcs), len(pts)
    gradcurls = np.zeros((nb, nq, 3, 3))
    for k in range(3):
        gradcurls[:, :, :, k] = VectorPolyTable([g[k] for g in gc])(pts)
    return ReferenceTable(rule, values, curls, gradcurls)
