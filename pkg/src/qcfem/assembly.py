"""Assembly and solution of the mixed system for (u_h; p_h).

    a_h(u_h, v) + b(v, p_h) = (f, v)    for all v in V_h (zero boundary DOFs)
    b(u_h, q)               = 0         for all q in S_h (zero boundary DOFs)

with a_h = eps (grad curl, grad curl) + alpha (curl, curl) + beta (., .)
taken cell by cell and b(v, q) = (v, grad q).
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fespace import FESpace, physical_table, pushforward_scalar

log = logging.getLogger(__name__)

DIRECT_LIMIT = 50_000


class SolverError(RuntimeError):
    """Linear solve failed or did not reach the requested residual."""


@dataclass(frozen=True)
class ProblemParams:
    eps: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")


@dataclass
class SaddleSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    F: np.ndarray
    V: FESpace
    S: FESpace
    params: ProblemParams
    A_full: sp.csr_matrix = field(repr=False, default=None)
    F_full: np.ndarray = field(repr=False, default=None)
    L: sp.csr_matrix = field(repr=False, default=None)  # S-stiffness on free DOFs

    @property
    def n_u(self) -> int:
        return self.A.shape[0]

    @property
    def n_p(self) -> int:
        return self.B.shape[1]

    def matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.A, self.B], [self.B.T, None]], format="csr")

    def rhs(self) -> np.ndarray:
        return np.concatenate([self.F, np.zeros(self.n_p)])


@dataclass
class SolutionField:
    space: FESpace
    coefficients: np.ndarray

    def __post_init__(self):
        if self.coefficients.shape != (self.space.ndofs,):
            raise ValueError("coefficient vector does not match the space")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("non-finite coefficients")

    def local(self) -> np.ndarray:
        """Per-cell coefficients, shape (ncells, nloc)."""
        return self.coefficients[self.space.cell_dofs]


@dataclass
class SolveStats:
    method: str
    iterations: int
    residual: float
    rhs_norm: float
    seconds: float
    n_unknowns: int
    info: str = ""


def local_forms(V: FESpace, S: FESpace, quad: int = 5) -> dict[str, np.ndarray]:
    """Unweighted element matrices on the common cell shape.

    ``mass``, ``curl``, ``gradcurl`` are (nV, nV); ``coupling`` is (nV, nS) with
    entries (phi_i, grad psi_j); ``stiffness`` is (nS, nS), (grad psi_i, grad psi_j).
    """
    t = physical_table(V, quad)
    w = t.weights
    st = pushforward_scalar(V.mesh.cell_geometry(0), S.r, quad)
    return {
        "mass": np.einsum("q,iqk,jqk->ij", w, t.values, t.values),
        "curl": np.einsum("q,iqk,jqk->ij", w, t.curls, t.curls),
        "gradcurl": np.einsum("q,iqkl,jqkl->ij", w, t.gradcurls, t.gradcurls),
        "coupling": np.einsum("q,iqk,jqk->ij", w, t.values, st.grads),
        "stiffness": np.einsum("q,iqk,jqk->ij", st.weights, st.grads, st.grads),
    }


def stiffness_form(forms: dict[str, np.ndarray], params: ProblemParams) -> np.ndarray:
    """a_h element matrix from the unweighted forms; eps = 0 drops grad-curl entirely."""
    A = params.alpha * forms["curl"] + params.beta * forms["mass"]
    if params.eps > 0:
        A = A + params.eps * forms["gradcurl"]
    return A


def global_form(V: FESpace, local: np.ndarray, cols: FESpace | None = None) -> sp.csr_matrix:
    cols = cols or V
    return _scatter(local, V.cell_dofs, cols.cell_dofs, (V.ndofs, cols.ndofs))


def load_vector(V: FESpace, f: Callable[[np.ndarray], np.ndarray], quad: int = 6) -> np.ndarray:
    """(f, phi_i) for every global V-DOF; ``f`` maps (N, 3) points to (N, 3) values."""
    t = physical_table(V, quad)
    m = V.mesh
    pts = m.map_points(t.points_ref)
    fv = np.asarray(f(pts.reshape(-1, 3)), dtype=float).reshape(pts.shape)
    loc = np.einsum("q,cqk,iqk->ci", t.weights, fv, t.values)
    F = np.zeros(V.ndofs)
    np.add.at(F, V.cell_dofs.ravel(), loc.ravel())
    return F


def _scatter(local: np.ndarray, rows_map: np.ndarray, cols_map: np.ndarray, shape) -> sp.csr_matrix:
    nc = rows_map.shape[0]
    nr, ncol = local.shape
    rows = np.repeat(rows_map, ncol, axis=1).ravel()
    cols = np.tile(cols_map, (1, nr)).ravel()
    vals = np.broadcast_to(local.ravel(), (nc, nr * ncol)).ravel()
    mat = sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    mat.sum_duplicates()
    return mat


def assemble(
    params: ProblemParams,
    V: FESpace,
    S: FESpace,
    f: Callable[[np.ndarray], np.ndarray] | None,
    quad: int = 5,
    rhs_quad: int = 6,
) -> SaddleSystem:
    if V.mesh is not S.mesh and V.mesh != S.mesh:
        raise ValueError("V and S must live on the same mesh")
    forms = local_forms(V, S, quad)
    A = _scatter(stiffness_form(forms, params), V.cell_dofs, V.cell_dofs, (V.ndofs, V.ndofs))
    B = _scatter(forms["coupling"], V.cell_dofs, S.cell_dofs, (V.ndofs, S.ndofs))
    L = _scatter(forms["stiffness"], S.cell_dofs, S.cell_dofs, (S.ndofs, S.ndofs))
    F = load_vector(V, f, rhs_quad) if f is not None else np.zeros(V.ndofs)
    fv, fs = V.free_dofs, S.free_dofs
    return SaddleSystem(
        A=A[fv][:, fv].tocsr(),
        B=B[fv][:, fs].tocsr(),
        F=F[fv],
        V=V,
        S=S,
        params=params,
        A_full=A,
        F_full=F,
        L=L[fs][:, fs].tocsr(),
    )


def _block_preconditioner(sys: SaddleSystem):
    dA = sys.A.diagonal()
    dA = np.where(dA > 0, dA, 1.0)
    # pressure block: diagonal of B^T diag(A)^-1 B, an approximate Schur complement
    BtB = (sys.B.T @ sp.diags(1.0 / dA) @ sys.B).diagonal()
    dS = np.where(BtB > 0, BtB, 1.0)
    inv = np.concatenate([1.0 / dA, 1.0 / dS])
    n = inv.size
    return spla.LinearOperator((n, n), matvec=lambda x: inv * x, dtype=float)


def _cholesky(M: sp.spmatrix):
    """Sparse Cholesky (CHOLMOD) of an SPD matrix; returns a solve function."""
    from cvxopt import cholmod, matrix, spmatrix

    C = sp.tril(M).tocoo()
    K = spmatrix(C.data.tolist(), C.row.tolist(), C.col.tolist(), size=M.shape)
    Fs = cholmod.symbolic(K)
    try:
        cholmod.numeric(K, Fs)
    except ArithmeticError as exc:
        raise SolverError(f"Cholesky factorization failed: {exc}") from exc

    def solve(b: np.ndarray) -> np.ndarray:
        x = matrix(np.ascontiguousarray(b, dtype=float))
        cholmod.solve(Fs, x)
        return np.array(x).ravel()

    return solve


def _solve_block(sys: SaddleSystem, tol: float, maxiter: int | None):
    """Eliminate u with a Cholesky factor of A, then PCG on B^T A^-1 B p = B^T A^-1 F.

    Since grad S_h lies in V_h and A acts on gradients as beta times the mass
    matrix, the Schur complement equals the S-stiffness over beta, so that
    preconditioner makes PCG converge in a couple of steps.
    """
    if sys.params.beta <= 0:
        raise SolverError("block elimination needs beta > 0 (A must be SPD)")
    A_solve = _cholesky(sys.A)
    u0 = A_solve(sys.F)
    if sys.n_p == 0:
        return u0, 0
    L_solve = _cholesky(sys.L)
    beta = sys.params.beta
    schur = spla.LinearOperator(
        (sys.n_p, sys.n_p), matvec=lambda q: sys.B.T @ A_solve(sys.B @ q), dtype=float
    )
    prec = spla.LinearOperator((sys.n_p, sys.n_p), matvec=lambda q: beta * L_solve(q), dtype=float)
    counter = {"it": 0}

    def cb(_):
        counter["it"] += 1

    g = sys.B.T @ u0
    p, flag = spla.cg(schur, g, M=prec, rtol=tol * 1e-2, atol=0.0,
                      maxiter=maxiter or 20 * sys.n_p, callback=cb)
    if flag != 0:
        raise SolverError(f"Schur-complement CG did not converge (flag={flag})")
    u = A_solve(sys.F - sys.B @ p)
    return np.concatenate([u, p]), counter["it"]


def solve_saddle(
    sys: SaddleSystem,
    tol: float = 1e-10,
    method: str = "auto",
    maxiter: int | None = None,
) -> tuple[SolutionField, SolutionField, SolveStats]:
    """Solve [A B; B^T 0][u; p] = [F; 0] and scatter into full-length fields."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = sys.n_u + sys.n_p
    t0 = time.perf_counter()
    rhs = sys.rhs()
    fnorm = float(np.linalg.norm(sys.F))
    if method == "auto":
        if n <= DIRECT_LIMIT:
            method = "direct"
        else:
            method = "block" if sys.params.beta > 0 else "krylov"

    iterations = 0
    info = ""
    if n == 0:
        x = np.zeros(0)
        method = "empty"
    elif fnorm == 0.0:
        x = np.zeros(n)
        info = "zero right-hand side"
    elif method == "direct":
        K = sys.matrix().tocsc()
        try:
            lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.1)
        except RuntimeError as exc:
            raise SolverError(f"factorization failed: {exc}") from exc
        x = lu.solve(rhs)
        iterations = 1
        info = f"splu nnz(L+U)={lu.L.nnz + lu.U.nnz}"
    elif method == "block":
        x, iterations = _solve_block(sys, tol, maxiter)
        info = f"cholmod + schur pcg its={iterations}"
    elif method == "krylov":
        K = sys.matrix()
        M = _block_preconditioner(sys)
        cap = maxiter or 20 * n
        counter = {"it": 0}

        def cb(_):
            counter["it"] += 1

        x, flag = spla.minres(K, rhs, M=M, rtol=tol * 0.5, maxiter=cap, callback=cb)
        iterations = counter["it"]
        info = f"minres flag={flag}"
    else:
        raise ValueError(f"unknown solver method {method!r}")

    if n:
        res = float(np.linalg.norm(sys.matrix() @ x - rhs))
    else:
        res = 0.0
    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite values")
    if res > tol * max(fnorm, np.finfo(float).tiny) and fnorm > 0:
        raise SolverError(
            f"{method} solve residual {res:.3e} exceeds tol*|F| = {tol * fnorm:.3e} ({info})"
        )
    u = np.zeros(sys.V.ndofs)
    p = np.zeros(sys.S.ndofs)
    u[sys.V.free_dofs] = x[: sys.n_u]
    p[sys.S.free_dofs] = x[sys.n_u:]
    stats = SolveStats(method, iterations, res, fnorm, time.perf_counter() - t0, n, info)
    log.info("solve %s: n=%d res=%.2e in %.2fs", method, n, res, stats.seconds)
    return SolutionField(sys.V, u), SolutionField(sys.S, p), stats
