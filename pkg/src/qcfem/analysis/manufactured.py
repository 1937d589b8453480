"""Closed-form manufactured fields on the unit cube.

The trigonometric fields are differentiated symbolically once and compiled to
numpy evaluators. Every evaluator maps an (N, 3) array of points to (N, 3)
values; ``gradcurl_u`` returns (N, 3, 3) with entry [i, k] = d(curl u)_i/dx_k.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy as sy

from ..assembly import ProblemParams

Evaluator = Callable[[np.ndarray], np.ndarray]

_X = sy.symbols("x y z", real=True)


def _curl(v):
    x, y, z = _X
    return [
        sy.diff(v[2], y) - sy.diff(v[1], z),
        sy.diff(v[0], z) - sy.diff(v[2], x),
        sy.diff(v[1], x) - sy.diff(v[0], y),
    ]


def _lap(v):
    return [sum(sy.diff(c, s, 2) for s in _X) for c in v]


def _div(v):
    return sum(sy.diff(c, s) for c, s in zip(v, _X))


def _vector_fn(exprs) -> Evaluator:
    fn = sy.lambdify(_X, exprs, "numpy")

    def ev(pts):
        pts = np.asarray(pts, dtype=float)
        x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
        out = fn(x, y, z)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), x.shape) for c in out], axis=-1)

    return ev


def _matrix_fn(rows) -> Evaluator:
    flat = _vector_fn([e for row in rows for e in row])

    def ev(pts):
        v = flat(pts)
        return v.reshape(v.shape[:-1] + (3, 3))

    return ev


@dataclass
class ManufacturedSolution:
    name: str
    u: Evaluator
    curl_u: Evaluator
    gradcurl_u: Evaluator
    curlcurl_u: Evaluator
    lap_curl_u: Evaluator
    curl_lap_curl_u: Evaluator
    f: Evaluator
    div_u: Callable[[np.ndarray], np.ndarray]
    divergence_free: bool
    params: ProblemParams
    reduced: bool = False


@lru_cache(maxsize=None)
def _symbolic(name: str):
    x, y, z = _X
    s, c, pi = sy.sin, sy.cos, sy.pi
    if name == "smooth":
        u = [
            s(pi * x) ** 3 * s(pi * y) ** 2 * s(pi * z) ** 2 * c(pi * y) * c(pi * z),
            s(pi * y) ** 3 * s(pi * z) ** 2 * s(pi * x) ** 2 * c(pi * z) * c(pi * x),
            -2 * s(pi * z) ** 3 * s(pi * x) ** 2 * s(pi * y) ** 2 * c(pi * x) * c(pi * y),
        ]
    elif name == "layer":
        u = [
            2 * pi * c(pi * y) * s(pi * x) ** 2 * s(pi * y) * s(pi * z) ** 2,
            -2 * pi * c(pi * x) * s(pi * x) * s(pi * y) ** 2 * s(pi * z) ** 2,
            sy.Integer(0),
        ]
    else:
        raise ValueError(f"unknown manufactured solution {name!r}")
    cu = _curl(u)
    gcu = [[sy.diff(ci, sk) for sk in _X] for ci in cu]
    ccu = _curl(cu)
    lc = _lap(cu)
    return u, cu, gcu, ccu, lc, _curl(lc), _div(u)


def _build(name: str, params: ProblemParams, reduced: bool) -> ManufacturedSolution:
    u, cu, gcu, ccu, lc, cl, du = _symbolic(name)
    eps = 0.0 if reduced else params.eps
    fn_u, fn_cc, fn_cl = _vector_fn(u), _vector_fn(ccu), _vector_fn(cl)

    def f(pts):
        out = params.alpha * fn_cc(pts) + params.beta * fn_u(pts)
        if eps:
            out = out - eps * fn_cl(pts)
        return out

    div_fn = sy.lambdify(_X, du, "numpy")

    def div_u(pts):
        pts = np.asarray(pts, dtype=float)
        val = div_fn(pts[..., 0], pts[..., 1], pts[..., 2])
        return np.broadcast_to(np.asarray(val, dtype=float), pts.shape[:-1])

    return ManufacturedSolution(
        name=name,
        u=fn_u,
        curl_u=_vector_fn(cu),
        gradcurl_u=_matrix_fn(gcu),
        curlcurl_u=fn_cc,
        lap_curl_u=_vector_fn(lc),
        curl_lap_curl_u=fn_cl,
        f=f,
        div_u=div_u,
        divergence_free=sy.simplify(du) == 0,
        params=params,
        reduced=reduced,
    )


def manufactured_smooth(params: ProblemParams | None = None) -> ManufacturedSolution:
    """Smooth field with u x n = 0 and curl u = 0 on the boundary;
    f = -eps curl Δ curl u + alpha curl curl u + beta u."""
    return _build("smooth", params or ProblemParams(), reduced=False)


def manufactured_layer(params: ProblemParams | None = None) -> ManufacturedSolution:
    """Reduced solution ũ with f = alpha curl curl ũ + beta ũ.

    For eps > 0 the true solution has a boundary layer; errors are measured
    against ũ.
    """
    return _build("layer", params or ProblemParams(), reduced=True)


def get_example(name: str, params: ProblemParams) -> ManufacturedSolution:
    if name == "smooth":
        return manufactured_smooth(params)
    if name == "layer":
        return manufactured_layer(params)
    raise ValueError(f"unknown example {name!r}; choose smooth or layer")


# ----------------------------------------------------- finite differences

def fd_curl(fn: Evaluator, pts: np.ndarray, step: float = 1e-5, order: int = 4) -> np.ndarray:
    """Central-difference curl of a vector evaluator."""
    J = fd_jacobian(fn, pts, step, order)
    return np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], axis=1)


def fd_jacobian(fn: Evaluator, pts: np.ndarray, step: float = 1e-5, order: int = 4) -> np.ndarray:
    """J[n, i, k] = d fn_i / d x_k by central differences of order 2 or 4."""
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    pts = np.asarray(pts, dtype=float)
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        d1 = fn(pts + e) - fn(pts - e)
        if order == 2:
            cols.append(d1 / (2 * step))
        else:
            d2 = fn(pts + 2 * e) - fn(pts - 2 * e)
            cols.append((8 * d1 - d2) / (12 * step))
    return np.stack(cols, axis=-1)


def fd_div(fn: Evaluator, pts: np.ndarray, step: float = 1e-5, order: int = 4) -> np.ndarray:
    J = fd_jacobian(fn, pts, step, order)
    return J[:, 0, 0] + J[:, 1, 1] + J[:, 2, 2]


def fd_laplacian(fn: Evaluator, pts: np.ndarray, step: float = 1e-3) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    out = -6.0 * fn(pts)
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        out = out + fn(pts + e) + fn(pts - e)
    return out / step**2
