"""Exact polynomial algebra in three variables.

Polynomials carry :class:`fractions.Fraction` coefficients so that dual-basis
construction and the Poincaré identities hold without rounding. Conversion to
floating point happens only when tabulating.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence

import numpy as np

Exponent = tuple[int, int, int]

AXES = {"x": 0, "y": 1, "z": 2}


def _as_coeff(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c).limit_denominator(10**12)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _axis(axis) -> int:
    if isinstance(axis, str):
        return AXES[axis]
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1, 2 or x, y, z; got {axis!r}")
    return int(axis)


class Poly3:
    """Immutable polynomial in (x, y, z) stored as ``{(a, b, c): coeff}``."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, object] | None = None):
        clean: dict[Exponent, Fraction] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != 3 or min(exp) < 0:
                    raise ValueError(f"bad exponent {exp}")
                c = _as_coeff(c)
                if c:
                    clean[exp] = clean.get(exp, Fraction(0)) + c
                    if not clean[exp]:
                        del clean[exp]
        self._terms = clean
        self._hash = None

    # constructors
    @classmethod
    def const(cls, c) -> Poly3:
        return cls({(0, 0, 0): c})

    @classmethod
    def monomial(cls, a: int, b: int, c: int, coeff=1) -> Poly3:
        return cls({(a, b, c): coeff})

    @classmethod
    def zero(cls) -> Poly3:
        return cls()

    # basic queries
    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> float:
        if not self._terms:
            return float("-inf")
        return max(sum(e) for e in self._terms)

    def max_partial_degree(self) -> int:
        if not self._terms:
            return 0
        return max(max(e) for e in self._terms)

    def homogeneous_parts(self) -> dict[int, Poly3]:
        parts: dict[int, dict] = {}
        for e, c in self._terms.items():
            parts.setdefault(sum(e), {})[e] = c
        return {d: Poly3(t) for d, t in parts.items()}

    # arithmetic
    def __add__(self, other) -> Poly3:
        if not isinstance(other, Poly3):
            other = Poly3.const(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Poly3(out)

    __radd__ = __add__

    def __neg__(self) -> Poly3:
        return Poly3({e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> Poly3:
        if not isinstance(other, Poly3):
            other = Poly3.const(other)
        return self + (-other)

    def __rsub__(self, other) -> Poly3:
        return (-self) + other

    def __mul__(self, other) -> Poly3:
        if not isinstance(other, Poly3):
            c = _as_coeff(other)
            return Poly3({e: c * v for e, v in self._terms.items()})
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Poly3(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Poly3:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = Poly3.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly3):
            if isinstance(other, (int, Fraction)):
                other = Poly3.const(other)
            else:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (a, b, c), v in sorted(self._terms.items(), key=lambda t: (sum(t[0]), t[0])):
            mono = "*".join(
                f"{s}^{p}" if p > 1 else s for s, p in zip("xyz", (a, b, c)) if p
            )
            parts.append(f"{v}*{mono}" if mono else f"{v}")
        return " + ".join(parts)

    def __call__(self, x, y, z):
        return evaluate(self, (x, y, z))


class PolyVec3:
    """Three-component polynomial vector field."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence[Poly3 | object]):
        comps = tuple(c if isinstance(c, Poly3) else Poly3.const(c) for c in components)
        if len(comps) != 3:
            raise ValueError("PolyVec3 needs exactly three components")
        self.components = comps

    @classmethod
    def zero(cls) -> PolyVec3:
        return cls((Poly3(), Poly3(), Poly3()))

    def __getitem__(self, i: int) -> Poly3:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: PolyVec3) -> PolyVec3:
        return PolyVec3([a + b for a, b in zip(self, other)])

    def __sub__(self, other: PolyVec3) -> PolyVec3:
        return PolyVec3([a - b for a, b in zip(self, other)])

    def __neg__(self) -> PolyVec3:
        return PolyVec3([-a for a in self])

    def __mul__(self, s) -> PolyVec3:
        return PolyVec3([a * s for a in self])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyVec3):
            return NotImplemented
        return self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self)

    def degree(self) -> float:
        return max(c.degree() for c in self)

    def dot(self, other: PolyVec3) -> Poly3:
        return self[0] * other[0] + self[1] * other[1] + self[2] * other[2]

    def cross(self, other: PolyVec3) -> PolyVec3:
        a, b = self, other
        return PolyVec3(
            [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
        )

    def __repr__(self) -> str:
        return f"PolyVec3({self[0]!r}; {self[1]!r}; {self[2]!r})"


X = Poly3.monomial(1, 0, 0)
Y = Poly3.monomial(0, 1, 0)
Z = Poly3.monomial(0, 0, 1)
POSITION = PolyVec3((X, Y, Z))


def differentiate(p: Poly3, axis) -> Poly3:
    k = _axis(axis)
    out = {}
    for e, c in p.items():
        if e[k]:
            ne = list(e)
            ne[k] -= 1
            out[tuple(ne)] = c * e[k]
    return Poly3(out)


def grad(p: Poly3) -> PolyVec3:
    return PolyVec3([differentiate(p, k) for k in range(3)])


def curl(v: PolyVec3) -> PolyVec3:
    d = differentiate
    return PolyVec3(
        [d(v[2], 1) - d(v[1], 2), d(v[0], 2) - d(v[2], 0), d(v[1], 0) - d(v[0], 1)]
    )


def div(v: PolyVec3) -> Poly3:
    return differentiate(v[0], 0) + differentiate(v[1], 1) + differentiate(v[2], 2)


def _scale_by_degree(p: Poly3, shift: int) -> Poly3:
    """Multiply each homogeneous degree-d part by 1/(d+shift)."""
    return Poly3({e: c / (sum(e) + shift) for e, c in p.items()})


def poincare_p(v: PolyVec3) -> PolyVec3:
    """Curl-potential homotopy ``-x × ∫_0^1 t v(tx) dt``.

    On a homogeneous part of degree d the integral gives the factor 1/(d+2).
    """
    scaled = PolyVec3([_scale_by_degree(c, 2) for c in v])
    return -POSITION.cross(scaled)


def poincare_p3(s: Poly3) -> PolyVec3:
    """``x ∫_0^1 t^2 s(tx) dt``; inverts div on polynomials modulo curls."""
    scaled = _scale_by_degree(s, 3)
    return PolyVec3([X * scaled, Y * scaled, Z * scaled])


def poincare_p1(v: PolyVec3) -> Poly3:
    """``∫_0^1 v(tx)·x dt``; inverts grad on curl-free polynomial fields."""
    scaled = PolyVec3([_scale_by_degree(c, 1) for c in v])
    return POSITION.dot(scaled)


def evaluate(v: Poly3 | PolyVec3, point):
    """Evaluate at a point. Exact inputs give exact results, floats give floats."""
    if isinstance(v, PolyVec3):
        return tuple(evaluate(c, point) for c in v)
    x, y, z = point
    total = 0
    for (a, b, c), coeff in v.items():
        total += coeff * x**a * y**b * z**c
    if isinstance(x, float) or isinstance(y, float) or isinstance(z, float):
        return float(total)
    return total


def evaluate_many(p: Poly3, points: np.ndarray) -> np.ndarray:
    """Vectorised float evaluation at an (n, 3) array of points."""
    points = np.asarray(points, dtype=float)
    out = np.zeros(points.shape[0])
    for (a, b, c), coeff in p.items():
        out += float(coeff) * points[:, 0] ** a * points[:, 1] ** b * points[:, 2] ** c
    return out


def integrate_interval(p: Poly3, axis, lo=-1, hi=1, at: Mapping[int, object] | None = None) -> Poly3:
    """Exactly integrate ``p`` over ``axis`` on [lo, hi]; other variables optionally fixed."""
    k = _axis(axis)
    lo, hi = Fraction(lo), Fraction(hi)
    out: dict[Exponent, Fraction] = {}
    for e, c in p.items():
        n = e[k]
        val = c * (hi ** (n + 1) - lo ** (n + 1)) / (n + 1)
        ne = list(e)
        ne[k] = 0
        out_e = tuple(ne)
        out[out_e] = out.get(out_e, Fraction(0)) + val
    result = Poly3(out)
    if at:
        result = substitute(result, at)
    return result


def substitute(p: Poly3, values: Mapping[int, object]) -> Poly3:
    """Fix some variables (axis index -> exact value)."""
    out: dict[Exponent, Fraction] = {}
    for e, c in p.items():
        ne = list(e)
        for k, val in values.items():
            c = c * Fraction(val) ** e[k]
            ne[k] = 0
        ne = tuple(ne)
        out[ne] = out.get(ne, Fraction(0)) + c
    return Poly3(out)


def random_poly(rng: np.random.Generator, degree: int, density: float = 0.6, max_num: int = 9) -> Poly3:
    """Random polynomial of total degree <= ``degree`` with small rational coefficients."""
    terms = {}
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                if rng.random() < density:
                    num = int(rng.integers(-max_num, max_num + 1))
                    den = int(rng.integers(1, 5))
                    terms[(a, b, c)] = Fraction(num, den)
    return Poly3(terms)


def random_field(rng: np.random.Generator, degree: int, **kw) -> PolyVec3:
    return PolyVec3([random_poly(rng, degree, **kw) for _ in range(3)])
