from fractions import Fraction

import numpy as np
import pytest

from qcfem import reference_element as ref
from qcfem.polynomials import X, Y, Z, curl, evaluate_many


@pytest.mark.parametrize("r,n", [(1, 24), (2, 36)])
def test_dimensions(r, n):
    b = ref.build_dual_basis(r)
    assert b.ndofs == n == len(b.functions)
    assert len(b.edge_dof_indices()) == 12 * r
    assert len(b.face_dof_indices()) == 12


def test_serendipity_sizes():
    assert len(ref.serendipity_monomials(1)) == 8
    assert len(ref.serendipity_monomials(2)) == 20
    assert ref.superlinear_degree((2, 1, 1)) == 2


@pytest.mark.parametrize("r", [1, 2])
def test_duality_is_exact(r):
    b = ref.build_dual_basis(r)
    for i, d in enumerate(b.dofs):
        for j, f in enumerate(b.functions):
            assert ref.apply_dof(d, f) == (1 if i == j else 0)


@pytest.mark.parametrize("r", [1, 2])
def test_curl_of_shape_functions_lies_in_w(r):
    w = ref.w_space_generators()
    for f in ref.build_dual_basis(r).functions:
        _, residual = ref.expand_in(curl(f), w)
        assert all(c.is_zero() for c in residual)


@pytest.mark.parametrize("r,n", [(1, 12), (2, 24)])
def test_nedelec_subspace(r, n):
    nb = ref.build_nedelec_basis(r)
    assert len(nb.functions) == n
    for i, d in enumerate(ref.edge_dofs(r)):
        for j, f in enumerate(nb.functions):
            assert ref.apply_dof(d, f) == (1 if i == j else 0)


def test_json_round_trip():
    b = ref.build_dual_basis(1)
    b2 = ref.ReferenceElementBasis.from_json(b.to_json())
    assert b2.r == 1 and b2.dofs == b.dofs
    assert b2.dual_basis == b.dual_basis
    assert all(f == g for f, g in zip(b.functions, b2.functions))


def test_rational_solver_detects_singularity():
    G = [[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]]
    with pytest.raises(ref.UnisolvenceError):
        ref.solve_exact(G)


def test_geometry_tables_are_consistent():
    for e in range(12):
        a, b = ref.edge_vertices(e)
        va, vb = np.array(ref.vertex_coords(a)), np.array(ref.vertex_coords(b))
        diff = vb - va
        assert np.count_nonzero(diff) == 1 and diff[ref.edge_axis(e)] == 2
    for f in range(6):
        n, s = ref.face_axis(f), ref.face_side(f)
        for e in ref.face_edges(f):
            assert ref.edge_axis(e) != n and ref.edge_fixed(e)[n] == s


@pytest.mark.parametrize("n", [2, 4, 6])
def test_gauss_rule_exactness(n):
    rule = ref.gauss_rule(n, "cell")
    p = X ** (2 * n - 2) * Y ** 2 + Z ** (2 * n - 1)
    exact = Fraction(2, 2 * n - 1) * Fraction(2, 3) * 2
    assert rule.weights.sum() == pytest.approx(8.0)
    assert float(evaluate_many(p, rule.points) @ rule.weights) == pytest.approx(float(exact), rel=1e-13)


def test_tabulation_shapes():
    b = ref.build_dual_basis(1)
    t = ref.tabulate(b, ref.gauss_rule(3, "cell"))
    assert t.values.shape == (24, 27, 3)
    assert t.curls.shape == (24, 27, 3)
    assert t.gradcurls.shape == (24, 27, 3, 3)


def test_w_element_is_unisolvent():
    wb = ref.build_w_basis()
    assert len(wb.functions) == 18
    for i, phi in enumerate(wb.functionals):
        for j, f in enumerate(wb.functions):
            assert phi(f) == (1 if i == j else 0)
