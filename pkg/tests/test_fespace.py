import numpy as np
import pytest

from qcfem import reference_element as ref

from qcfem.analysis.interpolation import interpolate_R
from qcfem.fespace import build_space, physical_table, pushforward_scalar
from qcfem.mesh import build_box_mesh, unit_cube_mesh
from qcfem.polynomials import X, Y, Z, PolyVec3, curl, evaluate_many, grad


@pytest.mark.parametrize("r,dims", [(1, (27, 126, 108, 8)), (2, (81, 180, 108, 8))])
def test_global_dimensions(r, dims):
    m = unit_cube_mesh(2)
    assert tuple(build_space(m, k, r).ndofs for k in "SVWQ") == dims


def test_free_dimensions_with_boundary():
    m = unit_cube_mesh(2)
    free = tuple(build_space(m, k, 1).free_dofs.size for k in "SVW")
    assert free == (1, 30, 36)


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_space(unit_cube_mesh(1), "X")


def _vec(v):
    return lambda p: np.stack([evaluate_many(c, p) for c in v], axis=-1)


@pytest.mark.parametrize("r", [1, 2])
def test_interpolant_reproduces_element_fields_on_anisotropic_mesh(r):
    # grad of a serendipity function plus a rotation both lie in the local space
    u = grad(X * Y * Z + X * Y) + PolyVec3((-Z, 0, X))
    m = build_box_mesh(((0, 1), (0, 2), (-1, 0.5)), (2, 3, 1))
    V = build_space(m, "V", r)
    Ru = interpolate_R(_vec(u), _vec(curl(u)), V)
    t = physical_table(V, 3)
    pts = m.map_points(t.points_ref)
    vals = np.einsum("cj,jqk->cqk", Ru.local(), t.values)
    curls = np.einsum("cj,jqk->cqk", Ru.local(), t.curls)
    assert np.abs(vals - _vec(u)(pts.reshape(-1, 3)).reshape(vals.shape)).max() < 1e-12
    assert np.abs(curls - _vec(curl(u))(pts.reshape(-1, 3)).reshape(vals.shape)).max() < 1e-12


def test_gradcurl_pushforward_on_anisotropic_cell():
    u = PolyVec3((0, 0, X * X))
    m = build_box_mesh(((0, 1), (0, 2), (-1, 0.5)), (1, 1, 1))
    V = build_space(m, "V", 2)
    Ru = interpolate_R(_vec(u), _vec(curl(u)), V)
    t = physical_table(V, 3)
    gc = np.einsum("cj,jqkl->cqkl", Ru.local(), t.gradcurls)
    # curl u = (0, -2x, 0), so d(curl u)_y / dx = -2
    expect = np.zeros((3, 3))
    expect[1, 0] = -2.0
    assert np.abs(gc - expect).max() < 1e-12


def test_scalar_interpolant_of_one():
    # 1 = sum of vertex functions + sum over edges of |e| times the edge-integral function
    m = build_box_mesh(((0, 2), (0, 1), (0, 3)), (1, 1, 1))
    h = m.cell_geometry(0).half_extents
    for r in (1, 2):
        t = pushforward_scalar(m.cell_geometry(0), r, 3)
        coef = np.ones(t.values.shape[0])
        if r == 2:
            coef[8:] = [2 * h[ref.edge_axis(e)] for e in range(12)]
        assert np.allclose(coef @ t.values, 1.0, atol=1e-13)
        assert np.allclose(np.einsum("j,jqk->qk", coef, t.grads), 0.0, atol=1e-13)
