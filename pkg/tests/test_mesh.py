import numpy as np
import pytest

from qcfem.mesh import build_box_mesh, unit_cube_mesh


def test_counts_on_unit_cube():
    m = unit_cube_mesh(2)
    assert (m.num_vertices, m.num_edges, m.num_faces, m.num_cells) == (27, 54, 36, 8)
    assert m.euler_characteristic() == 1


@pytest.mark.parametrize("div", [(1, 1, 1), (2, 3, 4), (3, 1, 2)])
def test_euler_characteristic_of_box(div):
    assert build_box_mesh(divisions=div).euler_characteristic() == 1


def test_interior_entity_counts():
    m = unit_cube_mesh(2)
    b = m.boundary_entities()
    assert m.num_vertices - b["vertices"].size == 1
    assert m.num_edges - b["edges"].size == 6
    assert m.num_faces - b["faces"].size == 12


def test_every_interior_face_shared_by_two_cells():
    m = build_box_mesh(divisions=(3, 2, 2))
    counts = np.bincount(m.cell_faces.ravel(), minlength=m.num_faces)
    assert np.all(counts[m.boundary_faces] == 1)
    assert np.all(counts[~m.boundary_faces] == 2)


def test_cell_vertices_match_geometry():
    m = build_box_mesh(((0, 1), (0, 2), (-1, 0.5)), (2, 3, 1))
    h = m.h
    assert np.allclose(h, [0.5, 2 / 3, 1.5])
    for c in range(m.num_cells):
        v = m.vertex_coords[m.cell_vertices[c]]
        assert np.allclose(v.min(axis=0) + h / 2, m.cell_centers[c])
        assert np.allclose(v.max(axis=0) - v.min(axis=0), h)


def test_edge_centers_lie_on_cells():
    m = unit_cube_mesh(2)
    for c in range(m.num_cells):
        d = np.abs(m.edge_centers[m.cell_edges[c]] - m.cell_centers[c])
        # each edge center is at the cell center along its own axis, at a corner otherwise
        assert np.allclose(np.sort(d, axis=1), [[0, 0.25, 0.25]] * 12)


def test_map_points_shape():
    m = unit_cube_mesh(3)
    pts = m.map_points(np.zeros((1, 3)))
    assert pts.shape == (27, 1, 3)
    assert np.allclose(pts[:, 0], m.cell_centers)


@pytest.mark.parametrize("bounds,div", [
    (((0, 1), (0, 1), (0, 1)), (0, 1, 1)),
    (((0, 1), (1, 1), (0, 1)), (1, 1, 1)),
    (((0, 1), (0, 1)), (1, 1, 1)),
])
def test_rejects_bad_input(bounds, div):
    with pytest.raises(ValueError):
        build_box_mesh(bounds, div)
