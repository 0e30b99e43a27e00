import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ericksen.errors import ConfigurationError
from ericksen.mesh import BoundarySpec, build_box_mesh_3d, build_rect_mesh_2d, select_boundary


def test_rect_mesh_counts_and_area():
    m = build_rect_mesh_2d(3, 2, box=((0.0, 1.5), (-1.0, 1.0)))
    assert m.num_nodes == 12
    assert m.num_cells == 12
    vol = m.cell_volumes()
    assert np.all(vol > 0)
    assert vol.sum() == pytest.approx(3.0)


def test_rect_mesh_node_layout():
    m = build_rect_mesh_2d(2, 2)
    # node j*(nx+1)+i sits at (i/nx, j/ny)
    np.testing.assert_allclose(m.vertices[4], [0.5, 0.5])
    np.testing.assert_allclose(m.vertices[5], [1.0, 0.5])


def test_box_mesh_kuhn_cells():
    m = build_box_mesh_3d(2, 3, 1, box=((0, 2), (0, 3), (0, 1)))
    assert m.num_nodes == 3 * 4 * 2
    assert m.num_cells == 6 * 6
    vol = m.cell_volumes()
    assert np.all(vol > 0)
    np.testing.assert_allclose(vol, 1.0 / 6.0)
    assert vol.sum() == pytest.approx(6.0)


@pytest.mark.parametrize("mesh", [build_rect_mesh_2d(4, 3), build_box_mesh_3d(3, 2, 2)])
def test_conforming_facets(mesh):
    # every facet is shared by one (boundary) or two (interior) cells
    faces, counts = mesh.facets()
    assert set(np.unique(counts)) <= {1, 2}
    boundary = faces[counts == 1]
    on_box = np.zeros(len(boundary), dtype=bool)
    for nodes in mesh.boundary_tags.values():
        on_box |= np.isin(boundary, nodes).all(axis=1)
    assert on_box.all()


def test_face_tags():
    m = build_box_mesh_3d(2, 2, 2)
    assert len(m.boundary_tags) == 6
    for name in m.boundary_tags:
        assert len(m.boundary_tags[name]) == 9
    np.testing.assert_allclose(m.vertices[m.boundary_tags["zmax"], 2], 1.0)


def test_node_star():
    m = build_rect_mesh_2d(2, 2)
    assert len(m.node_star(4)) == 6
    assert len(m.node_star(0)) == 2


def test_vertices_read_only():
    m = build_rect_mesh_2d(1, 1)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 3.0


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_rect_mesh_2d(0, 2)
    with pytest.raises(ValueError):
        build_box_mesh_3d(1, 1, 1, box=((0, 1), (1, 1), (0, 1)))


def test_select_boundary_all():
    m = build_rect_mesh_2d(4, 4)
    sets = select_boundary(m, BoundarySpec(("all",), ("all",)))
    assert len(sets["gamma_s"]) == 16
    np.testing.assert_array_equal(sets["gamma_s"], sets["gamma_n"])


def test_select_boundary_errors():
    m = build_box_mesh_3d(2, 2, 2)
    with pytest.raises(ConfigurationError):
        select_boundary(m, BoundarySpec(("zmin",), ("zmax",)))
    with pytest.raises(ConfigurationError):
        select_boundary(m, BoundarySpec((), ()))
    with pytest.raises(ConfigurationError):
        select_boundary(m, BoundarySpec(("top",), ()))
    with pytest.raises(ConfigurationError):
        select_boundary(build_rect_mesh_2d(2, 2), BoundarySpec(("zmin",), ()))


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(1, 6), ny=st.integers(1, 6), nz=st.integers(1, 4),
       lx=st.floats(0.1, 3.0), ly=st.floats(0.1, 3.0), lz=st.floats(0.1, 3.0))
def test_box_volume_property(nx, ny, nz, lx, ly, lz):
    m = build_box_mesh_3d(nx, ny, nz, box=((0, lx), (0, ly), (0, lz)))
    vol = m.cell_volumes()
    assert np.all(vol > 0)
    assert vol.sum() == pytest.approx(lx * ly * lz, rel=1e-12)
