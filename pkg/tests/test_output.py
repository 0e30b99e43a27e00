import os

import numpy as np
import pytest

from ericksen import output
from ericksen.errors import ConfigurationError
from ericksen.flow import StepRecord
from ericksen.mesh import build_box_mesh_3d

from conftest import two_triangle_mesh

DATA = os.path.join(os.path.dirname(__file__), "data")

S = np.array([0.5, 0.25, -0.125, 0.75])
N = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def test_vtk_golden_two_triangles():
    with open(os.path.join(DATA, "two_triangles.vtk")) as fh:
        golden = fh.read()
    assert output.vtk_string(two_triangle_mesh(), S, N, title="golden") == golden


def test_vtk_roundtrip_3d(tmp_path, rng):
    m = build_box_mesh_3d(2, 1, 1)
    s = rng.normal(size=m.num_nodes)
    n = rng.normal(size=(m.num_nodes, 3))
    path = tmp_path / "f.vtk"
    output.write_vtk(path, m, s, n)
    pts, cells, types, s2, n2 = output.read_vtk(path)
    np.testing.assert_array_equal(pts, m.vertices)
    np.testing.assert_array_equal(cells, m.cells)
    assert set(types) == {10}
    np.testing.assert_array_equal(s2, s)
    np.testing.assert_array_equal(n2, n)


def test_read_vtk_rejects_other_files(tmp_path):
    p = tmp_path / "x.vtk"
    p.write_text("hello\nworld\nBINARY\n")
    with pytest.raises(ValueError):
        output.read_vtk(p)


def test_energy_log(tmp_path):
    path = tmp_path / "energy.csv"
    with output.EnergyLog(path) as log:
        log.append(StepRecord(0, 1.0, -0.5, 0.5, 0.9, 0.4, 0.75, 0.0))
        log.append(StepRecord(1, 0.1, 0.2, 0.30000000000000004, 0.1, 0.0, 0.5, 1e-3))
    lines = path.read_text().splitlines()
    assert lines[0] == "step,e1,e2,total,e1_tilde,c1,min_s,decrement"
    assert lines[2].split(",")[3] == "0.30000000000000004"
    data = output.read_energy_csv(path)
    assert data["total"][1] == 0.30000000000000004


def test_state_roundtrip(tmp_path, rng):
    s = rng.normal(size=7)
    n = rng.normal(size=(7, 3))
    path = tmp_path / "state.txt"
    output.write_state(path, s, n)
    assert path.read_text().startswith("dim 3\nN 7\n")
    s2, n2 = output.read_state(path)
    np.testing.assert_array_equal(s2, s)
    np.testing.assert_array_equal(n2, n)


@pytest.mark.parametrize("text", ["", "dim 2\nN 2\n1 0 0\n", "dim 2\nN 1\n1 x 0\n", "N 1\ndim 2\n1 0 0\n"])
def test_malformed_state(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        output.read_state(path)


def test_json(tmp_path):
    output.write_json(tmp_path / "r.json", {"b": 1, "a": [1.5]})
    assert (tmp_path / "r.json").read_text() == '{\n  "a": [\n    1.5\n  ],\n  "b": 1\n}\n'
