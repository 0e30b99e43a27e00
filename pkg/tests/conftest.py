import numpy as np
import pytest

from ericksen.mesh import Mesh, build_box_mesh_3d, build_rect_mesh_2d


def two_triangle_mesh():
    """Unit square split along the SW-NE diagonal."""
    return build_rect_mesh_2d(1, 1)


def random_state(mesh, rng):
    """s uniform in (-0.45, 0.95), n uniform on the sphere."""
    s = rng.uniform(-0.45, 0.95, mesh.num_nodes)
    n = rng.normal(size=(mesh.num_nodes, mesh.dim))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    return s, n


def triangle_mesh(points):
    pts = np.asarray(points, dtype=float)
    box = np.column_stack([pts.min(axis=0), pts.max(axis=0)])
    return Mesh(2, pts, np.array([[0, 1, 2]]), box, {})


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def suite_meshes():
    return {
        "two_triangles": two_triangle_mesh(),
        "square16": build_rect_mesh_2d(16, 16),
        "cube4": build_box_mesh_3d(4, 4, 4),
    }


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
