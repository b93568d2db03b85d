import numpy as np
import pytest

from crackfem.cohesive_law import Material
from crackfem.mesh import BoundaryCondition, Mesh


def build_grid(nx, ny, sx=1.0, sy=1.0, tp=4):
    """Structured mesh of nx*ny cells; quads or crossed triangles."""
    mesh = Mesh()
    ids = {}

    def node(i, j):
        if (i, j) not in ids:
            ids[(i, j)] = mesh.add_node(i * sx, j * sy, "corner")
        return ids[(i, j)]

    for j in range(ny):
        for i in range(nx):
            n1, n2 = node(i, j), node(i + 1, j)
            n3, n4 = node(i + 1, j + 1), node(i, j + 1)
            if tp == 4:
                mesh.add_element(4, [n1, n2, n3, n4])
            else:
                mesh.add_element(3, [n1, n2, n3])
                mesh.add_element(3, [n1, n3, n4])
    mesh.finalize()
    return mesh


def mode_one_square(h=0.1):
    """Single square element gripped top and bottom for a vertical pull."""
    mesh = Mesh()
    for x, y in [(0, 0), (h, 0), (h, h), (0, h)]:
        mesh.add_node(x, y, "corner")
    mesh.add_element(4, [1, 2, 3, 4])
    mesh.bcs += [
        BoundaryCondition(1, 0, 0.0, "disp"),
        BoundaryCondition(1, 1, 0.0, "disp"),
        BoundaryCondition(2, 1, 0.0, "disp"),
        BoundaryCondition(3, 1, 1.0, "disp"),
        BoundaryCondition(4, 1, 1.0, "disp"),
    ]
    mesh.finalize()
    mesh.validate()
    return mesh


@pytest.fixture
def concrete():
    return Material(E=25.85e9, nu=0.18, f_t=2.7e6, G_f=75.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240301)
