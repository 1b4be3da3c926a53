import math

import numpy as np
import pytest

from enclosure import forward as fw
from enclosure.geometry import Direction, Polygon, Scene

SQUARE = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]
DIAG = Direction(np.array([math.sqrt(0.5), math.sqrt(0.5)]))


@pytest.fixture(scope="session")
def square_scene():
    return Scene(obstacles=[Polygon(SQUARE)], R=0.75, R1=3.0)


@pytest.fixture(scope="session")
def diag():
    return DIAG


@pytest.fixture(scope="session")
def square_solution(square_scene):
    return fw.solve(square_scene, fw.WaveContext(1.0, fw.PlaneWave((1.0, 0.0))))


@pytest.fixture(scope="session")
def square_data(square_solution):
    return fw.cauchy_data(square_solution, 0.75, M=1024)


@pytest.fixture(scope="session")
def square_far_field(square_solution):
    return fw.far_field(square_solution, Q=256, precision_bits=512)


@pytest.fixture(scope="session")
def square_point_source(square_scene):
    return fw.point_source_data(square_scene, 1.0, (-3.0, 0.0), M=1024)


@pytest.fixture(scope="session")
def triangle_scene():
    return Scene(obstacles=[Polygon([[-0.4, -0.3], [0.45, -0.2], [0.0, 0.5]])], R=0.75)


@pytest.fixture(scope="session")
def triangle_data(triangle_scene):
    sol = fw.solve(triangle_scene, fw.WaveContext(1.0, fw.PlaneWave((1.0, 0.0))))
    return fw.cauchy_data(sol, 0.75, M=1024)
