"""Pytest configuration and shared fixtures."""

from __future__ import annotations

import numpy as np
import pytest
from intrinsic_fem.generators import build_disk_mesh, build_square_mesh
from intrinsic_fem.mesh import DiscreteMetric, SimplicialMesh


@pytest.fixture
def single_triangle() -> tuple[SimplicialMesh, DiscreteMetric]:
    mesh = SimplicialMesh.from_triangles([(0, 1, 2)])
    return mesh, DiscreteMetric.from_lengths(np.ones(3))


@pytest.fixture
def unit_square() -> tuple[SimplicialMesh, DiscreteMetric]:
    return build_square_mesh(6)


@pytest.fixture
def small_disk() -> tuple[SimplicialMesh, DiscreteMetric]:
    return build_disk_mesh(1.0, 3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
