"""Pytest configuration and shared fixtures."""

from __future__ import annotations

import math

import numpy as np
import pytest
from intrinsic_fem.generators import (
    build_cap_mesh,
    build_disk_mesh,
    build_hyperbolic_ball_mesh,
    build_square_mesh,
)
from intrinsic_fem.mesh import DiscreteMetric, SimplicialMesh, perturb_lengths

Surface = tuple[SimplicialMesh, DiscreteMetric]


@pytest.fixture
def cap() -> Surface:
    return build_cap_mesh(math.pi / 3, 6)


@pytest.fixture
def fine_cap() -> Surface:
    return build_cap_mesh(math.pi / 3, 10)


@pytest.fixture
def coarse_cap() -> Surface:
    return build_cap_mesh(math.pi / 3, 3)


@pytest.fixture
def perturbed_coarse_cap(coarse_cap: Surface) -> Surface:
    mesh, metric = coarse_cap
    return mesh, perturb_lengths(mesh, metric, 0.1, seed=7)


@pytest.fixture
def hyperbolic_ball() -> Surface:
    return build_hyperbolic_ball_mesh(1.0, 10)


@pytest.fixture
def disk() -> Surface:
    return build_disk_mesh(1.0, 4)


@pytest.fixture
def perturbed_disk(disk: Surface) -> Surface:
    mesh, metric = disk
    return mesh, perturb_lengths(mesh, metric, 0.05, seed=3)


@pytest.fixture
def square() -> Surface:
    return build_square_mesh(3)


@pytest.fixture
def perturbed_square() -> Surface:
    mesh, metric = build_square_mesh(4)
    return mesh, perturb_lengths(mesh, metric, 0.1, seed=11)


@pytest.fixture
def one_interior_square() -> Surface:
    """2×2 grid: a single interior vertex, so Dirichlet data is a scalar."""
    return build_square_mesh(2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
