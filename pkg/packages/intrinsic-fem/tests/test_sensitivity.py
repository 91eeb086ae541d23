"""Finite-difference checks of the edge-length derivatives."""

from __future__ import annotations

import numpy as np
import pytest
from intrinsic_fem.assembly import assemble, triangle_geometry
from intrinsic_fem.generators import build_disk_mesh
from intrinsic_fem.mesh import DiscreteMetric, measures, perturb_lengths
from intrinsic_fem.sensitivity import (
    area_gradient,
    boundary_length_gradient,
    conformal_pullback,
    form_gradient,
    p1_gradients,
    triangle_mean_square,
)

STEP = 1e-6


@pytest.fixture
def bumpy_disk():
    mesh, metric = build_disk_mesh(1.0, 3)
    return mesh, perturb_lengths(mesh, metric, 0.05, seed=3)


def bilinear(mesh, metric, u, v, mode: str) -> tuple[float, float, float]:
    ops = assemble(mesh, metric, mass_mode=mode)
    return (
        float(u @ (ops.stiffness @ v)),
        float(u @ (ops.mass @ v)),
        float(u @ (ops.boundary_mass @ v)),
    )


def central_difference(mesh, metric, u, v, mode: str, direction) -> np.ndarray:
    plus = metric.with_edge_lengths(metric.lengths + STEP * direction)
    minus = metric.with_edge_lengths(metric.lengths - STEP * direction)
    return (
        np.array(bilinear(mesh, plus, u, v, mode))
        - np.array(bilinear(mesh, minus, u, v, mode))
    ) / (2 * STEP)


class TestFormGradient:
    @pytest.mark.parametrize("mode", ["consistent", "lumped"])
    def test_matches_finite_differences(self, bumpy_disk, rng, mode: str) -> None:
        mesh, metric = bumpy_disk
        geometry = triangle_geometry(mesh, metric)
        u = rng.standard_normal(mesh.vertex_count)
        v = rng.standard_normal(mesh.vertex_count)
        direction = rng.standard_normal(mesh.edge_count)
        fd = central_difference(mesh, metric, u, v, mode, direction)

        forms = (
            {"stiffness": 1.0},
            {"stiffness": 0.0, "mass": 1.0},
            {"stiffness": 0.0, "boundary": 1.0},
        )
        for k, weights in enumerate(forms):
            grad = form_gradient(
                mesh, metric, geometry, u, v, mass_mode=mode, **weights
            ).total
            assert grad @ direction == pytest.approx(fd[k], rel=1e-6, abs=1e-9)

    def test_boundary_part_only_on_boundary_edges(self, bumpy_disk, rng) -> None:
        mesh, metric = bumpy_disk
        geometry = triangle_geometry(mesh, metric)
        u = rng.standard_normal(mesh.vertex_count)
        grad = form_gradient(mesh, metric, geometry, u, u, stiffness=0.0, boundary=1.0)
        interior_edges = np.setdiff1d(np.arange(mesh.edge_count), mesh.boundary_edges)
        assert not grad.boundary[interior_edges].any()
        assert not grad.interior.any()

    def test_respects_triangle_factor(self, bumpy_disk, rng) -> None:
        mesh, metric = bumpy_disk
        metric = metric.with_triangle_log_factor(rng.uniform(-0.5, 0.5, mesh.face_count))
        geometry = triangle_geometry(mesh, metric)
        u = rng.standard_normal(mesh.vertex_count)
        direction = rng.standard_normal(mesh.edge_count)
        fd = central_difference(mesh, metric, u, u, "consistent", direction)
        grad = form_gradient(
            mesh, metric, geometry, u, u, stiffness=1.0, mass=-2.0, boundary=0.5
        ).total
        assert grad @ direction == pytest.approx(
            fd[0] - 2.0 * fd[1] + 0.5 * fd[2], rel=1e-6
        )


class TestMeasureGradients:
    def test_area_and_length(self, bumpy_disk, rng) -> None:
        mesh, metric = bumpy_disk
        geometry = triangle_geometry(mesh, metric)
        direction = rng.standard_normal(mesh.edge_count)
        plus = measures(mesh, metric.with_edge_lengths(metric.lengths + STEP * direction))
        minus = measures(mesh, metric.with_edge_lengths(metric.lengths - STEP * direction))
        fd_area = (plus.area - minus.area) / (2 * STEP)
        fd_length = (plus.boundary_length - minus.boundary_length) / (2 * STEP)
        assert area_gradient(mesh, metric, geometry) @ direction == pytest.approx(
            fd_area, rel=1e-6
        )
        assert boundary_length_gradient(mesh, metric) @ direction == pytest.approx(
            fd_length, rel=1e-8
        )

    def test_conformal_pullback(self, bumpy_disk, rng) -> None:
        mesh, metric = bumpy_disk
        phi = rng.uniform(-0.2, 0.2, mesh.vertex_count)
        conformal = metric.with_log_factor(mesh, phi)
        geometry = triangle_geometry(mesh, conformal)
        grad = conformal_pullback(mesh, conformal, area_gradient(mesh, conformal, geometry))
        h = rng.standard_normal(mesh.vertex_count)
        plus = measures(mesh, metric.with_log_factor(mesh, phi + STEP * h)).area
        minus = measures(mesh, metric.with_log_factor(mesh, phi - STEP * h)).area
        assert grad @ h == pytest.approx((plus - minus) / (2 * STEP), rel=1e-6)

    def test_area_is_homogeneous(self, bumpy_disk) -> None:
        mesh, metric = bumpy_disk
        geometry = triangle_geometry(mesh, metric)
        grad = area_gradient(mesh, metric, geometry)
        assert grad @ metric.lengths == pytest.approx(2.0 * geometry.areas.sum())


class TestPointwise:
    def test_linear_function_has_unit_gradient(self, small_disk) -> None:
        mesh, metric = small_disk
        geometry = triangle_geometry(mesh, metric)
        x = mesh.vertex_coordinates[:, 0]
        norms = np.linalg.norm(p1_gradients(mesh, geometry, x), axis=1)
        np.testing.assert_allclose(norms, 1.0, rtol=1e-10)

    def test_mean_square_integrates_mass(self, small_disk, rng) -> None:
        mesh, metric = small_disk
        geometry = triangle_geometry(mesh, metric)
        u = rng.standard_normal(mesh.vertex_count)
        mass = assemble(mesh, metric).mass
        total = float(triangle_mean_square(mesh, u) @ geometry.areas)
        assert total == pytest.approx(float(u @ (mass @ u)), rel=1e-12)

    def test_conformal_metric_uses_base_lengths(self, small_disk) -> None:
        mesh, metric = small_disk
        conformal = DiscreteMetric.conformal(metric.lengths, np.zeros(mesh.vertex_count))
        np.testing.assert_array_equal(conformal.edge_lengths(mesh), metric.lengths)
