"""Tests for the mesh and metric model."""

from __future__ import annotations

import math

import numpy as np
import pytest
from intrinsic_fem.errors import (
    BoundaryError,
    DisconnectedMeshError,
    InvalidMetricError,
    MeshError,
    NonManifoldError,
)
from intrinsic_fem.generators import build_cap_mesh, build_disk_mesh, build_square_mesh
from intrinsic_fem.mesh import (
    DiscreteMetric,
    SimplicialMesh,
    attach_collar,
    boundary_distance,
    ensure_valid,
    measures,
    perturb_lengths,
    topology,
    validate_metric,
)

from .shapes import annulus_triangles, mobius_triangles, punctured_torus_triangles


class TestCombinatorics:
    def test_single_triangle(self, single_triangle) -> None:
        mesh, _ = single_triangle
        report = topology(mesh)
        assert (report.vertex_count, report.edge_count, report.face_count) == (3, 3, 1)
        assert report.genus == 0
        assert report.boundary_components == 1
        assert report.euler_characteristic == 1
        assert mesh.interior_vertices.size == 0

    def test_square_counts(self) -> None:
        mesh, _ = build_square_mesh(1)
        assert (mesh.vertex_count, mesh.edge_count, mesh.face_count) == (4, 5, 2)
        assert topology(mesh).euler_characteristic == 1

    def test_edges_are_sorted_pairs(self, unit_square) -> None:
        mesh, _ = unit_square
        assert (mesh.edges[:, 0] < mesh.edges[:, 1]).all()
        keys = mesh.edges[:, 0] * mesh.vertex_count + mesh.edges[:, 1]
        assert (np.diff(keys) > 0).all()

    def test_triangle_edges_match_local_sides(self, unit_square) -> None:
        mesh, _ = unit_square
        for f in (0, 7, mesh.face_count - 1):
            tri = mesh.triangles[f]
            for k in range(3):
                pair = sorted((tri[(k + 1) % 3], tri[(k + 2) % 3]))
                assert list(mesh.edges[mesh.triangle_edges[f, k]]) == pair

    def test_edge_index_either_orientation(self, unit_square) -> None:
        mesh, _ = unit_square
        i, j = mesh.edges[4]
        assert list(mesh.edge_index(np.array([[i, j], [j, i]]))) == [4, 4]

    def test_edge_index_unknown_pair(self, unit_square) -> None:
        mesh, _ = unit_square
        with pytest.raises(MeshError, match="not an edge"):
            mesh.edge_index(np.array([[0, mesh.vertex_count - 1]]))

    def test_non_manifold_edge(self) -> None:
        with pytest.raises(NonManifoldError) as ei:
            SimplicialMesh.from_triangles([(0, 1, 2), (0, 1, 3), (0, 1, 4)])
        assert ei.value.edge == (0, 1)
        assert ei.value.triangle_count == 3

    def test_disconnected(self) -> None:
        with pytest.raises(DisconnectedMeshError) as ei:
            SimplicialMesh.from_triangles([(0, 1, 2), (3, 4, 5)])
        assert ei.value.components == 2

    def test_closed_surface_rejected(self) -> None:
        tetrahedron = [(0, 1, 2), (0, 3, 1), (1, 3, 2), (2, 3, 0)]
        with pytest.raises(BoundaryError, match="no boundary"):
            SimplicialMesh.from_triangles(tetrahedron)

    def test_pinched_boundary_rejected(self) -> None:
        # Two triangles sharing only vertex 0.
        with pytest.raises((BoundaryError, DisconnectedMeshError)):
            SimplicialMesh.from_triangles([(0, 1, 2), (0, 3, 4)])

    def test_repeated_vertex_rejected(self) -> None:
        with pytest.raises(MeshError, match="repeats a vertex"):
            SimplicialMesh.from_triangles([(0, 1, 1)])

    def test_index_out_of_range(self) -> None:
        with pytest.raises(MeshError, match="out of range"):
            SimplicialMesh.from_triangles([(0, 1, 5)], vertex_count=3)


class TestTopology:
    def test_annulus(self) -> None:
        mesh = SimplicialMesh.from_triangles(annulus_triangles(8))
        report = topology(mesh)
        assert report.euler_characteristic == 0
        assert report.boundary_components == 2
        assert report.genus == 0
        assert report.orientable

    def test_punctured_torus(self) -> None:
        mesh = SimplicialMesh.from_triangles(punctured_torus_triangles(4))
        report = topology(mesh)
        assert report.euler_characteristic == -1
        assert report.boundary_components == 1
        assert report.genus == 1
        assert report.orientable
        assert sorted(mesh.boundary_loops[0].tolist()) == [0, 1, 4, 5]

    def test_mobius_band(self) -> None:
        mesh = SimplicialMesh.from_triangles(mobius_triangles(5))
        report = topology(mesh)
        assert not report.orientable
        assert report.euler_characteristic == 0
        assert report.boundary_components == 1
        assert report.genus == 1
        assert len(mesh.boundary_loops[0]) == 10

    def test_loop_follows_triangle_orientation(self, single_triangle) -> None:
        mesh, _ = single_triangle
        (loop,) = mesh.boundary_loops
        assert loop.tolist() == [0, 1, 2]


class TestMetric:
    def test_valid_unit_lengths(self, single_triangle) -> None:
        mesh, metric = single_triangle
        assert validate_metric(mesh, metric).ok

    def test_flat_triangle_reported(self, single_triangle) -> None:
        mesh, _ = single_triangle
        flat = DiscreteMetric.from_lengths([1.0, 1.0, 2.0])
        diagnostics = validate_metric(mesh, flat)
        assert diagnostics.violated_triangles == (0,)
        with pytest.raises(InvalidMetricError, match="triangle inequality"):
            ensure_valid(mesh, flat)

    def test_nonpositive_edge_reported(self, single_triangle) -> None:
        mesh, _ = single_triangle
        diagnostics = validate_metric(mesh, DiscreteMetric.from_lengths([1.0, 0.0, 1.0]))
        assert diagnostics.nonpositive_edges == (1,)

    def test_wrong_shape_reported(self, single_triangle) -> None:
        mesh, _ = single_triangle
        diagnostics = validate_metric(mesh, DiscreteMetric.from_lengths([1.0, 1.0]))
        assert not diagnostics.ok
        assert "expected 3 edge lengths" in diagnostics.summary()

    def test_zero_conformal_factor_is_identity(self, unit_square) -> None:
        mesh, metric = unit_square
        conformal = metric.with_log_factor(mesh, np.zeros(mesh.vertex_count))
        assert conformal.representation == "conformal"
        np.testing.assert_array_equal(conformal.edge_lengths(mesh), metric.lengths)

    def test_constant_conformal_factor_scales_lengths(self, unit_square) -> None:
        mesh, metric = unit_square
        c = 0.3
        conformal = metric.with_log_factor(mesh, np.full(mesh.vertex_count, c))
        np.testing.assert_allclose(
            conformal.edge_lengths(mesh), metric.lengths * math.exp(c), rtol=1e-14
        )

    def test_measures_scale_under_constant_factor(self, unit_square) -> None:
        mesh, metric = unit_square
        base = measures(mesh, metric)
        c = -0.2
        scaled = measures(mesh, metric.with_log_factor(mesh, np.full(mesh.vertex_count, c)))
        assert scaled.area == pytest.approx(base.area * math.exp(2 * c), rel=1e-12)
        assert scaled.boundary_length == pytest.approx(
            base.boundary_length * math.exp(c), rel=1e-12
        )

    def test_triangle_factor_scales_each_triangle(self, unit_square) -> None:
        mesh, metric = unit_square
        psi = np.zeros(mesh.face_count)
        psi[0] = math.log(2.0)
        base = measures(mesh, metric)
        scaled = measures(mesh, metric.with_triangle_log_factor(psi))
        assert scaled.per_triangle_areas[0] == pytest.approx(
            4.0 * base.per_triangle_areas[0]
        )
        np.testing.assert_allclose(
            scaled.per_triangle_areas[1:], base.per_triangle_areas[1:]
        )

    def test_unit_square_measures(self, unit_square) -> None:
        mesh, metric = unit_square
        m = measures(mesh, metric)
        assert m.area == pytest.approx(1.0, rel=1e-12)
        assert m.boundary_length == pytest.approx(4.0, rel=1e-12)

    def test_scaled_metric(self, unit_square) -> None:
        mesh, metric = unit_square
        m = measures(mesh, metric.scaled(mesh, 3.0))
        assert m.area == pytest.approx(9.0)
        assert m.boundary_length == pytest.approx(12.0)


class TestPerturbation:
    def test_deterministic_and_bounded(self, unit_square) -> None:
        mesh, metric = unit_square
        a = perturb_lengths(mesh, metric, 0.01, seed=7)
        b = perturb_lengths(mesh, metric, 0.01, seed=7)
        np.testing.assert_array_equal(a.lengths, b.lengths)
        ratio = a.lengths / metric.lengths
        assert ratio.min() >= 0.99
        assert ratio.max() <= 1.01

    def test_different_seed_differs(self, unit_square) -> None:
        mesh, metric = unit_square
        a = perturb_lengths(mesh, metric, 0.01, seed=1)
        b = perturb_lengths(mesh, metric, 0.01, seed=2)
        assert not np.array_equal(a.lengths, b.lengths)

    def test_valid_draw_is_kept(self, unit_square) -> None:
        mesh, metric = unit_square
        rng = np.random.default_rng(4)
        expected = metric.lengths * (1.0 + 0.01 * rng.uniform(-1.0, 1.0, mesh.edge_count))
        np.testing.assert_array_equal(perturb_lengths(mesh, metric, 0.01, seed=4).lengths, expected)

    @pytest.mark.parametrize("seed", range(20))
    def test_every_seed_gives_a_valid_metric(self, seed: int) -> None:
        mesh, metric = build_disk_mesh(1.0, 8)
        perturbed = perturb_lengths(mesh, metric, 0.1, seed=seed)
        assert validate_metric(mesh, perturbed).ok
        ratio = perturbed.lengths / metric.lengths
        assert ratio.min() >= 0.9 - 1e-12
        assert ratio.max() <= 1.1 + 1e-12

    def test_cap_redraw(self) -> None:
        mesh, metric = build_cap_mesh(math.pi / 3, 6)
        perturbed = perturb_lengths(mesh, metric, 0.1, seed=5)
        assert validate_metric(mesh, perturbed).ok
        assert not np.array_equal(perturbed.lengths, metric.lengths)

    def test_large_amplitude_stays_valid(self, small_disk) -> None:
        mesh, metric = small_disk
        for seed in range(5):
            assert validate_metric(mesh, perturb_lengths(mesh, metric, 0.9, seed=seed)).ok

    def test_invalid_input_is_rejected(self, single_triangle) -> None:
        mesh, _ = single_triangle
        flat = DiscreteMetric.from_lengths(np.array([1.0, 1.0, 3.0]))
        with pytest.raises(InvalidMetricError):
            perturb_lengths(mesh, flat, 0.1, seed=0)


class TestCollar:
    def test_collar_adds_width_times_length(self) -> None:
        mesh, metric = build_cap_mesh(math.pi / 3, 4)
        base = measures(mesh, metric)
        width = 1e-3
        collar = attach_collar(mesh, metric, width)
        extended = measures(collar.mesh, collar.metric)
        assert extended.area == pytest.approx(
            base.area + width * base.boundary_length, rel=1e-12
        )
        assert extended.boundary_length == pytest.approx(base.boundary_length, rel=1e-12)
        assert topology(collar.mesh).genus == 0
        assert topology(collar.mesh).boundary_components == 1
        assert len(collar.collar_triangles) == 2 * len(mesh.boundary_edges)

    def test_old_boundary_becomes_interior(self) -> None:
        mesh, metric = build_square_mesh(3)
        collar = attach_collar(mesh, metric, 0.1)
        interior = set(collar.mesh.interior_vertices.tolist())
        assert set(mesh.boundary_vertices.tolist()) <= interior

    def test_rejects_nonpositive_width(self, unit_square) -> None:
        mesh, metric = unit_square
        with pytest.raises(MeshError, match="positive"):
            attach_collar(mesh, metric, 0.0)


class TestBoundaryDistance:
    def test_square_distances(self) -> None:
        mesh, metric = build_square_mesh(4)
        distance = boundary_distance(mesh, metric)
        assert distance[mesh.boundary_vertices].max() == 0.0
        centre = 2 * 5 + 2
        assert distance[centre] == pytest.approx(0.5)
