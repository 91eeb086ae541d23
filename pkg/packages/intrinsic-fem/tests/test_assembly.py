"""Tests for the cotangent, mass and boundary-mass assembly."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest
from intrinsic_fem.assembly import assemble, dump_matrix, shifted_pencil
from intrinsic_fem.errors import DegenerateTriangleError, InvalidMetricError
from intrinsic_fem.generators import build_square_mesh
from intrinsic_fem.mesh import DiscreteMetric
from scipy.linalg import eigh


class TestSingleTriangle:
    def test_equilateral_stiffness(self, single_triangle) -> None:
        mesh, metric = single_triangle
        S = assemble(mesh, metric).stiffness.toarray()
        off = -1.0 / (2.0 * math.sqrt(3.0))
        expected = np.full((3, 3), off)
        np.fill_diagonal(expected, -2.0 * off)
        np.testing.assert_allclose(S, expected, rtol=1e-14)

    def test_consistent_mass(self, single_triangle) -> None:
        mesh, metric = single_triangle
        area = math.sqrt(3.0) / 4.0
        M = assemble(mesh, metric).mass.toarray()
        expected = np.full((3, 3), area / 12.0)
        np.fill_diagonal(expected, area / 6.0)
        np.testing.assert_allclose(M, expected, rtol=1e-14)

    def test_boundary_mass(self, single_triangle) -> None:
        mesh, metric = single_triangle
        B = assemble(mesh, metric).boundary_mass.toarray()
        expected = np.full((3, 3), 1.0 / 6.0)
        np.fill_diagonal(expected, 2.0 / 3.0)
        np.testing.assert_allclose(B, expected, rtol=1e-14)

    def test_degenerate_triangle(self, single_triangle) -> None:
        mesh, _ = single_triangle
        with pytest.raises(InvalidMetricError):
            assemble(mesh, DiscreteMetric.from_lengths([1.0, 1.0, 2.0]))

    def test_needle_triangle_overflows(self, single_triangle) -> None:
        mesh, _ = single_triangle
        needle = DiscreteMetric.from_lengths([1.0, 1.0, 1e-11])
        with pytest.raises(DegenerateTriangleError) as ei:
            assemble(mesh, needle)
        assert ei.value.triangle == 0


class TestOperatorProperties:
    @pytest.mark.parametrize("mode", ["consistent", "lumped"])
    def test_constants_in_kernel_and_totals(self, unit_square, mode: str) -> None:
        mesh, metric = unit_square
        ops = assemble(mesh, metric, mass_mode=mode)
        ones = np.ones(ops.size)
        np.testing.assert_allclose(ops.stiffness @ ones, 0.0, atol=1e-12)
        assert ones @ (ops.mass @ ones) == pytest.approx(1.0, rel=1e-12)
        assert ones @ (ops.boundary_mass @ ones) == pytest.approx(4.0, rel=1e-12)
        assert ops.area == pytest.approx(1.0)
        assert ops.boundary_length == pytest.approx(4.0)

    def test_lumped_is_diagonal(self, unit_square) -> None:
        mesh, metric = unit_square
        ops = assemble(mesh, metric, mass_mode="lumped")
        assert ops.mass.nnz == ops.size
        assert ops.boundary_mass.nnz == mesh.boundary_vertices.size

    def test_symmetric_semidefinite(self, small_disk) -> None:
        mesh, metric = small_disk
        ops = assemble(mesh, metric)
        S = ops.stiffness.toarray()
        np.testing.assert_array_equal(S, S.T)
        assert np.linalg.eigvalsh(S).min() > -1e-12
        assert np.linalg.eigvalsh(ops.mass.toarray()).min() > 0.0
        B = ops.boundary_mass.toarray()
        assert np.linalg.matrix_rank(B) == mesh.boundary_vertices.size

    def test_bit_identical_reassembly(self, small_disk) -> None:
        mesh, metric = small_disk
        first = assemble(mesh, metric).stiffness
        second = assemble(mesh, metric).stiffness
        np.testing.assert_array_equal(first.indptr, second.indptr)
        np.testing.assert_array_equal(first.indices, second.indices)
        np.testing.assert_array_equal(first.data, second.data)

    def test_dirichlet_energy_is_conformally_invariant(self, small_disk, rng) -> None:
        mesh, metric = small_disk
        u = rng.standard_normal(mesh.vertex_count)
        base = u @ (assemble(mesh, metric).stiffness @ u)
        psi = rng.uniform(-1.0, 1.0, mesh.face_count)
        conformal = metric.with_triangle_log_factor(psi)
        assert u @ (assemble(mesh, conformal).stiffness @ u) == pytest.approx(
            base, rel=1e-10
        )
        constant = metric.with_log_factor(mesh, np.full(mesh.vertex_count, 0.7))
        assert u @ (assemble(mesh, constant).stiffness @ u) == pytest.approx(
            base, rel=1e-10
        )

    def test_shifted_pencil(self, unit_square) -> None:
        mesh, metric = unit_square
        ops = assemble(mesh, metric)
        assert (shifted_pencil(ops, 0.0) != ops.stiffness).nnz == 0
        shifted = shifted_pencil(ops, -2.0).toarray()
        np.testing.assert_allclose(
            shifted, ops.stiffness.toarray() + 2.0 * ops.mass.toarray()
        )
        np.linalg.cholesky(shifted)


class TestConvergence:
    def test_neumann_square_second_order(self) -> None:
        errors = []
        for n in (8, 16):
            mesh, metric = build_square_mesh(n)
            ops = assemble(mesh, metric)
            values = eigh(
                ops.stiffness.toarray(), ops.mass.toarray(), eigvals_only=True
            )
            errors.append(abs(values[1] - math.pi**2))
        assert errors[1] < 0.02 * math.pi**2
        assert math.log2(errors[0] / errors[1]) > 1.7


class TestDumpMatrix:
    def test_sorted_triplets(self, tmp_path: Path, single_triangle) -> None:
        mesh, metric = single_triangle
        path = tmp_path / "S.txt"
        dump_matrix(assemble(mesh, metric).stiffness, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 9
        assert lines[0].startswith("0 0 ")
        assert lines[-1].startswith("2 2 ")
        assert float(lines[1].split()[2]) == pytest.approx(-1.0 / (2.0 * math.sqrt(3.0)))
