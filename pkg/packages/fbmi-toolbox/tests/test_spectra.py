"""Tests for the Robin, frequency-Steklov and Dirichlet solvers."""

from __future__ import annotations

import math

import numpy as np
import pytest
from fbmi.config import EigenProblemSpec
from fbmi.errors import (
    CountTooLargeError,
    InadmissibleMetricError,
    NoInteriorVerticesError,
)
from fbmi.spectra import (
    admissibility_check,
    cluster_multiplicities,
    covering_spectrum,
    dirichlet_spectrum,
    freq_steklov_spectrum,
    robin_spectrum,
    solve,
)
from intrinsic_fem.assembly import assemble
from intrinsic_fem.generators import (
    build_cap_mesh,
    build_disk_mesh,
    build_hyperbolic_ball_mesh,
    build_square_mesh,
)
from intrinsic_fem.mesh import DiscreteMetric, SimplicialMesh, perturb_lengths
from scipy.linalg import eigh

# First zero of the Bessel function J₀.
J01 = 2.404825557695773


def _dense_schur(ops, c: float) -> tuple[np.ndarray, np.ndarray]:
    P = (ops.stiffness - c * ops.mass).toarray()
    B = ops.boundary_mass.toarray()
    b, ii = ops.boundary_vertices, ops.interior_vertices
    schur = P[np.ix_(b, b)] - P[np.ix_(b, ii)] @ np.linalg.solve(P[np.ix_(ii, ii)], P[np.ix_(ii, b)])
    return 0.5 * (schur + schur.T), B[np.ix_(b, b)]


def _scaled_to_dirichlet(mesh: SimplicialMesh, metric: DiscreteMetric, c: float) -> DiscreteMetric:
    """The multiple of ``metric`` whose lowest discrete Dirichlet eigenvalue is ``c``."""
    lowest = dirichlet_spectrum(assemble(mesh, metric), 1).eigenvalues[0]
    return metric.scaled(mesh, math.sqrt(lowest / c))


SMALL_MESHES = {
    "square-3": lambda: build_square_mesh(3),
    "square-5": lambda: build_square_mesh(5),
    "disk-3": lambda: build_disk_mesh(1.0, 3),
    "cap-3": lambda: build_cap_mesh(math.pi / 3, 3),
    "ball-2": lambda: build_hyperbolic_ball_mesh(1.0, 2),
}


def _small_ops(name: str, seed: int = 0):
    mesh, metric = SMALL_MESHES[name]()
    assert mesh.vertex_count <= 40
    return assemble(mesh, perturb_lengths(mesh, metric, 0.05, seed=seed))


class TestClusters:
    def test_groups_close_values(self) -> None:
        assert cluster_multiplicities([0.0, 1.0, 1.0 + 1e-9, 2.0]) == ((0,), (1, 2), (3,))

    def test_gap_is_relative(self) -> None:
        assert cluster_multiplicities([1e6, 1e6 + 1.0]) == ((0, 1),)
        assert cluster_multiplicities([0.0, 1e-3]) == ((0,), (1,))

    def test_empty(self) -> None:
        assert cluster_multiplicities([]) == ()


class TestRobin:
    def test_neumann_ground_is_constant(self, square) -> None:
        mesh, metric = square
        ops = assemble(mesh, metric)
        spectrum = robin_spectrum(ops, 0.0, 4)
        assert spectrum.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
        u0 = spectrum.eigenvectors[:, 0]
        np.testing.assert_allclose(u0, u0.mean(), atol=1e-8)

    def test_mass_normalized(self, perturbed_disk) -> None:
        mesh, metric = perturbed_disk
        ops = assemble(mesh, metric)
        spectrum = robin_spectrum(ops, 0.5, 5)
        V = spectrum.eigenvectors
        np.testing.assert_allclose(V.T @ (ops.mass @ V), np.eye(5), atol=1e-8)
        assert spectrum.normalization == "mass"
        assert (spectrum.residuals <= 1e-8).all()

    @pytest.mark.parametrize("sigma", [-1.0, 0.5, 2.0])
    def test_matches_dense_oracle(self, square, sigma: float) -> None:
        mesh, metric = square
        ops = assemble(mesh, metric)
        spectrum = robin_spectrum(ops, sigma, 6)
        dense = eigh(
            (ops.stiffness - sigma * ops.boundary_mass).toarray(),
            ops.mass.toarray(),
            eigvals_only=True,
        )[:6]
        np.testing.assert_allclose(spectrum.eigenvalues, dense, rtol=1e-8, atol=1e-10)

    def test_ground_sign_follows_sigma(self, disk) -> None:
        mesh, metric = disk
        ops = assemble(mesh, metric)
        assert robin_spectrum(ops, 0.5, 1).eigenvalues[0] < 0.0
        assert robin_spectrum(ops, -0.5, 1).eigenvalues[0] > 0.0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_strictly_decreasing_in_sigma(self, disk, seed: int) -> None:
        mesh, metric = disk
        ops = assemble(mesh, perturb_lengths(mesh, metric, 0.1, seed=seed))
        sigmas = [-1.0, -0.5, 0.0, 0.5, 1.0]
        table = np.array([robin_spectrum(ops, s, 3).eigenvalues for s in sigmas])
        assert (np.diff(table, axis=0) < 0.0).all()

    @pytest.mark.parametrize("name", sorted(SMALL_MESHES))
    @pytest.mark.parametrize("sigma", [-1.0, 0.7])
    def test_small_meshes_match_dense_pencil(self, name: str, sigma: float) -> None:
        ops = _small_ops(name)
        spectrum = robin_spectrum(ops, sigma, 5)
        dense = eigh(
            (ops.stiffness - sigma * ops.boundary_mass).toarray(),
            ops.mass.toarray(),
            eigvals_only=True,
        )[:5]
        np.testing.assert_allclose(spectrum.eigenvalues, dense, rtol=1e-8, atol=1e-10)

    @pytest.mark.parametrize(("name", "seed"), zip(sorted(SMALL_MESHES), range(5), strict=True))
    def test_small_meshes_decrease_in_sigma(self, name: str, seed: int) -> None:
        ops = _small_ops(name, seed)
        sigmas = [-1.0, -0.5, 0.0, 0.5, 1.0]
        table = np.array([robin_spectrum(ops, s, 3).eigenvalues for s in sigmas])
        assert (np.diff(table, axis=0) < 0.0).all()

    def test_count_too_large(self, one_interior_square) -> None:
        mesh, metric = one_interior_square
        with pytest.raises(CountTooLargeError) as ei:
            robin_spectrum(assemble(mesh, metric), 0.0, mesh.vertex_count + 1)
        assert ei.value.available == mesh.vertex_count


class TestSteklov:
    def test_zero_frequency_ground(self, square) -> None:
        mesh, metric = square
        ops = assemble(mesh, metric)
        spectrum = freq_steklov_spectrum(ops, 0.0, 3)
        assert spectrum.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
        V = spectrum.eigenvectors
        np.testing.assert_allclose(V.T @ (ops.boundary_mass @ V), np.eye(3), atol=1e-8)
        assert spectrum.normalization == "boundary_mass"

    @pytest.mark.parametrize("c", [-2.0, 2.0])
    def test_matches_dense_schur(self, perturbed_square, c: float) -> None:
        mesh, metric = perturbed_square
        ops = assemble(mesh, metric)
        spectrum = freq_steklov_spectrum(ops, c, 5)
        schur, B_bb = _dense_schur(ops, c)
        dense = eigh(schur, B_bb, eigvals_only=True)[:5]
        np.testing.assert_allclose(spectrum.eigenvalues, dense, rtol=1e-8, atol=1e-10)

    @pytest.mark.parametrize("name", sorted(SMALL_MESHES))
    @pytest.mark.parametrize("c", [-2.0, 0.0, 2.0])
    def test_small_meshes_match_dense_schur(self, name: str, c: float) -> None:
        ops = _small_ops(name)
        spectrum = freq_steklov_spectrum(ops, c, 4)
        schur, B_bb = _dense_schur(ops, c)
        dense = eigh(schur, B_bb, eigvals_only=True)[:4]
        np.testing.assert_allclose(spectrum.eigenvalues, dense, rtol=1e-8, atol=1e-10)

    @pytest.mark.parametrize("name", sorted(SMALL_MESHES))
    def test_implicit_schur_matches_dense(
        self, name: str, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        ops = _small_ops(name)
        c = 2.0
        dense = freq_steklov_spectrum(ops, c, 3)
        monkeypatch.setattr("fbmi.spectra.DENSE_SCHUR_LIMIT", 0)
        implicit = freq_steklov_spectrum(ops, c, 3)
        np.testing.assert_allclose(implicit.eigenvalues, dense.eigenvalues, rtol=1e-7, atol=1e-9)
        P = (ops.stiffness - c * ops.mass).toarray()
        B = ops.boundary_mass.toarray()
        for theta, u in zip(implicit.eigenvalues, implicit.eigenvectors.T, strict=True):
            np.testing.assert_allclose(P @ u, theta * (B @ u), atol=1e-7)

    def test_interior_extension_solves_pencil(self, perturbed_disk) -> None:
        mesh, metric = perturbed_disk
        ops = assemble(mesh, metric)
        spectrum = freq_steklov_spectrum(ops, 2.0, 3)
        for j, theta in enumerate(spectrum.eigenvalues):
            u = spectrum.eigenvectors[:, j]
            lhs = (ops.stiffness - 2.0 * ops.mass) @ u
            np.testing.assert_allclose(lhs, theta * (ops.boundary_mass @ u), atol=1e-8)

    def test_cap_reference_values(self) -> None:
        r = math.pi / 3
        mesh, metric = build_cap_mesh(r, 8)
        spectrum = freq_steklov_spectrum(assemble(mesh, metric), 2.0, 4)
        assert spectrum.eigenvalues[0] == pytest.approx(-math.tan(r), rel=3e-2)
        assert spectrum.eigenvalues[1] == pytest.approx(1.0 / math.tan(r), rel=3e-2)
        assert spectrum.cluster_of(1) == (1, 2)

    def test_hyperbolic_ball_reference_values(self, hyperbolic_ball) -> None:
        mesh, metric = hyperbolic_ball
        spectrum = freq_steklov_spectrum(assemble(mesh, metric), -2.0, 4)
        assert spectrum.eigenvalues[0] == pytest.approx(math.tanh(1.0), rel=3e-2)
        assert spectrum.eigenvalues[1] == pytest.approx(1.0 / math.tanh(1.0), rel=3e-2)
        assert spectrum.cluster_of(1) == (1, 2)

    def test_inadmissible_frequency(self, one_interior_square) -> None:
        mesh, metric = one_interior_square
        scaled = _scaled_to_dirichlet(mesh, metric, 2.0)
        with pytest.raises(InadmissibleMetricError) as ei:
            freq_steklov_spectrum(assemble(mesh, scaled), 2.0, 2)
        assert ei.value.nearest == pytest.approx(2.0)

    def test_count_limited_by_boundary(self, square) -> None:
        mesh, metric = square
        with pytest.raises(CountTooLargeError):
            freq_steklov_spectrum(assemble(mesh, metric), 0.0, mesh.boundary_vertices.size + 1)


class TestDirichlet:
    def test_square_upper_bound(self) -> None:
        mesh, metric = build_square_mesh(12)
        spectrum = dirichlet_spectrum(assemble(mesh, metric), 2)
        exact = 2.0 * math.pi**2
        assert spectrum.eigenvalues[0] > exact
        assert spectrum.eigenvalues[0] == pytest.approx(exact, rel=5e-2)
        np.testing.assert_array_equal(spectrum.eigenvectors[mesh.boundary_vertices], 0.0)

    def test_disk_bessel_root(self) -> None:
        mesh, metric = build_disk_mesh(1.0, 8)
        spectrum = dirichlet_spectrum(assemble(mesh, metric), 1)
        assert spectrum.eigenvalues[0] == pytest.approx(J01**2, rel=3e-2)

    def test_no_interior_vertices(self) -> None:
        mesh = SimplicialMesh.from_triangles([(0, 1, 2)])
        ops = assemble(mesh, DiscreteMetric.from_lengths(np.ones(3)))
        with pytest.raises(NoInteriorVerticesError):
            dirichlet_spectrum(ops, 1)


class TestAdmissibility:
    @pytest.mark.parametrize("radius", [1.0, 2.5])
    def test_disks_away_from_the_spectrum(self, radius: float) -> None:
        mesh, metric = build_disk_mesh(radius, 4)
        check = admissibility_check(assemble(mesh, metric), 2.0)
        assert check.admissible
        assert check.margin > 1e-3

    def test_disk_at_critical_radius(self, disk) -> None:
        mesh, metric = disk
        scaled = _scaled_to_dirichlet(mesh, metric, 2.0)
        check = admissibility_check(assemble(mesh, scaled), 2.0)
        assert not check.admissible

    def test_non_positive_frequency_always_admissible(self, one_interior_square) -> None:
        mesh, metric = one_interior_square
        scaled = _scaled_to_dirichlet(mesh, metric, 2.0)
        check = admissibility_check(assemble(mesh, scaled), -2.0)
        assert check.admissible
        assert check.below == 0

    def test_counts_eigenvalues_below(self, one_interior_square) -> None:
        mesh, metric = one_interior_square
        scaled = _scaled_to_dirichlet(mesh, metric, 1.0)
        check = admissibility_check(assemble(mesh, scaled), 2.0)
        assert check.admissible
        assert check.below == 1
        assert check.nearest == pytest.approx(1.0)


class TestDispatch:
    def test_solve_matches_direct_calls(self, perturbed_disk) -> None:
        mesh, metric = perturbed_disk
        ops = assemble(mesh, metric)
        robin = solve(ops, EigenProblemSpec(kind="robin", param=0.3, count=3))
        np.testing.assert_allclose(robin.eigenvalues, robin_spectrum(ops, 0.3, 3).eigenvalues)
        dirichlet = solve(ops, EigenProblemSpec(kind="dirichlet", count=2))
        assert dirichlet.kind == "dirichlet"
        assert dirichlet.param == 0.0

    def test_covering_spectrum_completes_cluster(self, cap) -> None:
        mesh, metric = cap
        ops = assemble(mesh, metric)
        calls: list[int] = []

        def solve_count(n: int):
            calls.append(n)
            return freq_steklov_spectrum(ops, 2.0, n)

        spectrum = covering_spectrum(solve_count, 1, int(ops.boundary_vertices.size))
        assert spectrum.cluster_of(1) == (1, 2)
        assert spectrum.count > 3
        assert calls

    def test_payload(self, square) -> None:
        mesh, metric = square
        payload = robin_spectrum(assemble(mesh, metric), 0.0, 2).to_payload()
        assert payload["problem"] == "robin"
        assert payload["normalization"] == "mass"
        assert len(payload["eigenvalues"]) == 2
