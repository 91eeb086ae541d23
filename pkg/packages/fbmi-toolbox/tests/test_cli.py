"""End-to-end tests of the fbmi command line."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest
from click.testing import CliRunner
from fbmi.cli import main
from intrinsic_fem import load_mesh, load_metric
from intrinsic_fem.io import save_lengths
from intrinsic_fem.mesh import perturb_lengths


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _build(runner: CliRunner, directory: Path, *args: str) -> Path:
    mesh_path = directory / "mesh.off"
    result = runner.invoke(
        main, ["-o", str(directory), "build-mesh", *args, "--output", str(mesh_path)]
    )
    assert result.exit_code == 0, result.output
    return mesh_path


def _read(path: Path) -> dict:
    return json.loads(path.read_text())


class TestMeshCommands:
    def test_build_then_inspect(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "disk", "--refinement", "3")
        assert mesh_path.with_suffix(".lengths").exists()
        result = runner.invoke(
            main,
            [
                "-o",
                str(tmp_path),
                "mesh-info",
                str(mesh_path),
                "--lengths",
                str(mesh_path.with_suffix(".lengths")),
            ],
        )
        assert result.exit_code == 0, result.output
        report = _read(tmp_path / "mesh-info.json")
        assert report["kind"] == "mesh-info"
        assert report["genus"] == 0
        assert report["boundary_components"] == 1
        assert report["metric_valid"] is True

        manifest = _read(tmp_path / "manifest.json")
        assert manifest["command"] == "mesh-info"
        assert str(mesh_path) in manifest["inputs"]


class TestSpectrum:
    def test_report_and_csv(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "square", "--refinement", "4")
        result = runner.invoke(
            main,
            [
                "-o",
                str(tmp_path),
                "--csv",
                "spectrum",
                str(mesh_path),
                "--kind",
                "robin",
                "--param",
                "0",
                "--count",
                "3",
            ],
        )
        assert result.exit_code == 0, result.output
        report = _read(tmp_path / "spectrum.json")
        assert report["problem"] == "robin"
        assert report["eigenvalues"][0] == pytest.approx(0.0, abs=1e-9)
        lines = (tmp_path / "spectrum.csv").read_text().splitlines()
        assert lines[0] == "index,eigenvalue,cluster,residual"
        assert len(lines) == 4

    def test_count_too_large_is_a_clean_error(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "square", "--refinement", "2")
        result = runner.invoke(
            main,
            ["-o", str(tmp_path), "spectrum", str(mesh_path), "--kind", "robin", "--count", "100"],
        )
        assert result.exit_code == 1
        assert "Requested 100 eigenpairs" in result.output


class TestFunctional:
    def test_xi_plus_is_the_smaller_branch(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "square", "--refinement", "4")
        values = []
        for run in ("first", "second"):
            out = tmp_path / run
            result = runner.invoke(
                main,
                [
                    "-o",
                    str(out),
                    "functional",
                    str(mesh_path),
                    "--family",
                    "xi-plus",
                    "--r",
                    "0.7853981634",
                ],
            )
            assert result.exit_code == 0, result.output
            report = _read(out / "functional.json")
            branches = [term["value"] for term in report["eigenvalues"].values()]
            assert report["area"] == pytest.approx(1.0, rel=1e-12)
            assert report["value"] == pytest.approx(min(branches) * report["area"])
            values.append(report["value"])
        assert values[0] == values[1]

    def test_invalid_radius(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "square", "--refinement", "2")
        result = runner.invoke(
            main,
            ["-o", str(tmp_path), "functional", str(mesh_path), "--family", "theta", "--r", "2"],
        )
        assert result.exit_code == 1
        assert "(0, π/2)" in result.output


class TestReferenceCommands:
    def test_cap_reference(self, runner: CliRunner, tmp_path: Path) -> None:
        result = runner.invoke(
            main, ["-o", str(tmp_path), "--csv", "cap-reference", "--r", str(math.pi / 3)]
        )
        assert result.exit_code == 0, result.output
        report = _read(tmp_path / "cap-reference.json")
        assert report["theta0"] == pytest.approx(-math.sqrt(3.0))
        assert report["xi_value"] == pytest.approx(2.0 * math.pi)
        assert (tmp_path / "cap-reference.csv").exists()

    def test_upper_bound(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "disk", "--refinement", "3")
        result = runner.invoke(
            main, ["-o", str(tmp_path), "upper-bound", str(mesh_path), "--r", "1.0"]
        )
        assert result.exit_code == 0, result.output
        report = _read(tmp_path / "upper-bound.json")
        assert report["bound"] == pytest.approx(4.0 * math.pi * (1.0 - math.cos(1.0)))


class TestErrors:
    def test_certify_without_candidate(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "square", "--refinement", "4")
        mesh = load_mesh(mesh_path)
        metric = load_metric(mesh, mesh_path.with_suffix(".lengths"), None)
        lengths = tmp_path / "perturbed.lengths"
        save_lengths(lengths, mesh, perturb_lengths(mesh, metric, 0.1, seed=11))
        result = runner.invoke(
            main,
            [
                "-o",
                str(tmp_path),
                "certify",
                str(mesh_path),
                "--lengths",
                str(lengths),
                "--r",
                str(math.pi / 3),
            ],
        )
        assert result.exit_code == 1
        assert "No candidate immersion" in result.output

    def test_grad_check_needs_one_target(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "square", "--refinement", "2")
        result = runner.invoke(main, ["-o", str(tmp_path), "grad-check", str(mesh_path)])
        assert result.exit_code == 2
        assert "exactly one" in result.output

    def test_epsilons_must_decrease(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "disk", "--refinement", "3")
        result = runner.invoke(
            main,
            [
                "-o",
                str(tmp_path),
                "degenerate",
                str(mesh_path),
                "--r",
                "1.0",
                "--epsilons",
                "0.1,0.3",
            ],
        )
        assert result.exit_code == 1
        assert "strictly decreasing" in result.output

    def test_epsilons_must_be_numbers(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "disk", "--refinement", "3")
        result = runner.invoke(
            main,
            ["-o", str(tmp_path), "degenerate", str(mesh_path), "--r", "1.0", "--epsilons", "a,b"],
        )
        assert result.exit_code == 2


class TestGradCheck:
    def test_eigenvalue(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(runner, tmp_path, "--kind", "disk", "--refinement", "3")
        result = runner.invoke(
            main,
            [
                "-o",
                str(tmp_path),
                "grad-check",
                str(mesh_path),
                "--kind",
                "robin",
                "--param",
                "0.5",
                "--trials",
                "2",
            ],
        )
        assert result.exit_code == 0, result.output
        report = _read(tmp_path / "grad-check.json")
        assert report["trials"] == 2
        assert report["dofs"] == "edge_lengths"


class TestOptimize:
    def test_outputs(self, runner: CliRunner, tmp_path: Path) -> None:
        mesh_path = _build(
            runner, tmp_path, "--kind", "cap", "--radius", "1.0", "--refinement", "3"
        )
        out = tmp_path / "run"
        result = runner.invoke(
            main,
            [
                "-o",
                str(out),
                "--csv",
                "optimize",
                str(mesh_path),
                "--lengths",
                str(mesh_path.with_suffix(".lengths")),
                "--r",
                "1.0",
                "--max-iter",
                "1",
            ],
        )
        assert result.exit_code == 0, result.output
        for name in (
            "trace.jsonl",
            "checkpoint.json",
            "optimized.lengths",
            "optimize.json",
            "trace.csv",
            "manifest.json",
        ):
            assert (out / name).exists(), name
        report = _read(out / "optimize.json")
        assert report["config"]["max_iterations"] == 1
        assert report["iterations"] == len((out / "trace.jsonl").read_text().splitlines())
