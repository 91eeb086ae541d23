"""Command-line interface for fbmi."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from functools import wraps
from pathlib import Path
from typing import Any, ParamSpec, TypeVar

import click
from intrinsic_fem import load_mesh, load_metric, measures, topology, validate_metric
from intrinsic_fem.assembly import assemble, dump_matrix
from intrinsic_fem.errors import IntrinsicFemError
from intrinsic_fem.generators import build_reference_mesh
from intrinsic_fem.io import save_conformal, save_lengths, save_mesh
from pydantic import ValidationError
from rich import box
from rich.console import Console
from rich.table import Table

from .certify import cap_reference, check_upper_bound, degeneration_experiment, fbmi_certificate
from .config import EigenProblemSpec, FbmiSettings, FunctionalSpec, OptimizerConfig, friendly_error
from .constants import DEFAULT_EPSILONS, DEFAULT_FD_STEP
from .errors import FbmiError
from .functionals import eval_functional
from .gradcheck import check_eigenvalue_gradient, check_functional_gradient
from .optimize import optimize as run_optimizer
from .reports import RunManifest, write_csv, write_report, write_vector
from .spectra import solve

logger = logging.getLogger(__name__)
console = Console()

P = ParamSpec("P")
R = TypeVar("R")

_MASS_MODE_OPTION = click.option(
    "--mass-mode",
    type=click.Choice(["consistent", "lumped"]),
    default="consistent",
    show_default=True,
    help="Consistent or row-lumped P1 mass matrices.",
)
_LENGTHS_OPTION = click.option(
    "--lengths",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Edge-length sidecar ('i j length' per line); default: lengths from coordinates.",
)
_CONFORMAL_OPTION = click.option(
    "--conformal",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Per-vertex conformal log-factor file ('i phi' per line).",
)
_MESH_ARGUMENT = click.argument(
    "mesh_path", metavar="MESH", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
_FAMILIES = ["theta", "omega", "xi-plus", "xi-minus", "general"]


def configure_logging(*, debug: bool) -> None:
    """Configure logging based on debug flag."""
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@dataclass
class _Run:
    output_dir: Path
    csv: bool
    threads: int


@contextmanager
def _domain_errors() -> Iterator[None]:
    try:
        yield
    except ValidationError as e:
        raise click.ClickException(friendly_error(e)) from e
    except (IntrinsicFemError, FbmiError, ValueError) as e:
        raise click.ClickException(str(e)) from e


def _command(name: str) -> Callable[[Callable[P, R]], Callable[P, R]]:
    """Run a command body with domain errors mapped to exit code 1 and a manifest."""

    def decorate(fn: Callable[P, R]) -> Callable[P, R]:
        @wraps(fn)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            ctx = click.get_current_context()
            run: _Run = ctx.obj
            manifest = RunManifest(
                command=name,
                parameters={k: str(v) if isinstance(v, Path) else v for k, v in ctx.params.items()},
            )
            manifest.parameters["threads"] = run.threads
            ctx.meta["manifest"] = manifest
            with _domain_errors():
                result = fn(*args, **kwargs)
            path = manifest.write(run.output_dir)
            logger.debug("Manifest written to %s", path)
            return result

        return wrapper

    return decorate


def _manifest() -> RunManifest:
    manifest: RunManifest = click.get_current_context().meta["manifest"]
    return manifest


def _run() -> _Run:
    run: _Run = click.get_current_context().obj
    return run


def _load(mesh_path: Path, lengths: Path | None, conformal: Path | None) -> tuple[Any, Any]:
    manifest = _manifest()
    for path in (mesh_path, lengths, conformal):
        if path is not None:
            manifest.add_input(path)
    mesh = load_mesh(mesh_path)
    return mesh, load_metric(mesh, lengths, conformal)


def _report(filename: str, kind: str, payload: dict[str, Any]) -> Path:
    path = write_report(_run().output_dir / filename, kind, payload)
    return _manifest().add_output(path)


def _table_csv(filename: str, rows: list[dict[str, Any]]) -> None:
    if _run().csv and rows:
        _manifest().add_output(write_csv(_run().output_dir / filename, rows))


def _key_value_table(title: str, rows: dict[str, Any]) -> Table:
    table = Table(title=title, box=box.ROUNDED)
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="green")
    for key, value in rows.items():
        table.add_row(key, f"{value:.12g}" if isinstance(value, float) else str(value))
    return table


@click.group()
@click.option("--debug", is_flag=True, help="Enable debug logging.")
@click.option(
    "--output-dir",
    "-o",
    default=".",
    show_default=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory for reports and the run manifest.",
)
@click.option("--csv", "csv_output", is_flag=True, help="Also write tabular reports as CSV.")
@click.pass_context
def main(ctx: click.Context, debug: bool, output_dir: Path, csv_output: bool) -> None:
    """fbmi: Robin and Steklov spectra, extremal metrics and FBMI certificates."""
    configure_logging(debug=debug)
    with _domain_errors():
        settings = FbmiSettings()
    output_dir.mkdir(parents=True, exist_ok=True)
    ctx.obj = _Run(output_dir=output_dir, csv=csv_output, threads=settings.threads)


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------


@main.command("mesh-info")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@_command("mesh-info")
def mesh_info(mesh_path: Path, lengths: Path | None, conformal: Path | None) -> None:
    """Topology, measures and metric validity of a mesh."""
    mesh, metric = _load(mesh_path, lengths, conformal)
    diagnostics = validate_metric(mesh, metric)
    report = topology(mesh)
    payload: dict[str, Any] = {
        "vertices": mesh.vertex_count,
        "edges": mesh.edge_count,
        "triangles": mesh.face_count,
        "genus": report.genus,
        "boundary_components": report.boundary_components,
        "euler_characteristic": report.euler_characteristic,
        "orientable": report.orientable,
        "metric_valid": diagnostics.ok,
        "metric_diagnostics": diagnostics.summary(),
    }
    if diagnostics.ok:
        m = measures(mesh, metric)
        payload["area"] = m.area
        payload["boundary_length"] = m.boundary_length
    _report("mesh-info.json", "mesh-info", payload)
    console.print(_key_value_table(f"Mesh {mesh_path.name}", payload))


@main.command("build-mesh")
@click.option(
    "--kind",
    type=click.Choice(["cap", "hyperbolic-ball", "disk", "square"]),
    required=True,
)
@click.option("--radius", type=float, default=1.0, show_default=True, help="Geodesic radius (radians on the sphere).")
@click.option("--refinement", type=click.IntRange(min=1), default=8, show_default=True)
@click.option(
    "--output",
    "output",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="OFF file to write; the lengths sidecar goes next to it.",
)
@_command("build-mesh")
def build_mesh(kind: str, radius: float, refinement: int, output: Path) -> None:
    """Write a reference mesh and its edge-length sidecar."""
    mesh, metric = build_reference_mesh(kind, radius, refinement)
    save_mesh(output, mesh)
    sidecar = output.with_suffix(".lengths")
    save_lengths(sidecar, mesh, metric)
    _manifest().add_output(output)
    _manifest().add_output(sidecar)
    console.print(
        f"[green]{kind}: {mesh.vertex_count} vertices, {mesh.face_count} triangles "
        f"-> {output}, {sidecar}[/green]"
    )


# ---------------------------------------------------------------------------
# spectra and functionals
# ---------------------------------------------------------------------------


@main.command("spectrum")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@click.option(
    "--kind",
    type=click.Choice(["robin", "freq-steklov", "dirichlet"]),
    required=True,
)
@click.option("--param", type=float, default=0.0, show_default=True, help="σ for robin, c for freq-steklov.")
@click.option("--count", type=int, default=6, show_default=True)
@click.option(
    "--dump-matrices",
    type=click.Path(file_okay=False, path_type=Path),
    help="Write S, M and B in coordinate text form to this directory.",
)
@click.option("--eigenvectors", is_flag=True, help="Write one per-vertex file per eigenvector.")
@_MASS_MODE_OPTION
@_command("spectrum")
def spectrum(
    mesh_path: Path,
    lengths: Path | None,
    conformal: Path | None,
    kind: str,
    param: float,
    count: int,
    dump_matrices: Path | None,
    eigenvectors: bool,
    mass_mode: str,
) -> None:
    """Lowest eigenpairs of a Robin, frequency-Steklov or Dirichlet problem."""
    problem = EigenProblemSpec(kind=kind.replace("-", "_"), param=param, count=count)  # type: ignore[arg-type]
    mesh, metric = _load(mesh_path, lengths, conformal)
    ops = assemble(mesh, metric, mass_mode=mass_mode)  # type: ignore[arg-type]
    with console.status(f"[bold green]Solving {kind} problem...[/bold green]"):
        result = solve(ops, problem)
    _report("spectrum.json", "spectrum", result.to_payload())

    if dump_matrices is not None:
        dump_matrices.mkdir(parents=True, exist_ok=True)
        for name, matrix in (
            ("stiffness", ops.stiffness),
            ("mass", ops.mass),
            ("boundary_mass", ops.boundary_mass),
        ):
            path = dump_matrices / f"{name}.txt"
            dump_matrix(matrix, path)
            _manifest().add_output(path)
    if eigenvectors:
        for j in range(result.count):
            path = _run().output_dir / f"eigenvector-{j}.txt"
            write_vector(path, result.eigenvectors[:, j], header=f"{kind} eigenvalue {result.eigenvalues[j]!r}")
            _manifest().add_output(path)

    rows = [
        {
            "index": j,
            "eigenvalue": float(result.eigenvalues[j]),
            "cluster": next(n for n, c in enumerate(result.clusters) if j in c),
            "residual": float(result.residuals[j]),
        }
        for j in range(result.count)
    ]
    _table_csv("spectrum.csv", rows)
    table = Table(title=f"{kind} spectrum (param {param:g})", box=box.ROUNDED)
    for column in ("Index", "Eigenvalue", "Cluster", "Residual"):
        table.add_column(column)
    for row in rows:
        table.add_row(
            str(row["index"]),
            f"{row['eigenvalue']:.12g}",
            str(row["cluster"]),
            f"{row['residual']:.2e}",
        )
    console.print(table)


def _functional_options(fn: Callable[P, R]) -> Callable[P, R]:
    options = [
        click.option("--family", type=click.Choice(_FAMILIES), required=True),
        click.option("--r", "r", type=float, required=True, help="Radius parameter (radians)."),
        click.option("--i", "i", type=click.IntRange(min=1), default=1, show_default=True),
        click.option("--k", "k", type=click.IntRange(min=2), default=2, show_default=True),
        click.option("--alpha1", type=float, default=1.0, show_default=True),
        click.option("--alpha2", type=float, default=2.0, show_default=True),
        click.option("--beta1", type=float, default=1.0, show_default=True),
        click.option("--beta2", type=float, default=1.0, show_default=True),
        click.option(
            "--geometry",
            type=click.Choice(["spherical", "hyperbolic"]),
            default="spherical",
            show_default=True,
            help="Weights of the general family.",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _functional_spec(params: dict[str, Any]) -> FunctionalSpec:
    return FunctionalSpec(
        family=params["family"].replace("-", "_"),
        r=params["r"],
        i=params["i"],
        k=params["k"],
        alpha1=params["alpha1"],
        alpha2=params["alpha2"],
        beta1=params["beta1"],
        beta2=params["beta2"],
        geometry=params["geometry"],
    )


@main.command("functional")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@_functional_options
@_MASS_MODE_OPTION
@_command("functional")
def functional(
    mesh_path: Path,
    lengths: Path | None,
    conformal: Path | None,
    mass_mode: str,
    **params: Any,
) -> None:
    """Evaluate Θ, Ω, Ξ⁺, Ξ⁻ or the general family."""
    spec = _functional_spec(params)
    mesh, metric = _load(mesh_path, lengths, conformal)
    with console.status("[bold green]Evaluating functional...[/bold green]"):
        report = eval_functional(spec, mesh, metric, mass_mode=mass_mode)  # type: ignore[arg-type]
    _report("functional.json", "functional", report.to_payload())
    rows = [
        {"name": name, "problem": t.problem, "param": t.param, "index": t.index, "value": t.value}
        for name, t in report.eigenvalues.items()
    ]
    _table_csv("functional.csv", rows)
    summary = {
        "value": report.value,
        "area": report.area,
        "boundary_length": report.boundary_length,
        **{name: t.value for name, t in report.eigenvalues.items()},
    }
    if report.active_branch is not None:
        summary["active_branch"] = report.active_branch
        summary["tied"] = report.tied
    console.print(_key_value_table(f"{spec.family} (r={spec.r:g}, i={spec.i})", summary))


@main.command("grad-check")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@click.option("--family", type=click.Choice(_FAMILIES), help="Check a functional gradient.")
@click.option("--kind", type=click.Choice(["robin", "freq-steklov"]), help="Check an eigenvalue gradient.")
@click.option("--param", type=float, default=0.0, show_default=True)
@click.option("--index", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--r", "r", type=float, default=0.8, show_default=True)
@click.option("--i", "i", type=click.IntRange(min=1), default=1, show_default=True)
@click.option(
    "--dofs",
    type=click.Choice(["conformal", "edges"]),
    default="edges",
    show_default=True,
)
@click.option("--fd-step", type=float, default=DEFAULT_FD_STEP, show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_MASS_MODE_OPTION
@_command("grad-check")
def grad_check(
    mesh_path: Path,
    lengths: Path | None,
    conformal: Path | None,
    family: str | None,
    kind: str | None,
    param: float,
    index: int,
    r: float,
    i: int,
    dofs: str,
    fd_step: float,
    trials: int,
    seed: int,
    mass_mode: str,
) -> None:
    """Compare analytic gradients with central finite differences."""
    if (family is None) == (kind is None):
        msg = "Pass exactly one of --family or --kind"
        raise click.UsageError(msg)
    mesh, metric = _load(mesh_path, lengths, conformal)
    options: dict[str, Any] = {
        "dofs": "conformal" if dofs == "conformal" else "edge_lengths",
        "fd_step": fd_step,
        "trials": trials,
        "seed": seed,
        "threads": _run().threads,
        "mass_mode": mass_mode,
    }
    with console.status("[bold green]Running finite differences...[/bold green]"):
        if family is not None:
            spec = FunctionalSpec(family=family.replace("-", "_"), r=r, i=i)  # type: ignore[arg-type]
            check = check_functional_gradient(mesh, metric, spec, **options)
        else:
            assert kind is not None
            check = check_eigenvalue_gradient(
                mesh, metric, kind.replace("-", "_"), param, index, **options
            )
    _report("grad-check.json", "grad-check", check.to_payload())
    _table_csv(
        "grad-check.csv",
        [
            {"trial": t, "analytic": float(a), "finite_difference": float(f), "error": float(e)}
            for t, (a, f, e) in enumerate(zip(check.analytic, check.finite, check.errors, strict=True))
        ],
    )
    console.print(
        _key_value_table(
            check.label,
            {"trials": trials, "fd_step": fd_step, "max_relative_error": check.max_error},
        )
    )


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------


@main.command("optimize")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@click.option(
    "--objective",
    type=click.Choice(["xi-plus", "theta-criticality"]),
    default="xi-plus",
    show_default=True,
)
@click.option("--r", "r", type=float, required=True)
@click.option("--i", "i", type=click.IntRange(min=1), default=1, show_default=True)
@click.option(
    "--dofs",
    type=click.Choice(["conformal", "edges"]),
    default="conformal",
    show_default=True,
)
@click.option("--max-iter", type=click.IntRange(min=0), default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--penalty", type=float, default=0.0, show_default=True, help="Branch-matching weight μ.")
@click.option("--initial-step", type=float, default=0.05, show_default=True)
@click.option("--checkpoint-interval", type=click.IntRange(min=1), default=10, show_default=True)
@click.option(
    "--resume",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Checkpoint to continue from (updated in place).",
)
@_MASS_MODE_OPTION
@_command("optimize")
def optimize(
    mesh_path: Path,
    lengths: Path | None,
    conformal: Path | None,
    objective: str,
    r: float,
    i: int,
    dofs: str,
    max_iter: int,
    seed: int,
    penalty: float,
    initial_step: float,
    checkpoint_interval: int,
    resume: Path | None,
    mass_mode: str,
) -> None:
    """Search for an extremal metric; writes the final metric and the trace."""
    config = OptimizerConfig(
        objective=objective.replace("-", "_"),  # type: ignore[arg-type]
        dofs="conformal" if dofs == "conformal" else "edge_lengths",
        r=r,
        i=i,
        max_iterations=max_iter,
        seed=seed,
        penalty=penalty,
        initial_step=initial_step,
        checkpoint_interval=checkpoint_interval,
    )
    mesh, metric = _load(mesh_path, lengths, conformal)
    out = _run().output_dir
    checkpoint = resume or out / "checkpoint.json"
    trace_path = out / "trace.jsonl"
    with console.status(f"[bold green]Optimizing {objective}...[/bold green]"):
        final, trace = run_optimizer(
            mesh,
            metric,
            config,
            trace_path=trace_path,
            checkpoint_path=checkpoint,
            resume=resume is not None,
            mass_mode=mass_mode,
        )
    sidecar = out / "optimized.lengths"
    save_lengths(sidecar, mesh, final)
    manifest = _manifest()
    for path in (trace_path, checkpoint, sidecar):
        manifest.add_output(path)
    if final.log_factor is not None:
        phi = out / "optimized.conformal"
        save_conformal(phi, final.log_factor)
        manifest.add_output(phi)
    _report("optimize.json", "optimize", trace.to_payload())
    _table_csv("trace.csv", [record.to_payload() for record in trace.records])

    last = trace.final
    summary: dict[str, Any] = {
        "termination": trace.termination,
        "iterations": last.iteration,
        "accepted_steps": trace.accepted_steps,
        "objective": last.objective,
        "value": last.value,
        "area": last.area,
    }
    summary.update(last.branches)
    if last.residual is not None:
        summary["residual"] = last.residual
    console.print(_key_value_table(f"optimize {objective}", summary))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


@main.command("certify")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@click.option(
    "--geometry",
    type=click.Choice(["spherical", "hyperbolic"]),
    default="spherical",
    show_default=True,
)
@click.option("--r", "r", type=float, required=True)
@click.option("--i", "i", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--functions", is_flag=True, help="Write v₀ … v_m as per-vertex files.")
@_MASS_MODE_OPTION
@_command("certify")
def certify(
    mesh_path: Path,
    lengths: Path | None,
    conformal: Path | None,
    geometry: str,
    r: float,
    i: int,
    functions: bool,
    mass_mode: str,
) -> None:
    """Reconstruct a candidate free boundary minimal immersion and its residuals."""
    mesh, metric = _load(mesh_path, lengths, conformal)
    with console.status("[bold green]Building certificate...[/bold green]"):
        certificate = fbmi_certificate(
            mesh, metric, r, i, geometry, mass_mode=mass_mode  # type: ignore[arg-type]
        )
    _report("certificate.json", "certificate", certificate.to_payload())
    if functions:
        for j in range(certificate.functions.shape[1]):
            path = _run().output_dir / f"v{j}.txt"
            write_vector(path, certificate.functions[:, j])
            _manifest().add_output(path)
    summary: dict[str, Any] = {
        "ambient_dimension": certificate.ambient_dimension,
        "mixing": ", ".join(f"{t:.6f}" for t in certificate.mixing),
        "sphere_residual": certificate.sphere_residual,
        "metric_residual": certificate.metric_residual,
        "boundary_residual": certificate.boundary_residual,
        **{f"{k} error": v for k, v in certificate.eigenvalue_residuals.items()},
    }
    console.print(_key_value_table(f"{geometry} certificate (r={r:g}, i={i})", summary))


def _parse_epsilons(ctx: click.Context, param: click.Parameter, value: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError as e:
        msg = f"Expected comma-separated numbers, got {value!r}"
        raise click.BadParameter(msg) from e


@main.command("degenerate")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@click.option("--r", "r", type=float, required=True)
@click.option("--i", "i", type=click.IntRange(min=1), default=1, show_default=True)
@click.option(
    "--epsilons",
    default=",".join(str(e) for e in DEFAULT_EPSILONS),
    show_default=True,
    callback=_parse_epsilons,
    help="Strictly decreasing values in (0, 1].",
)
@_MASS_MODE_OPTION
@_command("degenerate")
def degenerate(
    mesh_path: Path,
    lengths: Path | None,
    conformal: Path | None,
    r: float,
    i: int,
    epsilons: tuple[float, ...],
    mass_mode: str,
) -> None:
    """Ξ⁻ along metrics concentrating on a thinning boundary strip."""
    mesh, metric = _load(mesh_path, lengths, conformal)
    with console.status("[bold green]Degenerating...[/bold green]"):
        table_data = degeneration_experiment(
            mesh, metric, r, i, epsilons, mass_mode=mass_mode, threads=_run().threads  # type: ignore[arg-type]
        )
    _report("degeneration.json", "degeneration", table_data.to_payload())
    rows = [row.to_payload() for row in table_data.rows]
    _table_csv("degeneration.csv", rows)

    table = Table(title=f"Ξ⁻ degeneration (r={r:g}, i={i})", box=box.ROUNDED)
    for column in ("ε", "Ξ⁻", "λ₀", "λᵢ", "strip vertices", "area", "predicted area"):
        table.add_column(column)
    for row in table_data.rows:
        table.add_row(
            f"{row.epsilon:g}",
            f"{row.xi_minus:.10g}",
            f"{row.lambda_0:.10g}",
            f"{row.lambda_i:.10g}",
            str(row.strip_vertices),
            f"{row.area:.10g}",
            f"{row.predicted_area:.10g}",
        )
    console.print(table)
    style = "green" if table_data.strictly_decreasing else "yellow"
    console.print(f"[{style}]strictly decreasing: {table_data.strictly_decreasing}[/{style}]")


@main.command("upper-bound")
@_MESH_ARGUMENT
@_LENGTHS_OPTION
@_CONFORMAL_OPTION
@click.option("--r", "r", type=float, required=True)
@_MASS_MODE_OPTION
@_command("upper-bound")
def upper_bound(
    mesh_path: Path,
    lengths: Path | None,
    conformal: Path | None,
    r: float,
    mass_mode: str,
) -> None:
    """Compare Ξ⁺_{r,1} with the topological bound 4π(1 − cos r)(γ + l)."""
    mesh, metric = _load(mesh_path, lengths, conformal)
    check = check_upper_bound(mesh, metric, r, mass_mode=mass_mode)  # type: ignore[arg-type]
    _report("upper-bound.json", "upper-bound", check.to_payload())
    console.print(_key_value_table(f"Ξ⁺ bound (r={r:g})", check.to_payload()))


@main.command("cap-reference")
@click.option("--r", "r", type=float, required=True)
@click.option("--k", "k", type=click.IntRange(min=2), default=2, show_default=True)
@click.option(
    "--geometry",
    type=click.Choice(["spherical", "hyperbolic"]),
    default="spherical",
    show_default=True,
)
@_command("cap-reference")
def cap_reference_command(r: float, k: int, geometry: str) -> None:
    """Closed-form spectral data of a geodesic ball."""
    reference = cap_reference(r, k, geometry)  # type: ignore[arg-type]
    payload = reference.to_payload()
    _report("cap-reference.json", "cap-reference", payload)
    _table_csv("cap-reference.csv", [payload])
    console.print(_key_value_table(f"{geometry} ball r={r:g}, k={k}", payload))
