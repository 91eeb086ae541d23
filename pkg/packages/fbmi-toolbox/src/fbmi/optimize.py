"""Searches for extremal metrics.

Two drivers share one backtracking loop:

* :func:`maximize_xi_plus` ascends Ξ⁺ (minus an optional branch-matching
  penalty) at fixed area. The direction is the min-norm element of the
  convex hull of the active branch subgradients, so ties between the two
  branches and clustered eigenvalues are handled without smoothing.
* :func:`minimize_theta_criticality` descends ½‖p‖², p being the min-norm
  stationarity vector of :func:`~fbmi.functionals.criticality_residual_theta`.
  With conformal DOFs the step solves H·d = −p inexactly (MINRES over
  finite-difference Hessian products); otherwise it follows −H·p.
  A direction that cannot be formed ends the run as ``direction_failed``.

Steps are taken in log coordinates: conformal factors φ, or log ℓ for
edge-length DOFs. A step of size s moves no coordinate by more than s.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal, Protocol

import numpy as np
from intrinsic_fem.assembly import assemble
from intrinsic_fem.errors import IntrinsicFemError
from intrinsic_fem.mesh import measures
from scipy.sparse.linalg import LinearOperator, minres

from .config import FunctionalSpec, OptimizerConfig
from .constants import SCHEMA_VERSION
from .derivatives import dof_vector
from .errors import CheckpointError, InadmissibleMetricError, SpectrumError
from .functionals import (
    CriticalityResult,
    criticality_residual_theta,
    eval_functional,
    grad_functional,
    min_norm_point,
    stationarity_vectors,
)

if TYPE_CHECKING:
    from intrinsic_fem.assembly import MassMode
    from intrinsic_fem.mesh import DiscreteMetric, FloatArray, SimplicialMesh

    from .functionals import FunctionalGradient

logger = logging.getLogger(__name__)

Termination = Literal[
    "stationary",
    "converged",
    "iteration_cap",
    "step_collapse",
    "non_improving_start",
    "inadmissible",
    "direction_failed",
]


@dataclass(frozen=True)
class IterationRecord:
    """State after one iteration; iteration 0 is the starting metric."""

    iteration: int
    objective: float
    value: float
    branches: dict[str, float]
    gradient_norm: float
    stationarity: float
    step: float
    accepted: bool
    area: float
    admissibility_margin: float | None = None
    residual: float | None = None
    rejections: tuple[str, ...] = ()

    def to_payload(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["rejections"] = list(self.rejections)
        if not math.isfinite(self.stationarity):
            payload["stationarity"] = None
        if self.admissibility_margin is not None and not math.isfinite(
            self.admissibility_margin
        ):
            payload["admissibility_margin"] = None
        return payload


@dataclass(eq=False)
class OptimizerTrace:
    config: OptimizerConfig
    records: list[IterationRecord] = field(default_factory=list)
    termination: Termination | None = None
    metric: DiscreteMetric | None = None

    @property
    def accepted_steps(self) -> int:
        return sum(1 for r in self.records if r.accepted)

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    def to_payload(self) -> dict[str, Any]:
        return {
            "config": self.config.model_dump(),
            "termination": self.termination,
            "accepted_steps": self.accepted_steps,
            "iterations": len(self.records),
            "final": self.final.to_payload() if self.records else None,
        }


# --------------------------------------------------------------------------
# Checkpoints
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Checkpoint:
    config: OptimizerConfig
    iteration: int
    step: float
    area0: float
    coordinates: list[float]
    vertex_count: int
    edge_count: int


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> None:
    """Write ``checkpoint`` atomically (temp file, then rename)."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "optimizer-checkpoint",
        "config": checkpoint.config.model_dump(),
        "iteration": checkpoint.iteration,
        "step": checkpoint.step,
        "area0": checkpoint.area0,
        "seed": checkpoint.config.seed,
        "vertex_count": checkpoint.vertex_count,
        "edge_count": checkpoint.edge_count,
        "coordinates": checkpoint.coordinates,
    }
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload) + "\n")
    os.replace(tmp, path)
    logger.debug("Checkpoint at iteration %d written to %s", checkpoint.iteration, path)


def load_checkpoint(
    path: Path, mesh: SimplicialMesh, config: OptimizerConfig
) -> Checkpoint:
    """Read a checkpoint and check it belongs to this mesh and run."""
    try:
        data = json.loads(path.read_text())
        saved = OptimizerConfig.model_validate(data["config"])
        checkpoint = Checkpoint(
            config=saved,
            iteration=int(data["iteration"]),
            step=float(data["step"]),
            area0=float(data["area0"]),
            coordinates=[float(v) for v in data["coordinates"]],
            vertex_count=int(data["vertex_count"]),
            edge_count=int(data["edge_count"]),
        )
    except (OSError, ValueError, KeyError, TypeError) as e:
        msg = f"Cannot read checkpoint {path}: {e}"
        raise CheckpointError(msg) from e

    if (checkpoint.vertex_count, checkpoint.edge_count) != (
        mesh.vertex_count,
        mesh.edge_count,
    ):
        msg = f"Checkpoint {path} was written for a different mesh"
        raise CheckpointError(msg)
    for key in ("objective", "dofs", "r", "i", "seed"):
        if getattr(saved, key) != getattr(config, key):
            msg = (
                f"Checkpoint {path} has {key}={getattr(saved, key)!r}, "
                f"run has {getattr(config, key)!r}"
            )
            raise CheckpointError(msg)
    return checkpoint


# --------------------------------------------------------------------------
# Coordinates
# --------------------------------------------------------------------------


def _coordinates(
    mesh: SimplicialMesh, metric: DiscreteMetric, config: OptimizerConfig
) -> FloatArray:
    x = dof_vector(mesh, metric, config.dofs)
    return x if config.dofs == "conformal" else np.log(x)


def _metric_at(
    base: DiscreteMetric, mesh: SimplicialMesh, y: FloatArray, config: OptimizerConfig
) -> DiscreteMetric:
    if config.dofs == "conformal":
        return base.with_log_factor(mesh, y)
    return base.with_edge_lengths(np.exp(y))


def _to_coordinates(
    metric: DiscreteMetric, mesh: SimplicialMesh, g: FloatArray, config: OptimizerConfig
) -> FloatArray:
    """Pull a DOF gradient back to the log coordinates."""
    if config.dofs == "conformal":
        return g
    return g * metric.edge_lengths(mesh)


# --------------------------------------------------------------------------
# Objectives
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Point:
    y: FloatArray
    metric: DiscreteMetric
    objective: float
    value: float
    branches: dict[str, float]
    area: float
    margin: float | None = None
    residual: float | None = None
    criticality: CriticalityResult | None = None


@dataclass(frozen=True)
class _Direction:
    d: FloatArray
    norm: float
    stationarity: float
    # Rate of improvement along d when d is not the (sub)gradient itself.
    slope: float | None = None
    max_step: float | None = None


class _Problem(Protocol):
    sense: float

    def evaluate(self, y: FloatArray) -> _Point: ...

    def direction(self, point: _Point) -> _Direction: ...

    def done(self, point: _Point, direction: _Direction) -> Termination | None: ...


@dataclass(eq=False)
class _XiPlus:
    """Ξ⁺ − μ(λ₀ − λᵢ)² at fixed area A₀."""

    mesh: SimplicialMesh
    base: DiscreteMetric
    config: OptimizerConfig
    area0: float
    mass_mode: MassMode
    sense: float = 1.0

    @property
    def spec(self) -> FunctionalSpec:
        return FunctionalSpec(family="xi_plus", r=self.config.r, i=self.config.i)

    def project(self, y: FloatArray) -> FloatArray:
        """Rescale to area A₀; both coordinate systems shift by ½·log(A₀/A)."""
        area = measures(self.mesh, _metric_at(self.base, self.mesh, y, self.config)).area
        return y + 0.5 * math.log(self.area0 / area)

    def evaluate(self, y: FloatArray) -> _Point:
        y = self.project(y)
        metric = _metric_at(self.base, self.mesh, y, self.config)
        report = eval_functional(
            self.spec,
            self.mesh,
            metric,
            mass_mode=self.mass_mode,
            rel_gap=self.config.rel_gap,
            tie_tolerance=self.config.tie_tolerance,
        )
        branches = {name: term.value for name, term in report.eigenvalues.items()}
        gap = branches["lambda_0"] - branches["lambda_i"]
        return _Point(
            y=y,
            metric=metric,
            objective=report.value - self.config.penalty * gap**2,
            value=report.value,
            branches=branches,
            area=report.area,
        )

    def _penalty_gradient(self, gradient: FunctionalGradient) -> FloatArray:
        ground, upper = (
            piece.cluster.diagonal_gradients()[piece.position]
            for piece in (b.pieces[0] for b in gradient.branches)
        )
        gap = gradient.eigenvalues["lambda_0"] - gradient.eigenvalues["lambda_i"]
        return -2.0 * self.config.penalty * gap * (ground - upper)

    def direction(self, point: _Point) -> _Direction:
        gradient = grad_functional(
            self.spec,
            self.mesh,
            point.metric,
            dofs=self.config.dofs,
            mass_mode=self.mass_mode,
            rel_gap=self.config.rel_gap,
            tie_tolerance=self.config.tie_tolerance,
        )
        rows = gradient.subgradients()
        if self.config.penalty > 0.0:
            rows = rows + self._penalty_gradient(gradient)
        rows = np.vstack(
            [_to_coordinates(point.metric, self.mesh, row, self.config) for row in rows]
        )
        # Constant shifts only rescale; the projection undoes them.
        rows = rows - rows.mean(axis=1, keepdims=True)
        _, d = min_norm_point(rows)
        norm = float(np.linalg.norm(d))
        largest = float(np.linalg.norm(rows, axis=1).max())
        stationarity = norm / largest if largest > 0.0 else 0.0
        return _Direction(d=d, norm=norm, stationarity=stationarity)

    def done(self, point: _Point, direction: _Direction) -> Termination | None:
        if direction.stationarity <= self.config.gradient_tolerance:
            return "stationary"
        return None


@dataclass(eq=False)
class _ThetaCriticality:
    """½‖p‖² for the min-norm Θ stationarity vector p."""

    mesh: SimplicialMesh
    base: DiscreteMetric
    config: OptimizerConfig
    mass_mode: MassMode
    sense: float = -1.0

    def _criticality(self, metric: DiscreteMetric) -> CriticalityResult:
        return criticality_residual_theta(
            self.mesh,
            metric,
            self.config.r,
            self.config.i,
            dofs=self.config.dofs,
            samples=self.config.samples,
            seed=self.config.seed,
            mass_mode=self.mass_mode,
            rel_gap=self.config.rel_gap,
        )

    def evaluate(self, y: FloatArray) -> _Point:
        metric = _metric_at(self.base, self.mesh, y, self.config)
        result = self._criticality(metric)
        check = result.admissibility
        margin = check.margin if check is not None else None
        if check is not None and check.margin < self.config.admissibility_margin:
            raise InadmissibleMetricError(
                check.c, check.nearest if check.nearest is not None else check.c
            )
        return _Point(
            y=y,
            metric=metric,
            objective=0.5 * result.residual**2,
            value=result.value,
            branches={},
            area=measures(self.mesh, metric).area,
            margin=margin,
            residual=result.residual,
            criticality=result,
        )

    def _tracked_stationarity(
        self, metric: DiscreteMetric, previous: CriticalityResult
    ) -> FloatArray:
        """p at ``metric`` with the previous witnesses B-projected onto the new cluster."""
        spec = FunctionalSpec(family="theta", r=self.config.r, i=self.config.i)
        gradient = grad_functional(
            spec,
            self.mesh,
            metric,
            dofs=self.config.dofs,
            mass_mode=self.mass_mode,
            rel_gap=self.config.rel_gap,
        )
        cluster = gradient.branches[0].pieces[1].cluster
        boundary_mass = assemble(self.mesh, metric, mass_mode=self.mass_mode).boundary_mass
        coefficients = (cluster.basis.T @ (boundary_mass @ previous.witnesses)).T
        norms = np.linalg.norm(coefficients, axis=1, keepdims=True)
        coefficients = coefficients / np.where(norms > 0.0, norms, 1.0)
        G = stationarity_vectors(gradient, coefficients)
        return previous.weights @ G

    def _hessian_product(
        self, point: _Point, result: CriticalityResult, v: FloatArray
    ) -> FloatArray:
        """Finite-difference H·v; forward, then backward, then at a tenth of the step."""
        p = result.stationarity
        size = float(np.linalg.norm(v))
        if size == 0.0:
            return np.zeros_like(p)
        x = dof_vector(self.mesh, point.metric, self.config.dofs)
        eps = self.config.fd_step
        failure: Exception | None = None
        for h in (eps, -eps, 0.1 * eps, -0.1 * eps):
            shifted = x + h * v / size
            try:
                if self.config.dofs == "conformal":
                    metric = self.base.with_log_factor(self.mesh, shifted)
                else:
                    metric = self.base.with_edge_lengths(shifted)
                moved = self._tracked_stationarity(metric, result)
            except (IntrinsicFemError, SpectrumError, InadmissibleMetricError) as e:
                logger.debug("Difference step %.1e failed: %s", h, e)
                failure = e
                continue
            return size * (moved - p) / h
        assert failure is not None
        raise failure

    def _newton_step(self, point: _Point, result: CriticalityResult) -> FloatArray | None:
        """Inexact solve of H·d = −p by MINRES; None when it breaks down."""
        p = result.stationarity
        n = p.size
        operator = LinearOperator(
            (n, n),
            matvec=lambda v: self._hessian_product(point, result, np.ravel(v)),
            dtype=np.float64,
        )
        try:
            d, info = minres(operator, -p, maxiter=self.config.newton_iterations)
        except (IntrinsicFemError, SpectrumError, InadmissibleMetricError) as e:
            logger.debug("Newton solve failed: %s", e)
            return None
        if info < 0 or not np.all(np.isfinite(d)) or not np.any(d):
            return None
        return np.asarray(d, dtype=np.float64)

    def direction(self, point: _Point) -> _Direction:
        result = point.criticality
        assert result is not None
        p = result.stationarity
        if not np.any(p):
            return _Direction(d=np.zeros_like(p), norm=0.0, stationarity=0.0)
        # The stationarity vectors are gradients, so ∇½‖p‖² = H·p.
        hp = self._hessian_product(point, result, p)
        g = _to_coordinates(point.metric, self.mesh, hp, self.config)
        norm = float(np.linalg.norm(g))
        if self.config.dofs == "conformal" and self.config.newton_iterations > 0:
            d = self._newton_step(point, result)
            slope = -float(g @ d) if d is not None else 0.0
            if d is not None and slope > 0.0:
                return _Direction(
                    d=d,
                    norm=norm,
                    stationarity=result.relative,
                    slope=slope,
                    max_step=float(np.abs(d).max()),
                )
            logger.debug("Falling back to the gradient direction")
        return _Direction(d=-g, norm=norm, stationarity=result.relative)

    def done(self, point: _Point, direction: _Direction) -> Termination | None:
        if point.residual is not None and point.residual <= self.config.residual_tolerance:
            return "converged"
        return None


# --------------------------------------------------------------------------
# Driver
# --------------------------------------------------------------------------


def _record(
    iteration: int,
    point: _Point,
    direction: _Direction,
    step: float,
    *,
    accepted: bool,
    rejections: tuple[str, ...] | list[str] = (),
) -> IterationRecord:
    return IterationRecord(
        iteration=iteration,
        objective=point.objective,
        value=point.value,
        branches=dict(point.branches),
        gradient_norm=direction.norm,
        stationarity=direction.stationarity,
        step=step,
        accepted=accepted,
        area=point.area,
        admissibility_margin=point.margin,
        residual=point.residual,
        rejections=tuple(rejections),
    )


def _rejection_reason(e: Exception) -> str:
    if isinstance(e, InadmissibleMetricError):
        return "inadmissible"
    if isinstance(e, IntrinsicFemError):
        return "invalid_metric"
    return "solver"


def _line_search(
    problem: _Problem,
    point: _Point,
    direction: _Direction,
    step: float,
    config: OptimizerConfig,
    rejections: list[str],
) -> tuple[_Point | None, float]:
    d = direction.d
    scale = float(np.abs(d).max())
    slope = direction.norm**2 if direction.slope is None else direction.slope
    if direction.max_step is not None:
        step = min(step, direction.max_step)
    while step >= config.min_step:
        try:
            candidate = problem.evaluate(point.y + step * d / scale)
        except (IntrinsicFemError, SpectrumError, InadmissibleMetricError) as e:
            rejections.append(_rejection_reason(e))
            logger.info("Rejected step %.3g: %s", step, e)
            step *= config.shrink
            continue
        predicted = config.sufficient_increase * step * slope / scale
        if problem.sense * (candidate.objective - point.objective) >= predicted:
            return candidate, step
        rejections.append("insufficient_change")
        step *= config.shrink
    return None, step


def _run(
    problem: _Problem,
    mesh: SimplicialMesh,
    y0: FloatArray,
    config: OptimizerConfig,
    *,
    area0: float,
    start_iteration: int,
    step: float,
    trace_path: Path | None,
    checkpoint_path: Path | None,
    append: bool,
) -> OptimizerTrace:
    trace = OptimizerTrace(config=config)
    stream = None
    if trace_path is not None:
        stream = trace_path.open("a" if append else "w")

    def emit(record: IterationRecord) -> None:
        trace.records.append(record)
        if stream is not None:
            stream.write(json.dumps(record.to_payload()) + "\n")
            stream.flush()

    def checkpoint(iteration: int, point: _Point, step: float) -> None:
        if checkpoint_path is None:
            return
        save_checkpoint(
            checkpoint_path,
            Checkpoint(
                config=config,
                iteration=iteration,
                step=step,
                area0=area0,
                coordinates=[float(v) for v in point.y],
                vertex_count=mesh.vertex_count,
                edge_count=mesh.edge_count,
            ),
        )

    try:
        point = problem.evaluate(y0)
        iteration = start_iteration
        termination: Termination = "iteration_cap"
        first = True
        while True:
            failure: str | None = None
            try:
                direction = problem.direction(point)
            except (IntrinsicFemError, SpectrumError, InadmissibleMetricError) as e:
                logger.warning("No search direction at iteration %d: %s", iteration, e)
                failure = _rejection_reason(e)
                direction = _Direction(d=np.zeros_like(point.y), norm=0.0, stationarity=math.inf)
            if first:
                emit(_record(iteration, point, direction, 0.0, accepted=False))
                first = False
            reason = problem.done(point, direction)
            if reason is None and failure is not None:
                reason = "inadmissible" if failure == "inadmissible" else "direction_failed"
            if reason is not None:
                termination = reason
                break
            if iteration >= config.max_iterations:
                break

            rejections: list[str] = []
            candidate, used = _line_search(problem, point, direction, step, config, rejections)
            iteration += 1
            if candidate is None:
                emit(
                    _record(iteration, point, direction, used, accepted=False, rejections=rejections)
                )
                if rejections and all(r == "inadmissible" for r in rejections):
                    termination = "inadmissible"
                elif trace.accepted_steps == 0:
                    termination = "non_improving_start"
                    logger.warning("No improving step from the starting metric")
                else:
                    termination = "step_collapse"
                break

            point = candidate
            step = min(used * config.growth, config.initial_step)
            emit(_record(iteration, point, direction, used, accepted=True, rejections=rejections))
            logger.info(
                "Iteration %d: objective %.12g, step %.3g, stationarity %.3e",
                iteration,
                point.objective,
                used,
                direction.stationarity,
            )
            if iteration % config.checkpoint_interval == 0:
                checkpoint(iteration, point, step)
    finally:
        if stream is not None:
            stream.close()

    checkpoint(iteration, point, step)
    trace.termination = termination
    trace.metric = point.metric
    logger.info(
        "Stopped after %d iterations (%d accepted): %s, objective %.12g",
        iteration,
        trace.accepted_steps,
        termination,
        point.objective,
    )
    return trace


def _start(
    mesh: SimplicialMesh,
    metric0: DiscreteMetric,
    config: OptimizerConfig,
    checkpoint_path: Path | None,
    *,
    resume: bool,
) -> tuple[FloatArray, float, int, float]:
    area0 = measures(mesh, metric0).area
    if resume and checkpoint_path is not None and checkpoint_path.exists():
        saved = load_checkpoint(checkpoint_path, mesh, config)
        logger.info("Resuming from %s at iteration %d", checkpoint_path, saved.iteration)
        return np.asarray(saved.coordinates), saved.area0, saved.iteration, saved.step
    return _coordinates(mesh, metric0, config), area0, 0, config.initial_step


def maximize_xi_plus(
    mesh: SimplicialMesh,
    metric0: DiscreteMetric,
    config: OptimizerConfig | None = None,
    *,
    trace_path: Path | None = None,
    checkpoint_path: Path | None = None,
    resume: bool = False,
    mass_mode: MassMode = "consistent",
) -> tuple[DiscreteMetric, OptimizerTrace]:
    """Ascend Ξ⁺_{r,i} over ``config.dofs`` at the starting area.

    The final metric has the area of ``metric0`` to rounding.
    """
    config = config or OptimizerConfig()
    y0, area0, iteration, step = _start(mesh, metric0, config, checkpoint_path, resume=resume)
    problem = _XiPlus(mesh=mesh, base=metric0, config=config, area0=area0, mass_mode=mass_mode)
    trace = _run(
        problem,
        mesh,
        y0,
        config,
        area0=area0,
        start_iteration=iteration,
        step=step,
        trace_path=trace_path,
        checkpoint_path=checkpoint_path,
        append=resume and iteration > 0,
    )
    assert trace.metric is not None
    return trace.metric, trace


def minimize_theta_criticality(
    mesh: SimplicialMesh,
    metric0: DiscreteMetric,
    config: OptimizerConfig | None = None,
    *,
    trace_path: Path | None = None,
    checkpoint_path: Path | None = None,
    resume: bool = False,
    mass_mode: MassMode = "consistent",
) -> tuple[DiscreteMetric, OptimizerTrace]:
    """Drive the Θ_{r,i} criticality residual down.

    Iterates whose admissibility margin falls below
    ``config.admissibility_margin`` are rejected by the line search.
    """
    config = config or OptimizerConfig(objective="theta_criticality")
    y0, area0, iteration, step = _start(mesh, metric0, config, checkpoint_path, resume=resume)
    problem = _ThetaCriticality(mesh=mesh, base=metric0, config=config, mass_mode=mass_mode)
    trace = _run(
        problem,
        mesh,
        y0,
        config,
        area0=area0,
        start_iteration=iteration,
        step=step,
        trace_path=trace_path,
        checkpoint_path=checkpoint_path,
        append=resume and iteration > 0,
    )
    assert trace.metric is not None
    return trace.metric, trace


def optimize(
    mesh: SimplicialMesh,
    metric0: DiscreteMetric,
    config: OptimizerConfig,
    **kwargs: Any,
) -> tuple[DiscreteMetric, OptimizerTrace]:
    """Dispatch on ``config.objective``."""
    if config.objective == "xi_plus":
        return maximize_xi_plus(mesh, metric0, config, **kwargs)
    return minimize_theta_criticality(mesh, metric0, config, **kwargs)
