"""Spectral functionals of a surface with boundary and their metric gradients.

Families (a = boundary length, A = area, k = dimension):

* ``theta``: (θ₀cos²r + θᵢsin²r)·a + 2A, θ from the Steklov problem at frequency k
* ``omega``: (−ω₀cosh²r + ωᵢsinh²r)·a + 2A, ω at frequency −k
* ``xi_plus``: min{λ₀(g, −tan r), λᵢ(g, cot r)}·A^{2/k}
* ``xi_minus``: min{λ₀(g, tanh r), λᵢ(g, coth r)}·A^{2/k}
* ``general``: (w₀θ₀ + wᵢθᵢ)·α₁a^{β₁} + α₂A^{β₂} with the spherical or
  hyperbolic weights w.

The Ξ families are minima of two branches. Where the branches tie, or
where an eigenvalue sits in a cluster, the functional is only one-sided
differentiable; :class:`FunctionalGradient` keeps every branch and every
cluster so that exact one-sided derivatives remain available.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
from intrinsic_fem.assembly import assemble
from scipy.optimize import minimize

from .config import FunctionalSpec
from .constants import DEFAULT_REL_GAP, SAMPLE_COUNT, SAMPLE_SEED
from .derivatives import (
    ClusterGradient,
    MetricGradient,
    cluster_gradient,
    combine,
    eigenvalue_gradient,
    measure_gradients,
)
from .errors import (
    ClusteredEigenvalueError,
    InadmissibleMetricError,
    TiedBranchesError,
)
from .parallel import ordered_map
from .spectra import (
    Admissibility,
    admissibility_check,
    covering_spectrum,
    freq_steklov_spectrum,
    robin_spectrum,
    solve,
)

if TYPE_CHECKING:
    from intrinsic_fem import OperatorSet
    from intrinsic_fem.assembly import MassMode
    from intrinsic_fem.mesh import DiscreteMetric, FloatArray, SimplicialMesh

    from .config import Dofs, EigenProblemSpec
    from .spectra import Spectrum

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Closed-form pieces
# --------------------------------------------------------------------------


def _is_hyperbolic(spec: FunctionalSpec) -> bool:
    return spec.family in {"omega", "xi_minus"} or (
        spec.family == "general" and spec.geometry == "hyperbolic"
    )


def _prefix(spec: FunctionalSpec) -> str:
    if spec.family in {"xi_plus", "xi_minus"}:
        return "lambda"
    return "omega" if _is_hyperbolic(spec) else "theta"


def boundary_weights(spec: FunctionalSpec) -> tuple[float, float]:
    """(w₀, wᵢ): (cos²r, sin²r) on the sphere, (−cosh²r, sinh²r) in hyperbolic space."""
    if _is_hyperbolic(spec):
        return -math.cosh(spec.r) ** 2, math.sinh(spec.r) ** 2
    return math.cos(spec.r) ** 2, math.sin(spec.r) ** 2


def robin_parameters(spec: FunctionalSpec) -> tuple[float, float]:
    """(σ₀, σᵢ) of the two Ξ branches."""
    if spec.family == "xi_minus":
        return math.tanh(spec.r), 1.0 / math.tanh(spec.r)
    return -math.tan(spec.r), 1.0 / math.tan(spec.r)


def _coefficients(spec: FunctionalSpec) -> tuple[float, float, float, float]:
    if spec.family == "general":
        return spec.alpha1, spec.beta1, spec.alpha2, spec.beta2
    return 1.0, 1.0, 2.0, 1.0


def functional_value(
    spec: FunctionalSpec,
    eigenvalues: Mapping[str, float],
    area: float,
    boundary_length: float,
) -> float:
    """The functional from its ingredients; the single formula used everywhere."""
    prefix = _prefix(spec)
    ground = eigenvalues[f"{prefix}_0"]
    upper = eigenvalues[f"{prefix}_i"]
    if prefix == "lambda":
        return min(ground, upper) * area ** (2.0 / spec.k)
    w0, wi = boundary_weights(spec)
    alpha1, beta1, alpha2, beta2 = _coefficients(spec)
    return (w0 * ground + wi * upper) * alpha1 * boundary_length**beta1 + alpha2 * area**beta2


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenTerm:
    """One eigenvalue entering a functional."""

    problem: str
    param: float
    index: int
    value: float
    cluster: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class _Evaluation:
    ops: OperatorSet
    terms: dict[str, tuple[Spectrum, int]]
    admissibility: Admissibility | None


def _evaluate(
    spec: FunctionalSpec,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    *,
    mass_mode: MassMode,
    rel_gap: float,
) -> _Evaluation:
    ops = assemble(mesh, metric, mass_mode=mass_mode)
    prefix = _prefix(spec)
    if prefix == "lambda":
        sigma0, sigmai = robin_parameters(spec)
        ground = covering_spectrum(
            lambda n: robin_spectrum(ops, sigma0, n, rel_gap=rel_gap), 0, ops.size
        )
        upper = covering_spectrum(
            lambda n: robin_spectrum(ops, sigmai, n, rel_gap=rel_gap), spec.i, ops.size
        )
        terms = {f"{prefix}_0": (ground, 0), f"{prefix}_i": (upper, spec.i)}
        return _Evaluation(ops=ops, terms=terms, admissibility=None)

    c = spec.frequency
    check = admissibility_check(ops, c)
    if not check.admissible:
        raise InadmissibleMetricError(c, float(check.nearest if check.nearest is not None else c))
    spectrum = covering_spectrum(
        lambda n: freq_steklov_spectrum(
            ops, c, n, rel_gap=rel_gap, check_admissibility=False
        ),
        spec.i,
        int(ops.boundary_vertices.size),
    )
    terms = {f"{prefix}_0": (spectrum, 0), f"{prefix}_i": (spectrum, spec.i)}
    return _Evaluation(ops=ops, terms=terms, admissibility=check)


def _is_tied(a: float, b: float, tolerance: float) -> bool:
    return abs(a - b) <= tolerance * (1.0 + max(abs(a), abs(b)))


@dataclass(frozen=True, eq=False)
class FunctionalReport:
    """Value of a functional together with everything it was computed from."""

    spec: FunctionalSpec
    value: float
    area: float
    boundary_length: float
    eigenvalues: dict[str, EigenTerm]
    active_branch: str | None = None
    tied: bool = False
    admissibility: Admissibility | None = None

    def recompute(self) -> float:
        return functional_value(
            self.spec,
            {name: term.value for name, term in self.eigenvalues.items()},
            self.area,
            self.boundary_length,
        )

    def to_payload(self) -> dict[str, Any]:
        return {
            "spec": self.spec.model_dump(),
            "value": self.value,
            "area": self.area,
            "boundary_length": self.boundary_length,
            "eigenvalues": {
                name: {
                    "problem": t.problem,
                    "param": t.param,
                    "index": t.index,
                    "value": t.value,
                    "cluster": list(t.cluster),
                }
                for name, t in self.eigenvalues.items()
            },
            "active_branch": self.active_branch,
            "tied": self.tied,
            "admissibility": (
                self.admissibility.to_payload() if self.admissibility is not None else None
            ),
        }


def _report(
    spec: FunctionalSpec, evaluation: _Evaluation, tie_tolerance: float
) -> FunctionalReport:
    terms = {
        name: EigenTerm(
            problem=spectrum.kind,
            param=spectrum.param,
            index=index,
            value=float(spectrum.eigenvalues[index]),
            cluster=spectrum.cluster_of(index),
        )
        for name, (spectrum, index) in evaluation.terms.items()
    }
    ops = evaluation.ops
    value = functional_value(
        spec, {n: t.value for n, t in terms.items()}, ops.area, ops.boundary_length
    )
    active: str | None = None
    tied = False
    if _prefix(spec) == "lambda":
        ground, upper = terms["lambda_0"].value, terms["lambda_i"].value
        active = "lambda_0" if ground <= upper else "lambda_i"
        tied = _is_tied(ground, upper, tie_tolerance)
    return FunctionalReport(
        spec=spec,
        value=value,
        area=ops.area,
        boundary_length=ops.boundary_length,
        eigenvalues=terms,
        active_branch=active,
        tied=tied,
        admissibility=evaluation.admissibility,
    )


def eval_functional(
    spec: FunctionalSpec,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    *,
    mass_mode: MassMode = "consistent",
    rel_gap: float = DEFAULT_REL_GAP,
    tie_tolerance: float = DEFAULT_REL_GAP,
) -> FunctionalReport:
    """Evaluate one functional; raises InadmissibleMetricError for Θ at a Dirichlet eigenvalue."""
    evaluation = _evaluate(spec, mesh, metric, mass_mode=mass_mode, rel_gap=rel_gap)
    report = _report(spec, evaluation, tie_tolerance)
    logger.debug("%s(r=%g, i=%d) = %.12g", spec.family, spec.r, spec.i, report.value)
    return report


def eval_general_family(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    *,
    r: float,
    i: int = 1,
    alpha1: float = 1.0,
    beta1: float = 1.0,
    alpha2: float = 2.0,
    beta2: float = 1.0,
    geometry: str = "spherical",
    mass_mode: MassMode = "consistent",
) -> FunctionalReport:
    spec = FunctionalSpec(
        family="general",
        r=r,
        i=i,
        alpha1=alpha1,
        beta1=beta1,
        alpha2=alpha2,
        beta2=beta2,
        geometry=geometry,  # type: ignore[arg-type]
    )
    return eval_functional(spec, mesh, metric, mass_mode=mass_mode)


# --------------------------------------------------------------------------
# Gradients
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenPiece:
    """coefficient·(eigenvalue at ``position`` inside ``cluster``)."""

    coefficient: float
    cluster: ClusterGradient
    position: int

    def directional(self, h: FloatArray) -> float:
        return self.coefficient * float(self.cluster.directional(h)[self.position])


@dataclass(frozen=True, eq=False)
class Branch:
    """One smooth-where-simple branch of a functional.

    ``gradient`` is set when every eigenvalue in the branch is simple;
    ``smooth`` is the part of the gradient that does not involve any
    eigenvalue derivative.
    """

    name: str
    value: float
    pieces: tuple[EigenPiece, ...]
    smooth: MetricGradient
    gradient: MetricGradient | None

    @property
    def simple(self) -> bool:
        return self.gradient is not None

    def directional(self, h: FloatArray) -> float:
        """Right derivative along ``h``."""
        return self.smooth.directional(h) + sum(p.directional(h) for p in self.pieces)

    def subgradients(self) -> FloatArray:
        """Gradients obtained by fixing each cluster to one of its basis directions."""
        options = [
            piece.coefficient * piece.cluster.diagonal_gradients() for piece in self.pieces
        ]
        rows = [
            self.smooth.vector + sum(choice)
            for choice in itertools.product(*options)
        ]
        return np.asarray(rows)


@dataclass(frozen=True, eq=False)
class FunctionalGradient:
    """All branches of a functional's gradient at one metric."""

    spec: FunctionalSpec
    value: float
    dofs: Dofs
    branches: tuple[Branch, ...]
    active: tuple[int, ...]
    eigenvalues: dict[str, float] = field(default_factory=dict)
    area: float = 0.0
    boundary_length: float = 0.0
    area_gradient: MetricGradient | None = None
    length_gradient: MetricGradient | None = None
    admissibility: Admissibility | None = None

    @property
    def nonsmooth(self) -> bool:
        return len(self.active) > 1 or not all(self.branches[k].simple for k in self.active)

    @property
    def active_branches(self) -> tuple[Branch, ...]:
        return tuple(self.branches[k] for k in self.active)

    @property
    def branch_gradients(self) -> dict[str, MetricGradient]:
        """Gradients of the active branches whose eigenvalues are simple."""
        return {
            b.name: b.gradient for b in self.active_branches if b.gradient is not None
        }

    @property
    def gradient(self) -> MetricGradient:
        """The gradient at a smooth point; raises at ties and clusters."""
        if len(self.active) > 1:
            raise TiedBranchesError(tuple(b.name for b in self.active_branches))
        (branch,) = self.active_branches
        if branch.gradient is None:
            piece = next(p for p in branch.pieces if p.cluster.size > 1)
            index = piece.cluster.indices[piece.position]
            raise ClusteredEigenvalueError(index, piece.cluster.indices)
        return branch.gradient

    def one_sided(self, h: FloatArray) -> tuple[float, float]:
        """Exact (right, left) derivatives of the functional along ``h``.

        The left derivative is lim (F(−t) − F(0)) / (−t) as t → 0⁺.
        """
        branches = self.active_branches
        right = min(b.directional(h) for b in branches)
        left = max(-b.directional(-h) for b in branches)
        return right, left

    def subgradients(self) -> FloatArray:
        return np.vstack([b.subgradients() for b in self.active_branches])


def _cluster_for(
    evaluation: _Evaluation,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    name: str,
    dofs: Dofs,
) -> tuple[ClusterGradient, int, MetricGradient | None]:
    spectrum, index = evaluation.terms[name]
    cluster = spectrum.cluster_of(index)
    ops = evaluation.ops
    if len(cluster) == 1:
        grad = eigenvalue_gradient(ops, mesh, metric, spectrum, index, dofs=dofs)
        single = ClusterGradient(
            dofs=dofs,
            indices=cluster,
            value=float(spectrum.eigenvalues[index]),
            eigenvalues=spectrum.eigenvalues[[index]],
            basis=spectrum.eigenvectors[:, [index]],
            matrices=grad.vector[:, None, None],
        )
        return single, 0, grad
    grouped = cluster_gradient(ops, mesh, metric, spectrum, index, dofs=dofs)
    return grouped, index - cluster[0], None


def grad_functional(
    spec: FunctionalSpec,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    *,
    dofs: Dofs = "edge_lengths",
    mass_mode: MassMode = "consistent",
    rel_gap: float = DEFAULT_REL_GAP,
    tie_tolerance: float = DEFAULT_REL_GAP,
) -> FunctionalGradient:
    """Gradient of a functional with respect to edge lengths or conformal factors."""
    evaluation = _evaluate(spec, mesh, metric, mass_mode=mass_mode, rel_gap=rel_gap)
    report = _report(spec, evaluation, tie_tolerance)
    values = {name: term.value for name, term in report.eigenvalues.items()}
    d_area, d_length = measure_gradients(mesh, metric, dofs=dofs)
    A, a = report.area, report.boundary_length
    prefix = _prefix(spec)

    if prefix == "lambda":
        power = 2.0 / spec.k
        branches = []
        for name in ("lambda_0", "lambda_i"):
            cg, position, grad = _cluster_for(evaluation, mesh, metric, name, dofs)
            lam = values[name]
            scale = A**power
            smooth = d_area.scaled(lam * power * A ** (power - 1.0))
            full = None if grad is None else combine([(scale, grad), (1.0, smooth)])
            branches.append(
                Branch(
                    name=name,
                    value=lam * scale,
                    pieces=(EigenPiece(scale, cg, position),),
                    smooth=smooth,
                    gradient=full,
                )
            )
        low = min(b.value for b in branches)
        if report.tied:
            active = (0, 1)
        else:
            active = (0,) if branches[0].value == low else (1,)
        return FunctionalGradient(
            spec=spec,
            value=report.value,
            dofs=dofs,
            branches=tuple(branches),
            active=active,
            eigenvalues=values,
            area=A,
            boundary_length=a,
            area_gradient=d_area,
            length_gradient=d_length,
            admissibility=evaluation.admissibility,
        )

    w0, wi = boundary_weights(spec)
    alpha1, beta1, alpha2, beta2 = _coefficients(spec)
    ground, upper = values[f"{prefix}_0"], values[f"{prefix}_i"]
    length_term = alpha1 * a**beta1
    smooth = combine(
        [
            ((w0 * ground + wi * upper) * alpha1 * beta1 * a ** (beta1 - 1.0), d_length),
            (alpha2 * beta2 * A ** (beta2 - 1.0), d_area),
        ]
    )
    cg0, p0, g0 = _cluster_for(evaluation, mesh, metric, f"{prefix}_0", dofs)
    cgi, pi, gi = _cluster_for(evaluation, mesh, metric, f"{prefix}_i", dofs)
    full = None
    if g0 is not None and gi is not None:
        full = combine([(w0 * length_term, g0), (wi * length_term, gi), (1.0, smooth)])
    branch = Branch(
        name=spec.family,
        value=report.value,
        pieces=(
            EigenPiece(w0 * length_term, cg0, p0),
            EigenPiece(wi * length_term, cgi, pi),
        ),
        smooth=smooth,
        gradient=full,
    )
    return FunctionalGradient(
        spec=spec,
        value=report.value,
        dofs=dofs,
        branches=(branch,),
        active=(0,),
        eigenvalues=values,
        area=A,
        boundary_length=a,
        area_gradient=d_area,
        length_gradient=d_length,
        admissibility=evaluation.admissibility,
    )


# --------------------------------------------------------------------------
# Convex-hull machinery
# --------------------------------------------------------------------------


def min_norm_point(points: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Weights t ≥ 0, Σt = 1 minimizing ‖Σ tⱼ gⱼ‖ over the rows of ``points``.

    Closed form for one or two points; SLSQP on the Gram matrix otherwise.
    """
    G = np.atleast_2d(np.asarray(points, dtype=np.float64))
    s = G.shape[0]
    if s == 1:
        return np.ones(1), G[0].copy()
    if s == 2:
        diff = G[0] - G[1]
        denom = float(diff @ diff)
        t0 = 0.5 if denom == 0.0 else float(np.clip(-(G[1] @ diff) / denom, 0.0, 1.0))
        weights = np.array([t0, 1.0 - t0])
        return weights, weights @ G

    gram = G @ G.T
    scale = float(np.abs(gram).max()) or 1.0
    gram = gram / scale
    result = minimize(
        lambda t: float(t @ gram @ t),
        np.full(s, 1.0 / s),
        jac=lambda t: 2.0 * gram @ t,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * s,
        constraints=[{"type": "eq", "fun": lambda t: float(t.sum() - 1.0)}],
        options={"ftol": 1e-15, "maxiter": 500},
    )
    weights = np.clip(result.x, 0.0, None)
    weights /= weights.sum()
    return weights, weights @ G


@dataclass(frozen=True, eq=False)
class CriticalityResult:
    """Distance of the Θ stationarity vectors' convex hull from zero.

    ``residual`` is the norm of the min-norm point itself; ``relative``
    divides it by the largest sampled gradient. ``coefficients`` holds one row per sampled
    direction in the θᵢ cluster basis ``basis``; ``weights`` are the
    minimizing convex weights over those directions.
    """

    residual: float
    relative: float
    weights: FloatArray
    coefficients: FloatArray
    basis: FloatArray
    ground: FloatArray
    gradients: FloatArray
    stationarity: FloatArray
    cluster: tuple[int, ...]
    admissibility: Admissibility | None
    value: float

    @property
    def witnesses(self) -> FloatArray:
        """Sampled eigenfunctions, one column per direction."""
        return self.basis @ self.coefficients.T

    def to_payload(self) -> dict[str, Any]:
        return {
            "residual": self.residual,
            "relative": self.relative,
            "weights": self.weights.tolist(),
            "coefficients": self.coefficients.tolist(),
            "cluster": list(self.cluster),
            "value": self.value,
            "admissibility": (
                self.admissibility.to_payload() if self.admissibility is not None else None
            ),
        }


def sample_directions(size: int, samples: int, seed: int) -> FloatArray:
    """The cluster basis followed by seeded random unit combinations."""
    rows = [np.eye(size)]
    if size > 1 and samples > 0:
        rng = np.random.default_rng(seed)
        random = rng.standard_normal((samples, size))
        rows.append(random / np.linalg.norm(random, axis=1, keepdims=True))
    return np.vstack(rows)


def stationarity_vectors(
    gradient: FunctionalGradient, coefficients: FloatArray
) -> FloatArray:
    """Θ-type gradients with the upper eigenfunction fixed to each sampled combination.

    Row j is G(u₀, uⱼ): the branch gradient in which the clustered
    eigenvalue is replaced by the quadratic form of uⱼ = Σ cₐuₐ.
    """
    (branch,) = gradient.branches
    ground_piece, upper_piece = branch.pieces
    if gradient.area_gradient is None or gradient.length_gradient is None:
        msg = "Stationarity vectors need the measure gradients"
        raise ValueError(msg)
    w0, wi = boundary_weights(gradient.spec)
    alpha1, beta1, alpha2, beta2 = _coefficients(gradient.spec)
    a, A = gradient.boundary_length, gradient.area
    ground = ground_piece.cluster.diagonal_gradients()[ground_piece.position]
    ground_value = float(ground_piece.cluster.eigenvalues[ground_piece.position])
    area_part = alpha2 * beta2 * A ** (beta2 - 1.0) * gradient.area_gradient.vector
    length_vector = alpha1 * beta1 * a ** (beta1 - 1.0) * gradient.length_gradient.vector
    cluster = upper_piece.cluster
    rows = []
    for coeffs in coefficients:
        upper_value = float(coeffs**2 @ cluster.eigenvalues)
        rows.append(
            ground_piece.coefficient * ground
            + upper_piece.coefficient * cluster.quadratic(coeffs)
            + (w0 * ground_value + wi * upper_value) * length_vector
            + area_part
        )
    return np.asarray(rows)


def criticality_residual_theta(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    r: float,
    i: int = 1,
    *,
    dofs: Dofs = "conformal",
    samples: int = SAMPLE_COUNT,
    seed: int = SAMPLE_SEED,
    coefficients: FloatArray | None = None,
    mass_mode: MassMode = "consistent",
    rel_gap: float = DEFAULT_REL_GAP,
) -> CriticalityResult:
    """How far the metric is from satisfying the Θ extremality condition.

    The θᵢ eigenfunction ranges over the cluster basis plus ``samples``
    seeded unit combinations (or the given ``coefficients``); the residual
    is the min-norm point of the resulting stationarity vectors.
    """
    spec = FunctionalSpec(family="theta", r=r, i=i)
    gradient = grad_functional(
        spec, mesh, metric, dofs=dofs, mass_mode=mass_mode, rel_gap=rel_gap
    )
    (branch,) = gradient.branches
    ground_piece, upper_piece = branch.pieces
    cluster = upper_piece.cluster
    if coefficients is None:
        coefficients = sample_directions(cluster.size, samples, seed)
    G = stationarity_vectors(gradient, coefficients)
    weights, point = min_norm_point(G)
    residual = float(np.linalg.norm(point))
    largest = float(np.linalg.norm(G, axis=1).max())
    relative = residual / largest if largest > 0.0 else 0.0
    logger.debug(
        "Θ criticality residual %.3e (relative %.3e) over %d directions in cluster %s",
        residual,
        relative,
        len(coefficients),
        list(cluster.indices),
    )
    return CriticalityResult(
        residual=residual,
        relative=relative,
        weights=weights,
        coefficients=np.asarray(coefficients),
        basis=cluster.basis,
        ground=ground_piece.cluster.basis[:, ground_piece.position],
        gradients=G,
        stationarity=point,
        cluster=cluster.indices,
        admissibility=gradient.admissibility,
        value=gradient.value,
    )


# --------------------------------------------------------------------------
# Eigenvalues along a path of metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenvaluePath:
    ts: FloatArray
    values: FloatArray
    max_difference_quotient: float


def eigenvalue_path(
    mesh: SimplicialMesh,
    metrics: Sequence[DiscreteMetric],
    ts: Sequence[float],
    problem: EigenProblemSpec,
    index: int,
    *,
    mass_mode: MassMode = "consistent",
    threads: int = 1,
) -> EigenvaluePath:
    """Eigenvalue ``index`` of ``problem`` at every metric of a path.

    Reports the largest |Δλ/Δt| between consecutive samples, the observable
    form of the eigenvalue's Lipschitz continuity in the metric.
    """
    if len(metrics) != len(ts):
        msg = f"Got {len(metrics)} metrics for {len(ts)} path parameters"
        raise ValueError(msg)

    def value_at(metric: DiscreteMetric) -> float:
        ops = assemble(mesh, metric, mass_mode=mass_mode)
        return float(solve(ops, problem).eigenvalues[index])

    values = np.asarray(ordered_map(value_at, metrics, threads))
    t = np.asarray(ts, dtype=np.float64)
    quotients = np.abs(np.diff(values) / np.diff(t)) if len(t) > 1 else np.zeros(0)
    return EigenvaluePath(
        ts=t,
        values=values,
        max_difference_quotient=float(quotients.max()) if quotients.size else 0.0,
    )
