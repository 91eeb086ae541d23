"""Numerical certificates for free boundary minimal immersions.

* :func:`cap_reference`: closed-form spectral data of a geodesic ball in
  the sphere or in hyperbolic space.
* :func:`fbmi_certificate`: rebuild a candidate immersion (v₀, v₁, …, v_m)
  from the ground eigenfunction and the i-th eigenspace of a metric and
  measure how far it is from being a free boundary minimal immersion.
* :func:`degeneration_experiment`: concentrate the metric along the
  boundary and watch Ξ⁻ fall without bound.
* :func:`xi_plus_upper_bound`: the topological upper bound for Ξ⁺_{r,1}.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
from intrinsic_fem.assembly import assemble, triangle_geometry
from intrinsic_fem.errors import DegenerateTriangleError
from intrinsic_fem.mesh import attach_collar, boundary_distance, measures, topology
from intrinsic_fem.sensitivity import p1_gradients
from scipy.integrate import quad
from scipy.special import gamma

from .config import FunctionalSpec, Geometry
from .constants import DEFAULT_EPSILONS, DEFAULT_REL_GAP, STRIP_ASPECT_LIMIT
from .errors import NoCandidateImmersionError, StripUnresolvableError
from .functionals import eval_functional
from .parallel import ordered_map
from .spectra import covering_spectrum, freq_steklov_spectrum

if TYPE_CHECKING:
    from intrinsic_fem.assembly import MassMode
    from intrinsic_fem.mesh import DiscreteMetric, FloatArray, SimplicialMesh

logger = logging.getLogger(__name__)

# Q eigenvalues below this fraction of the largest count as zero.
_RANK_TOLERANCE = 1e-8

# The full fit must beat the best rank-one fit by this factor.
_RANK_ONE_MARGIN = 10.0


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CapReference:
    """Spectral data of the geodesic ball of radius r in Sᵏ or Hᵏ.

    For the spherical cap ``theta0``/``theta1`` are the Steklov eigenvalues
    at frequency k; for the hyperbolic ball they are the ω eigenvalues at
    frequency −k. ``robin_value`` is the Robin eigenvalue λ shared by the
    coordinate functions (k on the sphere, −k in hyperbolic space).
    """

    r: float
    k: int
    geometry: Geometry
    theta0: float
    theta1: float
    multiplicity: int
    robin_value: float
    area: float
    boundary_length: float
    xi_value: float
    theta_value: float

    @property
    def cancellation(self) -> float:
        """The boundary coefficient of Θ (or Ω), identically zero."""
        if self.geometry == "spherical":
            return self.theta0 * math.cos(self.r) ** 2 + self.theta1 * math.sin(self.r) ** 2
        return -self.theta0 * math.cosh(self.r) ** 2 + self.theta1 * math.sinh(self.r) ** 2

    def to_payload(self) -> dict[str, Any]:
        return {
            "r": self.r,
            "k": self.k,
            "geometry": self.geometry,
            "theta0": self.theta0,
            "theta1": self.theta1,
            "multiplicity": self.multiplicity,
            "robin_value": self.robin_value,
            "area": self.area,
            "boundary_length": self.boundary_length,
            "xi_value": self.xi_value,
            "theta_value": self.theta_value,
        }


def _sphere_measure(k: int) -> float:
    """|Sᵏ⁻¹|."""
    return 2.0 * math.pi ** (k / 2) / float(gamma(k / 2))


def _ball_measures(r: float, k: int, geometry: Geometry) -> tuple[float, float]:
    profile = math.sin if geometry == "spherical" else math.sinh
    sphere = _sphere_measure(k)
    boundary = sphere * profile(r) ** (k - 1)
    if k == 2:
        radial = 1.0 - math.cos(r) if geometry == "spherical" else math.cosh(r) - 1.0
    else:
        radial, _ = quad(lambda s: profile(s) ** (k - 1), 0.0, r)
    return sphere * radial, boundary


def cap_reference(r: float, k: int = 2, geometry: Geometry = "spherical") -> CapReference:
    """Closed-form values for the geodesic ball of radius ``r``."""
    if k < 2:
        msg = f"Dimension k must be at least 2, got {k}"
        raise ValueError(msg)
    if geometry == "spherical":
        if not 0.0 < r < math.pi / 2:
            msg = f"Spherical cap radius must lie in (0, π/2), got {r}"
            raise ValueError(msg)
        theta0, theta1, robin = -math.tan(r), 1.0 / math.tan(r), float(k)
    else:
        if not r > 0.0:
            msg = f"Hyperbolic ball radius must be positive, got {r}"
            raise ValueError(msg)
        theta0, theta1, robin = math.tanh(r), 1.0 / math.tanh(r), -float(k)
    area, boundary = _ball_measures(r, k, geometry)
    return CapReference(
        r=r,
        k=k,
        geometry=geometry,
        theta0=theta0,
        theta1=theta1,
        multiplicity=k,
        robin_value=robin,
        area=area,
        boundary_length=boundary,
        xi_value=robin * area ** (2.0 / k),
        theta_value=2.0 * area,
    )


def xi_plus_upper_bound(genus: int, boundary_components: int, r: float) -> float:
    """4π(1 − cos r)(γ + l), the bound on Ξ⁺_{r,1} for a surface of genus γ with l boundaries."""
    return 4.0 * math.pi * (1.0 - math.cos(r)) * (genus + boundary_components)


@dataclass(frozen=True)
class UpperBoundCheck:
    value: float
    bound: float
    genus: int
    boundary_components: int

    @property
    def holds(self) -> bool:
        return self.value <= self.bound

    @property
    def ratio(self) -> float:
        return self.value / self.bound

    def to_payload(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "bound": self.bound,
            "ratio": self.ratio,
            "holds": self.holds,
            "genus": self.genus,
            "boundary_components": self.boundary_components,
        }


def check_upper_bound(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    r: float,
    *,
    mass_mode: MassMode = "consistent",
) -> UpperBoundCheck:
    """Evaluate Ξ⁺_{r,1} and compare it with the topological bound."""
    report = topology(mesh)
    value = eval_functional(
        FunctionalSpec(family="xi_plus", r=r, i=1), mesh, metric, mass_mode=mass_mode
    ).value
    bound = xi_plus_upper_bound(report.genus, report.boundary_components, r)
    return UpperBoundCheck(
        value=value,
        bound=bound,
        genus=report.genus,
        boundary_components=report.boundary_components,
    )


# --------------------------------------------------------------------------
# Immersion certificate
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Certificate:
    """Candidate immersion v = (v₀, v₁, …, v_m) and its defect residuals.

    ``functions`` holds v₀ in column 0 and v₁ … v_m after it.
    ``mixing_form`` is the fitted positive semidefinite Q over the cluster
    basis; ``mixing`` are its normalized eigenvalues t_j.
    """

    geometry: Geometry
    r: float
    i: int
    cluster: tuple[int, ...]
    functions: FloatArray
    mixing: FloatArray
    mixing_form: FloatArray
    sphere_residual: float
    metric_residual: float
    boundary_residual: float
    eigenvalue_residuals: dict[str, float]
    fit_residual: float
    rank_one_residual: float

    @property
    def ambient_dimension(self) -> int:
        return int(self.functions.shape[1]) - 1

    def to_payload(self, *, functions: bool = False) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "geometry": self.geometry,
            "r": self.r,
            "i": self.i,
            "cluster": list(self.cluster),
            "ambient_dimension": self.ambient_dimension,
            "mixing": self.mixing.tolist(),
            "mixing_form": self.mixing_form.tolist(),
            "residuals": {
                "sphere": self.sphere_residual,
                "metric": self.metric_residual,
                "boundary": self.boundary_residual,
                "eigenvalues": dict(self.eigenvalue_residuals),
            },
            "fit_residual": self.fit_residual,
            "rank_one_residual": self.rank_one_residual,
        }
        if functions:
            payload["functions"] = self.functions.tolist()
        return payload


def _design_matrix(basis: FloatArray) -> tuple[FloatArray, list[tuple[int, int]]]:
    """Columns uₐu_b (a ≤ b, doubled off the diagonal) for fitting uᵀQu."""
    m = basis.shape[1]
    pairs = [(a, b) for a in range(m) for b in range(a, m)]
    columns = [
        basis[:, a] * basis[:, b] * (1.0 if a == b else 2.0) for a, b in pairs
    ]
    return np.column_stack(columns), pairs


def _weighted_rms(values: FloatArray, weights: FloatArray) -> float:
    return float(np.sqrt((weights * values**2).sum() / weights.sum()))


def _fit_mixing_form(
    basis: FloatArray, target: FloatArray, weights: FloatArray
) -> FloatArray:
    """Least-squares symmetric Q with uᵀQu ≈ target, clipped to be PSD."""
    design, pairs = _design_matrix(basis)
    root = np.sqrt(weights)
    coefficients, *_ = np.linalg.lstsq(design * root[:, None], target * root, rcond=None)
    m = basis.shape[1]
    Q = np.zeros((m, m))
    for (a, b), value in zip(pairs, coefficients, strict=True):
        Q[a, b] = Q[b, a] = value
    mu, vectors = np.linalg.eigh(Q)
    return (vectors * np.clip(mu, 0.0, None)) @ vectors.T


def _rank_one_residual(
    basis: FloatArray, Q: FloatArray, target: FloatArray, weights: FloatArray
) -> float:
    """Best weighted residual of α·(u·q)² over the eigenvectors q of Q."""
    _, vectors = np.linalg.eigh(Q)
    best = math.inf
    for q in vectors.T:
        profile = (basis @ q) ** 2
        denom = float((weights * profile**2).sum())
        alpha = float((weights * profile * target).sum()) / denom if denom > 0.0 else 0.0
        best = min(best, _weighted_rms(alpha * profile - target, weights))
    return best


def _metric_residual(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    functions: FloatArray,
    signs: FloatArray,
) -> float:
    """max over triangles of ‖Σ ±∇vⱼ∇vⱼᵀ − I‖_F / √2 in an orthonormal frame."""
    geometry = triangle_geometry(mesh, metric)
    pullback = np.zeros((mesh.face_count, 2, 2))
    for column, sign in zip(functions.T, signs, strict=True):
        grad = p1_gradients(mesh, geometry, column)
        pullback += sign * np.einsum("fa,fb->fab", grad, grad)
    gap = pullback - np.eye(2)
    return float(np.sqrt((gap**2).sum(axis=(1, 2))).max() / math.sqrt(2.0))


def fbmi_certificate(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    r: float,
    i: int = 1,
    geometry: Geometry = "spherical",
    *,
    mass_mode: MassMode = "consistent",
    rel_gap: float = DEFAULT_REL_GAP,
) -> Certificate:
    """Reconstruct a candidate immersion and measure its residuals.

    v₀ = √a·cos r·u₀ (cosh r for hyperbolic) from the ground Steklov
    eigenfunction at frequency 2 (−2). The remaining coordinates come from
    a PSD form Q fitted over the i-th eigenspace so that Σvⱼ² matches
    1 − v₀² (v₀² − 1); factoring Q gives the vⱼ and the mixing tⱼ.
    """
    spherical = geometry == "spherical"
    reference = cap_reference(r, 2, geometry)
    c = 2.0 if spherical else -2.0
    ops = assemble(mesh, metric, mass_mode=mass_mode)
    spectrum = covering_spectrum(
        lambda n: freq_steklov_spectrum(ops, c, n, rel_gap=rel_gap),
        i,
        int(ops.boundary_vertices.size),
    )
    a = ops.boundary_length
    cluster = spectrum.cluster_of(i)
    u0 = spectrum.eigenvectors[:, 0]
    if u0.sum() < 0.0:
        u0 = -u0
    height = math.cos(r) if spherical else math.cosh(r)
    v0 = math.sqrt(a) * height * u0
    target = 1.0 - v0**2 if spherical else v0**2 - 1.0

    basis = spectrum.eigenvectors[:, list(cluster)]
    weights = np.asarray(ops.mass.sum(axis=1)).ravel()
    Q = _fit_mixing_form(basis, target, weights)
    mu, vectors = np.linalg.eigh(Q)
    order = np.argsort(mu)[::-1]
    mu, vectors = mu[order], vectors[:, order]
    rank = int((mu > _RANK_TOLERANCE * max(float(mu[0]), 0.0)).sum()) if mu[0] > 0.0 else 0

    fit = _weighted_rms(np.einsum("va,ab,vb->v", basis, Q, basis) - target, weights)
    rank_one = _rank_one_residual(basis, Q, target, weights)
    logger.debug(
        "Mixing form over cluster %s: eigenvalues %s, fit %.3e, best rank one %.3e",
        list(cluster),
        mu.tolist(),
        fit,
        rank_one,
    )
    if rank < 2 or fit * _RANK_ONE_MARGIN > rank_one:
        msg = (
            f"No candidate immersion from cluster {list(cluster)}: rank {rank}, "
            f"fit residual {fit:.3e} against best rank-one {rank_one:.3e}"
        )
        raise NoCandidateImmersionError(msg)

    mu, vectors = mu[:rank], vectors[:, :rank]
    coordinates = (basis @ vectors) * np.sqrt(mu)
    functions = np.column_stack([v0, coordinates])
    signs = np.ones(rank + 1)
    if not spherical:
        signs[0] = -1.0

    quadratic = (signs * functions**2).sum(axis=1)
    sphere = float(np.abs(quadratic - (1.0 if spherical else -1.0)).max())
    boundary = float(np.abs(v0[ops.boundary_vertices] - height).max())
    metric_gap = _metric_residual(mesh, metric, functions, signs)

    prefix = "theta" if spherical else "omega"
    targets = (reference.theta0, reference.theta1)
    values = (float(spectrum.eigenvalues[0]), float(spectrum.eigenvalues[i]))
    eigenvalue_residuals = {
        f"{prefix}_0": abs(values[0] - targets[0]) / abs(targets[0]),
        f"{prefix}_i": abs(values[1] - targets[1]) / abs(targets[1]),
    }
    return Certificate(
        geometry=geometry,
        r=r,
        i=i,
        cluster=cluster,
        functions=functions,
        mixing=mu / mu.sum(),
        mixing_form=Q,
        sphere_residual=sphere,
        metric_residual=metric_gap,
        boundary_residual=boundary,
        eigenvalue_residuals=eigenvalue_residuals,
        fit_residual=fit,
        rank_one_residual=rank_one,
    )


# --------------------------------------------------------------------------
# Boundary concentration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DegenerationRow:
    epsilon: float
    xi_minus: float
    lambda_0: float
    lambda_i: float
    strip_vertices: int
    collar_width: float
    area: float
    predicted_area: float

    def to_payload(self) -> dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "xi_minus": self.xi_minus,
            "lambda_0": self.lambda_0,
            "lambda_i": self.lambda_i,
            "strip_vertices": self.strip_vertices,
            "collar_width": self.collar_width,
            "area": self.area,
            "predicted_area": self.predicted_area,
        }


@dataclass(frozen=True)
class DegenerationTable:
    r: float
    i: int
    rows: list[DegenerationRow] = field(default_factory=list)

    @property
    def strictly_decreasing(self) -> bool:
        values = [row.xi_minus for row in self.rows]
        return all(b < a for a, b in zip(values, values[1:], strict=False))

    def to_payload(self) -> dict[str, Any]:
        return {
            "r": self.r,
            "i": self.i,
            "strictly_decreasing": self.strictly_decreasing,
            "rows": [row.to_payload() for row in self.rows],
        }


def _check_epsilons(epsilons: Sequence[float]) -> None:
    if not epsilons:
        msg = "At least one epsilon is required"
        raise ValueError(msg)
    for eps in epsilons:
        if not 0.0 < eps <= 1.0:
            msg = f"Epsilon must lie in (0, 1], got {eps}"
            raise ValueError(msg)
    if any(b >= a for a, b in zip(epsilons, epsilons[1:], strict=False)):
        msg = f"Epsilons must be strictly decreasing, got {list(epsilons)}"
        raise ValueError(msg)


def degenerate_metric(
    mesh: SimplicialMesh, metric: DiscreteMetric, epsilon: float
) -> tuple[SimplicialMesh, DiscreteMetric, int, float]:
    """The boundary-concentrated metric g_ε.

    A flat collar of width min(πε⁴, ε²) is glued along ∂Σ, then every
    triangle whose vertices all lie within ε² of the new boundary is scaled
    by 1/ε. The collar then carries area πε²·a, so the area of g_ε equals
    |Σ| + πε²·a by construction whenever no original triangle falls inside
    the strip. A match against that prediction checks the collar and strip
    bookkeeping only; it says nothing about how fast the area of a smooth
    boundary-concentrated family converges. Returns the mesh, the metric,
    the strip vertex count and the collar width (0 for ε = 1).
    """
    if epsilon == 1.0:
        strip = int((boundary_distance(mesh, metric) <= 1.0).sum())
        return mesh, metric, strip, 0.0

    width = min(math.pi * epsilon**4, epsilon**2)
    longest = float(metric.boundary_lengths(mesh).max())
    if width / longest < STRIP_ASPECT_LIMIT:
        raise StripUnresolvableError(
            epsilon, f"collar width {width:.3e} against boundary edges up to {longest:.3e}"
        )
    collar = attach_collar(mesh, metric, width)
    distance = boundary_distance(collar.mesh, collar.metric)
    inside = distance <= epsilon**2 * (1.0 + 1e-12)
    in_strip = inside[collar.mesh.triangles].all(axis=1)
    factor = np.where(in_strip, -math.log(epsilon), 0.0)
    if collar.metric.triangle_log_factor is not None:
        factor = factor + collar.metric.triangle_log_factor
    degenerated = collar.metric.with_triangle_log_factor(factor)
    logger.debug(
        "ε=%g: collar width %.3e, %d strip vertices, %d scaled triangles",
        epsilon,
        width,
        int(inside.sum()),
        int(in_strip.sum()),
    )
    return collar.mesh, degenerated, int(inside.sum()), width


def degeneration_experiment(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    r: float,
    i: int = 1,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    *,
    mass_mode: MassMode = "consistent",
    threads: int = 1,
) -> DegenerationTable:
    """Ξ⁻_{r,i} along the boundary-concentrated family g_ε."""
    _check_epsilons(epsilons)
    spec = FunctionalSpec(family="xi_minus", r=r, i=i)
    base = measures(mesh, metric)
    a = base.boundary_length

    def row(epsilon: float) -> DegenerationRow:
        family_mesh, family_metric, strip, width = degenerate_metric(mesh, metric, epsilon)
        try:
            report = eval_functional(spec, family_mesh, family_metric, mass_mode=mass_mode)
        except DegenerateTriangleError as e:
            raise StripUnresolvableError(epsilon, str(e)) from e
        return DegenerationRow(
            epsilon=epsilon,
            xi_minus=report.value,
            lambda_0=report.eigenvalues["lambda_0"].value,
            lambda_i=report.eigenvalues["lambda_i"].value,
            strip_vertices=strip,
            collar_width=width,
            area=report.area,
            predicted_area=base.area + (math.pi * epsilon**2 * a if width else 0.0),
        )

    rows = ordered_map(row, epsilons, threads)
    table = DegenerationTable(r=r, i=i, rows=rows)
    if not table.strictly_decreasing:
        logger.warning("Ξ⁻ is not strictly decreasing along ε=%s", list(epsilons))
    return table
