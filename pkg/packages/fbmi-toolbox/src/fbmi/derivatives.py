"""Metric derivatives of Robin and frequency-Steklov eigenvalues.

For a simple eigenvalue the derivative is the Hellmann–Feynman identity of
the discrete pencil, contracted with the exact edge-length derivatives of
the element matrices (:func:`intrinsic_fem.sensitivity.form_gradient`):

* Robin, M-normalized u: ``dλ = uᵀ(∂S − σ∂B − λ∂M)u``
* Steklov, B-normalized u: ``dθ = uᵀ(∂S − c∂M − θ∂B)u``

For a clustered eigenvalue the same bilinear forms over the cluster basis
give one symmetric m×m matrix per degree of freedom
(:class:`ClusterGradient`); the one-sided directional derivatives of the
cluster are the sorted eigenvalues of its contraction with a direction.

Degrees of freedom are either the induced edge lengths or the per-vertex
conformal log-factors φ, reached through the chain rule ∂ℓᵢⱼ/∂φᵢ = ℓᵢⱼ/2.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from intrinsic_fem.assembly import triangle_geometry
from intrinsic_fem.sensitivity import (
    area_gradient,
    boundary_length_gradient,
    conformal_pullback,
    form_gradient,
    p1_gradients,
    triangle_mean_square,
)

from .constants import DEFAULT_REL_GAP
from .errors import ClusteredEigenvalueError
from .spectra import covering_spectrum, freq_steklov_spectrum, robin_spectrum

if TYPE_CHECKING:
    from intrinsic_fem import OperatorSet
    from intrinsic_fem.assembly import TriangleGeometry
    from intrinsic_fem.mesh import DiscreteMetric, FloatArray, SimplicialMesh

    from .config import Dofs
    from .spectra import Spectrum

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Degrees of freedom
# --------------------------------------------------------------------------


def dof_count(mesh: SimplicialMesh, dofs: Dofs) -> int:
    return mesh.vertex_count if dofs == "conformal" else mesh.edge_count


def dof_vector(mesh: SimplicialMesh, metric: DiscreteMetric, dofs: Dofs) -> FloatArray:
    """Current values of the degrees of freedom of ``metric``."""
    if dofs == "conformal":
        if metric.log_factor is None:
            return np.zeros(mesh.vertex_count)
        return metric.log_factor.copy()
    return metric.edge_lengths(mesh).copy()


def metric_from_dofs(
    mesh: SimplicialMesh, metric: DiscreteMetric, x: FloatArray, dofs: Dofs
) -> DiscreteMetric:
    """``metric`` with its degrees of freedom replaced by ``x``.

    Conformal DOFs keep the base lengths; edge-length DOFs drop any
    conformal factor. A per-triangle factor is kept either way.
    """
    if dofs == "conformal":
        return metric.with_log_factor(mesh, x)
    return metric.with_edge_lengths(x)


def _pullback(
    mesh: SimplicialMesh, metric: DiscreteMetric, edge_gradient: FloatArray, dofs: Dofs
) -> FloatArray:
    if dofs == "conformal":
        return conformal_pullback(mesh, metric, edge_gradient)
    return edge_gradient


# --------------------------------------------------------------------------
# Gradient containers
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricGradient:
    """Gradient of a spectral quantity with respect to the metric DOFs.

    ``interior_vector`` and ``boundary_vector`` split the gradient into the
    parts coming from the interior forms (S, M, A) and from the boundary
    forms (B, a). ``interior_tensor_field`` holds one symmetric 2×2 tensor
    per triangle in the triangle's orthonormal frame and
    ``boundary_density`` one value per boundary vertex (ordered like
    ``mesh.boundary_vertices``); both are reporting structures.
    """

    dofs: Dofs
    interior_vector: FloatArray
    boundary_vector: FloatArray
    interior_tensor_field: FloatArray
    boundary_density: FloatArray

    @property
    def vector(self) -> FloatArray:
        return self.interior_vector + self.boundary_vector

    def directional(self, h: FloatArray) -> float:
        return float(self.vector @ h)

    def scaled(self, factor: float) -> MetricGradient:
        return combine([(factor, self)])

    def to_payload(self, *, fields: bool = False) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "dofs": self.dofs,
            "norm": float(np.linalg.norm(self.vector)),
            "vector": self.vector.tolist(),
        }
        if fields:
            payload["interior_tensor_field"] = self.interior_tensor_field.tolist()
            payload["boundary_density"] = self.boundary_density.tolist()
        return payload


def combine(terms: Iterable[tuple[float, MetricGradient]]) -> MetricGradient:
    """Linear combination Σ cᵢ·gᵢ of gradients over the same DOFs."""
    items = list(terms)

    def mix(attribute: str) -> FloatArray:
        total = np.zeros_like(getattr(items[0][1], attribute))
        for c, g in items:
            total = total + c * getattr(g, attribute)
        return total

    return MetricGradient(
        dofs=items[0][1].dofs,
        interior_vector=mix("interior_vector"),
        boundary_vector=mix("boundary_vector"),
        interior_tensor_field=mix("interior_tensor_field"),
        boundary_density=mix("boundary_density"),
    )


@dataclass(frozen=True, eq=False)
class ClusterGradient:
    """Bilinear derivatives of one eigenvalue cluster over its basis.

    ``matrices[d]`` is the symmetric m×m matrix of ``u_aᵀ ∂P u_b`` for DOF
    d, taken at the cluster's mean eigenvalue ``value``. For a simple
    eigenvalue (m = 1) it reduces to the ordinary gradient.
    """

    dofs: Dofs
    indices: tuple[int, ...]
    value: float
    eigenvalues: FloatArray
    basis: FloatArray
    matrices: FloatArray

    @property
    def size(self) -> int:
        return len(self.indices)

    def contraction(self, h: FloatArray) -> FloatArray:
        block = np.einsum("d,dab->ab", h, self.matrices)
        return 0.5 * (block + block.T)

    def directional(self, h: FloatArray) -> FloatArray:
        """Right derivatives of the cluster's eigenvalues along ``h``, ascending."""
        return np.linalg.eigvalsh(self.contraction(h))

    def quadratic(self, coefficients: FloatArray) -> FloatArray:
        """Gradient of the quadratic form at the basis combination Σ cₐuₐ."""
        return np.einsum("dab,a,b->d", self.matrices, coefficients, coefficients)

    def diagonal_gradients(self) -> FloatArray:
        """Gradient of each basis direction's quadratic form, shape (m, DOFs)."""
        return np.einsum("daa->ad", self.matrices)


# --------------------------------------------------------------------------
# Pencil weights and reporting fields
# --------------------------------------------------------------------------


def _pencil_weights(spectrum: Spectrum, value: float) -> dict[str, float]:
    """Coefficients of ∂S, ∂M, ∂B in the derivative of one eigenvalue."""
    match spectrum.kind:
        case "robin":
            return {"stiffness": 1.0, "mass": -value, "boundary": -spectrum.param}
        case "freq_steklov":
            return {"stiffness": 1.0, "mass": -spectrum.param, "boundary": -value}
        case _:
            return {"stiffness": 1.0, "mass": -value, "boundary": 0.0}


def _fields(
    mesh: SimplicialMesh,
    geometry: TriangleGeometry,
    u: FloatArray,
    *,
    frequency: float,
    boundary_coefficient: float,
) -> tuple[FloatArray, FloatArray]:
    """Per-triangle ½(|∇u|² − q·u²)g − du⊗du and per-boundary-vertex −½·p·u²."""
    grad = p1_gradients(mesh, geometry, u)
    square = (grad**2).sum(axis=1)
    trace_part = 0.5 * (square - frequency * triangle_mean_square(mesh, u))
    tensor = trace_part[:, None, None] * np.eye(2) - np.einsum("fi,fj->fij", grad, grad)
    density = -0.5 * boundary_coefficient * u[mesh.boundary_vertices] ** 2
    return tensor, density


def _eigen_gradient(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    geometry: TriangleGeometry,
    spectrum: Spectrum,
    index: int,
    *,
    dofs: Dofs,
    mass_mode: str,
) -> MetricGradient:
    u = spectrum.eigenvectors[:, index]
    value = float(spectrum.eigenvalues[index])
    weights = _pencil_weights(spectrum, value)
    parts = form_gradient(mesh, metric, geometry, u, u, mass_mode=mass_mode, **weights)  # type: ignore[arg-type]
    if spectrum.kind == "freq_steklov":
        frequency, boundary = spectrum.param, value
    else:
        frequency, boundary = value, spectrum.param
    tensor, density = _fields(
        mesh, geometry, u, frequency=frequency, boundary_coefficient=boundary
    )
    return MetricGradient(
        dofs=dofs,
        interior_vector=_pullback(mesh, metric, parts.interior, dofs),
        boundary_vector=_pullback(mesh, metric, parts.boundary, dofs),
        interior_tensor_field=tensor,
        boundary_density=density,
    )


def eigenvalue_gradient(
    ops: OperatorSet,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    spectrum: Spectrum,
    index: int,
    *,
    dofs: Dofs = "edge_lengths",
) -> MetricGradient:
    """Gradient of a simple eigenvalue of an already computed spectrum."""
    cluster = spectrum.cluster_of(index)
    if len(cluster) > 1:
        raise ClusteredEigenvalueError(index, cluster)
    geometry = triangle_geometry(mesh, metric)
    return _eigen_gradient(
        mesh, metric, geometry, spectrum, index, dofs=dofs, mass_mode=ops.mass_mode
    )


def cluster_gradient(
    ops: OperatorSet,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    spectrum: Spectrum,
    index: int,
    *,
    dofs: Dofs = "edge_lengths",
) -> ClusterGradient:
    """Bilinear derivative matrices of the cluster containing ``index``."""
    cluster = spectrum.cluster_of(index)
    geometry = triangle_geometry(mesh, metric)
    values = spectrum.eigenvalues[list(cluster)]
    mean = float(values.mean())
    weights = _pencil_weights(spectrum, mean)
    basis = spectrum.eigenvectors[:, list(cluster)]
    m = len(cluster)
    matrices = np.empty((dof_count(mesh, dofs), m, m))
    for a in range(m):
        for b in range(a, m):
            total = form_gradient(
                mesh,
                metric,
                geometry,
                basis[:, a],
                basis[:, b],
                mass_mode=ops.mass_mode,
                **weights,  # type: ignore[arg-type]
            ).total
            column = _pullback(mesh, metric, total, dofs)
            matrices[:, a, b] = column
            matrices[:, b, a] = column
    if m > 1:
        logger.debug("Cluster gradient over %s at %.10g", list(cluster), mean)
    return ClusterGradient(
        dofs=dofs,
        indices=cluster,
        value=mean,
        eigenvalues=values,
        basis=basis,
        matrices=matrices,
    )


def measure_gradients(
    mesh: SimplicialMesh, metric: DiscreteMetric, *, dofs: Dofs
) -> tuple[MetricGradient, MetricGradient]:
    """Gradients of the area A and the boundary length a."""
    geometry = triangle_geometry(mesh, metric)
    nb = mesh.boundary_vertices.size
    zero_dofs = np.zeros(dof_count(mesh, dofs))
    half_identity = np.broadcast_to(0.5 * np.eye(2), (mesh.face_count, 2, 2)).copy()
    area = MetricGradient(
        dofs=dofs,
        interior_vector=_pullback(mesh, metric, area_gradient(mesh, metric, geometry), dofs),
        boundary_vector=zero_dofs,
        interior_tensor_field=half_identity,
        boundary_density=np.zeros(nb),
    )
    length = MetricGradient(
        dofs=dofs,
        interior_vector=zero_dofs,
        boundary_vector=_pullback(mesh, metric, boundary_length_gradient(mesh, metric), dofs),
        interior_tensor_field=np.zeros((mesh.face_count, 2, 2)),
        boundary_density=np.full(nb, 0.5),
    )
    return area, length


# --------------------------------------------------------------------------
# Public eigenvalue derivatives
# --------------------------------------------------------------------------


def grad_robin_eigenvalue(
    ops: OperatorSet,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    sigma: float,
    index: int,
    *,
    dofs: Dofs = "edge_lengths",
    rel_gap: float = DEFAULT_REL_GAP,
) -> MetricGradient:
    """dλᵢ(g, σ) for a simple Robin eigenvalue; raises if it is clustered."""
    spectrum = covering_spectrum(
        lambda count: robin_spectrum(ops, sigma, count, rel_gap=rel_gap), index, ops.size
    )
    return eigenvalue_gradient(ops, mesh, metric, spectrum, index, dofs=dofs)


def grad_freq_steklov_eigenvalue(
    ops: OperatorSet,
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    c: float,
    index: int,
    *,
    dofs: Dofs = "edge_lengths",
    rel_gap: float = DEFAULT_REL_GAP,
) -> MetricGradient:
    """dθᵢ at frequency c for a simple eigenvalue; raises if it is clustered."""
    spectrum = covering_spectrum(
        lambda count: freq_steklov_spectrum(ops, c, count, rel_gap=rel_gap),
        index,
        int(ops.boundary_vertices.size),
    )
    return eigenvalue_gradient(ops, mesh, metric, spectrum, index, dofs=dofs)
