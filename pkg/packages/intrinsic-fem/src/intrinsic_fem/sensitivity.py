"""Exact edge-length derivatives of the assembled quadratic forms.

For a triangle with sides l₀, l₁, l₂ (side k opposite vertex k)::

    cot αₖ = (lₖ₊₁² + lₖ₊₂² − lₖ²) / 4A
    ∂A/∂lⱼ = lⱼ cot αⱼ / 2

which give the derivatives of uᵀSv, uᵀMv and uᵀBv with respect to every
edge length without ever forming derivative matrices. Gradients are
returned per edge of ``mesh.edges`` (induced lengths) and can be pulled
back to per-vertex conformal factors with :func:`conformal_pullback`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .assembly import MassMode, TriangleGeometry
    from .mesh import DiscreteMetric, FloatArray, SimplicialMesh

_NEXT = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])


def area_jacobian(geometry: TriangleGeometry) -> FloatArray:
    """∂A/∂lⱼ per triangle, shape ``(F, 3)``."""
    return 0.5 * geometry.lengths * geometry.cotangents


def cotangent_jacobian(geometry: TriangleGeometry) -> FloatArray:
    """∂cot αₖ/∂lⱼ per triangle, indexed ``[f, k, j]``."""
    lengths = geometry.lengths
    areas = geometry.areas[:, None, None]
    sign = np.where(np.eye(3, dtype=bool), -1.0, 1.0)
    numerator_jac = 2.0 * sign[None, :, :] * lengths[:, None, :]
    dA = area_jacobian(geometry)[:, None, :]
    return numerator_jac / (4.0 * areas) - geometry.cotangents[:, :, None] * dA / areas


def _scatter(mesh: SimplicialMesh, metric: DiscreteMetric, local: FloatArray) -> FloatArray:
    scale = metric.triangle_scale(mesh)[:, None]
    return np.bincount(
        mesh.triangle_edges.ravel(),
        weights=(local * scale).ravel(),
        minlength=mesh.edge_count,
    )


@dataclass(frozen=True, eq=False)
class FormGradient:
    """Edge-length gradient of a quadratic form, split by where it comes from."""

    interior: FloatArray
    boundary: FloatArray

    @property
    def total(self) -> FloatArray:
        return self.interior + self.boundary


def form_gradient(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    geometry: TriangleGeometry,
    u: FloatArray,
    v: FloatArray,
    *,
    stiffness: float = 1.0,
    mass: float = 0.0,
    boundary: float = 0.0,
    mass_mode: MassMode = "consistent",
) -> FormGradient:
    """Gradient of uᵀ(s·S + m·M + b·B)v with respect to the edge lengths."""
    tris = mesh.triangles
    interior_local = np.zeros((mesh.face_count, 3))
    if stiffness:
        du = u[tris[:, _NEXT]] - u[tris[:, _PREV]]
        dv = v[tris[:, _NEXT]] - v[tris[:, _PREV]]
        jac = cotangent_jacobian(geometry)
        interior_local += stiffness * 0.5 * np.einsum("fkj,fk->fj", jac, du * dv)
    if mass:
        uu, vv = u[tris], v[tris]
        if mass_mode == "consistent":
            pairing = ((uu * vv).sum(axis=1) + uu.sum(axis=1) * vv.sum(axis=1)) / 12.0
        else:
            pairing = (uu * vv).sum(axis=1) / 3.0
        interior_local += mass * area_jacobian(geometry) * pairing[:, None]
    interior = _scatter(mesh, metric, interior_local)

    boundary_grad = np.zeros(mesh.edge_count)
    if boundary:
        a, b = mesh.boundary_edge_pairs[:, 0], mesh.boundary_edge_pairs[:, 1]
        if mass_mode == "consistent":
            pairing = (
                2.0 * u[a] * v[a] + 2.0 * u[b] * v[b] + u[a] * v[b] + u[b] * v[a]
            ) / 6.0
        else:
            pairing = (u[a] * v[a] + u[b] * v[b]) / 2.0
        scale = metric.triangle_scale(mesh)[mesh.boundary_edge_faces]
        boundary_grad[mesh.boundary_edges] = boundary * pairing * scale
    return FormGradient(interior=interior, boundary=boundary_grad)


def area_gradient(
    mesh: SimplicialMesh, metric: DiscreteMetric, geometry: TriangleGeometry
) -> FloatArray:
    """∂A/∂ℓₑ for the total area."""
    return _scatter(mesh, metric, area_jacobian(geometry))


def boundary_length_gradient(mesh: SimplicialMesh, metric: DiscreteMetric) -> FloatArray:
    """∂a/∂ℓₑ for the total boundary length."""
    grad = np.zeros(mesh.edge_count)
    grad[mesh.boundary_edges] = metric.triangle_scale(mesh)[mesh.boundary_edge_faces]
    return grad


def conformal_pullback(
    mesh: SimplicialMesh, metric: DiscreteMetric, edge_gradient: FloatArray
) -> FloatArray:
    """Chain rule to per-vertex log-factors: ∂ℓᵢⱼ/∂φᵢ = ℓᵢⱼ/2."""
    half = 0.5 * edge_gradient * metric.edge_lengths(mesh)
    return np.bincount(
        mesh.edges.ravel(),
        weights=np.repeat(half, 2),
        minlength=mesh.vertex_count,
    )


def p1_gradients(
    mesh: SimplicialMesh, geometry: TriangleGeometry, u: FloatArray
) -> FloatArray:
    """Gradient of the piecewise-linear interpolant of ``u`` per triangle.

    Expressed in an orthonormal frame of each triangle with vertex 0 at the
    origin and vertex 1 on the first axis; shape ``(F, 2)``.
    """
    l0, l1, l2 = geometry.lengths.T
    x2 = (l2**2 + l1**2 - l0**2) / (2.0 * l2)
    y2 = 2.0 * geometry.areas / l2
    uu = u[mesh.triangles]
    d1 = uu[:, 1] - uu[:, 0]
    d2 = uu[:, 2] - uu[:, 0]
    gx = d1 / l2
    gy = (d2 - x2 * gx) / y2
    return np.column_stack([gx, gy])


def triangle_mean_square(mesh: SimplicialMesh, u: FloatArray) -> FloatArray:
    """Mean of u² over each triangle for the piecewise-linear interpolant."""
    uu = u[mesh.triangles]
    return ((uu**2).sum(axis=1) + uu.sum(axis=1) ** 2) / 12.0
