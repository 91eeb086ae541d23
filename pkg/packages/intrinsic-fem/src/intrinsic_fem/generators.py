"""Reference meshes: geodesic caps, hyperbolic balls, flat disks and squares."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from .errors import MeshError
from .mesh import DiscreteMetric, SimplicialMesh

if TYPE_CHECKING:
    from .mesh import Embedding, FloatArray, IntArray


def polar_layout(refinement: int) -> tuple[IntArray, IntArray, IntArray]:
    """Concentric-ring triangulation of a disk.

    Ring ``j`` (``1 ≤ j ≤ refinement``) carries ``6j`` vertices at angles
    ``2πk/(6j)``; vertex 0 is the centre. Neighbouring rings are zipped
    together by comparing angular fractions in integer arithmetic so the
    layout is exactly six-fold symmetric.

    Returns the triangles and, per vertex, its ring index ``j`` and angular
    fraction as ``(k, 6j)`` packed in a second array.
    """
    if refinement < 1:
        msg = f"Refinement must be at least 1, got {refinement}"
        raise MeshError(msg)
    rings: list[list[int]] = [[0]]
    ring_of = [0]
    fraction = [(0, 1)]
    next_id = 1
    for j in range(1, refinement + 1):
        n = 6 * j
        rings.append(list(range(next_id, next_id + n)))
        ring_of.extend([j] * n)
        fraction.extend((k, n) for k in range(n))
        next_id += n

    triangles: list[tuple[int, int, int]] = []
    first = rings[1]
    triangles.extend((0, first[k], first[(k + 1) % 6]) for k in range(6))
    for j in range(2, refinement + 1):
        inner, outer = rings[j - 1], rings[j]
        n_in, n_out = len(inner), len(outer)
        a = b = 0
        while a < n_in or b < n_out:
            if b < n_out and (a == n_in or (b + 1) * n_in <= (a + 1) * n_out):
                triangles.append((inner[a % n_in], outer[b], outer[(b + 1) % n_out]))
                b += 1
            else:
                triangles.append((inner[a], outer[b % n_out], inner[(a + 1) % n_in]))
                a += 1
    return (
        np.asarray(triangles, dtype=np.int64),
        np.asarray(ring_of, dtype=np.int64),
        np.asarray(fraction, dtype=np.int64),
    )


def geodesic_lengths(
    edges: IntArray, coordinates: FloatArray, embedding: Embedding
) -> FloatArray:
    """Intrinsic distance between edge endpoints for the given embedding."""
    x = coordinates[edges[:, 0]]
    y = coordinates[edges[:, 1]]
    diff = x - y
    if embedding == "euclidean":
        return np.linalg.norm(diff, axis=1)
    if embedding == "spherical":
        chord = np.linalg.norm(diff, axis=1)
        return 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))
    # Minkowski norm of the chord on the hyperboloid is 2·sinh(d/2).
    lorentz = -diff[:, 0] ** 2 + np.sum(diff[:, 1:] ** 2, axis=1)
    return 2.0 * np.arcsinh(np.sqrt(np.maximum(lorentz, 0.0)) / 2.0)


def _polar_mesh(
    radius: float, refinement: int, embedding: Embedding
) -> tuple[SimplicialMesh, DiscreteMetric]:
    triangles, ring, fraction = polar_layout(refinement)
    rho = ring * (radius / refinement)
    alpha = 2.0 * np.pi * fraction[:, 0] / fraction[:, 1]
    if embedding == "spherical":
        coords = np.column_stack(
            [np.cos(rho), np.sin(rho) * np.cos(alpha), np.sin(rho) * np.sin(alpha)]
        )
    elif embedding == "hyperboloid":
        coords = np.column_stack(
            [np.cosh(rho), np.sinh(rho) * np.cos(alpha), np.sinh(rho) * np.sin(alpha)]
        )
    else:
        coords = np.column_stack(
            [rho * np.cos(alpha), rho * np.sin(alpha), np.zeros_like(rho)]
        )
    mesh = SimplicialMesh.from_triangles(
        triangles, len(ring), vertex_coordinates=coords, embedding=embedding
    )
    metric = DiscreteMetric.from_lengths(geodesic_lengths(mesh.edges, coords, embedding))
    return mesh, metric


def build_cap_mesh(radius: float, refinement: int) -> tuple[SimplicialMesh, DiscreteMetric]:
    """Geodesic cap of the given radius in S² centred at (1, 0, 0)."""
    if not 0.0 < radius < math.pi / 2:
        msg = f"Cap radius must lie in (0, π/2), got {radius}"
        raise MeshError(msg)
    return _polar_mesh(radius, refinement, "spherical")


def build_hyperbolic_ball_mesh(
    radius: float, refinement: int
) -> tuple[SimplicialMesh, DiscreteMetric]:
    """Geodesic disk in H² centred at (1, 0, 0) on the hyperboloid."""
    if not radius > 0.0:
        msg = f"Ball radius must be positive, got {radius}"
        raise MeshError(msg)
    return _polar_mesh(radius, refinement, "hyperboloid")


def build_disk_mesh(radius: float, refinement: int) -> tuple[SimplicialMesh, DiscreteMetric]:
    """Flat disk with the same ring layout as the cap."""
    if not radius > 0.0:
        msg = f"Disk radius must be positive, got {radius}"
        raise MeshError(msg)
    return _polar_mesh(radius, refinement, "euclidean")


def build_square_mesh(n: int) -> tuple[SimplicialMesh, DiscreteMetric]:
    """Flat unit square on an n×n grid, each cell split along its main diagonal."""
    if n < 1:
        msg = f"Grid size must be at least 1, got {n}"
        raise MeshError(msg)
    ticks = np.linspace(0.0, 1.0, n + 1)
    xs, ys = np.meshgrid(ticks, ticks, indexing="xy")
    coords = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)])

    def vid(i: int, j: int) -> int:
        return j * (n + 1) + i

    triangles = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            triangles.extend([(a, b, c), (a, c, d)])
    mesh = SimplicialMesh.from_triangles(
        triangles, (n + 1) ** 2, vertex_coordinates=coords, embedding="euclidean"
    )
    metric = DiscreteMetric.from_lengths(
        geodesic_lengths(mesh.edges, coords, "euclidean")
    )
    return mesh, metric


def build_reference_mesh(
    kind: str, radius: float, refinement: int
) -> tuple[SimplicialMesh, DiscreteMetric]:
    match kind:
        case "cap":
            return build_cap_mesh(radius, refinement)
        case "hyperbolic-ball":
            return build_hyperbolic_ball_mesh(radius, refinement)
        case "disk":
            return build_disk_mesh(radius, refinement)
        case "square":
            return build_square_mesh(refinement)
    msg = f"Unknown reference mesh kind: {kind}"
    raise MeshError(msg)
