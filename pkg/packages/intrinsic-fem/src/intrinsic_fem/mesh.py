"""Triangulated surfaces with boundary and their intrinsic metrics.

A :class:`SimplicialMesh` is purely combinatorial: triangles, the derived
edge table and the boundary loops. A :class:`DiscreteMetric` assigns a
length to every edge, either directly or as a conformal factor over base
lengths. Everything downstream (areas, operators, spectra) only ever sees
edge lengths; vertex coordinates are optional metadata kept for reference
meshes.

Local convention used throughout the package: side ``k`` of a triangle
``(t0, t1, t2)`` is the side opposite ``tk``, i.e. the pair
``(t[k+1], t[k+2])`` with indices taken mod 3.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import (
    BoundaryError,
    DisconnectedMeshError,
    InvalidMetricError,
    MeshError,
    NonManifoldError,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]

Embedding = Literal["euclidean", "spherical", "hyperboloid"]
Representation = Literal["edge_lengths", "conformal"]

# Relative slack for the strict triangle inequality.
TRIANGLE_SLACK = 1e-12

_NEXT = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])
_REDRAW_ROUNDS = 20


# --------------------------------------------------------------------------
# Combinatorics
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    """A connected triangulated surface with non-empty boundary.

    Build instances with :meth:`from_triangles`, which derives the edge
    table, boundary edges and boundary loops and validates the manifold
    invariants.
    """

    triangles: IntArray
    vertex_count: int
    edges: IntArray
    triangle_edges: IntArray
    edge_faces: IntArray
    boundary_edges: IntArray
    boundary_edge_faces: IntArray
    boundary_loops: tuple[IntArray, ...]
    vertex_coordinates: FloatArray | None = None
    embedding: Embedding | None = None
    _edge_keys: IntArray = field(default_factory=lambda: np.empty(0, np.int64))

    dim: int = 2

    @classmethod
    def from_triangles(
        cls,
        triangles: NDArray[np.integer] | list[tuple[int, int, int]],
        vertex_count: int | None = None,
        vertex_coordinates: FloatArray | None = None,
        embedding: Embedding | None = None,
    ) -> SimplicialMesh:
        tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if tris.shape[0] == 0:
            msg = "Mesh has no triangles"
            raise MeshError(msg)
        n = int(tris.max()) + 1 if vertex_count is None else int(vertex_count)
        if tris.min() < 0 or tris.max() >= n:
            msg = f"Triangle vertex index out of range [0, {n})"
            raise MeshError(msg)
        repeated = (
            (tris[:, 0] == tris[:, 1])
            | (tris[:, 1] == tris[:, 2])
            | (tris[:, 2] == tris[:, 0])
        )
        if repeated.any():
            bad = int(np.flatnonzero(repeated)[0])
            msg = f"Triangle {bad} repeats a vertex: {tuple(tris[bad])}"
            raise MeshError(msg)

        first = tris[:, _NEXT]
        second = tris[:, _PREV]
        lo = np.minimum(first, second).ravel()
        hi = np.maximum(first, second).ravel()
        keys, inverse, counts = np.unique(
            lo * n + hi, return_inverse=True, return_counts=True
        )
        inverse = inverse.reshape(-1)
        edges = np.column_stack([keys // n, keys % n]).astype(np.int64)
        triangle_edges = inverse.reshape(-1, 3)

        if (counts > 2).any():
            bad = int(np.flatnonzero(counts > 2)[0])
            raise NonManifoldError(
                (int(edges[bad, 0]), int(edges[bad, 1])), int(counts[bad])
            )

        edge_faces = np.full((len(keys), 2), -1, dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        faces_sorted = order // 3
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        edge_faces[:, 0] = faces_sorted[starts]
        two = counts == 2
        edge_faces[two, 1] = faces_sorted[starts[two] + 1]

        graph = coo_matrix(
            (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
        )
        components, _ = connected_components(graph, directed=False)
        if components != 1:
            raise DisconnectedMeshError(int(components))

        boundary_edges = np.flatnonzero(counts == 1).astype(np.int64)
        if boundary_edges.size == 0:
            msg = "Mesh has no boundary edges (closed surfaces are not supported)"
            raise BoundaryError(msg)
        boundary_edge_faces = edge_faces[boundary_edges, 0]
        loops = _boundary_loops(tris, edges, boundary_edges, boundary_edge_faces)

        coords = None
        if vertex_coordinates is not None:
            coords = np.asarray(vertex_coordinates, dtype=np.float64)
            if coords.shape[0] != n:
                msg = f"Expected {n} vertex coordinates, got {coords.shape[0]}"
                raise MeshError(msg)

        return cls(
            triangles=tris,
            vertex_count=n,
            edges=edges,
            triangle_edges=triangle_edges,
            edge_faces=edge_faces,
            boundary_edges=boundary_edges,
            boundary_edge_faces=boundary_edge_faces,
            boundary_loops=loops,
            vertex_coordinates=coords,
            embedding=embedding,
            _edge_keys=keys,
        )

    @property
    def face_count(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def boundary_edge_pairs(self) -> IntArray:
        return self.edges[self.boundary_edges]

    @property
    def boundary_vertices(self) -> IntArray:
        return np.unique(self.boundary_edge_pairs)

    @property
    def interior_vertices(self) -> IntArray:
        mask = np.ones(self.vertex_count, dtype=bool)
        mask[self.boundary_vertices] = False
        return np.flatnonzero(mask).astype(np.int64)

    def edge_index(self, pairs: NDArray[np.integer]) -> IntArray:
        """Edge indices of the given vertex pairs (either orientation)."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        wanted = lo * self.vertex_count + hi
        idx = np.searchsorted(self._edge_keys, wanted)
        idx = np.minimum(idx, len(self._edge_keys) - 1)
        missing = self._edge_keys[idx] != wanted
        if missing.any():
            bad = pairs[np.flatnonzero(missing)[0]]
            msg = f"({int(bad[0])}, {int(bad[1])}) is not an edge of the mesh"
            raise MeshError(msg)
        return idx.astype(np.int64)


def _boundary_loops(
    tris: IntArray,
    edges: IntArray,
    boundary_edges: IntArray,
    boundary_edge_faces: IntArray,
) -> tuple[IntArray, ...]:
    neighbours: dict[int, list[int]] = {}
    for a, b in edges[boundary_edges]:
        neighbours.setdefault(int(a), []).append(int(b))
        neighbours.setdefault(int(b), []).append(int(a))
    for vertex, adjacent in neighbours.items():
        if len(adjacent) != 2:
            msg = (
                f"Boundary is pinched at vertex {vertex} "
                f"({len(adjacent)} boundary edges meet there)"
            )
            raise BoundaryError(msg)

    # Orient each loop like the triangle owning its first edge.
    owner = {
        (int(a), int(b)): int(f)
        for (a, b), f in zip(edges[boundary_edges], boundary_edge_faces, strict=True)
    }
    loops: list[IntArray] = []
    visited: set[int] = set()
    for start in sorted(neighbours):
        if start in visited:
            continue
        first, second = sorted(neighbours[start])
        face = tris[owner[(min(start, first), max(start, first))]]
        pos = int(np.flatnonzero(face == start)[0])
        nxt = first if face[(pos + 1) % 3] == first else second
        loop = [start]
        prev, cur = start, nxt
        while cur != start:
            loop.append(cur)
            a, b = neighbours[cur]
            prev, cur = cur, (b if a == prev else a)
        visited.update(loop)
        loops.append(np.asarray(loop, dtype=np.int64))
    return tuple(loops)


@dataclass(frozen=True)
class TopologyReport:
    """Genus, boundary count and Euler characteristic.

    For non-orientable meshes ``genus`` is the crosscap number with
    χ = 2 − genus − l.
    """

    genus: int
    boundary_components: int
    euler_characteristic: int
    orientable: bool
    vertex_count: int
    edge_count: int
    face_count: int


def is_orientable(mesh: SimplicialMesh) -> bool:
    """Whether the triangles can be flipped into a coherent orientation."""
    tris = mesh.triangles
    # +1 when side k is traversed from the smaller to the larger vertex.
    direction = np.where(tris[:, _NEXT] < tris[:, _PREV], 1, -1)
    interior = np.flatnonzero(mesh.edge_faces[:, 1] >= 0)

    adjacency: list[list[tuple[int, int]]] = [[] for _ in range(mesh.face_count)]
    for e in interior:
        f, g = (int(x) for x in mesh.edge_faces[e])
        df = int(direction[f][mesh.triangle_edges[f] == e][0])
        dg = int(direction[g][mesh.triangle_edges[g] == e][0])
        # Coherent neighbours traverse the shared edge in opposite directions.
        relation = -df * dg
        adjacency[f].append((g, relation))
        adjacency[g].append((f, relation))

    sign = np.zeros(mesh.face_count, dtype=np.int64)
    sign[0] = 1
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for g, relation in adjacency[f]:
            wanted = relation * sign[f]
            if sign[g] == 0:
                sign[g] = wanted
                queue.append(g)
            elif sign[g] != wanted:
                return False
    return True


def topology(mesh: SimplicialMesh) -> TopologyReport:
    chi = mesh.vertex_count - mesh.edge_count + mesh.face_count
    loops = len(mesh.boundary_loops)
    orientable = is_orientable(mesh)
    if orientable:
        genus = (2 - chi - loops) // 2
    else:
        genus = 2 - chi - loops
    return TopologyReport(
        genus=genus,
        boundary_components=loops,
        euler_characteristic=chi,
        orientable=orientable,
        vertex_count=mesh.vertex_count,
        edge_count=mesh.edge_count,
        face_count=mesh.face_count,
    )


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteMetric:
    """Intrinsic metric on a mesh, indexed like ``mesh.edges``.

    ``lengths`` are the edge lengths, or the base lengths when
    ``log_factor`` (one φ per vertex) is set; the induced length of edge
    ij is then ℓ⁰ᵢⱼ·exp((φᵢ+φⱼ)/2). ``triangle_log_factor`` is an optional
    piecewise-constant conformal factor ψ that multiplies all three sides
    of a triangle by exp(ψ).
    """

    lengths: FloatArray
    log_factor: FloatArray | None = None
    triangle_log_factor: FloatArray | None = None

    @classmethod
    def from_lengths(cls, lengths: NDArray[np.floating] | list[float]) -> DiscreteMetric:
        return cls(lengths=np.asarray(lengths, dtype=np.float64))

    @classmethod
    def conformal(
        cls,
        base_lengths: NDArray[np.floating],
        log_factor: NDArray[np.floating],
    ) -> DiscreteMetric:
        return cls(
            lengths=np.asarray(base_lengths, dtype=np.float64),
            log_factor=np.asarray(log_factor, dtype=np.float64),
        )

    @property
    def representation(self) -> Representation:
        return "edge_lengths" if self.log_factor is None else "conformal"

    def edge_lengths(self, mesh: SimplicialMesh) -> FloatArray:
        """Induced edge lengths, ignoring any per-triangle factor."""
        if self.log_factor is None:
            return self.lengths
        phi = self.log_factor
        return self.lengths * np.exp(
            0.5 * (phi[mesh.edges[:, 0]] + phi[mesh.edges[:, 1]])
        )

    def triangle_lengths(self, mesh: SimplicialMesh) -> FloatArray:
        """Side lengths per triangle, shape ``(F, 3)``; side k opposite vertex k."""
        local = self.edge_lengths(mesh)[mesh.triangle_edges]
        if self.triangle_log_factor is not None:
            local = local * np.exp(self.triangle_log_factor)[:, None]
        return local

    def triangle_scale(self, mesh: SimplicialMesh) -> FloatArray:
        if self.triangle_log_factor is None:
            return np.ones(mesh.face_count)
        return np.exp(self.triangle_log_factor)

    def boundary_lengths(self, mesh: SimplicialMesh) -> FloatArray:
        """Lengths of ``mesh.boundary_edges`` as seen from their triangle."""
        lengths = self.edge_lengths(mesh)[mesh.boundary_edges]
        return lengths * self.triangle_scale(mesh)[mesh.boundary_edge_faces]

    def with_edge_lengths(self, lengths: FloatArray) -> DiscreteMetric:
        return DiscreteMetric(
            lengths=np.asarray(lengths, dtype=np.float64),
            triangle_log_factor=self.triangle_log_factor,
        )

    def with_log_factor(
        self, mesh: SimplicialMesh, log_factor: FloatArray
    ) -> DiscreteMetric:
        """Conformal metric with the given φ over this metric's base lengths.

        An edge-length metric serves as its own base (φ ≡ 0 reproduces it).
        """
        return replace(self, log_factor=np.asarray(log_factor, dtype=np.float64))

    def with_triangle_log_factor(self, factor: FloatArray | None) -> DiscreteMetric:
        return replace(self, triangle_log_factor=factor)

    def scaled(self, mesh: SimplicialMesh, t: float) -> DiscreteMetric:
        """The metric t²g: every length multiplied by ``t``."""
        return DiscreteMetric(
            lengths=self.edge_lengths(mesh) * t,
            triangle_log_factor=self.triangle_log_factor,
        )


@dataclass(frozen=True)
class MetricDiagnostics:
    """Result of :func:`validate_metric`; empty lists mean a valid metric."""

    nonpositive_edges: tuple[int, ...] = ()
    violated_triangles: tuple[int, ...] = ()
    shape_errors: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not (self.nonpositive_edges or self.violated_triangles or self.shape_errors)

    def summary(self) -> str:
        if self.ok:
            return "metric is valid"
        parts = list(self.shape_errors)
        if self.nonpositive_edges:
            parts.append(
                f"{len(self.nonpositive_edges)} non-positive edge(s), first "
                f"{self.nonpositive_edges[0]}"
            )
        if self.violated_triangles:
            parts.append(
                f"triangle inequality fails in {len(self.violated_triangles)} "
                f"triangle(s), first {self.violated_triangles[0]}"
            )
        return "Invalid metric: " + "; ".join(parts)


def validate_metric(mesh: SimplicialMesh, metric: DiscreteMetric) -> MetricDiagnostics:
    shape_errors = []
    if metric.lengths.shape != (mesh.edge_count,):
        shape_errors.append(
            f"expected {mesh.edge_count} edge lengths, got {metric.lengths.shape}"
        )
    if metric.log_factor is not None and metric.log_factor.shape != (
        mesh.vertex_count,
    ):
        shape_errors.append(
            f"expected {mesh.vertex_count} conformal factors, "
            f"got {metric.log_factor.shape}"
        )
    if metric.triangle_log_factor is not None and metric.triangle_log_factor.shape != (
        mesh.face_count,
    ):
        shape_errors.append(
            f"expected {mesh.face_count} triangle factors, "
            f"got {metric.triangle_log_factor.shape}"
        )
    if shape_errors:
        return MetricDiagnostics(shape_errors=tuple(shape_errors))

    lengths = metric.edge_lengths(mesh)
    nonpositive = np.flatnonzero(~(lengths > 0.0))
    local = metric.triangle_lengths(mesh)
    longest = local.max(axis=1)
    slack = local.sum(axis=1) - 2.0 * longest
    violated = np.flatnonzero(~(slack > TRIANGLE_SLACK * longest))
    return MetricDiagnostics(
        nonpositive_edges=tuple(int(e) for e in nonpositive),
        violated_triangles=tuple(int(t) for t in violated),
    )


def ensure_valid(mesh: SimplicialMesh, metric: DiscreteMetric) -> None:
    diagnostics = validate_metric(mesh, metric)
    if not diagnostics.ok:
        raise InvalidMetricError(diagnostics)


def heron_areas(sides: FloatArray) -> FloatArray:
    """Triangle areas from side lengths, Kahan's cancellation-free Heron form."""
    s = -np.sort(-sides, axis=1)
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    product = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(product, 0.0))


@dataclass(frozen=True, eq=False)
class Measures:
    area: float
    boundary_length: float
    per_triangle_areas: FloatArray


def measures(mesh: SimplicialMesh, metric: DiscreteMetric) -> Measures:
    ensure_valid(mesh, metric)
    areas = heron_areas(metric.triangle_lengths(mesh))
    return Measures(
        area=float(areas.sum()),
        boundary_length=float(metric.boundary_lengths(mesh).sum()),
        per_triangle_areas=areas,
    )


# --------------------------------------------------------------------------
# Derived constructions
# --------------------------------------------------------------------------


def boundary_distance(mesh: SimplicialMesh, metric: DiscreteMetric) -> FloatArray:
    """Edge-graph (Dijkstra) distance from every vertex to the boundary."""
    lengths = metric.edge_lengths(mesh)
    n = mesh.vertex_count
    graph = coo_matrix(
        (lengths, (mesh.edges[:, 0], mesh.edges[:, 1])), shape=(n, n)
    ).tocsr()
    distance: FloatArray = dijkstra(
        graph, directed=False, indices=mesh.boundary_vertices, min_only=True
    )
    return distance


def perturb_lengths(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    amplitude: float,
    seed: int,
) -> DiscreteMetric:
    """Multiply every edge length by an independent factor 1 + amplitude·U(−1, 1).

    Edges of triangles that the draw leaves invalid are redrawn from the
    same generator; after ``_REDRAW_ROUNDS`` rounds they keep their
    original length. Any seed therefore gives a valid metric.
    """
    ensure_valid(mesh, metric)
    lengths = metric.edge_lengths(mesh)
    rng = np.random.default_rng(seed)
    factors = 1.0 + amplitude * rng.uniform(-1.0, 1.0, mesh.edge_count)
    rounds = 0
    while True:
        perturbed = metric.with_edge_lengths(lengths * factors)
        diagnostics = validate_metric(mesh, perturbed)
        if diagnostics.ok:
            return perturbed
        edges = np.union1d(
            mesh.triangle_edges[list(diagnostics.violated_triangles)].ravel(),
            np.asarray(diagnostics.nonpositive_edges, dtype=np.int64),
        ).astype(np.int64)
        if rounds < _REDRAW_ROUNDS:
            factors[edges] = 1.0 + amplitude * rng.uniform(-1.0, 1.0, edges.size)
        else:
            factors[edges] = 1.0
        rounds += 1
        logger.debug("Redrew %d edge factor(s) in round %d", edges.size, rounds)


@dataclass(frozen=True, eq=False)
class CollarMesh:
    """A mesh with a flat collar glued along its boundary."""

    mesh: SimplicialMesh
    metric: DiscreteMetric
    collar_triangles: IntArray
    width: float


def attach_collar(
    mesh: SimplicialMesh, metric: DiscreteMetric, width: float
) -> CollarMesh:
    """Glue a strip of flat rectangles of the given width along every boundary loop.

    Every boundary edge pq becomes the inner side of a width × |pq|
    rectangle split along a diagonal; the outer sides form the new
    boundary, which has the same total length. The old boundary vertices
    become interior vertices at distance ``width`` from the new boundary.
    The result uses plain edge lengths; any per-triangle factor of the
    input is kept on the old triangles and set to zero on the collar.
    """
    if not width > 0.0:
        msg = f"Collar width must be positive, got {width}"
        raise MeshError(msg)
    ensure_valid(mesh, metric)

    boundary_length = dict(
        zip(
            (tuple(int(v) for v in pair) for pair in mesh.boundary_edge_pairs),
            metric.boundary_lengths(mesh),
            strict=True,
        )
    )
    next_vertex = mesh.vertex_count
    new_triangles: list[tuple[int, int, int]] = []
    new_lengths: dict[tuple[int, int], float] = {}
    for loop in mesh.boundary_loops:
        outer = np.arange(next_vertex, next_vertex + len(loop), dtype=np.int64)
        next_vertex += len(loop)
        for j, p in enumerate(loop):
            q = int(loop[(j + 1) % len(loop)])
            wp, wq = int(outer[j]), int(outer[(j + 1) % len(loop)])
            p = int(p)
            ell = boundary_length[(min(p, q), max(p, q))]
            diagonal = float(np.hypot(ell, width))
            new_triangles.append((q, p, wp))
            new_triangles.append((q, wp, wq))
            new_lengths[(min(p, wp), max(p, wp))] = width
            new_lengths[(wp, wq) if wp < wq else (wq, wp)] = ell
            new_lengths[(min(q, wp), max(q, wp))] = diagonal

    triangles = np.vstack([mesh.triangles, np.asarray(new_triangles, dtype=np.int64)])
    extended = SimplicialMesh.from_triangles(triangles, vertex_count=next_vertex)

    lengths = np.empty(extended.edge_count)
    old = extended.edge_index(mesh.edges)
    lengths[old] = metric.edge_lengths(mesh)
    pairs = np.asarray(list(new_lengths), dtype=np.int64)
    lengths[extended.edge_index(pairs)] = np.fromiter(
        new_lengths.values(), dtype=np.float64
    )

    collar = np.arange(mesh.face_count, extended.face_count, dtype=np.int64)
    factor = None
    if metric.triangle_log_factor is not None:
        factor = np.concatenate([metric.triangle_log_factor, np.zeros(len(collar))])
    extended_metric = DiscreteMetric(lengths=lengths, triangle_log_factor=factor)
    logger.debug(
        "Attached collar of width %.3e: %d new vertices, %d new triangles",
        width,
        extended.vertex_count - mesh.vertex_count,
        len(collar),
    )
    return CollarMesh(
        mesh=extended, metric=extended_metric, collar_triangles=collar, width=width
    )
