"""Text formats: OFF meshes, edge-length sidecars and conformal-factor files.

Metric sidecar lines read ``i j length`` and conformal files ``i phi``;
both are written with 17 significant digits so a round trip through disk
reproduces the floats exactly.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import TYPE_CHECKING, get_args

import numpy as np

from .errors import MeshError, MeshParseError
from .generators import geodesic_lengths
from .mesh import DiscreteMetric, Embedding, SimplicialMesh

if TYPE_CHECKING:
    from collections.abc import Iterator

logger = logging.getLogger(__name__)

EMBEDDING_TAG = "# embedding:"


def _content_lines(path: Path) -> Iterator[tuple[int, list[str]]]:
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text.split()


def _embedding_tag(path: Path) -> Embedding | None:
    with path.open(encoding="utf-8") as fh:
        for raw in fh:
            if raw.startswith(EMBEDDING_TAG):
                value = raw[len(EMBEDDING_TAG) :].strip()
                if value in get_args(Embedding):
                    return value  # type: ignore[return-value]
    return None


def load_mesh(path: str | Path) -> SimplicialMesh:
    """Read a triangle mesh in OFF format and validate it."""
    path = Path(path)
    lines = _content_lines(path)
    name = str(path)

    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshParseError(name, 1, "empty file") from None
    if not header[0].upper().endswith("OFF"):
        raise MeshParseError(name, lineno, f"expected OFF header, got {header[0]!r}")
    counts = header[1:]
    if not counts:
        try:
            lineno, counts = next(lines)
        except StopIteration:
            raise MeshParseError(name, lineno, "missing element counts") from None
    try:
        n_vertices, n_faces = int(counts[0]), int(counts[1])
    except (IndexError, ValueError):
        raise MeshParseError(name, lineno, "malformed element counts") from None

    coords = []
    for _ in range(n_vertices):
        try:
            lineno, tokens = next(lines)
            coords.append([float(t) for t in tokens[:3]])
        except StopIteration:
            raise MeshParseError(name, lineno, "unexpected end of vertices") from None
        except ValueError:
            raise MeshParseError(name, lineno, "malformed vertex line") from None
    if coords and len({len(c) for c in coords}) != 1:
        raise MeshParseError(name, lineno, "vertices have mixed dimensions")

    triangles = []
    for _ in range(n_faces):
        try:
            lineno, tokens = next(lines)
            size = int(tokens[0])
            if size != 3:
                raise MeshParseError(
                    name, lineno, f"only triangles are supported, got a {size}-gon"
                )
            triangles.append([int(t) for t in tokens[1:4]])
        except StopIteration:
            raise MeshParseError(name, lineno, "unexpected end of faces") from None
        except (IndexError, ValueError):
            raise MeshParseError(name, lineno, "malformed face line") from None

    vertex_coordinates = np.asarray(coords, dtype=np.float64) if coords else None
    mesh = SimplicialMesh.from_triangles(
        triangles,
        n_vertices,
        vertex_coordinates=vertex_coordinates,
        embedding=_embedding_tag(path),
    )
    logger.debug(
        "Loaded %s: V=%d E=%d F=%d",
        name,
        mesh.vertex_count,
        mesh.edge_count,
        mesh.face_count,
    )
    return mesh


def save_mesh(path: str | Path, mesh: SimplicialMesh) -> None:
    coords = mesh.vertex_coordinates
    if coords is None:
        coords = np.zeros((mesh.vertex_count, 3))
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("OFF\n")
        if mesh.embedding is not None:
            fh.write(f"{EMBEDDING_TAG} {mesh.embedding}\n")
        fh.write(f"{mesh.vertex_count} {mesh.face_count} {mesh.edge_count}\n")
        for row in coords:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")


def save_lengths(path: str | Path, mesh: SimplicialMesh, metric: DiscreteMetric) -> None:
    """Write the induced edge lengths as an ``i j length`` sidecar."""
    lengths = metric.edge_lengths(mesh)
    with Path(path).open("w", encoding="utf-8") as fh:
        for (i, j), length in zip(mesh.edges, lengths, strict=True):
            fh.write(f"{i} {j} {length:.17g}\n")


def load_lengths(path: str | Path, mesh: SimplicialMesh) -> DiscreteMetric:
    path = Path(path)
    name = str(path)
    lengths = np.full(mesh.edge_count, np.nan)
    for lineno, tokens in _content_lines(path):
        try:
            i, j, value = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except (IndexError, ValueError):
            raise MeshParseError(name, lineno, "expected 'i j length'") from None
        try:
            (edge,) = mesh.edge_index(np.array([[i, j]]))
        except MeshError as err:
            raise MeshParseError(name, lineno, str(err)) from None
        if not np.isnan(lengths[edge]):
            raise MeshParseError(name, lineno, f"duplicate length for edge ({i}, {j})")
        lengths[edge] = value
    missing = np.flatnonzero(np.isnan(lengths))
    if missing.size:
        a, b = mesh.edges[missing[0]]
        raise MeshParseError(
            name, 0, f"{missing.size} edge(s) have no length, first ({a}, {b})"
        )
    return DiscreteMetric.from_lengths(lengths)


def save_conformal(path: str | Path, log_factor: np.ndarray) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, phi in enumerate(log_factor):
            fh.write(f"{i} {phi:.17g}\n")


def load_conformal(
    path: str | Path, mesh: SimplicialMesh, base: DiscreteMetric
) -> DiscreteMetric:
    """Apply a per-vertex ``i phi`` file on top of ``base`` lengths."""
    path = Path(path)
    name = str(path)
    phi = np.full(mesh.vertex_count, np.nan)
    for lineno, tokens in _content_lines(path):
        try:
            i, value = int(tokens[0]), float(tokens[1])
        except (IndexError, ValueError):
            raise MeshParseError(name, lineno, "expected 'i phi'") from None
        if not 0 <= i < mesh.vertex_count:
            raise MeshParseError(name, lineno, f"vertex {i} out of range")
        phi[i] = value
    missing = np.flatnonzero(np.isnan(phi))
    if missing.size:
        raise MeshParseError(
            name, 0, f"{missing.size} vertex factor(s) missing, first {missing[0]}"
        )
    return DiscreteMetric.conformal(base.edge_lengths(mesh), phi)


def lengths_from_coordinates(mesh: SimplicialMesh) -> DiscreteMetric:
    """Edge lengths implied by the stored embedding (Euclidean when untagged)."""
    if mesh.vertex_coordinates is None:
        msg = "Mesh has no vertex coordinates; a lengths sidecar is required"
        raise MeshError(msg)
    embedding = mesh.embedding or "euclidean"
    return DiscreteMetric.from_lengths(
        geodesic_lengths(mesh.edges, mesh.vertex_coordinates, embedding)
    )


def load_metric(
    mesh: SimplicialMesh,
    lengths: str | Path | None = None,
    conformal: str | Path | None = None,
) -> DiscreteMetric:
    """Resolve the metric for a mesh from optional sidecar files."""
    metric = load_lengths(lengths, mesh) if lengths else lengths_from_coordinates(mesh)
    if conformal:
        metric = load_conformal(conformal, mesh, metric)
    return metric
