"""Cotangent stiffness, interior mass and boundary mass from edge lengths.

All matrices are assembled from triplets in a fixed element order and
merged by ``tocsr``, so identical inputs give bit-identical matrices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateTriangleError
from .mesh import (
    DiscreteMetric,
    FloatArray,
    IntArray,
    SimplicialMesh,
    ensure_valid,
    heron_areas,
)

logger = logging.getLogger(__name__)

MassMode = Literal["consistent", "lumped"]

# Cotangents beyond this magnitude are treated as an overflow.
COTANGENT_LIMIT = 1e10

_NEXT = np.array([1, 2, 0])
_PREV = np.array([2, 0, 1])


@dataclass(frozen=True, eq=False)
class TriangleGeometry:
    """Per-triangle intrinsic quantities, side k opposite local vertex k."""

    lengths: FloatArray
    areas: FloatArray
    cotangents: FloatArray


def triangle_geometry(mesh: SimplicialMesh, metric: DiscreteMetric) -> TriangleGeometry:
    ensure_valid(mesh, metric)
    lengths = metric.triangle_lengths(mesh)
    areas = heron_areas(lengths)
    sq = lengths**2
    numerators = sq[:, _NEXT] + sq[:, _PREV] - sq
    with np.errstate(divide="ignore", invalid="ignore"):
        cotangents = numerators / (4.0 * areas[:, None])
    bad = ~(np.abs(cotangents) <= COTANGENT_LIMIT).all(axis=1)
    if bad.any():
        t = int(np.flatnonzero(bad)[0])
        detail = f"sides {tuple(float(x) for x in lengths[t])}, area {areas[t]:.3e}"
        raise DegenerateTriangleError(t, detail)
    return TriangleGeometry(lengths=lengths, areas=areas, cotangents=cotangents)


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Stiffness S, mass M and boundary mass B of one mesh and metric."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    boundary_mass: sp.csr_matrix
    boundary_vertices: IntArray
    interior_vertices: IntArray
    area: float
    boundary_length: float
    mass_mode: MassMode

    @property
    def size(self) -> int:
        return int(self.stiffness.shape[0])


def _symmetric_triplets(
    i: IntArray, j: IntArray, off: FloatArray, diag_i: FloatArray, diag_j: FloatArray
) -> tuple[IntArray, IntArray, FloatArray]:
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([off, off, diag_i, diag_j])
    return rows, cols, vals


def _to_csr(
    triplets: tuple[IntArray, IntArray, FloatArray], n: int
) -> sp.csr_matrix:
    rows, cols, vals = triplets
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


def assemble(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    mass_mode: MassMode = "consistent",
) -> OperatorSet:
    geometry = triangle_geometry(mesh, metric)
    n = mesh.vertex_count
    tris = mesh.triangles
    i = tris[:, _NEXT].ravel()
    j = tris[:, _PREV].ravel()

    weights = 0.5 * geometry.cotangents.ravel()
    stiffness = _to_csr(_symmetric_triplets(i, j, -weights, weights, weights), n)

    areas = geometry.areas
    if mass_mode == "consistent":
        off = np.repeat(areas / 12.0, 3)
        diag = np.repeat(areas / 12.0, 3)
        mass = _to_csr(_symmetric_triplets(i, j, off, diag, diag), n)
    else:
        mass = _to_csr(
            (tris.ravel(), tris.ravel(), np.repeat(areas / 3.0, 3)),
            n,
        )

    pairs = mesh.boundary_edge_pairs
    ell = metric.boundary_lengths(mesh)
    a, b = pairs[:, 0], pairs[:, 1]
    if mass_mode == "consistent":
        boundary = _to_csr(_symmetric_triplets(a, b, ell / 6.0, ell / 3.0, ell / 3.0), n)
    else:
        boundary = _to_csr(
            (np.concatenate([a, b]), np.concatenate([a, b]), np.tile(ell / 2.0, 2)),
            n,
        )

    logger.debug(
        "Assembled %s operators: n=%d, nnz(S)=%d, boundary vertices=%d",
        mass_mode,
        n,
        stiffness.nnz,
        mesh.boundary_vertices.size,
    )
    return OperatorSet(
        stiffness=stiffness,
        mass=mass,
        boundary_mass=boundary,
        boundary_vertices=mesh.boundary_vertices,
        interior_vertices=mesh.interior_vertices,
        area=float(areas.sum()),
        boundary_length=float(ell.sum()),
        mass_mode=mass_mode,
    )


def shifted_pencil(ops: OperatorSet, c: float) -> sp.csr_matrix:
    """The frequency-c operator S − cM."""
    if c == 0.0:
        return ops.stiffness.copy()
    return (ops.stiffness - c * ops.mass).tocsr()


def dump_matrix(matrix: sp.spmatrix, path: str | Path) -> None:
    """Write one ``row col value`` line per stored entry, 0-based."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with Path(path).open("w", encoding="utf-8") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")
