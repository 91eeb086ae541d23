"""Robin, frequency-Steklov and Dirichlet spectra of an assembled operator set.

Three generalized symmetric pencils share the matrices of
:class:`intrinsic_fem.OperatorSet`:

* Robin at fixed σ: ``(S − σB) u = λ M u``, M-normalized.
* Steklov at frequency c: ``(S − cM) u = θ B u``, B-normalized. B is
  supported on the boundary, so the interior unknowns are eliminated and
  the boundary Schur complement ``Λ(c) = P_bb − P_bi P_ii⁻¹ P_ib`` is
  solved against ``B_bb``; interior values are recovered by extension.
* Dirichlet: ``S_ii u = λ M_ii u`` on interior vertices, zero-extended.

Sparse solves use ARPACK in shift-invert mode with a SuperLU factor of the
shifted matrix. The factor is computed with symmetric pivoting so that the
signs of its pivots give the inertia (Sylvester), which certifies that a
shift lies below the whole spectrum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.sparse as sp
from intrinsic_fem.assembly import shifted_pencil
from scipy.linalg import cholesky, eigh, eigvalsh, qr, solve_triangular
from scipy.sparse.linalg import (
    ArpackError,
    ArpackNoConvergence,
    LinearOperator,
    eigsh,
    splu,
)
from scipy.sparse.linalg import norm as sparse_norm

from .constants import (
    ADMISSIBILITY_TOLERANCE,
    CLUSTER_LOOKAHEAD,
    DEFAULT_REL_GAP,
    DEFAULT_TOLERANCE,
    DEGENERATE_SPREAD,
    DENSE_SCHUR_LIMIT,
    SCHUR_CHUNK,
    SHIFT_MARGIN,
)
from .errors import (
    CountTooLargeError,
    InadmissibleMetricError,
    NoInteriorVerticesError,
    NonConvergenceError,
)

if TYPE_CHECKING:
    from collections.abc import Callable

    from intrinsic_fem import OperatorSet
    from intrinsic_fem.mesh import FloatArray
    from scipy.sparse.linalg import SuperLU

    from .config import EigenProblemSpec, Normalization, ProblemKind

logger = logging.getLogger(__name__)

Clusters = tuple[tuple[int, ...], ...]

# Doublings of the Robin shift before giving up on a lower bound.
_MAX_SHIFT_DOUBLINGS = 64


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Lowest eigenpairs of one pencil.

    ``eigenvectors`` has one column per eigenvalue and one row per mesh
    vertex (Dirichlet vectors are zero on the boundary).
    """

    kind: ProblemKind
    param: float
    eigenvalues: FloatArray
    eigenvectors: FloatArray
    clusters: Clusters
    residuals: FloatArray
    normalization: Normalization

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def cluster_of(self, index: int) -> tuple[int, ...]:
        for cluster in self.clusters:
            if index in cluster:
                return cluster
        msg = f"Eigenvalue index {index} outside the computed range 0..{self.count - 1}"
        raise IndexError(msg)

    def to_payload(self) -> dict[str, Any]:
        return {
            "problem": self.kind,
            "param": self.param,
            "normalization": self.normalization,
            "eigenvalues": self.eigenvalues.tolist(),
            "clusters": [list(c) for c in self.clusters],
            "residuals": self.residuals.tolist(),
        }


def cluster_multiplicities(
    spectrum: Spectrum | FloatArray | list[float], rel_gap: float = DEFAULT_REL_GAP
) -> Clusters:
    """Group sorted eigenvalues whose consecutive gaps are below rel_gap·(1 + |λ|)."""
    values = np.asarray(
        spectrum.eigenvalues if isinstance(spectrum, Spectrum) else spectrum,
        dtype=np.float64,
    )
    if values.size == 0:
        return ()
    clusters: list[tuple[int, ...]] = []
    current = [0]
    for j in range(1, values.size):
        scale = 1.0 + max(abs(values[j]), abs(values[j - 1]))
        if values[j] - values[j - 1] < rel_gap * scale:
            current.append(j)
        else:
            clusters.append(tuple(current))
            current = [j]
    clusters.append(tuple(current))
    return tuple(clusters)


# --------------------------------------------------------------------------
# Factorization helpers
# --------------------------------------------------------------------------


def _factor(matrix: sp.spmatrix) -> SuperLU:
    """Sparse LU with symmetric, diagonal pivoting (raises RuntimeError if singular)."""
    return splu(
        sp.csc_matrix(matrix),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )


def negative_pivots(lu: SuperLU) -> int | None:
    """Number of negative eigenvalues of the factored symmetric matrix.

    Only defined when SuperLU kept the row and column permutations equal;
    returns None otherwise.
    """
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    return int((lu.U.diagonal() < 0.0).sum())


def _inverse_operator(lu: SuperLU, n: int) -> LinearOperator:
    return LinearOperator((n, n), matvec=lu.solve, dtype=np.float64)


def _start_vector(n: int) -> FloatArray:
    return np.random.default_rng(0).uniform(0.5, 1.5, n)


def _shift_invert(
    A: sp.spmatrix, M: sp.spmatrix, count: int, shift: float, lu: SuperLU
) -> tuple[FloatArray, FloatArray]:
    n = A.shape[0]
    try:
        values, vectors = eigsh(
            A,
            k=count,
            M=M,
            sigma=shift,
            OPinv=_inverse_operator(lu, n),
            which="LM",
            v0=_start_vector(n),
        )
    except (ArpackNoConvergence, ArpackError) as exc:
        msg = f"ARPACK failed for {count} eigenpairs near shift {shift:g}: {exc}"
        raise NonConvergenceError(msg) from exc
    return values, vectors


def _dense_lowest(
    A: sp.spmatrix | FloatArray, M: sp.spmatrix | FloatArray, count: int
) -> tuple[FloatArray, FloatArray]:
    dense_a = A.toarray() if sp.issparse(A) else np.asarray(A)
    dense_m = M.toarray() if sp.issparse(M) else np.asarray(M)
    return eigh(dense_a, dense_m, subset_by_index=[0, count - 1])


# --------------------------------------------------------------------------
# Post-processing shared by every problem kind
# --------------------------------------------------------------------------


def _canonical_basis(block: FloatArray, gram: FloatArray) -> FloatArray:
    """Rotate an exactly degenerate eigenbasis to a pivot-determined one.

    The block is first orthonormalized in the given Gram matrix. The rows
    with the largest entries (pivoted QR of the transpose) are then made
    lower triangular with a positive diagonal, which fixes the basis up to
    round-off independently of how the solver returned it.
    """
    m = block.shape[1]
    factor = cholesky(gram, lower=True)
    block = solve_triangular(factor, block.T, lower=True).T
    _, _, pivots = qr(block.T, mode="economic", pivoting=True)
    pivot_rows = block[pivots[:m]]
    q, r = qr(pivot_rows.T)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return (block @ q) * signs


def _sign_fix(vector: FloatArray) -> FloatArray:
    k = int(np.argmax(np.abs(vector)))
    return -vector if vector[k] < 0.0 else vector


def _finalize(
    *,
    kind: ProblemKind,
    param: float,
    values: FloatArray,
    vectors: FloatArray,
    lhs: sp.spmatrix,
    rhs: sp.spmatrix,
    normalization: Normalization,
    tolerance: float,
    rel_gap: float,
    extend: Any = None,
) -> Spectrum:
    """Sort, normalize, canonicalize and verify raw eigenpairs of (lhs, rhs).

    ``extend`` maps the solver's vectors to full per-vertex vectors when the
    pencil acts on a subset of the vertices.
    """
    order = np.argsort(values, kind="stable")
    values = np.asarray(values[order], dtype=np.float64)
    vectors = np.asarray(vectors[:, order], dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->j", vectors, rhs @ vectors))
    vectors = vectors / norms

    clusters = cluster_multiplicities(values, rel_gap)
    for cluster in clusters:
        idx = list(cluster)
        if len(idx) == 1:
            vectors[:, idx[0]] = _sign_fix(vectors[:, idx[0]])
            continue
        spread = values[idx[-1]] - values[idx[0]]
        if spread <= DEGENERATE_SPREAD * (1.0 + abs(values[idx[0]])):
            block = vectors[:, idx]
            gram = block.T @ (rhs @ block)
            vectors[:, idx] = _canonical_basis(block, 0.5 * (gram + gram.T))
        else:
            for j in idx:
                vectors[:, j] = _sign_fix(vectors[:, j])
        logger.debug(
            "%s cluster %s at %.10g (spread %.3e)", kind, idx, values[idx[0]], spread
        )

    scale_lhs = float(sparse_norm(lhs, np.inf)) if sp.issparse(lhs) else float(
        np.abs(lhs).sum(axis=1).max()
    )
    scale_rhs = float(sparse_norm(rhs, np.inf)) if sp.issparse(rhs) else float(
        np.abs(rhs).sum(axis=1).max()
    )
    defect = lhs @ vectors - (rhs @ vectors) * values
    residuals = np.linalg.norm(defect, axis=0) / (
        (scale_lhs + np.abs(values) * scale_rhs) * np.linalg.norm(vectors, axis=0)
    )
    worst = int(np.argmax(residuals)) if residuals.size else 0
    if residuals.size and residuals[worst] > tolerance:
        msg = (
            f"{kind} eigenpair {worst} has relative residual "
            f"{residuals[worst]:.3e} > {tolerance:.1e}"
        )
        raise NonConvergenceError(msg)

    full = extend(vectors) if extend is not None else vectors
    return Spectrum(
        kind=kind,
        param=param,
        eigenvalues=values,
        eigenvectors=full,
        clusters=clusters,
        residuals=residuals,
        normalization=normalization,
    )


# --------------------------------------------------------------------------
# Robin
# --------------------------------------------------------------------------


def _robin_shift(
    ops: OperatorSet, sigma: float, A: sp.spmatrix
) -> tuple[float, SuperLU]:
    """A shift below every Robin eigenvalue, certified by inertia when possible.

    Starts from −(|σ|·a/A + 1)(1 + margin) and doubles it downwards until
    the factor of A − shift·M has no negative pivot.
    """
    shift = -(abs(sigma) * ops.boundary_length / ops.area + 1.0) * (1.0 + SHIFT_MARGIN)
    for _ in range(_MAX_SHIFT_DOUBLINGS):
        try:
            lu = _factor(A - shift * ops.mass)
        except RuntimeError:
            logger.debug("Robin shift %.6g is singular, moving down", shift)
            shift *= 2.0
            continue
        below = negative_pivots(lu)
        if below is None:
            logger.debug("Inertia unavailable at shift %.6g; using it unverified", shift)
            return shift, lu
        if below == 0:
            logger.debug("Robin shift %.6g certified below the spectrum", shift)
            return shift, lu
        logger.debug("Shift %.6g has %d eigenvalues below it, doubling", shift, below)
        shift *= 2.0
    msg = f"No lower bound found for the Robin spectrum at sigma={sigma:g}"
    raise NonConvergenceError(msg)


def robin_spectrum(
    ops: OperatorSet,
    sigma: float,
    count: int,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    rel_gap: float = DEFAULT_REL_GAP,
) -> Spectrum:
    """Lowest ``count`` eigenpairs of (S − σB)u = λMu, M-normalized."""
    n = ops.size
    if count > n:
        raise CountTooLargeError(count, n)
    A = (ops.stiffness - sigma * ops.boundary_mass).tocsr()
    if count >= n - 1:
        values, vectors = _dense_lowest(A, ops.mass, count)
    else:
        shift, lu = _robin_shift(ops, sigma, A)
        values, vectors = _shift_invert(A, ops.mass, count, shift, lu)
    return _finalize(
        kind="robin",
        param=sigma,
        values=values,
        vectors=vectors,
        lhs=A,
        rhs=ops.mass,
        normalization="mass",
        tolerance=tolerance,
        rel_gap=rel_gap,
    )


# --------------------------------------------------------------------------
# Dirichlet and admissibility
# --------------------------------------------------------------------------


def _interior_blocks(ops: OperatorSet) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    ii = ops.interior_vertices
    return (
        ops.stiffness[ii][:, ii].tocsr(),
        ops.mass[ii][:, ii].tocsr(),
    )


def dirichlet_spectrum(
    ops: OperatorSet,
    count: int,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    rel_gap: float = DEFAULT_REL_GAP,
) -> Spectrum:
    """Lowest ``count`` eigenpairs of the interior pencil (S_ii, M_ii)."""
    ii = ops.interior_vertices
    if ii.size == 0:
        msg = "The Dirichlet problem needs at least one interior vertex"
        raise NoInteriorVerticesError(msg)
    if count > ii.size:
        raise CountTooLargeError(count, int(ii.size))
    S_ii, M_ii = _interior_blocks(ops)
    if count >= ii.size - 1:
        values, vectors = _dense_lowest(S_ii, M_ii, count)
    else:
        # S_ii is positive definite for a connected surface with boundary.
        lu = _factor(S_ii)
        values, vectors = _shift_invert(S_ii, M_ii, count, 0.0, lu)

    def extend(v: FloatArray) -> FloatArray:
        full = np.zeros((ops.size, v.shape[1]))
        full[ii] = v
        return full

    return _finalize(
        kind="dirichlet",
        param=0.0,
        values=values,
        vectors=vectors,
        lhs=S_ii,
        rhs=M_ii,
        normalization="mass",
        tolerance=tolerance,
        rel_gap=rel_gap,
        extend=extend,
    )


@dataclass(frozen=True)
class Admissibility:
    """Distance of a frequency c from the Dirichlet spectrum.

    ``margin`` is min |λᴰ − c| / max(1, |c|) over the Dirichlet eigenvalues
    nearest to c; ``below`` counts Dirichlet eigenvalues under c when the
    inertia is available.
    """

    c: float
    admissible: bool
    nearest: float | None
    margin: float
    below: int | None

    def to_payload(self) -> dict[str, Any]:
        return {
            "c": self.c,
            "admissible": self.admissible,
            "nearest_dirichlet": self.nearest,
            "margin": self.margin if np.isfinite(self.margin) else None,
            "dirichlet_below": self.below,
        }


def admissibility_check(
    ops: OperatorSet, c: float, *, tolerance: float = ADMISSIBILITY_TOLERANCE
) -> Admissibility:
    """Whether c stays clear of every Dirichlet eigenvalue."""
    ii = ops.interior_vertices
    if c <= 0.0 or ii.size == 0:
        return Admissibility(c=c, admissible=True, nearest=None, margin=np.inf, below=0)

    S_ii, M_ii = _interior_blocks(ops)
    scale = max(1.0, abs(c))
    below: int | None = None
    if ii.size <= 3:
        values = eigvalsh(S_ii.toarray(), M_ii.toarray())
        below = int((values < c).sum())
    else:
        try:
            lu = _factor(S_ii - c * M_ii)
        except RuntimeError:
            logger.debug("S_ii − %g·M_ii is exactly singular", c)
            return Admissibility(c=c, admissible=False, nearest=c, margin=0.0, below=None)
        below = negative_pivots(lu)
        values, _ = _shift_invert(S_ii, M_ii, min(2, ii.size - 1), c, lu)

    nearest = float(values[np.argmin(np.abs(values - c))])
    margin = abs(nearest - c) / scale
    logger.debug(
        "Admissibility at c=%g: nearest Dirichlet %.10g, margin %.3e, %s below",
        c,
        nearest,
        margin,
        below,
    )
    return Admissibility(
        c=c, admissible=margin >= tolerance, nearest=nearest, margin=margin, below=below
    )


# --------------------------------------------------------------------------
# Steklov at frequency c
# --------------------------------------------------------------------------


def _dense_schur(
    P_bb: sp.csr_matrix, P_bi: sp.csr_matrix, P_ib: sp.csc_matrix, lu: SuperLU | None
) -> FloatArray:
    schur = P_bb.toarray()
    if lu is None:
        return schur
    nb = schur.shape[0]
    for start in range(0, nb, SCHUR_CHUNK):
        stop = min(start + SCHUR_CHUNK, nb)
        solved = lu.solve(P_ib[:, start:stop].toarray())
        schur[:, start:stop] -= P_bi @ solved
    return 0.5 * (schur + schur.T)


def freq_steklov_spectrum(
    ops: OperatorSet,
    c: float,
    count: int,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    rel_gap: float = DEFAULT_REL_GAP,
    admissibility_tolerance: float = ADMISSIBILITY_TOLERANCE,
    check_admissibility: bool = True,
) -> Spectrum:
    """Lowest ``count`` eigenpairs of (S − cM)u = θBu via the boundary Schur complement."""
    b = ops.boundary_vertices
    ii = ops.interior_vertices
    nb = int(b.size)
    if count > nb:
        raise CountTooLargeError(count, nb)
    if c > 0.0 and check_admissibility:
        check = admissibility_check(ops, c, tolerance=admissibility_tolerance)
        if not check.admissible:
            raise InadmissibleMetricError(c, float(check.nearest or c))

    P = shifted_pencil(ops, c).tocsr()
    P_b = P[b]
    P_bb = P_b[:, b].tocsr()
    P_bi = P_b[:, ii].tocsr()
    P_ib = P[ii][:, b].tocsc()
    B_bb = ops.boundary_mass[b][:, b].tocsr()

    lu: SuperLU | None = None
    if ii.size:
        try:
            lu = _factor(P[ii][:, ii])
        except RuntimeError as exc:
            raise InadmissibleMetricError(c, c) from exc

    if nb <= DENSE_SCHUR_LIMIT or count >= nb - 1:
        logger.debug("Dense Schur complement on %d boundary vertices (c=%g)", nb, c)
        schur = _dense_schur(P_bb, P_bi, P_ib, lu)
        values, boundary_vectors = _dense_lowest(schur, B_bb, count)
    else:
        logger.debug("Implicit Schur complement on %d boundary vertices (c=%g)", nb, c)
        factor = lu

        def apply(x: FloatArray) -> FloatArray:
            y = P_bb @ x
            if factor is not None:
                y = y - P_bi @ factor.solve(P_ib @ x)
            return np.asarray(y)

        operator = LinearOperator((nb, nb), matvec=apply, dtype=np.float64)
        try:
            values, boundary_vectors = eigsh(
                operator, k=count, M=B_bb, which="SA", v0=_start_vector(nb)
            )
        except (ArpackNoConvergence, ArpackError) as exc:
            msg = f"ARPACK failed on the Schur complement at c={c:g}: {exc}"
            raise NonConvergenceError(msg) from exc

    def full_vectors(v_b: FloatArray) -> FloatArray:
        full = np.zeros((ops.size, v_b.shape[1]))
        full[b] = v_b
        if lu is not None:
            full[ii] = -lu.solve(np.asarray(P_ib @ v_b))
        return full

    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = full_vectors(boundary_vectors[:, order])
    return _finalize(
        kind="freq_steklov",
        param=c,
        values=values,
        vectors=vectors,
        lhs=P,
        rhs=ops.boundary_mass,
        normalization="boundary_mass",
        tolerance=tolerance,
        rel_gap=rel_gap,
    )


def solve(ops: OperatorSet, spec: EigenProblemSpec) -> Spectrum:
    """Dispatch an :class:`~fbmi.config.EigenProblemSpec` to its solver."""
    match spec.kind:
        case "robin":
            return robin_spectrum(
                ops, spec.param, spec.count, tolerance=spec.tolerance, rel_gap=spec.rel_gap
            )
        case "freq_steklov":
            return freq_steklov_spectrum(
                ops, spec.param, spec.count, tolerance=spec.tolerance, rel_gap=spec.rel_gap
            )
        case "dirichlet":
            return dirichlet_spectrum(
                ops, spec.count, tolerance=spec.tolerance, rel_gap=spec.rel_gap
            )
    msg = f"Unknown eigenproblem kind: {spec.kind}"
    raise ValueError(msg)


def covering_spectrum(
    solve_count: Callable[[int], Spectrum], index: int, available: int
) -> Spectrum:
    """Solve with enough eigenpairs that the cluster of ``index`` is complete.

    A cluster touching the last computed eigenvalue may continue past it,
    so the count grows until the cluster ends strictly inside the range or
    every degree of freedom is used.
    """
    if index >= available:
        raise CountTooLargeError(index + 1, available)
    count = min(index + 1 + CLUSTER_LOOKAHEAD, available)
    while True:
        spectrum = solve_count(count)
        if spectrum.cluster_of(index)[-1] < count - 1 or count == available:
            return spectrum
        count = min(count + CLUSTER_LOOKAHEAD + 1, available)
