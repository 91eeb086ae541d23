"""Error classes for intrinsic-fem."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .mesh import MetricDiagnostics


class IntrinsicFemError(Exception):
    """Base exception for mesh and assembly errors."""


class MeshError(IntrinsicFemError):
    """The triangulation violates a surface-with-boundary invariant."""


class MeshParseError(MeshError):
    """A mesh, lengths or conformal-factor file could not be parsed."""

    def __init__(self, path: str, line: int, message: str) -> None:
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class NonManifoldError(MeshError):
    """An edge is shared by more than two triangles."""

    def __init__(self, edge: tuple[int, int], triangle_count: int) -> None:
        self.edge = edge
        self.triangle_count = triangle_count
        super().__init__(
            f"Non-manifold edge {edge}: shared by {triangle_count} triangles"
        )


class DisconnectedMeshError(MeshError):
    """The triangulation has more than one connected component."""

    def __init__(self, components: int) -> None:
        self.components = components
        super().__init__(f"Mesh is disconnected ({components} components)")


class BoundaryError(MeshError):
    """The boundary is empty or not a disjoint union of simple cycles."""


class InvalidMetricError(IntrinsicFemError):
    """Edge lengths are non-positive or break a triangle inequality."""

    def __init__(self, diagnostics: MetricDiagnostics) -> None:
        self.diagnostics = diagnostics
        super().__init__(diagnostics.summary())


class DegenerateTriangleError(IntrinsicFemError):
    """A triangle is too flat for its cotangent weights to be representable."""

    def __init__(self, triangle: int, detail: str) -> None:
        self.triangle = triangle
        super().__init__(f"Degenerate triangle {triangle}: {detail}")
