"""Error classes for fbmi."""

from __future__ import annotations


class FbmiError(Exception):
    """Base exception for spectral, functional and certification errors."""


class SpectrumError(FbmiError):
    """An eigenproblem could not be solved as requested."""


class CountTooLargeError(SpectrumError):
    """More eigenpairs were requested than the problem has degrees of freedom."""

    def __init__(self, count: int, available: int) -> None:
        self.count = count
        self.available = available
        super().__init__(
            f"Requested {count} eigenpairs but the problem has only {available} "
            "degrees of freedom"
        )


class NonConvergenceError(SpectrumError):
    """The eigensolver stopped before meeting the residual target."""


class InadmissibleMetricError(FbmiError):
    """The frequency is (numerically) a Dirichlet eigenvalue of the metric."""

    def __init__(self, c: float, nearest: float) -> None:
        self.c = c
        self.nearest = nearest
        super().__init__(
            f"Metric is not admissible at frequency {c:g}: nearest Dirichlet "
            f"eigenvalue is {nearest:.10g}"
        )


class ClusteredEigenvalueError(FbmiError):
    """A derivative was requested for an eigenvalue that is not simple."""

    def __init__(self, index: int, cluster: tuple[int, ...]) -> None:
        self.index = index
        self.cluster = cluster
        super().__init__(
            f"Eigenvalue {index} is not simple: cluster {list(cluster)}"
        )


class NoInteriorVerticesError(FbmiError):
    """The Dirichlet problem needs at least one interior vertex."""


class NoCandidateImmersionError(FbmiError):
    """The eigenspace does not support a candidate free boundary immersion."""


class StripUnresolvableError(FbmiError):
    """The boundary strip of a degeneration step cannot be represented."""

    def __init__(self, epsilon: float, detail: str) -> None:
        self.epsilon = epsilon
        super().__init__(f"Strip at epsilon={epsilon:g} is unresolvable: {detail}")


class CheckpointError(FbmiError):
    """An optimizer checkpoint is unreadable or belongs to another run."""


class TiedBranchesError(FbmiError):
    """A single gradient was requested where several min branches are active."""

    def __init__(self, branches: tuple[str, ...]) -> None:
        self.branches = branches
        super().__init__(
            f"Functional is nonsmooth here: branches {', '.join(branches)} are tied"
        )
