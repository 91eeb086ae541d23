"""Central finite-difference validation of metric gradients."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from intrinsic_fem.assembly import assemble

from .constants import DEFAULT_FD_STEP, DEFAULT_REL_GAP
from .derivatives import (
    dof_vector,
    grad_freq_steklov_eigenvalue,
    grad_robin_eigenvalue,
    metric_from_dofs,
)
from .functionals import eval_functional, grad_functional
from .parallel import ordered_map
from .spectra import covering_spectrum, freq_steklov_spectrum, robin_spectrum

if TYPE_CHECKING:
    from intrinsic_fem.assembly import MassMode
    from intrinsic_fem.mesh import DiscreteMetric, FloatArray, SimplicialMesh

    from .config import Dofs, FunctionalSpec

logger = logging.getLogger(__name__)

Quantity = Callable[["DiscreteMetric"], float]
Gradient = Callable[["DiscreteMetric"], "FloatArray"]


@dataclass(frozen=True, eq=False)
class GradientCheck:
    """Analytic against central-difference directional derivatives."""

    label: str
    dofs: Dofs
    fd_step: float
    analytic: FloatArray
    finite: FloatArray

    @property
    def errors(self) -> FloatArray:
        scale = np.maximum(np.maximum(np.abs(self.analytic), np.abs(self.finite)), 1e-12)
        result: FloatArray = np.abs(self.analytic - self.finite) / scale
        return result

    @property
    def max_error(self) -> float:
        return float(self.errors.max()) if self.errors.size else 0.0

    def to_payload(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "dofs": self.dofs,
            "fd_step": self.fd_step,
            "trials": int(self.analytic.size),
            "max_relative_error": self.max_error,
            "analytic": self.analytic.tolist(),
            "finite_difference": self.finite.tolist(),
        }


def check_gradient(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    value: Quantity,
    gradient: Gradient,
    *,
    label: str,
    dofs: Dofs = "edge_lengths",
    fd_step: float = DEFAULT_FD_STEP,
    trials: int = 10,
    seed: int = 0,
    threads: int = 1,
) -> GradientCheck:
    """Compare ∇F·h with (F(x + εh) − F(x − εh)) / 2ε along seeded directions.

    Edge-length directions are relative (h = ℓ∘ξ) so that every trial
    metric stays valid; conformal directions are ξ itself, |ξ| ≤ 1.
    """
    x = dof_vector(mesh, metric, dofs)
    g = gradient(metric)
    rng = np.random.default_rng(seed)
    directions = []
    for _ in range(trials):
        xi = rng.standard_normal(x.size)
        xi /= np.abs(xi).max()
        directions.append(xi * x if dofs == "edge_lengths" else xi)

    def central(h: FloatArray) -> float:
        plus = value(metric_from_dofs(mesh, metric, x + fd_step * h, dofs))
        minus = value(metric_from_dofs(mesh, metric, x - fd_step * h, dofs))
        return (plus - minus) / (2.0 * fd_step)

    finite = np.asarray(ordered_map(central, directions, threads))
    analytic = np.asarray([float(g @ h) for h in directions])
    check = GradientCheck(
        label=label, dofs=dofs, fd_step=fd_step, analytic=analytic, finite=finite
    )
    logger.info("%s: max relative FD error %.3e over %d trials", label, check.max_error, trials)
    return check


def check_eigenvalue_gradient(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    kind: str,
    param: float,
    index: int,
    *,
    mass_mode: MassMode = "consistent",
    rel_gap: float = DEFAULT_REL_GAP,
    **kwargs: Any,
) -> GradientCheck:
    """Gradient check of a simple Robin (σ) or frequency-Steklov (c) eigenvalue."""
    dofs = kwargs.get("dofs", "edge_lengths")

    def value(m: DiscreteMetric) -> float:
        ops = assemble(mesh, m, mass_mode=mass_mode)
        if kind == "robin":
            spectrum = covering_spectrum(
                lambda n: robin_spectrum(ops, param, n, rel_gap=rel_gap), index, ops.size
            )
        else:
            spectrum = covering_spectrum(
                lambda n: freq_steklov_spectrum(ops, param, n, rel_gap=rel_gap),
                index,
                int(ops.boundary_vertices.size),
            )
        return float(spectrum.eigenvalues[index])

    def gradient(m: DiscreteMetric) -> FloatArray:
        ops = assemble(mesh, m, mass_mode=mass_mode)
        grad = grad_robin_eigenvalue if kind == "robin" else grad_freq_steklov_eigenvalue
        return grad(ops, mesh, m, param, index, dofs=dofs, rel_gap=rel_gap).vector

    label = f"{kind}({param:g})[{index}]"
    return check_gradient(mesh, metric, value, gradient, label=label, **kwargs)


def check_functional_gradient(
    mesh: SimplicialMesh,
    metric: DiscreteMetric,
    spec: FunctionalSpec,
    *,
    mass_mode: MassMode = "consistent",
    rel_gap: float = DEFAULT_REL_GAP,
    **kwargs: Any,
) -> GradientCheck:
    """Gradient check of a functional at a point where it is differentiable."""
    dofs = kwargs.get("dofs", "edge_lengths")

    def value(m: DiscreteMetric) -> float:
        return eval_functional(spec, mesh, m, mass_mode=mass_mode, rel_gap=rel_gap).value

    def gradient(m: DiscreteMetric) -> FloatArray:
        return grad_functional(
            spec, mesh, m, dofs=dofs, mass_mode=mass_mode, rel_gap=rel_gap
        ).gradient.vector

    label = f"{spec.family}(r={spec.r:g}, i={spec.i})"
    return check_gradient(mesh, metric, value, gradient, label=label, **kwargs)
