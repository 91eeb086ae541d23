"""Pydantic models for every structured parameter set.

Solvers, functionals and the optimizer take these models rather than
loose keyword bundles, so that invalid combinations (a cap radius past
π/2, a zero eigenvalue index, a negative penalty) are rejected once, at
the boundary, with a :class:`~pydantic.ValidationError`. The CLI renders
those errors with :func:`friendly_error`.

The thread count is the only value read from the environment
(``FBMI_THREADS``).
"""

from __future__ import annotations

import math
import os
from typing import Literal, Self

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import (
    ADMISSIBILITY_TOLERANCE,
    DEFAULT_REL_GAP,
    DEFAULT_TOLERANCE,
    SAMPLE_COUNT,
    SAMPLE_SEED,
)

ProblemKind = Literal["robin", "freq_steklov", "dirichlet"]
Normalization = Literal["mass", "boundary_mass"]
Family = Literal["theta", "omega", "xi_plus", "xi_minus", "general"]
Geometry = Literal["spherical", "hyperbolic"]
Dofs = Literal["conformal", "edge_lengths"]
Objective = Literal["xi_plus", "theta_criticality"]

_SPHERICAL_FAMILIES = frozenset({"theta", "xi_plus"})


class EigenProblemSpec(BaseModel):
    """One eigenproblem on a fixed operator set.

    ``param`` is σ for ``robin`` and the frequency c for ``freq_steklov``;
    it is ignored for ``dirichlet``.
    """

    model_config = ConfigDict(extra="ignore", frozen=True)
    kind: ProblemKind
    param: float = 0.0
    count: int = Field(default=1, ge=1)
    tolerance: float = Field(default=DEFAULT_TOLERANCE, gt=0.0)
    rel_gap: float = Field(default=DEFAULT_REL_GAP, ge=0.0)

    @field_validator("param")
    @classmethod
    def _finite_param(cls, v: float) -> float:
        if not math.isfinite(v):
            msg = f"Eigenproblem parameter must be finite, got {v}."
            raise ValueError(msg)
        return v

    @property
    def normalization(self) -> Normalization:
        return "boundary_mass" if self.kind == "freq_steklov" else "mass"


class FunctionalSpec(BaseModel):
    """Which spectral functional to evaluate and with what constants."""

    model_config = ConfigDict(extra="ignore", frozen=True)
    family: Family
    r: float
    i: int = Field(default=1, ge=1)
    k: int = Field(default=2, ge=2)
    alpha1: float = 1.0
    alpha2: float = 2.0
    beta1: float = 1.0
    beta2: float = 1.0
    geometry: Geometry = "spherical"

    @model_validator(mode="after")
    def _radius_range(self) -> Self:
        spherical = self.family in _SPHERICAL_FAMILIES or (
            self.family == "general" and self.geometry == "spherical"
        )
        if spherical and not 0.0 < self.r < math.pi / 2:
            msg = f"Radius r must lie in (0, π/2) for {self.family}, got {self.r}."
            raise ValueError(msg)
        if not spherical and not self.r > 0.0:
            msg = f"Radius r must be positive for {self.family}, got {self.r}."
            raise ValueError(msg)
        return self

    @property
    def frequency(self) -> float:
        """Steklov frequency: k on the sphere, −k in hyperbolic space."""
        if self.family == "omega" or (
            self.family == "general" and self.geometry == "hyperbolic"
        ):
            return -float(self.k)
        return float(self.k)


class OptimizerConfig(BaseModel):
    """Ascent/descent parameters for :mod:`fbmi.optimize`."""

    model_config = ConfigDict(extra="ignore", frozen=True)
    objective: Objective = "xi_plus"
    dofs: Dofs = "conformal"
    r: float = math.pi / 3
    i: int = Field(default=1, ge=1)
    max_iterations: int = Field(default=500, ge=0)
    initial_step: float = Field(default=0.05, gt=0.0)
    shrink: float = Field(default=0.5, gt=0.0, lt=1.0)
    growth: float = Field(default=1.5, ge=1.0)
    sufficient_increase: float = Field(default=1e-4, gt=0.0, lt=1.0)
    min_step: float = Field(default=1e-8, gt=0.0)
    gradient_tolerance: float = Field(default=1e-3, gt=0.0)
    residual_tolerance: float = Field(default=1e-2, gt=0.0)
    tie_tolerance: float = Field(default=1e-2, ge=0.0)
    penalty: float = Field(default=0.0, ge=0.0)
    fd_step: float = Field(default=1e-5, gt=0.0)
    newton_iterations: int = Field(default=10, ge=0)
    admissibility_margin: float = Field(default=ADMISSIBILITY_TOLERANCE, ge=0.0)
    rel_gap: float = Field(default=DEFAULT_REL_GAP, ge=0.0)
    samples: int = Field(default=SAMPLE_COUNT, ge=0)
    seed: int = SAMPLE_SEED
    checkpoint_interval: int = Field(default=10, ge=1)

    @model_validator(mode="after")
    def _radius_range(self) -> Self:
        if not 0.0 < self.r < math.pi / 2:
            msg = f"Radius r must lie in (0, π/2), got {self.r}."
            raise ValueError(msg)
        if self.min_step > self.initial_step:
            msg = "min_step must not exceed initial_step."
            raise ValueError(msg)
        return self


class FbmiSettings(BaseSettings):
    """Process-wide settings; only ``FBMI_THREADS`` is recognised."""

    model_config = SettingsConfigDict(env_prefix="FBMI_", extra="ignore")

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)


def friendly_error(exc: ValidationError) -> str:
    """A readable one-line message from a pydantic validation error.

    Custom validators raise self-descriptive messages, so the field name is
    only prefixed for pydantic's own (type/range) errors.
    """
    for err in exc.errors():
        msg = str(err.get("msg", "invalid")).removeprefix("Value error, ")
        if err.get("type") == "value_error":
            return msg
        loc = ".".join(str(p) for p in err.get("loc", ()))
        return f"{loc}: {msg}" if loc else msg
    return "Invalid parameters."
