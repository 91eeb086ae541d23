"""Numerical defaults shared by the solvers, the optimizer and the CLI."""

from __future__ import annotations

# Version of every JSON report written by fbmi.reports.
SCHEMA_VERSION = 1

# Relative residual ‖Au − λMu‖ / ((‖A‖ + |λ|‖M‖)‖u‖) accepted from a solve.
DEFAULT_TOLERANCE = 1e-8

# Consecutive eigenvalues closer than rel_gap·(1 + |λ|) form one cluster.
DEFAULT_REL_GAP = 1e-4

# min |λᴰ − c| / max(1, |c|) below which a frequency is inadmissible.
ADMISSIBILITY_TOLERANCE = 1e-6

# Boundary size up to which the Schur complement is formed densely.
DENSE_SCHUR_LIMIT = 2000

# Right-hand sides per interior solve when forming the Schur complement.
SCHUR_CHUNK = 200

# Random cluster combinations added to the basis in criticality residuals.
SAMPLE_COUNT = 32
SAMPLE_SEED = 0

# Extra eigenpairs computed past the requested index to see its whole cluster.
CLUSTER_LOOKAHEAD = 3

# Relative safety margin applied to the Robin lower-bound shift.
SHIFT_MARGIN = 0.1

DEFAULT_FD_STEP = 1e-5
DEFAULT_EPSILONS = (0.3, 0.1, 0.03, 0.01)

# Collar width over longest boundary edge below which a strip is rejected.
STRIP_ASPECT_LIMIT = 1e-8

# Cluster eigenvalue spread below which the basis is rotated canonically.
DEGENERATE_SPREAD = 1e-9
