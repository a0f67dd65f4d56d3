"""Shared numeric defaults.

A single global comparison tolerance governs all approximate equality checks;
individual operations take an optional ``tol`` override.
"""

DEFAULT_TOL = 1e-9

# Condition-number ceiling for linear solves backing interpolation bases and
# jet inversion.
COND_BOUND = 1e9

# Ceiling on the degree of half-plane damping factors.
MAX_DAMPING_DEGREE = 4000

# Bounded retry count for seeded resampling (basis draws, witness points).
RESAMPLE_ROUNDS = 40
