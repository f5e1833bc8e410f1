"""Convenience variables used across the package."""

NO_TRANSACTION = "NoTransaction"

# Normalization checked on construction, and after arithmetic.
NORM_TOLERANCE = 1e-12
ARITHMETIC_TOLERANCE = 1e-10

# An absorber below this weight still answers, but never forms a transaction.
WEIGHT_FLOOR = 1e-12
DEAD_BRANCH_WEIGHT = 1e-10
CONSERVATION_TOLERANCE = 1e-9
INTERVAL_TIE_TOLERANCE = 1e-9

TOLERANCE_SIGMAS = 4.0
DEFAULT_TRIALS = 100_000
SEED_ENV_VAR = "HANDSHAKE_SEED"
