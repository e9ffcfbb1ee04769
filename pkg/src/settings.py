"""
Runtime settings for opalgs.

Environment variables (all optional, defaults suit desk-scale experiments):
  OPALGS_BACKEND           - "exact" or "numeric" (default: "exact")
  OPALGS_SEED              - seed for every randomized routine (default: 0)
  OPALGS_BUDGET            - invariant-subspace search restarts (default: 50)
  OPALGS_SAMPLE_SIZE       - random elements sampled by projection searches (default: 20)
  OPALGS_EPS_ABS           - numeric absolute tolerance (default: 1e-10)
  OPALGS_EPS_REL           - numeric relative tolerance (default: 1e-9)
  OPALGS_RANK_THRESHOLD    - singular value / pivot cutoff (default: 1e-8)
  OPALGS_ENUMERATION_GUARD - largest n for anti-orthogonality enumeration (default: 16)
  OPALGS_BRUTE_FORCE_GUARD - largest n for brute-force chain search (default: 6)
  OPALGS_LOG_LEVEL         - logging level name (default: "INFO")
"""

import os


def _float(name: str, default: float) -> float:
    return float(os.environ.get(name, default))


def _int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


BACKEND = os.environ.get("OPALGS_BACKEND", "exact").lower()

SEED = _int("OPALGS_SEED", 0)

SEARCH_BUDGET = _int("OPALGS_BUDGET", 50)

SAMPLE_SIZE = _int("OPALGS_SAMPLE_SIZE", 20)

EPS_ABS = _float("OPALGS_EPS_ABS", 1e-10)
EPS_REL = _float("OPALGS_EPS_REL", 1e-9)
RANK_THRESHOLD = _float("OPALGS_RANK_THRESHOLD", 1e-8)

# Exhaustive enumerations are exponential in n
ENUMERATION_GUARD = _int("OPALGS_ENUMERATION_GUARD", 16)
BRUTE_FORCE_GUARD = _int("OPALGS_BRUTE_FORCE_GUARD", 6)

LOG_LEVEL = os.environ.get("OPALGS_LOG_LEVEL", "INFO").upper()
