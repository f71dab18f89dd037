import os
from typing import Optional

# Character configuration
DEFAULT_TWIST = int(os.getenv("PRSBOX_TWIST", "1"))

# Tolerance configuration
ABS_TOLERANCE_FACTOR = 1e-6  # tau_abs = factor * max(1, p)
REL_TOLERANCE = 1e-9

# Enumeration configuration
BRUTE_FORCE_MAX_P = int(os.getenv("PRSBOX_BRUTE_FORCE_MAX_P", "4096"))
MAX_VECTOR_P = 2**31  # a*x + b*y must stay inside int64
MAX_FIELD_P = 2**64
CHUNK_ELEMENTS = 1 << 22  # upper bound on one counts matrix (rows * p)

# Sweep configuration
DEFAULT_WORKERS = int(os.getenv("PRSBOX_WORKERS", "1"))
OUTPUT_DIR = os.getenv("PRSBOX_OUTPUT_DIR", "results")
FIGURE_PRIME_LIMIT = 2048
GKRS_PRIME_LIMIT = 1024
FIGURE_SUBGROUP_INDICES = [2, 4, 8, 16]
SELFTEST_PRIMES = [7, 11, 13, 31, 61]
SELFTEST_RANDOM_PAIRS = 8  # seeded (a, b) per (p, m) on top of the fixed ones
FLOAT_DIGITS = 12
KLOOSTERMAN_TIGHTNESS_MIN = 0.8  # floor on max |K| / (2 sqrt(p)) for the kloosterman preset

CSV_HEADER = [
    "family",
    "p",
    "m",
    "d_spec",
    "case",
    "max_abs",
    "witness_a",
    "witness_b",
    "bound",
    "ratio",
    "informative",
]

# Logging configuration
LOG_LEVEL = os.getenv("PRSBOX_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(filename)s:%(lineno)s - [%(levelname)s] - %(message)s"


class ToleranceConfig:
    """Tolerance policy shared by spectra checks and bound certification."""

    def __init__(
        self,
        abs_factor: Optional[float] = None,
        rel_tolerance: Optional[float] = None,
    ):
        self.abs_factor = ABS_TOLERANCE_FACTOR if abs_factor is None else abs_factor
        self.rel_tolerance = REL_TOLERANCE if rel_tolerance is None else rel_tolerance

    def absolute(self, p: int) -> float:
        """Absolute slack tau_abs for sums over a field of size p."""
        return self.abs_factor * max(1, p)

    def certifies(self, max_abs: float, bound: float, p: int) -> bool:
        """Whether an observed maximum respects a bound up to float slack."""
        return max_abs <= bound * (1.0 + self.rel_tolerance) + self.absolute(p)

    def ratio(self, max_abs: float, bound: float, p: int) -> float:
        """max_abs / bound, with zero bounds measured against tau_abs."""
        return max_abs / max(bound, self.absolute(p))


tolerance = ToleranceConfig()
