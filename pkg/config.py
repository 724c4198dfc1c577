"""
Configuration module for srmkit.
Loads environment variables and provides configuration constants.
"""

import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

TOOLKIT_VERSION = "1.0.0"

# ============================================================================
# LOGGING CONFIGURATION
# ============================================================================
LOG_LEVEL = os.getenv("SRMKIT_LOG_LEVEL", "INFO")
LOG_DIR = os.getenv("SRMKIT_LOG_DIR", "logs")

# Note: Logging is configured by srmkit.py so library imports stay side-effect free
logger = logging.getLogger(__name__)

# ============================================================================
# SOLVER CONFIGURATION
# ============================================================================
MAX_ITERS = int(os.getenv("SRMKIT_MAX_ITERS", "200"))
TOL = float(os.getenv("SRMKIT_TOL", "1e-9"))

# ============================================================================
# STATISTICS CONFIGURATION
# ============================================================================
BOOTSTRAP_RESAMPLES = int(os.getenv("SRMKIT_BOOTSTRAP_RESAMPLES", "10000"))
CI_LEVEL = float(os.getenv("SRMKIT_CI_LEVEL", "0.95"))

# ============================================================================
# REPRODUCIBILITY / EXECUTION
# ============================================================================
DEFAULT_SEED = int(os.getenv("SRMKIT_DEFAULT_SEED", "0"))

# Parallel workers; 1 keeps results bitwise reproducible
THREADS = int(os.getenv("SRMKIT_THREADS", "1"))

# Format used when a command writes matrices and no --format is given
MATRIX_FORMAT = os.getenv("SRMKIT_MATRIX_FORMAT", "binary").lower()

# ============================================================================
# SIMULATION DEFAULTS (desk-scale)
# ============================================================================
SIM_UNITS = 64
SIM_EXAMPLES = 1024
SIM_NETWORKS = 10
SIM_RUNS = 50
SIM_SPLIT_FRACTION = 0.5

# ============================================================================
# TOLERANCES
# ============================================================================
# ~100-1000x machine epsilon, scaled to desk-scale problem sizes
ORTHOGONALITY_TOL = 1e-12      # random transforms: ||Q^T Q - I||_max
FACTOR_TOL = 1e-10             # SVD factor orthonormality, RSM structure
RECONSTRUCTION_TOL = 1e-8      # thin SVD reconstruction, relative to ||A||_F
CONSTRAINT_TOL = 1e-8          # W_i^T W_i = I_k after every solver iteration
MONOTONE_SLACK = 1e-10         # allowed objective increase between iterations
RSM_MATCH_TOL = 1e-8           # build_srm_from_rsm_equal precondition
SPECTRUM_GAP_TOL = 1e-8        # distinct singular values
DEGENERATE_COLUMN_TOL = 1e-12  # centred column norm relative to its scale
PERFECT_FIT_TOL = 1e-20        # objective / total energy treated as exact fit

# ============================================================================
# REPORT CONVENTIONS
# ============================================================================
REPORT_SCHEMA_VERSION = 1
VECTORIZATION_RULE = (
    "strict-upper-triangle; inter-network RSMs averaged over ordered pairs "
    "i != j then symmetrized as (M + M^T)/2"
)
STANDARDIZATION_POLICY = "column z-score (centre across units, unit Euclidean norm)"
SHARED_RSM_RULE = "gram of column-unit-normalized shared responses (no re-centring)"
SUPPORTED_MATRIX_FORMATS = ["binary", "csv"]


# ============================================================================
# VALIDATION
# ============================================================================
def validate_config():
    """Validate that environment-provided values are usable."""
    problems = []

    if MAX_ITERS < 1:
        problems.append("SRMKIT_MAX_ITERS")
    if TOL < 0:
        problems.append("SRMKIT_TOL")
    if BOOTSTRAP_RESAMPLES < 1:
        problems.append("SRMKIT_BOOTSTRAP_RESAMPLES")
    if not 0 < CI_LEVEL < 1:
        problems.append("SRMKIT_CI_LEVEL")
    if THREADS < 1:
        problems.append("SRMKIT_THREADS")
    if MATRIX_FORMAT not in SUPPORTED_MATRIX_FORMATS:
        problems.append("SRMKIT_MATRIX_FORMAT")

    if problems:
        logger.warning(f"Invalid configuration values: {', '.join(problems)}")
        logger.warning("Please fix these in your .env file")
        return False

    return True
