"""
Configuration management for the linear-quadratic separation toolkit
Load from environment variables (.env file) with built-in defaults
"""

import os
from pathlib import Path

# Load from .env file if present
try:
    from dotenv import load_dotenv
    env_file = Path(__file__).parent / '.env'
    if env_file.exists():
        load_dotenv(env_file)
except ImportError:
    pass  # python-dotenv not installed, use env vars directly


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ('true', '1', 'yes')


# ============================================================================
# Numerical Floors
# ============================================================================
# Samples with |J| below this are rejected (1/J terms are unbounded near J=0)
JACOBIAN_FLOOR = float(os.getenv('LQBSS_JACOBIAN_FLOOR', '1e-8'))

# Discriminants in (-eps, 0) are treated as a double root
DISCRIMINANT_EPS = float(os.getenv('LQBSS_DISCRIMINANT_EPS', '1e-12'))

# ============================================================================
# Recurrent Separating Structure
# ============================================================================
RECURRENCE_MAX_ITERATIONS = int(os.getenv('LQBSS_RECURRENCE_MAX_ITERATIONS', '200'))
RECURRENCE_TOLERANCE = float(os.getenv('LQBSS_RECURRENCE_TOLERANCE', '1e-10'))
RECURRENCE_DIVERGENCE_BOUND = float(os.getenv('LQBSS_RECURRENCE_DIVERGENCE_BOUND', '1e6'))

# ============================================================================
# Score Estimation
# ============================================================================
# Kernel density is floored at this fraction of its maximum before dividing
DENSITY_FLOOR_RATIO = float(os.getenv('LQBSS_DENSITY_FLOOR_RATIO', '1e-8'))

# Knots of the tabulated kernel score
KERNEL_GRID_SIZE = int(os.getenv('LQBSS_KERNEL_GRID_SIZE', '512'))

# Minimum sample count for a kernel fit
KERNEL_MIN_SAMPLES = 10

# ============================================================================
# Optimizer
# ============================================================================
LEARNING_RATE = float(os.getenv('LQBSS_LEARNING_RATE', '0.01'))
MAX_EPOCHS = int(os.getenv('LQBSS_MAX_EPOCHS', '500'))
GRADIENT_NORM_TOLERANCE = float(os.getenv('LQBSS_GRADIENT_NORM_TOLERANCE', '1e-6'))
KERNEL_REFIT_EVERY = int(os.getenv('LQBSS_KERNEL_REFIT_EVERY', '1'))

# Epoch summaries are logged at INFO every this many epochs
PROGRESS_EVERY = int(os.getenv('LQBSS_PROGRESS_EVERY', '50'))

# ============================================================================
# Finite-Difference Oracle
# ============================================================================
FD_STEP = float(os.getenv('LQBSS_FD_STEP', '1e-6'))
FD_RELATIVE_TOLERANCE = float(os.getenv('LQBSS_FD_RELATIVE_TOLERANCE', '1e-5'))

# References smaller than FD_NEAR_ZERO are compared in absolute terms
FD_NEAR_ZERO = 1e-6
FD_ABSOLUTE_FALLBACK = 1e-9

# A perturbed root further than this many steps away means a branch switch
FD_BRANCH_JUMP_FACTOR = 100.0

# Gradcheck campaign
GRADCHECK_CONFIGS = int(os.getenv('LQBSS_GRADCHECK_CONFIGS', '100'))
GRADCHECK_SAMPLES = int(os.getenv('LQBSS_GRADCHECK_SAMPLES', '20'))
GRADCHECK_MIN_JACOBIAN = 0.1
GRADCHECK_LEGACY_MIN_Q = 0.2
GRADCHECK_LEGACY_MIN_ABS_SOURCE = 0.1
GRADCHECK_LEGACY_RATIO = 10.0
GRADCHECK_LEGACY_SHARE = 0.95

# ============================================================================
# Experiments
# ============================================================================
SAMPLE_COUNT = int(os.getenv('LQBSS_SAMPLE_COUNT', '1000'))
SEED = int(os.getenv('LQBSS_SEED', '7'))
OUTPUT_DIR = os.getenv('LQBSS_OUTPUT_DIR', 'output')

# Reported SIR when the residual vanishes
SIR_CAP_DB = 300.0

# Figure scenarios: name -> source half-range
FIGURE_SCENARIOS = {
    'bounded': 0.5,
    'wide': 2.0,
}
FIGURE_LOCUS_POINTS = 200
STABILITY_GRID_SIZE = int(os.getenv('LQBSS_STABILITY_GRID_SIZE', '11'))

# ============================================================================
# Logging Configuration
# ============================================================================
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FORMAT = os.getenv('LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
LOG_FILE = os.getenv('LOG_FILE', 'lq_separation.log')

# ============================================================================
# Error Handling
# ============================================================================
# Keep a gradcheck campaign going after a per-case oracle error
CONTINUE_ON_ERROR = _env_bool('CONTINUE_ON_ERROR', 'true')
