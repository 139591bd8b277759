import os
import logging
from dotenv import load_dotenv

# Setup logging
logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()


def _positive_int(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise EnvironmentError(f"Environment variable {name} must be an integer, got {raw!r}")
    if value < 1:
        raise EnvironmentError(f"Environment variable {name} must be >= 1, got {value}")
    return value


def _positive_float(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise EnvironmentError(f"Environment variable {name} must be a number, got {raw!r}")
    if not value > 0:
        raise EnvironmentError(f"Environment variable {name} must be positive, got {value}")
    return value


def thread_count():
    """Worker threads for Matsubara and multipole-block reductions.

    Read on every call so a CLI flag exported into the environment takes effect.
    """
    return _positive_int("SPHEREPLATE_THREADS", os.cpu_count() or 1)


# Default tolerance of the n=0 bispherical series
SERIES_TOL = _positive_float("SPHEREPLATE_SERIES_TOL", 1e-12)

# Relative refinement tolerance of the plate quadratures
QUAD_RTOL = _positive_float("SPHEREPLATE_QUAD_RTOL", 1e-9)

logger.debug(f"Settings: threads={thread_count()}, series_tol={SERIES_TOL}, quad_rtol={QUAD_RTOL}")
