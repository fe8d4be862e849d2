# config.py - Settings, environment overrides and logging for muxdt

import logging
import os

from rich.console import Console
from rich.logging import RichHandler

from .errors import InvalidArgumentError

# ============================================
# CONFIGURATION
# ============================================

LOG_FILE = os.environ.get("MUXDT_LOG_FILE")
LOG_LEVEL = os.environ.get("MUXDT_LOG_LEVEL", "WARNING").upper()

# Analytic counts are reported over a one second window (T >> T_d)
MEASUREMENT_WINDOW_S = 1.0

SIMULATION_SETTINGS = {
    'n_events': 1_000_000,
    'batches': 10,
    'workers': 1,
}

SOLVER_SETTINGS = {
    'cw_bracket': (1.0, 1e12),
    'pulsed_bracket': (0.0, 1.0),
    'rel_tol': 1e-6,
    'max_iter': 200,
    # Monte Carlo brackets start from the analytic root, widened by this factor
    'mc_bracket_factor': 4.0,
    # probes this many std_err away from the target still count as a hit
    'mc_resolution_sigma': 1.0,
}

FIGURE_SETTINGS = {
    'deadtime': 50e-9,
    'target_dtf': 0.10,
    'cw_detectors': tuple(range(1, 13)),
    'cw_grid': 'log:1e5:1e10:101',
    'cw_reduced_deadtime': 5e-9,
    'pulsed_detectors': tuple(range(1, 6)),
    'pulsed_grid': 'lin:0.01:1:100',
    'pulsed_reduction': 4,
    'rep_rates': {
        'a': 82e6,
        'b': 410e6,
    },
}

CSV_SETTINGS = {
    # 17 significant digits, parses back to the same double
    'float_format': '%.16e',
    'dtf_curve_columns': [
        'mode', 'family', 'n_detectors', 'deadtime_s', 'rate_or_p', 'nu_hz',
        'engine', 'dtf', 'std_err', 'n_events', 'seed',
    ],
    'rate_at_dtf_columns': [
        'mode', 'family', 'n_detectors', 'target_dtf', 'rate', 'speedup',
        'iterations',
    ],
    'fit_columns': ['family', 'c0', 'c1', 'c2', 'r_squared', 'degenerate'],
}

EXIT_CODES = {
    'ok': 0,
    'usage': 1,
    'numerical': 2,
    'self_check': 3,
}

MODES = ('cw', 'pulsed')
FAMILIES = ('multiplexed', 'tree', 'reduced', 'single')
ENGINES = ('analytic', 'montecarlo', 'both')


def default_seed():
    """Seed used when --seed is absent: MUXDT_SEED, else 0."""
    raw = os.environ.get("MUXDT_SEED")
    if raw is None or raw.strip() == "":
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"MUXDT_SEED must be a non-negative integer, got {raw!r}") from None
    if seed < 0:
        raise InvalidArgumentError(f"MUXDT_SEED must be a non-negative integer, got {raw!r}")
    return seed


# ============================================
# LOGGING
# ============================================

_configured = False


def _configure_root():
    global _configured
    if _configured:
        return

    root = logging.getLogger("muxdt")
    root.setLevel(LOG_LEVEL)
    root.addHandler(RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False))

    if LOG_FILE:
        file_handler = logging.FileHandler(LOG_FILE)
        file_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(message)s"))
        root.addHandler(file_handler)

    root.propagate = False
    _configured = True


def get_logger(name):
    """
    Logger under the muxdt hierarchy. Console output goes through rich on
    stderr; MUXDT_LOG_FILE adds a timestamped file log.
    """
    _configure_root()
    if not name.startswith("muxdt"):
        name = f"muxdt.{name}"
    return logging.getLogger(name)
