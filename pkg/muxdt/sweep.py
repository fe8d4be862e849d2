# sweep.py - Parameter grids and the sweep runners behind dtf-curve / rate-at-dtf

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config import CSV_SETTINGS, ENGINES, FAMILIES, MODES, SIMULATION_SETTINGS, get_logger
from .core import DetectorPool
from .errors import InvalidArgumentError
from .solve import DtfModel, rate_at_dtf

logger = get_logger(__name__)


# ============================================
# GRIDS
# ============================================

@dataclass(frozen=True)
class GridAxis:
    """Independent-variable axis: 'log' or 'lin' spacing from start to stop, inclusive."""

    kind: str
    start: float
    stop: float
    points: int

    def __post_init__(self):
        if self.kind not in ('log', 'lin'):
            raise InvalidArgumentError(f"grid kind must be 'log' or 'lin', got {self.kind!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise InvalidArgumentError("grid endpoints must be finite")
        if int(self.points) != self.points or self.points < 2:
            raise InvalidArgumentError(f"a grid needs at least 2 points, got {self.points!r}")
        if self.kind == 'log' and (self.start <= 0 or self.stop <= 0):
            raise InvalidArgumentError("log grids need positive endpoints")
        object.__setattr__(self, "points", int(self.points))

    @property
    def values(self):
        if self.kind == 'log':
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.points)
        return np.linspace(self.start, self.stop, self.points)

    def __str__(self):
        return f"{self.kind}:{self.start:g}:{self.stop:g}:{self.points}"


def parse_grid(text):
    """'log:1e5:1e9:61' or 'lin:0.01:1:100'."""
    if text is None or not str(text).strip():
        raise InvalidArgumentError("grid is empty; use kind:start:stop:points")
    parts = str(text).strip().split(':')
    if len(parts) != 4:
        raise InvalidArgumentError(f"grid {text!r} must look like kind:start:stop:points")
    kind, start, stop, points = parts
    try:
        start, stop = float(start), float(stop)
        points_f = float(points)
    except ValueError as e:
        raise InvalidArgumentError(f"grid {text!r} has a non-numeric field") from e
    if not points_f.is_integer():
        raise InvalidArgumentError(f"grid point count must be an integer, got {points!r}")
    return GridAxis(kind=kind.strip().lower(), start=start, stop=stop, points=int(points_f))


# ============================================
# SWEEP CONFIGURATION
# ============================================

@dataclass(frozen=True)
class SweepSpec:
    """
    One DTF curve: a configuration plus the grid to sweep. For the multiplexed
    family the pool is the full detector list; for tree/reduced its size is
    the fan-out / reduction factor; for single only its first deadtime counts.
    """

    mode: str
    engine: str
    family: str
    grid: GridAxis
    pool: DetectorPool
    nu: float = None
    n_events: int = SIMULATION_SETTINGS['n_events']
    batches: int = SIMULATION_SETTINGS['batches']
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.engine not in ENGINES:
            raise InvalidArgumentError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.mode == 'pulsed' and self.grid is not None:
            values = self.grid.values
            if values.min() < 0 or values.max() > 1:
                raise InvalidArgumentError("pulsed grids sweep p and must stay within [0, 1]")
        if self.family != 'multiplexed' and not self.pool.is_homogeneous:
            raise InvalidArgumentError(f"the {self.family} family needs identical deadtimes")
        # building the model validates nu, engine/pool compatibility and run length
        self.model('analytic' if self.engine == 'analytic' else 'montecarlo')

    def model(self, engine, stream_id=0):
        heterogeneous = not self.pool.is_homogeneous
        return DtfModel(
            mode=self.mode,
            family=self.family,
            deadtime=self.pool.deadtimes[0],
            n_detectors=1 if self.family == 'single' else self.pool.n_detectors,
            nu=self.nu,
            engine=engine,
            deadtimes=self.pool.deadtimes if heterogeneous else None,
            n_events=self.n_events,
            batches=self.batches,
            seed=self.seed,
            stream_id=stream_id,
        )

    @property
    def deadtime_label(self):
        if self.pool.is_homogeneous:
            return self.pool.deadtimes[0]
        return ';'.join(repr(t) for t in self.pool.deadtimes)


# ============================================
# RUNNERS
# ============================================

def _curve_point(spec, index, x):
    """One row of a DTF curve; point index doubles as the random stream id."""
    row = {
        'mode': spec.mode,
        'family': spec.family,
        'n_detectors': 1 if spec.family == 'single' else spec.pool.n_detectors,
        'deadtime_s': spec.deadtime_label,
        'rate_or_p': float(x),
        'nu_hz': spec.nu if spec.mode == 'pulsed' else None,
        'engine': spec.engine,
        'dtf': None,
        'std_err': None,
        'n_events': None,
        'seed': None,
    }
    if spec.engine in ('montecarlo', 'both'):
        dtf, std_err = spec.model('montecarlo', stream_id=index).evaluate(float(x))
        row.update(dtf=dtf, std_err=std_err, n_events=int(spec.n_events), seed=int(spec.seed))
    if spec.engine == 'analytic':
        row['dtf'] = spec.model('analytic').dtf(float(x))
    elif spec.engine == 'both':
        row['dtf_analytic'] = spec.model('analytic').dtf(float(x))
    return row


def run_dtf_curve(spec, workers=1):
    """
    Evaluate the curve at every grid point. Points run on a joblib pool and
    come back in grid order; each uses stream (seed, point index), so the
    output does not depend on the number of workers.
    """
    if spec.grid is None:
        raise InvalidArgumentError("a DTF curve needs a grid")
    values = spec.grid.values
    logger.info("dtf-curve %s/%s N=%d over %s (%s, %d workers)",
                spec.mode, spec.family, spec.pool.n_detectors, spec.grid, spec.engine, workers)

    rows = Parallel(n_jobs=int(workers))(
        delayed(_curve_point)(spec, i, x) for i, x in enumerate(values)
    )

    columns = list(CSV_SETTINGS['dtf_curve_columns'])
    if spec.engine == 'both':
        columns.append('dtf_analytic')
    return pd.DataFrame(rows, columns=columns)


def run_rate_at_dtf(spec, target, allow_saturation=False):
    """
    R(DTF = target) for the sweep's configuration and the speedup over a
    single detector solved the same way. Rates are incident rates (events/s).
    Its grid is not used.
    """
    engine = 'analytic' if spec.engine == 'analytic' else 'montecarlo'
    model = spec.model(engine)
    result = rate_at_dtf(model, target, allow_saturation=allow_saturation)

    single = DtfModel(mode=spec.mode, family='single', deadtime=spec.pool.deadtimes[0], nu=spec.nu,
                      engine=engine, n_events=spec.n_events, batches=spec.batches, seed=spec.seed)
    base = rate_at_dtf(single, target)

    if result.saturated:
        logger.warning("%s pool never reaches DTF %.3g; reporting the saturated rate", spec.family, target)

    row = {
        'mode': spec.mode,
        'family': spec.family,
        'n_detectors': model.effective_n,
        'target_dtf': float(target),
        'rate': result.incident_rate,
        'speedup': result.incident_rate / base.incident_rate,
        'iterations': result.iterations,
    }
    return pd.DataFrame([row], columns=CSV_SETTINGS['rate_at_dtf_columns'])
