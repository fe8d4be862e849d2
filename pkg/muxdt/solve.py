# solve.py - Rate at a target DTF, speedup curves and the quadratic R-vs-N fit

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial import polynomial as P

from . import analytic
from .config import FAMILIES, MODES, SIMULATION_SETTINGS, SOLVER_SETTINGS, get_logger
from .core import CwSource, DetectorPool, PulsedSource, RandomStream, dead_pulse_count
from .errors import BracketError, InvalidArgumentError, ModelError
from .simulate import SimulationConfig, estimate_dtf

logger = get_logger(__name__)


# ============================================
# DTF MODELS
# ============================================

@dataclass(frozen=True)
class DtfModel:
    """
    DTF as a function of one variable: the photon rate lambda (cw) or the
    per-pulse probability p (pulsed), everything else fixed.

    family 'single' always means one detector; 'tree' and 'reduced' use
    n_detectors as the fan-out / deadtime reduction factor. deadtimes, when
    given, describes a heterogeneous multiplexed pool (Monte Carlo only).
    """

    mode: str
    family: str
    deadtime: float
    n_detectors: int = 1
    nu: float = None
    engine: str = 'analytic'
    deadtimes: tuple = None
    n_events: int = SIMULATION_SETTINGS['n_events']
    batches: int = SIMULATION_SETTINGS['batches']
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.engine not in ('analytic', 'montecarlo'):
            raise InvalidArgumentError(f"engine must be 'analytic' or 'montecarlo', got {self.engine!r}")
        if int(self.n_detectors) != self.n_detectors or self.n_detectors < 1:
            raise InvalidArgumentError(f"n_detectors must be an integer >= 1, got {self.n_detectors!r}")
        if not math.isfinite(self.deadtime) or self.deadtime <= 0:
            raise InvalidArgumentError(f"deadtime must be > 0, got {self.deadtime!r}")
        if self.mode == 'pulsed' and (self.nu is None or not math.isfinite(self.nu) or self.nu <= 0):
            raise InvalidArgumentError("pulsed models need a repetition rate nu > 0")

        if self.deadtimes is not None:
            deadtimes = DetectorPool(tuple(self.deadtimes)).deadtimes
            if self.family != 'multiplexed':
                raise InvalidArgumentError("per-detector deadtimes only apply to the multiplexed family")
            if self.engine == 'analytic' and len(set(deadtimes)) > 1:
                raise InvalidArgumentError("the analytic engine requires identical deadtimes")
            object.__setattr__(self, "deadtimes", deadtimes)
            object.__setattr__(self, "n_detectors", len(deadtimes))

    @property
    def effective_n(self):
        return 1 if self.family == 'single' else int(self.n_detectors)

    def pool(self):
        """Detector pool the simulator runs for this family."""
        n = self.effective_n
        if self.family == 'multiplexed':
            return DetectorPool(self.deadtimes) if self.deadtimes else DetectorPool.homogeneous(n, self.deadtime)
        if self.family == 'reduced':
            return DetectorPool((self.deadtime / n,))
        # tree branches are identical; one branch fed 1/N of the events stands for all
        return DetectorPool((self.deadtime,))

    def source(self, x):
        scale = self.effective_n if self.family == 'tree' else 1
        if self.mode == 'cw':
            return CwSource(x / scale)
        return PulsedSource(self.nu, x / scale)

    def incident_rate(self, x):
        """Events per second at the switch input: lambda, or p * nu."""
        return x if self.mode == 'cw' else x * self.nu

    def default_bracket(self):
        key = 'cw_bracket' if self.mode == 'cw' else 'pulsed_bracket'
        return tuple(SOLVER_SETTINGS[key])

    def analytic_twin(self):
        """Same configuration on the analytic engine (mean deadtime for mixed pools)."""
        deadtime = float(np.mean(self.deadtimes)) if self.deadtimes else self.deadtime
        return replace(self, engine='analytic', deadtimes=None, deadtime=deadtime)

    # --------------------------------------------

    def _analytic_dtf(self, x):
        n = self.effective_n
        t_d = self.deadtime if not self.deadtimes else self.deadtimes[0]
        if self.mode == 'cw':
            if self.family == 'multiplexed':
                return analytic.cw_multiplexed_dtf(x, t_d, n)[0]
            if self.family == 'tree':
                return analytic.cw_tree_dtf(x, t_d, n)
            if self.family == 'reduced':
                return analytic.cw_reduced_dtf(x, t_d, n)
            return analytic.cw_single_dtf(x, t_d)

        n_d = dead_pulse_count(self.nu, t_d)
        if self.family == 'multiplexed':
            return analytic.pulsed_multiplexed_dtf(x, n_d, n, self.nu)[0]
        if self.family == 'tree':
            return analytic.pulsed_tree_dtf(x, n_d, n)
        if self.family == 'reduced':
            return analytic.pulsed_reduced_dtf(x, self.nu, t_d, n)
        return analytic.pulsed_single_dtf(x, n_d)

    def evaluate(self, x, probe=0):
        """(dtf, std_err) at x. Monte Carlo probes each get their own sub-stream."""
        if self.engine == 'analytic':
            return self._analytic_dtf(x), 0.0
        config = SimulationConfig(source=self.source(x), pool=self.pool(),
                                  n_events=int(self.n_events), batches=int(self.batches))
        est = estimate_dtf(config, RandomStream(self.seed, self.stream_id).child(probe))
        return est.dtf, est.std_err

    def dtf(self, x):
        return self.evaluate(x)[0]


# ============================================
# RATE AT TARGET DTF
# ============================================

@dataclass(frozen=True)
class RateAtDtfResult:
    """
    rate is the solved variable (lambda in photons/s, or p); incident_rate
    is always events/s (p * nu for pulsed sources). saturated marks a pulsed
    pool that stays below the target even at p = 1.
    """

    rate: float
    target_dtf: float
    bracket: tuple
    iterations: int
    incident_rate: float = None
    saturated: bool = False

    def __post_init__(self):
        lo, hi = self.bracket
        if not lo <= self.rate <= hi:
            raise InvalidArgumentError(f"rate {self.rate!r} lies outside its bracket {self.bracket!r}")
        if self.incident_rate is None:
            object.__setattr__(self, "incident_rate", self.rate)


def _check_target(target):
    if target is None or not math.isfinite(target) or not 0.0 < target < 1.0:
        raise InvalidArgumentError(f"target DTF must lie in (0, 1), got {target!r}")


def _check_order(x_lo, f_lo, x_mid, f_mid, x_hi, f_hi, slack):
    if f_mid < f_lo - slack or f_mid > f_hi + slack:
        raise ModelError(
            f"DTF is not monotone: f({x_lo:.6g})={f_lo:.6g}, f({x_mid:.6g})={f_mid:.6g}, f({x_hi:.6g})={f_hi:.6g}"
        )


def _shrink_bracket(model, target, lo, hi, f_lo, f_hi):
    """Halve hi / double lo while the target stays bracketed (cw brackets span decades)."""
    while hi / 2.0 > lo:
        f = model.dtf(hi / 2.0)
        if f < target:
            break
        hi, f_hi = hi / 2.0, f
    while lo > 0 and lo * 2.0 < hi:
        f = model.dtf(lo * 2.0)
        if f > target:
            break
        lo, f_lo = lo * 2.0, f
    return lo, hi, f_lo, f_hi


def _mc_bracket(model, target):
    factor = SOLVER_SETTINGS['mc_bracket_factor']
    default = model.default_bracket()
    try:
        guess = rate_at_dtf(model.analytic_twin(), target).rate
    except (BracketError, ModelError):
        return default
    if guess <= 0:
        return default
    lo = max(default[0], guess / factor)
    hi = min(default[1], guess * factor)
    return (lo, hi)


def rate_at_dtf(model, target, bracket=None, rel_tol=None, max_iter=None, allow_saturation=False):
    """
    Bisect model.dtf(x) = target over bracket.

    Analytic models converge to rel_tol on x. Monte Carlo models stop once a
    probe lands within mc_resolution_sigma standard errors of the target, or
    the bracket is narrower than rel_tol; each probe uses its own sub-stream.
    Without an explicit bracket, cw models start from SOLVER_SETTINGS'
    [1, 1e12] and Monte Carlo models from the analytic root widened by
    mc_bracket_factor.
    """
    _check_target(target)
    rel_tol = SOLVER_SETTINGS['rel_tol'] if rel_tol is None else rel_tol
    max_iter = SOLVER_SETTINGS['max_iter'] if max_iter is None else max_iter
    is_mc = model.engine == 'montecarlo'

    if bracket is None:
        if is_mc:
            bracket = _mc_bracket(model, target)
        else:
            bracket = model.default_bracket()
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or lo >= hi:
        raise InvalidArgumentError(f"bracket must satisfy 0 <= lo < hi, got {bracket!r}")
    if model.mode == 'pulsed' and hi > 1.0:
        raise InvalidArgumentError(f"pulsed brackets must lie within [0, 1], got {bracket!r}")

    probe = 0
    f_lo, s_lo = model.evaluate(lo, probe)
    probe += 1
    f_hi, s_hi = model.evaluate(hi, probe)
    probe += 1
    logger.debug("rate_at_dtf %s/%s: bracket [%.6g, %.6g] -> dtf [%.6g, %.6g]",
                 model.mode, model.family, lo, hi, f_lo, f_hi)

    if f_hi < target and allow_saturation and model.mode == 'pulsed' and hi == 1.0:
        logger.info("%s pool stays below DTF %.3g at p=1; reporting saturation", model.family, target)
        return RateAtDtfResult(rate=1.0, target_dtf=target, bracket=(lo, hi), iterations=0,
                               incident_rate=model.incident_rate(1.0), saturated=True)
    if not f_lo <= target <= f_hi:
        raise BracketError(
            f"target DTF {target} is not bracketed: DTF({lo:.6g})={f_lo:.6g}, DTF({hi:.6g})={f_hi:.6g}",
            target=target, bracket=(lo, hi), dtf_range=(f_lo, f_hi),
        )

    if not is_mc and model.mode == 'cw':
        lo, hi, f_lo, f_hi = _shrink_bracket(model, target, lo, hi, f_lo, f_hi)
    search = (lo, hi)

    sigma = SOLVER_SETTINGS['mc_resolution_sigma']
    mid = 0.5 * (lo + hi)
    iterations = 0
    while iterations < max_iter:
        mid = 0.5 * (lo + hi)
        iterations += 1
        f_mid, s_mid = model.evaluate(mid, probe)
        probe += 1

        slack = 3.0 * math.hypot(max(s_lo, s_hi), s_mid) if is_mc else 1e-12
        _check_order(lo, f_lo, mid, f_mid, hi, f_hi, slack)

        if is_mc and abs(f_mid - target) <= sigma * s_mid:
            break
        if f_mid < target:
            lo, f_lo, s_lo = mid, f_mid, s_mid
        else:
            hi, f_hi, s_hi = mid, f_mid, s_mid
        if hi - lo <= rel_tol * max(abs(mid), math.ulp(0.0)):
            mid = 0.5 * (lo + hi)
            break

    logger.debug("rate_at_dtf converged to %.9g after %d iterations", mid, iterations)
    return RateAtDtfResult(rate=mid, target_dtf=target, bracket=search, iterations=iterations,
                           incident_rate=model.incident_rate(mid))


# ============================================
# SPEEDUP CURVES
# ============================================

@dataclass(frozen=True)
class SpeedupPoint:
    n: int
    rate: float
    speedup: float
    iterations: int = 0
    saturated: bool = False


def speedup_curve(model, target, n_max, allow_saturation=False):
    """R_N and R_N / R_1 for N = 1..n_max; rates are incident rates (events/s)."""
    if int(n_max) != n_max or n_max < 1:
        raise InvalidArgumentError(f"n_max must be an integer >= 1, got {n_max!r}")
    if model.deadtimes:
        raise InvalidArgumentError("speedup curves need a homogeneous pool description")

    points = []
    base = None
    for n in range(1, int(n_max) + 1):
        result = rate_at_dtf(replace(model, n_detectors=n), target, allow_saturation=allow_saturation)
        if base is None:
            base = result.incident_rate
        points.append(SpeedupPoint(
            n=n,
            rate=result.incident_rate,
            speedup=result.incident_rate / base,
            iterations=result.iterations,
            saturated=result.saturated,
        ))
        logger.debug("speedup %s N=%d: R=%.6g (x%.4g)", model.family, n, result.incident_rate, points[-1].speedup)
    return points


# ============================================
# QUADRATIC FIT
# ============================================

@dataclass(frozen=True)
class PolyFit2:
    """R(N) ~ c0 + c1 N + c2 N^2."""

    c0: float
    c1: float
    c2: float
    r_squared: float
    degenerate: bool = False

    @property
    def coefficients(self):
        return (self.c0, self.c1, self.c2)

    def __call__(self, n):
        return P.polyval(n, self.coefficients)


def fit_poly2(points):
    """
    Least-squares quadratic through (N, R_N) points. With fewer than three
    distinct N the quadratic term is undetermined: the fit drops to the
    highest degree the data supports and is flagged degenerate with c2 = 0.
    """
    points = list(points)
    if len(points) < 3:
        raise InvalidArgumentError(f"a quadratic fit needs at least 3 points, got {len(points)}")

    x = np.array([float(p[0]) for p in points])
    y = np.array([float(p[1]) for p in points])
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidArgumentError("fit points must be finite")

    distinct = np.unique(x).size
    degree = min(2, distinct - 1)
    coeffs = np.zeros(3)
    coeffs[:degree + 1] = P.polyfit(x, y, degree)

    residuals = y - P.polyval(x, coeffs)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    r_squared = min(max(r_squared, 0.0), 1.0)

    return PolyFit2(c0=float(coeffs[0]), c1=float(coeffs[1]), c2=float(coeffs[2]),
                    r_squared=r_squared, degenerate=degree < 2)
