# analytic.py - Closed-form DTF for multiplexed, tree and reduced-deadtime detectors
#
# The multiplexed results use the effective-deadtime recursion. Writing
# x_1 = lambda*T_d (or p*N_d) and x_i = lambda*T_d(i) (or p*N_d(i)), the
# fraction of events still unregistered after detector i is
#     R_i = R_{i-1} * x_i / (1 + x_i),   R_0 = 1,
# which is the nested sum of the overall-DTF formula rearranged as a product.
# Detector i registers M_i = (events in window) * R_{i-1} / (1 + x_i).

import math
from dataclasses import dataclass
from typing import NamedTuple

from .config import MEASUREMENT_WINDOW_S
from .core import DeadPulseCount, dead_pulse_count
from .dist import cw_interarrival_densities, pulsed_interarrival_pmfs
from .errors import InvalidArgumentError


# ============================================
# RESULT TYPES
# ============================================

@dataclass(frozen=True)
class EffectiveDeadtimeTable:
    """
    values[i-1] is the effective deadtime of detector i: seconds for CW,
    (fractional) pulses for pulsed sources. values[0] is the physical one.
    """

    values: tuple
    unit: str = "s"

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise InvalidArgumentError("an effective deadtime table needs at least one entry")
        if any(v < 0 or math.isnan(v) for v in values):
            raise InvalidArgumentError("effective deadtimes must be non-negative")
        if any(b > a for a, b in zip(values, values[1:])):
            raise InvalidArgumentError("effective deadtimes must be non-increasing")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def for_detector(self, i):
        """Effective deadtime of detector i, 1-based."""
        if not 1 <= i <= len(self.values):
            raise InvalidArgumentError(f"detector index {i} outside 1..{len(self.values)}")
        return self.values[i - 1]


@dataclass(frozen=True)
class CountBreakdown:
    """Mean counts per detector over the measurement window, and their sum."""

    mean_counts: tuple
    total: float

    def __post_init__(self):
        counts = tuple(float(m) for m in self.mean_counts)
        if any(m < 0 for m in counts):
            raise InvalidArgumentError("mean counts must be non-negative")
        object.__setattr__(self, "mean_counts", counts)
        if not math.isclose(self.total, math.fsum(counts), rel_tol=1e-12, abs_tol=1e-300):
            raise InvalidArgumentError("total must equal the sum of the per-detector counts")


class CaseProbabilities(NamedTuple):
    """
    Overlap geometry of two consecutive detections.
    p_a / p_b: probability of case (a) / (b); mean_a: E_a(delta);
    mean_b: E_b(Delta), NaN when case (b) cannot occur;
    effective_deadtime: p_a (D - mean_a) + p_b (2D - mean_b).
    """

    p_a: float
    p_b: float
    mean_a: float
    mean_b: float
    effective_deadtime: float


# ============================================
# HELPERS
# ============================================

def _check_rate(lam, allow_zero=True):
    if lam is None or not math.isfinite(lam) or lam < 0 or (not allow_zero and lam == 0):
        bound = ">= 0" if allow_zero else "> 0"
        raise InvalidArgumentError(f"lambda must be finite and {bound}, got {lam!r}")


def _check_deadtime(t_d):
    if t_d is None or not math.isfinite(t_d) or t_d <= 0:
        raise InvalidArgumentError(f"deadtime must be finite and > 0, got {t_d!r}")


def _check_detectors(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"detector count must be an integer >= 1, got {n!r}")
    return int(n)


def _check_p(p, allow_zero=True):
    if p is None or not math.isfinite(p) or not 0.0 <= p <= 1.0 or (not allow_zero and p == 0):
        bound = "[0, 1]" if allow_zero else "(0, 1]"
        raise InvalidArgumentError(f"p must lie in {bound}, got {p!r}")


def _saturation(x):
    """x / (1 + x) = 1 - 1/(1 + x), the single-detector loss at load x."""
    return x / (1.0 + x)


def _cascade(loads, events_in_window):
    """Residual product over detector loads; returns (dtf, CountBreakdown)."""
    counts = []
    numerator = 1.0
    denominator = 1.0
    residual = 1.0
    for x in loads:
        counts.append(events_in_window * residual / (1.0 + x))
        numerator *= x
        denominator *= 1.0 + x
        residual = numerator / denominator if math.isfinite(denominator) else residual * _saturation(x)
    dtf = min(max(residual, 0.0), 1.0)
    return dtf, CountBreakdown(mean_counts=tuple(counts), total=math.fsum(counts))


# ============================================
# CW (POISSON) SOURCE
# ============================================

def cw_single_dtf(lam, t_d):
    """Single non-extending detector: 1 - 1/(1 + lambda T_d)."""
    _check_rate(lam)
    _check_deadtime(t_d)
    return _saturation(lam * t_d)


def cw_case_probabilities(lam, t_d):
    """
    Case (a): detector 1 refires after detector 2 has recovered
    (Delta > delta + T_d); case (b) otherwise. With u = exp(-lambda T_d):
        p_a = (1 + u) / 2
        E_a(delta) = (1 - u^2 (1 + 2 lambda T_d)) / (2 lambda (1 - u^2))
        E_b(Delta) = T_d + E[X; X < delta] / p_b,   X ~ Exp(lambda)
    integrated over the densities from cw_interarrival_densities.
    """
    _check_rate(lam, allow_zero=False)
    _check_deadtime(t_d)
    cw_interarrival_densities(lam, t_d)

    x = lam * t_d
    one_minus_u = -math.expm1(-x)
    one_minus_u2 = -math.expm1(-2.0 * x)
    u2 = math.exp(-2.0 * x)

    p_b = one_minus_u / 2.0
    p_a = 1.0 - p_b

    mean_a = (one_minus_u2 - 2.0 * x * u2) / (2.0 * lam * one_minus_u2)

    # E[X; X < delta] averaged over the handoff density
    partial = (one_minus_u / lam - one_minus_u2 / (2.0 * lam) - (one_minus_u2 - 2.0 * x * u2) / (4.0 * lam)) / one_minus_u
    mean_b = t_d + partial / p_b if p_b > 0 else math.nan

    mixed = p_a * (t_d - mean_a) + (p_b * (2.0 * t_d - mean_b) if p_b > 0 else 0.0)
    return CaseProbabilities(p_a, p_b, mean_a, mean_b, mixed)


def cw_effective_deadtimes(lam, t_d, n):
    """T_d(1) = T_d; T_d(i) = T_d(i-1) - (1 - exp(-lambda T_d(i-1))) / (2 lambda)."""
    _check_rate(lam, allow_zero=False)
    _check_deadtime(t_d)
    n = _check_detectors(n)

    values = [float(t_d)]
    for _ in range(1, n):
        prev = values[-1]
        values.append(prev + math.expm1(-lam * prev) / (2.0 * lam))
    return EffectiveDeadtimeTable(values=tuple(values), unit="s")


def cw_multiplexed_dtf(lam, t_d, n):
    """
    Overall DTF of n sequentially switched detectors, with the mean counts
    of each detector over a 1 s window.
    """
    _check_rate(lam)
    _check_deadtime(t_d)
    n = _check_detectors(n)

    if lam == 0:
        return 0.0, CountBreakdown(mean_counts=(0.0,) * n, total=0.0)

    table = cw_effective_deadtimes(lam, t_d, n)
    loads = [lam * v for v in table.values]
    return _cascade(loads, lam * MEASUREMENT_WINDOW_S)


def cw_tree_dtf(lam, t_d, n):
    """Passive beamsplitter tree: each detector sees lambda / N."""
    _check_rate(lam)
    _check_deadtime(t_d)
    n = _check_detectors(n)
    return _saturation(lam * t_d / n)


def cw_reduced_dtf(lam, t_d, n):
    """One detector whose deadtime is cut to T_d / N; same closed form as the tree."""
    return cw_tree_dtf(lam, t_d, n)


# ============================================
# PULSED SOURCE
# ============================================

def pulsed_single_dtf(p, n_d):
    """Single detector dead for N_d pulses: 1 - 1/(1 + p N_d)."""
    _check_p(p)
    n_d = DeadPulseCount(n_d)
    return _saturation(p * n_d)


def pulsed_case_probabilities(p, n_d):
    """
    Pulse-count version of the overlap cases. Case (a): n_Delta >= n_delta + N_d;
    case (b): N_d + 1 <= n_Delta <= n_delta + N_d - 1 with 2 <= n_delta <= N_d.
    Outer sums run over n_delta directly; the n_Delta tails are geometric
    series taken in closed form.
    """
    _check_p(p, allow_zero=False)
    n_d = DeadPulseCount(n_d)
    pmfs = pulsed_interarrival_pmfs(p, n_d)

    weight_a = []
    weight_b = []
    first_moment_b = []
    for m in range(1, n_d + 1):
        handoff = pmfs.handoff(m)
        tail = pmfs.refire_tail(m + n_d)
        weight_a.append(handoff * tail)
        weight_b.append(handoff * (1.0 - tail))
        inner = math.fsum(n * pmfs.refire(n) for n in range(n_d + 1, m + n_d))
        first_moment_b.append(handoff * inner)

    p_a = math.fsum(weight_a)
    p_b = math.fsum(weight_b)
    mean_a = math.fsum(m * w for m, w in zip(range(1, n_d + 1), weight_a)) / p_a
    mean_b = math.fsum(first_moment_b) / p_b if p_b > 0 else math.nan

    mixed = p_a * (n_d - mean_a) + (p_b * (2.0 * n_d - mean_b) if p_b > 0 else 0.0)
    return CaseProbabilities(p_a, p_b, mean_a, mean_b, mixed)


def _pulsed_step(p, prev):
    # (1 - (1-p)^(prev+1)) / ((2-p) p), stable for small p
    if p == 1.0:
        return 1.0
    return -math.expm1((prev + 1.0) * math.log1p(-p)) / ((2.0 - p) * p)


def pulsed_effective_deadtimes(p, n_d, n, floor_at_zero=True):
    """
    N_d(1) = N_d; N_d(i) = N_d(i-1) - (1 - (1-p)^(N_d(i-1)+1)) / ((2-p) p).

    With floor_at_zero the table is clipped at 0, and detectors i >= N_d + 1
    get 0: N_d + 1 detectors can absorb every event of an N_d-pulse window.
    floor_at_zero=False returns the raw recursion, negative entries included,
    as a plain tuple.
    """
    _check_p(p, allow_zero=False)
    n_d = DeadPulseCount(n_d)
    if n_d < 1:
        raise InvalidArgumentError("n_d must be >= 1 for the effective-deadtime recursion")
    n = _check_detectors(n)

    values = [float(n_d)]
    for _ in range(1, n):
        values.append(values[-1] - _pulsed_step(p, values[-1]))

    if not floor_at_zero:
        return tuple(values)

    floored = []
    for i, v in enumerate(values, start=1):
        if i >= n_d + 1 or (floored and floored[-1] == 0.0):
            floored.append(0.0)
        else:
            floored.append(max(v, 0.0))
    return EffectiveDeadtimeTable(values=tuple(floored), unit="pulses")


def pulsed_multiplexed_dtf(p, n_d, n, nu=1.0):
    """
    Overall DTF of n switched detectors on a pulsed source, clamped to [0, 1],
    with mean counts over nu * 1 s pulses.
    """
    _check_p(p)
    n_d = DeadPulseCount(n_d)
    n = _check_detectors(n)
    if not math.isfinite(nu) or nu <= 0:
        raise InvalidArgumentError(f"nu must be > 0, got {nu!r}")

    events_in_window = p * nu * MEASUREMENT_WINDOW_S
    if p == 0:
        return 0.0, CountBreakdown(mean_counts=(0.0,) * n, total=0.0)
    if n_d == 0:
        counts = (events_in_window,) + (0.0,) * (n - 1)
        return 0.0, CountBreakdown(mean_counts=counts, total=events_in_window)

    table = pulsed_effective_deadtimes(p, n_d, n)
    loads = [p * v for v in table.values]
    return _cascade(loads, events_in_window)


def pulsed_tree_dtf(p, n_d, n):
    """Beamsplitter tree on a pulsed source: 1 - 1/(1 + p N_d / N)."""
    _check_p(p)
    n_d = DeadPulseCount(n_d)
    n = _check_detectors(n)
    return _saturation(p * n_d / n)


def pulsed_reduced_dtf(p, nu, t_d, n):
    """
    One detector with deadtime T_d / N: 1 - 1/(1 + p Int(nu T_d / N)).
    Exactly 0 once T_d / N is shorter than the pulse period.
    """
    _check_p(p)
    _check_deadtime(t_d)
    n = _check_detectors(n)
    return _saturation(p * dead_pulse_count(nu, t_d / n))
