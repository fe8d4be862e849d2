# dist.py - Counting distributions for the analytic engine and the simulators

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import DeadPulseCount
from .errors import InvalidArgumentError


def _check_probability(p, lower_open=False):
    if p is None or not math.isfinite(p) or not 0.0 <= p <= 1.0 or (lower_open and p == 0.0):
        bounds = "(0, 1]" if lower_open else "[0, 1]"
        raise InvalidArgumentError(f"probability must lie in {bounds}, got {p!r}")


def _check_count(name, value, minimum):
    if int(value) != value or value < minimum:
        raise InvalidArgumentError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


# ============================================
# BINOMIAL / GEOMETRIC FAMILY
# ============================================

@dataclass(frozen=True)
class GeneralizedGeometricParams:
    """Waiting time (in pulses) for the k-th event at per-pulse probability p."""

    p_event: float
    k_events: int

    def __post_init__(self):
        _check_probability(self.p_event, lower_open=True)
        object.__setattr__(self, "k_events", _check_count("k_events", self.k_events, 1))

    def pmf(self, n):
        return generalized_geometric_pmf(n, self.k_events, self.p_event)


def binomial_pmf(n, trials, p):
    """B(n | trials, p); scipy evaluates it in log space for large trials."""
    trials = _check_count("trials", trials, 0)
    n = _check_count("n", n, 0)
    if n > trials:
        raise InvalidArgumentError(f"n={n} exceeds trials={trials}")
    _check_probability(p)
    if p == 0.0 or trials == 0:
        return 1.0 if n == 0 else 0.0
    if p == 1.0:
        return 1.0 if n == trials else 0.0
    return float(stats.binom.pmf(n, trials, p))


def geometric_wait_pmf(n, p):
    """Probability that the first event lands on pulse n: p (1-p)^(n-1)."""
    n = _check_count("n", n, 1)
    _check_probability(p, lower_open=True)
    return float(stats.geom.pmf(n, p))


def generalized_geometric_pmf(n, k, p):
    """Probability that the k-th event lands on pulse n: p B(k-1 | n-1, p)."""
    k = _check_count("k", k, 1)
    n = _check_count("n", n, 1)
    if n < k:
        raise InvalidArgumentError(f"n={n} is smaller than k={k}")
    _check_probability(p, lower_open=True)
    return p * binomial_pmf(k - 1, n - 1, p)


def geometric_binomial_identity_residual(k, n_pulses, p):
    """
    sum_{n=k}^{N} T_k(n) - sum_{n=k+1}^{N} T_{k+1}(n) - B(k | N, p).
    The difference of the two "at least k" tails is the exact-k probability,
    so the residual is zero up to rounding.
    """
    k = _check_count("k", k, 1)
    n_pulses = _check_count("n_pulses", n_pulses, 1)
    if k > n_pulses:
        raise InvalidArgumentError(f"k={k} exceeds n_pulses={n_pulses}")
    _check_probability(p, lower_open=True)

    at_least_k = math.fsum(generalized_geometric_pmf(n, k, p) for n in range(k, n_pulses + 1))
    at_least_next = math.fsum(generalized_geometric_pmf(n, k + 1, p) for n in range(k + 1, n_pulses + 1))
    return (at_least_k - at_least_next) - binomial_pmf(k, n_pulses, p)


def enumerate_count_distribution(n_pulses, p):
    """
    Probability of exactly k events in n_pulses, k = 0..n_pulses, by summing
    over all 2^n_pulses fire/no-fire patterns. Brute-force oracle; keep
    n_pulses small.
    """
    n_pulses = _check_count("n_pulses", n_pulses, 0)
    _check_probability(p)
    probs = [0.0] * (n_pulses + 1)
    for pattern in itertools.product((0, 1), repeat=n_pulses):
        k = sum(pattern)
        probs[k] += p**k * (1.0 - p) ** (n_pulses - k)
    return np.array(probs)


# ============================================
# INTER-ARRIVAL DISTRIBUTIONS
# ============================================

@dataclass(frozen=True)
class CwInterarrivalDensities:
    """
    Densities of the two CW intervals after detector 1 fires:
    refire  (Delta) - time to detector 1's next count, exponential shifted by T_d;
    handoff (delta) - time to the next photon, given it arrives inside T_d.
    """

    rate_lambda: float
    deadtime: float

    def refire(self, delta):
        x = np.asarray(delta, dtype=float)
        lam = self.rate_lambda
        out = np.where(x > self.deadtime, lam * np.exp(-lam * (x - self.deadtime)), 0.0)
        return out if out.ndim else float(out)

    def handoff(self, delta):
        x = np.asarray(delta, dtype=float)
        lam = self.rate_lambda
        norm = -math.expm1(-lam * self.deadtime)
        out = np.where((x > 0) & (x < self.deadtime), lam * np.exp(-lam * x) / norm, 0.0)
        return out if out.ndim else float(out)

    @property
    def refire_support(self):
        return (self.deadtime, math.inf)

    @property
    def handoff_support(self):
        return (0.0, self.deadtime)


def cw_interarrival_densities(lam, t_d):
    if not (math.isfinite(lam) and lam > 0 and math.isfinite(t_d) and t_d > 0):
        raise InvalidArgumentError(f"lambda and t_d must be > 0, got lambda={lam!r}, t_d={t_d!r}")
    return CwInterarrivalDensities(rate_lambda=float(lam), deadtime=float(t_d))


@dataclass(frozen=True)
class PulsedInterarrivalPmfs:
    """
    Pulse-count analogues of the CW densities:
    refire  (n_Delta) on n >= N_d + 1, handoff (n_delta) on 1 <= n <= N_d.
    """

    p_event: float
    n_dead: int

    @property
    def _q(self):
        return 1.0 - self.p_event

    def refire(self, n):
        n = int(n)
        if n < self.n_dead + 1:
            return 0.0
        return self.p_event * self._q ** (n - self.n_dead - 1)

    def handoff(self, n):
        n = int(n)
        if n < 1 or n > self.n_dead:
            return 0.0
        return self.p_event * self._q ** (n - 1) / self.handoff_norm

    @property
    def handoff_norm(self):
        """1 - (1-p)^N_d, the chance of any event inside the dead window."""
        return -math.expm1(self.n_dead * math.log1p(-self.p_event)) if self.p_event < 1 else 1.0

    def refire_tail(self, n_start):
        """P(n_Delta >= n_start), geometric series in closed form."""
        n_start = max(int(n_start), self.n_dead + 1)
        return self._q ** (n_start - self.n_dead - 1)

    def refire_total(self):
        return self.refire_tail(self.n_dead + 1)

    def handoff_total(self):
        # sum_{n=1}^{N_d} p q^(n-1) = 1 - q^N_d, cancelled by the normalisation
        return (1.0 - self._q**self.n_dead) / self.handoff_norm


def pulsed_interarrival_pmfs(p, n_d):
    _check_probability(p, lower_open=True)
    n_d = DeadPulseCount(n_d)
    if n_d < 1:
        raise InvalidArgumentError("n_d must be >= 1; the handoff interval needs a dead pulse")
    return PulsedInterarrivalPmfs(p_event=float(p), n_dead=int(n_d))
