# core.py - Domain types and the deterministic random-stream contract

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidArgumentError


def _require_finite(name, value):
    if value is None or not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")


def _require_probability(name, value):
    _require_finite(name, value)
    if not 0.0 <= value <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value!r}")


class SwitchPolicy(str, Enum):
    # Always route to the lowest-index live detector
    SEQUENTIAL_PRIORITY = "sequential_priority"


# ============================================
# SOURCES
# ============================================

@dataclass(frozen=True)
class CwSource:
    """Poisson (CW) photon source with mean rate in photons/s."""

    rate_lambda: float

    def __post_init__(self):
        _require_finite("rate_lambda", self.rate_lambda)
        if self.rate_lambda < 0:
            raise InvalidArgumentError(f"rate_lambda must be >= 0, got {self.rate_lambda!r}")


@dataclass(frozen=True)
class PulsedSource:
    """Pulsed source: repetition rate in Hz and per-pulse event probability."""

    rep_rate_nu: float
    p_event: float

    def __post_init__(self):
        _require_finite("rep_rate_nu", self.rep_rate_nu)
        if self.rep_rate_nu <= 0:
            raise InvalidArgumentError(f"rep_rate_nu must be > 0, got {self.rep_rate_nu!r}")
        _require_probability("p_event", self.p_event)

    @property
    def event_rate(self):
        """Incident events per second, p * nu."""
        return self.p_event * self.rep_rate_nu


# ============================================
# DETECTORS
# ============================================

class DeadPulseCount(int):
    """Number of pulses a detector stays dead after firing, Int(nu * T_d)."""

    def __new__(cls, n_dead):
        if isinstance(n_dead, float):
            if not n_dead.is_integer():
                raise InvalidArgumentError(f"n_dead must be an integer, got {n_dead!r}")
            n_dead = int(n_dead)
        value = super().__new__(cls, n_dead)
        if value < 0:
            raise InvalidArgumentError(f"n_dead must be >= 0, got {n_dead!r}")
        return value

    @property
    def n_dead(self):
        return int(self)


def dead_pulse_count(nu, t_d):
    """
    Integer part of nu * t_d. Products within 1e-9 (relative) of an integer
    snap to it first, so 100e6 * 50e-9 gives 5 and not 4.
    """
    _require_finite("nu", nu)
    _require_finite("t_d", t_d)
    if nu <= 0 or t_d <= 0:
        raise InvalidArgumentError(f"nu and t_d must be > 0, got nu={nu!r}, t_d={t_d!r}")

    product = nu * t_d
    nearest = round(product)
    if nearest > 0 and math.isclose(product, nearest, rel_tol=1e-9, abs_tol=0.0):
        product = float(nearest)
    return DeadPulseCount(math.floor(product))


@dataclass(frozen=True)
class DetectorPool:
    """Ordered detectors behind the switch; deadtimes in seconds."""

    deadtimes: tuple
    policy: SwitchPolicy = SwitchPolicy.SEQUENTIAL_PRIORITY

    def __post_init__(self):
        deadtimes = tuple(float(t) for t in self.deadtimes)
        if not deadtimes:
            raise InvalidArgumentError("a detector pool needs at least one detector")
        for t_d in deadtimes:
            _require_finite("deadtime", t_d)
            if t_d <= 0:
                raise InvalidArgumentError(f"every deadtime must be > 0, got {t_d!r}")
        object.__setattr__(self, "deadtimes", deadtimes)
        object.__setattr__(self, "policy", SwitchPolicy(self.policy))

    @classmethod
    def homogeneous(cls, n, t_d):
        if int(n) < 1:
            raise InvalidArgumentError(f"detector count must be >= 1, got {n!r}")
        return cls(deadtimes=(t_d,) * int(n))

    @property
    def n_detectors(self):
        return len(self.deadtimes)

    @property
    def is_homogeneous(self):
        return len(set(self.deadtimes)) == 1

    def common_deadtime(self):
        """The shared deadtime; analytic formulas only exist for this case."""
        if not self.is_homogeneous:
            raise InvalidArgumentError("the analytic engine requires identical deadtimes")
        return self.deadtimes[0]

    def dead_pulse_counts(self, nu):
        return tuple(dead_pulse_count(nu, t_d) for t_d in self.deadtimes)


# ============================================
# RESULTS
# ============================================

@dataclass(frozen=True)
class DtfEstimate:
    """Monte Carlo DTF with its error bar and per-detector counts."""

    dtf: float
    std_err: float
    total_events: int
    missed_events: int
    per_detector_counts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.per_detector_counts)
        object.__setattr__(self, "per_detector_counts", counts)
        if self.total_events < 0 or self.missed_events < 0 or any(c < 0 for c in counts):
            raise InvalidArgumentError("event counts must be non-negative")
        if sum(counts) + self.missed_events != self.total_events:
            raise InvalidArgumentError(
                f"counts {sum(counts)} + missed {self.missed_events} != total {self.total_events}"
            )
        if not 0.0 <= self.dtf <= 1.0:
            raise InvalidArgumentError(f"dtf must lie in [0, 1], got {self.dtf!r}")
        if not self.std_err >= 0.0:
            raise InvalidArgumentError(f"std_err must be >= 0, got {self.std_err!r}")

    @property
    def is_empty(self):
        """True when no events were offered; dtf is then reported as 0."""
        return self.total_events == 0

    @property
    def detected_events(self):
        return self.total_events - self.missed_events


# ============================================
# RANDOM STREAMS
# ============================================

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RandomStream:
    """
    Addressable random sub-stream. The (seed, stream_id, path) triple is fed
    to numpy's SeedSequence as entropy and spawn key, so sibling streams are
    independent and any stream can be rebuilt without generating the others.
    Generators handed out by generator() belong to a single caller.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        for name, value in (("seed", self.seed), ("stream_id", self.stream_id), *(("path", p) for p in self.path)):
            if int(value) != value or not 0 <= int(value) <= _UINT64_MAX:
                raise InvalidArgumentError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, index):
        """Independent sub-stream, e.g. one per batch or per bisection probe."""
        return RandomStream(self.seed, self.stream_id, self.path + (int(index),))

    def seed_sequence(self):
        return np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id), *self.path))

    def generator(self):
        return np.random.Generator(np.random.PCG64DXSM(self.seed_sequence()))
