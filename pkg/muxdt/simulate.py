# simulate.py - Monte Carlo cascade of photon/event streams through a detector pool

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import get_logger
from .core import CwSource, DetectorPool, DtfEstimate, PulsedSource
from .errors import InvalidArgumentError

logger = get_logger(__name__)

# "Never fired" marker for pulse-indexed detectors
_NEVER_FIRED_PULSE = np.iinfo(np.int64).min // 4


# ============================================
# EVENT STREAMS
# ============================================

@dataclass(frozen=True)
class CwEventStream:
    """
    Photon arrival times in seconds over [0, window]. Times come from
    cumulative exponential gaps; at extreme rates two arrivals can round to
    the same double, so ties are accepted.
    """

    arrival_times: np.ndarray
    window: float

    def __post_init__(self):
        times = np.ascontiguousarray(self.arrival_times, dtype=np.float64)
        if times.ndim != 1:
            raise InvalidArgumentError("arrival_times must be one-dimensional")
        if times.size:
            if times[0] < 0 or times[-1] > self.window:
                raise InvalidArgumentError("arrival times must lie within [0, window]")
            if np.any(np.diff(times) < 0):
                raise InvalidArgumentError("arrival times must be increasing")
        object.__setattr__(self, "arrival_times", times)

    def __len__(self):
        return int(self.arrival_times.size)


@dataclass(frozen=True)
class PulsedEventStream:
    """Indices of the pulses that carried an event, out of n_pulses."""

    event_pulse_indices: np.ndarray
    n_pulses: int

    def __post_init__(self):
        indices = np.ascontiguousarray(self.event_pulse_indices, dtype=np.int64)
        if indices.ndim != 1:
            raise InvalidArgumentError("event_pulse_indices must be one-dimensional")
        if indices.size:
            if indices[0] < 0 or indices[-1] >= self.n_pulses:
                raise InvalidArgumentError("event indices must lie within [0, n_pulses)")
            if np.any(np.diff(indices) <= 0):
                raise InvalidArgumentError("event indices must be strictly increasing")
        object.__setattr__(self, "event_pulse_indices", indices)

    def __len__(self):
        return int(self.event_pulse_indices.size)


def gen_cw_stream(lam, n_photons, rng):
    """n_photons Poisson arrivals: cumulative sums of Exp(lambda) gaps."""
    if not math.isfinite(lam) or lam <= 0:
        raise InvalidArgumentError(f"lambda must be > 0, got {lam!r}")
    if int(n_photons) != n_photons or n_photons < 1:
        raise InvalidArgumentError(f"n_photons must be an integer >= 1, got {n_photons!r}")

    gen = rng.generator()
    gaps = gen.exponential(scale=1.0 / lam, size=int(n_photons))
    times = np.cumsum(gaps)
    return CwEventStream(arrival_times=times, window=float(times[-1]))


def gen_pulsed_stream(p, n_pulses, rng):
    """Each of n_pulses pulses independently carries an event with probability p."""
    if not math.isfinite(p) or not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must lie in [0, 1], got {p!r}")
    if int(n_pulses) != n_pulses or n_pulses < 1:
        raise InvalidArgumentError(f"n_pulses must be an integer >= 1, got {n_pulses!r}")

    gen = rng.generator()
    fired = gen.random(int(n_pulses)) < p
    return PulsedEventStream(event_pulse_indices=np.flatnonzero(fired).astype(np.int64), n_pulses=int(n_pulses))


# ============================================
# ROUTING KERNELS
# ============================================
# Both kernels take per-detector recovery spans (seconds, or N_d + 1 pulses)
# and per-detector last-fire stamps, updated in place so a later call
# continues where this one stopped. assignment[k] receives the detector that
# registered event k, or -1 when every detector was dead.

@njit(cache=True)
def _route_online(events, recovery, last_fire, assignment):
    n_det = recovery.shape[0]
    for k in range(events.shape[0]):
        t = events[k]
        assignment[k] = -1
        for i in range(n_det):
            if t - last_fire[i] >= recovery[i]:
                last_fire[i] = t
                assignment[k] = i
                break


@njit(cache=True)
def _route_multipass(events, recovery, last_fire, assignment):
    n_events = events.shape[0]
    pending = np.arange(n_events)
    n_pending = n_events
    for k in range(n_events):
        assignment[k] = -1
    for i in range(recovery.shape[0]):
        skipped = np.empty(n_pending, dtype=np.int64)
        n_skipped = 0
        last = last_fire[i]
        for j in range(n_pending):
            idx = pending[j]
            t = events[idx]
            if t - last >= recovery[i]:
                last = t
                assignment[idx] = i
            else:
                skipped[n_skipped] = idx
                n_skipped += 1
        last_fire[i] = last
        pending = skipped
        n_pending = n_skipped
        if n_pending == 0:
            break


_ROUTERS = {
    'online': _route_online,
    'multipass': _route_multipass,
}


@dataclass(frozen=True)
class CascadeSnapshot:
    """Saved detector state plus running tallies."""

    last_fire: tuple
    per_detector_counts: tuple
    missed_events: int
    total_events: int


class DetectorArray:
    """
    A detector pool behind a sequential-priority switch, fed event by event.
    CW pools take arrival times in seconds; pulsed pools (nu given) take pulse
    indices, and a detector that fires at pulse i is live again at i + N_d + 1.
    All detectors start live.
    """

    def __init__(self, pool, nu=None, method='online'):
        if method not in _ROUTERS:
            raise InvalidArgumentError(f"unknown routing method {method!r}; use one of {sorted(_ROUTERS)}")
        self.pool = pool
        self.nu = nu
        self.method = method
        self._router = _ROUTERS[method]

        if nu is None:
            self.recovery = np.array(pool.deadtimes, dtype=np.float64)
            self.last_fire = np.full(pool.n_detectors, -np.inf, dtype=np.float64)
        else:
            n_dead = pool.dead_pulse_counts(nu)
            self.recovery = np.array([int(n) + 1 for n in n_dead], dtype=np.int64)
            self.last_fire = np.full(pool.n_detectors, _NEVER_FIRED_PULSE, dtype=np.int64)

        self.counts = np.zeros(pool.n_detectors, dtype=np.int64)
        self.missed = 0
        self.total = 0

    @property
    def is_pulsed(self):
        return self.nu is not None

    def feed(self, events):
        """Route a chunk of events (continuing from earlier chunks); returns assignments."""
        dtype = np.int64 if self.is_pulsed else np.float64
        events = np.ascontiguousarray(events, dtype=dtype)
        assignment = np.empty(events.shape[0], dtype=np.int64)
        if events.shape[0]:
            self._router(events, self.recovery, self.last_fire, assignment)

        detected = assignment[assignment >= 0]
        self.counts += np.bincount(detected, minlength=self.pool.n_detectors)
        self.missed += int(events.shape[0] - detected.shape[0])
        self.total += int(events.shape[0])
        return assignment

    def estimate(self):
        dtf = self.missed / self.total if self.total else 0.0
        return DtfEstimate(
            dtf=dtf,
            std_err=0.0,
            total_events=self.total,
            missed_events=self.missed,
            per_detector_counts=tuple(int(c) for c in self.counts),
        )

    def snapshot(self):
        return CascadeSnapshot(
            last_fire=tuple(self.last_fire.tolist()),
            per_detector_counts=tuple(int(c) for c in self.counts),
            missed_events=self.missed,
            total_events=self.total,
        )

    @classmethod
    def from_snapshot(cls, pool, snapshot, nu=None, method='online'):
        array = cls(pool, nu=nu, method=method)
        array.last_fire[:] = snapshot.last_fire
        array.counts[:] = snapshot.per_detector_counts
        array.missed = snapshot.missed_events
        array.total = snapshot.total_events
        return array


# ============================================
# CASCADES
# ============================================

def cascade_cw(stream, pool, method='online'):
    """
    Pass the photon list through the pool: detector 1 takes every photon
    outside its deadtime, the skipped photons go on to detector 2, and so on.
    A single run carries no error bar (std_err = 0); use estimate_dtf for one.
    An empty stream yields dtf 0 with total_events 0 (DtfEstimate.is_empty).
    """
    array = DetectorArray(pool, method=method)
    array.feed(stream.arrival_times)
    return array.estimate()


def cascade_pulsed(stream, pool, nu, method='online'):
    """Pulsed cascade; each detector is dead for Int(nu * T_d) pulses after firing."""
    if not math.isfinite(nu) or nu <= 0:
        raise InvalidArgumentError(f"nu must be > 0, got {nu!r}")
    array = DetectorArray(pool, nu=nu, method=method)
    array.feed(stream.event_pulse_indices)
    return array.estimate()


# ============================================
# BATCHED ESTIMATES
# ============================================

@dataclass(frozen=True)
class SimulationConfig:
    """
    Source + pool + run length. n_events counts photons for CW sources and
    pulses for pulsed sources.
    """

    source: object
    pool: DetectorPool
    n_events: int
    batches: int = 10

    def __post_init__(self):
        if not isinstance(self.source, (CwSource, PulsedSource)):
            raise InvalidArgumentError("source must be a CwSource or a PulsedSource")
        if int(self.batches) != self.batches or self.batches < 2:
            raise InvalidArgumentError(f"batches must be an integer >= 2, got {self.batches!r}")
        if int(self.n_events) != self.n_events or self.n_events < self.batches:
            raise InvalidArgumentError(f"n_events must be an integer >= batches, got {self.n_events!r}")


def _run_batch(config, size, rng):
    source = config.source
    if isinstance(source, CwSource):
        if source.rate_lambda == 0:
            # no photons at all
            return DetectorArray(config.pool).estimate()
        return cascade_cw(gen_cw_stream(source.rate_lambda, size, rng), config.pool)
    stream = gen_pulsed_stream(source.p_event, size, rng)
    return cascade_pulsed(stream, config.pool, source.rep_rate_nu)


def estimate_dtf(config, rng):
    """
    Split the run into equal batches, each on its own sub-stream with freshly
    live detectors. dtf is the pooled missed/total ratio; std_err is the
    spread of the batch DTFs over sqrt(batches).
    """
    sizes = [len(chunk) for chunk in np.array_split(np.arange(int(config.n_events)), int(config.batches))]

    results = [_run_batch(config, size, rng.child(b)) for b, size in enumerate(sizes)]

    total = sum(r.total_events for r in results)
    missed = sum(r.missed_events for r in results)
    counts = np.sum([r.per_detector_counts for r in results], axis=0)
    batch_dtfs = np.array([r.dtf for r in results])

    dtf = missed / total if total else 0.0
    std_err = float(np.std(batch_dtfs, ddof=1) / math.sqrt(len(results)))

    logger.debug("estimate_dtf: %d batches, total=%d missed=%d dtf=%.6g +- %.2g",
                 len(results), total, missed, dtf, std_err)

    return DtfEstimate(
        dtf=dtf,
        std_err=std_err,
        total_events=total,
        missed_events=missed,
        per_detector_counts=tuple(int(c) for c in counts),
    )
