"""Monte Carlo simulator of the earliest-k1/k2 multicast protocol.

Tracks one tagged receiver (node exchangeability makes it representative)
and accumulates its per-stream sawtooth age area in closed form, so the
estimates depend only on the seed and cycle count, never on a time step.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import INFINITE_AGE, Exogenous, InfiniteAge, Scenario, Stream

__all__ = [
    "SimConfig",
    "SimResult",
    "simulate",
    "empirical_interarrival_moments",
    "empirical_delivery_probability",
    "empirical_cycle_gaps",
]

DEFAULT_SEED = 20190813


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    cycles: int = 100_000
    seed: int = DEFAULT_SEED
    warmup_cycles: int = 1_000
    replications: int = 10

    def __post_init__(self) -> None:
        if self.cycles <= self.warmup_cycles:
            raise ValueError(
                f"cycles ({self.cycles}) must exceed warmup_cycles ({self.warmup_cycles})"
            )
        if self.warmup_cycles < 0:
            raise ValueError("warmup_cycles must be >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class SimResult:
    age_I_hat: "float | InfiniteAge"
    age_II_hat: "float | InfiniteAge"
    se_I: float
    se_II: float
    deliveries_I: int
    deliveries_II: int
    sim_time: float

    def age(self, stream: Stream) -> "float | InfiniteAge":
        return self.age_I_hat if stream is Stream.TYPE_I else self.age_II_hat

    def se(self, stream: Stream) -> float:
        return self.se_I if stream is Stream.TYPE_I else self.se_II


@dataclass
class _StreamTrace:
    delivery_times: np.ndarray  # tagged-node delivery instants, post warmup
    delivery_cycles: np.ndarray  # cycle indices of those deliveries
    reset_ages: np.ndarray  # own link delay of each delivered packet
    type_cycles: int  # post-warmup cycles carrying this stream's type


@dataclass
class _Replication:
    streams: dict
    horizon: float


def _run_replication(
    scenario: Scenario,
    cycles: int,
    warmup: int,
    rng: np.random.Generator,
    tagged_index: int = 0,
    chunk_elems: int = 4_000_000,
) -> _Replication:
    n = scenario.n
    is_type_I = rng.random(cycles) < scenario.mix.p1
    dur = np.empty(cycles)
    own = np.empty(cycles)
    hit = np.zeros(cycles, dtype=bool)

    for stream in (Stream.TYPE_I, Stream.TYPE_II):
        idx = np.flatnonzero(is_type_I == (stream is Stream.TYPE_I))
        if idx.size == 0:
            continue
        d = scenario.delay(stream)
        k = scenario.threshold(stream)
        scale = 1.0 / d.rate
        chunk = max(1, chunk_elems // n)
        for start in range(0, idx.size, chunk):
            rows = idx[start : start + chunk]
            delays = rng.exponential(scale, size=(rows.size, n))
            delays += d.shift
            kth = np.partition(delays, k - 1, axis=1)[:, k - 1]
            mine = delays[:, tagged_index]
            dur[rows] = kth
            own[rows] = mine
            # A floating-point tie with the k-th smallest is won by the
            # tagged node (lowest index wins by convention).
            hit[rows] = mine <= kth

    if isinstance(scenario.mode, Exogenous):
        gap = rng.exponential(1.0 / scenario.mode.mu, size=cycles)
    else:
        gap = np.zeros(cycles)

    starts = np.empty(cycles)
    starts[0] = 0.0
    np.cumsum(dur[:-1] + gap[:-1], out=starts[1:])
    horizon = float(starts[-1] + dur[-1] + gap[-1])

    streams = {}
    for stream in (Stream.TYPE_I, Stream.TYPE_II):
        tmask = is_type_I == (stream is Stream.TYPE_I)
        dmask = tmask & hit
        dmask[:warmup] = False
        cyc = np.flatnonzero(dmask)
        streams[stream] = _StreamTrace(
            delivery_times=starts[cyc] + own[cyc],
            delivery_cycles=cyc,
            reset_ages=own[cyc],
            type_cycles=int(np.count_nonzero(tmask[warmup:])),
        )
    return _Replication(streams, horizon)


def _time_average_age(trace: _StreamTrace) -> "float | None":
    """Time-averaged sawtooth age over the renewal window spanned by deliveries.

    Between deliveries the age grows with slope 1 from the reset level, so
    each interval contributes a rectangle plus a triangle, summed exactly.
    Needs at least two deliveries to span a window.
    """
    t = trace.delivery_times
    if t.size < 2:
        return None
    a = trace.reset_ages
    dt = np.diff(t)
    area = float(np.sum(dt * a[:-1] + 0.5 * dt * dt))
    return area / float(t[-1] - t[0])


def _sim_worker(args) -> tuple:
    scenario, cycles, warmup, seed_seq, tagged_index = args
    rng = np.random.default_rng(seed_seq)
    rep = _run_replication(scenario, cycles, warmup, rng, tagged_index)
    out = []
    for stream in (Stream.TYPE_I, Stream.TYPE_II):
        trace = rep.streams[stream]
        out.append((_time_average_age(trace), int(trace.delivery_times.size)))
    return out[0], out[1], rep.horizon


def _spawn_seeds(cfg: SimConfig):
    return np.random.SeedSequence(cfg.seed).spawn(cfg.replications)


def simulate(cfg: SimConfig, threads: int = 1, tagged_index: int = 0) -> SimResult:
    """Run all replications and merge their age estimates.

    Replications own independent random streams spawned deterministically
    from (seed, replication index); merging is a fixed-order reduction, so
    parallel and serial runs produce identical results.
    """
    args = [
        (cfg.scenario, cfg.cycles, cfg.warmup_cycles, ss, tagged_index)
        for ss in _spawn_seeds(cfg)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            outs = list(ex.map(_sim_worker, args))
    else:
        outs = [_sim_worker(a) for a in args]

    ages = {}
    ses = {}
    deliveries = {}
    for i, stream in enumerate((Stream.TYPE_I, Stream.TYPE_II)):
        per_rep = [o[i][0] for o in outs]
        deliveries[stream] = sum(o[i][1] for o in outs)
        if all(a is None for a in per_rep):
            if cfg.scenario.mix.prob(stream) <= 0:
                ages[stream] = INFINITE_AGE
                ses[stream] = 0.0
                continue
            raise RuntimeError(
                f"no post-warmup deliveries for stream {stream.value}; increase cycles"
            )
        if any(a is None for a in per_rep):
            raise RuntimeError(
                f"some replications saw < 2 deliveries for stream {stream.value}; "
                "increase cycles"
            )
        vals = np.asarray(per_rep, dtype=np.float64)
        ages[stream] = float(vals.mean())
        ses[stream] = (
            float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        )

    return SimResult(
        age_I_hat=ages[Stream.TYPE_I],
        age_II_hat=ages[Stream.TYPE_II],
        se_I=ses[Stream.TYPE_I],
        se_II=ses[Stream.TYPE_II],
        deliveries_I=deliveries[Stream.TYPE_I],
        deliveries_II=deliveries[Stream.TYPE_II],
        sim_time=float(sum(o[2] for o in outs)),
    )


def _traces(cfg: SimConfig, tagged_index: int = 0):
    for ss in _spawn_seeds(cfg):
        rng = np.random.default_rng(ss)
        yield _run_replication(
            cfg.scenario, cfg.cycles, cfg.warmup_cycles, rng, tagged_index
        )


def empirical_interarrival_moments(cfg: SimConfig, target: Stream):
    """Sample mean and second moment of tagged-node inter-delivery times."""
    from .analytic import Moments2

    gaps = []
    for rep in _traces(cfg):
        t = rep.streams[target].delivery_times
        if t.size >= 2:
            gaps.append(np.diff(t))
    if not gaps:
        raise RuntimeError(f"no inter-delivery gaps observed for stream {target.value}")
    g = np.concatenate(gaps)
    return Moments2(float(g.mean()), float(np.mean(g * g)))


def empirical_delivery_probability(cfg: SimConfig, target: Stream) -> float:
    """Fraction of target-type cycles delivered to the tagged node."""
    delivered = 0
    total = 0
    for rep in _traces(cfg):
        trace = rep.streams[target]
        delivered += trace.delivery_times.size
        total += trace.type_cycles
    if total == 0:
        raise RuntimeError(f"no post-warmup cycles of type {target.value}")
    return delivered / total


def empirical_cycle_gaps(cfg: SimConfig, target: Stream) -> np.ndarray:
    """Cycle-index gaps between consecutive deliveries of the target stream.

    Distributed Geometric(p * k / n) on {1, 2, ...} under the protocol.
    """
    gaps = []
    for rep in _traces(cfg):
        cyc = rep.streams[target].delivery_cycles
        if cyc.size >= 2:
            gaps.append(np.diff(cyc))
    if not gaps:
        raise RuntimeError(f"no delivery gaps observed for stream {target.value}")
    return np.concatenate(gaps)
