"""Closed-form average age of both update streams at an individual receiver.

The production path assembles the renewal decomposition
``age = mean_first_k + E[S^2] / (2 E[S])`` from the interarrival moments;
the fully expanded at-will expression is retained as an independent
cross-check (``age_atwill_expanded``) and is exercised by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .orderstats import (
    ShiftedExp,
    delta_threshold,
    mean_first_k,
    mean_first_k_approx,
    os_mean,
    os_second_moment,
)

__all__ = [
    "Stream",
    "StarvedStreamError",
    "InfiniteAge",
    "INFINITE_AGE",
    "AtWill",
    "Exogenous",
    "StreamMix",
    "Scenario",
    "ScenarioApprox",
    "AgePair",
    "Moments2",
    "geometric_moments",
    "ybar_moments",
    "s_moments_atwill",
    "s_moments_exogenous",
    "age_atwill_exact",
    "age_atwill_expanded",
    "age_atwill_approx",
    "age_exogenous_exact",
    "age_exogenous_approx",
    "age_pair",
]


class Stream(Enum):
    TYPE_I = "I"
    TYPE_II = "II"

    @property
    def other(self) -> "Stream":
        return Stream.TYPE_II if self is Stream.TYPE_I else Stream.TYPE_I


class StarvedStreamError(ValueError):
    """The requested stream has zero delivery probability; its age diverges."""


class InfiniteAge:
    """Sentinel for the diverging age of a starved stream.

    Compares greater than every finite value and equal only to itself, so it
    flows through argmin-style comparisons without special cases.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __float__(self) -> float:
        return math.inf

    def __eq__(self, other) -> bool:
        return isinstance(other, InfiniteAge)

    def __hash__(self) -> int:
        return hash("InfiniteAge")

    def __gt__(self, other) -> bool:
        return not isinstance(other, InfiniteAge)

    def __ge__(self, other) -> bool:
        return True

    def __lt__(self, other) -> bool:
        return False

    def __le__(self, other) -> bool:
        return isinstance(other, InfiniteAge)

    def __repr__(self) -> str:
        return "INFINITE_AGE"


INFINITE_AGE = InfiniteAge()

Age = "float | InfiniteAge"


@dataclass(frozen=True)
class AtWill:
    """Zero-wait generation: the next update departs the instant the previous completes."""


@dataclass(frozen=True)
class Exogenous:
    """Poisson update arrivals with total rate mu; in-service arrivals are discarded."""

    mu: float

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")


Mode = AtWill | Exogenous


@dataclass(frozen=True)
class StreamMix:
    """Probability split of update types; p1 is the type-I share.

    p1 in {0, 1} is accepted but starves the other stream (its age is
    reported as infinite).
    """

    p1: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p1 <= 1.0:
            raise ValueError(f"p1 must lie in [0, 1], got {self.p1}")

    @property
    def p2(self) -> float:
        return 1.0 - self.p1

    def prob(self, stream: Stream) -> float:
        return self.p1 if stream is Stream.TYPE_I else self.p2


@dataclass(frozen=True)
class Scenario:
    """Full experiment description with integer stopping thresholds."""

    n: int
    k1: int
    k2: int
    delay_I: ShiftedExp
    delay_II: ShiftedExp
    mix: StreamMix
    mode: Mode = AtWill()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        for name, k in (("k1", self.k1), ("k2", self.k2)):
            if not 1 <= k <= self.n:
                raise ValueError(f"{name} must lie in [1, {self.n}], got {k}")

    def threshold(self, stream: Stream) -> int:
        return self.k1 if stream is Stream.TYPE_I else self.k2

    def delay(self, stream: Stream) -> ShiftedExp:
        return self.delay_I if stream is Stream.TYPE_I else self.delay_II


@dataclass(frozen=True)
class ScenarioApprox:
    """Large-n experiment description with threshold ratios alpha = k/n."""

    alpha1: float
    alpha2: float
    delay_I: ShiftedExp
    delay_II: ShiftedExp
    mix: StreamMix
    mode: Mode = AtWill()

    def __post_init__(self) -> None:
        for name, a in (("alpha1", self.alpha1), ("alpha2", self.alpha2)):
            if not 0.0 < a < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {a}")

    def alpha(self, stream: Stream) -> float:
        return self.alpha1 if stream is Stream.TYPE_I else self.alpha2

    def delay(self, stream: Stream) -> ShiftedExp:
        return self.delay_I if stream is Stream.TYPE_I else self.delay_II


@dataclass(frozen=True)
class AgePair:
    age_I: "float | InfiniteAge"
    age_II: "float | InfiniteAge"

    def age(self, stream: Stream) -> "float | InfiniteAge":
        return self.age_I if stream is Stream.TYPE_I else self.age_II


@dataclass(frozen=True)
class Moments2:
    """First and second moment of a nonnegative random quantity.

    ``degenerate`` flags conditional moments whose conditioning event has
    probability zero (returned unconditioned by convention; the calling
    formulas multiply them by zero).
    """

    m1: float
    m2: float
    degenerate: bool = False

    @property
    def var(self) -> float:
        return self.m2 - self.m1 * self.m1


def geometric_moments(p: float) -> Moments2:
    """Moments of a geometric retry count with success probability p on {1, 2, ...}."""
    if p <= 0:
        raise StarvedStreamError(f"success probability must be > 0, got {p}")
    if p > 1:
        raise ValueError(f"success probability must be <= 1, got {p}")
    return Moments2(1.0 / p, (2.0 - p) / (p * p))


def ybar_moments(s: Scenario, target: Stream) -> Moments2:
    """Moments of a cycle conditioned on the tagged node missing the target stream.

    In exogenous mode these are the moments of the busy part of the cycle
    only (the idle gap is accounted for separately).
    """
    p = s.mix.prob(target)
    if p <= 0:
        raise StarvedStreamError(f"stream {target.value} is starved (p = 0)")
    k = s.threshold(target)
    q = k / s.n
    pq = p * q
    e1 = os_mean(s.delay(target), k, s.n)
    e2 = os_second_moment(s.delay(target), k, s.n)
    if pq >= 1.0:
        # Failure has probability zero; the conditioning is vacuous.
        return Moments2(e1, e2, degenerate=True)
    po = s.mix.prob(target.other)
    ko = s.threshold(target.other)
    pb_t = p * (1.0 - q) / (1.0 - pq)
    pb_o = po / (1.0 - pq)
    f1 = os_mean(s.delay(target.other), ko, s.n)
    f2 = os_second_moment(s.delay(target.other), ko, s.n)
    return Moments2(pb_t * e1 + pb_o * f1, pb_t * e2 + pb_o * f2)


def _retry_terms(s: Scenario, target: Stream):
    """Geometric retry moments and derived combinations for the target stream."""
    p = s.mix.prob(target)
    q = s.threshold(target) / s.n
    gm = geometric_moments(p * q)
    em, em2 = gm.m1, gm.m2
    em1 = em - 1.0                 # E[M - 1]
    em1sq = em2 - 2.0 * em + 1.0   # E[(M - 1)^2]
    return em, em2, em1, em1sq


def s_moments_atwill(s: Scenario, target: Stream) -> Moments2:
    """Moments of the tagged-node interarrival time under at-will generation."""
    if not isinstance(s.mode, AtWill):
        raise ValueError("s_moments_atwill requires at-will mode")
    _, _, em1, em1sq = _retry_terms(s, target)
    yb = ybar_moments(s, target)
    k = s.threshold(target)
    e1 = os_mean(s.delay(target), k, s.n)
    e2 = os_second_moment(s.delay(target), k, s.n)
    m1 = e1 + em1 * yb.m1
    m2 = e2 + 2.0 * em1 * e1 * yb.m1 + em1 * yb.var + em1sq * yb.m1**2
    return Moments2(m1, m2)


def s_moments_exogenous(s: Scenario, target: Stream) -> Moments2:
    """Moments of the tagged-node interarrival time under Poisson arrivals."""
    if not isinstance(s.mode, Exogenous):
        raise ValueError("s_moments_exogenous requires exogenous mode")
    mu = s.mode.mu
    em, em2, em1, em1sq = _retry_terms(s, target)
    yb = ybar_moments(s, target)
    k = s.threshold(target)
    e1 = os_mean(s.delay(target), k, s.n)
    e2 = os_second_moment(s.delay(target), k, s.n)
    ez = 1.0 / mu
    vz = 1.0 / (mu * mu)
    emm = em2 - em  # E[M^2 - M]
    m1 = e1 + em1 * yb.m1 + em * ez
    m2 = (
        e2
        + 2.0 * em1 * e1 * yb.m1
        + 2.0 * em * e1 * ez
        + em * vz
        + em1 * yb.var
        + em1sq * yb.m1**2
        + 2.0 * emm * yb.m1 * ez
        + em2 * ez * ez
    )
    return Moments2(m1, m2)


def age_atwill_exact(s: Scenario, target: Stream) -> float:
    """Exact average age of the target stream under at-will generation."""
    sm = s_moments_atwill(s, target)
    k = s.threshold(target)
    return mean_first_k(s.delay(target), k, s.n) + sm.m2 / (2.0 * sm.m1)


def age_atwill_expanded(s: Scenario, target: Stream) -> float:
    """Fully expanded at-will age expression; cross-check for age_atwill_exact."""
    if not isinstance(s.mode, AtWill):
        raise ValueError("age_atwill_expanded requires at-will mode")
    p = s.mix.prob(target)
    if p <= 0:
        raise StarvedStreamError(f"stream {target.value} is starved (p = 0)")
    po = s.mix.prob(target.other)
    n, k, ko = s.n, s.threshold(target), s.threshold(target.other)
    e1 = os_mean(s.delay(target), k, n)
    e2 = os_second_moment(s.delay(target), k, n)
    f1 = os_mean(s.delay(target.other), ko, n)
    f2 = os_second_moment(s.delay(target.other), ko, n)
    mix1 = p * e1 + po * f1
    t1 = mean_first_k(s.delay(target), k, n)
    t2 = (p * e2 + po * f2) / (2.0 * mix1)
    t3 = (po**2 * n * f1**2 + p * po * (2 * n - k) * e1 * f1) / (p * k * mix1)
    t4 = (p**2 * (n - k) * e1**2) / (p * k * mix1)
    return t1 + t2 + t3 + t4


def age_exogenous_exact(s: Scenario, target: Stream) -> float:
    """Exact average age of the target stream under Poisson arrivals."""
    sm = s_moments_exogenous(s, target)
    k = s.threshold(target)
    return mean_first_k(s.delay(target), k, s.n) + sm.m2 / (2.0 * sm.m1)


def _approx_view(sa: ScenarioApprox, target: Stream):
    p = sa.mix.prob(target)
    if p <= 0:
        raise StarvedStreamError(f"stream {target.value} is starved (p = 0)")
    po = sa.mix.prob(target.other)
    a = sa.alpha(target)
    dt = delta_threshold(sa.delay(target), a)
    do = delta_threshold(sa.delay(target.other), sa.alpha(target.other))
    return p, po, a, dt, do


def age_atwill_approx(sa: ScenarioApprox, target: Stream) -> float:
    """Large-n average age of the target stream under at-will generation."""
    if not isinstance(sa.mode, AtWill):
        raise ValueError("age_atwill_approx requires at-will mode")
    p, po, a, dt, do = _approx_view(sa, target)
    base = mean_first_k_approx(sa.delay(target), a)
    num = (
        (2.0 - a) * p * p * dt * dt
        + 2.0 * p * po * (2.0 - a) * dt * do
        + po * (p * a + 2.0 * po) * do * do
    )
    den = 2.0 * p * a * (p * dt + po * do)
    return base + num / den


def age_exogenous_approx(sa: ScenarioApprox, target: Stream) -> float:
    """Large-n average age of the target stream under Poisson arrivals."""
    if not isinstance(sa.mode, Exogenous):
        raise ValueError("age_exogenous_approx requires exogenous mode")
    mu = sa.mode.mu
    p, po, a, dt, do = _approx_view(sa, target)
    base = mean_first_k_approx(sa.delay(target), a)
    load = mu * p * dt + mu * po * do + 1.0
    num = (
        mu * p * p * (2.0 - a) * dt * dt
        + 2.0 * mu * p * po * (2.0 - a) * dt * do
        + mu * po * (2.0 * po + p * a) * do * do
    )
    tail = (2.0 * mu * po * do + mu * p * (2.0 - a) * dt + 1.0) / (mu * p * a * load)
    return base + num / (2.0 * p * a * load) + tail


def _age_one(s, target: Stream):
    if isinstance(s, ScenarioApprox):
        fn = age_atwill_approx if isinstance(s.mode, AtWill) else age_exogenous_approx
    else:
        fn = age_atwill_exact if isinstance(s.mode, AtWill) else age_exogenous_exact
    try:
        return fn(s, target)
    except StarvedStreamError:
        return INFINITE_AGE


def age_pair(s: "Scenario | ScenarioApprox") -> AgePair:
    """Both stream ages for a scenario; a starved stream maps to INFINITE_AGE."""
    return AgePair(_age_one(s, Stream.TYPE_I), _age_one(s, Stream.TYPE_II))
