"""Weighted threshold selection and pareto frontiers for the two stream ages.

The weighted objective beta * age_I + (1 - beta) * age_II is minimized over
integer thresholds (exact evaluator) or threshold ratios (large-n
evaluator). Searches are grid-based; single evaluations are O(1) thanks to
the harmonic cache, so exhaustive integer search is the default up to
n = 512.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import (
    INFINITE_AGE,
    AtWill,
    Exogenous,
    InfiniteAge,
    Mode,
    Scenario,
    ScenarioApprox,
    StarvedStreamError,
    Stream,
    StreamMix,
    age_atwill_approx,
    age_exogenous_approx,
    age_pair,
)
from .orderstats import ShiftedExp

__all__ = [
    "ScenarioTemplate",
    "ParetoPoint",
    "MonotonicityReport",
    "optimize",
    "pareto_frontier",
    "lemma1_monotonicity_check",
]

EXHAUSTIVE_LIMIT = 512


@dataclass(frozen=True)
class ScenarioTemplate:
    """Scenario with the stopping thresholds left free for the optimizer."""

    delay_I: ShiftedExp
    delay_II: ShiftedExp
    mix: StreamMix
    mode: Mode = AtWill()
    n: int | None = None

    def with_thresholds(self, k1: int, k2: int) -> Scenario:
        if self.n is None:
            raise ValueError("template needs n for integer thresholds")
        return Scenario(self.n, k1, k2, self.delay_I, self.delay_II, self.mix, self.mode)

    def with_alphas(self, alpha1: float, alpha2: float) -> ScenarioApprox:
        return ScenarioApprox(
            alpha1, alpha2, self.delay_I, self.delay_II, self.mix, self.mode
        )


@dataclass(frozen=True)
class ParetoPoint:
    beta: float
    age_I: "float | InfiniteAge"
    age_II: "float | InfiniteAge"
    objective: float
    k1: int | None = None
    k2: int | None = None
    alpha1: float | None = None
    alpha2: float | None = None


@dataclass(frozen=True)
class MonotonicityReport:
    """Outcome of the type-I-age-vs-alpha2 monotonicity check."""

    alpha1: float
    alpha2_grid: np.ndarray
    ages: np.ndarray
    strictly_increasing: bool
    coefficient_condition: bool
    degenerate: bool = False

    @property
    def passed(self) -> bool:
        if self.degenerate:
            # Single-stream case: the age must simply not depend on alpha2.
            return bool(np.ptp(self.ages) == 0.0)
        return self.strictly_increasing and self.coefficient_condition


def _check_beta(beta: float) -> float:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    return float(beta)


def _check_starved_objective(mix: StreamMix, beta: float) -> None:
    if mix.p1 >= 1.0 and beta < 1.0:
        raise StarvedStreamError(
            "type II is starved (p1 = 1) but carries weight 1 - beta > 0"
        )
    if mix.p1 <= 0.0 and beta > 0.0:
        raise StarvedStreamError(
            "type I is starved (p1 = 0) but carries weight beta > 0"
        )


def _weighted(age_I, age_II, beta: float) -> float:
    if beta == 1.0:
        return float(age_I)
    if beta == 0.0:
        return float(age_II)
    return beta * float(age_I) + (1.0 - beta) * float(age_II)


# -- exact (integer-threshold) search ---------------------------------------


def _exact_age_grids(template: ScenarioTemplate):
    """(n, n) arrays of age_I and age_II indexed by [k1 - 1, k2 - 1].

    Built from the scalar evaluators so grid entries are bit-identical to
    direct library calls; starved streams fill with +inf.
    """
    n = template.n
    if n is None:
        raise ValueError("exact evaluator needs n in the template")
    age_I = np.full((n, n), np.inf)
    age_II = np.full((n, n), np.inf)
    for k1 in range(1, n + 1):
        for k2 in range(1, n + 1):
            pair = age_pair(template.with_thresholds(k1, k2))
            age_I[k1 - 1, k2 - 1] = float(pair.age_I)
            age_II[k1 - 1, k2 - 1] = float(pair.age_II)
    return age_I, age_II


def _exact_argmin(template, beta, grids):
    age_I, age_II = grids
    if beta == 1.0:
        obj = age_I
    elif beta == 0.0:
        obj = age_II
    else:
        obj = beta * age_I + (1.0 - beta) * age_II
    # Row-major first-occurrence argmin = lexicographically smallest (k1, k2).
    flat = int(np.argmin(obj))
    k1 = flat // template.n + 1
    k2 = flat % template.n + 1
    return k1, k2


def _exact_coarse_to_fine(template, beta):
    """Multi-resolution integer search for n beyond the exhaustive limit."""
    n = template.n

    def eval_pairs(ks1, ks2):
        best = None
        for k1 in ks1:
            for k2 in ks2:
                pair = age_pair(template.with_thresholds(k1, k2))
                obj = _weighted(pair.age_I, pair.age_II, beta)
                key = (obj, k1, k2)
                if best is None or key < best:
                    best = key
        return best[1], best[2]

    def grid(lo, hi, width=33):
        return sorted(set(int(round(v)) for v in np.linspace(lo, hi, width)))

    lo1, hi1, lo2, hi2 = 1, n, 1, n
    while True:
        ks1, ks2 = grid(lo1, hi1), grid(lo2, hi2)
        b1, b2 = eval_pairs(ks1, ks2)
        if hi1 - lo1 < len(ks1) and hi2 - lo2 < len(ks2):
            return b1, b2
        i1, i2 = ks1.index(b1), ks2.index(b2)
        lo1, hi1 = ks1[max(i1 - 1, 0)], ks1[min(i1 + 1, len(ks1) - 1)]
        lo2, hi2 = ks2[max(i2 - 1, 0)], ks2[min(i2 + 1, len(ks2) - 1)]


def _optimize_exact(template, beta, exhaustive, grids):
    if grids is None and (exhaustive or template.n <= EXHAUSTIVE_LIMIT):
        grids = _exact_age_grids(template)
    if grids is not None:
        k1, k2 = _exact_argmin(template, beta, grids)
    else:
        k1, k2 = _exact_coarse_to_fine(template, beta)
    pair = age_pair(template.with_thresholds(k1, k2))
    return ParetoPoint(
        beta=beta,
        age_I=pair.age_I,
        age_II=pair.age_II,
        objective=_weighted(pair.age_I, pair.age_II, beta),
        k1=k1,
        k2=k2,
    )


# -- approximate (threshold-ratio) search -----------------------------------


def _approx_age_matrix(template, target: Stream, A_t, A_o):
    """Vectorized large-n age of `target` over its own alpha grid A_t (axis 0)
    and the other stream's alpha grid A_o (axis 1)."""
    p = template.mix.prob(target)
    po = template.mix.prob(target.other)
    d = template.delay_I if target is Stream.TYPE_I else template.delay_II
    do_law = template.delay_II if target is Stream.TYPE_I else template.delay_I
    a = A_t[:, None]
    dt = d.shift - np.log1p(-a) / d.rate
    do = (do_law.shift - np.log1p(-A_o) / do_law.rate)[None, :]
    base = d.shift + 1.0 / d.rate + (1.0 - a) / (d.rate * a) * np.log1p(-a)
    if isinstance(template.mode, AtWill):
        num = (
            (2.0 - a) * p * p * dt * dt
            + 2.0 * p * po * (2.0 - a) * dt * do
            + po * (p * a + 2.0 * po) * do * do
        )
        return base + num / (2.0 * p * a * (p * dt + po * do))
    mu = template.mode.mu
    load = mu * p * dt + mu * po * do + 1.0
    num = (
        mu * p * p * (2.0 - a) * dt * dt
        + 2.0 * mu * p * po * (2.0 - a) * dt * do
        + mu * po * (2.0 * po + p * a) * do * do
    )
    tail = (2.0 * mu * po * do + mu * p * (2.0 - a) * dt + 1.0) / (mu * p * a * load)
    return base + num / (2.0 * p * a * load) + tail


def _approx_objective(template, beta, a1s, a2s):
    if beta == 1.0:
        return _approx_age_matrix(template, Stream.TYPE_I, a1s, a2s)
    if beta == 0.0:
        return _approx_age_matrix(template, Stream.TYPE_II, a2s, a1s).T
    age_I = _approx_age_matrix(template, Stream.TYPE_I, a1s, a2s)
    age_II = _approx_age_matrix(template, Stream.TYPE_II, a2s, a1s).T
    return beta * age_I + (1.0 - beta) * age_II


def _optimize_approx(template, beta, grid, refine_rounds, fixed_alpha1, fixed_alpha2):
    # Open-domain grid with endpoints 1/(G+1) and G/(G+1); refinement zooms
    # into the winning cell but never leaves these bounds, so a corner
    # optimum lands exactly on the minimal grid point.
    lo = 1.0 / (grid + 1)
    hi = grid / (grid + 1)
    a1s = np.array([fixed_alpha1]) if fixed_alpha1 is not None else np.linspace(lo, hi, grid)
    a2s = np.array([fixed_alpha2]) if fixed_alpha2 is not None else np.linspace(lo, hi, grid)

    for round_idx in range(refine_rounds + 1):
        obj = _approx_objective(template, beta, a1s, a2s)
        flat = int(np.argmin(obj))
        i1, i2 = flat // a2s.size, flat % a2s.size
        if round_idx == refine_rounds:
            break
        if fixed_alpha1 is None and a1s.size > 1:
            w_lo = max(a1s[max(i1 - 1, 0)], lo)
            w_hi = min(a1s[min(i1 + 1, a1s.size - 1)], hi)
            a1s = np.linspace(w_lo, w_hi, 33)
        if fixed_alpha2 is None and a2s.size > 1:
            w_lo = max(a2s[max(i2 - 1, 0)], lo)
            w_hi = min(a2s[min(i2 + 1, a2s.size - 1)], hi)
            a2s = np.linspace(w_lo, w_hi, 33)

    alpha1, alpha2 = float(a1s[i1]), float(a2s[i2])
    pair = age_pair(template.with_alphas(alpha1, alpha2))
    return ParetoPoint(
        beta=beta,
        age_I=pair.age_I,
        age_II=pair.age_II,
        objective=_weighted(pair.age_I, pair.age_II, beta),
        alpha1=alpha1,
        alpha2=alpha2,
    )


def optimize(
    template: ScenarioTemplate,
    beta: float,
    evaluator: str = "exact",
    grid: int = 512,
    refine_rounds: int = 2,
    fixed_alpha1: float | None = None,
    fixed_alpha2: float | None = None,
    exhaustive: bool = False,
    _grids=None,
) -> ParetoPoint:
    """Minimize the beta-weighted age over thresholds (exact) or ratios (approx).

    beta = 1 excludes age_II from the objective entirely (and symmetrically
    for beta = 0), so a starved unweighted stream cannot poison the search.
    Integer ties break to the lexicographically smallest (k1, k2).
    """
    beta = _check_beta(beta)
    _check_starved_objective(template.mix, beta)
    if evaluator == "exact":
        return _optimize_exact(template, beta, exhaustive, _grids)
    if evaluator == "approx":
        return _optimize_approx(
            template, beta, grid, refine_rounds, fixed_alpha1, fixed_alpha2
        )
    raise ValueError(f"unknown evaluator {evaluator!r}")


def _dominated(p: ParetoPoint, q: ParetoPoint) -> bool:
    """True when q is at least as good as p in both ages and better in one."""
    qi, qii = float(q.age_I), float(q.age_II)
    pi, pii = float(p.age_I), float(p.age_II)
    return qi <= pi and qii <= pii and (qi < pi or qii < pii)


def pareto_frontier(
    template: ScenarioTemplate,
    betas,
    evaluator: str = "exact",
    **kwargs,
) -> list[ParetoPoint]:
    """One optimize() per beta, filtered to the non-dominated set.

    Output is sorted by age_I ascending; duplicate optima (several betas
    landing on the same thresholds) are collapsed to one point.
    """
    betas = list(betas)
    if not betas:
        raise ValueError("betas must be nonempty")
    for b in betas:
        _check_beta(b)

    if evaluator == "exact" and "_grids" not in kwargs:
        n = template.n
        if n is not None and (kwargs.get("exhaustive") or n <= EXHAUSTIVE_LIMIT):
            kwargs["_grids"] = _exact_age_grids(template)

    points = [optimize(template, b, evaluator=evaluator, **kwargs) for b in betas]

    seen = set()
    unique = []
    for p in points:
        key = (p.k1, p.k2, p.alpha1, p.alpha2)
        if key not in seen:
            seen.add(key)
            unique.append(p)
    frontier = [
        p for p in unique if not any(q is not p and _dominated(p, q) for q in unique)
    ]
    return sorted(frontier, key=lambda p: float(p.age_I))


def lemma1_monotonicity_check(
    template: ScenarioTemplate,
    alpha1: float = 0.5,
    alpha2_grid=None,
) -> MonotonicityReport:
    """Verify that the large-n type-I age grows strictly with alpha2.

    With alpha1 fixed, the at-will age takes the form
    c1 + (c2 d1^2 + c3 d1 d2 + c4 d2^2) / (c5 d1 + c6 d2), which increases
    in d2 whenever c2 c6 < c3 c5; the coefficient inequality is checked
    numerically alongside the grid sweep. With p1 = 1 the age is constant
    in alpha2 (degenerate case).
    """
    if alpha2_grid is None:
        alpha2_grid = np.linspace(0.01, 0.99, 99)
    alpha2_grid = np.asarray(alpha2_grid, dtype=float)
    p1, p2 = template.mix.p1, template.mix.p2
    if p1 <= 0.0:
        raise StarvedStreamError("type I is starved (p1 = 0)")

    fn = age_atwill_approx if isinstance(template.mode, AtWill) else age_exogenous_approx
    ages = np.array(
        [fn(template.with_alphas(alpha1, a2), Stream.TYPE_I) for a2 in alpha2_grid]
    )
    degenerate = p2 <= 0.0
    c2 = (2.0 - alpha1) * p1 * p1
    c3 = 2.0 * p1 * p2 * (2.0 - alpha1)
    c5 = 2.0 * p1 * alpha1 * p1
    c6 = 2.0 * p1 * alpha1 * p2
    return MonotonicityReport(
        alpha1=alpha1,
        alpha2_grid=alpha2_grid,
        ages=ages,
        strictly_increasing=bool(np.all(np.diff(ages) > 0.0)),
        coefficient_condition=bool(c2 * c6 < c3 * c5),
        degenerate=degenerate,
    )
