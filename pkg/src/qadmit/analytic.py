"""Simulation-free oracles for the threshold policy and Poisson tails.

The queue under a threshold policy is a birth-death chain truncated at the
threshold, so its stationary law, mean queue, and diversion rate have exact
closed forms.  Those feed the optimal-threshold scaling table, which makes
the logarithmic growth of the best online queue length directly checkable.
The module also provides exact Poisson upper tails for the large-deviation
rate fit; everything here is pure and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EstimationError
from .stream import ModelParams


@dataclass(frozen=True)
class BirthDeathSolution:
    """Stationary law of the queue under a fixed diversion threshold.

    ``probs[q]`` is the stationary probability of queue length q; the chain
    is geometric with ratio ``rho = arrival_rate / service_rate`` truncated
    to {0, ..., threshold}.
    """

    threshold: int
    rho: float
    probs: np.ndarray
    mean_queue: float
    diversion_rate: float

    def mass_at_or_below(self, level: float) -> float:
        """Stationary probability of the queue being <= level."""
        top = math.floor(level)
        if top < 0:
            return 0.0
        return float(self.probs[: min(top, self.threshold) + 1].sum())


def bd_stationary(params: ModelParams, x: int) -> BirthDeathSolution:
    """Exact stationary distribution of the threshold-x queue.

    Detailed balance gives weights ``rho**q``; normalizing in log space
    keeps the result stable for large thresholds where ``rho**x``
    overflows.
    """
    if x < 0:
        raise ValueError(f"threshold must be >= 0, got {x}")
    rho = params.arrival_rate / params.service_rate
    levels = np.arange(x + 1)
    log_w = levels * math.log(rho)
    w = np.exp(log_w - log_w.max())
    probs = w / w.sum()
    mean_queue = float(levels @ probs)
    return BirthDeathSolution(
        threshold=x,
        rho=rho,
        probs=probs,
        mean_queue=mean_queue,
        diversion_rate=params.arrival_rate * float(probs[x]),
    )


@dataclass(frozen=True)
class ScalingRow:
    """One arrival rate's entry in the online-scaling table."""

    arrival_rate: float
    x_star: int
    q_opt: float
    log_term: float
    ratio: float
    diversion_rate: float


def online_scaling_table(p: float, lambdas) -> list[ScalingRow]:
    """Optimal-threshold mean queue against its predicted log scaling.

    For each arrival rate the minimal feasible threshold is found, the
    exact mean queue computed, and the ratio to
    ``log_{1/(1-p)} (1/(1-lambda))`` reported; the ratio tending to 1 is
    the heavy-traffic divergence law for online policies.
    """
    from .policy import min_feasible_threshold

    rows = []
    for lam in sorted(lambdas):
        if not (1.0 - p < lam < 1.0):
            raise ConfigurationError(
                f"arrival rate {lam} outside the overload range ({1.0 - p}, 1)"
            )
        params = ModelParams(arrival_rate=lam, divert_budget=p)
        x_star = min_feasible_threshold(params)
        sol = bd_stationary(params, x_star)
        log_term = math.log(1.0 / (1.0 - lam)) / math.log(1.0 / (1.0 - p))
        rows.append(
            ScalingRow(
                arrival_rate=lam,
                x_star=x_star,
                q_opt=sol.mean_queue,
                log_term=log_term,
                ratio=sol.mean_queue / log_term,
                diversion_rate=sol.diversion_rate,
            )
        )
    return rows


_STIRLING_CUTOFF = 28


def _log_pmf(k: int, mean: float) -> float:
    # For large k the naive k*log(mean) - mean - lgamma(k+1) cancels three
    # huge magnitudes and loses ~1e-12; regrouping against Stirling's
    # expansion keeps every term O(|mean - k|) so the result stays accurate
    # to a few ulp, which the 1e-14 tail contract needs.
    if k < _STIRLING_CUTOFF:
        return k * math.log(mean) - mean - math.lgamma(k + 1)
    d = mean - k
    resid = (
        0.5 * math.log(2.0 * math.pi * k)
        + (1.0 / 12.0) / k
        - (1.0 / 360.0) / k**3
        + (1.0 / 1260.0) / k**5
        - (1.0 / 1680.0) / k**7
    )
    return k * math.log1p(d / k) - d - resid


def poisson_tail(mean: float, threshold: float) -> float:
    """P(D >= threshold) for D Poisson(mean), by stable exact summation.

    The pmf is evaluated in log space and summed outward from the mode:
    below the mode the complement is accumulated, above it the tail terms
    are collected until negligible and fsum'd smallest-first.  Returns 0.0
    when the tail lies below the smallest positive float.
    """
    if mean <= 0.0 or not math.isfinite(mean):
        raise ValueError(f"mean must be positive and finite, got {mean}")
    if threshold <= 0.0:
        return 1.0
    k0 = math.ceil(threshold)
    mode = math.floor(mean)
    if k0 <= mode:
        lower = math.fsum(math.exp(_log_pmf(k, mean)) for k in range(k0))
        return max(1.0 - lower, 0.0)

    log_t = _log_pmf(k0, mean)
    if log_t < -745.0:  # exp underflows; the whole tail is below float range
        return 0.0
    term = math.exp(log_t)
    terms = [term]
    k = k0
    total = term
    while True:
        k += 1
        term *= mean / k
        if term <= total * 1e-20:
            break
        terms.append(term)
        total += term
    return math.fsum(reversed(terms))


@dataclass(frozen=True)
class LdpRateFit:
    """Linear fit of -ln P(D_x >= c1*x) against x."""

    slope: float
    intercept: float
    rel_change: float


def ldp_rate_estimate(c1: float, xs) -> LdpRateFit:
    """Estimate the exponential decay rate of the Poisson upper tail.

    Fits -ln poisson_tail(x, c1*x) linearly in x and reports the relative
    change of the per-x rate between the two largest x values as a
    convergence diagnostic.  At c1 = 1 the tail is central (about 1/2) and
    the slope collapses to zero.
    """
    if c1 < 1.0:
        raise ValueError(f"c1 must be >= 1 for a meaningful tail, got {c1}")
    xs = [float(x) for x in xs]
    if len(xs) < 2 or any(x <= 0 for x in xs) or any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("xs must be an increasing list of at least two positive values")
    tails = [poisson_tail(x, c1 * x) for x in xs]
    if any(t <= 0.0 for t in tails):
        raise EstimationError(
            "Poisson tail underflowed at the requested x; lower x or raise precision"
        )
    ys = -np.log(tails)
    slope, intercept = np.polyfit(xs, ys, 1)
    rates = ys / np.asarray(xs)
    rel_change = abs(rates[-1] - rates[-2]) / max(abs(rates[-1]), np.finfo(float).tiny)
    return LdpRateFit(slope=float(slope), intercept=float(intercept), rel_change=float(rel_change))
