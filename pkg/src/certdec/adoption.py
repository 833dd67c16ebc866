"""Adoption rules for a decision-maker holding a P-certified recommendation.

A rule maps the reported certificate value r to the probability q(r) of
adopting the recommendation instead of the default action (known loss C).
Rules live on a grid over [0, 1] and are evaluated as left-continuous step
functions: an r strictly between grid points g[k-1] < r <= g[k] gets q(g[k]).
For threshold rules with the cutoff on the grid this reproduces u * 1(r <= C)
exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from certdec import streams

DEFAULT_RESOLUTION = 1001


def unit_grid(resolution: int = DEFAULT_RESOLUTION, extra=()) -> np.ndarray:
    if resolution < 2:
        raise ValueError("r-grid needs at least two points")
    grid = np.linspace(0.0, 1.0, resolution)
    extra = [float(x) for x in extra if 0.0 <= x <= 1.0]
    return np.unique(np.concatenate([grid, extra])) if extra else grid


@dataclass(frozen=True)
class AdoptionRule:
    r_grid: np.ndarray
    q: np.ndarray
    cap_u: float

    def __post_init__(self):
        r = np.array(self.r_grid, dtype=float)
        q = np.array(self.q, dtype=float)
        if r.ndim != 1 or r.shape != q.shape:
            raise ValueError("r_grid and q must be 1-d arrays of equal length")
        if r[0] != 0.0 or r[-1] != 1.0 or np.any(np.diff(r) <= 0):
            raise ValueError("r_grid must increase strictly from 0 to 1")
        if not 0 <= self.cap_u <= 1:
            raise ValueError(f"cap u must be in [0, 1], got {self.cap_u}")
        if np.any(q < 0) or np.any(q > self.cap_u + 1e-15):
            raise ValueError("adoption probabilities must lie in [0, u]")
        r.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "q", q)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.r_grid, np.clip(r, 0.0, 1.0), side="left")
        return self.q[idx]


@dataclass(frozen=True)
class PriorSummary:
    """What the Bayes objective needs from a prior: E[L | R = r] and the law of R."""

    r_grid: np.ndarray
    cond_mean_loss: np.ndarray
    marginal: np.ndarray

    def __post_init__(self):
        r, m, p = (np.array(x, dtype=float) for x in (self.r_grid, self.cond_mean_loss,
                                                       self.marginal))
        if not (r.shape == m.shape == p.shape and r.ndim == 1):
            raise ValueError("prior arrays must be 1-d and the same length")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("marginal masses must be nonnegative and sum to 1")
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("conditional mean loss must lie in [0, 1]")
        for name, arr in (("r_grid", r), ("cond_mean_loss", m), ("marginal", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def threshold_rule(C: float, u: float, resolution: int = DEFAULT_RESOLUTION) -> AdoptionRule:
    """q(r) = u * 1(r <= C)."""
    if not 0 <= C < 1:
        raise ValueError(f"C must be in [0, 1), got {C}")
    r = unit_grid(resolution, extra=[C])
    return AdoptionRule(r, np.where(r <= C, u, 0.0), u)


def risk_bound(u: float, alpha: float, C: float) -> float:
    """Worst-case risk C + u * alpha * (1 - C) of any rule q <= u * 1(r <= C)."""
    return C + u * alpha * (1 - C)


def pathwise_bound(R, C: float, alpha: float):
    """alpha + min(R, C): one realization's share of the P-specific risk bound."""
    return alpha + np.minimum(R, C)


def lemma_worst_case(rule: AdoptionRule, alpha: float, C: float) -> float:
    """sup over a <= alpha of  a sup_r q(r)(1-C) + (1-a) sup_{r>=C} q(r)(r-C).

    The bracket is affine in a, so only a = 0 and a = alpha are checked.
    """
    top = float(rule.q.max()) * (1 - C)
    above = rule.r_grid >= C
    tail = float(np.max(rule.q[above] * (rule.r_grid[above] - C))) if above.any() else 0.0
    return max(tail, alpha * top + (1 - alpha) * tail)


def is_feasible(rule: AdoptionRule, alpha: float, C: float,
                tau: Optional[float] = None, tol: float = 1e-9) -> bool:
    """Worst-case excess risk of ``rule`` is within ``tau`` (default u*alpha*(1-C))."""
    if tau is None:
        tau = rule.cap_u * alpha * (1 - C)
    return lemma_worst_case(rule, alpha, C) <= tau + tol


def adversarial_two_point(a: float, r_minus: float, r_plus: float, n: int, seed: int,
                          alpha: float, C: float = 0.0):
    """Draw n (L, R) pairs: (1, r_minus) with prob. a, else (r_plus, r_plus).

    Only the first atom violates L <= R, so the certificate constraint holds
    whenever a <= alpha.
    """
    if a > alpha:
        raise ValueError(f"violation mass a={a} exceeds alpha={alpha}")
    if not (0 <= a and 0 <= r_minus <= 1 and C <= r_plus <= 1):
        raise ValueError("need a >= 0, r_minus in [0, 1], r_plus in [C, 1]")
    rng = streams.generator(seed, streams.ADVERSARIAL)
    bad = rng.random(n) < a
    L = np.where(bad, 1.0, r_plus)
    R = np.where(bad, r_minus, r_plus)
    return L, R


def realized_loss(rule: AdoptionRule, L, R, C: float, rng: np.random.Generator):
    """Per-draw loss of delta_Q: adopt with probability q(R), else pay C."""
    adopt = rng.random(np.shape(R)) < rule(R)
    return np.where(adopt, L, C)


def bayes_objective(rule_q: np.ndarray, prior: PriorSummary, C: float) -> float:
    """Excess Bayes loss  sum_r q(r) (E[L | R=r] - C) pi_R(r)."""
    return float(np.sum(rule_q * (prior.cond_mean_loss - C) * prior.marginal))


def _qstar_rule(q_star: float, prior: PriorSummary, u: float, alpha: float,
                C: float) -> np.ndarray:
    r, m = prior.r_grid, prior.cond_mean_loss
    gap = np.where(r > C, r - C, np.inf)
    extra = np.minimum(alpha * (1 - C) * q_star / ((1 - alpha) * gap), u - q_star)
    return (u - q_star) * (r <= C) + ((m <= C) & (C < r)) * extra


def optimal_adoption(prior: PriorSummary, u: float, alpha: float, C: float,
                     n_search: int = DEFAULT_RESOLUTION) -> AdoptionRule:
    """Best rule over all q(r) by brute-force search of the one-parameter family.

    The family trades adoption mass below C for extra adoption above C where
    the prior's conditional mean loss is still below C. The smallest
    minimizing q* wins ties, so a flat objective returns the threshold rule.
    """
    if n_search < 1000:
        raise ValueError("q* search grid needs at least 1000 points")
    if prior.r_grid[0] != 0.0 or prior.r_grid[-1] != 1.0:
        raise ValueError("prior r_grid must span [0, 1]")
    best_q, best_val = None, np.inf
    for q_star in np.linspace(0.0, u, n_search):
        q = _qstar_rule(q_star, prior, u, alpha, C)
        val = bayes_objective(q, prior, C)
        if val < best_val:
            best_q, best_val = q, val
    return AdoptionRule(prior.r_grid, np.clip(best_q, 0.0, u), u)


def best_binary_rule(prior: PriorSummary, alpha: float, C: float) -> AdoptionRule:
    """Exhaustive search over {0, 1}-valued rules with sup q = 1.

    Keeps rules whose worst-case excess risk is within alpha*(1-C) and returns
    the one with the lowest Bayes objective, preferring more adoption on ties.
    Exponential in the grid size, so the prior grid is capped at 16 points.
    """
    r = prior.r_grid
    n = len(r)
    if n > 16:
        raise ValueError("binary rule enumeration is limited to 16 grid points")
    bits = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
    bits = bits[bits.max(axis=1) == 1]
    # vectorized lemma_worst_case: every candidate has sup q = 1
    above = r >= C
    tail = np.max(bits[:, above] * (r[above] - C), axis=1) if above.any() else 0.0
    worst = np.maximum(tail, alpha * (1 - C) + (1 - alpha) * tail)
    bits = bits[worst <= alpha * (1 - C) + 1e-9]
    if not len(bits):
        raise ValueError("no feasible binary rule on this grid")
    objective = bits @ ((prior.cond_mean_loss - C) * prior.marginal)
    # lowest objective, then most adoption; lexsort keys run last-to-first
    best = np.lexsort((-bits.sum(axis=1), objective))[0]
    return AdoptionRule(r, bits[best], 1.0)
