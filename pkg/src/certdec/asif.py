"""As-if minimax optimization over confidence sets.

The grid functions (:func:`worst_case_loss`, :func:`asif_decide`) work for
any loss and any confidence set. The ``*_batch`` functions are closed-form
versions for the two shipped loss families, vectorized over replications;
they are checked against the grid engine in the test suite.
"""

from __future__ import annotations

import numpy as np

from certdec.confset import (ConfidenceSet, GaussianErrors, WinnersData,
                             critical_value)
from certdec.core import CertifiedDecision, LossSpec, ParamGrid


def worst_case_loss(a: int, cset: ConfidenceSet, spec: LossSpec, grid: ParamGrid) -> float:
    """Max of L(a, theta) over grid members of ``cset``; 0 on an empty set."""
    mask = cset.mask(grid)
    if not mask.any():
        return 0.0
    return float(spec.fn(a, grid.points[mask]).max())


def worst_case_losses(cset: ConfidenceSet, spec: LossSpec, grid: ParamGrid) -> np.ndarray:
    mask = cset.mask(grid)
    if not mask.any():
        return np.zeros(spec.n_actions)
    return spec.matrix(grid.subset(mask)).max(axis=1)


def asif_decide(cset: ConfidenceSet, spec: LossSpec, grid: ParamGrid) -> CertifiedDecision:
    """Minimize worst-case loss over ``cset`` (lowest index wins ties)."""
    worst = worst_case_losses(cset, spec, grid)
    vacuous = not cset.mask(grid).any()
    a = int(np.argmin(worst))
    R = float(worst[a])
    if spec.bounded_unit:
        R = min(max(R, 0.0), 1.0)
    return CertifiedDecision(a, R, "P", level=cset.nominal_level, vacuous=vacuous)


# -- closed forms for the winners loss 1 - theta(a) over [0,1]^A ------------

def box_asif_batch(lower: np.ndarray):
    """As-if decisions over boxes {theta in [0,1]^A : theta >= lower}.

    ``lower`` has shape ``(m, A)``. Returns ``(action, R, empty)`` arrays.
    The worst case of action a is ``1 - clip(lower[a], 0, 1)``.
    """
    lower = np.atleast_2d(lower)
    empty = (lower > 1).any(axis=1)
    worst = 1.0 - np.clip(lower, 0.0, 1.0)
    action = np.argmin(worst, axis=1)
    R = np.take_along_axis(worst, action[:, None], axis=1)[:, 0]
    action = np.where(empty, 0, action)
    R = np.where(empty, 0.0, R)
    return action, R, empty


def winners_inversion_batch(delta_tilde: np.ndarray, R_tilde: np.ndarray):
    """As-if decisions over {theta in [0,1]^A : 1 - theta(delta_tilde) <= R_tilde}.

    The chosen action keeps worst case min(R_tilde, 1); every other action
    has worst case 1, so ties at 1 fall back to action 0.
    """
    delta_tilde = np.asarray(delta_tilde)
    R_tilde = np.asarray(R_tilde, dtype=float)
    R = np.minimum(R_tilde, 1.0)
    action = np.where(R < 1.0, delta_tilde, 0)
    return action, R


def projection_certificates(data: WinnersData, alpha: float, seed: int, n_draws: int,
                            error_model: GaussianErrors | None = None,
                            critical_values: tuple[float, float] | None = None):
    """Projection, studentized-projection and risk-aware certified decisions.

    Returns a dict with keys ``projection``, ``studentized``, ``risk_aware``.
    ``critical_values`` = (c, c_star) skips the Monte Carlo quantiles.
    """
    if error_model is None:
        error_model = GaussianErrors(data.X.size)
    if critical_values is None:
        c = critical_value(data.sigma, error_model, alpha, n_draws, seed, studentized=False)
        c_star = critical_value(data.sigma, error_model, alpha, n_draws, seed, studentized=True)
    else:
        c, c_star = critical_values
    level = 1 - alpha
    ewm = int(np.argmax(data.X))
    R = float(np.clip(1 - (data.X[ewm] - c), 0, 1))
    R_star = float(np.clip(1 - (data.X[ewm] - c_star * data.sigma[ewm]), 0, 1))
    action, R_tilde, empty = box_asif_batch((data.X - data.sigma * c_star)[None, :])
    return {
        "projection": CertifiedDecision(ewm, R, "P", level=level),
        "studentized": CertifiedDecision(ewm, R_star, "P", level=level),
        "risk_aware": CertifiedDecision(int(action[0]), float(R_tilde[0]), "P", level=level,
                                        vacuous=bool(empty[0])),
    }


# -- closed forms for scalar losses decreasing in theta ---------------------

def monotone_asif_batch(spec: LossSpec, theta_hat: np.ndarray, theta_lo: float,
                        theta_hi: float):
    """As-if decisions over [theta_hat, inf) intersected with [theta_lo, theta_hi].

    For a loss decreasing in theta the supremum sits at the left end of the
    set, max(theta_hat, theta_lo); the set is empty once theta_hat > theta_hi.
    Returns ``(action, R, empty)``.
    """
    theta_hat = np.asarray(theta_hat, dtype=float).ravel()
    empty = theta_hat > theta_hi
    left = np.maximum(theta_hat, theta_lo)[:, None]
    losses = np.stack([spec.fn(a, left) for a in range(spec.n_actions)], axis=1)
    action = np.argmin(losses, axis=1)
    R = np.take_along_axis(losses, action[:, None], axis=1)[:, 0]
    if spec.bounded_unit:
        R = np.clip(R, 0.0, 1.0)
    return np.where(empty, 0, action), np.where(empty, 0.0, R), empty


def min_loss(spec: LossSpec, theta) -> np.ndarray:
    """min_a L(a, theta) at each scalar theta."""
    pts = np.atleast_1d(np.asarray(theta, dtype=float))[:, None]
    return np.min([spec.fn(a, pts) for a in range(spec.n_actions)], axis=0)


def monotone_threshold(spec: LossSpec, C: float, theta_lo: float, theta_hi: float,
                       tol: float = 1e-9) -> float:
    """theta_bar with min_a L(a, theta_bar) = C, by bisection on [theta_lo, theta_hi].

    Returns -inf when even theta_lo already gives min loss <= C, and
    theta_hi when no point of the interval reaches C.
    """
    f = lambda t: float(min_loss(spec, t)[0]) - C
    if f(theta_lo) <= 0:
        return -np.inf
    if f(theta_hi) > 0:
        return theta_hi
    lo, hi = theta_lo, theta_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

