"""E-certified decisions: e-posterior minimax, inversion, truncation.

Ratios follow extended-real conventions: positive / 0 = inf and
finite / inf = 0, so no NaN ever leaves this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from certdec.core import CertifiedDecision, LossSpec, ParamGrid


@dataclass(frozen=True)
class EVariableField:
    """Realized e-values E(Y, theta), one per grid point, for the observed Y."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if np.isnan(v).any() or np.any(v < 0):
            raise ValueError("e-values must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def loss_ratio(L, E):
    """L / E with positive/0 = inf, x/inf = 0 (L is finite and >= 0)."""
    L = np.asarray(L, dtype=float)
    E = np.asarray(E, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = L / E
    out = np.where(np.isinf(E), 0.0, out)
    return np.where(E == 0, np.where(L > 0, np.inf, 0.0), out)


def eposterior_batch(loss_table: np.ndarray, E: np.ndarray):
    """Vectorized e-posterior minimax.

    ``loss_table`` is ``(n_actions, n_points)``, ``E`` is ``(m, n_points)``.
    Returns ``(action, R)`` with R = min_a max_theta L(a, theta) / E(theta).
    """
    ratios = loss_ratio(loss_table[None, :, :], np.atleast_2d(E)[:, None, :])
    worst = ratios.max(axis=2)
    action = np.argmin(worst, axis=1)
    return action, np.take_along_axis(worst, action[:, None], axis=1)[:, 0]


def _check(field: EVariableField, spec: LossSpec, grid: ParamGrid) -> np.ndarray:
    if not spec.positive:
        raise ValueError("E-certificates need a strictly positive loss")
    if field.values.size != len(grid):
        raise ValueError(f"field has {field.values.size} values for {len(grid)} grid points")
    return spec.matrix(grid)


def eposterior_decide(field: EVariableField, spec: LossSpec,
                      grid: ParamGrid) -> CertifiedDecision:
    """Action minimizing the worst e-posterior-weighted loss, with that value as R."""
    table = _check(field, spec, grid)
    action, R = eposterior_batch(table, field.values[None, :])
    return CertifiedDecision(int(action[0]), float(R[0]), "E", multiple=1.0)


def invert_e_certificate(delta_tilde: int, R_tilde: float, spec: LossSpec,
                         grid: ParamGrid) -> EVariableField:
    """Field E(theta) = L(delta_tilde, theta) / R_tilde built from a given certificate."""
    if not (0 < R_tilde < np.inf):
        raise ValueError(f"R_tilde must be positive and finite, got {R_tilde}")
    values = spec.fn(delta_tilde, grid.points) / R_tilde
    return EVariableField(values, f"inversion of action {delta_tilde}")


def truncate(E, gamma: float):
    """E_gamma = gamma * E + 1 (floored at 1, so ratios stay finite)."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return gamma * np.asarray(E, dtype=float) + 1.0


def truncated_eposterior_decide(field: EVariableField, gamma: float, spec: LossSpec,
                                grid: ParamGrid) -> CertifiedDecision:
    table = _check(field, spec, grid)
    action, R = eposterior_batch(table, truncate(field.values, gamma)[None, :])
    return CertifiedDecision(int(action[0]), float(R[0]), "E", multiple=1.0 + gamma)


def e_adoption_risk_factor(gamma: float, C: float) -> float:
    """(1 + gamma) C: post-adoption risk bound for rules Q <= 1(R <= C).

    gamma = 1 gives the 2C bound for untruncated certificates.
    """
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    return (1 + gamma) * C


def normal_likelihood_ratio(y, support, sigma: float) -> np.ndarray:
    """Likelihood-ratio e-values for a normal mean on a two-point support.

    For observation(s) ``y`` ~ N(theta, sigma^2) and support (t0, t1), the
    e-value against t_i is the density at the other point over the density
    at t_i, which has mean exactly 1 under t_i. Returns shape ``(m, 2)``.
    """
    support = np.asarray(support, dtype=float)
    if support.shape != (2,) or support[0] == support[1]:
        raise ValueError("support must be two distinct points")
    y = np.atleast_1d(np.asarray(y, dtype=float))[:, None]
    log_dens = -0.5 * ((y - support[None, :]) / sigma) ** 2
    log_e = log_dens[:, ::-1] - log_dens
    with np.errstate(over="ignore"):
        return np.exp(log_e)
