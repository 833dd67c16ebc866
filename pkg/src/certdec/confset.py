"""Confidence sets: projection boxes, scalar lower bounds, certificate inversion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm

from certdec import streams
from certdec.core import LossSpec, ParamGrid

CONSTRUCTIONS = ("projection", "studentized_projection", "uma_lower", "inversion", "trivial")


@dataclass(frozen=True)
class ConfidenceSet:
    """Membership predicate over parameter points.

    ``predicate`` maps an array of points of shape ``(..., dim)`` to a boolean
    array of shape ``(...)``.
    """

    predicate: Callable[[np.ndarray], np.ndarray]
    nominal_level: float
    construction: str
    grid_view: Optional[ParamGrid] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 < self.nominal_level < 1:
            raise ValueError(f"nominal level must be in (0, 1), got {self.nominal_level}")
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.construction!r}")

    def member(self, theta) -> bool:
        return bool(self.predicate(np.atleast_1d(np.asarray(theta, dtype=float))))

    def mask(self, grid: ParamGrid) -> np.ndarray:
        if len(grid) == 0:
            return np.zeros(0, dtype=bool)
        return np.asarray(self.predicate(grid.points), dtype=bool).reshape(len(grid))

    def materialize(self, grid: ParamGrid) -> "ConfidenceSet":
        """Copy with ``grid_view`` set to the members of ``grid``."""
        return replace(self, grid_view=grid.subset(self.mask(grid), f"{self.construction} view"))


@dataclass(frozen=True)
class WinnersData:
    """Per-action estimates X(a) with fixed positive standard errors sigma(a)."""

    X: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float).ravel()
        sigma = np.array(self.sigma, dtype=float).ravel()
        if X.shape != sigma.shape:
            raise ValueError(f"X has {X.size} entries but sigma has {sigma.size}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(sigma))):
            raise ValueError("X and sigma must be finite")
        if np.any(sigma <= 0):
            raise ValueError("standard errors must be strictly positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class GaussianErrors:
    """Joint normal law for the standardized errors Z.

    ``cov=None`` means independent standard normals. Any positive
    semidefinite matrix is accepted, including the zero matrix.
    """

    dim: int
    cov: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.cov is None:
            return
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (self.dim, self.dim):
            raise ValueError(f"covariance must be {self.dim}x{self.dim}, got {cov.shape}")
        if not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "cov", cov)

    def _root(self) -> Optional[np.ndarray]:
        if self.cov is None:
            return None
        try:
            return np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError:
            w, v = np.linalg.eigh(self.cov)
            return v * np.sqrt(np.clip(w, 0, None))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        root = self._root()
        return z if root is None else z @ root.T


def empirical_quantile(values: np.ndarray, level: float) -> float:
    """Order statistic at 1-based index ceil(level * n)."""
    values = np.asarray(values, dtype=float).ravel()
    k = max(1, math.ceil(level * len(values) - 1e-12))
    return float(np.partition(values, k - 1)[k - 1])


def critical_value(sigma, error_model: GaussianErrors, alpha: float, n_draws: int,
                   seed: int, studentized: bool) -> float:
    """Monte Carlo 1 - alpha quantile of max_a Z(a) sigma(a), or of max_a Z(a)."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if n_draws < 1000:
        raise ValueError(f"n_draws must be at least 1000, got {n_draws}")
    sigma = np.asarray(sigma, dtype=float).ravel()
    if sigma.size != error_model.dim:
        raise ValueError("sigma and error model dimensions differ")
    rng = streams.generator(seed, streams.CRITICAL_VALUE)
    maxima = np.empty(n_draws)
    for _, start, stop in streams.chunks(n_draws, 1 << 16):
        z = error_model.draw(rng, stop - start)
        maxima[start:stop] = (z if studentized else z * sigma).max(axis=1)
    return empirical_quantile(maxima, 1 - alpha)


def projection_box(data: WinnersData, c: float, studentized: bool,
                   nominal_level: float = 0.95) -> ConfidenceSet:
    """{theta in [0,1]^A : theta(a) >= X(a) - c (times sigma(a) if studentized)}."""
    if not math.isfinite(c):
        raise ValueError("critical value must be finite")
    lower = data.X - (data.sigma * c if studentized else c)
    return box_set(lower, nominal_level,
                   "studentized_projection" if studentized else "projection")


def box_set(lower, nominal_level: float, construction: str) -> ConfidenceSet:
    """Upper orthant {theta in [0,1]^A : theta >= lower} as a confidence set."""
    lower = np.array(lower, dtype=float)
    lower.setflags(write=False)

    def predicate(points):
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != lower.size:
            raise ValueError(f"point dimension {points.shape[-1]} != {lower.size}")
        inside = (points >= 0) & (points <= 1) & (points >= lower)
        return inside.all(axis=-1)

    return ConfidenceSet(predicate, nominal_level, construction, meta={"lower": lower})


def uma_lower_bound(X: float, sigma: float, alpha: float) -> float:
    """Normal-mean lower confidence bound X + sigma * z_alpha."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return X + sigma * float(norm.ppf(alpha))


def lower_bound_set(theta_hat: float, nominal_level: float) -> ConfidenceSet:
    """[theta_hat, inf) for a scalar parameter."""

    def predicate(points):
        return np.asarray(points, dtype=float)[..., 0] >= theta_hat

    return ConfidenceSet(predicate, nominal_level, "uma_lower", meta={"lower": theta_hat})


def invert_certificate(delta_tilde: int, R_tilde: float, spec: LossSpec,
                       grid: Optional[ParamGrid] = None,
                       nominal_level: float = 0.95) -> ConfidenceSet:
    """{theta : L(delta_tilde, theta) <= R_tilde}; may be empty.

    With ``grid`` the returned set carries its materialized ``grid_view``.
    """
    if not R_tilde >= 0:
        raise ValueError(f"R_tilde must be >= 0, got {R_tilde}")

    def predicate(points):
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, spec.dim)
        return (spec.fn(delta_tilde, flat) <= R_tilde).reshape(points.shape[:-1])

    cs = ConfidenceSet(predicate, nominal_level, "inversion",
                       meta={"delta_tilde": delta_tilde, "R_tilde": R_tilde})
    return cs if grid is None else cs.materialize(grid)


def trivial_set(covers: bool, nominal_level: float) -> ConfidenceSet:
    """Whole space (``covers``) or the empty set."""

    def predicate(points):
        return np.full(np.asarray(points).shape[:-1], covers, dtype=bool)

    return ConfidenceSet(predicate, nominal_level, "trivial")
