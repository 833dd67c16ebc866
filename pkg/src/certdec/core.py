"""Shared domain types: parameter grids, losses, and certified decisions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

DEFAULT_ACTION = -1
"""Reserved action index meaning "take the decision-maker's default action"."""

STRUCTURES = ("linear_welfare", "scalar_monotone", "table")


class LossError(ValueError):
    """Bad input to a loss evaluation (dimension mismatch, NaN output, bad index)."""


@dataclass(frozen=True)
class ParamGrid:
    """Finite stand-in for the parameter space.

    ``points`` has shape ``(n_points, dim)``. An empty grid (``n_points == 0``)
    is allowed so that materialized confidence sets can be empty.
    """

    points: np.ndarray
    label: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError(f"grid points must be 2-d, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if len(pts) > 1 and len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("grid contains duplicate points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls, dim: int, label: str = "empty") -> "ParamGrid":
        return cls(np.empty((0, dim)), label)

    @classmethod
    def product(cls, axes: Sequence[Sequence[float]], label: str = "") -> "ParamGrid":
        """Cartesian product of per-coordinate value lists."""
        axes = [np.unique(np.asarray(ax, dtype=float)) for ax in axes]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(np.stack([m.ravel() for m in mesh], axis=1), label)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, mask: np.ndarray, label: Optional[str] = None) -> "ParamGrid":
        return ParamGrid(self.points[np.asarray(mask, dtype=bool)],
                         self.label if label is None else label)


@dataclass(frozen=True)
class LossSpec:
    """Loss L(a, theta) over a finite action set.

    ``fn(a, points)`` evaluates the loss of action index ``a`` at every row of
    ``points`` (shape ``(n, dim)``) and returns a length-``n`` array.
    """

    actions: tuple
    fn: Callable[[int, np.ndarray], np.ndarray]
    dim: int
    bounded_unit: bool = False
    positive: bool = False
    structure: Optional[str] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.actions) == 0:
            raise ValueError("loss needs at least one action")
        if self.structure is not None and self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure tag {self.structure!r}")

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def matrix(self, grid: ParamGrid) -> np.ndarray:
        """Loss table of shape ``(n_actions, len(grid))``."""
        if grid.dim != self.dim:
            raise LossError(f"grid dimension {grid.dim} != loss dimension {self.dim}")
        if len(grid) == 0:
            return np.empty((self.n_actions, 0))
        out = np.stack([np.asarray(self.fn(a, grid.points), dtype=float)
                        for a in range(self.n_actions)])
        if np.isnan(out).any():
            raise LossError("loss evaluated to NaN")
        return out


def eval_loss(spec: LossSpec, a: int, theta) -> float:
    """L(a, theta) for a single parameter point."""
    if not 0 <= a < spec.n_actions:
        raise LossError(f"action index {a} out of range [0, {spec.n_actions})")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (spec.dim,):
        raise LossError(f"theta has shape {theta.shape}, expected ({spec.dim},)")
    if not np.all(np.isfinite(theta)):
        raise LossError("theta has non-finite coordinates")
    value = float(np.asarray(spec.fn(a, theta[None, :]))[0])
    if np.isnan(value):
        raise LossError(f"loss is NaN at action {a}, theta {theta.tolist()}")
    return value


def check_flags(spec: LossSpec, grid: ParamGrid) -> None:
    """Sweep the full action x grid product and confirm the declared flags."""
    mat = spec.matrix(grid)
    if spec.bounded_unit and not np.all((mat >= 0) & (mat <= 1)):
        raise LossError("loss flagged bounded_unit but leaves [0, 1] on the grid")
    if spec.positive and not np.all(mat > 0):
        raise LossError("loss flagged positive but is <= 0 somewhere on the grid")


def winners_loss(n_actions: int) -> LossSpec:
    """Shortfall loss 1 - theta(a) for picking among ``n_actions`` options."""

    def fn(a, points):
        return 1.0 - points[:, a]

    return LossSpec(tuple(f"a{i}" for i in range(n_actions)), fn, dim=n_actions,
                    bounded_unit=True, positive=False, structure="linear_welfare")


def treatment_loss(actions: Sequence[float], psi: Sequence[float],
                   bounded_unit: bool = False) -> LossSpec:
    """Loss a * (1 - theta) + psi(a) for treated fraction ``a`` and scalar theta.

    ``psi`` holds the variable cost at each action in ``actions``; it must be
    increasing in the action.
    """
    acts = np.asarray(actions, dtype=float)
    costs = np.asarray(psi, dtype=float)
    if acts.ndim != 1 or acts.shape != costs.shape:
        raise ValueError("actions and psi must be 1-d and the same length")
    if np.any(np.diff(acts) <= 0):
        raise ValueError("treatment actions must be strictly increasing")
    if acts[0] <= 0 or acts[-1] > 1:
        raise ValueError("treatment actions must lie in (0, 1]")
    if np.any(np.diff(costs) < 0):
        raise ValueError("psi must be increasing in the action")

    def fn(a, points):
        return acts[a] * (1.0 - points[:, 0]) + costs[a]

    positive = bool(np.all(costs >= 0))
    return LossSpec(tuple(float(x) for x in acts), fn, dim=1, bounded_unit=bounded_unit,
                    positive=positive, structure="scalar_monotone",
                    params={"actions": acts, "psi": costs})


def table_loss(actions: Sequence[str], grid: ParamGrid, values,
               bounded_unit: Optional[bool] = None,
               positive: Optional[bool] = None) -> LossSpec:
    """Loss given by a stored ``(n_actions, len(grid))`` table.

    Evaluating at a point that is not on ``grid`` raises :class:`LossError`.
    """
    table = np.array(values, dtype=float)
    if table.shape != (len(actions), len(grid)):
        raise ValueError(f"table shape {table.shape} != ({len(actions)}, {len(grid)})")
    if np.isnan(table).any():
        raise ValueError("loss table contains NaN")
    table.setflags(write=False)
    index = {tuple(p): i for i, p in enumerate(grid.points.tolist())}

    def fn(a, points):
        try:
            idx = [index[tuple(p)] for p in np.asarray(points).tolist()]
        except KeyError as exc:
            raise LossError(f"point {list(exc.args[0])} is not on the loss table grid") from None
        return table[a, idx]

    if bounded_unit is None:
        bounded_unit = bool(np.all((table >= 0) & (table <= 1)))
    if positive is None:
        positive = bool(np.all(table > 0))
    return LossSpec(tuple(actions), fn, dim=grid.dim, bounded_unit=bounded_unit,
                    positive=positive, structure="table", params={"table": table})


@dataclass(frozen=True)
class CertifiedDecision:
    """Recommended action paired with a loss certificate.

    ``kind`` is ``"P"`` (high-probability bound at ``level`` = 1 - alpha) or
    ``"E"`` (expectation-ratio bound at ``multiple`` gamma). ``vacuous`` marks
    decisions taken over an empty set, where the bound is 0 by convention.
    """

    action: int
    risk_bound: float
    kind: str
    level: Optional[float] = None
    multiple: Optional[float] = None
    epsilon: float = 0.0
    vacuous: bool = False

    def __post_init__(self):
        if self.kind not in ("P", "E"):
            raise ValueError(f"certificate kind must be 'P' or 'E', got {self.kind!r}")
        if np.isnan(self.risk_bound) or self.risk_bound < 0:
            raise ValueError(f"risk bound must be >= 0, got {self.risk_bound}")
        if self.kind == "P" and self.level is None:
            raise ValueError("P-certificates need a level")
        if self.kind == "E" and self.multiple is None:
            raise ValueError("E-certificates need a multiple")
