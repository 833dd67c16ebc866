import numpy as np
import pytest
from hypothesis import given, strategies as st

from certdec.core import (CertifiedDecision, LossError, LossSpec, ParamGrid, check_flags, eval_loss,
                          table_loss, treatment_loss, winners_loss)


def test_winners_loss_value():
    spec = winners_loss(2)
    assert eval_loss(spec, 0, [0.7, 0.1]) == pytest.approx(0.3, abs=1e-15)


def test_treatment_loss_value():
    spec = treatment_loss([0.5, 1.0], [0.05, 0.1])
    assert eval_loss(spec, 0, [1.0]) == pytest.approx(0.05, abs=1e-15)


def test_table_loss_lookup():
    grid = ParamGrid([[0.0], [1.0]])
    spec = table_loss(["a1", "a2"], grid, [[0.1, 0.2], [0.42, 0.3]])
    assert eval_loss(spec, 1, [0.0]) == 0.42
    with pytest.raises(LossError):
        eval_loss(spec, 0, [0.5])


def test_dimension_mismatch():
    with pytest.raises(LossError):
        eval_loss(winners_loss(3), 0, [0.1, 0.2])
    with pytest.raises(LossError):
        eval_loss(winners_loss(2), 5, [0.1, 0.2])


def test_nan_loss_is_an_error():
    spec = LossSpec(("a",), lambda a, pts: np.full(len(pts), np.nan), dim=1)
    with pytest.raises(LossError):
        eval_loss(spec, 0, [0.5])
    with pytest.raises(LossError):
        spec.matrix(ParamGrid([[0.0], [1.0]]))
    with pytest.raises(ValueError):
        table_loss(["a"], ParamGrid([[0.0]]), [[np.nan]])


def test_grid_rejects_duplicates_and_allows_empty():
    with pytest.raises(ValueError):
        ParamGrid([[0.1, 0.2], [0.1, 0.2]])
    assert len(ParamGrid.empty(3)) == 0
    g = ParamGrid.product([[0, 1], [0, 0.5, 1]])
    assert len(g) == 6 and g.dim == 2


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3), st.integers(0, 2))
def test_eval_is_deterministic(theta, a):
    spec = winners_loss(3)
    first = eval_loss(spec, a, theta)
    assert eval_loss(spec, a, theta) == first


@pytest.mark.parametrize("name", ["winners", "treatment", "treatment_marginal", "ecert",
                                  "winners_correlated"])
def test_flags_hold_on_shipped_scenarios(shipped, name):
    s = shipped(name)
    spec = s.loss()
    if s.name == "winners":
        grid = ParamGrid.product([np.linspace(0, 1, 11)] * len(s.theta))
    elif s.name == "treatment":
        grid = ParamGrid(np.linspace(0, 1, 201))
    else:
        grid = ParamGrid(np.asarray(s.support))
    check_flags(spec, grid)


def test_flag_sweep_catches_false_claims():
    spec = treatment_loss([0.5, 1.0], [0.0, 0.05], bounded_unit=True)
    with pytest.raises(LossError):
        check_flags(spec, ParamGrid(np.linspace(0, 1, 11)))


def test_certified_decision_invariants():
    with pytest.raises(ValueError):
        CertifiedDecision(0, -0.1, "P", level=0.95)
    with pytest.raises(ValueError):
        CertifiedDecision(0, 0.5, "E")
    assert CertifiedDecision(0, np.inf, "E", multiple=1.0).risk_bound == np.inf
