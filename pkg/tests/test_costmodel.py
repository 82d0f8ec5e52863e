import pytest
from hypothesis import given
from hypothesis import strategies as st

from pllsurrogate.costmodel import (CostParams, cost_table, reduction_pct, t_difference,
                                    t_macromodel, t_metamodel_flow)


def test_macromodel_examples():
    assert t_macromodel(CostParams(0, 200, 60)) == 0
    assert t_macromodel(CostParams(1200, 200, 60)) == 72000
    assert t_macromodel(CostParams(2400, 200, 60, 3)) == 2 * t_macromodel(CostParams(1200, 200, 60, 3))


def test_metamodel_flow_examples():
    p = CostParams(1200, 200, 60)
    assert t_metamodel_flow(p, full=False) == 12000
    assert t_metamodel_flow(p, full=True) == t_metamodel_flow(p, full=False)
    q = CostParams(1200, 200, 60, t_sim=2, t_gen=30, t_ini=0.5)
    assert t_metamodel_flow(q, full=True) == 200 * 60 + 30 + 1200 * 2.5


def test_difference_examples():
    d = t_difference(CostParams(1200, 200, 60))
    assert d == 60000
    assert d / 3600 == pytest.approx(16.67, abs=0.01)
    assert t_difference(CostParams(300, 300, 60)) == 0
    assert t_difference(CostParams(100, 300, 60)) < 0


def test_reduction_examples():
    assert reduction_pct(45.55, 5.06) == pytest.approx(0.889, abs=1e-3)
    assert reduction_pct(7.0, 7.0) == 0
    assert reduction_pct(7.0, 0.0) == 1
    with pytest.raises(ValueError):
        reduction_pct(0.0, 1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        CostParams(-1, 2, 3)
    with pytest.raises(ValueError):
        CostParams(1.5, 2, 3)
    with pytest.raises(ValueError):
        CostParams(1, 2, -3)


params = st.builds(
    CostParams,
    N_i=st.integers(0, 10**6), N_s=st.integers(0, 10**6),
    t_ext=st.integers(0, 10**4).map(float), t_sim=st.integers(0, 10**3).map(float),
    t_gen=st.floats(0, 1e4), t_ini=st.floats(0, 1e2),
)


@given(p=params)
def test_difference_identity(p):
    assert t_difference(p) == t_macromodel(p) - t_metamodel_flow(p, full=False)


@given(p=params)
def test_full_never_below_reduced(p):
    assert t_metamodel_flow(p, True) >= t_metamodel_flow(p, False)


def test_cost_table_rows():
    rows = dict(cost_table(CostParams(1200, 200, 60)))
    assert rows["difference"] == 60000
