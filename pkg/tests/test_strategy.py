import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from digicopy.errors import InfeasibleError, InstanceTooLargeError, ModelError
from digicopy.strategy import (
    CoverageRule,
    StrategyModel,
    all_plans,
    brute_force_assignment,
    check_budget,
    evaluate_plan,
    load_model,
    optimize_assignment,
    plan_cost_by_period,
)

COSTS = [[1.0, 2.0], [3.0, 4.0]]


@pytest.mark.parametrize(
    "assign, expected",
    [([[1, 0], [0, 1]], 5.0), ([[0, 0], [0, 0]], 0.0), ([[1, 1], [1, 1]], 10.0)],
)
def test_evaluate_plan(assign, expected):
    assert evaluate_plan(StrategyModel.from_costs(COSTS, assign)) == expected


def test_evaluate_rejects_bad_models():
    with pytest.raises(ModelError):
        evaluate_plan(StrategyModel.from_costs(COSTS, [[1, 0, 0], [0, 1, 0]]))
    with pytest.raises(ModelError):
        evaluate_plan(StrategyModel.from_costs(COSTS, [[2, 0], [0, 1]]))
    with pytest.raises(ModelError):
        evaluate_plan(StrategyModel.from_costs([[-1.0]], [[1]]))


def test_budget_published_figures():
    # base cost 5,641,442; extra resources 27,612; five-year total 5,669,054
    mdl = StrategyModel.from_costs([[27_612.0]], [[1]], budget=5_669_054.0)
    rep = check_budget(mdl, base_cost=5_641_442.0)
    assert rep.feasible
    assert rep.slack == 0.0
    assert rep.total == 5_669_054.0


def test_budget_trivial():
    rep = check_budget(StrategyModel.from_costs([[5.0]], [[0]], budget=0.0), base_cost=0.0)
    assert rep.feasible and rep.slack == 0.0
    rep = check_budget(StrategyModel.from_costs([[1.0]], [[1]], budget=10.0), base_cost=10.0)
    assert not rep.feasible and rep.slack == -1.0


def test_optimize_examples():
    plan = optimize_assignment(COSTS)
    assert plan.assign.tolist() == [[1, 1], [0, 0]]
    assert evaluate_plan(plan) == 3.0
    assert evaluate_plan(optimize_assignment([[7.0]])) == 7.0
    with pytest.raises(InfeasibleError) as err:
        optimize_assignment(COSTS, budget=2.0)
    assert err.value.unconstrained_min == 3.0


def test_free_rule_picks_nothing():
    plan = optimize_assignment(COSTS, CoverageRule.FREE, budget=0.0)
    assert not plan.assign.any()


def test_brute_force_examples():
    # exhaustive over the 4 plans of a 2 x 2 instance
    assert evaluate_plan(brute_force_assignment(COSTS)) == 3.0
    with pytest.raises(InfeasibleError) as err:
        brute_force_assignment(COSTS, budget=2.0)
    assert err.value.unconstrained_min == 3.0
    row = [[4.0, 1.5, 2.25]]
    plan = brute_force_assignment(row)
    assert plan.assign.tolist() == [[1, 1, 1]]
    assert evaluate_plan(plan) == math.fsum(row[0])


def test_brute_force_limit():
    with pytest.raises(InstanceTooLargeError):
        brute_force_assignment(np.ones((4, 11)))


def test_brute_force_against_plain_enumeration(rng):
    for rule in CoverageRule:
        for _ in range(20):
            m, p = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            costs = rng.integers(0, 4, size=(m, p)).astype(float)
            best = min(math.fsum(costs[a == 1].tolist()) for a in all_plans(m, p, rule))
            assert evaluate_plan(brute_force_assignment(costs, rule)) == best


@pytest.mark.parametrize("rule", list(CoverageRule))
def test_optimizer_matches_oracle(rng, rule):
    for _ in range(150):
        m = int(rng.integers(1, 4))
        p = int(rng.integers(1, 5))
        costs = rng.uniform(0, 100, size=(m, p))
        if rng.random() < 0.3:
            costs = np.round(costs / 25) * 25  # force ties
        a = optimize_assignment(costs, rule)
        b = brute_force_assignment(costs, rule)
        assert a.assign.tolist() == b.assign.tolist()
        assert evaluate_plan(a) == evaluate_plan(b)


def test_float_absorption_tie():
    # 1e-300 vanishes next to 100, so float totals tie; exact ranking must not
    costs = [[1e-300, 100.0], [0.0, 100.0]]
    a = optimize_assignment(costs)
    b = brute_force_assignment(costs)
    assert a.assign.tolist() == b.assign.tolist() == [[0, 1], [1, 0]]


def test_budget_infeasibility_agrees(rng):
    for _ in range(100):
        costs = rng.uniform(0, 100, size=(3, 4))
        budget = float(rng.uniform(0, 200))
        results = []
        for solve in (optimize_assignment, brute_force_assignment):
            try:
                results.append(solve(costs, budget=budget).assign.tolist())
            except InfeasibleError as exc:
                results.append(("infeasible", exc.unconstrained_min))
        assert results[0] == results[1]


cost_matrices = hnp.arrays(
    np.float64,
    st.tuples(st.integers(1, 4), st.integers(1, 6)),
    elements=st.floats(0, 100, allow_nan=False),
)


@settings(max_examples=200, deadline=None)
@given(cost_matrices, st.data())
def test_raising_a_cost_never_lowers_the_optimum(costs, data):
    i = data.draw(st.integers(0, costs.shape[0] - 1))
    j = data.draw(st.integers(0, costs.shape[1] - 1))
    bump = data.draw(st.floats(0, 100))
    before = evaluate_plan(optimize_assignment(costs))
    raised = costs.copy()
    raised[i, j] += bump
    assert evaluate_plan(optimize_assignment(raised)) >= before


@settings(max_examples=200, deadline=None)
@given(cost_matrices, st.integers(-20, 20))
def test_power_of_two_scaling_keeps_the_argmin(costs, e):
    a = 2.0**e
    base = optimize_assignment(costs)
    scaled = optimize_assignment(costs * a)
    assert scaled.assign.tolist() == base.assign.tolist()
    assert evaluate_plan(scaled) == pytest.approx(a * evaluate_plan(base), rel=1e-12)


def test_general_scaling_keeps_the_argmin(rng):
    for _ in range(300):
        costs = rng.uniform(0, 100, size=(4, 8))
        a = float(rng.uniform(0.01, 1000))
        base = optimize_assignment(costs)
        scaled = optimize_assignment(costs * a)
        assert scaled.assign.tolist() == base.assign.tolist()
        assert evaluate_plan(scaled) == pytest.approx(a * evaluate_plan(base), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    hnp.arrays(np.int64, st.tuples(st.integers(1, 4), st.integers(1, 6)), elements=st.integers(0, 10**6)),
    st.data(),
)
def test_evaluate_is_additive_over_disjoint_plans(costs, data):
    shape = costs.shape
    split = data.draw(hnp.arrays(np.int8, shape, elements=st.integers(0, 2)))
    one = StrategyModel.from_costs(costs, split == 1)
    two = StrategyModel.from_costs(costs, split == 2)
    union = StrategyModel.from_costs(costs, split > 0)
    assert evaluate_plan(union) == evaluate_plan(one) + evaluate_plan(two)


def test_per_period_costs():
    mdl = StrategyModel.from_costs(COSTS, [[1, 0], [0, 1]])

    def incentives_from_7th(t, m):
        return m if t < 6 else StrategyModel.from_costs(m.costs + 1.0, m.assign)

    costs = plan_cost_by_period(mdl, 8, incentives_from_7th)
    assert costs == [5.0] * 6 + [7.0] * 2


def test_load_model():
    text = "strategy,process,cost,assigned\nproduct,procurement,10,1\nproduct,delivery,4,0\ncorporate,procurement,3,0\ncorporate,delivery,2,1\n"
    mdl, rule = load_model(text, '{"budget": 20, "rule": "each_process_at_least_one"}')
    assert mdl.strategies == ("product", "corporate")
    assert mdl.processes == ("procurement", "delivery")
    assert mdl.costs.tolist() == [[10.0, 4.0], [3.0, 2.0]]
    assert evaluate_plan(mdl) == 12.0
    assert mdl.budget == 20
    assert rule is CoverageRule.AT_LEAST_ONE
    with pytest.raises(ModelError):
        load_model("strategy,process\n")
    with pytest.raises(ModelError):
        load_model("strategy,process,cost\na,b,1\na,b,2\n")
