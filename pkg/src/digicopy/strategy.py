"""Strategy-to-process assignment under a budget.

A plan is an ``m x p`` binary matrix: ``assign[i, j] == 1`` when strategy
``i`` governs business process ``j``; applying it costs ``costs[i, j]``
(thousand currency units). Plan totals use :func:`math.fsum`, so the value
of a plan does not depend on the order its entries are visited.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import InfeasibleError, InstanceTooLargeError, ModelError

BRUTE_FORCE_LIMIT = 10**6
DEFAULT_STRATEGIES = ("product", "corporate", "operational", "management", "resource")


class CoverageRule(str, Enum):
    EXACTLY_ONE = "each_process_exactly_one"
    AT_LEAST_ONE = "each_process_at_least_one"
    FREE = "free"


@dataclass(frozen=True, eq=False)
class StrategyModel:
    strategies: tuple
    processes: tuple
    assign: np.ndarray
    costs: np.ndarray
    budget: float | None = None

    def __post_init__(self):
        assign = np.array(self.assign, dtype=np.int8)
        costs = np.array(self.costs, dtype=np.float64)
        for arr in (assign, costs):
            arr.setflags(write=False)
        object.__setattr__(self, "assign", assign)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "processes", tuple(self.processes))

    @classmethod
    def from_costs(cls, costs, assign=None, budget=None, strategies=None, processes=None) -> "StrategyModel":
        costs = np.asarray(costs, dtype=np.float64)
        if costs.ndim != 2:
            raise ModelError("costs must be an m x p matrix")
        m, p = costs.shape
        if strategies is None:
            strategies = [f"s{i + 1}" for i in range(m)]
        if processes is None:
            processes = [f"p{j + 1}" for j in range(p)]
        if assign is None:
            assign = np.zeros((m, p), dtype=np.int8)
        return cls(tuple(strategies), tuple(processes), assign, costs, budget)

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape

    def with_assign(self, assign) -> "StrategyModel":
        return replace(self, assign=assign)

    def check(self):
        """Raise :class:`ModelError` if any model invariant is violated."""
        if self.assign.shape != self.costs.shape:
            raise ModelError(f"assign shape {self.assign.shape} != costs shape {self.costs.shape}")
        if self.costs.ndim != 2 or 0 in self.costs.shape:
            raise ModelError("costs must be a non-empty m x p matrix")
        if len(self.strategies) != self.costs.shape[0] or len(self.processes) != self.costs.shape[1]:
            raise ModelError("label counts do not match the cost matrix")
        if not np.isin(self.assign, (0, 1)).all():
            raise ModelError("assign entries must be 0 or 1")
        if not np.isfinite(self.costs).all() or (self.costs < 0).any():
            raise ModelError("costs must be finite and >= 0")
        if self.budget is not None and not (self.budget >= 0):
            raise ModelError("budget must be >= 0")


def evaluate_plan(mdl: StrategyModel) -> float:
    """Total cost ``V`` of the assigned (strategy, process) pairs."""
    mdl.check()
    return math.fsum(mdl.costs[mdl.assign == 1].tolist())


@dataclass(frozen=True)
class BudgetReport:
    feasible: bool
    total: float
    budget: float
    slack: float
    plan_cost: float
    base_cost: float


def check_budget(mdl: StrategyModel, base_cost: float = 0.0, budget: float | None = None) -> BudgetReport:
    """Resource constraint: base cost plus plan overhead must not exceed the budget."""
    if base_cost < 0:
        raise ModelError("base_cost must be >= 0")
    budget = mdl.budget if budget is None else budget
    if budget is None:
        raise ModelError("no budget given")
    v = evaluate_plan(mdl)
    total = math.fsum([base_cost, v])
    return BudgetReport(total <= budget, total, budget, budget - total, v, base_cost)


def _coerce_rule(rule) -> CoverageRule:
    return rule if isinstance(rule, CoverageRule) else CoverageRule(rule)


def _fits(costs: np.ndarray, assign: np.ndarray, budget: float | None) -> bool:
    if budget is None:
        return True
    exact = sum((Fraction(c) for c in costs[assign == 1].tolist()), Fraction(0))
    return exact <= Fraction(budget)


def optimize_assignment(costs, rule=CoverageRule.EXACTLY_ONE, budget: float | None = None, **labels) -> StrategyModel:
    """Cheapest plan satisfying the coverage rule.

    Per-process minima suffice for both coverage rules because costs are
    non-negative; ties go to the lowest strategy index. Under the free rule
    the empty plan is the minimum. Raises :class:`InfeasibleError` when even
    the cheapest plan exceeds ``budget``.
    """
    rule = _coerce_rule(rule)
    mdl = StrategyModel.from_costs(costs, budget=budget, **labels)
    mdl.check()
    m, p = mdl.shape
    assign = np.zeros((m, p), dtype=np.int8)
    if rule is not CoverageRule.FREE:
        assign[np.argmin(mdl.costs, axis=0), np.arange(p)] = 1
    plan = mdl.with_assign(assign)
    if not _fits(mdl.costs, assign, budget):
        raise InfeasibleError(evaluate_plan(plan), budget, plan)
    return plan


def _candidate_masks(m: int, rule: CoverageRule) -> list[int]:
    """Per-process choices as strategy bitmasks, preferred order first."""
    if rule is CoverageRule.EXACTLY_ONE:
        return [1 << i for i in range(m)]
    masks = range(0 if rule is CoverageRule.FREE else 1, 1 << m)
    # fewer strategies first, then lower indices
    return sorted(masks, key=lambda s: (bin(s).count("1"), [i for i in range(m) if s >> i & 1]))


def brute_force_assignment(costs, rule=CoverageRule.EXACTLY_ONE, budget: float | None = None, **labels) -> StrategyModel:
    """Exhaustive oracle for :func:`optimize_assignment`.

    Enumerates every plan allowed by the rule. Float sums pre-select near
    minimal plans; those are then ranked by exact rational cost, then by the
    number of assignments, then by enumeration order (lexicographic over
    processes, preferred choice first).
    """
    rule = _coerce_rule(rule)
    mdl = StrategyModel.from_costs(costs, budget=budget, **labels)
    mdl.check()
    m, p = mdl.shape
    masks = _candidate_masks(m, rule)
    count = len(masks) ** p
    if count > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(f"{count} plans exceed the enumeration limit {BRUTE_FORCE_LIMIT}")

    # cost of choosing mask c for process j
    choice_cost = np.array(
        [[math.fsum(mdl.costs[i, j] for i in range(m) if s >> i & 1) for s in masks] for j in range(p)]
    )
    choice_size = np.array([bin(s).count("1") for s in masks])
    grid = np.indices((len(masks),) * p).reshape(p, -1).T  # lexicographic, process 0 most significant
    totals = choice_cost[np.arange(p), grid].sum(axis=1)
    lowest = totals.min()
    near = np.nonzero(totals <= lowest + lowest * 1e-9)[0]

    def exact(idx):
        picks = grid[idx]
        value = Fraction(0)
        for j, c in enumerate(picks):
            for i in range(m):
                if masks[c] >> i & 1:
                    value += Fraction(mdl.costs[i, j])
        return value, int(choice_size[picks].sum()), idx

    best = min(exact(idx) for idx in near)[2]
    assign = np.zeros((m, p), dtype=np.int8)
    for j, c in enumerate(grid[best]):
        for i in range(m):
            if masks[c] >> i & 1:
                assign[i, j] = 1
    plan = mdl.with_assign(assign)
    if not _fits(mdl.costs, assign, budget):
        raise InfeasibleError(evaluate_plan(plan), budget, plan)
    return plan


def plan_cost_by_period(mdl: StrategyModel, periods: int, schedule=None) -> list[float]:
    """Per-period plan cost; ``schedule(t, mdl)`` may return a modified model.

    The model itself is time-invariant; summing this list gives the
    multi-period total.
    """
    out = []
    for t in range(periods):
        m = schedule(t, mdl) if schedule is not None else mdl
        out.append(evaluate_plan(m))
    return out


def load_model(source, config=None) -> tuple[StrategyModel, CoverageRule]:
    """Read the ``strategy,process,cost[,assigned]`` CSV and optional JSON config.

    Labels keep first-appearance order. Missing (strategy, process) pairs get
    cost 0 and are left unassigned.
    """
    text = source.decode("utf-8-sig") if isinstance(source, bytes) else source
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise ModelError("empty strategy model file")
    header = [c.strip() for c in rows[0]]
    if header[:3] != ["strategy", "process", "cost"]:
        raise ModelError("strategy header must be strategy,process,cost[,assigned]")
    has_assigned = len(header) > 3 and header[3] == "assigned"
    strategies: dict[str, int] = {}
    processes: dict[str, int] = {}
    entries = []
    for line, r in enumerate(rows[1:], start=2):
        r = [c.strip() for c in r]
        if len(r) < 3:
            raise ModelError(f"line {line}: expected at least 3 fields")
        s, proc, cost = r[:3]
        try:
            c = float(cost)
        except ValueError:
            raise ModelError(f"line {line}: bad cost {cost!r}") from None
        a = 0
        if has_assigned and len(r) > 3 and r[3]:
            if r[3] not in ("0", "1"):
                raise ModelError(f"line {line}: assigned must be 0 or 1")
            a = int(r[3])
        strategies.setdefault(s, len(strategies))
        processes.setdefault(proc, len(processes))
        entries.append((strategies[s], processes[proc], c, a, line))
    costs = np.zeros((len(strategies), len(processes)))
    assign = np.zeros_like(costs, dtype=np.int8)
    seen = set()
    for i, j, c, a, line in entries:
        if (i, j) in seen:
            raise ModelError(f"line {line}: duplicate (strategy, process) pair")
        seen.add((i, j))
        costs[i, j] = c
        assign[i, j] = a
    budget = None
    rule = CoverageRule.EXACTLY_ONE
    if config:
        cfg = json.loads(config) if isinstance(config, (str, bytes)) else dict(config)
        budget = cfg.get("budget")
        if "rule" in cfg:
            rule = _coerce_rule(cfg["rule"])
    mdl = StrategyModel(tuple(strategies), tuple(processes), assign, costs, budget)
    mdl.check()
    return mdl, rule


def model_to_dict(mdl: StrategyModel) -> dict:
    return {
        "strategies": list(mdl.strategies),
        "processes": list(mdl.processes),
        "assign": mdl.assign.tolist(),
        "costs": mdl.costs.tolist(),
        "budget": mdl.budget,
        "objective": evaluate_plan(mdl),
    }


def all_plans(m: int, p: int, rule=CoverageRule.EXACTLY_ONE):
    """Yield every assignment matrix allowed by ``rule`` (tests and tools)."""
    masks = _candidate_masks(m, _coerce_rule(rule))
    for picks in itertools.product(masks, repeat=p):
        a = np.zeros((m, p), dtype=np.int8)
        for j, s in enumerate(picks):
            for i in range(m):
                if s >> i & 1:
                    a[i, j] = 1
        yield a
