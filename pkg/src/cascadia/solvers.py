"""Constrained monotone-submodular maximizers shared by all policies.

All solvers are deterministic: candidate scans run in sorted item order and
ties break toward the lowest item.  Objectives are plain callables on
frozensets; the policies pass table-backed objectives so a call is an array
lookup.  Feasibility of every returned set is re-checked post hoc.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Optional

# Knapsack feasibility tolerance: weights are -log continuation terms, so
# exact budget boundaries (e.g. two items of cost -log(0.1) against a budget
# of -log(0.01)) land within a few ulp of the budget.
WEIGHT_TOL = 1e-9

LOCAL_SEARCH_TOL = 1e-9
LOCAL_SEARCH_SWAPS_PER_ITEM = 50

Item = Hashable
Objective = Callable[[frozenset], float]


@dataclass(frozen=True)
class ConstraintSet:
    """Knapsack + cardinality + optional partition-matroid feasibility.

    ``log_budget`` bounds the sum of item weights (-log continuation terms;
    items of weight +inf are never eligible).  ``cardinality`` bounds the set
    size.  ``partition_classes`` maps items to classes with capacity one per
    class.  ``excluded`` items are never eligible.
    """

    log_budget: float = math.inf
    item_weights: Optional[Mapping[Item, float]] = None
    cardinality: Optional[int] = None
    partition_classes: Optional[Mapping[Item, Hashable]] = None
    excluded: frozenset = frozenset()

    def weight(self, item: Item) -> float:
        if self.item_weights is None:
            return 0.0
        return self.item_weights.get(item, 0.0)

    def is_feasible(self, items: Iterable[Item]) -> bool:
        items = list(items)
        if self.cardinality is not None and len(items) > self.cardinality:
            return False
        if any(x in self.excluded for x in items):
            return False
        total = 0.0
        for x in items:
            w = self.weight(x)
            if w == math.inf:
                return False
            total += w
        if total > self.log_budget + WEIGHT_TOL:
            return False
        if self.partition_classes is not None:
            seen = set()
            for x in items:
                c = self.partition_classes[x]
                if c in seen:
                    return False
                seen.add(c)
        return True


@dataclass
class SolverResult:
    items: frozenset
    objective: float
    evaluations: int
    method: str

    def __iter__(self):
        return iter(sorted(self.items))


class _Counter:
    __slots__ = ("calls",)

    def __init__(self):
        self.calls = 0

    def wrap(self, objective: Objective) -> Objective:
        def fn(s: frozenset) -> float:
            self.calls += 1
            return objective(s)
        return fn


def _eligible(ground: Iterable[Item], cons: ConstraintSet) -> list[Item]:
    return sorted(x for x in ground
                  if x not in cons.excluded and cons.weight(x) != math.inf)


def _greedy_fill(objective: Objective, pool: list[Item], cons: ConstraintSet,
                 seed: tuple[Item, ...], density: bool,
                 positive_gain_only: bool = False) -> Optional[frozenset]:
    """One greedy completion from a feasible seed; None if the seed is not.

    ``positive_gain_only`` stops once no candidate improves the objective;
    otherwise zero-gain items keep filling up to the constraints (harmless
    for a monotone objective).
    """
    chosen = list(seed)
    if not cons.is_feasible(chosen):
        return None
    weight_sum = sum(cons.weight(x) for x in chosen)
    classes = None
    if cons.partition_classes is not None:
        classes = {cons.partition_classes[x] for x in chosen}
    current = objective(frozenset(chosen))
    remaining = [x for x in pool if x not in seed]
    while remaining and (cons.cardinality is None or len(chosen) < cons.cardinality):
        best = None
        best_key = None
        best_gain = None
        base = frozenset(chosen)
        for x in remaining:
            w = cons.weight(x)
            if weight_sum + w > cons.log_budget + WEIGHT_TOL:
                continue
            if classes is not None and cons.partition_classes[x] in classes:
                continue
            gain = objective(base | {x}) - current
            key = (math.inf if w == 0.0 else gain / w) if density else gain
            if best is None or key > best_key:
                best, best_key, best_gain = x, key, gain
        if best is None or (positive_gain_only and best_gain <= 0.0):
            break
        chosen.append(best)
        weight_sum += cons.weight(best)
        if classes is not None:
            classes.add(cons.partition_classes[best])
        current = objective(frozenset(chosen))
        remaining.remove(best)
    return frozenset(chosen)


def greedy_knapsack(objective: Objective, ground: Iterable[Item],
                    cons: ConstraintSet, enum_depth: int = 0) -> SolverResult:
    """Greedy + density greedy under knapsack/cardinality, with partial
    enumeration: for depth d >= 1 every feasible seed of size <= d starts
    both greedy styles, and the best completed set wins.
    """
    if cons.partition_classes is not None:
        raise ValueError("greedy_knapsack does not handle partition classes")
    counter = _Counter()
    fn = counter.wrap(objective)
    pool = _eligible(ground, cons)

    seeds: list[tuple[Item, ...]] = [()]
    for d in range(1, enum_depth + 1):
        for comb in itertools.combinations(pool, d):
            if cons.is_feasible(comb):
                seeds.append(comb)

    best: Optional[frozenset] = None
    best_val = -math.inf
    for seed in seeds:
        for density in (False, True):
            got = _greedy_fill(fn, pool, cons, seed, density)
            if got is None:
                continue
            val = fn(got)
            if val > best_val:
                best, best_val = got, val
    if best is None:
        best, best_val = frozenset(), fn(frozenset())
    assert cons.is_feasible(best)
    return SolverResult(items=best, objective=best_val,
                        evaluations=counter.calls, method=f"greedy_knapsack(d={enum_depth})")


def greedy_matroid_knapsack(objective: Objective, ground: Iterable[Item],
                            cons: ConstraintSet,
                            local_search: bool = True) -> SolverResult:
    """Max-gain greedy under partition + knapsack + cardinality constraints,
    optionally polished by feasibility-preserving single swaps.

    Practical surrogate for the continuous-greedy route; callers validate the
    surrounding pipeline against the brute-force oracle instead of relying on
    a certified ratio.
    """
    counter = _Counter()
    fn = counter.wrap(objective)
    pool = _eligible(ground, cons)
    chosen = _greedy_fill(fn, pool, cons, (), density=False, positive_gain_only=True)
    assert chosen is not None
    current = fn(chosen)

    if local_search and pool:
        swap_budget = LOCAL_SEARCH_SWAPS_PER_ITEM * len(pool)
        swaps = 0
        improved = True
        while improved and swaps < swap_budget:
            improved = False
            for out in sorted(chosen):
                for inc in pool:
                    if inc in chosen:
                        continue
                    cand = (chosen - {out}) | {inc}
                    if not cons.is_feasible(cand):
                        continue
                    val = fn(cand)
                    if val > current + LOCAL_SEARCH_TOL:
                        chosen, current = cand, val
                        swaps += 1
                        improved = True
                        break
                if improved:
                    break

    assert cons.is_feasible(chosen)
    return SolverResult(items=chosen, objective=current,
                        evaluations=counter.calls, method="greedy_matroid_knapsack")


def greedy_partition(objective: Objective, ground: Iterable[Item],
                     classes: Mapping[Item, Hashable]) -> SolverResult:
    """Plain matroid greedy: repeatedly add the max-gain item subject to one
    item per class, until every class is filled or no item remains.
    """
    counter = _Counter()
    fn = counter.wrap(objective)
    pool = sorted(ground)
    used: set = set()
    chosen: list[Item] = []
    current = fn(frozenset())
    n_classes = len(set(classes[x] for x in pool)) if pool else 0
    while len(chosen) < n_classes:
        best = None
        best_gain = None
        base = frozenset(chosen)
        for x in pool:
            if x in base or classes[x] in used:
                continue
            gain = fn(base | {x}) - current
            if best is None or gain > best_gain:
                best, best_gain = x, gain
        if best is None or best_gain <= 0.0:
            break
        chosen.append(best)
        used.add(classes[best])
        current = fn(frozenset(chosen))
    return SolverResult(items=frozenset(chosen), objective=current,
                        evaluations=counter.calls, method="greedy_partition")


def brute_force_subset(objective: Objective, ground: Iterable[Item],
                       cons: ConstraintSet) -> SolverResult:
    """Exact maximizer by exhaustive feasible-subset enumeration (test oracle).

    Ties break toward the lexicographically smallest sorted item tuple.
    """
    pool = sorted(ground)
    if len(pool) > 24:
        raise ValueError(f"ground set of {len(pool)} items too large for brute force")
    counter = _Counter()
    fn = counter.wrap(objective)
    best: Optional[frozenset] = None
    best_val = -math.inf
    best_key: tuple = ()
    for r in range(len(pool) + 1):
        if cons.cardinality is not None and r > cons.cardinality:
            break
        for comb in itertools.combinations(pool, r):
            if not cons.is_feasible(comb):
                continue
            val = fn(frozenset(comb))
            if best is None or val > best_val or (val == best_val and comb < best_key):
                best, best_val, best_key = frozenset(comb), val, comb
    assert best is not None  # the empty set is always feasible
    return SolverResult(items=best, objective=best_val,
                        evaluations=counter.calls, method="brute_force")
