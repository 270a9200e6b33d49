"""Monotone submodular set functions over question subsets.

Three built-in kinds:

* ``entropy`` -- joint entropy of the attributes covered by the answered
  questions.  Attributes are modeled as mutually independent, so the joint
  entropy is the sum of per-attribute entropies (natural log) over the union
  of covered attributes.
* ``modular`` -- sum of per-question values (``Question.weight``); the unit
  default gives g(S) = |S|.
* ``mnl`` -- multinomial-logit expected revenue
  r(S) = sum_q revenue_q * w_q / (1 + W(S)).  Monotone submodular exactly
  when all revenues are equal; flagged at construction otherwise.

A fourth kind accepts an arbitrary user callback for experimentation.

Every utility evaluates subsets given either as iterables of question ids or
as bitmasks, and can tabulate itself over all 2^n subsets (used heavily by
the evaluators and solvers for speed).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .model import Instance

# Tabulating beyond this many questions would cost > 2^22 floats.
TABLE_LIMIT = 22

SUBMODULAR_TOL = 1e-9


def entropy(dist: Iterable[float]) -> float:
    """Shannon entropy in natural log units; zero entries contribute 0."""
    h = 0.0
    for p in dist:
        if p > 0.0:
            h -= p * math.log(p)
    return h


def ids_to_mask(ids: Iterable[int]) -> int:
    mask = 0
    for i in ids:
        mask |= 1 << i
    return mask


def mask_to_ids(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class UtilityFunction:
    """Base class: a set function g with g(empty) = 0."""

    kind = "base"

    def __init__(self, n: int):
        self.n = n
        self._table: Optional[np.ndarray] = None

    # Subclasses implement evaluation on a bitmask.
    def mask_value(self, mask: int) -> float:
        raise NotImplementedError

    def value(self, ids: Iterable[int]) -> float:
        return self.mask_value(ids_to_mask(ids))

    def __call__(self, ids: Iterable[int]) -> float:
        return self.value(ids)

    @property
    def monotone_submodular_safe(self) -> bool:
        return True

    def table(self) -> Optional[np.ndarray]:
        """Values over all 2^n subsets, indexed by bitmask; None if n too big."""
        if self.n > TABLE_LIMIT:
            return None
        if self._table is None:
            self._table = self._build_table()
        return self._table

    def _build_table(self) -> np.ndarray:
        t = np.empty(1 << self.n)
        for mask in range(1 << self.n):
            t[mask] = self.mask_value(mask)
        return t


def _modular_table(n: int, values: np.ndarray) -> np.ndarray:
    t = np.zeros(1 << n)
    for j in range(n):
        bit = 1 << j
        half = t.reshape(-1, 2 * bit)[:, bit:]
        half += values[j]
    return t


class EntropyCoverage(UtilityFunction):
    """Entropy of the union of covered attributes (independent attributes)."""

    kind = "entropy"

    def __init__(self, n: int, question_attrs: list[frozenset[int]],
                 attr_entropy: dict[int, float]):
        super().__init__(n)
        self.attr_entropy = dict(attr_entropy)
        # Dense attribute indexing for bitmask arithmetic.
        self._attr_index = {aid: i for i, aid in enumerate(sorted(attr_entropy))}
        self._h = np.array([attr_entropy[a] for a in sorted(attr_entropy)])
        self._q_attr_mask = []
        for attrs in question_attrs:
            m = 0
            for aid in attrs:
                if aid not in self._attr_index:
                    raise KeyError(f"question covers unknown attribute {aid}")
                m |= 1 << self._attr_index[aid]
            self._q_attr_mask.append(m)

    def mask_value(self, mask: int) -> float:
        am = 0
        q = 0
        while mask:
            if mask & 1:
                am |= self._q_attr_mask[q]
            mask >>= 1
            q += 1
        h = 0.0
        a = 0
        while am:
            if am & 1:
                h += self._h[a]
            am >>= 1
            a += 1
        return float(h)

    def _build_table(self) -> np.ndarray:
        # Union of attribute masks via a one-bit-at-a-time sweep, then a
        # weighted popcount over attribute entropies.
        n = self.n
        am = np.zeros(1 << n, dtype=np.int64)
        for j in range(n):
            bit = 1 << j
            view = am.reshape(-1, 2 * bit)
            view[:, bit:] = view[:, :bit] | self._q_attr_mask[j]
        t = np.zeros(1 << n)
        for a, h in enumerate(self._h):
            t += h * ((am >> a) & 1)
        return t


class ModularUtility(UtilityFunction):
    kind = "modular"

    def __init__(self, n: int, values: Iterable[float]):
        super().__init__(n)
        self.values = np.asarray(list(values), dtype=float)

    def mask_value(self, mask: int) -> float:
        v = 0.0
        q = 0
        while mask:
            if mask & 1:
                v += self.values[q]
            mask >>= 1
            q += 1
        return float(v)

    def _build_table(self) -> np.ndarray:
        return _modular_table(self.n, self.values)


class MnlRevenue(UtilityFunction):
    kind = "mnl"

    def __init__(self, n: int, weights: Iterable[float], revenues: Iterable[float]):
        super().__init__(n)
        self.weights = np.asarray(list(weights), dtype=float)
        self.revenues = np.asarray(list(revenues), dtype=float)
        if np.any(self.weights < 0):
            raise ValueError("negative MNL weight")
        if np.any(self.revenues < 0):
            raise ValueError("negative MNL revenue")

    @property
    def monotone_submodular_safe(self) -> bool:
        if len(self.revenues) == 0:
            return True
        return bool(np.all(np.abs(self.revenues - self.revenues[0]) < 1e-12))

    def mask_value(self, mask: int) -> float:
        w = 0.0
        gw = 0.0
        q = 0
        while mask:
            if mask & 1:
                w += self.weights[q]
                gw += self.revenues[q] * self.weights[q]
            mask >>= 1
            q += 1
        return gw / (1.0 + w)

    def _build_table(self) -> np.ndarray:
        w = _modular_table(self.n, self.weights)
        gw = _modular_table(self.n, self.revenues * self.weights)
        return gw / (1.0 + w)


class CallbackUtility(UtilityFunction):
    """Hook for a user-supplied g, e.g. joint entropy over correlated attributes."""

    kind = "callback"

    def __init__(self, n: int, fn: Callable[[frozenset[int]], float],
                 submodular_safe: bool = True):
        super().__init__(n)
        self.fn = fn
        self._safe = submodular_safe

    @property
    def monotone_submodular_safe(self) -> bool:
        return self._safe

    def mask_value(self, mask: int) -> float:
        return float(self.fn(frozenset(mask_to_ids(mask))))


def build_utility(inst: Instance, kind: Optional[str | Callable] = None) -> UtilityFunction:
    """Construct the utility named by the instance (or an explicit override)."""
    kind = kind if kind is not None else inst.utility_kind
    if callable(kind):
        return CallbackUtility(inst.n, kind)
    if kind == "entropy":
        amap = inst.attribute_map()
        return EntropyCoverage(
            inst.n,
            [q.attributes for q in inst.questions],
            {aid: entropy(dist) for aid, dist in amap.items()},
        )
    if kind == "modular":
        return ModularUtility(inst.n, [q.weight for q in inst.questions])
    if kind == "mnl":
        u = MnlRevenue(inst.n, [q.weight for q in inst.questions],
                       [q.revenue for q in inst.questions])
        if not u.monotone_submodular_safe:
            warnings.warn("MNL revenues are unequal: utility may not be monotone "
                          "submodular; solver guarantees are void", stacklevel=2)
        return u
    raise ValueError(f"unknown utility kind {kind!r}")


# ---------------------------------------------------------------------------
# Convenience operations

def eval_entropy(S: Iterable[int], inst: Instance) -> float:
    return build_utility(inst, "entropy").value(S)


def eval_modular(S: Iterable[int], inst: Instance) -> float:
    return build_utility(inst, "modular").value(S)


def eval_mnl_revenue(S: Iterable[int], inst: Instance) -> float:
    return build_utility(inst, "mnl").value(S)


# ---------------------------------------------------------------------------
# Monotonicity / submodularity verification

@dataclass
class SubmodularityReport:
    monotone: bool
    submodular: bool
    monotone_witnesses: list[tuple]
    submodular_witnesses: list[tuple]
    exhaustive: bool

    @property
    def ok(self) -> bool:
        return self.monotone and self.submodular


def check_monotone_submodular(g, inst: Instance | int, exhaustive_limit: int = 12,
                              samples: int = 2000, seed: int = 0,
                              tol: float = SUBMODULAR_TOL,
                              max_witnesses: int = 10) -> SubmodularityReport:
    """Verify that g is nondecreasing with diminishing marginal returns.

    For ground sets up to ``exhaustive_limit`` every (Y, y) monotonicity pair
    and (Y, a, b) exchange triple is checked; larger ground sets fall back to
    randomized triples (Y1 subset of Y2 plus a fresh element).  Violations
    beyond ``tol`` are returned as witnesses.
    """
    n = inst.n if isinstance(inst, Instance) else int(inst)
    if isinstance(g, UtilityFunction):
        fn = lambda s: g.value(s)
    else:
        fn = lambda s: float(g(frozenset(s)))

    mono_w: list[tuple] = []
    sub_w: list[tuple] = []

    if n <= exhaustive_limit:
        values = {}
        universe = list(range(n))
        for r in range(n + 1):
            for comb in itertools.combinations(universe, r):
                values[frozenset(comb)] = fn(comb)
        for Y, vy in values.items():
            rest = [x for x in universe if x not in Y]
            for y in rest:
                if values[Y | {y}] < vy - tol and len(mono_w) < max_witnesses:
                    mono_w.append((tuple(sorted(Y)), y))
            for a, b in itertools.combinations(rest, 2):
                ga = values[Y | {a}] - vy
                gab = values[Y | {a, b}] - values[Y | {b}]
                if gab > ga + tol and len(sub_w) < max_witnesses:
                    sub_w.append((tuple(sorted(Y)), a, b))
                gb = values[Y | {b}] - vy
                gba = values[Y | {a, b}] - values[Y | {a}]
                if gba > gb + tol and len(sub_w) < max_witnesses:
                    sub_w.append((tuple(sorted(Y)), b, a))
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            members = rng.random(n) < rng.random()
            y2 = {int(i) for i in np.nonzero(members)[0]}
            outside = [i for i in range(n) if i not in y2]
            if not outside:
                continue
            y = int(rng.choice(outside))
            keep = rng.random(len(y2)) < rng.random()
            y1 = {v for v, k in zip(sorted(y2), keep) if k}
            g1, g2 = fn(y1), fn(y2)
            g1y, g2y = fn(y1 | {y}), fn(y2 | {y})
            if g2y < g2 - tol and len(mono_w) < max_witnesses:
                mono_w.append((tuple(sorted(y2)), y))
            if (g2y - g2) > (g1y - g1) + tol and len(sub_w) < max_witnesses:
                sub_w.append((tuple(sorted(y1)), tuple(sorted(y2)), y))
        exhaustive = False

    return SubmodularityReport(
        monotone=not mono_w,
        submodular=not sub_w,
        monotone_witnesses=mono_w,
        submodular_witnesses=sub_w,
        exhaustive=exhaustive,
    )
