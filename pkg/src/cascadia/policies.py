"""Question selection and sequencing policies.

The main family fixes a reachability floor rho, solves an inner constrained
submodular problem for every choice of trailing question (and, in the
slot-decay variants, every choice of last slot t), and emits the best inner
solution followed by its trailing question:

* ``alg1_no_pna``      -- no-PNA model; objective u; knapsack on -log(p+ c+).
* ``alg2_general``     -- general model; objective v; knapsack on -log(c_q).
* ``alg3_decay_no_pna``-- slot decay, no PNA; extra outer loop over t.
* ``alg4_decay_pna``   -- slot decay + PNA via per-slot virtual copies.
* ``alg5_pna_decision``-- chooses per question whether to offer the skip
                          option, via with/without version pairs.
* ``alg6_scrolling``   -- position-dependent answer rates, no cascade.

Baselines: seeded ``baseline_random``, ``baseline_max_ent`` (exact best
subset, random order), and ``exact_optimal`` (exact maximizer over ordered
sequences).

Selected questions ahead of the trailing one are emitted highest marginal
utility first (ties toward the lowest id): order does not affect the inner
objective or the floor guarantee, and front-loading value is always at least
as good under reachability decay.  All policies are deterministic given
(instance, spec); outer loops break ties toward the lowest question id, then
the lowest slot.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .model import (Instance, Sequence, agg_continuation, kappa_answer_rate,
                    model_variant, zero_pna)
from .utility import UtilityFunction, build_utility, ids_to_mask
from .evaluator import (BernoulliPanel, ComputeCapError, EvalReport,
                        EXACT_SLOT_CAP, IndependentInclusionTable, eval_exact,
                        eval_monte_carlo, expected_utility_independent,
                        V_PANEL_SIZE)
from .solvers import (ConstraintSet, greedy_knapsack, greedy_matroid_knapsack,
                      greedy_partition)

POLICY_KINDS = ("alg1_no_pna", "alg2_general", "alg3_decay_no_pna",
                "alg4_decay_pna", "alg5_pna_decision", "alg6_scrolling",
                "random", "max_ent", "exact_optimal")

# Reachability floors tried when a policy spec asks for a sweep.  Any floor
# is admissible for the guarantee; the best one is instance-dependent, so the
# sweep keeps the best output by exact utility.  Small floors let the sweep
# reach full-length sequences when continuation probabilities are low.
RHO_SWEEP_DEFAULT = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05,
                     0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

DEFAULT_COMPUTE_CAP = 1e9

# Below this answered-given-continued probability the optimal-sequence DP
# recovers conditional expectations from a shifted table instead of the
# rearranged identity, which would cancel catastrophically.
_ALPHA_FORMULA_MIN = 1e-6


@dataclass(frozen=True)
class InnerConfig:
    """Configuration of the inner submodular solver."""

    enum_depth: int = 1
    local_search: bool = True
    v_mode: str = "exact"  # "exact" or "sampled"
    v_samples: int = V_PANEL_SIZE
    v_seed: int = 0


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    rho: float = 0.5
    rho_sweep: Optional[tuple[float, ...]] = None
    inner: InnerConfig = InnerConfig()
    seed: int = 0
    kappa: Optional[float] = None
    zero_pna: bool = False
    compute_cap: float = DEFAULT_COMPUTE_CAP


@dataclass
class PolicyOutput:
    policy: str
    sequence: Sequence
    surrogate_value: float
    per_question_pna: Optional[dict[int, bool]] = None
    diagnostics: dict = field(default_factory=dict)


def _check_rho(rho: float):
    if not (0.0 < rho <= 1.0):
        raise ValueError(f"rho={rho} outside (0, 1]")


def _neg_log(x: float) -> float:
    return math.inf if x <= 0.0 else -math.log(x)


def order_by_marginal(S: Iterable[int], utility: UtilityFunction) -> list[int]:
    """Greedy output order: highest marginal utility first, ties lowest id."""
    remaining = sorted(S)
    out: list[int] = []
    mask = 0
    while remaining:
        base = utility.mask_value(mask)
        best, best_gain = None, None
        for x in remaining:
            gain = utility.mask_value(mask | (1 << x)) - base
            if best is None or gain > best_gain:
                best, best_gain = x, gain
        out.append(best)
        mask |= 1 << best
        remaining.remove(best)
    return out


# ---------------------------------------------------------------------------
# Inner objectives

def _u_objective(inst: Instance, utility: UtilityFunction, q: int, lam: float = 1.0):
    """u(q, .) as a set function of S, table-backed when possible."""
    p = lam * inst.question(q).p_answer
    bq = 1 << q
    gt = utility.table()
    if gt is not None:
        def fn(S: frozenset) -> float:
            m = 0
            for x in S:
                m |= 1 << x
            return p * gt[m | bq] + (1.0 - p) * gt[m]
    else:
        def fn(S: frozenset) -> float:
            m = ids_to_mask(S)
            return p * utility.mask_value(m | bq) + (1.0 - p) * utility.mask_value(m)
    return fn


class _VFactory:
    """v(q, .) objectives sharing one inclusion table or sampling panel."""

    def __init__(self, inst: Instance, utility: UtilityFunction, inner: InnerConfig):
        self.inst = inst
        self.utility = utility
        self.inner = inner
        self.panel = None
        self.table = None
        if inner.v_mode == "sampled":
            self.panel = BernoulliPanel(seed=inner.v_seed, samples=inner.v_samples)
        elif utility.table() is not None:
            probs = [q.p_answer for q in inst.questions]
            self.table = IndependentInclusionTable(probs, utility)

    def objective(self, q: int):
        bq = 1 << q
        if self.table is not None:
            values = self.table.values
            def fn(S: frozenset) -> float:
                m = 0
                for x in S:
                    m |= 1 << x
                return float(values[m | bq])
            return fn
        inst, utility, panel = self.inst, self.utility, self.panel
        def fn(S: frozenset) -> float:
            probs = {x: inst.question(x).p_answer for x in S}
            probs[q] = inst.question(q).p_answer
            return expected_utility_independent(probs, utility, panel=panel)
        return fn


# ---------------------------------------------------------------------------
# The reachability-floor policy family

def _outer_enumeration(inst: Instance, rho: float, inner: InnerConfig,
                       weights: dict[int, float], make_objective) -> tuple[int, frozenset, float, int]:
    """Best (q', S') over all trailing-question choices; ties to lowest q."""
    b_eff = inst.effective_budget
    cons_budget = _neg_log(rho)
    best = None
    evaluations = 0
    for q in range(inst.n):
        cons = ConstraintSet(log_budget=cons_budget, item_weights=weights,
                             cardinality=b_eff - 1, excluded=frozenset({q}))
        res = greedy_knapsack(make_objective(q), range(inst.n), cons,
                              enum_depth=inner.enum_depth)
        evaluations += res.evaluations
        if best is None or res.objective > best[2]:
            best = (q, res.items, res.objective)
    q, items, val = best
    return q, items, val, evaluations


def alg1_no_pna(inst: Instance, rho: float = 0.5, inner: InnerConfig = InnerConfig(),
                utility: Optional[UtilityFunction] = None,
                zero_pna_opt: bool = False) -> PolicyOutput:
    """Selection and sequencing when the skip option is absent.

    Every question's skip probability must be zero; pass ``zero_pna_opt`` to
    project the instance onto the no-PNA model instead of erroring.
    """
    _check_rho(rho)
    if any(q.p_pna > 0 for q in inst.questions):
        if not zero_pna_opt:
            raise ValueError("instance has nonzero p_pna; pass zero_pna_opt to project")
        inst = zero_pna(inst)
    utility = utility or build_utility(inst)
    weights = {l: _neg_log(q.p_answer * q.c_answer) for l, q in enumerate(inst.questions)}
    make = lambda q: _u_objective(inst, utility, q)
    qp, items, val, evals = _outer_enumeration(inst, rho, inner, weights, make)
    seq = Sequence(tuple(order_by_marginal(items, utility)) + (qp,))
    return PolicyOutput(policy="alg1_no_pna", sequence=seq, surrogate_value=val,
                        diagnostics={"q_prime": qp, "s_size": len(items),
                                     "rho": rho, "evaluations": evals})


def alg2_general(inst: Instance, rho: float = 0.5, inner: InnerConfig = InnerConfig(),
                 utility: Optional[UtilityFunction] = None) -> PolicyOutput:
    """The general selection-and-sequencing policy (with skip option)."""
    _check_rho(rho)
    utility = utility or build_utility(inst)
    weights = {l: _neg_log(agg_continuation(q)) for l, q in enumerate(inst.questions)}
    factory = _VFactory(inst, utility, inner)
    qp, items, val, evals = _outer_enumeration(inst, rho, inner, weights, factory.objective)
    seq = Sequence(tuple(order_by_marginal(items, utility)) + (qp,))
    return PolicyOutput(policy="alg2_general", sequence=seq, surrogate_value=val,
                        diagnostics={"q_prime": qp, "s_size": len(items),
                                     "rho": rho, "evaluations": evals})


def alg3_decay_no_pna(inst: Instance, rho: float = 0.5, inner: InnerConfig = InnerConfig(),
                      utility: Optional[UtilityFunction] = None,
                      zero_pna_opt: bool = False) -> PolicyOutput:
    """No-PNA selection under slot-dependent decay of the answer rate.

    Adds an outer loop over the last occupied slot t; the inner knapsack
    budget shrinks by the accumulated decay log Lambda_t.
    """
    _check_rho(rho)
    if inst.slot_decay is None:
        raise ValueError("alg3 requires slot_decay")
    if any(q.p_pna > 0 for q in inst.questions):
        if not zero_pna_opt:
            raise ValueError("instance has nonzero p_pna; pass zero_pna_opt to project")
        inst = zero_pna(inst)
    utility = utility or build_utility(inst)
    b_eff = inst.effective_budget
    weights = {l: _neg_log(q.p_answer * q.c_answer) for l, q in enumerate(inst.questions)}
    log_lambda = 0.0
    best = None  # (value, q, t, items)
    evals = 0
    for t in range(1, b_eff + 1):
        log_lambda += math.log(inst.slot_decay[t - 1])
        budget = _neg_log(rho) + log_lambda
        if budget < -1e-9:
            continue  # even the empty inner set cannot reach slot t
        lam_t = inst.slot_decay[t - 1]
        for q in range(inst.n):
            cons = ConstraintSet(log_budget=budget, item_weights=weights,
                                 cardinality=t - 1, excluded=frozenset({q}))
            res = greedy_knapsack(_u_objective(inst, utility, q, lam=lam_t),
                                  range(inst.n), cons, enum_depth=inner.enum_depth)
            evals += res.evaluations
            if (best is None or res.objective > best[0]
                    or (res.objective == best[0] and (q, t) < (best[1], best[2]))):
                best = (res.objective, q, t, res.items)
    val, qp, tp, items = best
    seq = Sequence(tuple(order_by_marginal(items, utility)) + (qp,))
    return PolicyOutput(policy="alg3_decay_no_pna", sequence=seq, surrogate_value=val,
                        diagnostics={"q_prime": qp, "t_prime": tp,
                                     "s_size": len(items), "rho": rho,
                                     "evaluations": evals})


def _virtual_probs(inst: Instance, sv: Iterable[tuple[int, int]],
                   trailing: Optional[tuple[int, int]] = None) -> dict[int, float]:
    """Inclusion probabilities induced by virtual copies: each question enters
    at its lowest selected slot's decayed answer rate."""
    decay = inst.slot_decay
    best_slot: dict[int, int] = {}
    for l, i in sv:
        if l not in best_slot or i < best_slot[l]:
            best_slot[l] = i
    if trailing is not None:
        l, i = trailing
        if l not in best_slot or i < best_slot[l]:
            best_slot[l] = i
    return {l: decay[i - 1] * inst.question(l).p_answer for l, i in best_slot.items()}


def alg4_decay_pna(inst: Instance, rho: float = 0.5, inner: InnerConfig = InnerConfig(),
                   utility: Optional[UtilityFunction] = None) -> PolicyOutput:
    """General-model selection under slot decay, via per-slot virtual copies.

    Selecting copy (l, i) places question l at slot i; feasibility keeps one
    copy per slot, and the expectation counts each question at its earliest
    selected slot.  Redundant later copies and slot gaps are removed from the
    final sequence (compacting forward never loses utility).
    """
    _check_rho(rho)
    if inst.slot_decay is None:
        raise ValueError("alg4 requires slot_decay")
    utility = utility or build_utility(inst)
    b_eff = inst.effective_budget
    panel = None
    if inner.v_mode == "sampled":
        panel = BernoulliPanel(seed=inner.v_seed, samples=inner.v_samples)

    weights = {}
    classes = {}
    for l, q in enumerate(inst.questions):
        for i in range(1, b_eff + 1):
            c_li = inst.slot_decay[i - 1] * q.p_answer * q.c_answer + q.p_pna * q.c_pna
            weights[(l, i)] = _neg_log(c_li)
            classes[(l, i)] = i

    best = None  # (value, q, t, items)
    evals = 0
    for t in range(1, b_eff + 1):
        ground = [(l, i) for l in range(inst.n) for i in range(1, t)]
        for q in range(inst.n):
            excl = frozenset((q, i) for i in range(1, b_eff + 1))
            cons = ConstraintSet(log_budget=_neg_log(rho), item_weights=weights,
                                 cardinality=t - 1, partition_classes=classes,
                                 excluded=excl)
            def objective(sv: frozenset, _t=t, _q=q) -> float:
                probs = _virtual_probs(inst, sv, trailing=(_q, _t))
                return expected_utility_independent(probs, utility, panel=panel)
            res = greedy_matroid_knapsack(objective, ground, cons,
                                          local_search=inner.local_search)
            evals += res.evaluations
            if (best is None or res.objective > best[0]
                    or (res.objective == best[0] and (q, t) < (best[1], best[2]))):
                best = (res.objective, q, t, res.items)
    val, qp, tp, items = best

    # Redundancy removal: keep each question's earliest copy (largest decayed
    # answer rate); then compact slots forward, preserving order, q' last.
    earliest: dict[int, int] = {}
    for l, i in items:
        if l not in earliest or i < earliest[l]:
            earliest[l] = i
    ordered = [l for l, _ in sorted(earliest.items(), key=lambda kv: (kv[1], kv[0]))]
    seq = Sequence(tuple(ordered) + (qp,))
    return PolicyOutput(policy="alg4_decay_pna", sequence=seq, surrogate_value=val,
                        diagnostics={"q_prime": qp, "t_prime": tp,
                                     "s_size": len(items), "rho": rho,
                                     "evaluations": evals})


def apply_pna_choices(inst: Instance, choices: dict[int, bool], kappa: float) -> Instance:
    """Instance realizing per-question skip-option decisions.

    Questions mapped to False lose the skip option: p_pna becomes 0 and the
    answer rate takes the kappa transform.
    """
    qs = []
    for q in inst.questions:
        if choices.get(q.id, True):
            qs.append(q)
        else:
            qs.append(replace(q, p_answer=kappa_answer_rate(q.p_answer, kappa), p_pna=0.0))
    return replace(inst, questions=tuple(qs))


def alg5_pna_decision(inst: Instance, rho: float = 0.5, inner: InnerConfig = InnerConfig(),
                      kappa: Optional[float] = None,
                      utility: Optional[UtilityFunction] = None) -> PolicyOutput:
    """Joint selection, sequencing, and skip-option decision per question.

    The ground set doubles into with/without versions of each question; a
    partition constraint keeps at most one version, and the chosen version's
    answer rate drives both the knapsack weight and the inclusion expectation.
    """
    _check_rho(rho)
    if kappa is None:
        raise ValueError("alg5 requires kappa for the without-skip answer rate")
    utility = utility or build_utility(inst)
    b_eff = inst.effective_budget
    panel = None
    if inner.v_mode == "sampled":
        panel = BernoulliPanel(seed=inner.v_seed, samples=inner.v_samples)

    # Version items: (qid, 0) keeps the skip option, (qid, 1) removes it.
    rate = {}
    weights = {}
    classes = {}
    for l, q in enumerate(inst.questions):
        rate[(l, 0)] = q.p_answer
        weights[(l, 0)] = _neg_log(agg_continuation(q))
        rate[(l, 1)] = kappa_answer_rate(q.p_answer, kappa)
        weights[(l, 1)] = _neg_log(rate[(l, 1)] * q.c_answer)
        classes[(l, 0)] = classes[(l, 1)] = l
    ground = sorted(rate)

    best = None  # (value, item, members)
    evals = 0
    for a in ground:
        excl = frozenset({(a[0], 0), (a[0], 1)})
        cons = ConstraintSet(log_budget=_neg_log(rho), item_weights=weights,
                             cardinality=b_eff - 1, partition_classes=classes,
                             excluded=excl)
        def objective(sv: frozenset, _a=a) -> float:
            probs = {l: rate[(l, v)] for l, v in sv}
            probs[_a[0]] = rate[_a]
            return expected_utility_independent(probs, utility, panel=panel)
        res = greedy_matroid_knapsack(objective, ground, cons,
                                      local_search=inner.local_search)
        evals += res.evaluations
        if best is None or res.objective > best[0] or (res.objective == best[0] and a < best[1]):
            best = (res.objective, a, res.items)
    val, ap, items = best

    choices = {l: (v == 0) for l, v in items}
    choices[ap[0]] = (ap[1] == 0)
    ordered = order_by_marginal([l for l, _ in items], utility)
    seq = Sequence(tuple(ordered) + (ap[0],))
    return PolicyOutput(policy="alg5_pna_decision", sequence=seq, surrogate_value=val,
                        per_question_pna=choices,
                        diagnostics={"q_prime": ap[0], "s_size": len(items),
                                     "rho": rho, "kappa": kappa, "evaluations": evals})


def alg6_scrolling(inst: Instance, utility: Optional[UtilityFunction] = None) -> PolicyOutput:
    """Greedy question-to-slot assignment for the scrolling design.

    No cascade: each question is answered independently at its slot's rate;
    the expectation counts each question at its best selected copy.
    """
    if inst.position_rates is None:
        raise ValueError("alg6 requires position_rates")
    utility = utility or build_utility(inst)
    b_eff = inst.effective_budget
    rates = inst.position_rates

    ground = [(l, i) for l in range(inst.n) for i in range(1, b_eff + 1)]
    classes = {(l, i): i for l, i in ground}

    def objective(sv: frozenset) -> float:
        probs: dict[int, float] = {}
        for l, i in sv:
            r = rates[l][i - 1]
            if r > probs.get(l, -1.0):
                probs[l] = r
        return expected_utility_independent(probs, utility)

    res = greedy_partition(objective, ground, classes)

    # Redundancy removal: keep each question's max-rate copy (ties: earliest).
    keep: dict[int, tuple[float, int]] = {}
    for l, i in res.items:
        cand = (-rates[l][i - 1], i)
        if l not in keep or cand < keep[l]:
            keep[l] = cand
    assignment = {l: slot for l, (_, slot) in keep.items()}
    ordered = [l for l, _ in sorted(assignment.items(), key=lambda kv: (kv[1], kv[0]))]
    return PolicyOutput(policy="alg6_scrolling", sequence=Sequence(tuple(ordered)),
                        surrogate_value=res.objective,
                        diagnostics={"assignment": assignment,
                                     "evaluations": res.evaluations})


# ---------------------------------------------------------------------------
# Baselines

def baseline_random(inst: Instance, seed: int = 0) -> PolicyOutput:
    """Uniform random subset of budget size, in uniform random order."""
    rng = np.random.default_rng(seed)
    slots = tuple(int(x) for x in rng.permutation(inst.n)[: inst.effective_budget])
    return PolicyOutput(policy="random", sequence=Sequence(slots),
                        surrogate_value=0.0, diagnostics={"seed": seed})


def baseline_max_ent(inst: Instance, seed: int = 0,
                     utility: Optional[UtilityFunction] = None) -> PolicyOutput:
    """Exact maximum-utility subset of budget size, then seeded random order.

    Ignores the scanning behavior entirely: the subset is best only when
    every question is guaranteed an answer.
    """
    if inst.n > 24:
        raise ValueError("max_ent brute force capped at 24 questions")
    utility = utility or build_utility(inst)
    b_eff = inst.effective_budget
    best: Optional[tuple] = None
    best_val = -math.inf
    for comb in itertools.combinations(range(inst.n), b_eff):
        val = utility.mask_value(ids_to_mask(comb))
        if val > best_val:
            best, best_val = comb, val
    rng = np.random.default_rng(seed)
    slots = tuple(int(best[i]) for i in rng.permutation(len(best)))
    return PolicyOutput(policy="max_ent", sequence=Sequence(slots),
                        surrogate_value=best_val, diagnostics={"seed": seed})


# ---------------------------------------------------------------------------
# Exact optimum over ordered sequences

def _alpha_sweep(alpha: list[float], base: np.ndarray) -> np.ndarray:
    """E over independent alpha-inclusions, for every subset, of the given
    per-subset values: one conditional-averaging pass per question."""
    f = base.copy()
    for j, a in enumerate(alpha):
        bit = 1 << j
        pairs = f.reshape(-1, 2 * bit)
        lo = pairs[:, :bit]
        hi = pairs[:, bit:]
        hi *= a
        hi += (1.0 - a) * lo
    return f


def _optimal_dp(inst: Instance, utility: UtilityFunction, b_eff: int) -> tuple[list[int], float]:
    """Exact max over all ordered b-sequences via a prefix-set sweep.

    Conditioned on the customer continuing past a prefix, each prefix
    question was answered independently with alpha = p+c+ / c; the per-slot
    exit contributions and reachability products then depend on the prefix
    only through its set, so the best completion value is a function of the
    prefix set alone.  Equivalent to full enumeration, exponentially cheaper.
    """
    n = inst.n
    gt = utility.table()
    if gt is None:
        raise ValueError("optimal DP needs a tabulated utility")
    c = [agg_continuation(q) for q in inst.questions]
    ans_exit = [q.p_answer * (1.0 - q.c_answer) for q in inst.questions]
    stop = [1.0 - c[l] - ans_exit[l] for l in range(n)]  # skip&exit + direct exit
    alpha = [(inst.questions[l].p_answer * inst.questions[l].c_answer / c[l])
             if c[l] > 0 else 0.0 for l in range(n)]
    F = _alpha_sweep(alpha, gt)
    shifted: dict[int, np.ndarray] = {}

    def eg_plus(pmask: int, l: int) -> float:
        # E[g(B_P + l)] for the alpha-inclusion set B_P.
        a = alpha[l]
        if a >= _ALPHA_FORMULA_MIN:
            return (float(F[pmask | (1 << l)]) - (1.0 - a) * float(F[pmask])) / a
        t = shifted.get(l)
        if t is None:
            idx = np.arange(1 << n) | (1 << l)
            t = _alpha_sweep(alpha, gt[idx])
            shifted[l] = t
        return float(t[pmask])

    def completion(pmask: int, l: int, tail: float) -> float:
        return (ans_exit[l] * eg_plus(pmask, l)
                + stop[l] * float(F[pmask])
                + c[l] * tail)

    best_completion: dict[int, float] = {}
    for comb in itertools.combinations(range(n), b_eff):
        m = ids_to_mask(comb)
        best_completion[m] = float(F[m])
    for size in range(b_eff - 1, -1, -1):
        for comb in itertools.combinations(range(n), size):
            pmask = ids_to_mask(comb)
            best = -math.inf
            for l in range(n):
                if pmask >> l & 1:
                    continue
                val = completion(pmask, l, best_completion[pmask | (1 << l)])
                if val > best:
                    best = val
            best_completion[pmask] = best

    # Forward reconstruction, lowest question id among exact ties.
    seq: list[int] = []
    pmask = 0
    for _ in range(b_eff):
        target = best_completion[pmask]
        for l in range(n):
            if pmask >> l & 1:
                continue
            if completion(pmask, l, best_completion[pmask | (1 << l)]) == target:
                seq.append(l)
                pmask |= 1 << l
                break
    return seq, best_completion[0]


def exact_optimal(inst: Instance, variant: str = "basic",
                  compute_cap: float = DEFAULT_COMPUTE_CAP,
                  method: str = "auto",
                  utility: Optional[UtilityFunction] = None) -> PolicyOutput:
    """Exact maximizer over all ordered sequences of length min(b, n).

    Refuses instances whose enumeration-cost estimate P(n, b) * 2^b exceeds
    ``compute_cap``.  Ties break toward the lexicographically smallest
    sequence.  Length exactly min(b, n) suffices: appending never decreases
    the expected utility.
    """
    b_eff = inst.effective_budget
    cost = math.perm(inst.n, b_eff) * (2 ** b_eff)
    if cost > compute_cap:
        raise ComputeCapError(
            f"exact_optimal cost estimate {cost:.3g} exceeds cap {compute_cap:.3g}",
            estimated_cost=cost)
    work = zero_pna(inst) if variant == "no_pna" else inst
    utility = utility or build_utility(work)
    if method == "auto":
        method = "dp" if variant in ("basic", "no_pna") and utility.table() is not None \
            else "enumerate"

    if method == "dp":
        seq, value = _optimal_dp(work, utility, b_eff)
    elif method == "enumerate":
        seq, value = None, -math.inf
        ev_variant = "basic" if variant == "no_pna" else variant
        for perm in itertools.permutations(range(work.n), b_eff):
            got = eval_exact(perm, work, variant=ev_variant, utility=utility).value
            if got > value:
                seq, value = list(perm), got
        if seq is None:
            seq, value = [], 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    return PolicyOutput(policy="exact_optimal", sequence=Sequence(tuple(seq)),
                        surrogate_value=value,
                        diagnostics={"method": method, "cost_estimate": cost,
                                     "variant": variant})


# ---------------------------------------------------------------------------
# Dispatch

def _run_single(inst: Instance, spec: PolicySpec, rho: float,
                utility: Optional[UtilityFunction]) -> PolicyOutput:
    kind = spec.kind
    if kind == "alg1_no_pna":
        return alg1_no_pna(inst, rho, spec.inner, utility, zero_pna_opt=spec.zero_pna)
    if kind == "alg2_general":
        return alg2_general(inst, rho, spec.inner, utility)
    if kind == "alg3_decay_no_pna":
        return alg3_decay_no_pna(inst, rho, spec.inner, utility, zero_pna_opt=spec.zero_pna)
    if kind == "alg4_decay_pna":
        return alg4_decay_pna(inst, rho, spec.inner, utility)
    if kind == "alg5_pna_decision":
        return alg5_pna_decision(inst, rho, spec.inner, kappa=spec.kappa, utility=utility)
    if kind == "alg6_scrolling":
        return alg6_scrolling(inst, utility)
    if kind == "random":
        return baseline_random(inst, seed=spec.seed)
    if kind == "max_ent":
        return baseline_max_ent(inst, seed=spec.seed, utility=utility)
    if kind == "exact_optimal":
        return exact_optimal(inst, variant=model_variant(inst),
                             compute_cap=spec.compute_cap, utility=utility)
    raise ValueError(f"unknown policy kind {kind!r}")


def evaluation_instance(inst: Instance, spec: PolicySpec, out: PolicyOutput) -> Instance:
    """The instance under which a policy's output is scored.

    The no-PNA policies are scored on the no-PNA projection; the skip-option
    decision policy is scored with each question's chosen version applied.
    The utility function is unaffected either way (it never depends on the
    behavior probabilities).
    """
    if spec.kind in ("alg1_no_pna", "alg3_decay_no_pna") and spec.zero_pna:
        return zero_pna(inst)
    if spec.kind == "alg5_pna_decision" and out.per_question_pna is not None:
        return apply_pna_choices(inst, out.per_question_pna, spec.kappa)
    return inst


# Scoring beyond the exact sweep's slot cap falls back to sampling.
SCORE_MC_SAMPLES = 100_000


def _score(seq: Sequence, inst: Instance, variant: str,
           utility: UtilityFunction) -> EvalReport:
    if len(seq) <= EXACT_SLOT_CAP:
        return eval_exact(seq, inst, variant=variant, utility=utility)
    return eval_monte_carlo(seq, inst, variant=variant,
                            samples=SCORE_MC_SAMPLES, rng_seed=0, utility=utility)


def solve(inst: Instance, spec: PolicySpec,
          utility: Optional[UtilityFunction] = None) -> tuple[PolicyOutput, EvalReport]:
    """Run a policy spec, score its output, and return both.

    Scoring is exact up to the evaluator's slot cap and seeded Monte Carlo
    beyond it (the report's method field records which).  With ``rho_sweep``
    the policy runs once per floor value and the output with the highest
    scored utility wins (ties: lowest rho).
    """
    if utility is None:
        utility = build_utility(inst)
    sweepable = spec.kind in ("alg1_no_pna", "alg2_general", "alg3_decay_no_pna",
                              "alg4_decay_pna", "alg5_pna_decision")
    variant = model_variant(inst)
    if spec.rho_sweep and sweepable:
        best = None
        for rho in sorted(spec.rho_sweep):
            out = _run_single(inst, spec, rho, utility)
            scored = _score(out.sequence, evaluation_instance(inst, spec, out),
                            variant, utility)
            if best is None or scored.value > best[1].value:
                out.diagnostics["rho"] = rho
                best = (out, scored)
        return best
    out = _run_single(inst, spec, spec.rho, utility)
    scored = _score(out.sequence, evaluation_instance(inst, spec, out),
                    variant, utility)
    return out, scored
