"""Exact and Monte-Carlo evaluation of sequence utility.

The central quantity is f(Q) = E[g(answered set)] under the cascade scanning
process: at each slot the customer answers and continues, answers and exits,
skips and continues, skips and exits, or exits outright.  ``eval_exact``
computes f by a forward sweep that tracks a sparse probability mass for every
answered subset among still-reading customers; ``eval_monte_carlo`` simulates
the cascade.

Two surrogate objectives used by the solvers are also provided:

* u(q, S) = p+_q g(S+q) + (1-p+_q) g(S)
* v(q, S) = E[g(R(S+q))] where R includes each question independently with
  its answer rate.

``IndependentInclusionTable`` tabulates E[g(R(T))] for every subset T at once
(O(n 2^n)), which turns v-evaluations into array lookups on desk-scale
instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .model import Instance, Sequence
from .utility import UtilityFunction, build_utility, ids_to_mask

VARIANTS = ("basic", "no_pna", "slot_decay", "scrolling")

# Sparse answered-subset state space doubles per slot; past this length the
# exact sweep is no longer desk-scale and callers must sample instead.
EXACT_SLOT_CAP = 22

# v(q, S) in exact mode enumerates inclusion patterns; hard stop above this.
EXACT_PATTERN_CAP = 20

MC_DEFAULT_SAMPLES = 100_000

# Common-random-numbers panel size for sampled v (one panel per solver run).
V_PANEL_SIZE = 5000


@dataclass(frozen=True)
class EvalReport:
    value: float
    method: str
    reachability: tuple[float, ...]
    stderr: Optional[float] = None
    samples: Optional[int] = None


class ComputeCapError(RuntimeError):
    """Raised when an exact computation would exceed its configured cap."""

    def __init__(self, message: str, estimated_cost: float):
        super().__init__(message)
        self.estimated_cost = estimated_cost


def _slot_branches(inst: Instance, qid: int, slot: int, variant: str):
    """(answer&continue, answer&exit, pna&continue, pna&exit) at a 1-indexed slot."""
    q = inst.question(qid)
    lam = inst.decay_at(slot) if variant == "slot_decay" else 1.0
    p_ans = lam * q.p_answer
    p_pna = 0.0 if variant == "no_pna" else q.p_pna
    return (p_ans * q.c_answer, p_ans * (1.0 - q.c_answer),
            p_pna * q.c_pna, p_pna * (1.0 - q.c_pna))


def _require_variant_data(inst: Instance, variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "slot_decay" and inst.slot_decay is None:
        raise ValueError("slot_decay variant requires a decay vector")
    if variant == "scrolling" and inst.position_rates is None:
        raise ValueError("scrolling variant requires position_rates")


def _variant_reachability(seq_ids: list[int], inst: Instance, variant: str) -> tuple[float, ...]:
    if variant == "scrolling":
        # No cascade: report each slot's inclusion probability instead.
        return tuple(inst.position_rates[q][i] for i, q in enumerate(seq_ids))
    out = []
    c = 1.0
    for i, qid in enumerate(seq_ids, start=1):
        out.append(c)
        ac, _, pc, _ = _slot_branches(inst, qid, i, variant)
        c *= ac + pc
    return tuple(out)


def eval_exact(seq: Sequence | Iterable[int], inst: Instance, variant: str = "basic",
               utility: Optional[UtilityFunction] = None) -> EvalReport:
    """Exact f(Q) by forward enumeration over answered subsets.

    The scrolling variant has no cascade; it computes E[g(R)] with each
    question included independently at its position's answer rate.
    """
    _require_variant_data(inst, variant)
    ids = list(seq.slots if isinstance(seq, Sequence) else seq)
    if len(ids) > min(inst.budget, EXACT_SLOT_CAP):
        raise ValueError(f"sequence of length {len(ids)} exceeds the budget "
                         f"({inst.budget}) or the exact sweep cap ({EXACT_SLOT_CAP})")
    utility = utility or build_utility(inst)
    reach = _variant_reachability(ids, inst, variant)

    if variant == "scrolling":
        probs = {q: inst.position_rates[q][i] for i, q in enumerate(ids)}
        value = expected_utility_independent(probs, utility)
        return EvalReport(value=value, method="exact", reachability=reach)

    # mass of still-reading customers per answered bitmask
    reading: dict[int, float] = {0: 1.0}
    terminal: dict[int, float] = {}
    for i, qid in enumerate(ids, start=1):
        ac, ae, pc, pe = _slot_branches(inst, qid, i, variant)
        stop = 1.0 - ac - ae - pc  # pna&exit + direct exit
        bit = 1 << qid
        nxt: dict[int, float] = {}
        for mask, m in reading.items():
            if ae > 0.0:
                terminal[mask | bit] = terminal.get(mask | bit, 0.0) + m * ae
            if stop > 0.0:
                terminal[mask] = terminal.get(mask, 0.0) + m * stop
            if ac > 0.0:
                nxt[mask | bit] = nxt.get(mask | bit, 0.0) + m * ac
            if pc > 0.0:
                nxt[mask] = nxt.get(mask, 0.0) + m * pc
        reading = nxt
        if not reading:
            break
    for mask, m in reading.items():
        terminal[mask] = terminal.get(mask, 0.0) + m

    value = 0.0
    for mask, m in terminal.items():
        if mask:
            value += m * utility.mask_value(mask)
    return EvalReport(value=float(value), method="exact", reachability=reach)


def eval_monte_carlo(seq: Sequence | Iterable[int], inst: Instance,
                     variant: str = "basic", samples: int = MC_DEFAULT_SAMPLES,
                     rng_seed: int = 0,
                     utility: Optional[UtilityFunction] = None) -> EvalReport:
    """Unbiased sample mean of g over simulated cascades, with standard error."""
    _require_variant_data(inst, variant)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    ids = list(seq.slots if isinstance(seq, Sequence) else seq)
    utility = utility or build_utility(inst)
    reach = _variant_reachability(ids, inst, variant)
    rng = np.random.default_rng(rng_seed)

    masks = np.zeros(samples, dtype=np.int64)
    if variant == "scrolling":
        for i, qid in enumerate(ids):
            hit = rng.random(samples) < inst.position_rates[qid][i]
            masks |= hit.astype(np.int64) << qid
    else:
        alive = np.ones(samples, dtype=bool)
        for i, qid in enumerate(ids, start=1):
            ac, ae, pc, pe = _slot_branches(inst, qid, i, variant)
            u = rng.random(samples)
            answered = alive & (u < ac + ae)
            cont = alive & ((u < ac) | ((u >= ac + ae) & (u < ac + ae + pc)))
            masks |= answered.astype(np.int64) << qid
            alive = cont
            if not alive.any():
                break

    values = _mask_values(masks, utility)
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if samples > 1 else 0.0
    return EvalReport(value=mean, method="monte_carlo", reachability=reach,
                      stderr=sd / math.sqrt(samples), samples=samples)


def _mask_values(masks: np.ndarray, utility: UtilityFunction) -> np.ndarray:
    table = utility.table()
    if table is not None:
        return table[masks]
    uniq, inv = np.unique(masks, return_inverse=True)
    vals = np.array([utility.mask_value(int(m)) for m in uniq])
    return vals[inv]


# ---------------------------------------------------------------------------
# Surrogate objectives

def eval_u(q: int, S: Iterable[int], inst: Instance,
           slot_decay_pair: Optional[tuple[int, float]] = None,
           utility: Optional[UtilityFunction] = None) -> float:
    """u(q, S): expected utility if S is surely answered and q is read.

    ``slot_decay_pair`` = (t, lambda_t) scales q's answer rate for the
    slot-decay model.
    """
    S = frozenset(S)
    if q in S:
        raise ValueError(f"question {q} already in S")
    utility = utility or build_utility(inst)
    lam = slot_decay_pair[1] if slot_decay_pair is not None else 1.0
    p = lam * inst.question(q).p_answer
    base = ids_to_mask(S)
    return p * utility.mask_value(base | (1 << q)) + (1.0 - p) * utility.mask_value(base)


def expected_utility_independent(probs: Mapping[int, float],
                                 utility: UtilityFunction,
                                 panel: Optional["BernoulliPanel"] = None,
                                 max_exact: int = EXACT_PATTERN_CAP) -> float:
    """E[g(R)] where R includes question q independently with probs[q].

    Exact mode enumerates inclusion patterns over the uncertain support
    (probabilities strictly between 0 and 1); certain inclusions are folded
    into a base mask.  When a panel is given, the common-random-numbers
    estimate is returned instead.
    """
    if panel is not None:
        return panel.estimate(probs, utility)
    base = 0
    uncertain: list[tuple[int, float]] = []
    for qid, p in probs.items():
        if p >= 1.0:
            base |= 1 << qid
        elif p > 0.0:
            uncertain.append((qid, p))
    if len(uncertain) > max_exact:
        raise ComputeCapError(
            f"{len(uncertain)} uncertain inclusions exceed exact cap {max_exact}",
            estimated_cost=2.0 ** len(uncertain))
    total = 0.0
    k = len(uncertain)
    for pattern in range(1 << k):
        mask = base
        w = 1.0
        for j, (qid, p) in enumerate(uncertain):
            if pattern >> j & 1:
                mask |= 1 << qid
                w *= p
            else:
                w *= 1.0 - p
        total += w * utility.mask_value(mask)
    return total


def eval_v(q: int, S: Iterable[int], inst: Instance, mode: str = "exact",
           panel: Optional["BernoulliPanel"] = None,
           inclusion_probs: Optional[Mapping[int, float]] = None,
           utility: Optional[UtilityFunction] = None) -> float:
    """v(q, S) = E[g(R(S+q))] with independent inclusion at the answer rates.

    ``inclusion_probs`` overrides the per-question rates; virtual-copy callers
    (slot-decayed or position-dependent copies) pass the resolved rates here.
    ``mode="sampled"`` estimates on the given common-random-numbers panel.
    """
    S = frozenset(S)
    if q in S:
        raise ValueError(f"question {q} already in S")
    utility = utility or build_utility(inst)
    members = S | {q}
    if inclusion_probs is not None:
        probs = {qid: float(inclusion_probs[qid]) for qid in members}
    else:
        probs = {qid: inst.question(qid).p_answer for qid in members}
    if mode == "exact":
        return expected_utility_independent(probs, utility)
    if mode == "sampled":
        if panel is None:
            panel = BernoulliPanel()
        return panel.estimate(probs, utility)
    raise ValueError(f"unknown v mode {mode!r}")


class BernoulliPanel:
    """Common random numbers for sampled v-estimates.

    One uniform draw per (question, sample) is fixed by ``(seed, question)``
    and reused across every candidate set and every inclusion probability
    within a solver run, making greedy marginal comparisons noise-consistent.
    """

    def __init__(self, seed: int = 0, samples: int = V_PANEL_SIZE):
        self.seed = seed
        self.samples = samples
        self._uniforms: dict[int, np.ndarray] = {}

    def uniforms(self, qid: int) -> np.ndarray:
        u = self._uniforms.get(qid)
        if u is None:
            rng = np.random.default_rng(np.random.SeedSequence((self.seed, qid)))
            u = rng.random(self.samples)
            self._uniforms[qid] = u
        return u

    def estimate(self, probs: Mapping[int, float], utility: UtilityFunction) -> float:
        masks = np.zeros(self.samples, dtype=np.int64)
        for qid, p in probs.items():
            if p <= 0.0:
                continue
            masks |= (self.uniforms(qid) < p).astype(np.int64) << qid
        return float(_mask_values(masks, utility).mean())


class IndependentInclusionTable:
    """E[g(R(T))] for every subset T, under fixed per-question inclusion probs.

    Built by sweeping one question at a time over the hypercube: after
    processing question j, entries with bit j hold the j-averaged expectation.
    Lookup is then a single array index, which makes v-driven greedy loops on
    tabulated utilities cheap.
    """

    def __init__(self, probs: Iterable[float], utility: UtilityFunction):
        probs = np.asarray(list(probs), dtype=float)
        table = utility.table()
        if table is None:
            raise ValueError("utility has no table; ground set too large")
        self.n = utility.n
        self.probs = probs
        f = table.copy()
        for j in range(self.n):
            bit = 1 << j
            pairs = f.reshape(-1, 2 * bit)
            lo = pairs[:, :bit]
            hi = pairs[:, bit:]
            hi *= probs[j]
            hi += (1.0 - probs[j]) * lo
        self.values = f

    def value_of_mask(self, mask: int) -> float:
        return float(self.values[mask])

    def value(self, ids: Iterable[int]) -> float:
        return self.value_of_mask(ids_to_mask(ids))
