"""Core domain types for the cascade browse model.

A quiz instance is a pool of questions, each carrying an answer probability
``p_answer``, a skip ("prefer not to answer") probability ``p_pna``, and two
continuation probabilities ``c_answer`` / ``c_pna`` that govern whether the
customer keeps reading after answering or skipping.  A solution is a short
ordered sequence of distinct question ids.  All types are immutable after
construction and safe to share across workers.

Question ids are dense integers ``0..n-1`` in canonical form; arbitrary
external ids are remapped at JSON ingestion and restored on output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence as Seq

INSTANCE_SCHEMA_VERSION = "cascadia-instance/1"

UTILITY_KINDS = ("entropy", "modular", "mnl")

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Question:
    """A single quiz question with its behavior parameters.

    ``attributes`` is the set of attribute ids whose value the answer reveals.
    ``weight`` doubles as the MNL preference weight and the per-question value
    of the modular utility; ``revenue`` is only used by the MNL utility.
    """

    id: int
    p_answer: float
    p_pna: float = 0.0
    c_answer: float = 1.0
    c_pna: float = 1.0
    attributes: frozenset[int] = frozenset()
    weight: float = 1.0
    revenue: float = 1.0

    def violations(self) -> list[str]:
        errs = []
        for name in ("p_answer", "p_pna", "c_answer", "c_pna"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                errs.append(f"question {self.id}: {name}={v} outside [0, 1]")
        if self.p_answer + self.p_pna > 1.0 + _SUM_TOL:
            errs.append(f"question {self.id}: p_answer+p_pna>1")
        if self.weight < 0:
            errs.append(f"question {self.id}: negative weight")
        if self.revenue < 0:
            errs.append(f"question {self.id}: negative revenue")
        return errs


@dataclass(frozen=True)
class Instance:
    """A question pool with attribute distributions and a slot budget.

    ``attributes`` maps attribute id to a probability distribution over the
    attribute's values.  ``slot_decay`` (if present) is the per-slot answer
    rate decay vector lambda_1..lambda_b; ``position_rates`` (if present) is
    the n-by-b matrix of position-dependent answer rates used by the
    scrolling design.
    """

    questions: tuple[Question, ...]
    attributes: tuple[tuple[int, tuple[float, ...]], ...] = ()
    budget: int = 1
    utility_kind: str = "entropy"
    slot_decay: Optional[tuple[float, ...]] = None
    position_rates: Optional[tuple[tuple[float, ...], ...]] = None
    external_ids: Optional[tuple[int, ...]] = None

    @property
    def n(self) -> int:
        return len(self.questions)

    @property
    def effective_budget(self) -> int:
        # The budget may exceed the pool size; sequences cap at min(b, n).
        return min(self.budget, self.n)

    def question(self, qid: int) -> Question:
        return self.questions[qid]

    def attribute_map(self) -> dict[int, tuple[float, ...]]:
        return dict(self.attributes)

    def decay_at(self, slot: int) -> float:
        """Decay factor for a 1-indexed slot; 1.0 when no decay vector."""
        if self.slot_decay is None:
            return 1.0
        return self.slot_decay[slot - 1]


@dataclass(frozen=True)
class Sequence:
    """An ordered arrangement of distinct question ids."""

    slots: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.slots)) != len(self.slots):
            raise ValueError(f"sequence has repeated ids: {self.slots}")

    def __len__(self) -> int:
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    def violations(self, inst: Instance) -> list[str]:
        errs = []
        if len(self.slots) > inst.budget:
            errs.append(f"sequence length {len(self.slots)} exceeds budget {inst.budget}")
        for qid in self.slots:
            if not (0 <= qid < inst.n):
                errs.append(f"unknown question id {qid}")
        return errs


def agg_continuation(q: Question, slot: Optional[int] = None,
                     decay: Optional[Seq[float]] = None) -> float:
    """Total probability of proceeding past ``q``: p+c+ + p-c-.

    With a decay vector and a 1-indexed ``slot``, the answer branch is scaled
    by the slot's decay factor: lambda_i * p+c+ + p-c-.
    """
    lam = 1.0
    if slot is not None and decay is not None:
        lam = decay[slot - 1]
    return lam * q.p_answer * q.c_answer + q.p_pna * q.c_pna


def reachability(seq: Sequence | Iterable[int], inst: Instance,
                 use_decay: Optional[bool] = None) -> list[float]:
    """Per-slot probability of being read: the running product of earlier
    aggregated continuations.  The first slot is always reached.

    ``use_decay`` defaults to applying the instance's decay vector when one
    is present.
    """
    slots = list(seq.slots if isinstance(seq, Sequence) else seq)
    if use_decay is None:
        use_decay = inst.slot_decay is not None
    decay = inst.slot_decay if use_decay else None
    out = []
    c = 1.0
    for i, qid in enumerate(slots, start=1):
        out.append(c)
        c *= agg_continuation(inst.question(qid), i if decay else None, decay)
    return out


def validate_instance(inst: Instance) -> list[str]:
    """Return every violated invariant; an empty list means the instance is ok."""
    errs: list[str] = []
    if inst.budget < 1:
        errs.append(f"budget {inst.budget} < 1")
    if inst.utility_kind not in UTILITY_KINDS and not callable(inst.utility_kind):
        errs.append(f"unknown utility kind {inst.utility_kind!r}")

    ids = [q.id for q in inst.questions]
    if len(set(ids)) != len(ids):
        errs.append("question ids are not unique")
    if ids != list(range(len(ids))):
        errs.append("question ids are not canonical 0..n-1")

    for q in inst.questions:
        errs.extend(q.violations())

    attr_ids = set()
    for aid, dist in inst.attributes:
        if aid in attr_ids:
            errs.append(f"attribute {aid}: duplicated")
        attr_ids.add(aid)
        if any(p < 0 for p in dist):
            errs.append(f"attribute {aid}: negative probability")
        elif abs(sum(dist) - 1.0) > _SUM_TOL:
            errs.append(f"attribute {aid}: distribution sums to {sum(dist)!r}, not 1")
    for q in inst.questions:
        for aid in q.attributes:
            if aid not in attr_ids:
                errs.append(f"question {q.id}: unknown attribute {aid}")

    if inst.slot_decay is not None:
        d = inst.slot_decay
        if len(d) < inst.effective_budget:
            errs.append(f"slot_decay has {len(d)} entries, budget needs {inst.effective_budget}")
        if d and abs(d[0] - 1.0) > 1e-12:
            errs.append("decay lambda_1 != 1")
        if any(not (0.0 < x <= 1.0) for x in d):
            errs.append("decay entries outside (0, 1]")
        if any(d[i] < d[i + 1] for i in range(len(d) - 1)):
            errs.append("decay not nonincreasing")

    if inst.position_rates is not None:
        pr = inst.position_rates
        if len(pr) != inst.n:
            errs.append(f"position_rates has {len(pr)} rows, expected {inst.n}")
        for qid, row in enumerate(pr):
            if len(row) < inst.effective_budget:
                errs.append(f"position_rates row {qid} shorter than budget")
            if any(not (0.0 <= r <= 1.0) for r in row):
                errs.append(f"position_rates row {qid} outside [0, 1]")

    return errs


def zero_pna(inst: Instance) -> Instance:
    """The no-PNA projection of an instance: every p_pna forced to 0."""
    qs = tuple(replace(q, p_pna=0.0) for q in inst.questions)
    return replace(inst, questions=qs)


def kappa_answer_rate(p_answer: float, kappa: float) -> float:
    """Answer rate once the skip option is removed.

    kappa in (0, 1] moves the rate toward 1 (forced answering works),
    kappa in [-1, 0] scales it toward 0 (forced answering frustrates).
    """
    if not (-1.0 <= kappa <= 1.0):
        raise ValueError(f"kappa={kappa} outside [-1, 1]")
    if kappa > 0.0:
        return (1.0 - p_answer) * kappa + p_answer
    return (1.0 + kappa) * p_answer


def model_variant(inst: Instance) -> str:
    """The scanning-model variant an instance encodes."""
    if inst.slot_decay is not None:
        return "slot_decay"
    if inst.position_rates is not None:
        return "scrolling"
    return "basic"


# ---------------------------------------------------------------------------
# JSON interchange ("cascadia-instance/1")

def instance_to_json(inst: Instance) -> dict:
    ext = inst.external_ids or tuple(range(inst.n))
    doc = {
        "version": INSTANCE_SCHEMA_VERSION,
        "budget": inst.budget,
        "utility": inst.utility_kind,
        "questions": [
            {
                "id": ext[q.id],
                "p_answer": q.p_answer,
                "p_pna": q.p_pna,
                "c_answer": q.c_answer,
                "c_pna": q.c_pna,
                "attributes": sorted(q.attributes),
                "weight": q.weight,
                "revenue": q.revenue,
            }
            for q in inst.questions
        ],
        "attributes": [
            {"id": aid, "distribution": list(dist)} for aid, dist in inst.attributes
        ],
    }
    if inst.slot_decay is not None:
        doc["slot_decay"] = list(inst.slot_decay)
    if inst.position_rates is not None:
        doc["position_rates"] = [list(r) for r in inst.position_rates]
    return doc


def instance_from_json(doc: dict) -> Instance:
    """Build a canonical instance from its JSON form.

    External question ids may be arbitrary distinct integers; they are sorted
    and remapped to 0..n-1, with the original ids retained for output.
    """
    version = doc.get("version", INSTANCE_SCHEMA_VERSION)
    if version != INSTANCE_SCHEMA_VERSION:
        raise ValueError(f"unsupported instance schema {version!r}")
    raw = doc.get("questions", [])
    order = sorted(range(len(raw)), key=lambda i: raw[i]["id"])
    external = tuple(raw[i]["id"] for i in order)
    questions = tuple(
        Question(
            id=pos,
            p_answer=float(raw[i]["p_answer"]),
            p_pna=float(raw[i].get("p_pna", 0.0)),
            c_answer=float(raw[i].get("c_answer", 1.0)),
            c_pna=float(raw[i].get("c_pna", 1.0)),
            attributes=frozenset(raw[i].get("attributes", [])),
            weight=float(raw[i].get("weight", 1.0)),
            revenue=float(raw[i].get("revenue", 1.0)),
        )
        for pos, i in enumerate(order)
    )
    attributes = tuple(
        (int(a["id"]), tuple(float(p) for p in a["distribution"]))
        for a in sorted(doc.get("attributes", []), key=lambda a: a["id"])
    )
    decay = doc.get("slot_decay")
    rates = doc.get("position_rates")
    if rates is not None:
        # Rows follow the question order of the input document.
        rates = [rates[i] for i in order]
    return Instance(
        questions=questions,
        attributes=attributes,
        budget=int(doc["budget"]),
        utility_kind=doc.get("utility", "entropy"),
        slot_decay=tuple(float(x) for x in decay) if decay is not None else None,
        position_rates=tuple(tuple(float(x) for x in r) for r in rates) if rates is not None else None,
        external_ids=external,
    )


def dump_instance(inst: Instance) -> str:
    return json.dumps(instance_to_json(inst), indent=2, sort_keys=True) + "\n"


def load_instance(text: str) -> Instance:
    return instance_from_json(json.loads(text))


def to_external_ids(inst: Instance, slots: Iterable[int]) -> list[int]:
    ext = inst.external_ids or tuple(range(inst.n))
    return [ext[q] for q in slots]


def from_external_ids(inst: Instance, slots: Iterable[int]) -> Sequence:
    ext = inst.external_ids or tuple(range(inst.n))
    lookup = {e: i for i, e in enumerate(ext)}
    try:
        return Sequence(tuple(lookup[s] for s in slots))
    except KeyError as exc:
        raise ValueError(f"unknown external question id {exc.args[0]}") from None
