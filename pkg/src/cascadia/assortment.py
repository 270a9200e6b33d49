"""Adapter from consider-then-choose assortment planning onto the sequencing
machinery.

A catalog product is browsed, then either added to the consideration set
(probability ``consider_rate``) or skipped; both outcomes carry their own
continuation probability.  Purchases follow a multinomial-logit choice over
the realized consideration set, so the set-level revenue is the MNL expected
revenue, which is monotone submodular exactly when all revenues are equal.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Optional

from .evaluator import EvalReport
from .model import Instance, Question
from .policies import PolicyOutput, PolicySpec, solve


@dataclass(frozen=True)
class Product:
    id: int
    consider_rate: float
    c_consider: float = 1.0
    c_skip: float = 1.0
    weight: float = 1.0
    revenue: float = 1.0


@dataclass(frozen=True)
class Catalog:
    products: tuple[Product, ...]
    display_slots: int
    # position effects, for the decayed / scrolling delegations
    slot_decay: Optional[tuple[float, ...]] = None
    position_rates: Optional[tuple[tuple[float, ...], ...]] = None


def catalog_to_instance(cat: Catalog) -> Instance:
    """Map a catalog to an MNL-revenue instance.

    Skipping is the only alternative to considering, so the skip probability
    is exactly 1 - consider_rate.  Unequal revenues void the submodularity
    guarantee; the mapping still works and a warning is raised.
    """
    order = sorted(range(len(cat.products)), key=lambda i: cat.products[i].id)
    questions = tuple(
        Question(
            id=pos,
            p_answer=cat.products[i].consider_rate,
            p_pna=1.0 - cat.products[i].consider_rate,
            c_answer=cat.products[i].c_consider,
            c_pna=cat.products[i].c_skip,
            weight=cat.products[i].weight,
            revenue=cat.products[i].revenue,
        )
        for pos, i in enumerate(order)
    )
    external = tuple(cat.products[i].id for i in order)
    rates = None
    if cat.position_rates is not None:
        rates = tuple(cat.position_rates[i] for i in order)
    revenues = {q.revenue for q in questions}
    if len(revenues) > 1:
        warnings.warn("catalog revenues are unequal: expected revenue may not be "
                      "monotone submodular; policy guarantees are void", stacklevel=2)
    return Instance(questions=questions, attributes=(), budget=cat.display_slots,
                    utility_kind="mnl", external_ids=external,
                    slot_decay=cat.slot_decay, position_rates=rates)


ASSORTMENT_POLICY_KINDS = ("alg2_general", "alg4_decay_pna", "alg6_scrolling",
                           "exact_optimal", "random")


def optimize_assortment(cat: Catalog, spec: PolicySpec) -> tuple[PolicyOutput, EvalReport]:
    """Rank products by delegating to the sequencing policies with revenue as
    the utility; returns the policy output and its exact expected revenue."""
    if spec.kind not in ASSORTMENT_POLICY_KINDS:
        raise ValueError(f"policy {spec.kind!r} not supported for assortment")
    inst = catalog_to_instance(cat)
    return solve(inst, spec)


def catalog_from_json(doc: dict) -> Catalog:
    products = tuple(
        Product(
            id=int(p["id"]),
            consider_rate=float(p["consider_rate"]),
            c_consider=float(p.get("c_consider", 1.0)),
            c_skip=float(p.get("c_skip", 1.0)),
            weight=float(p.get("weight", 1.0)),
            revenue=float(p.get("revenue", 1.0)),
        )
        for p in doc["products"]
    )
    decay = doc.get("slot_decay")
    rates = doc.get("position_rates")
    return Catalog(
        products=products,
        display_slots=int(doc["display_slots"]),
        slot_decay=tuple(float(x) for x in decay) if decay is not None else None,
        position_rates=tuple(tuple(float(x) for x in r) for r in rates)
        if rates is not None else None,
    )


def load_catalog(text: str) -> Catalog:
    return catalog_from_json(json.loads(text))
