import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cascadia.model import Instance, Question


def random_instance(rng: np.random.Generator, n: int = 6, budget: int = 3,
                    n_choices: int = 5, kind: str = "entropy",
                    with_pna: bool = True, with_decay: bool = False,
                    with_rates: bool = False, shared_attrs: bool = False) -> Instance:
    """A fully heterogeneous random instance for stress tests.

    Unlike the benchmark generator, every question gets its own behavior
    parameters, and attributes may be shared across questions when
    ``shared_attrs`` so coverage overlaps are exercised.
    """
    n_attrs = max(2, n - 2) if shared_attrs else n
    questions = []
    for q in range(n):
        p_answer = rng.uniform(0.05, 0.95)
        p_pna = rng.uniform(0.0, 1.0 - p_answer) if with_pna else 0.0
        if shared_attrs:
            k = rng.integers(1, 3)
            attrs = frozenset(int(a) for a in rng.choice(n_attrs, size=k, replace=False))
        else:
            attrs = frozenset({q})
        questions.append(Question(
            id=q, p_answer=float(p_answer), p_pna=float(p_pna),
            c_answer=float(rng.uniform(0.0, 1.0)), c_pna=float(rng.uniform(0.0, 1.0)),
            attributes=attrs,
            weight=float(rng.uniform(0.5, 2.0)), revenue=float(rng.uniform(0.5, 2.0)),
        ))
    attributes = []
    for a in range(n_attrs):
        draws = rng.random(n_choices)
        dist = draws / draws.sum()
        attributes.append((a, tuple(float(x) for x in dist)))
    decay = None
    if with_decay:
        steps = rng.uniform(0.6, 1.0, size=budget - 1) if budget > 1 else []
        vals = [1.0]
        for s in steps:
            vals.append(vals[-1] * float(s))
        decay = tuple(vals)
    rates = None
    if with_rates:
        rates = tuple(tuple(float(x) for x in rng.uniform(0.05, 0.95, size=budget))
                      for _ in range(n))
    return Instance(questions=tuple(questions), attributes=tuple(attributes),
                    budget=budget, utility_kind=kind, slot_decay=decay,
                    position_rates=rates)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
