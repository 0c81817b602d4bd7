"""Instance files (JSON) and seeded random instance generators.

Rationals are written as ``"p/q"`` strings so files round-trip exactly.
"""
from __future__ import annotations

import itertools
import json
import random
from fractions import Fraction
from typing import Any

from .core import Agent, InputError, Instance, as_rational, format_rational
from .indsys import IndependenceSystemSpec, Variant
from .valuations import AdditiveSpec, CoverageSpec

FAMILIES = ("coverage", "knapsack", "matching", "forest", "partition-matroid",
            "independent-set", "kd-matching")
GRAPH_FAMILIES = ("matching", "forest", "independent-set")


def _r(x: Fraction) -> str:
    return format_rational(x)


def _rs(xs) -> list[str]:
    return [_r(x) for x in xs]


def valuation_to_dict(val) -> dict[str, Any]:
    if isinstance(val, CoverageSpec):
        return {"weights": _rs(val.weights), "subsets": [sorted(s) for s in val.subsets]}
    if isinstance(val, AdditiveSpec):
        return {"values": _rs(val.values)}
    v = val.variant
    if v in (Variant.GRAPH_MATCHING, Variant.GRAPHIC_MATROID, Variant.GRAPH_INDEPENDENT_SET):
        return {"vertices": val.vertices, "edges": [list(e) for e in val.edges],
                "values": _rs(val.element_values)}
    if v is Variant.PARTITION_MATROID:
        return {"classes": list(val.classes), "capacities": list(val.capacities),
                "values": _rs(val.element_values)}
    if v is Variant.KD_MATCHING:
        return {"k": val.k, "parts": list(val.parts),
                "hyperedges": [list(h) for h in val.edges], "values": _rs(val.element_values)}
    return {"values": _rs(val.element_values)}


def family_of(val) -> str:
    if isinstance(val, CoverageSpec):
        return "coverage"
    if isinstance(val, AdditiveSpec):
        return "knapsack"
    if val.variant is Variant.FREE:
        return "knapsack"
    return val.variant.value


def instance_to_dict(instance: Instance) -> dict[str, Any]:
    return {
        "family": instance.family or family_of(instance.valuation),
        "budget": _r(instance.budget),
        "agents": [{"id": a.id, "cost": _r(a.true_cost)} for a in instance.agents],
        "valuation": valuation_to_dict(instance.valuation),
    }


def dumps(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def _rats(xs) -> tuple[Fraction, ...]:
    return tuple(as_rational(x) for x in xs)


def valuation_from_dict(family: str, d: dict[str, Any]):
    try:
        if family == "coverage":
            weights = _rats(d["weights"])
            return CoverageSpec(len(weights), tuple(frozenset(s) for s in d["subsets"]), weights)
        if family == "knapsack":
            return AdditiveSpec(_rats(d["values"]))
        if family in GRAPH_FAMILIES:
            return IndependenceSystemSpec(Variant(family), _rats(d["values"]),
                                          vertices=int(d["vertices"]),
                                          edges=tuple(tuple(e) for e in d["edges"]))
        if family == "partition-matroid":
            return IndependenceSystemSpec.partition_matroid(d["classes"], d["capacities"],
                                                           _rats(d["values"]))
        if family == "kd-matching":
            return IndependenceSystemSpec.kd_matching(int(d["k"]), d["parts"],
                                                      [tuple(h) for h in d["hyperedges"]],
                                                      _rats(d["values"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed {family} valuation: {exc}") from exc
    raise InputError(f"unknown family {family!r}")


def instance_from_dict(d: dict[str, Any]) -> Instance:
    if not isinstance(d, dict):
        raise InputError("an instance file must hold a JSON object")
    try:
        family = d["family"]
        agents = tuple(Agent(int(a["id"]), as_rational(a["cost"])) for a in d["agents"])
        valuation = valuation_from_dict(family, d["valuation"])
        return Instance(agents, as_rational(d["budget"]), valuation, family)
    except KeyError as exc:
        raise InputError(f"instance is missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed instance: {exc}") from exc


def loads(text: str) -> Instance:
    try:
        return instance_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InputError(f"not valid JSON: {exc}") from exc


def load(path) -> Instance:
    with open(path) as fh:
        return loads(fh.read())


def save(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(instance))


# ---------------------------------------------------------------------------
# generators

def _cost(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, 30), rng.choice((1, 2, 4)))


def _value(rng: random.Random) -> Fraction:
    # a small range so ties in value and in cost/value ratio actually occur
    return Fraction(rng.randint(1, 12), rng.choice((1, 1, 2)))


def _budget(rng: random.Random, costs) -> Fraction:
    if not costs:
        return Fraction(1)
    lo, hi = max(costs), sum(costs)
    return lo + (hi - lo) * Fraction(rng.randint(0, 8), 8)


def _random_graph(rng: random.Random, n_edges: int, density: float = 0.5):
    vertices = 2
    while vertices * (vertices - 1) // 2 < n_edges:
        vertices += 1
    vertices += rng.randint(0, max(1, int(n_edges * density)))
    pairs = list(itertools.combinations(range(vertices), 2))
    return vertices, sorted(rng.sample(pairs, n_edges))


def generate(family: str, size: int, seed: int) -> Instance:
    """A random instance with ``size`` agents; identical for identical arguments."""
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    if size < 0:
        raise InputError("size must be nonnegative")
    rng = random.Random(f"{family}/{size}/{seed}")
    costs = [_cost(rng) for _ in range(size)]
    budget = _budget(rng, costs)
    values = [_value(rng) for _ in range(size)]

    if family == "coverage":
        n_el = rng.randint(2, 10)
        weights = [Fraction(rng.randint(1, 10), rng.choice((1, 2))) for _ in range(n_el)]
        subsets = [frozenset(rng.sample(range(n_el), rng.randint(1, min(4, n_el))))
                   for _ in range(size)]
        val = CoverageSpec(n_el, tuple(subsets), tuple(weights))
    elif family == "knapsack":
        val = AdditiveSpec(tuple(values))
    elif family in ("matching", "forest"):
        vertices, edges = _random_graph(rng, size, 0.5 if family == "matching" else 0.2)
        val = IndependenceSystemSpec(Variant(family), tuple(values), vertices=vertices,
                                     edges=tuple(edges))
    elif family == "independent-set":
        pairs = [p for p in itertools.combinations(range(size), 2) if rng.random() < 0.3]
        val = IndependenceSystemSpec.independent_set(size, pairs, values)
    elif family == "partition-matroid":
        n_classes = rng.randint(1, max(1, size // 2))
        classes = [rng.randrange(n_classes) for _ in range(size)]
        capacities = [rng.randint(1, 2) for _ in range(n_classes)]
        val = IndependenceSystemSpec.partition_matroid(classes, capacities, values)
    else:
        k = 3
        part = max(2, (size + 1) // 2)
        pool = list(itertools.product(range(part), repeat=k))
        hyperedges = sorted(rng.sample(pool, size))
        val = IndependenceSystemSpec.kd_matching(k, [part] * k, hyperedges, values)

    agents = tuple(Agent(i, c) for i, c in enumerate(costs))
    return Instance(agents, budget, val, family)


def tight_instance(v=10, eps=1, delta=Fraction(2, 5)) -> Instance:
    """Four disjoint edges on which Det-ISK gets about a quarter of the optimum.

    Values ``(v + 2 eps, v, v, v + eps)``, costs ``(delta, 10, 10, delta)``,
    budget ``20 + 2 delta``; needs ``delta < 5 eps / v``.
    """
    v, eps, delta = Fraction(v), Fraction(eps), Fraction(delta)
    if not delta < 5 * eps / v:
        raise InputError("need delta < 5 eps / v")
    values = (v + 2 * eps, v, v, v + eps)
    costs = (delta, Fraction(10), Fraction(10), delta)
    val = IndependenceSystemSpec.matching(8, [(0, 1), (2, 3), (4, 5), (6, 7)], values)
    agents = tuple(Agent(i, c) for i, c in enumerate(costs))
    return Instance(agents, 20 + 2 * delta, val, "matching")
