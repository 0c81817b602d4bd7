"""Brute-force ground truth for small instances."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from .core import CapExceededError, Instance, as_rational
from .indsys import IndependenceSystemSpec, UnbudgetedSolver, as_independence_system
from .valuations import AdditiveSpec

ADDITIVE_CAP = 20
STRUCTURED_CAP = 12


def _subsets_within_budget(pool: list[int], bids, budget, admissible=None):
    """Subsets of ``pool`` with total bid at most ``budget``, in lexicographic
    order of their sorted tuples. ``admissible`` prunes extensions (it must be
    closed under taking subsets)."""

    def rec(k, current, spent):
        yield current
        for j in range(k, len(pool)):
            i = pool[j]
            if spent + bids[i] > budget:
                continue
            nxt = current + (i,)
            if admissible is not None and not admissible(nxt):
                continue
            yield from rec(j + 1, nxt, spent + bids[i])

    yield from rec(0, (), Fraction(0))


def brute_force_opt(instance: Instance, bids=None, agents: Iterable[int] | None = None,
                    cap: int | None = None) -> tuple[frozenset[int], Fraction]:
    """Exact budgeted optimum over ``agents`` (default: all agents).

    Ties go to the lexicographically smallest set. For independence systems
    only independent sets are enumerated, which loses nothing since every
    set is worth its best independent subset.
    """
    bids = instance.costs if bids is None else tuple(as_rational(b) for b in bids)
    budget = instance.budget
    pool = sorted(i for i in (range(instance.n) if agents is None else agents)
                  if bids[i] <= budget)
    val = instance.valuation
    additive = isinstance(val, AdditiveSpec) or (
        isinstance(val, IndependenceSystemSpec) and val.variant.value == "free")
    if cap is None:
        cap = ADDITIVE_CAP if additive else STRUCTURED_CAP
    if len(pool) > cap:
        raise CapExceededError(f"{len(pool)} agents exceed the brute-force cap {cap}")

    best_set, best_val = frozenset(), Fraction(0)
    if isinstance(val, (AdditiveSpec, IndependenceSystemSpec)):
        spec = as_independence_system(val)
        admissible = None if additive else spec.is_independent
        for S in _subsets_within_budget(pool, bids, budget, admissible):
            v = spec.weight(S)
            if v > best_val:
                best_set, best_val = frozenset(S), v
        return best_set, best_val
    for S in _subsets_within_budget(pool, bids, budget):
        v = val.value(frozenset(S))
        if v > best_val:
            best_set, best_val = frozenset(S), v
    return best_set, best_val


def rand_isk_expectation(instance: Instance, bids=None,
                         f: UnbudgetedSolver | None = None) -> Fraction:
    """Exact expected value of Rand-ISK: the two branches weighted by their
    probabilities, with no sampling."""
    from .mechanisms import _istar, _greedy_isk_run, rand_isk_probability

    bids = instance.costs if bids is None else tuple(as_rational(b) for b in bids)
    spec = as_independence_system(instance.valuation)
    f = f or spec.default_solver()
    A, istar = _istar(spec, bids, instance.budget)
    if istar is None:
        return Fraction(0)
    p = rand_isk_probability(f.rho)
    greedy = _greedy_isk_run(spec, f, bids, instance.budget, A)
    return p * spec.element_values[istar] + (1 - p) * spec.weight(greedy)


def empirical_ratio(mechanism, instance: Instance, bids=None) -> Fraction | float:
    """``OPT / v(output)``; ``math.inf`` when the output is worthless but OPT is not."""
    bids = instance.costs if bids is None else tuple(as_rational(b) for b in bids)
    winners = mechanism(instance, bids)
    value = instance.valuation.value(frozenset(winners))
    opt = brute_force_opt(instance, bids)[1]
    if value == 0:
        return Fraction(1) if opt == 0 else math.inf
    return opt / value
