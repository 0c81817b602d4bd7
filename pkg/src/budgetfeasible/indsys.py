"""Independence systems and the unbudgeted solvers used by Greedy-ISK.

An element's value is public; the value of an arbitrary set ``S`` is the
best total value of an independent subset of ``S``.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .core import CapExceededError, InputError, as_rational

EXACT_SEARCH_CAP = 30


class Variant(str, enum.Enum):
    FREE = "free"
    GRAPH_MATCHING = "matching"
    GRAPHIC_MATROID = "forest"
    PARTITION_MATROID = "partition-matroid"
    GRAPH_INDEPENDENT_SET = "independent-set"
    KD_MATCHING = "kd-matching"


_CONFLICT_VARIANTS = (Variant.GRAPH_MATCHING, Variant.GRAPH_INDEPENDENT_SET, Variant.KD_MATCHING)


@dataclass(frozen=True)
class IndependenceSystemSpec:
    """Ground set, independence structure and public element values.

    Structure fields by variant:

    * matching / forest: ``vertices`` and ``edges`` (one element per edge)
    * independent-set: ``vertices`` and ``edges`` (one element per vertex)
    * partition-matroid: ``classes`` (class of each element) and ``capacities``
    * kd-matching: ``k``, ``parts`` (size of each part) and ``edges`` holding
      one k-tuple per hyperedge, entry ``t`` indexing a vertex of part ``t``
    """

    variant: Variant
    element_values: tuple[Fraction, ...]
    vertices: int = 0
    edges: tuple[tuple[int, ...], ...] = ()
    classes: tuple[int, ...] = ()
    capacities: tuple[int, ...] = ()
    k: int = 0
    parts: tuple[int, ...] = ()
    _cache: dict = field(default_factory=dict, init=False, repr=False,
                         compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        values = tuple(as_rational(v) for v in self.element_values)
        if any(v < 0 for v in values):
            raise InputError("element values must be nonnegative")
        object.__setattr__(self, "element_values", values)
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "capacities", tuple(self.capacities))
        object.__setattr__(self, "parts", tuple(self.parts))
        self._validate()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def free(cls, values):
        return cls(Variant.FREE, tuple(values))

    @classmethod
    def matching(cls, vertices, edges, values):
        return cls(Variant.GRAPH_MATCHING, tuple(values), vertices=vertices, edges=tuple(edges))

    @classmethod
    def forest(cls, vertices, edges, values):
        return cls(Variant.GRAPHIC_MATROID, tuple(values), vertices=vertices, edges=tuple(edges))

    @classmethod
    def partition_matroid(cls, classes, capacities, values):
        return cls(Variant.PARTITION_MATROID, tuple(values), classes=tuple(classes),
                   capacities=tuple(capacities))

    @classmethod
    def independent_set(cls, vertices, edges, values):
        return cls(Variant.GRAPH_INDEPENDENT_SET, tuple(values), vertices=vertices,
                   edges=tuple(edges))

    @classmethod
    def kd_matching(cls, k, parts, hyperedges, values):
        return cls(Variant.KD_MATCHING, tuple(values), k=k, parts=tuple(parts),
                   edges=tuple(hyperedges))

    def _validate(self):
        n = len(self.element_values)
        v = self.variant
        if v in (Variant.GRAPH_MATCHING, Variant.GRAPHIC_MATROID, Variant.GRAPH_INDEPENDENT_SET):
            for e in self.edges:
                if len(e) != 2 or not all(0 <= x < self.vertices for x in e):
                    raise InputError(f"bad edge {e}")
                if e[0] == e[1]:
                    # a loop would make a singleton dependent
                    raise InputError(f"self-loop {e} not allowed")
            expected = self.vertices if v is Variant.GRAPH_INDEPENDENT_SET else len(self.edges)
            if n != expected:
                raise InputError(f"expected {expected} element values, got {n}")
        elif v is Variant.PARTITION_MATROID:
            if len(self.classes) != n:
                raise InputError("need one class per element")
            if any(not 0 <= c < len(self.capacities) for c in self.classes):
                raise InputError("class index out of range")
            if any(cap < 1 for cap in self.capacities):
                raise InputError("capacities must be at least 1")
        elif v is Variant.KD_MATCHING:
            if self.k < 2 or len(self.parts) != self.k:
                raise InputError("kd-matching needs k >= 2 and k part sizes")
            if len(self.edges) != n:
                raise InputError("need one value per hyperedge")
            for h in self.edges:
                if len(h) != self.k or not all(0 <= a < self.parts[t] for t, a in enumerate(h)):
                    raise InputError(f"bad hyperedge {h}")

    # -- structure --------------------------------------------------------------

    @property
    def ground_size(self) -> int:
        return len(self.element_values)

    def _conflicts(self) -> tuple[int, ...]:
        """Bitmask of conflicting elements, for the pairwise-conflict variants."""
        got = self._cache.get("conflicts")
        if got is not None:
            return got
        n = self.ground_size
        masks = [0] * n
        if self.variant is Variant.GRAPH_INDEPENDENT_SET:
            for a, b in self.edges:
                masks[a] |= 1 << b
                masks[b] |= 1 << a
        else:
            if self.variant is Variant.KD_MATCHING:
                touched = [{(t, x) for t, x in enumerate(h)} for h in self.edges]
            else:
                touched = [set(e) for e in self.edges]
            for i in range(n):
                for j in range(i + 1, n):
                    if touched[i] & touched[j]:
                        masks[i] |= 1 << j
                        masks[j] |= 1 << i
        got = tuple(masks)
        self._cache["conflicts"] = got
        return got

    def is_independent(self, S: Iterable[int]) -> bool:
        S = sorted(set(S))
        v = self.variant
        if v is Variant.FREE:
            return True
        if v in _CONFLICT_VARIANTS:
            conf = self._conflicts()
            mask = 0
            for i in S:
                mask |= 1 << i
            return all(not conf[i] & mask for i in S)
        if v is Variant.GRAPHIC_MATROID:
            uf = _UnionFind(self.vertices)
            return all(uf.union(*self.edges[i]) for i in S)
        counts = [0] * len(self.capacities)
        for i in S:
            counts[self.classes[i]] += 1
        return all(c <= cap for c, cap in zip(counts, self.capacities))

    def weight(self, S: Iterable[int]) -> Fraction:
        S = frozenset(S)
        key = ("weight", S)
        got = self._cache.get(key)
        if got is None:
            got = sum((self.element_values[i] for i in S), Fraction(0))
            self._cache[key] = got
        return got

    def max_independent(self, S: Iterable[int]) -> frozenset[int]:
        """A maximum-value independent subset of ``S`` (deterministic)."""
        S = frozenset(S)
        key = ("opt", S)
        got = self._cache.get(key)
        if got is None:
            got = _exact_solve(self, S)
            self._cache[key] = got
        return got

    def value(self, S: frozenset[int]) -> Fraction:
        if len(S) == 1:
            (i,) = S
            return self.element_values[i]
        return self.weight(self.max_independent(S))

    def default_solver(self) -> "UnbudgetedSolver":
        if self.variant is Variant.KD_MATCHING:
            return greedy_packing_solver(self.k)
        return EXACT_SOLVER


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _by_value(spec: IndependenceSystemSpec, S: Iterable[int]) -> list[int]:
    """Descending value, ties by ascending index."""
    return sorted(S, key=lambda i: (-spec.element_values[i], i))


def _exact_solve(spec: IndependenceSystemSpec, S: frozenset[int]) -> frozenset[int]:
    v = spec.variant
    if v is Variant.FREE:
        return S
    if v is Variant.GRAPHIC_MATROID:
        uf = _UnionFind(spec.vertices)
        return frozenset(i for i in _by_value(spec, S) if uf.union(*spec.edges[i]))
    if v is Variant.PARTITION_MATROID:
        counts = [0] * len(spec.capacities)
        chosen = []
        for i in _by_value(spec, S):
            c = spec.classes[i]
            if counts[c] < spec.capacities[c]:
                counts[c] += 1
                chosen.append(i)
        return frozenset(chosen)
    return _branch_and_bound(spec, S)


def _branch_and_bound(spec: IndependenceSystemSpec, S: frozenset[int]) -> frozenset[int]:
    """Max-weight independent set in the conflict graph restricted to ``S``."""
    order = [i for i in _by_value(spec, S) if spec.element_values[i] > 0]
    if len(order) > EXACT_SEARCH_CAP:
        raise CapExceededError(
            f"exact search over {len(order)} elements exceeds cap {EXACT_SEARCH_CAP}")
    if not order:
        return frozenset()
    # integer weights on a common denominator keep the search fast and exact
    denom = math.lcm(*(spec.element_values[i].denominator for i in order))
    w = [int(spec.element_values[i] * denom) for i in order]
    pos = {e: p for p, e in enumerate(order)}
    conf_full = spec._conflicts()
    conf = []
    for e in order:
        m = 0
        for f_ in order:
            if conf_full[e] >> f_ & 1:
                m |= 1 << pos[f_]
        conf.append(m)

    best = [0, 0]

    def rec(avail, cur, chosen):
        if not avail:
            if cur > best[0]:
                best[0], best[1] = cur, chosen
            return
        bound = cur
        rest = avail
        while rest:
            low = rest & -rest
            bound += w[low.bit_length() - 1]
            rest ^= low
        if bound <= best[0]:
            return
        low = avail & -avail
        p = low.bit_length() - 1
        rec(avail & ~low & ~conf[p], cur + w[p], chosen | low)
        rec(avail & ~low, cur, chosen)

    rec((1 << len(order)) - 1, 0, 0)
    return frozenset(order[p] for p in range(len(order)) if best[1] >> p & 1)


@dataclass(frozen=True)
class UnbudgetedSolver:
    """A deterministic ``rho``-approximation for the unbudgeted problem."""

    name: str
    procedure: Callable[[IndependenceSystemSpec, frozenset[int]], frozenset[int]]
    rho: Fraction

    def __call__(self, spec: IndependenceSystemSpec, A: Iterable[int]) -> frozenset[int]:
        A = frozenset(A)
        key = (self.name, A)
        got = spec._cache.get(key)
        if got is None:
            got = frozenset(self.procedure(spec, A))
            spec._cache[key] = got
        return got


def greedy_k_set_packing(spec: IndependenceSystemSpec, A: Iterable[int]) -> frozenset[int]:
    """Scan hyperedges by descending value and keep each one disjoint from
    those already kept. A k-approximation for k-dimensional matching."""
    if spec.variant is not Variant.KD_MATCHING:
        raise InputError("greedy_k_set_packing expects a kd-matching system")
    conf = spec._conflicts()
    chosen = 0
    out = []
    for i in _by_value(spec, A):
        if not conf[i] & chosen:
            chosen |= 1 << i
            out.append(i)
    return frozenset(out)


EXACT_SOLVER = UnbudgetedSolver("exact", lambda spec, A: spec.max_independent(A), Fraction(1))


def greedy_packing_solver(k: int) -> UnbudgetedSolver:
    return UnbudgetedSolver(f"greedy-packing-{k}", greedy_k_set_packing, Fraction(k))


def solve_unbudgeted(spec: IndependenceSystemSpec, A: Iterable[int],
                     solver: UnbudgetedSolver | None = None) -> tuple[frozenset[int], Fraction]:
    solver = solver or spec.default_solver()
    return solver(spec, A), solver.rho


@functools.lru_cache(maxsize=256)
def _free_system(values: tuple[Fraction, ...]) -> IndependenceSystemSpec:
    # one shared spec per value vector, so its solver cache survives across calls
    return IndependenceSystemSpec.free(values)


def as_independence_system(valuation) -> IndependenceSystemSpec:
    """View an additive valuation as the free system; pass systems through."""
    from .valuations import AdditiveSpec

    if isinstance(valuation, IndependenceSystemSpec):
        return valuation
    if isinstance(valuation, AdditiveSpec):
        return _free_system(valuation.values)
    raise InputError(f"{type(valuation).__name__} is not an independence-system valuation")


def enumerate_independent(spec: IndependenceSystemSpec, ground: Sequence[int]):
    """Yield every independent subset of ``ground`` (depth-first, index order)."""
    ground = sorted(ground)

    def rec(k, current):
        yield frozenset(current)
        for j in range(k, len(ground)):
            current.append(ground[j])
            if spec.is_independent(current):
                yield from rec(j + 1, current)
            current.pop()

    yield from rec(0, [])
