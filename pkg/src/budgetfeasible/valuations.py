"""Coverage and additive valuations, plus exhaustive structure checkers.

The checkers enumerate every subset of a small ground set, so a passing
check is a proof for that instance. They refuse to run past ``cap``
elements instead of sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core import CapExceededError, InputError, as_rational

DEFAULT_CAP = 12


@dataclass(frozen=True)
class CoverageSpec:
    """Subsets ``S_i`` of a weighted ground set; agent ``i`` owns ``S_i``."""

    num_elements: int
    subsets: tuple[frozenset[int], ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        subsets = tuple(frozenset(s) for s in self.subsets)
        weights = tuple(as_rational(w) for w in self.weights)
        if len(weights) != self.num_elements:
            raise InputError("need one weight per ground element")
        if any(w < 0 for w in weights):
            raise InputError("weights must be nonnegative")
        for s in subsets:
            if any(not 0 <= j < self.num_elements for j in s):
                raise InputError(f"subset {sorted(s)} leaves the ground set")
        object.__setattr__(self, "subsets", subsets)
        object.__setattr__(self, "weights", weights)

    @property
    def ground_size(self) -> int:
        return len(self.subsets)

    @property
    def covering_sets(self) -> tuple[tuple[int, ...], ...]:
        """``T_j``: the sets that contain element ``j``."""
        return tuple(
            tuple(i for i, s in enumerate(self.subsets) if j in s)
            for j in range(self.num_elements)
        )

    @property
    def total_weight(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def value(self, X: frozenset[int]) -> Fraction:
        return coverage_value(self, X)


@dataclass(frozen=True)
class AdditiveSpec:
    values: tuple[Fraction, ...]

    def __post_init__(self):
        values = tuple(as_rational(v) for v in self.values)
        if any(v < 0 for v in values):
            raise InputError("values must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def ground_size(self) -> int:
        return len(self.values)

    def value(self, S: frozenset[int]) -> Fraction:
        return sum((self.values[i] for i in S), Fraction(0))


def coverage_value(spec: CoverageSpec, X: Iterable[int]) -> Fraction:
    covered: set[int] = set()
    for i in X:
        if not 0 <= i < len(spec.subsets):
            raise InputError(f"unknown subset index {i}")
        covered |= spec.subsets[i]
    return sum((spec.weights[j] for j in covered), Fraction(0))


def _check_ground(valuation, ground: Sequence[int] | None, cap: int) -> list[int]:
    ground = list(range(valuation.ground_size)) if ground is None else sorted(set(ground))
    if len(ground) > cap:
        raise CapExceededError(
            f"ground set of size {len(ground)} exceeds brute-force cap {cap}"
        )
    return ground


def _value_table(valuation, ground: list[int]) -> list[Fraction]:
    table = []
    for mask in range(1 << len(ground)):
        S = frozenset(g for b, g in enumerate(ground) if mask >> b & 1)
        table.append(valuation.value(S))
    return table


@dataclass(frozen=True)
class SubmodularityViolation:
    """``v(S+i) - v(S) < v(T+i) - v(T)`` with ``S`` a proper subset of ``T``."""

    S: frozenset[int]
    T: frozenset[int]
    i: int
    marginal_S: Fraction
    marginal_T: Fraction


def check_submodular(valuation, ground: Sequence[int] | None = None,
                     cap: int = DEFAULT_CAP) -> list[SubmodularityViolation]:
    """All local diminishing-returns violations over ``ground``.

    Submodularity is equivalent to the local condition with ``T = S + j``,
    so checking every ``(S, j, i)`` is exhaustive; each reported triple is a
    genuine counterexample to the general definition.
    """
    ground = _check_ground(valuation, ground, cap)
    table = _value_table(valuation, ground)
    k = len(ground)

    def as_set(mask):
        return frozenset(g for b, g in enumerate(ground) if mask >> b & 1)

    violations = []
    for mask in range(1 << k):
        for bj in range(k):
            if mask >> bj & 1:
                continue
            tmask = mask | 1 << bj
            for bi in range(k):
                if tmask >> bi & 1:
                    continue
                ms = table[mask | 1 << bi] - table[mask]
                mt = table[tmask | 1 << bi] - table[tmask]
                if ms < mt:
                    violations.append(SubmodularityViolation(
                        as_set(mask), as_set(tmask), ground[bi], ms, mt))
    return violations


def check_monotone(valuation, ground: Sequence[int] | None = None,
                   cap: int = DEFAULT_CAP) -> list[tuple[frozenset[int], int]]:
    """Pairs ``(S, i)`` with ``v(S + i) < v(S)``; empty iff nondecreasing."""
    ground = _check_ground(valuation, ground, cap)
    table = _value_table(valuation, ground)
    bad = []
    for mask in range(1 << len(ground)):
        for b in range(len(ground)):
            if not mask >> b & 1 and table[mask | 1 << b] < table[mask]:
                bad.append((frozenset(g for c, g in enumerate(ground) if mask >> c & 1),
                            ground[b]))
    return bad


@dataclass(frozen=True)
class AdditiveClause:
    """``alpha_M(S) = sum of v_i over S intersected with M``."""

    support: frozenset[int]
    weights: tuple[Fraction, ...] = field(repr=False)

    def __call__(self, S: Iterable[int]) -> Fraction:
        return sum((self.weights[i] for i in S if i in self.support), Fraction(0))


class XOSCertificateError(AssertionError):
    def __init__(self, S, value, clause_max):
        super().__init__(f"v({sorted(S)}) = {value} but max over clauses = {clause_max}")
        self.S, self.value, self.clause_max = S, value, clause_max


def check_xos_certificate(valuation, ground: Sequence[int] | None = None,
                          cap: int = DEFAULT_CAP) -> list[AdditiveClause]:
    """Build one additive clause per independent set and verify the max form.

    Only independence-system valuations carry the structure needed here.
    Raises :class:`XOSCertificateError` with the offending subset if the
    pointwise maximum of the clauses disagrees with ``v`` anywhere.
    """
    from .indsys import IndependenceSystemSpec

    if not isinstance(valuation, IndependenceSystemSpec):
        raise InputError("XOS certificates are built for independence-system valuations")
    ground = _check_ground(valuation, ground, cap)
    weights = valuation.element_values
    clauses = []
    for mask in range(1 << len(ground)):
        M = frozenset(g for b, g in enumerate(ground) if mask >> b & 1)
        if valuation.is_independent(M):
            clauses.append(AdditiveClause(M, weights))
    for mask in range(1 << len(ground)):
        S = frozenset(g for b, g in enumerate(ground) if mask >> b & 1)
        v = valuation.value(S)
        best = max(c(S) for c in clauses)
        if v != best:
            raise XOSCertificateError(S, v, best)
    return clauses
