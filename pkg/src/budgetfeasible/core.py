"""Shared domain types for procurement auctions with a hard budget.

Every cost, bid, value and budget is a :class:`fractions.Fraction` so that
allocation decisions and threshold payments are decided without rounding.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Sequence, Union

if TYPE_CHECKING:
    from .indsys import IndependenceSystemSpec
    from .valuations import AdditiveSpec, CoverageSpec

    ValuationSpec = Union[CoverageSpec, IndependenceSystemSpec, AdditiveSpec]

Rational = Fraction


class InputError(ValueError):
    """Malformed input: unknown agent ids, negative costs, bad shapes."""


class CapExceededError(RuntimeError):
    """A brute-force routine was asked to enumerate beyond its configured cap."""


def as_rational(x) -> Fraction:
    """Convert ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected on purpose: they would silently leak rounding into
    mechanism logic.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InputError(f"not a rational: {x!r}")
    if isinstance(x, (int, str)):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {x!r}") from exc
    raise InputError(f"not a rational: {x!r} (floats are not accepted)")


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Agent:
    id: int
    true_cost: Fraction

    def __post_init__(self):
        object.__setattr__(self, "true_cost", as_rational(self.true_cost))
        if self.true_cost < 0:
            raise InputError(f"agent {self.id} has negative cost")


@dataclass(frozen=True)
class BidProfile:
    """Declared costs, one per agent. Indexable like a tuple."""

    bids: tuple[Fraction, ...]

    def __post_init__(self):
        bids = tuple(as_rational(b) for b in self.bids)
        if any(b < 0 for b in bids):
            raise InputError("bids must be nonnegative")
        object.__setattr__(self, "bids", bids)

    def __len__(self) -> int:
        return len(self.bids)

    def __getitem__(self, i):
        return self.bids[i]

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.bids)

    def replace(self, agent: int, bid) -> BidProfile:
        bids = list(self.bids)
        bids[agent] = as_rational(bid)
        return BidProfile(tuple(bids))


@dataclass(frozen=True)
class Instance:
    agents: tuple[Agent, ...]
    budget: Fraction
    valuation: "ValuationSpec"
    family: str = ""

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "budget", as_rational(self.budget))
        if self.budget <= 0:
            raise InputError("budget must be positive")
        for k, a in enumerate(agents):
            if a.id != k:
                raise InputError("agent ids must be contiguous from 0")
        if self.valuation.ground_size != len(agents):
            raise InputError(
                f"valuation ground set has {self.valuation.ground_size} elements "
                f"but there are {len(agents)} agents"
            )

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def costs(self) -> BidProfile:
        return BidProfile(tuple(a.true_cost for a in self.agents))

    def truthful_bids(self) -> BidProfile:
        return self.costs


@dataclass(frozen=True)
class Outcome:
    winners: frozenset[int]
    payments: Mapping[int, Fraction]
    value: Fraction
    # False when some payment came from certified bisection instead of
    # breakpoint enumeration.
    exact: bool = field(default=True, compare=False)

    @property
    def total_payment(self) -> Fraction:
        return sum(self.payments.values(), Fraction(0))


def evaluate(valuation: "ValuationSpec", S: Iterable[int]) -> Fraction:
    """Value of the agent set ``S``; nondecreasing, with v(empty) = 0."""
    S = frozenset(S)
    n = valuation.ground_size
    for i in S:
        if not isinstance(i, int) or not 0 <= i < n:
            raise InputError(f"unknown agent id {i!r}")
    return valuation.value(S)


def singleton_value(valuation: "ValuationSpec", i: int) -> Fraction:
    return valuation.value(frozenset((i,)))


def active_agents(budget: Fraction, bids: Sequence[Fraction]) -> list[int]:
    """Agents whose bid does not exceed the budget, in id order."""
    return [i for i, b in enumerate(bids) if b <= budget]


def best_single_agent(valuation: "ValuationSpec", agents: Iterable[int]) -> int | None:
    """The agent of maximum stand-alone value; ties go to the lowest id."""
    best, best_v = None, None
    for i in sorted(agents):
        v = singleton_value(valuation, i)
        if best_v is None or v > best_v:
            best, best_v = i, v
    return best
