"""Allocation rules for budget-feasible procurement.

Two families live here:

* the submodular mechanisms (Greedy-SM, Mechanism-SM with an exact optimum,
  Mechanism-SM-frac with the coverage LP), and
* the independence-system mechanisms (Greedy-ISK, Rand-ISK, Det-ISK).

Each rule is available as a plain function returning the winner set and as
a :class:`Mechanism` object that also knows where its win predicate can
change, which is what makes exact threshold payments possible.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .core import (
    InputError,
    Instance,
    active_agents,
    as_rational,
    best_single_agent,
    evaluate,
)
from .coverage_lp import solve_coverage_lp
from .indsys import (
    IndependenceSystemSpec,
    UnbudgetedSolver,
    Variant,
    as_independence_system,
)
from .thresholds import bisect_threshold, scan_threshold
from .valuations import AdditiveSpec, CoverageSpec

# ---------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class SMConstants:
    rho: float
    gamma: float
    alpha: float
    ratio: float


def sm_constants(rho) -> SMConstants:
    """Tuned constants for the fractional-relaxation mechanism.

    ``rho`` bounds the gap between the fractional and integral optimum.
    """
    rho = float(rho)
    if not rho >= 1:
        raise InputError(f"rho must be at least 1, got {rho}")
    e = math.e
    gamma = math.sqrt(1 + 4 * (rho - 1) * e + 4 * (rho ** 2 + 4 * rho + 1) * e ** 2)
    alpha = (1 + 2 * (rho + 1) * e + gamma) / (2 * (e - 1))
    ratio = (2 * (rho + 2) * e - 1 + gamma) / (2 * (e - 1))
    return SMConstants(rho, gamma, alpha, ratio)


COVERAGE_GAP = 2 * math.e / (math.e - 1)

# The branch tests below compare against these exact rationals (the binary
# value of the double). Any fixed constant keeps the rule monotone.
ALPHA_SM_EXACT = Fraction(sm_constants(1).alpha)
ALPHA_SM_FRAC = Fraction(sm_constants(COVERAGE_GAP).alpha)


@dataclass(frozen=True)
class CoinSource:
    """Seeded uniform draws in ``[0, 1)``; draw ``k`` is a pure function of the seed."""

    seed: int

    def draw(self, index: int = 0) -> float:
        rng = random.Random(self.seed)
        for _ in range(index):
            rng.random()
        return rng.random()


# ---------------------------------------------------------------------------
# helpers

def _bids(bids) -> tuple[Fraction, ...]:
    return tuple(as_rational(b) for b in bids)


def _with_bid(bids: Sequence[Fraction], agent: int, bid: Fraction) -> tuple[Fraction, ...]:
    out = list(bids)
    out[agent] = bid
    return tuple(out)


def _check_sizes(instance: Instance, bids):
    if len(bids) != instance.n:
        raise InputError(f"expected {instance.n} bids, got {len(bids)}")


_SUBMODULAR_VARIANTS = (Variant.FREE, Variant.GRAPHIC_MATROID, Variant.PARTITION_MATROID)


def _submodular_valuation(instance: Instance):
    val = instance.valuation
    if isinstance(val, (CoverageSpec, AdditiveSpec)):
        return val
    if isinstance(val, IndependenceSystemSpec) and val.variant in _SUBMODULAR_VARIANTS:
        return val
    raise InputError(f"{instance.family or type(val).__name__} valuation is not submodular")


# ---------------------------------------------------------------------------
# Greedy-SM

def _sm_key(marginal: Fraction, bid: Fraction, agent: int):
    # highest marginal per unit bid first, then lower bid, then lower id
    if bid == 0:
        return (0, 0, bid, agent)
    return (1, -marginal / bid, bid, agent)


def _greedy_sm_run(val, bids, agents: Iterable[int], half_budget: Fraction,
                   stop: bool = True) -> tuple[frozenset[int], list[frozenset[int]]]:
    """Adaptive greedy by marginal value per unit bid.

    Returns the selected set and the chain of prefixes visited. With
    ``stop=False`` the stopping test is ignored, giving the full greedy order.
    Agents whose marginal value drops to zero are discarded for good.
    """
    S: frozenset[int] = frozenset()
    vS = Fraction(0)
    remaining = set(agents)
    prefixes = [S]
    while remaining:
        best = None
        for j in sorted(remaining):
            marg = val.value(S | {j}) - vS
            if marg <= 0:
                remaining.discard(j)
                continue
            key = _sm_key(marg, bids[j], j)
            if best is None or key < best[0]:
                best = (key, j, marg)
        if best is None:
            break
        _, k, marg = best
        if stop and bids[k] * (vS + marg) > half_budget * marg:
            break
        S = S | {k}
        vS += marg
        remaining.discard(k)
        prefixes.append(S)
    return S, prefixes


def greedy_sm(instance: Instance, bids, half_budget=None) -> frozenset[int]:
    """Greedy-SM run on the agents bidding at most ``B`` with budget ``half_budget``.

    An agent ``k`` picked next is accepted while
    ``b_k <= half_budget * (v(S+k) - v(S)) / v(S+k)``.
    """
    bids = _bids(bids)
    _check_sizes(instance, bids)
    val = _submodular_valuation(instance)
    half = instance.budget / 2 if half_budget is None else as_rational(half_budget)
    A = active_agents(instance.budget, bids)
    return _greedy_sm_run(val, bids, A, half)[0]


def _greedy_sm_candidates(val, bids, pool: Iterable[int], agent: int,
                          half_budget: Fraction, budget: Fraction) -> set[Fraction]:
    """Every bid of ``agent`` at which its Greedy-SM outcome can flip.

    Until ``agent`` is picked, the others are taken in their own greedy order,
    so the relevant sets are the prefixes of that order. At each prefix the
    agent's standing changes only where its ratio ties another agent's or
    where its own acceptance test becomes tight.
    """
    others = [j for j in pool if j != agent and bids[j] <= budget]
    _, prefixes = _greedy_sm_run(val, bids, others, half_budget, stop=False)
    cands = {Fraction(0), budget, bids[agent]}
    for T in prefixes:
        vT = val.value(T)
        mi = val.value(T | {agent}) - vT
        if mi <= 0:
            continue
        cands.add(half_budget * mi / (vT + mi))
        for j in others:
            if j in T:
                continue
            mj = val.value(T | {j}) - vT
            if mj > 0:
                cands.add(bids[j] * mi / mj)
    return cands


# ---------------------------------------------------------------------------
# Mechanism-SM (exact optimum) and Mechanism-SM-frac

def _exact_opt_value(instance, bids, agents):
    from .oracle import brute_force_opt

    return brute_force_opt(instance, bids, agents=agents)[1]


def mechanism_sm_exact(instance: Instance, bids,
                       opt_oracle: Callable | None = None) -> frozenset[int]:
    """Return ``{i*}`` if ``alpha * v(i*) >= OPT(A - i*)``, else Greedy-SM with ``B/2``."""
    bids = _bids(bids)
    _check_sizes(instance, bids)
    val = _submodular_valuation(instance)
    A = active_agents(instance.budget, bids)
    if not A:
        return frozenset()
    istar = best_single_agent(val, A)
    oracle = opt_oracle or _exact_opt_value
    rest = [i for i in A if i != istar]
    if ALPHA_SM_EXACT * val.value(frozenset((istar,))) >= oracle(instance, bids, rest):
        return frozenset((istar,))
    return _greedy_sm_run(val, bids, A, instance.budget / 2)[0]


def _opt_f(spec: CoverageSpec, bids, budget, agents) -> Fraction:
    return solve_coverage_lp(spec, bids, budget, agents).objective


def mechanism_sm_frac(instance: Instance, bids) -> frozenset[int]:
    """Mechanism-SM with the coverage LP optimum in place of the integral one."""
    bids = _bids(bids)
    _check_sizes(instance, bids)
    spec = instance.valuation
    if not isinstance(spec, CoverageSpec):
        raise InputError("mechanism_sm_frac needs a coverage valuation")
    A = active_agents(instance.budget, bids)
    if not A:
        return frozenset()
    istar = best_single_agent(spec, A)
    rest = [i for i in A if i != istar]
    if ALPHA_SM_FRAC * spec.value(frozenset((istar,))) >= _opt_f(spec, bids, instance.budget, rest):
        return frozenset((istar,))
    return _greedy_sm_run(spec, bids, A, instance.budget / 2)[0]


# ---------------------------------------------------------------------------
# Greedy-ISK and its randomized / deterministic wrappers

def _isk_setup(instance: Instance, f: UnbudgetedSolver | None):
    spec = as_independence_system(instance.valuation)
    return spec, (f or spec.default_solver())


def _isk_order(spec: IndependenceSystemSpec, bids, agents) -> list[int]:
    """Descending bid/value, ties by descending bid then ascending id."""
    vals = spec.element_values
    return sorted(agents, key=lambda i: (bids[i] / vals[i], bids[i], -i), reverse=True)


def _greedy_isk_run(spec, f, bids, budget, pool) -> frozenset[int]:
    vals = spec.element_values
    A = [i for i in pool if bids[i] <= budget and vals[i] > 0]
    current = set(A)
    for i in _isk_order(spec, bids, A):
        M = f(spec, current)
        if spec.weight(M) * bids[i] <= budget * vals[i]:
            return M
        current.discard(i)
    return frozenset()


def greedy_isk(instance: Instance, bids, f: UnbudgetedSolver | None = None,
               active: Iterable[int] | None = None) -> frozenset[int]:
    """Greedy-ISK over ``active`` (default: every agent).

    Elements are visited from the worst bid-per-value down. At each step the
    unbudgeted solver picks ``M`` from the still-active elements; ``M`` is
    returned as soon as ``v(M) * b_i / v_i <= B``, otherwise element ``i``
    is dropped.
    """
    bids = _bids(bids)
    _check_sizes(instance, bids)
    spec, f = _isk_setup(instance, f)
    pool = range(instance.n) if active is None else active
    return _greedy_isk_run(spec, f, bids, instance.budget, pool)


def _greedy_isk_candidates(spec, f, bids, budget, pool, agent) -> set[Fraction]:
    """Bids of ``agent`` where the Greedy-ISK outcome can change.

    The others keep their relative order whatever ``agent`` bids, so the
    active sets that can occur are suffixes of that order, with or without
    ``agent``. The outcome flips where the agent's ratio ties another's, or
    where its own stopping test ``v(M) b / v_agent <= B`` becomes tight.
    """
    vals = spec.element_values
    cands = {Fraction(0), budget, bids[agent]}
    if vals[agent] <= 0:
        return cands
    others = _isk_order(spec, bids, [j for j in pool if j != agent
                                     and bids[j] <= budget and vals[j] > 0])
    for j in others:
        cands.add(bids[j] * vals[agent] / vals[j])
    for q in range(len(others) + 1):
        suffix = set(others[q:])
        for active in (suffix, suffix | {agent}):
            w = spec.weight(f(spec, active))
            if w > 0:
                cands.add(budget * vals[agent] / w)
    return cands


def _istar(spec, bids, budget) -> tuple[list[int], int | None]:
    A = [i for i in active_agents(budget, bids) if spec.element_values[i] > 0]
    if not A:
        A = active_agents(budget, bids)
    return A, best_single_agent(spec, A)


def rand_isk_probability(rho) -> Fraction:
    """Probability of returning ``i*``: ``1 / (2 rho + 1)``."""
    return 1 / (2 * Fraction(rho) + 1)


def rand_isk(instance: Instance, bids, f: UnbudgetedSolver | None, coin) -> frozenset[int]:
    """One uniform draw ``u``: ``{i*}`` if ``u < 1/(2 rho + 1)``, else Greedy-ISK."""
    u = coin.draw() if isinstance(coin, CoinSource) else float(coin)
    return _rand_isk_with_draw(instance, _bids(bids), f, u)


def _rand_isk_with_draw(instance, bids, f, u) -> frozenset[int]:
    _check_sizes(instance, bids)
    spec, f = _isk_setup(instance, f)
    A, istar = _istar(spec, bids, instance.budget)
    if istar is None:
        return frozenset()
    if u < rand_isk_probability(f.rho):
        return frozenset((istar,))
    return _greedy_isk_run(spec, f, bids, instance.budget, A)


def det_isk(instance: Instance, bids, f: UnbudgetedSolver | None = None) -> frozenset[int]:
    """``{i*}`` if ``v(i*)`` is at least the value of Greedy-ISK on ``A - i*``,
    otherwise that Greedy-ISK outcome."""
    bids = _bids(bids)
    _check_sizes(instance, bids)
    spec, f = _isk_setup(instance, f)
    A, istar = _istar(spec, bids, instance.budget)
    if istar is None:
        return frozenset()
    G = _greedy_isk_run(spec, f, bids, instance.budget, [i for i in A if i != istar])
    if spec.element_values[istar] >= spec.weight(G):
        return frozenset((istar,))
    return G


def broken_greedy_isk(instance: Instance, bids, f: UnbudgetedSolver | None = None) -> frozenset[int]:
    """Greedy-ISK with the budget test removed: always the first unbudgeted
    solution. Not budget feasible; kept as a negative control for audits."""
    bids = _bids(bids)
    _check_sizes(instance, bids)
    spec, f = _isk_setup(instance, f)
    A = [i for i in active_agents(instance.budget, bids) if spec.element_values[i] > 0]
    return f(spec, A)


# ---------------------------------------------------------------------------
# mechanism objects

class Mechanism:
    """An allocation rule plus what the payment engine needs to price it."""

    name = "mechanism"
    # whether the audit should check p_i <= v_i * B / v(M)
    per_winner_bound = False

    def allocate(self, instance: Instance, bids) -> frozenset[int]:
        raise NotImplementedError

    def candidate_bids(self, instance: Instance, bids, agent: int) -> set[Fraction] | None:
        """All bids of ``agent`` where winning can flip, or None if unknown."""
        return None

    def threshold(self, instance: Instance, bids, agent: int,
                  strict: bool = True) -> tuple[Fraction, bool]:
        """Supremum winning bid of ``agent`` and whether it is exact."""
        bids = _bids(bids)
        budget = instance.budget

        def win(b):
            return agent in self.allocate(instance, _with_bid(bids, agent, b))

        cands = self.candidate_bids(instance, bids, agent)
        if cands is None:
            return bisect_threshold(win, Fraction(0), budget, budget, agent), False
        return scan_threshold(win, cands, budget, agent, strict=strict), True

    def __call__(self, instance, bids):
        return self.allocate(instance, bids)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class GreedySM(Mechanism):
    name = "greedy-sm"

    def allocate(self, instance, bids):
        return greedy_sm(instance, bids)

    def candidate_bids(self, instance, bids, agent):
        val = _submodular_valuation(instance)
        return _greedy_sm_candidates(val, _bids(bids), range(instance.n), agent,
                                     instance.budget / 2, instance.budget)


class _SMBranching(Mechanism):
    """Shared pricing for the two ``i*``-versus-greedy mechanisms.

    Winning means: the branch test sends the run to Greedy-SM and the agent
    wins there, or the agent is ``i*`` and the test returns it. Both parts
    are monotone, so the threshold is the smaller of the two thresholds.
    """

    def _istar_wins_branch(self, instance, bids, A, istar) -> bool:
        raise NotImplementedError

    def _branch_threshold(self, instance, bids, A, istar, agent,
                          upper: Fraction) -> tuple[Fraction, bool]:
        raise NotImplementedError

    def threshold(self, instance, bids, agent, strict=True):
        bids = _bids(bids)
        budget = instance.budget
        val = instance.valuation
        A = active_agents(budget, bids)
        if agent not in A:
            raise InputError(f"agent {agent} is not active")
        istar = best_single_agent(val, A)
        if agent == istar and self._istar_wins_branch(instance, bids, A, istar):
            return budget, True

        def greedy_win(b):
            return agent in _greedy_sm_run(val, _with_bid(bids, agent, b), A, budget / 2)[0]

        cands = _greedy_sm_candidates(val, bids, A, agent, budget / 2, budget)
        t_greedy = scan_threshold(greedy_win, cands, budget, agent, strict=strict)
        if agent == istar:
            return t_greedy, True
        return self._branch_threshold(instance, bids, A, istar, agent, t_greedy)


class MechanismSMExact(_SMBranching):
    name = "sm-exact"

    def allocate(self, instance, bids):
        return mechanism_sm_exact(instance, bids)

    def _istar_wins_branch(self, instance, bids, A, istar):
        rest = [i for i in A if i != istar]
        v_star = instance.valuation.value(frozenset((istar,)))
        return ALPHA_SM_EXACT * v_star >= _exact_opt_value(instance, bids, rest)

    def _branch_threshold(self, instance, bids, A, istar, agent, upper):
        # OPT(A - i*) as a function of the agent's bid b is the better of the
        # best set without the agent and v(S + agent) over S with
        # c(S) <= B - b, so the branch test flips exactly at some B - c(S).
        val = instance.valuation
        budget = instance.budget
        target = ALPHA_SM_EXACT * val.value(frozenset((istar,)))
        others = [i for i in A if i not in (istar, agent)]
        if _exact_opt_value(instance, bids, others) > target:
            return upper, True
        best = None
        for r in range(len(others) + 1):
            for S in itertools.combinations(others, r):
                cost = sum((bids[i] for i in S), Fraction(0))
                if cost <= budget and val.value(frozenset(S) | {agent}) > target:
                    cut = budget - cost
                    if best is None or cut > best:
                        best = cut
        if best is None:
            raise InputError(f"agent {agent} cannot win the greedy branch")
        return min(upper, best), True


class MechanismSMFrac(_SMBranching):
    name = "sm-frac"

    def allocate(self, instance, bids):
        return mechanism_sm_frac(instance, bids)

    def _istar_wins_branch(self, instance, bids, A, istar):
        rest = [i for i in A if i != istar]
        v_star = instance.valuation.value(frozenset((istar,)))
        return ALPHA_SM_FRAC * v_star >= _opt_f(instance.valuation, bids, instance.budget, rest)

    def _branch_threshold(self, instance, bids, A, istar, agent, upper):
        spec = instance.valuation
        budget = instance.budget
        target = ALPHA_SM_FRAC * spec.value(frozenset((istar,)))
        rest = [i for i in A if i != istar]

        def branch(b):
            return _opt_f(spec, _with_bid(bids, agent, b), budget, rest) > target

        # the LP optimum is nonincreasing in the bid; if the branch still goes
        # to the greedy at the greedy threshold, that threshold is the answer
        if branch(upper):
            return upper, True
        return bisect_threshold(branch, Fraction(0), upper, budget, agent), False


class _ISKMechanism(Mechanism):
    def __init__(self, f: UnbudgetedSolver | None = None):
        self.f = f

    def _setup(self, instance):
        return _isk_setup(instance, self.f)


class GreedyISK(_ISKMechanism):
    name = "greedy-isk"
    per_winner_bound = True

    def allocate(self, instance, bids):
        return greedy_isk(instance, bids, self.f)

    def candidate_bids(self, instance, bids, agent):
        spec, f = self._setup(instance)
        return _greedy_isk_candidates(spec, f, _bids(bids), instance.budget,
                                      range(instance.n), agent)


class DetISK(_ISKMechanism):
    name = "det-isk"

    def allocate(self, instance, bids):
        return det_isk(instance, bids, self.f)

    def candidate_bids(self, instance, bids, agent):
        spec, f = self._setup(instance)
        bids = _bids(bids)
        A, istar = _istar(spec, bids, instance.budget)
        if agent == istar:
            return {Fraction(0), instance.budget}
        pool = [i for i in A if i != istar]
        return _greedy_isk_candidates(spec, f, bids, instance.budget, pool, agent)


class RandISK(_ISKMechanism):
    """Rand-ISK with its coin already drawn: a deterministic mechanism.

    Auditing it for both kinds of draw covers the whole distribution.
    """

    name = "rand-isk"

    def __init__(self, u: float, f: UnbudgetedSolver | None = None):
        super().__init__(f)
        self.u = u

    @classmethod
    def from_coin(cls, coin: CoinSource, f=None):
        return cls(coin.draw(), f)

    def allocate(self, instance, bids):
        return _rand_isk_with_draw(instance, _bids(bids), self.f, self.u)

    def candidate_bids(self, instance, bids, agent):
        spec, f = self._setup(instance)
        bids = _bids(bids)
        if self.u < rand_isk_probability(f.rho):
            return {Fraction(0), instance.budget}
        A, _ = _istar(spec, bids, instance.budget)
        return _greedy_isk_candidates(spec, f, bids, instance.budget, A, agent)


class BrokenGreedyISK(_ISKMechanism):
    name = "broken-greedy"

    def allocate(self, instance, bids):
        return broken_greedy_isk(instance, bids, self.f)

    def candidate_bids(self, instance, bids, agent):
        return {Fraction(0), instance.budget}


SUBMODULAR_MECHANISMS = ("greedy-sm", "sm-exact", "sm-frac")
ISK_MECHANISMS = ("greedy-isk", "rand-isk", "det-isk", "broken-greedy")
MECHANISM_NAMES = SUBMODULAR_MECHANISMS + ISK_MECHANISMS


def get_mechanism(name: str, seed: int | None = None,
                  f: UnbudgetedSolver | None = None) -> Mechanism:
    if name == "greedy-sm":
        return GreedySM()
    if name == "sm-exact":
        return MechanismSMExact()
    if name == "sm-frac":
        return MechanismSMFrac()
    if name == "greedy-isk":
        return GreedyISK(f)
    if name == "det-isk":
        return DetISK(f)
    if name == "broken-greedy":
        return BrokenGreedyISK(f)
    if name == "rand-isk":
        if seed is None:
            raise InputError("rand-isk needs an explicit seed")
        return RandISK.from_coin(CoinSource(seed), f)
    raise InputError(f"unknown mechanism {name!r}")


def outcome_value(instance: Instance, winners: Iterable[int]) -> Fraction:
    return evaluate(instance.valuation, winners)
