"""Threshold payments and property audits.

Payments follow the single-parameter characterization: a winner is paid the
largest bid at which it would still have won, given the other bids. Utility
is quasilinear (payment minus true cost for winners, zero for losers).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .core import InputError, Instance, Outcome, as_rational
from .mechanisms import Mechanism, _with_bid
from .thresholds import BISECTION_BITS, NonMonotoneError


def _bids(instance, bids):
    bids = instance.costs if bids is None else bids
    return tuple(as_rational(b) for b in bids)


def threshold_payment(mechanism: Mechanism, instance: Instance, bids, winner_id: int) -> Fraction:
    """Supremum bid at which ``winner_id`` still wins.

    Raises :class:`InputError` for a non-winner and
    :class:`~budgetfeasible.thresholds.NonMonotoneError` if the allocation is
    caught winning at a higher bid after losing at a lower one.
    """
    bids = _bids(instance, bids)
    if winner_id not in mechanism.allocate(instance, bids):
        raise InputError(f"agent {winner_id} does not win")
    return mechanism.threshold(instance, bids, winner_id)[0]


def run_with_payments(mechanism: Mechanism, instance: Instance, bids=None,
                      strict: bool = True) -> Outcome:
    bids = _bids(instance, bids)
    winners = frozenset(mechanism.allocate(instance, bids))
    payments = {i: Fraction(0) for i in range(instance.n)}
    exact = True
    for i in sorted(winners):
        p, ok = mechanism.threshold(instance, bids, i, strict=strict)
        payments[i] = p
        exact = exact and ok
    value = instance.valuation.value(winners)
    return Outcome(winners, payments, value, exact)


# ---------------------------------------------------------------------------
# audits

@dataclass(frozen=True)
class CheckResult:
    property: str
    passed: bool
    counterexample: Any = None


@dataclass
class AuditReport:
    mechanism: str
    instance_digest: str
    checks: list[CheckResult] = field(default_factory=list)
    payment_total: Fraction = Fraction(0)
    budget: Fraction = Fraction(0)
    exact: bool = True

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, prop, counterexample=None):
        self.checks.append(CheckResult(prop, counterexample is None, counterexample))


def instance_digest(instance: Instance) -> str:
    from .instances import instance_to_dict

    blob = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def bid_grid(instance: Instance, bids, agent: int, grid_size: int) -> list[Fraction]:
    """Uniform grid on ``[0, B]`` plus every ratio breakpoint ``b_j v_i / v_j``,
    the agent's own bid, and one bid just above ``B``."""
    B = instance.budget
    pts = {B * k / grid_size for k in range(grid_size + 1)} if grid_size > 0 else {B}
    pts.add(bids[agent])
    pts.add(B + B / max(grid_size, 1))
    val = instance.valuation
    vi = val.value(frozenset((agent,)))
    for j in range(instance.n):
        if j == agent:
            continue
        vj = val.value(frozenset((j,)))
        if vj > 0:
            pts.add(bids[j] * vi / vj)
    return sorted(p for p in pts if p >= 0)


def audit(mechanism: Mechanism, instance: Instance, bid_grid_size: int = 8,
          bids=None) -> AuditReport:
    """Check monotonicity, individual rationality, budget feasibility, grid
    truthfulness and (where declared) the per-winner payment bound.

    ``bids`` defaults to the true costs; truthfulness is checked with those
    as the private costs. Failures are recorded, never raised.
    """
    costs = _bids(instance, bids)
    B = instance.budget
    report = AuditReport(mechanism.name, instance_digest(instance), budget=B)

    # (a) monotonicity along each agent's grid
    grids = {i: bid_grid(instance, costs, i, bid_grid_size) for i in range(instance.n)}
    wins_on_grid = {}
    mono_bad = None
    for i, grid in grids.items():
        row = [i in mechanism.allocate(instance, _with_bid(costs, i, b)) for b in grid]
        wins_on_grid[i] = row
        for k in range(len(grid) - 1):
            if not row[k] and row[k + 1] and mono_bad is None:
                mono_bad = {"agent": i, "loses_at": grid[k], "wins_at": grid[k + 1]}
    report.add("monotonicity", mono_bad)

    try:
        outcome = run_with_payments(mechanism, instance, costs)
    except NonMonotoneError as exc:
        report.add("payments", {"agent": exc.agent, "loses_at": exc.low_bid,
                                "wins_at": exc.high_bid})
        return report
    report.exact = outcome.exact
    report.payment_total = outcome.total_payment

    # (b) individual rationality
    ir_bad = None
    for i in sorted(outcome.winners):
        if outcome.payments[i] < costs[i]:
            ir_bad = {"agent": i, "bid": costs[i], "payment": outcome.payments[i]}
            break
    if ir_bad is None:
        losers_paid = [i for i, p in outcome.payments.items()
                       if i not in outcome.winners and p != 0]
        if losers_paid:
            ir_bad = {"nonzero_loser_payment": losers_paid}
    report.add("individual_rationality", ir_bad)

    # (c) budget feasibility, exact unless some payment came from bisection
    slack = Fraction(0) if outcome.exact else instance.n * B / (1 << BISECTION_BITS)
    budget_bad = None
    if outcome.total_payment > B + slack:
        budget_bad = {"total_payment": outcome.total_payment, "budget": B,
                      "payments": {i: outcome.payments[i] for i in sorted(outcome.winners)}}
    report.add("budget_feasibility", budget_bad)

    # (d) no grid deviation beats truth-telling
    truth_bad = None
    for i, grid in grids.items():
        u_truth = outcome.payments[i] - costs[i] if i in outcome.winners else Fraction(0)
        for b, won in zip(grid, wins_on_grid[i]):
            if not won:
                continue
            dev_bids = _with_bid(costs, i, b)
            p, exact = mechanism.threshold(instance, dev_bids, i, strict=False)
            u_dev = p - costs[i]
            tol = Fraction(0) if exact and outcome.exact else B / (1 << (BISECTION_BITS - 2))
            if u_dev > u_truth + tol:
                truth_bad = {"agent": i, "cost": costs[i], "deviation": b,
                             "utility_truthful": u_truth, "utility_deviation": u_dev}
                break
        if truth_bad:
            break
    report.add("truthfulness", truth_bad)

    # (e) p_i <= v_i * B / v(M)
    if mechanism.per_winner_bound and outcome.winners:
        vM = outcome.value
        bound_bad = None
        for i in sorted(outcome.winners):
            vi = instance.valuation.value(frozenset((i,)))
            if outcome.payments[i] * vM > vi * B:
                bound_bad = {"agent": i, "payment": outcome.payments[i], "bound": vi * B / vM}
                break
        report.add("per_winner_bound", bound_bad)
    return report
