"""Locating the supremum of a monotone win predicate over ``[0, B]``."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable

BISECTION_BITS = 60


class NonMonotoneError(RuntimeError):
    """The agent wins at ``high_bid`` but loses at the lower ``low_bid``."""

    def __init__(self, agent, low_bid, high_bid):
        super().__init__(
            f"agent {agent} loses at bid {low_bid} but wins at higher bid {high_bid}")
        self.agent, self.low_bid, self.high_bid = agent, low_bid, high_bid


def _points(candidates: Iterable[Fraction], budget: Fraction) -> list[Fraction]:
    """Candidates inside ``[0, B]`` interleaved with the midpoints between them.

    Even positions hold candidates, odd positions midpoints.
    """
    cands = sorted({Fraction(c) for c in candidates if 0 <= c <= budget} | {Fraction(0), budget})
    pts = [cands[0]]
    for a, b in zip(cands, cands[1:]):
        pts.append((a + b) / 2)
        pts.append(b)
    return pts


def _sup_from_first_loss(pts: list[Fraction], first_loss: int) -> Fraction:
    before = first_loss - 1
    return pts[before] if before % 2 == 0 else pts[first_loss]


def scan_threshold(win: Callable[[Fraction], bool], candidates: Iterable[Fraction],
                   budget: Fraction, agent=None, strict: bool = True) -> Fraction:
    """Exact threshold when ``candidates`` contains every breakpoint of ``win``.

    Between consecutive breakpoints the predicate is constant, so testing each
    candidate and each midpoint pins down the supremum. With ``strict`` every
    point is evaluated and any loss-then-win pattern raises
    :class:`NonMonotoneError`; otherwise a binary search over the same points
    is used.
    """
    pts = _points(candidates, budget)
    if strict:
        wins = [win(p) for p in pts]
        first_loss = None
        for k, w in enumerate(wins):
            if not w and first_loss is None:
                first_loss = k
            elif w and first_loss is not None:
                raise NonMonotoneError(agent, pts[first_loss], pts[k])
        if first_loss is None:
            return budget
        if first_loss == 0:
            raise NonMonotoneError(agent, pts[0], None)
        return _sup_from_first_loss(pts, first_loss)

    if win(pts[-1]):
        return budget
    if not win(pts[0]):
        raise NonMonotoneError(agent, pts[0], None)
    lo, hi = 0, len(pts) - 1  # win at lo, loss at hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if win(pts[mid]):
            lo = mid
        else:
            hi = mid
    return _sup_from_first_loss(pts, hi)


def bisect_threshold(win: Callable[[Fraction], bool], lo: Fraction, hi: Fraction,
                     budget: Fraction, agent=None) -> Fraction:
    """Dyadic bisection down to width ``B * 2**-60``.

    Requires ``win(lo)``. Returns the upper end of the final bracket, a
    certified losing bid (or ``hi`` itself when it wins), so the result never
    undershoots the true supremum.
    """
    if not win(lo):
        raise NonMonotoneError(agent, lo, None)
    if win(hi):
        return hi
    width = budget / (1 << BISECTION_BITS)
    while hi - lo > width:
        mid = (lo + hi) / 2
        if win(mid):
            lo = mid
        else:
            hi = mid
    return hi
