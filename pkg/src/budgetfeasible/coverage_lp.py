"""LP relaxation of budgeted weighted coverage and pipage rounding.

The relaxation is

    maximize    sum_j w_j z_j
    subject to  z_j <= sum_{i in T_j} x_i      for every element j
                sum_i c_i x_i <= B
                0 <= x_i, z_j <= 1

Small programs are solved exactly over rationals with a dense tableau
simplex (Bland's rule); larger ones go to HiGHS through scipy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import InputError
from .valuations import CoverageSpec, coverage_value

EXACT_SIZE_LIMIT = 64
FEAS_TOL = 1e-9


class LPSolverError(RuntimeError):
    pass


def simplex_max(c: Sequence[Fraction], A: Sequence[Sequence[Fraction]],
                b: Sequence[Fraction]) -> tuple[list[Fraction], Fraction]:
    """Maximize ``c.x`` subject to ``A x <= b``, ``x >= 0`` with ``b >= 0``.

    The slack basis is feasible at the origin, so no phase one is needed.
    Bland's rule rules out cycling on the degenerate rows.
    """
    m, n = len(A), len(c)
    if any(bi < 0 for bi in b):
        raise InputError("simplex_max needs a nonnegative right-hand side")
    width = n + m
    T = []
    for r in range(m):
        row = [Fraction(0)] * (width + 1)
        for j, a in enumerate(A[r]):
            row[j] = Fraction(a)
        row[n + r] = Fraction(1)
        row[width] = Fraction(b[r])
        T.append(row)
    obj = [-Fraction(cj) for cj in c] + [Fraction(0)] * (m + 1)
    basis = list(range(n, n + m))

    while True:
        enter = next((j for j in range(width) if obj[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for r in range(m):
            a = T[r][enter]
            if a > 0:
                ratio = T[r][width] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    leave, best = r, ratio
        if leave is None:
            raise LPSolverError("LP is unbounded")
        prow = T[leave]
        piv = prow[enter]
        if piv != 1:
            prow = [v / piv for v in prow]
            T[leave] = prow
        nz = [j for j, v in enumerate(prow) if v]
        for r in range(m):
            if r == leave:
                continue
            f = T[r][enter]
            if f:
                row = T[r]
                for j in nz:
                    row[j] -= f * prow[j]
        f = obj[enter]
        for j in nz:
            obj[j] -= f * prow[j]
        basis[leave] = enter

    x = [Fraction(0)] * n
    for r, var in enumerate(basis):
        if var < n:
            x[var] = T[r][width]
    return x, obj[width]


@dataclass(frozen=True)
class FractionalSolution:
    x: tuple
    z: tuple
    objective: Fraction | float
    exact: bool = True


def _lp_data(spec: CoverageSpec, bids, budget, agents):
    sets = sorted(agents)
    for i in sets:
        if bids[i] > budget:
            raise InputError(f"set {i} costs more than the budget; filter it first")
    pos = {i: k for k, i in enumerate(sets)}
    T = spec.covering_sets
    elems = [j for j in range(spec.num_elements)
             if spec.weights[j] > 0 and any(i in pos for i in T[j])]
    return sets, pos, T, elems


def solve_coverage_lp(spec: CoverageSpec, bids: Sequence[Fraction], budget: Fraction,
                      agents: Iterable[int] | None = None,
                      exact: bool | None = None) -> FractionalSolution:
    """Optimal fractional solution over the sets in ``agents`` (default: all).

    Sets outside ``agents`` are fixed at ``x_i = 0``.
    """
    agents = range(spec.ground_size) if agents is None else agents
    sets, pos, T, elems = _lp_data(spec, bids, budget, agents)
    ms, ne = len(sets), len(elems)
    if exact is None:
        exact = ms + ne <= EXACT_SIZE_LIMIT
    if exact:
        return _solve_exact(spec, bids, budget, sets, pos, T, elems)
    return _solve_float(spec, bids, budget, sets, pos, T, elems)


def _solve_exact(spec, bids, budget, sets, pos, T, elems) -> FractionalSolution:
    ms, ne = len(sets), len(elems)
    nv = ms + ne
    A, b = [], []
    for k, j in enumerate(elems):
        row = [Fraction(0)] * nv
        row[ms + k] = Fraction(1)
        for i in T[j]:
            if i in pos:
                row[pos[i]] = Fraction(-1)
        A.append(row)
        b.append(Fraction(0))
    A.append([Fraction(bids[i]) for i in sets] + [Fraction(0)] * ne)
    b.append(Fraction(budget))
    for v in range(nv):
        row = [Fraction(0)] * nv
        row[v] = Fraction(1)
        A.append(row)
        b.append(Fraction(1))
    c = [Fraction(0)] * ms + [spec.weights[j] for j in elems]
    sol, objective = simplex_max(c, A, b)
    x = [Fraction(0)] * spec.ground_size
    z = [Fraction(0)] * spec.num_elements
    for i in sets:
        x[i] = sol[pos[i]]
    for k, j in enumerate(elems):
        z[j] = sol[ms + k]
    return FractionalSolution(tuple(x), tuple(z), objective, exact=True)


def _solve_float(spec, bids, budget, sets, pos, T, elems) -> FractionalSolution:
    import numpy as np
    from scipy.optimize import linprog

    ms, ne = len(sets), len(elems)
    nv = ms + ne
    A = np.zeros((ne + 1, nv))
    for k, j in enumerate(elems):
        A[k, ms + k] = 1.0
        for i in T[j]:
            if i in pos:
                A[k, pos[i]] = -1.0
    A[ne, :ms] = [float(bids[i]) for i in sets]
    rhs = np.zeros(ne + 1)
    rhs[ne] = float(budget)
    c = np.zeros(nv)
    c[ms:] = [-float(spec.weights[j]) for j in elems]
    res = linprog(c, A_ub=A, b_ub=rhs, bounds=[(0.0, 1.0)] * nv, method="highs")
    if res.status != 0:
        raise LPSolverError(f"HiGHS failed: {res.message}")
    x = [0.0] * spec.ground_size
    z = [0.0] * spec.num_elements
    for i in sets:
        x[i] = float(res.x[pos[i]])
    for k, j in enumerate(elems):
        z[j] = float(res.x[ms + k])
    return FractionalSolution(tuple(x), tuple(z), float(-res.fun), exact=False)


def potential_F(spec: CoverageSpec, x: Sequence) -> Fraction | float:
    """``sum_j w_j (1 - prod_{i in T_j} (1 - x_i))``; exact when ``x`` is."""
    total = 0
    for j, Tj in enumerate(spec.covering_sets):
        prod = 1
        for i in Tj:
            prod *= 1 - x[i]
        total += spec.weights[j] * (1 - prod)
    return total


def bound_L(spec: CoverageSpec, x: Sequence) -> Fraction | float:
    """``sum_j w_j min(1, sum_{i in T_j} x_i)``."""
    total = 0
    for j, Tj in enumerate(spec.covering_sets):
        total += spec.weights[j] * min(1, sum(x[i] for i in Tj))
    return total


def _is_fractional(v) -> bool:
    return 0 < v < 1


def _snap(v):
    if isinstance(v, float):
        if abs(v) <= 1e-12:
            return 0.0
        if abs(v - 1.0) <= 1e-12:
            return 1.0
        return min(1.0, max(0.0, v))
    return v


def pipage_round(spec: CoverageSpec, costs: Sequence, budget, x: Sequence) -> list:
    """Reduce ``x`` to at most one fractional coordinate without lowering F.

    Each step takes the two lowest-index fractional coordinates ``i, j`` and
    moves along ``(+1, -c_i/c_j)``, which keeps ``sum c x`` fixed. F is
    convex along that line, so the better endpoint (left on ties) is optimal.
    Works in exact arithmetic when ``x`` holds Fractions.
    """
    x = [_snap(v) for v in x]
    # a free fractional coordinate can go straight to 1: F is nondecreasing
    for i, v in enumerate(x):
        if _is_fractional(v) and costs[i] == 0:
            x[i] = type(v)(1)
    while True:
        frac = [i for i, v in enumerate(x) if _is_fractional(v)]
        if len(frac) < 2:
            return x
        i, j = frac[0], frac[1]
        ci, cj = costs[i], costs[j]
        if not isinstance(x[i], float):
            ci, cj = Fraction(ci), Fraction(cj)
        else:
            ci, cj = float(ci), float(cj)
        xi, xj = x[i], x[j]
        # (value of eps, coordinate that lands on an integer, that integer)
        lo_opts = [(-xi, i, 0), ((xj - 1) * cj / ci, j, 1)]
        hi_opts = [(1 - xi, i, 1), (xj * cj / ci, j, 0)]
        lo = max(lo_opts, key=lambda t: t[0])
        hi = min(hi_opts, key=lambda t: t[0])

        def moved(end):
            eps, which, target = end
            y = list(x)
            y[i] = _snap(xi + eps)
            y[j] = _snap(xj - eps * ci / cj)
            y[which] = type(xi)(target)
            return y

        left, right = moved(lo), moved(hi)
        x = right if potential_F(spec, right) > potential_F(spec, left) else left


def resolve_last_fractional(spec: CoverageSpec, costs: Sequence, budget,
                            x: Sequence) -> frozenset[int]:
    """Better of rounding the lone fractional coordinate down, or taking it alone."""
    frac = [i for i, v in enumerate(x) if _is_fractional(_snap(v))]
    if len(frac) > 1:
        raise InputError("more than one fractional coordinate; run pipage_round first")
    rounded_down = frozenset(i for i, v in enumerate(x) if _snap(v) == 1)
    if not frac:
        return rounded_down
    alone = frozenset(frac)
    if coverage_value(spec, alone) > coverage_value(spec, rounded_down):
        return alone
    return rounded_down


def round_coverage_lp(spec: CoverageSpec, bids: Sequence[Fraction], budget: Fraction,
                      agents: Iterable[int] | None = None):
    """LP, pipage rounding, then the last-coordinate fix: an integral solution
    whose value is at least ``(e-1)/(2e)`` times the LP optimum."""
    sol = solve_coverage_lp(spec, bids, budget, agents)
    xr = pipage_round(spec, bids, budget, sol.x)
    return resolve_last_fractional(spec, bids, budget, xr), sol


def integrality_gap_bound() -> float:
    return 2 * math.e / (math.e - 1)
