import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from budgetfeasible import (
    CoinSource,
    CoverageSpec,
    IndependenceSystemSpec,
    InputError,
    RandISK,
    det_isk,
    generate,
    get_mechanism,
    greedy_isk,
    greedy_sm,
    mechanism_sm_exact,
    mechanism_sm_frac,
    rand_isk,
    sm_constants,
    tight_instance,
)
from budgetfeasible.mechanisms import (
    ALPHA_SM_EXACT,
    ALPHA_SM_FRAC,
    COVERAGE_GAP,
    MECHANISM_NAMES,
    rand_isk_probability,
)

from helpers import make_instance

F_ = Fraction


def disjoint_edges(values):
    n = len(values)
    return IndependenceSystemSpec.matching(2 * n, [(2 * i, 2 * i + 1) for i in range(n)], values)


# -- constants ----------------------------------------------------------------

def test_sm_constants_rho_one():
    c = sm_constants(1)
    e = math.e
    assert c.gamma == pytest.approx(math.sqrt(1 + 24 * e * e))
    assert c.alpha == pytest.approx((1 + 4 * e + math.sqrt(1 + 24 * e * e)) / (2 * (e - 1)))
    assert abs(c.ratio - 8.34) <= 0.005
    assert ALPHA_SM_EXACT == F_(c.alpha)


def test_sm_constants_coverage_gap():
    c = sm_constants(COVERAGE_GAP)
    assert c.ratio == pytest.approx(15.70806, abs=1e-5)
    assert c.ratio == pytest.approx(c.alpha + 1)
    assert ALPHA_SM_FRAC == F_(c.alpha)


def test_sm_constants_rejects_small_rho():
    with pytest.raises(InputError):
        sm_constants(F_(1, 2))


# -- Greedy-SM ----------------------------------------------------------------

def test_greedy_sm_hand_trace():
    spec = CoverageSpec(3, (frozenset({0, 1}), frozenset({2})), (1, 1, 1))
    inst = make_instance(spec, [1, 1], 2)
    assert greedy_sm(inst, inst.costs) == {0}


def test_greedy_sm_trivial():
    spec = CoverageSpec(1, (frozenset({0}),), (1,))
    assert greedy_sm(make_instance(spec, [1], 2), (F_(1),)) == {0}
    assert greedy_sm(make_instance(spec, [3], 2), (F_(3),)) == frozenset()


def reference_greedy_sm(val, bids, budget):
    """Straight transcription: pick max marginal/bid, stop at the first
    agent failing b_k <= (B/2) marg / v(S+k)."""
    half = budget / 2
    S = frozenset()
    rest = {i for i, b in enumerate(bids) if b <= budget}
    while rest:
        def key(i):
            m = val.value(S | {i}) - val.value(S)
            r = math.inf if bids[i] == 0 else m / bids[i]
            return (r if m > 0 else -1, -bids[i], -i)
        k = max(rest, key=key)
        marg = val.value(S | {k}) - val.value(S)
        if marg <= 0:
            rest.discard(k)
            continue
        if bids[k] * val.value(S | {k}) > half * marg:
            break
        S = S | {k}
        rest.discard(k)
    return S


@pytest.mark.parametrize("seed", range(40))
def test_greedy_sm_matches_reference(seed):
    inst = generate("coverage", 1 + seed % 8, seed)
    assert greedy_sm(inst, inst.costs) == reference_greedy_sm(inst.valuation, inst.costs,
                                                              inst.budget)


@pytest.mark.parametrize("family", ["knapsack", "forest", "partition-matroid"])
def test_greedy_sm_accepts_submodular_systems(family):
    inst = generate(family, 6, 1)
    greedy_sm(inst, inst.costs)


def test_greedy_sm_rejects_matching():
    inst = tight_instance()
    with pytest.raises(InputError):
        greedy_sm(inst, inst.costs)


# -- Mechanism-SM -------------------------------------------------------------

def brute_opt(val, bids, budget, agents):
    best = F_(0)
    for r in range(len(agents) + 1):
        for S in itertools.combinations(agents, r):
            if sum((bids[i] for i in S), F_(0)) <= budget:
                best = max(best, val.value(frozenset(S)))
    return best


def test_sm_exact_single_and_empty():
    spec = CoverageSpec(1, (frozenset({0}),), (3,))
    assert mechanism_sm_exact(make_instance(spec, [1], 2), (F_(1),)) == {0}
    assert mechanism_sm_exact(make_instance(spec, [5], 2), (F_(5),)) == frozenset()


@pytest.mark.parametrize("seed", range(40))
def test_sm_exact_branch_decided_by_exact_opt(seed):
    inst = generate("coverage", 5, seed)
    val, bids, B = inst.valuation, inst.costs, inst.budget
    A = [i for i in range(inst.n) if bids[i] <= B]
    istar = min(A, key=lambda i: (-val.value(frozenset({i})), i))
    rest_opt = brute_opt(val, bids, B, [i for i in A if i != istar])
    expected = ({istar} if ALPHA_SM_EXACT * val.value(frozenset({istar})) >= rest_opt
                else reference_greedy_sm(val, bids, B))
    assert mechanism_sm_exact(inst, bids) == expected


def test_sm_frac_examples():
    single = CoverageSpec(1, (frozenset({0}),), (2,))
    assert mechanism_sm_frac(make_instance(single, [1], 1), (F_(1),)) == {0}
    two = CoverageSpec(2, (frozenset({0}), frozenset({1})), (10, 1))
    assert mechanism_sm_frac(make_instance(two, [1, 1], 2), (F_(1), F_(1))) == {0}


def test_sm_frac_greedy_branch():
    # sixteen disjoint unit sets: OPT_f without i* is 15 > alpha * 1
    n = 16
    spec = CoverageSpec(n, tuple(frozenset({j}) for j in range(n)), (1,) * n)
    inst = make_instance(spec, [1] * n, n)
    assert ALPHA_SM_FRAC < 15
    assert mechanism_sm_frac(inst, inst.costs) == greedy_sm(inst, inst.costs)


def test_sm_frac_needs_coverage():
    inst = generate("knapsack", 4, 0)
    with pytest.raises(InputError):
        mechanism_sm_frac(inst, inst.costs)


# -- Greedy-ISK family --------------------------------------------------------

def test_greedy_isk_tight_trace():
    inst = tight_instance()
    assert greedy_isk(inst, inst.costs, active=[1, 2, 3]) == {3}
    assert det_isk(inst, inst.costs) == {0}


def test_greedy_isk_small_examples():
    one = make_instance(IndependenceSystemSpec.free((5,)), [2], 10)
    assert greedy_isk(one, one.costs) == {0}
    two = make_instance(disjoint_edges([3, 2]), [1, 1], 100)
    assert greedy_isk(two, two.costs) == {0, 1}


def test_greedy_isk_drops_zero_values_and_expensive():
    inst = make_instance(IndependenceSystemSpec.free((0, 3, 4)), [1, 1, 50], 10)
    assert greedy_isk(inst, inst.costs) == {1}


def reference_greedy_isk(spec, f, bids, B, pool):
    A = [i for i in pool if bids[i] <= B and spec.element_values[i] > 0]
    order = sorted(A, key=lambda i: (bids[i] / spec.element_values[i], bids[i], -i),
                   reverse=True)
    for i in order:
        M = f(spec, A)
        if spec.weight(M) * bids[i] / spec.element_values[i] <= B:
            return M
        A.remove(i)
    return frozenset()


@pytest.mark.parametrize("family", ["knapsack", "matching", "forest", "independent-set",
                                    "kd-matching"])
@pytest.mark.parametrize("seed", range(12))
def test_greedy_isk_matches_reference(family, seed):
    from budgetfeasible.indsys import as_independence_system

    inst = generate(family, 1 + seed % 9, seed)
    spec = as_independence_system(inst.valuation)
    f = spec.default_solver()
    assert greedy_isk(inst, inst.costs) == reference_greedy_isk(
        spec, f, inst.costs, inst.budget, range(inst.n))


def test_det_isk_examples():
    inst = make_instance(disjoint_edges([4, 3, 3]), [1, 1, 1], 100)
    assert det_isk(inst, inst.costs) == {1, 2}
    single = make_instance(IndependenceSystemSpec.free((2,)), [1], 1)
    assert det_isk(single, single.costs) == {0}


def test_rand_isk_branches():
    inst = make_instance(disjoint_edges([4, 3, 3]), [1, 1, 1], 100)
    assert rand_isk(inst, inst.costs, None, 0.0) == {0}
    assert rand_isk(inst, inst.costs, None, 0.5) == {0, 1, 2}
    assert rand_isk_probability(1) == F_(1, 3)
    assert rand_isk_probability(3) == F_(1, 7)


def test_coin_source_is_deterministic():
    c = CoinSource(11)
    assert c.draw() == c.draw() == CoinSource(11).draw()
    assert 0 <= c.draw(3) < 1
    # seeds landing in each branch exist and are stable
    low = next(s for s in range(100) if CoinSource(s).draw() < 1 / 3)
    high = next(s for s in range(100) if CoinSource(s).draw() >= 1 / 3)
    inst = make_instance(disjoint_edges([4, 3, 3]), [1, 1, 1], 100)
    assert rand_isk(inst, inst.costs, None, CoinSource(low)) == {0}
    assert rand_isk(inst, inst.costs, None, CoinSource(high)) == {0, 1, 2}


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["knapsack", "matching", "forest", "partition-matroid"]),
       st.integers(0, 10 ** 6), st.integers(1, 7), st.integers(0, 6), st.integers(1, 40))
def test_greedy_isk_output_stability(family, seed, size, agent, num):
    """If an agent wins under two bids, the winner set is the same."""
    inst = generate(family, size, seed)
    agent %= inst.n
    bids = inst.costs
    other = bids.replace(agent, F_(num, 4))
    a, b = greedy_isk(inst, bids), greedy_isk(inst, other)
    if agent in a and agent in b:
        assert a == b


def test_registry():
    assert set(MECHANISM_NAMES) >= {"greedy-sm", "sm-exact", "sm-frac", "greedy-isk",
                                    "rand-isk", "det-isk"}
    with pytest.raises(InputError):
        get_mechanism("rand-isk")
    with pytest.raises(InputError):
        get_mechanism("nope")
    m = get_mechanism("rand-isk", seed=4)
    assert isinstance(m, RandISK) and m.u == CoinSource(4).draw()
