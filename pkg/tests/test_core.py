import math
import random

import pytest
from hypothesis import given, strategies as st

from linesynth.core import (Candidate, CandidateList, DownWeightTable, OutcomeKind, ProblemInstance,
                            PseudocodeLine, Selection, StructuralError, TestCase, TrialOutcome, Visibility,
                            effective_log_prob, selection_log_prob)


def grid_lists(grid):
    return [CandidateList.from_scored(i, [(f"c{i}_{r}", lp) for r, lp in enumerate(lps, 1)])
            for i, lps in enumerate(grid, 1)]


descending = st.lists(st.floats(-20, 0, allow_nan=False), min_size=1, max_size=5).map(
    lambda xs: sorted(xs, reverse=True))


def test_sum_of_heads():
    lists = grid_lists([[-0.1], [-0.2]])
    assert selection_log_prob(Selection((1, 1)), lists) == pytest.approx(-0.3)


def test_fixed_line_is_zero():
    assert selection_log_prob(Selection((1,)), [CandidateList.fixed(1, "}")]) == 0.0


def test_matches_linear_space_product():
    rng = random.Random(7)
    grid = [sorted((-rng.uniform(0, 4) for _ in range(3)), reverse=True) for _ in range(4)]
    lists = grid_lists(grid)
    for ranks in [(1, 1, 1, 1), (3, 2, 1, 3), (2, 3, 3, 2)]:
        prod = 1.0
        for lps, r in zip(grid, ranks):
            prod *= math.exp(lps[r - 1])
        assert abs(math.exp(selection_log_prob(Selection(ranks), lists)) - prod) < 1e-9


def test_effective_without_weights():
    lists = grid_lists([[-0.1, -0.5], [-0.2, -0.9]])
    s = Selection((2, 1))
    assert effective_log_prob(s, lists, DownWeightTable()) == selection_log_prob(s, lists)


def test_single_down_weight_subtracts_ln10():
    lists = grid_lists([[-0.1, -0.5], [-0.2, -0.9]])
    w = DownWeightTable(alpha=0.1)
    w.apply(2, 1)
    s = Selection((1, 1))
    assert effective_log_prob(s, lists, w) == pytest.approx(selection_log_prob(s, lists) - math.log(10))
    # unused candidate leaves other selections alone
    assert effective_log_prob(Selection((1, 2)), lists, w) == selection_log_prob(Selection((1, 2)), lists)


def test_double_down_weight_matches_direct_product():
    lists = grid_lists([[-0.3, -0.5], [-0.2, -0.9]])
    w = DownWeightTable(alpha=0.1)
    w.apply(1, 2)
    w.apply(1, 2)
    direct = math.exp(-0.5) * 0.1 * 0.1 * math.exp(-0.9)
    assert math.exp(effective_log_prob(Selection((2, 2)), lists, w)) == pytest.approx(direct, rel=1e-12)
    assert w.count(1, 2) == 2


@given(st.lists(descending, min_size=1, max_size=5), st.data())
def test_log_prob_monotone_in_rank(grid, data):
    lists = grid_lists(grid)
    ranks = tuple(data.draw(st.integers(1, len(l))) for l in grid)
    s = Selection(ranks)
    base = selection_log_prob(s, lists)
    for line, l in enumerate(grid, 1):
        if ranks[line - 1] < len(l):
            assert selection_log_prob(s.bump(line), lists) <= base


@given(st.lists(descending, min_size=1, max_size=4), st.data(), st.floats(0.01, 0.99))
def test_effective_never_exceeds_base(grid, data, alpha):
    lists = grid_lists(grid)
    ranks = tuple(data.draw(st.integers(1, len(l))) for l in grid)
    w = DownWeightTable(alpha)
    hits = data.draw(st.lists(st.tuples(st.integers(1, len(grid)), st.integers(1, 5)), max_size=4))
    for line, r in hits:
        w.apply(line, r)
    used = any(w.count(i, r) for i, r in enumerate(ranks, 1))
    eff, base = effective_log_prob(Selection(ranks), lists, w), selection_log_prob(Selection(ranks), lists)
    assert eff <= base
    assert (eff == base) == (not used)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=5), st.lists(st.integers(1, 4), min_size=1, max_size=5))
def test_selection_equality_is_elementwise(a, b):
    assert (Selection(tuple(a)) == Selection(tuple(b))) == (a == b)


def test_candidate_list_validation():
    with pytest.raises(StructuralError):
        CandidateList(1, (Candidate("a", -1.0, 1), Candidate("b", -0.5, 2)))
    with pytest.raises(StructuralError):
        CandidateList(1, (Candidate("a", -1.0, 2),))
    with pytest.raises(StructuralError):
        Candidate("a", 0.5, 1)
    cl = CandidateList.from_scored(3, [("x", -0.1), ("x", -0.2)])
    assert len(cl) == 2 and cl[2].code == "x"


def test_selection_helpers():
    s = Selection((1, 2, 3))
    assert s.bump(2) == Selection((1, 3, 3))
    assert s.prefix(2) == (1, 2)
    lists = [CandidateList.from_scored(1, [("a", -0.1)]), CandidateList.from_scored(2, [("b", -0.1)])]
    with pytest.raises(StructuralError):
        Selection((0, 1)).check(lists)
    with pytest.raises(StructuralError):
        Selection((1,)).check(lists)


def test_instance_for_search_hides_hidden_tests():
    lines = (PseudocodeLine(1, "x", 0),)
    lists = (CandidateList.from_scored(1, [("int main(){}", -0.1)]),)
    tests = (TestCase(b"", b""), TestCase(b"1", b"1", Visibility.HIDDEN))
    inst = ProblemInstance("p", lines, lists, tests)
    assert len(inst.for_search().tests) == 1
    assert inst.top_one() == Selection((1,))


def test_outcome_round_trip():
    o = TrialOutcome(OutcomeKind.COMPILE_ERROR, 3, "boom")
    assert TrialOutcome.from_dict(o.to_dict()) == o
