import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from linesynth.benchmark import blocked_condition_spec, misdeclared_variable_spec, random_grid_spec
from linesynth.core import OutcomeKind, Selection, StructuralError
from linesynth.judge import RunStatus, compile_outcome
from linesynth.mock import (COMPILE_BAD, CORRECT, SEMANTIC_BAD, Label, MockJudge, MockSpec, assemble_for,
                            spec_from_grid)


def flat_grid(L, M):
    return [[-0.1 * r for r in range(M)] for _ in range(L)]


def test_all_correct_compiles():
    spec = spec_from_grid(flat_grid(3, 2), {}, (1, 1, 1))
    assert spec.mock_compile((1, 1, 1)) == (None, None, "")
    assert spec.mock_run((1, 1, 1)).accepted


def test_zero_offset_reports_true_line():
    spec = spec_from_grid(flat_grid(5, 2), {(3, 2): Label(COMPILE_BAD)}, (1,) * 5, offset_weights={0: 1.0})
    i_true, reported, msg = spec.mock_compile((1, 1, 2, 1, 1))
    assert i_true == reported == 3
    assert "v3" in msg


def test_semantic_bad_is_wrong_output():
    spec = spec_from_grid(flat_grid(2, 2), {(2, 2): Label(SEMANTIC_BAD)}, (1, 1))
    assert spec.mock_run((1, 2)).kind is OutcomeKind.WRONG_OUTPUT
    assert spec.mock_run((1, 1)).accepted


def test_context_dependent_offender():
    bad = Label(COMPILE_BAD, frozenset({(1, 2)}))
    spec = spec_from_grid(flat_grid(2, 3), {(2, 2): bad}, (1, 1))
    assert spec.true_offender((2, 2)) == 2
    assert spec.true_offender((1, 2)) is None
    assert spec.true_offender((3, 2)) is None


def test_offset_noise_rate():
    spec = spec_from_grid(flat_grid(40, 2), {(1, 2): Label(COMPILE_BAD)}, (1,) * 40, seed=11)
    rng = random.Random(5)
    draws = 10_000
    mismatched = 0
    for _ in range(draws):
        ranks = (2,) + tuple(rng.randint(1, 2) for _ in range(39))
        i_true, reported, _ = spec.mock_compile(ranks)
        mismatched += reported != i_true
    assert abs(mismatched / draws - 0.217) <= 0.01


def test_reported_line_clamped_to_emitted_lines():
    spec = spec_from_grid(flat_grid(5, 2), {(2, 2): Label(COMPILE_BAD)}, (1,) * 5, offset_weights={2: 1.0})
    assert spec.mock_compile((1, 2, 1, 1, 1))[1] == 4
    # a probe of a shorter prefix cannot report past its last line
    assert spec.mock_compile((1, 2, 1))[1] == 3
    assert spec.mock_compile((1, 2))[1] == 2
    assert spec.mock_compile((1,)) == (None, None, "")


def test_gold_validation():
    with pytest.raises(StructuralError):
        spec_from_grid(flat_grid(2, 2), {(1, 1): Label(SEMANTIC_BAD)}, (1, 1))
    with pytest.raises(StructuralError):
        spec_from_grid(flat_grid(2, 2), {(1, 1): Label(COMPILE_BAD)}, (1, 1))
    with pytest.raises(StructuralError):
        spec_from_grid([[-0.5, -0.1]], {}, (1,))


def test_mock_judge_uses_physical_lines():
    spec = spec_from_grid(flat_grid(3, 2), {(2, 2): Label(COMPILE_BAD)}, (1, 1, 1), offset_weights={0: 1.0})
    judge = MockJudge(spec)
    src = assemble_for(spec, Selection((1, 2, 1)))
    res = judge.compile(src)
    assert not res.ok
    assert compile_outcome(src, res).line == 2
    ok = judge.compile(assemble_for(spec, Selection((1, 1, 1))))
    assert ok.ok and judge.run(ok.artifact, spec.instance.tests[0]).status is RunStatus.PASSED
    assert judge.compile_calls == 2 and judge.compiled == [(1, 2, 1), (1, 1, 1)]


def test_spec_file_round_trip(tmp_path):
    for spec in (blocked_condition_spec(3), misdeclared_variable_spec()):
        path = tmp_path / f"{spec.instance.id}.json"
        spec.dump(path)
        back = MockSpec.load(path)
        assert back.to_dict() == spec.to_dict()
        assert json.loads(path.read_text())["format"] == "linesynth-mockspec"


def test_spec_file_rejects_unsorted(tmp_path):
    d = misdeclared_variable_spec().to_dict()
    d["lines"][1]["candidates"].reverse()
    with pytest.raises(StructuralError):
        MockSpec.from_dict(d)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6), st.booleans())
def test_determinism_and_gold_accepted(seed, quantized):
    spec = random_grid_spec(random.Random(seed), quantized=quantized)
    assert spec.mock_compile(spec.gold)[0] is None and spec.mock_run(spec.gold).accepted
    rng = random.Random(seed)
    sizes = [len(c) for c in spec.instance.candidate_lists]
    for _ in range(10):
        ranks = tuple(rng.randint(1, m) for m in sizes)
        assert spec.mock_compile(ranks) == spec.mock_compile(ranks)
        assert spec.mock_run(ranks) == spec.mock_run(ranks)
