import re

import pytest
from hypothesis import given, strategies as st

from helpers import selection_sort
from linesynth.assembler import (DEFAULT_PREAMBLE, AssemblyError, assemble, assemble_lines, complete_prefix,
                                 complete_prefix_lines, count_open_braces, map_physical_to_logical)
from linesynth.core import PseudocodeLine, Selection

_LITERALS = re.compile(r'//[^\n]*|/\*.*?\*/|"(?:\\.|[^"\\\n])*"|\'(?:\\.|[^\'\\\n])*\'', re.S)


def brace_oracle(text):
    """Balance after deleting comments and literals with a regex."""
    stripped = _LITERALS.sub("", text)
    return stripped.count("{") - stripped.count("}")


@pytest.mark.parametrize("code,expected", [
    ("for(...) {", 1),
    ("if(a){b();}", 0),
    ('cout << "}{" << x;', 0),
    ("char c = '{';", 0),
    ("x = 1; // {", 0),
    ("/* { */ {", 1),
    (r'puts("\"{");', 0),
])
def test_count_open_braces(code, expected):
    assert count_open_braces(code) == expected
    assert brace_oracle(code) == expected


def test_selection_sort_ends_with_bare_brace():
    inst = selection_sort()
    src = assemble(inst, inst.top_one())
    lines = src.text.rstrip("\n").split("\n")
    assert lines[-1] == "}"
    # the closing "}" is the fixed dataset line, not an inserted one
    assert src.line_map[-1] == 13
    assert brace_oracle(src.text) == 0


def test_single_line_program():
    lines = [PseudocodeLine(1, "main", 0)]
    src = assemble_lines(lines, ["int main() { return 0; }"])
    assert src.text == DEFAULT_PREAMBLE + "\nint main() { return 0; }\n"


def test_indent_drop_inserts_brace():
    lines = [PseudocodeLine(i, f"l{i}", ind) for i, ind in enumerate((0, 1, 1, 0), 1)]
    codes = ["void f() {", "int x = 1;", "x++;", "int main() { f(); }"]
    src = assemble_lines(lines, codes, preamble="")
    out = src.text.split("\n")
    assert out[3] == "}" and src.line_map[3] is None
    assert out[4] == codes[3]
    assert brace_oracle(src.text) == 0


def test_prefix_through_inner_loop_header():
    inst = selection_sort()
    src = complete_prefix(inst, inst.top_one(), 9)
    body = src.text.rstrip("\n").split("\n")
    closers = [ln for ln, m in zip(body, src.line_map) if m is None and ln.strip() == "}"]
    assert len(closers) == 3
    assert brace_oracle(src.text) == 0
    assert src.ranks == (1,) * 9


def test_full_prefix_is_full_program():
    inst = selection_sort()
    sel = inst.top_one()
    assert complete_prefix(inst, sel, inst.num_lines).text == assemble(inst, sel).text


def test_prefix_with_brace_in_literal():
    lines = [PseudocodeLine(1, "main", 0), PseudocodeLine(2, "print", 1), PseudocodeLine(3, "end", 1)]
    codes = ["int main() {", 'cout << "a{b";', "return 0;"]
    src = complete_prefix_lines(lines, codes, 2, preamble="")
    assert src.text == 'int main() {\n  cout << "a{b";\n}\n'
    assert brace_oracle(src.text) == 0


def test_physical_to_logical():
    inst = selection_sort()
    src = assemble(inst, inst.top_one())
    assert map_physical_to_logical(src, 3) == 1  # two preamble lines
    assert map_physical_to_logical(src, 1) is None
    assert map_physical_to_logical(src, 999) is None
    # inserted brace right after logical line 10 closes the inner loop
    k = src.physical_line_of(10) + 1
    assert src.line_map[k - 1] is None
    assert map_physical_to_logical(src, k) == 10
    # and the one closing the outer loop after line 11
    k = src.physical_line_of(11) + 1
    assert map_physical_to_logical(src, k) == 11


def test_rejects_bad_structure():
    with pytest.raises(AssemblyError):
        assemble_lines([PseudocodeLine(1, "x", 0)], ["a;", "b;"])
    with pytest.raises(AssemblyError):
        complete_prefix_lines([PseudocodeLine(1, "x", 0)], ["a;"], 2)


# random well-formed programs: indents move up by at most one, each opening line ends in "{"
@st.composite
def programs(draw):
    n = draw(st.integers(1, 12))
    indents = [0]
    for _ in range(n - 1):
        indents.append(draw(st.integers(0, indents[-1] + 1)))
    lines, codes = [], []
    literal = st.sampled_from(['"{"', '"}"', "'{'", '"a}b{"', "x", "1"])
    for i, ind in enumerate(indents, 1):
        opens = i < n and indents[i] == ind + 1
        body = f"f({draw(literal)});"
        lines.append(PseudocodeLine(i, f"line {i}", ind))
        codes.append(f"if (c{i}) {{ {body}" if opens else body)
    return lines, codes


@given(programs())
def test_round_trip_and_balance(prog):
    lines, codes = prog
    src = assemble_lines(lines, codes)
    for phys, logical in enumerate(src.line_map, 1):
        if logical is not None:
            assert map_physical_to_logical(src, phys) == logical
    assert count_open_braces(src.text) == brace_oracle(src.text) == 0
    assert assemble_lines(lines, codes).text == src.text
    for k in range(1, len(lines) + 1):
        done = complete_prefix_lines(lines, codes, k)
        assert count_open_braces(done.text) == brace_oracle(done.text) == 0
    assert complete_prefix_lines(lines, codes, len(lines)).text == src.text
