"""Hand-built problem fixtures shared by the test modules."""

from __future__ import annotations

import itertools
import shutil

from linesynth.core import CandidateList, ProblemInstance, PseudocodeLine, Selection, TestCase, Visibility

HAVE_CXX = shutil.which("g++") is not None

PUBLIC, HIDDEN = Visibility.PUBLIC, Visibility.HIDDEN

# (pseudocode, indent, candidates best first); gold is rank 1 everywhere
SELECTION_SORT = [
    ("in function main", 0, ["int main() {"]),
    ("let n be integer", 1, ["int n;", "long n;", "int n = 0;"]),
    ("read n", 1, ["cin >> n;", "cin << n;", "scanf(\"%d\", n);"]),
    ("let A be vector of integers", 1, ["vector<int> A;", "vector<int> A(n);", "int A[n];"]),
    ("set size of A = n", 1, ["A.resize(n);", "A.size() = n;", "A.reserve(n);"]),
    ("read n elements into A", 1, ["for(int i = 0; i < A.size(); i++) cin >> A[i];",
                                   "for(int i = 0; i < n; i++) cin >> A;",
                                   "cin >> A;"]),
    ("for all elements in A", 1, ["for(int i = 0; i < A.size(); i++) {",
                                  "for(int i = 0; i <= A.size(); i++) {",
                                  "for(auto x : A) {"]),
    ("set min_i to i", 2, ["int min_i = i;", "min_i = i;", "int min_i = 0;"]),
    ("for j = i + 1 to size of A exclusive", 2, ["for(int j = i+1; j < A.size(); j++) {",
                                                  "for(int j = i+1; j <= A.size(); j++) {",
                                                  "for(j = i+1; j < A.size(); j++) {"]),
    ("set min_i to j if A[min_i] > A[j]", 3, ["if(A[min_i] > A[j]) { min_i = j; }",
                                              "if(A[min_i] < A[j]) { min_i = j; }",
                                              "if(A[min_i] > A[j]) min_i = j"]),
    ("swap A[i], A[min_i]", 2, ["swap(A[i], A[min_i]);", "swap(A[i], A[j]);", "swap(A[i], min_i);"]),
    ("print all elements of A", 1, ["for(int i=0; i<A.size(); i++) cout<<A[i]<<\" \";",
                                    "for(int i=0; i<A.size(); i++) cout<<A[i];",
                                    "cout << A;"]),
]
SELECTION_SORT_LOG_PROBS = [-0.05, -1.5, -2.5]
SELECTION_SORT_TESTS = (
    TestCase(b"5 3 2 4 1 5\n", b"1 2 3 4 5\n", PUBLIC),
    TestCase(b"8 9 2 4 5 6 2 7 1\n", b"1 2 2 4 5 6 7 9 \n", HIDDEN),
)


def build_instance(problem_id, rows, tests, log_probs=None, fixed_tail=(), budget=100):
    """rows: (text, indent, codes[, log_probs]); fixed_tail: (code, indent) structural lines appended."""
    lines, lists, gold = [], [], []
    for i, row in enumerate(rows, 1):
        text, indent, codes = row[:3]
        lps = row[3] if len(row) > 3 else (log_probs or [-0.05 - r for r in range(len(codes))])[: len(codes)]
        lines.append(PseudocodeLine(i, text, indent))
        lists.append(CandidateList.from_scored(i, list(zip(codes, lps))))
        gold.append(codes[0])
    for code, indent in fixed_tail:
        i = len(lines) + 1
        lines.append(PseudocodeLine(i, "", indent))
        lists.append(CandidateList.fixed(i, code))
        gold.append(code)
    return ProblemInstance(problem_id, tuple(lines), tuple(lists), tuple(tests), budget, tuple(gold))


def selection_sort(gold_rank2_line=None):
    """The selection-sort program; optionally push the gold candidate of one line down to rank 2."""
    rows = [list(r) for r in SELECTION_SORT]
    lps = [SELECTION_SORT_LOG_PROBS[: len(r[2])] for r in rows]
    gold_codes = [r[2][0] for r in rows]
    if gold_rank2_line is not None:
        codes = rows[gold_rank2_line - 1][2]
        rows[gold_rank2_line - 1][2] = [codes[1], codes[0]] + codes[2:]
        # the wrong candidate narrowly beats gold; every other line keeps a wide margin
        lps[gold_rank2_line - 1] = [-0.2, -0.6, -2.5][: len(codes)]
    inst = build_instance("1-sort", [(t, ind, c, lp) for (t, ind, c), lp in zip(rows, lps)],
                          SELECTION_SORT_TESTS, fixed_tail=[("}", 0)])
    return ProblemInstance(inst.id, inst.lines, inst.candidate_lists, inst.tests, inst.budget,
                           tuple(gold_codes) + ("}",))


def boolean_condition():
    """Five lines; the condition line's top candidate is "if (b) {" while gold is "if (b == true) {"."""
    rows = [
        ("in function main", 0, ["int main() {"]),
        ("read boolean b", 1, ["bool b; cin >> b;"]),
        ("if b is true", 1, ["if (b) {", "if (b == true) {", "if (!b) {", "if (b = = true) {"]),
        ("print yes", 2, ["cout << \"yes\" << endl;"]),
        ("print done", 1, ["cout << \"done\" << endl;"]),
    ]
    tests = (TestCase(b"1\n", b"yes\ndone\n", PUBLIC), TestCase(b"0\n", b"done\n", HIDDEN))
    inst = build_instance("2-bool", rows, tests)
    gold = list(inst.gold_code)
    gold[2] = "if (b == true) {"
    return ProblemInstance(inst.id, inst.lines, inst.candidate_lists, inst.tests, inst.budget, tuple(gold))


def always_erroneous():
    """Three lines; the print line has one candidate that can never compile."""
    rows = [
        ("in function main", 0, ["int main() {"]),
        ("print 1", 1, ["cout << 1 << endl;", "cout << 1 << endl", "printf(\"1\\n\");"]),
        ("return 0", 1, ["return 0;"]),
    ]
    return build_instance("3-err", rows, (TestCase(b"", b"1\n", PUBLIC),))


def use_before_declare():
    """Five lines; replacing the declaration with "int m;" breaks the next line."""
    rows = [
        ("in function main", 0, ["int main() {"]),
        ("create int n", 1, ["int n;", "int m;"]),
        ("read n", 1, ["cin >> n;"]),
        ("print n", 1, ["cout << n << endl;"]),
        ("return 0", 1, ["return 0;"]),
    ]
    return build_instance("4-decl", rows, (TestCase(b"7\n", b"7\n", PUBLIC),))


def all_selections(lists):
    return [Selection(r) for r in itertools.product(*(range(1, len(c) + 1) for c in lists))]
