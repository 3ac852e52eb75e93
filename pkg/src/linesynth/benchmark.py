"""Seeded mock benchmarks and regression scenarios for desk-scale experiments."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .core import CandidateList, ProblemInstance, PseudocodeLine
from .localize import fixed_answer_client, make_localizer
from .metrics import RunDigest, RunSummary
from .mock import COMPILE_BAD, CORRECT, SEMANTIC_BAD, Label, MockJudge, MockSpec, spec_from_grid
from .search import SearchConfig, SearchResult, best_first_search


def _descending(rng: random.Random, m: int, top: float = 0.3, gap=(0.2, 1.2)) -> list[float]:
    lp = -rng.uniform(0.0, top)
    out = []
    for _ in range(m):
        out.append(lp)
        lp -= rng.uniform(*gap)
    return out


def random_grid_spec(rng: random.Random, max_lines: int = 4, max_beam: int = 5,
                     quantized: bool = False, problem_id: str = "grid") -> MockSpec:
    """Small random grid: one gold candidate per line, every other candidate compile- or semantic-bad."""
    L = rng.randint(1, max_lines)
    sizes = [rng.randint(1, max_beam) for _ in range(L)]
    grid = []
    for m in sizes:
        if quantized:
            # coarse values so exact ties occur and the tiebreak is exercised
            grid.append(sorted((-0.5 * rng.randint(0, 3) for _ in range(m)), reverse=True))
        else:
            grid.append(_descending(rng, m))
    gold = [rng.randint(1, m) for m in sizes]
    labels = {}
    for i, m in enumerate(sizes, 1):
        for r in range(1, m + 1):
            kind = CORRECT if r == gold[i - 1] else rng.choice((COMPILE_BAD, SEMANTIC_BAD))
            labels[(i, r)] = Label(kind)
    return spec_from_grid(grid, labels, gold, problem_id, budget=max(1, rng.randint(1, 200)),
                          seed=rng.randrange(2 ** 31))


@dataclass
class BenchProblem:
    spec: MockSpec
    kind: str  # "easy" | "hard"
    offender_line: int
    depth: int


def make_problem(rng: random.Random, problem_id: str, kind: str, num_lines: int = 8,
                 beam: int = 6) -> BenchProblem:
    """One mock problem with a context-free offending line near the top.

    easy: a single offending candidate just above the gold one and no other
    ambiguity, so plain best-first search needs two trials.
    hard: three or four offending candidates ranked above gold, plus two
    later lines whose gold candidate is ranked second.
    """
    L, M = num_lines, beam
    grid = [_descending(rng, M, gap=(0.4, 1.2)) for _ in range(L)]
    gold = [1] * L
    k = rng.randint(1, 3)
    if kind == "easy":
        depth = 1
        # the offender's runner-up is the cheapest move in the whole grid
        grid[k - 1] = [grid[k - 1][0], grid[k - 1][0] - rng.uniform(0.05, 0.3)] + \
            [grid[k - 1][0] - 0.3 - x for x in sorted(rng.uniform(0.5, 3.0) for _ in range(M - 2))]
        ambiguous = []
    else:
        depth = rng.randint(3, 4)
        ambiguous = rng.sample([i for i in range(k + 1, L + 1)], 2)
    gold[k - 1] = depth + 1
    for i in ambiguous:
        gold[i - 1] = 2
    labels = {}
    for i in range(1, L + 1):
        for r in range(1, M + 1):
            if r == gold[i - 1]:
                kind_ = CORRECT
            elif i == k and r <= depth:
                kind_ = COMPILE_BAD
            elif r < gold[i - 1]:
                kind_ = SEMANTIC_BAD
            else:
                kind_ = rng.choice((COMPILE_BAD, SEMANTIC_BAD))
            labels[(i, r)] = Label(kind_, error=rng.choice(("undeclared", "type_mismatch", "stray_token")))
    spec = spec_from_grid(grid, labels, gold, problem_id, seed=rng.randrange(2 ** 31))
    return BenchProblem(spec, kind, k, depth)


def make_benchmark(seed: int = 0, n: int = 50, hard_fraction: float = 0.5) -> list[BenchProblem]:
    rng = random.Random(seed)
    n_hard = round(n * hard_fraction)
    kinds = ["hard"] * n_hard + ["easy"] * (n - n_hard)
    rng.shuffle(kinds)
    return [make_problem(rng, f"bench{seed}-{i:03d}", kind) for i, kind in enumerate(kinds)]


def blocked_condition_spec(seed: int = 0) -> MockSpec:
    """A condition line whose two most likely translations never compile.

    Line 9 has two context-free offenders at ranks 1 and 2 with the gold
    candidate at rank 3; lines 10 to 12 have gold at rank 2 behind a
    semantically wrong candidate. Without localization the search keeps
    re-judging line 9's offenders in combination with every other change.
    """
    rng = random.Random(seed)
    L, M = 12, 5
    grid = [_descending(rng, M, gap=(1.5, 3.0)) for _ in range(L)]
    grid[8] = [-0.05, -0.4, -2.0, -4.0, -5.0]
    for i in (10, 11, 12):
        grid[i - 1] = _descending(rng, M, gap=(0.3, 0.9))
    gold = [1] * L
    gold[8] = 3
    for i in (10, 11, 12):
        gold[i - 1] = 2
    labels = {}
    for i in range(1, L + 1):
        for r in range(1, M + 1):
            if r == gold[i - 1]:
                labels[(i, r)] = Label(CORRECT)
            elif i == 9 and r <= 2:
                labels[(i, r)] = Label(COMPILE_BAD, error="type_mismatch",
                                       message="no match for 'operator/' (operand types are 'std::string' and 'int')")
            else:
                labels[(i, r)] = Label(SEMANTIC_BAD)
    return spec_from_grid(grid, labels, gold, "blocked-condition", budget=5000, seed=seed,
                          indents=[0] + [1] * (L - 1))


def misdeclared_variable_spec(seed: int = 0) -> MockSpec:
    """The declaration line picks the wrong variable name; the error surfaces one line later.

    The top candidate for line 2 declares ``a`` instead of ``l``, so every
    use of ``l`` on lines 3 and 4 fails with an undeclared-identifier error
    reported on line 3. Blaming the reported line sends the search the
    wrong way; the fix is rank 2 on line 2.
    """
    rng = random.Random(seed)
    texts_codes = [
        ("in function main", ["int main() {"]),
        ("create int l, p and q", ["int a, p, q;", "int l, p, q;", "int l, p, q = 0;", "long long l, p, q;"]),
        ("read l, p and q", ["cin >> l >> p >> q;", "cin >> p >> q >> l;", "cin >> l >> q >> p;", "cin >> p >> l >> q;"]),
        ("print l * p / (p + q)", ["cout << l * p / (p + q) << endl;", "cout << l * p / p + q << endl;",
                                  "cout << l * (p / (p + q)) << endl;", "cout << l * p / (p - q) << endl;"]),
        ("print new line", ["cout << endl;", "cout << '\\n';", "puts(\"\");", "cout << \" \";"]),
        ("return 0", ["return 0;", "return 1;", "exit(0);", "return -1;"]),
    ]
    L = len(texts_codes)
    grid = [[0.0]] + [_descending(rng, len(codes), top=0.05, gap=(0.3, 0.8)) for _, codes in texts_codes[1:]]
    grid[1] = [-0.1, -1.6, -2.2, -3.0]
    gold = (1, 2, 1, 1, 1, 1)
    undeclared = "'l' was not declared in this scope"
    labels = {(1, 1): Label(CORRECT), (2, 1): Label(SEMANTIC_BAD), (2, 2): Label(CORRECT)}
    for r in (3, 4):
        labels[(2, r)] = Label(SEMANTIC_BAD)
    for line in (5, 6):
        for r in range(1, 5):
            labels[(line, r)] = Label(CORRECT if r == 1 else SEMANTIC_BAD)
    for line in (3, 4):
        for r in range(1, len(texts_codes[line - 1][1]) + 1):
            # every use of l fails when line 2 declared a instead
            labels[(line, r)] = Label(COMPILE_BAD, frozenset({(2, 1)}), message=undeclared,
                                      otherwise=CORRECT if r == 1 else SEMANTIC_BAD)
    spec = spec_from_grid(grid, labels, gold, "misdeclared-variable", budget=20, seed=seed,
                          offset_weights={0: 1.0}, indents=[0, 1, 1, 1, 1, 1])
    # human-readable code for the fixture file
    inst = spec.instance
    lines = tuple(PseudocodeLine(i, t, ln.indent) for i, ((t, _), ln) in enumerate(zip(texts_codes, inst.lines), 1))
    lists = tuple(CandidateList.from_scored(i, list(zip(codes, grid[i - 1])))
                  for i, (_, codes) in enumerate(texts_codes, 1))
    spec.instance = ProblemInstance(inst.id, lines, lists, inst.tests, inst.budget)
    return spec


def run_spec(spec: MockSpec, localizer: str = "none", budget: Optional[int] = None, alpha: float = 0.1,
             beta: float = 0.95, client=None) -> tuple[SearchResult, MockJudge]:
    judge = MockJudge(spec)
    loc = make_localizer(localizer, beta=beta, client=client)
    result = best_first_search(spec.instance, judge, loc, SearchConfig(budget=budget, alpha=alpha, preamble=""))
    return result, judge


def reported_line_stub(request: dict) -> str:
    """Stub classifier that always names the reported line with 0.99 confidence."""
    return fixed_answer_client(int(request["i_err"]), 0.99)(request)


def run_benchmark(problems: Iterable[BenchProblem | MockSpec], methods: Sequence[str], budget: int,
                  alpha: float = 0.1, beta: float = 0.95,
                  on_result: Optional[Callable[[SearchResult], None]] = None) -> dict[str, RunSummary]:
    summaries = {m: RunSummary(m) for m in methods}
    for p in problems:
        spec = p.spec if isinstance(p, BenchProblem) else p
        for m in methods:
            result, _ = run_spec(spec, m, budget, alpha, beta)
            summaries[m].add(RunDigest.from_result(spec.instance.id, m, result))
            if on_result is not None:
                on_result(result)
    return summaries
