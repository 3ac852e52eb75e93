"""Success-rate curves, trial-delta tables, line-level functional accuracy and oracle statistics."""

from __future__ import annotations

import json
import math
import statistics
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Optional, Sequence

from .assembler import DEFAULT_PREAMBLE, assemble_lines
from .core import ProblemInstance
from .judge import Judge, judge_program

DEFAULT_BUDGETS = (1, 10, 100, 1000, 3000)
DEFAULT_RANK_CUTOFFS = (1, 5, 10, 100)


@dataclass(frozen=True)
class RunDigest:
    problem_id: str
    method: str
    budget: int
    status: str
    trials_used: int
    accepted_at: Optional[int] = None  # trial index of the accepting compile

    @property
    def accepted(self) -> bool:
        return self.accepted_at is not None

    @classmethod
    def from_result(cls, problem_id: str, method: str, result) -> "RunDigest":
        return cls(problem_id, method, result.budget, result.status.value, result.trials_used,
                   result.trials_used if result.accepted else None)


def digest_from_trace(trace) -> RunDigest:
    """Rebuild a RunDigest from a SearchTrace."""
    if not trace.records:
        return RunDigest(trace.problem_id, trace.method, trace.budget, "space_exhausted", 0)
    last = trace.records[-1]
    used = trace.budget - last.budget_remaining
    if last.outcome.accepted:
        return RunDigest(trace.problem_id, trace.method, trace.budget, "accepted", used, last.trial)
    status = "budget_exhausted" if used >= trace.budget else "space_exhausted"
    return RunDigest(trace.problem_id, trace.method, trace.budget, status, used)


@dataclass
class RunSummary:
    method: str
    digests: dict = field(default_factory=dict)  # problem id -> RunDigest

    def add(self, digest: RunDigest) -> None:
        if digest.problem_id in self.digests:
            raise ValueError(f"duplicate digest for {digest.problem_id}")
        self.digests[digest.problem_id] = digest

    def __len__(self) -> int:
        return len(self.digests)

    def __iter__(self):
        return iter(self.digests.values())

    def write_jsonl(self, f: IO[str]) -> None:
        for pid in sorted(self.digests):
            f.write(json.dumps(asdict(self.digests[pid])) + "\n")

    @classmethod
    def read_jsonl(cls, lines: Iterable[str]) -> dict[str, "RunSummary"]:
        out: dict[str, RunSummary] = {}
        for ln in lines:
            if ln.strip():
                d = RunDigest(**json.loads(ln))
                out.setdefault(d.method, cls(d.method)).add(d)
        return out


def success_rate_at_budget(digests: Iterable[RunDigest], budget: int) -> float:
    digests = list(digests)
    if not digests:
        return 0.0
    short = [d.problem_id for d in digests if d.budget < budget]
    if short:
        raise ValueError(f"{len(short)} runs used a budget below {budget}, e.g. {short[0]}")
    return sum(1 for d in digests if d.accepted and d.accepted_at <= budget) / len(digests)


def success_curve(digests: Iterable[RunDigest], budgets: Sequence[int] = DEFAULT_BUDGETS) -> list[tuple[int, float]]:
    digests = list(digests)
    max_budget = min((d.budget for d in digests), default=0)
    return [(b, success_rate_at_budget(digests, b)) for b in budgets if b <= max_budget]


CATEGORIES = ("improves", "fail_to_success", "worsens", "success_to_fail", "unchanged", "both_fail")


@dataclass
class DeltaStats:
    count: int
    fraction: float
    mean_abs: Optional[float] = None
    median_abs: Optional[float] = None
    geomean_rel: Optional[float] = None
    median_rel: Optional[float] = None


@dataclass
class DeltaReport:
    total: int
    categories: dict  # category -> list of problem ids
    stats: dict  # category -> DeltaStats

    def format(self, method: str = "method") -> str:
        labels = {"improves": "improves number of trials",
                  "fail_to_success": "failed to synthesize -> succeeds",
                  "worsens": "worsens number of trials",
                  "success_to_fail": "succeeded -> fails to synthesize",
                  "unchanged": "same number of trials",
                  "both_fail": "both fail"}
        rows = [f"{'method':<12} {'effect compared to best-first':<34} {'count':>7} "
                f"{'abs.mean':>9} {'abs.median':>10} {'geo.mean':>9} {'rel.median':>10}"]
        for i, cat in enumerate(CATEGORIES):
            s = self.stats[cat]
            cols = [f"{s.fraction * 100:6.1f}%"]
            if s.mean_abs is not None:
                cols += [f"{s.mean_abs:+9.1f}", f"{s.median_abs:+10.1f}",
                         f"x{s.geomean_rel:8.2f}", f"x{s.median_rel:9.2f}"]
            rows.append(f"{method if i == 0 else '':<12} {labels[cat]:<34} " + " ".join(cols))
        return "\n".join(rows)


def _diff_stats(pairs: list[tuple[int, int]], total: int) -> DeltaStats:
    if not pairs:
        return DeltaStats(0, 0.0)
    abs_d = [m - b for b, m in pairs]
    rel = [m / b for b, m in pairs]
    return DeltaStats(len(pairs), len(pairs) / total, statistics.fmean(abs_d), statistics.median(abs_d),
                      math.exp(statistics.fmean(math.log(r) for r in rel)), statistics.median(rel))


def trial_delta_report(baseline: RunSummary, method: RunSummary) -> DeltaReport:
    """Compare trials-to-accept per problem; every problem lands in exactly one category."""
    if set(baseline.digests) != set(method.digests):
        raise ValueError("baseline and method cover different problem sets")
    budgets = {d.budget for d in baseline} | {d.budget for d in method}
    if len(budgets) > 1:
        raise ValueError(f"mixed budgets {sorted(budgets)}")
    cats: dict[str, list[str]] = {c: [] for c in CATEGORIES}
    pairs: dict[str, list[tuple[int, int]]] = {"improves": [], "worsens": [], "unchanged": []}
    for pid in sorted(baseline.digests):
        b, m = baseline.digests[pid], method.digests[pid]
        if b.accepted and m.accepted:
            cat = "improves" if m.accepted_at < b.accepted_at else "worsens" if m.accepted_at > b.accepted_at else "unchanged"
            pairs[cat].append((b.accepted_at, m.accepted_at))
        elif m.accepted:
            cat = "fail_to_success"
        elif b.accepted:
            cat = "success_to_fail"
        else:
            cat = "both_fail"
        cats[cat].append(pid)
    total = len(baseline.digests)
    stats = {}
    for c in CATEGORIES:
        if c in pairs:
            stats[c] = _diff_stats(pairs[c], total)
        else:
            stats[c] = DeltaStats(len(cats[c]), len(cats[c]) / total if total else 0.0)
    return DeltaReport(total, cats, stats)


@dataclass
class LineAccuracy:
    problem_id: str
    # matrix[i][j] is True iff candidate rank j+1 of line i+1 is functionally correct
    matrix: list[list[bool]]
    fixed: list[bool]

    def accuracy_at(self, k: int) -> float:
        rows = [row for row, fx in zip(self.matrix, self.fixed) if not fx]
        if not rows:
            return 1.0
        return sum(1 for row in rows if any(row[:k])) / len(rows)


class GoldProgramError(ValueError):
    pass


def line_level_accuracy(instance: ProblemInstance, judge: Judge,
                        rank_cutoff: int = max(DEFAULT_RANK_CUTOFFS),
                        preamble: str = DEFAULT_PREAMBLE) -> LineAccuracy:
    """Substitute each candidate into the gold program and check public plus hidden tests."""
    if instance.gold_code is None:
        raise GoldProgramError(f"{instance.id}: no gold program")
    gold = list(instance.gold_code)
    if not judge_program(judge, assemble_lines(instance.lines, gold, preamble), instance.tests, True).accepted:
        raise GoldProgramError(f"{instance.id}: gold program fails its own tests")
    matrix, fixed = [], []
    for line, clist in zip(instance.lines, instance.candidate_lists):
        fixed.append(line.is_fixed)
        row = []
        for cand in clist.candidates[:rank_cutoff]:
            if cand.code == gold[line.index - 1]:
                row.append(True)
                continue
            mutated = gold.copy()
            mutated[line.index - 1] = cand.code
            src = assemble_lines(instance.lines, mutated, preamble)
            row.append(judge_program(judge, src, instance.tests, True).accepted)
        matrix.append(row)
    return LineAccuracy(instance.id, matrix, fixed)


@dataclass
class OracleStats:
    top_wrong: dict  # problem id -> lines whose top candidate is incorrect
    none_right: dict  # problem id -> lines with no correct candidate

    @staticmethod
    def _hist(values: Iterable[int], cap: int) -> dict[str, int]:
        c = Counter(min(v, cap) for v in values)
        return {(f"{k}+" if k == cap else str(k)): c.get(k, 0) for k in range(cap + 1)}

    @property
    def top_wrong_histogram(self) -> dict[str, int]:
        return self._hist(self.top_wrong.values(), 4)

    @property
    def none_right_histogram(self) -> dict[str, int]:
        return self._hist(self.none_right.values(), 3)

    @property
    def oracle_success(self) -> float:
        if not self.none_right:
            return 0.0
        return sum(1 for v in self.none_right.values() if v == 0) / len(self.none_right)


def oracle_stats(accuracies: Iterable[LineAccuracy]) -> OracleStats:
    top_wrong, none_right = {}, {}
    for acc in accuracies:
        rows = [row for row, fx in zip(acc.matrix, acc.fixed) if not fx]
        top_wrong[acc.problem_id] = sum(1 for row in rows if not row or not row[0])
        none_right[acc.problem_id] = sum(1 for row in rows if not any(row))
    return OracleStats(top_wrong, none_right)


def format_curves(curves: dict[str, list[tuple[int, float]]]) -> str:
    """Plain-text success-rate table, one row per method, one column per budget."""
    budgets = sorted({b for pts in curves.values() for b, _ in pts})
    head = f"{'B=':<16}" + "".join(f"{b:>8}" for b in budgets)
    rows = [head]
    for name, pts in curves.items():
        d = dict(pts)
        rows.append(f"{name:<16}" + "".join(f"{d[b] * 100:8.1f}" if b in d else f"{'-':>8}" for b in budgets))
    return "\n".join(rows)
