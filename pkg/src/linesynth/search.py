"""Budgeted best-first search over candidate combinations with localization hooks."""

from __future__ import annotations

import enum
import heapq
import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Sequence

from .assembler import DEFAULT_PREAMBLE, AssembledSource, assemble
from .core import (CandidateList, DownWeightTable, OutcomeKind, ProblemInstance, Selection,
                   TrialOutcome, effective_log_prob, selection_log_prob)
from .judge import Judge, JudgeInfrastructureError, compile_outcome, run_public_tests
from .localize import Localizer, Verdict, VerdictKind

log = logging.getLogger(__name__)


class PrefixTrie:
    """Set of rank-vector prefixes; a stored prefix blocks every extension of itself."""

    _END = object()

    def __init__(self, prefixes: Iterable[Sequence[int]] = ()):
        self._root: dict = {}
        self._size = 0
        for p in prefixes:
            self.insert(p)

    def __len__(self) -> int:
        return self._size

    def insert(self, prefix: Sequence[int]) -> bool:
        """Add ``prefix``; returns False when an existing shorter (or equal) prefix covers it."""
        node = self._root
        for r in prefix:
            if self._END in node:
                return False
            node = node.setdefault(r, {})
        if self._END in node:
            return False
        # longer stored prefixes under this node become redundant
        self._size -= self._count(node)
        node.clear()
        node[self._END] = True
        self._size += 1
        return True

    def _count(self, node: dict) -> int:
        return sum(1 if k is self._END else self._count(v) for k, v in node.items())

    def blocks(self, ranks: Sequence[int]) -> bool:
        node = self._root
        for r in ranks:
            if self._END in node:
                return True
            node = node.get(r)
            if node is None:
                return False
        return self._END in node

    __contains__ = blocks

    def prefixes(self) -> list[tuple[int, ...]]:
        out: list[tuple[int, ...]] = []

        def walk(node, path):
            for k, v in node.items():
                if k is self._END:
                    out.append(tuple(path))
                else:
                    walk(v, path + [k])

        walk(self._root, [])
        return sorted(out)


class Frontier:
    """Max-heap on priority, ties broken by the lexicographically smaller rank vector."""

    def __init__(self):
        self._heap: list[tuple[float, tuple[int, ...]]] = []
        self._members: set[tuple[int, ...]] = set()

    def __len__(self) -> int:
        return len(self._heap)

    def __contains__(self, selection: Selection) -> bool:
        return selection.ranks in self._members

    def push(self, selection: Selection, priority: float) -> None:
        if selection.ranks in self._members:
            return
        self._members.add(selection.ranks)
        heapq.heappush(self._heap, (-priority, selection.ranks))

    def pop(self) -> tuple[Selection, float]:
        neg, ranks = heapq.heappop(self._heap)
        self._members.discard(ranks)
        return Selection(ranks), -neg

    def entries(self) -> list[tuple[Selection, float]]:
        return [(Selection(r), -p) for p, r in self._heap]

    def rebuild(self, lists: Sequence[CandidateList], weights: DownWeightTable,
                explored: set, blacklist: PrefixTrie) -> None:
        keep = [r for _, r in self._heap if r not in explored and not blacklist.blocks(r)]
        self._heap = [(-effective_log_prob(Selection(r), lists, weights), r) for r in keep]
        heapq.heapify(self._heap)
        self._members = set(keep)


def push_successors(frontier: Frontier, explored: set, blacklist: PrefixTrie, selection: Selection,
                    lists: Sequence[CandidateList], weights: Optional[DownWeightTable]) -> list[Selection]:
    pushed = []
    for line, (clist, r) in enumerate(zip(lists, selection.ranks), 1):
        if r >= len(clist):
            continue
        succ = selection.bump(line)
        if succ.ranks in explored or succ in frontier or blacklist.blocks(succ.ranks):
            continue
        frontier.push(succ, effective_log_prob(succ, lists, weights))
        pushed.append(succ)
    return pushed


def rebuild_heap(frontier: Frontier, lists: Sequence[CandidateList], weights: DownWeightTable,
                 explored: set, blacklist: PrefixTrie) -> None:
    frontier.rebuild(lists, weights, explored, blacklist)


class SearchStatus(str, enum.Enum):
    ACCEPTED = "accepted"
    BUDGET_EXHAUSTED = "budget_exhausted"
    SPACE_EXHAUSTED = "space_exhausted"
    INFRA_ERROR = "infra_error"


@dataclass
class SearchConfig:
    budget: Optional[int] = None  # None: use the instance's budget
    alpha: float = 0.1
    preamble: str = DEFAULT_PREAMBLE


@dataclass(frozen=True)
class TraceRecord:
    trial: int  # 1-based index of the compile call that judged this program
    ranks: tuple[int, ...]
    priority: float
    outcome: TrialOutcome
    verdict: Optional[Verdict] = None
    probes_used: int = 0
    budget_remaining: int = 0

    def to_dict(self) -> dict:
        d = {"trial": self.trial, "ranks": list(self.ranks), "priority": self.priority,
             "outcome": self.outcome.to_dict(), "probes": self.probes_used,
             "budget_remaining": self.budget_remaining}
        if self.verdict is not None:
            d["verdict"] = self.verdict.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TraceRecord":
        v = d.get("verdict")
        return cls(d["trial"], tuple(d["ranks"]), d["priority"], TrialOutcome.from_dict(d["outcome"]),
                   Verdict.from_dict(v) if v else None, d.get("probes", 0), d.get("budget_remaining", 0))


@dataclass
class SearchTrace:
    problem_id: str = ""
    method: str = ""
    budget: int = 0
    records: list[TraceRecord] = field(default_factory=list)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def judged(self) -> list[tuple[int, ...]]:
        return [r.ranks for r in self.records]

    def write_jsonl(self, f: IO[str]) -> None:
        for r in self.records:
            d = {"problem_id": self.problem_id, "method": self.method, "budget": self.budget}
            d.update(r.to_dict())
            f.write(json.dumps(d) + "\n")

    @classmethod
    def read_jsonl(cls, lines: Iterable[str]) -> dict[tuple[str, str], "SearchTrace"]:
        """Traces keyed by (method, problem id)."""
        traces: dict[tuple[str, str], SearchTrace] = {}
        for ln in lines:
            if not ln.strip():
                continue
            d = json.loads(ln)
            key = (d.get("method", ""), d.get("problem_id", ""))
            if key not in traces:
                traces[key] = cls(key[1], key[0], d.get("budget", 0))
            traces[key].records.append(TraceRecord.from_dict(d))
        return traces


@dataclass
class SearchResult:
    status: SearchStatus
    trials_used: int
    budget: int
    trace: SearchTrace
    selection: Optional[Selection] = None
    program: Optional[AssembledSource] = None
    blacklist: Optional[PrefixTrie] = None
    weights: Optional[DownWeightTable] = None
    error: str = ""

    @property
    def accepted(self) -> bool:
        return self.status is SearchStatus.ACCEPTED


def best_first_search(instance: ProblemInstance, judge: Judge, localizer: Optional[Localizer] = None,
                      config: Optional[SearchConfig] = None, method: str = "") -> SearchResult:
    """Judge programs in descending (down-weighted) probability until one passes the public tests."""
    config = config or SearchConfig()
    budget = config.budget if config.budget is not None else instance.budget
    if budget < 1:
        raise ValueError("budget must be >= 1")
    instance = instance.for_search()
    lists = instance.candidate_lists
    weights = DownWeightTable(config.alpha)
    blacklist = PrefixTrie()
    explored: set[tuple[int, ...]] = set()
    frontier = Frontier()
    trace = SearchTrace(instance.id, method or (localizer.name if localizer else "none"), budget)
    if localizer is not None:
        localizer.reset()

    start = instance.top_one()
    frontier.push(start, selection_log_prob(start, lists))
    trials = 0
    best_compiled: Optional[tuple[float, Selection]] = None

    def finish(status, selection=None, error=""):
        if selection is None:
            selection = best_compiled[1] if best_compiled else start
        return SearchResult(status, trials, budget, trace, selection,
                            assemble(instance, selection, config.preamble), blacklist, weights, error)

    while frontier:
        if trials >= budget:
            return finish(SearchStatus.BUDGET_EXHAUSTED)
        selection, priority = frontier.pop()
        if selection.ranks in explored or blacklist.blocks(selection.ranks):
            continue
        explored.add(selection.ranks)
        src = assemble(instance, selection, config.preamble)
        trials += 1
        verdict, probes = None, 0
        try:
            result = judge.compile(src)
            if result.ok:
                lp = selection_log_prob(selection, lists)
                if best_compiled is None or lp > best_compiled[0]:
                    best_compiled = (lp, selection)
                try:
                    outcome = run_public_tests(judge, result.artifact, instance.public_tests)
                finally:
                    judge.release(result.artifact)
            else:
                outcome = compile_outcome(src, result)
                if localizer is not None:
                    verdict, probes = localizer.localize(instance, selection, outcome.line, outcome.message,
                                                         budget - trials, judge, config.preamble)
                    trials += probes
        except JudgeInfrastructureError as e:
            log.error("%s: judge failure: %s", instance.id, e)
            return finish(SearchStatus.INFRA_ERROR, error=str(e))
        trace.records.append(TraceRecord(trials - probes, selection.ranks, priority, outcome, verdict,
                                         probes, budget - trials))
        if outcome.accepted:
            return finish(SearchStatus.ACCEPTED, selection)

        if verdict is not None and verdict.kind is VerdictKind.DOWN_WEIGHT:
            weights.apply(verdict.line, selection.ranks[verdict.line - 1])
            rebuild_heap(frontier, lists, weights, explored, blacklist)
        elif verdict is not None and verdict.kind is VerdictKind.BLACKLIST:
            blacklist.insert(selection.prefix(verdict.line))
        push_successors(frontier, explored, blacklist, selection, lists, weights)

    if trials >= budget:
        return finish(SearchStatus.BUDGET_EXHAUSTED)
    return finish(SearchStatus.SPACE_EXHAUSTED)
