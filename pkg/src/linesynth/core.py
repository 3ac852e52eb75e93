"""Problem, candidate and selection data model plus log-space probability arithmetic."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

DEFAULT_BEAM_SIZE = 100


class StructuralError(ValueError):
    """Raised for malformed problems or selections (programming bugs, not search events)."""


@dataclass(frozen=True)
class PseudocodeLine:
    index: int
    text: str
    indent: int

    @property
    def is_fixed(self) -> bool:
        return not self.text.strip()


@dataclass(frozen=True)
class Candidate:
    code: str
    log_prob: float
    rank: int

    def __post_init__(self):
        if not math.isfinite(self.log_prob):
            raise StructuralError(f"non-finite log_prob {self.log_prob!r}")
        if self.log_prob > 0:
            raise StructuralError(f"log_prob must be <= 0, got {self.log_prob}")
        if self.rank < 1:
            raise StructuralError(f"rank must be >= 1, got {self.rank}")


@dataclass(frozen=True)
class CandidateList:
    line_index: int
    candidates: tuple[Candidate, ...]

    def __post_init__(self):
        if not self.candidates:
            raise StructuralError(f"line {self.line_index}: empty candidate list")
        for pos, cand in enumerate(self.candidates, 1):
            if cand.rank != pos:
                raise StructuralError(f"line {self.line_index}: rank {cand.rank} at position {pos}")
        for a, b in zip(self.candidates, self.candidates[1:]):
            if b.log_prob > a.log_prob:
                raise StructuralError(f"line {self.line_index}: candidates not sorted by log_prob")

    @classmethod
    def from_scored(cls, line_index: int, scored: Iterable[tuple[str, float]]) -> "CandidateList":
        """Build a list from (code, log_prob) pairs, sorting stably by descending log_prob."""
        items = sorted(scored, key=lambda cl: -cl[1])
        return cls(line_index, tuple(Candidate(c, lp, r) for r, (c, lp) in enumerate(items, 1)))

    @classmethod
    def fixed(cls, line_index: int, code: str) -> "CandidateList":
        return cls(line_index, (Candidate(code, 0.0, 1),))

    def __len__(self) -> int:
        return len(self.candidates)

    def __getitem__(self, rank: int) -> Candidate:
        # 1-based access; index 0 and negatives are bugs
        if not 1 <= rank <= len(self.candidates):
            raise StructuralError(f"line {self.line_index}: rank {rank} out of 1..{len(self.candidates)}")
        return self.candidates[rank - 1]


class Visibility(str, enum.Enum):
    PUBLIC = "public"
    HIDDEN = "hidden"


@dataclass(frozen=True)
class TestCase:
    input: bytes
    expected_output: bytes
    visibility: Visibility = Visibility.PUBLIC

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class ProblemInstance:
    id: str
    lines: tuple[PseudocodeLine, ...]
    candidate_lists: tuple[CandidateList, ...]
    tests: tuple[TestCase, ...]
    budget: int = 100
    gold_code: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        validate_lines(self.lines)
        if len(self.lines) != len(self.candidate_lists):
            raise StructuralError(
                f"{self.id}: {len(self.lines)} lines but {len(self.candidate_lists)} candidate lists")
        for line, clist in zip(self.lines, self.candidate_lists):
            if clist.line_index != line.index:
                raise StructuralError(f"{self.id}: candidate list for line {clist.line_index} at {line.index}")
            if line.is_fixed and (len(clist) != 1 or clist[1].log_prob != 0.0):
                raise StructuralError(f"{self.id}: fixed line {line.index} needs one candidate with log_prob 0")
        if not any(t.visibility is Visibility.PUBLIC for t in self.tests):
            raise StructuralError(f"{self.id}: no public test")
        if self.budget < 1:
            raise StructuralError(f"{self.id}: budget must be positive")
        if self.gold_code is not None and len(self.gold_code) != len(self.lines):
            raise StructuralError(f"{self.id}: gold program has wrong line count")

    @property
    def num_lines(self) -> int:
        return len(self.lines)

    @property
    def public_tests(self) -> tuple[TestCase, ...]:
        return tuple(t for t in self.tests if t.visibility is Visibility.PUBLIC)

    @property
    def hidden_tests(self) -> tuple[TestCase, ...]:
        return tuple(t for t in self.tests if t.visibility is Visibility.HIDDEN)

    def for_search(self) -> "ProblemInstance":
        """Copy with hidden tests removed; the only form search is given."""
        return ProblemInstance(self.id, self.lines, self.candidate_lists, self.public_tests,
                               self.budget, self.gold_code)

    def top_one(self) -> "Selection":
        return Selection((1,) * self.num_lines)

    def codes(self, selection: "Selection") -> list[str]:
        selection.check(self.candidate_lists)
        return [clist[r].code for clist, r in zip(self.candidate_lists, selection.ranks)]


def validate_lines(lines: Sequence[PseudocodeLine]) -> None:
    prev = None
    for pos, line in enumerate(lines, 1):
        if line.index != pos:
            raise StructuralError(f"line indices must be contiguous from 1, got {line.index} at {pos}")
        if line.indent < 0:
            raise StructuralError(f"line {pos}: negative indent")
        if prev is None and line.indent != 0:
            raise StructuralError("indent of line 1 must be 0")
        if prev is not None and line.indent > prev.indent + 1:
            raise StructuralError(f"line {pos}: indent jumps from {prev.indent} to {line.indent}")
        prev = line


@dataclass(frozen=True, order=True)
class Selection:
    """One candidate rank per line. Ordering is lexicographic on the rank vector."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))

    def __len__(self) -> int:
        return len(self.ranks)

    def check(self, lists: Sequence[CandidateList]) -> None:
        if len(self.ranks) != len(lists):
            raise StructuralError(f"selection has {len(self.ranks)} ranks for {len(lists)} lines")
        for clist, r in zip(lists, self.ranks):
            if not 1 <= r <= len(clist):
                raise StructuralError(f"line {clist.line_index}: rank {r} out of 1..{len(clist)}")

    def bump(self, line: int) -> "Selection":
        """Selection with the rank at 1-based ``line`` incremented."""
        ranks = list(self.ranks)
        ranks[line - 1] += 1
        return Selection(tuple(ranks))

    def prefix(self, length: int) -> tuple[int, ...]:
        return self.ranks[:length]


class OutcomeKind(str, enum.Enum):
    COMPILE_ERROR = "compile_error"
    RUNTIME_ERROR = "runtime_error"
    WRONG_OUTPUT = "wrong_output"
    TIMEOUT = "timeout"
    ACCEPTED = "accepted"


@dataclass(frozen=True)
class TrialOutcome:
    kind: OutcomeKind
    line: Optional[int] = None  # logical line of a compile error; None when unmapped
    message: str = ""
    test_index: Optional[int] = None  # first failing public test

    @property
    def accepted(self) -> bool:
        return self.kind is OutcomeKind.ACCEPTED

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.line is not None:
            d["line"] = self.line
        if self.message:
            d["message"] = self.message
        if self.test_index is not None:
            d["test_index"] = self.test_index
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialOutcome":
        return cls(OutcomeKind(d["kind"]), d.get("line"), d.get("message", ""), d.get("test_index"))


@dataclass
class DownWeightTable:
    """Counts of down-weight applications per (line, rank), scaled by ``alpha`` each."""

    alpha: float = 0.1
    counts: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def apply(self, line: int, rank: int) -> None:
        self.counts[(line, rank)] += 1

    def count(self, line: int, rank: int) -> int:
        return self.counts.get((line, rank), 0)

    def __bool__(self) -> bool:
        return bool(self.counts)


def selection_log_prob(selection: Selection, lists: Sequence[CandidateList]) -> float:
    selection.check(lists)
    # fsum is correctly rounded, so the value does not depend on summation order
    return math.fsum(clist[r].log_prob for clist, r in zip(lists, selection.ranks))


def effective_log_prob(selection: Selection, lists: Sequence[CandidateList],
                       weights: Optional[DownWeightTable]) -> float:
    selection.check(lists)
    terms = [clist[r].log_prob for clist, r in zip(lists, selection.ranks)]
    if weights:
        log_alpha = math.log(weights.alpha)
        for line, r in enumerate(selection.ranks, 1):
            n = weights.count(line, r)
            if n:
                terms.append(n * log_alpha)
    return math.fsum(terms)
