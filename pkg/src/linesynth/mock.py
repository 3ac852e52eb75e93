"""Deterministic simulated judge driven by per-candidate labels.

MockSpec JSON schema (version 1)::

    {
      "format": "linesynth-mockspec", "version": 1,
      "seed": 0,
      "gold": [1, 2, 1],
      "offset_weights": {"0": 0.783, "1": 0.15, "2": 0.067},
      "lines": [                               # one entry per logical line
        {"text": "read n", "indent": 1,
         "candidates": [
            {"code": "cin >> n;", "log_prob": -0.1, "label": "correct"},
            {"code": "cin << n;", "log_prob": -0.5, "label": "compile_bad",
             "error": "type_mismatch", "context": [[1, 2]]},
            {"code": "cout << n;", "log_prob": -0.9, "label": "semantic_bad"}]}
      ]
    }

``context`` lists (line, rank) pairs that must all be selected for a
compile_bad candidate to fail; omit it for a context-free offender.
``otherwise`` ("correct" or "semantic_bad") says how such a candidate
behaves when its context is not selected.
``message`` on a candidate overrides the synthetic error text.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import struct
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterable, Optional, Sequence

from .assembler import AssembledSource, assemble
from .core import (CandidateList, OutcomeKind, ProblemInstance, PseudocodeLine, Selection,
                   StructuralError, TestCase, TrialOutcome)
from .judge import CompileResult, RunResult, RunStatus

CORRECT, COMPILE_BAD, SEMANTIC_BAD = "correct", "compile_bad", "semantic_bad"
DEFAULT_OFFSET_WEIGHTS = {0: 0.783, 1: 0.15, 2: 0.067}

ERROR_TEMPLATES = {
    "undeclared": "'v{line}' was not declared in this scope",
    "redeclaration": "redeclaration of 'int v{line}'",
    "type_mismatch": "no match for 'operator>>' (operand types are 'std::ostream' and 'int')",
    "stray_token": "expected ';' before '}}' token",
}


@dataclass(frozen=True)
class Label:
    kind: str = CORRECT
    context: frozenset = frozenset()
    error: str = "undeclared"
    message: str = ""
    # how a context-dependent compile_bad candidate behaves when its context is absent
    otherwise: str = CORRECT

    def __post_init__(self):
        if self.kind not in (CORRECT, COMPILE_BAD, SEMANTIC_BAD):
            raise StructuralError(f"unknown label {self.kind!r}")
        if self.otherwise not in (CORRECT, SEMANTIC_BAD):
            raise StructuralError(f"otherwise must be correct or semantic_bad, got {self.otherwise!r}")
        if self.error not in ERROR_TEMPLATES:
            raise StructuralError(f"unknown error class {self.error!r}")
        object.__setattr__(self, "context", frozenset(tuple(p) for p in self.context))

    @property
    def semantic_bad(self) -> bool:
        return self.kind == SEMANTIC_BAD or (self.kind == COMPILE_BAD and self.otherwise == SEMANTIC_BAD)


@dataclass
class MockSpec:
    labels: dict  # (line, rank) -> Label
    gold: tuple[int, ...]
    offset_weights: dict = field(default_factory=lambda: dict(DEFAULT_OFFSET_WEIGHTS))
    seed: int = 0
    # optional problem description so a spec file is self-contained
    instance: Optional[ProblemInstance] = None

    def __post_init__(self):
        self.gold = tuple(self.gold)
        self.offset_weights = {int(k): float(v) for k, v in self.offset_weights.items()}
        if any(k < 0 or v < 0 for k, v in self.offset_weights.items()) or sum(self.offset_weights.values()) <= 0:
            raise StructuralError("offset weights must be non-negative with positive total")
        # a context-dependent offender may sit in the gold program as long as its context does not
        for line, r in enumerate(self.gold, 1):
            if self.label(line, r).semantic_bad:
                raise StructuralError(f"gold candidate ({line}, {r}) is labeled semantic_bad")
        if self.true_offender(self.gold) is not None:
            raise StructuralError("gold selection does not compile under its own labels")
        if self.instance is not None:
            for clist in self.instance.candidate_lists:
                for cand in clist.candidates:
                    if (clist.line_index, cand.rank) not in self.labels:
                        raise StructuralError(f"no label for ({clist.line_index}, {cand.rank})")
        self._offsets = sorted(self.offset_weights)
        self._cum = list(accumulate(self.offset_weights[k] for k in self._offsets))

    @property
    def num_lines(self) -> int:
        return len(self.gold)

    def label(self, line: int, rank: int) -> Label:
        return self.labels.get((line, rank), Label())

    def draw_offset(self, ranks: Sequence[int]) -> int:
        h = hashlib.sha256(f"{self.seed}|{','.join(map(str, ranks))}".encode()).digest()
        u = struct.unpack(">Q", h[:8])[0] / 2.0 ** 64
        return self._offsets[bisect.bisect_right(self._cum, u * self._cum[-1])]

    def true_offender(self, ranks: Sequence[int]) -> Optional[int]:
        chosen = {(i, r) for i, r in enumerate(ranks, 1)}
        for i, r in enumerate(ranks, 1):
            lab = self.label(i, r)
            if lab.kind == COMPILE_BAD and lab.context <= chosen:
                return i
        return None

    def mock_compile(self, ranks: Sequence[int]) -> tuple[Optional[int], Optional[int], str]:
        """(true offender, reported line, message), or (None, None, '') on success."""
        i_true = self.true_offender(ranks)
        if i_true is None:
            return None, None, ""
        reported = min(i_true + self.draw_offset(ranks), len(ranks))
        lab = self.label(i_true, ranks[i_true - 1])
        msg = lab.message or ERROR_TEMPLATES[lab.error].format(line=i_true)
        return i_true, reported, msg

    def mock_run(self, ranks: Sequence[int]) -> TrialOutcome:
        for i, r in enumerate(ranks, 1):
            if self.label(i, r).semantic_bad:
                return TrialOutcome(OutcomeKind.WRONG_OUTPUT, test_index=0)
        return TrialOutcome(OutcomeKind.ACCEPTED)

    # serialization

    def to_dict(self) -> dict:
        if self.instance is None:
            raise ValueError("only specs carrying an instance can be serialized")
        lines = []
        for line, clist in zip(self.instance.lines, self.instance.candidate_lists):
            cands = []
            for c in clist.candidates:
                lab = self.label(line.index, c.rank)
                d = {"code": c.code, "log_prob": c.log_prob, "label": lab.kind}
                if lab.kind == COMPILE_BAD:
                    d["error"] = lab.error
                    if lab.context:
                        d["context"] = sorted(list(p) for p in lab.context)
                    if lab.otherwise != CORRECT:
                        d["otherwise"] = lab.otherwise
                if lab.message:
                    d["message"] = lab.message
                cands.append(d)
            lines.append({"text": line.text, "indent": line.indent, "candidates": cands})
        return {
            "format": "linesynth-mockspec", "version": 1,
            "id": self.instance.id, "seed": self.seed, "budget": self.instance.budget,
            "gold": list(self.gold),
            "offset_weights": {str(k): v for k, v in sorted(self.offset_weights.items())},
            "lines": lines,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MockSpec":
        if d.get("format") != "linesynth-mockspec" or d.get("version") != 1:
            raise StructuralError("not a version-1 linesynth mockspec")
        labels, plines, clists = {}, [], []
        for idx, ld in enumerate(d["lines"], 1):
            plines.append(PseudocodeLine(idx, ld.get("text", f"line {idx}"), int(ld.get("indent", 0))))
            scored = []
            for rank, cd in enumerate(ld["candidates"], 1):
                scored.append((cd["code"], float(cd["log_prob"])))
                labels[(idx, rank)] = Label(cd.get("label", CORRECT),
                                            frozenset(tuple(p) for p in cd.get("context", ())),
                                            cd.get("error", "undeclared"), cd.get("message", ""),
                                            cd.get("otherwise", CORRECT))
            clist = CandidateList.from_scored(idx, scored)
            if [c.code for c in clist.candidates] != [s[0] for s in scored]:
                raise StructuralError(f"line {idx}: candidates must be listed in descending log_prob")
            clists.append(clist)
        inst = ProblemInstance(d.get("id", "mock"), tuple(plines), tuple(clists),
                               (TestCase(b"", b""),), int(d.get("budget", 100)))
        return cls(labels, tuple(d["gold"]), d.get("offset_weights", DEFAULT_OFFSET_WEIGHTS),
                   int(d.get("seed", 0)), inst)

    def dump(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "MockSpec":
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class MockJudge:
    """Judge over MockSpec labels; reads the rank vector carried by AssembledSource."""

    spec: MockSpec
    compile_calls: int = 0
    compiled: list = field(default_factory=list)  # rank vectors, in call order

    def compile(self, src: AssembledSource) -> CompileResult:
        if src.ranks is None:
            raise StructuralError("mock judge needs sources assembled from a selection")
        self.compile_calls += 1
        self.compiled.append(src.ranks)
        _, reported, msg = self.spec.mock_compile(src.ranks)
        if reported is None:
            return CompileResult(True, artifact=src.ranks)
        return CompileResult(False, physical_line=src.physical_line_of(reported), column=1,
                             message=msg, raw_stderr=f"main.cpp:{reported}:1: error: {msg}\n")

    def run(self, artifact, test: TestCase) -> RunResult:
        if self.spec.mock_run(artifact).accepted:
            return RunResult(RunStatus.PASSED, test.expected_output)
        return RunResult(RunStatus.WRONG_OUTPUT)

    def release(self, artifact) -> None:
        pass


def spec_from_grid(log_probs: Sequence[Sequence[float]], labels: dict, gold: Iterable[int],
                   problem_id: str = "mock", budget: int = 100, seed: int = 0,
                   offset_weights: Optional[dict] = None, indents: Optional[Sequence[int]] = None) -> MockSpec:
    """Build a MockSpec plus instance from per-line log-prob lists (already sorted descending).

    Cells missing from ``labels`` are labeled correct.
    """
    L = len(log_probs)
    for lps in log_probs:
        if any(b > a for a, b in zip(lps, lps[1:])):
            raise StructuralError("grid log-probs must be sorted in descending order")
    indents = indents or [0] * L
    plines = tuple(PseudocodeLine(i, f"line {i}", indents[i - 1]) for i in range(1, L + 1))
    clists = tuple(CandidateList.from_scored(i, [(f"s{i}_{r}();", lp) for r, lp in enumerate(lps, 1)])
                   for i, lps in enumerate(log_probs, 1))
    inst = ProblemInstance(problem_id, plines, clists, (TestCase(b"", b""),), budget)
    # cells without an explicit label are correct
    full = {(i, r): labels.get((i, r), Label()) for i, lps in enumerate(log_probs, 1) for r in range(1, len(lps) + 1)}
    return MockSpec(full, tuple(gold), offset_weights or dict(DEFAULT_OFFSET_WEIGHTS), seed, inst)


def assemble_for(spec: MockSpec, selection: Selection) -> AssembledSource:
    return assemble(spec.instance, selection, preamble="")
