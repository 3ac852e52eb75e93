"""Load and write problem sets.

Layout of a problem set directory::

    pseudocode.tsv        tab-separated, header row required; columns
                          text, code, workerid, probid, subid, line, indent
                          (extra columns such as hitid are ignored). Rows
                          with empty text are fixed structural lines.
    candidates.jsonl      first record {"format": "linesynth-candidates", "version": 1},
                          then {"problem_id", "line", "rank", "code", "log_prob"};
                          problem_id is "<probid>-<subid>", line is 1-based.
    tests/<probid>/<probid>_testcases_public.txt
    tests/<probid>/<probid>_testcases_hidden.txt
                          test format: input lines, "###ENDINPUT###",
                          output lines, "###ENDOUTPUT###", repeated.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import (DEFAULT_BEAM_SIZE, CandidateList, Candidate, ProblemInstance, PseudocodeLine,
                   StructuralError, TestCase, Visibility)

log = logging.getLogger(__name__)

TSV_COLUMNS = ("text", "code", "workerid", "probid", "subid", "line", "indent")
CANDIDATE_HEADER = {"format": "linesynth-candidates", "version": 1}
END_INPUT = "###ENDINPUT###"
END_OUTPUT = "###ENDOUTPUT###"


class SchemaError(StructuralError):
    def __init__(self, path, lineno, msg):
        super().__init__(f"{path}:{lineno}: {msg}")


@dataclass
class LoadOptions:
    budget: int = 100
    beam_size: int = DEFAULT_BEAM_SIZE
    gold_backfill: bool = False
    backfill_log_prob: float = -20.0
    dedup: bool = False


def parse_tests(text: str, visibility: Visibility) -> list[TestCase]:
    tests, buf, inp = [], [], None
    for line in text.splitlines(keepends=True):
        tag = line.rstrip("\r\n")
        if tag == END_INPUT:
            inp, buf = "".join(buf), []
        elif tag == END_OUTPUT:
            if inp is None:
                raise ValueError("###ENDOUTPUT### without input")
            tests.append(TestCase(inp.encode(), "".join(buf).encode(), visibility))
            inp, buf = None, []
        else:
            buf.append(line)
    return tests


def format_tests(tests: Iterable[TestCase]) -> str:
    out = []
    for t in tests:
        for part, tag in ((t.input, END_INPUT), (t.expected_output, END_OUTPUT)):
            s = part.decode()
            if s and not s.endswith("\n"):
                s += "\n"
            out.append(s + tag + "\n")
    return "".join(out)


def read_pseudocode_tsv(path: str) -> dict[str, list[dict]]:
    """Rows grouped by problem id, in file order."""
    groups: dict[str, list[dict]] = defaultdict(list)
    with open(path, newline="") as f:
        reader = csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        missing = [c for c in TSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(path, 1, f"missing columns {missing}")
        for lineno, row in enumerate(reader, 2):
            try:
                row["line"], row["indent"] = int(row["line"]), int(row["indent"])
            except (TypeError, ValueError):
                raise SchemaError(path, lineno, "line and indent must be integers") from None
            row["_lineno"] = lineno
            groups[f"{row['probid']}-{row['subid']}"].append(row)
    return groups


def read_candidates(path: str) -> dict[str, dict[int, list[tuple[int, str, float]]]]:
    """problem id -> line -> [(rank, code, log_prob)] in file order."""
    out: dict = defaultdict(lambda: defaultdict(list))
    seen = set()
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            if not raw.strip():
                continue
            try:
                d = json.loads(raw)
            except ValueError:
                raise SchemaError(path, lineno, "invalid JSON") from None
            if lineno == 1:
                if d.get("format") != CANDIDATE_HEADER["format"] or d.get("version") != 1:
                    raise SchemaError(path, lineno, "missing version-1 candidates header")
                continue
            try:
                key = (str(d["problem_id"]), int(d["line"]), int(d["rank"]))
                code, lp = str(d["code"]), float(d["log_prob"])
            except (KeyError, TypeError, ValueError):
                raise SchemaError(path, lineno, "record needs problem_id, line, rank, code, log_prob") from None
            if key in seen:
                raise SchemaError(path, lineno, f"duplicate (problem, line, rank) {key}")
            seen.add(key)
            out[key[0]][key[1]].append((key[2], code, lp))
    return out


def _build_list(pid: str, index: int, raw: list[tuple[int, str, float]], opts: LoadOptions) -> list[tuple[str, float]]:
    by_rank = sorted(raw)
    scored = [(code, lp) for _, code, lp in by_rank]
    ordered = sorted(scored, key=lambda cl: -cl[1])
    if ordered != scored:
        log.warning("%s line %d: candidate ranks disagree with log_probs; resorted", pid, index)
    if opts.dedup:
        seen, uniq = set(), []
        for code, lp in ordered:
            if code not in seen:
                seen.add(code)
                uniq.append((code, lp))
        ordered = uniq
    return ordered[: opts.beam_size]


def load_problem_set(root: str, options: Optional[LoadOptions] = None) -> list[ProblemInstance]:
    """Join pseudocode, candidates and tests. Problems missing tests or candidates are rejected with a warning."""
    opts = options or LoadOptions()
    groups = read_pseudocode_tsv(os.path.join(root, "pseudocode.tsv"))
    cands = read_candidates(os.path.join(root, "candidates.jsonl"))
    problems = []
    for pid, rows in groups.items():
        rows = sorted(rows, key=lambda r: r["line"])
        probid = rows[0]["probid"]
        tests = []
        for vis in Visibility:
            tpath = os.path.join(root, "tests", probid, f"{probid}_testcases_{vis.value}.txt")
            if os.path.exists(tpath):
                with open(tpath) as f:
                    tests.extend(parse_tests(f.read(), vis))
        if not any(t.visibility is Visibility.PUBLIC for t in tests):
            log.warning("%s: no public tests, problem rejected", pid)
            continue
        lines, lists, gold = [], [], []
        ok = True
        for idx, row in enumerate(rows, 1):
            text = row["text"] or ""
            lines.append(PseudocodeLine(idx, text, row["indent"]))
            gold.append(row["code"])
            if not text.strip():
                lists.append(CandidateList.fixed(idx, row["code"]))
                continue
            scored = _build_list(pid, idx, cands.get(pid, {}).get(idx, []), opts)
            if not scored:
                if not opts.gold_backfill:
                    log.warning("%s line %d: no candidates, problem rejected", pid, idx)
                    ok = False
                    break
                scored = [(row["code"], opts.backfill_log_prob)]
            elif opts.gold_backfill and row["code"] not in [c for c, _ in scored]:
                # appended at the tail so it never outranks model candidates
                tail = min(opts.backfill_log_prob, scored[-1][1])
                scored = scored[: opts.beam_size - 1] + [(row["code"], tail)]
            lists.append(CandidateList(idx, tuple(Candidate(c, lp, r) for r, (c, lp) in enumerate(scored, 1))))
        if not ok:
            continue
        problems.append(ProblemInstance(pid, tuple(lines), tuple(lists), tuple(tests), opts.budget, tuple(gold)))
    return problems


def write_problem_set(problems: Iterable[ProblemInstance], root: str) -> None:
    """Write problems in canonical order (problem id, line, rank)."""
    problems = sorted(problems, key=lambda p: p.id)
    os.makedirs(root, exist_ok=True)
    with open(os.path.join(root, "pseudocode.tsv"), "w", newline="") as f:
        f.write("\t".join(TSV_COLUMNS) + "\n")
        for p in problems:
            probid, _, subid = p.id.partition("-")
            gold = p.gold_code or tuple(c[1].code for c in p.candidate_lists)
            for line, code in zip(p.lines, gold):
                for field_ in (line.text, code):
                    if "\t" in field_ or "\n" in field_:
                        raise ValueError(f"{p.id}: tabs/newlines cannot be stored in the TSV")
                f.write("\t".join([line.text, code, "", probid, subid, str(line.index), str(line.indent)]) + "\n")
    with open(os.path.join(root, "candidates.jsonl"), "w") as f:
        f.write(json.dumps(CANDIDATE_HEADER) + "\n")
        for p in problems:
            for line, clist in zip(p.lines, p.candidate_lists):
                if line.is_fixed:
                    continue
                for c in clist.candidates:
                    f.write(json.dumps({"problem_id": p.id, "line": line.index, "rank": c.rank,
                                        "code": c.code, "log_prob": c.log_prob}) + "\n")
    by_probid: dict[str, list[TestCase]] = {}
    for p in problems:
        by_probid.setdefault(p.id.partition("-")[0], list(p.tests))
    for probid, tests in by_probid.items():
        tdir = os.path.join(root, "tests", probid)
        os.makedirs(tdir, exist_ok=True)
        for vis in Visibility:
            subset = [t for t in tests if t.visibility is vis]
            if subset:
                with open(os.path.join(tdir, f"{probid}_testcases_{vis.value}.txt"), "w") as f:
                    f.write(format_tests(subset))
