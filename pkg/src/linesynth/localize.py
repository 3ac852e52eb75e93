"""Turn a compile failure into a search verdict.

Classifier wire protocol (version 1): one JSON object per line on the
classifier's stdin, one JSON reply per line on its stdout, strictly
request/response::

    -> {"version": 1, "pseudocode": [str, ...], "code": [str, ...],
        "i_err": int, "m_err": str}
    <- {"line": int, "confidence": float}

``i_err`` and ``line`` are 1-based logical lines; ``confidence`` lies in
[0, 1]. Anything else on stdout is a protocol violation.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import select
import subprocess
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .assembler import DEFAULT_PREAMBLE, assemble_lines, complete_prefix
from .core import ProblemInstance, Selection
from .judge import Judge, JudgeInfrastructureError, compile_outcome

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
DEFAULT_BETA = 0.95


class VerdictKind(str, enum.Enum):
    DOWN_WEIGHT = "down_weight"
    BLACKLIST = "blacklist"
    ABSTAIN = "abstain"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    line: Optional[int] = None  # i*: the line to down-weight, or the blacklisted prefix length

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "line": self.line}

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(VerdictKind(d["kind"]), d.get("line"))


ABSTAIN = Verdict(VerdictKind.ABSTAIN)


def down_weight(line: int) -> Verdict:
    return Verdict(VerdictKind.DOWN_WEIGHT, line)


def blacklist_prefix(length: int) -> Verdict:
    return Verdict(VerdictKind.BLACKLIST, length)


class Localizer:
    name = "none"

    def reset(self) -> None:
        """Called at the start of each search run."""

    def localize(self, instance: ProblemInstance, selection: Selection, i_err: Optional[int], m_err: str,
                 probe_allowance: int, judge: Judge,
                 preamble: str = DEFAULT_PREAMBLE) -> tuple[Verdict, int]:
        return ABSTAIN, 0


class ReportedLineLocalizer(Localizer):
    """Baseline: blame whatever line the compiler reported."""

    name = "reported"

    def localize(self, instance, selection, i_err, m_err, probe_allowance, judge, preamble=DEFAULT_PREAMBLE):
        if i_err is None:
            return ABSTAIN, 0
        return down_weight(i_err), 0


class PrefixPruningLocalizer(Localizer):
    """Compile completed prefixes ending at i_err - d for d in ``offsets``; blacklist the shortest failure."""

    name = "prefix"

    def __init__(self, offsets: Sequence[int] = (0, 1, 2)):
        self.offsets = tuple(offsets)
        self._memo: dict[tuple[int, ...], bool] = {}

    def reset(self) -> None:
        self._memo.clear()

    def probe_lengths(self, i_err: int) -> list[int]:
        return sorted({max(i_err - d, 1) for d in self.offsets})

    def localize(self, instance, selection, i_err, m_err, probe_allowance, judge, preamble=DEFAULT_PREAMBLE):
        if i_err is None:
            return ABSTAIN, 0
        # the full program was just observed failing; no need to recompile it as a probe
        self._memo[selection.ranks] = True
        used = 0
        for length in self.probe_lengths(i_err):
            key = selection.prefix(length)
            failed = self._memo.get(key)
            if failed is None:
                if used >= probe_allowance:
                    return ABSTAIN, used
                src = complete_prefix(instance, selection, length, preamble)
                used += 1
                try:
                    result = judge.compile(src)
                except JudgeInfrastructureError as e:
                    log.warning("probe of prefix %d failed: %s", length, e)
                    return ABSTAIN, used
                if result.ok:
                    judge.release(result.artifact)
                failed = not result.ok
                self._memo[key] = failed
            if failed:
                return blacklist_prefix(length), used
        return ABSTAIN, used


def classifier_request(instance: ProblemInstance, selection: Selection, i_err: int, m_err: str) -> dict:
    return {"version": PROTOCOL_VERSION,
            "pseudocode": [ln.text for ln in instance.lines],
            "code": instance.codes(selection),
            "i_err": i_err, "m_err": m_err}


class ProtocolError(RuntimeError):
    pass


def parse_classifier_response(raw: str, num_lines: int) -> tuple[int, float]:
    try:
        d = json.loads(raw)
        line, conf = d["line"], d["confidence"]
    except (ValueError, KeyError, TypeError) as e:
        raise ProtocolError(f"malformed response {raw!r}") from e
    if isinstance(line, bool) or not isinstance(line, int) or not 1 <= line <= num_lines:
        raise ProtocolError(f"line {line!r} out of range 1..{num_lines}")
    if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
        raise ProtocolError(f"confidence {conf!r} outside [0, 1]")
    return line, float(conf)


class SubprocessClassifier:
    """Client side of the wire protocol over a child process's stdin/stdout."""

    def __init__(self, argv: Sequence[str], timeout: float = 30.0):
        self.argv = list(argv)
        self.timeout = timeout
        self._proc: Optional[subprocess.Popen] = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                          text=True, bufsize=1)
        return self._proc

    def __call__(self, request: dict) -> str:
        proc = self._ensure()
        try:
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise ProtocolError(f"classifier process died: {e}") from e
        # strictly one reply per request, so nothing is left buffered between calls
        ready, _, _ = select.select([proc.stdout], [], [], self.timeout)
        if not ready:
            proc.kill()
            self._proc = None
            raise ProtocolError(f"classifier did not answer within {self.timeout}s")
        line = proc.stdout.readline()
        if not line:
            raise ProtocolError("classifier closed its output")
        return line

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
            self._proc = None


class ClassifierLocalizer(Localizer):
    """Down-weight the classifier's line when its confidence exceeds ``threshold``.

    ``client`` maps a request dict to the raw response line. After any
    protocol failure the adapter is marked unhealthy and abstains for good.
    """

    name = "classifier"

    def __init__(self, client: Callable[[dict], str], threshold: float = DEFAULT_BETA):
        self.client = client
        self.threshold = threshold
        self.healthy = True

    def localize(self, instance, selection, i_err, m_err, probe_allowance, judge, preamble=DEFAULT_PREAMBLE):
        if i_err is None or not self.healthy:
            return ABSTAIN, 0
        try:
            raw = self.client(classifier_request(instance, selection, i_err, m_err))
            line, conf = parse_classifier_response(raw, instance.num_lines)
        except (ProtocolError, OSError) as e:
            log.warning("classifier marked unhealthy: %s", e)
            self.healthy = False
            return ABSTAIN, 0
        if conf > self.threshold:
            return down_weight(line), 0
        return ABSTAIN, 0


def fixed_answer_client(line: int, confidence: float) -> Callable[[dict], str]:
    """In-process stub that always answers (line, confidence)."""
    return lambda request: json.dumps({"line": line, "confidence": confidence})


_IDENT_RE = re.compile(r"['‘`]([A-Za-z_]\w*)['’]")


def heuristic_classify(request: dict) -> dict:
    """Cheap stand-in for a trained classifier.

    If the message names an identifier that the pseudocode mentions on an
    earlier line than i_err, blame that earlier line (the declaration that
    probably went wrong). Otherwise blame i_err with low confidence.
    """
    i_err = int(request["i_err"])
    m = _IDENT_RE.search(request.get("m_err", ""))
    if m:
        word = re.compile(rf"\b{re.escape(m.group(1))}\b")
        for idx, text in enumerate(request["pseudocode"][: i_err - 1], 1):
            if word.search(text):
                return {"line": idx, "confidence": 0.99}
    return {"line": i_err, "confidence": 0.5}


def heuristic_client(request: dict) -> str:
    return json.dumps(heuristic_classify(request))


def serve(stdin, stdout, classify: Callable[[dict], dict] = heuristic_classify) -> None:
    """Server side of the wire protocol; one response per request line."""
    for raw in stdin:
        if not raw.strip():
            continue
        stdout.write(json.dumps(classify(json.loads(raw))) + "\n")
        stdout.flush()


def make_localizer(name: str, beta: float = DEFAULT_BETA, classifier_cmd: Optional[Sequence[str]] = None,
                   client: Optional[Callable[[dict], str]] = None) -> Optional[Localizer]:
    if name == "none":
        return None
    if name == "reported":
        return ReportedLineLocalizer()
    if name == "prefix":
        return PrefixPruningLocalizer()
    if name == "classifier":
        if client is None:
            client = SubprocessClassifier(classifier_cmd) if classifier_cmd else heuristic_client
        return ClassifierLocalizer(client, beta)
    raise ValueError(f"unknown localizer {name!r}")


@dataclass(frozen=True)
class TrainingRecord:
    problem_id: str
    pseudocode: tuple[str, ...]
    code: tuple[str, ...]
    i_err: Optional[int]
    m_err: str
    label: int

    def to_dict(self) -> dict:
        return {"problem_id": self.problem_id, "pseudocode": list(self.pseudocode), "code": list(self.code),
                "i_err": self.i_err, "m_err": self.m_err, "label": self.label}


def generate_localizer_training_data(instances: Iterable[ProblemInstance], judge: Judge,
                                     preamble: str = DEFAULT_PREAMBLE) -> Iterator[TrainingRecord]:
    """Single-line substitutions of each gold program that fail to compile, labeled with the substituted line."""
    for inst in instances:
        if inst.gold_code is None:
            log.warning("%s: no gold program, skipped", inst.id)
            continue
        gold = list(inst.gold_code)
        result = judge.compile(assemble_lines(inst.lines, gold, preamble))
        if not result.ok:
            log.warning("%s: gold program does not compile, skipped", inst.id)
            continue
        judge.release(result.artifact)
        pseudo = tuple(ln.text for ln in inst.lines)
        for line, clist in zip(inst.lines, inst.candidate_lists):
            for cand in clist.candidates:
                if cand.code == gold[line.index - 1]:
                    continue
                mutated = gold.copy()
                mutated[line.index - 1] = cand.code
                src = assemble_lines(inst.lines, mutated, preamble)
                result = judge.compile(src)
                if result.ok:
                    judge.release(result.artifact)
                    continue
                outcome = compile_outcome(src, result)
                yield TrainingRecord(inst.id, pseudo, tuple(mutated), outcome.line, outcome.message, line.index)
