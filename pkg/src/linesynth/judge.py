"""Compile-and-test harness: the Judge interface and a g++-backed implementation."""

from __future__ import annotations

import enum
import hashlib
import logging
import os
import re
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Any, Optional, Protocol, Sequence

from .assembler import AssembledSource, map_physical_to_logical
from .core import OutcomeKind, TestCase, TrialOutcome, Visibility

log = logging.getLogger(__name__)


class JudgeInfrastructureError(RuntimeError):
    """The harness itself failed (missing compiler, unwritable scratch dir, ...)."""


@dataclass(frozen=True)
class CompileResult:
    ok: bool
    artifact: Any = None
    physical_line: Optional[int] = None
    column: Optional[int] = None
    message: str = ""
    raw_stderr: str = ""


class RunStatus(str, enum.Enum):
    PASSED = "passed"
    WRONG_OUTPUT = "wrong_output"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class RunResult:
    status: RunStatus
    actual: bytes = b""
    exit_status: Optional[int] = None


class Judge(Protocol):
    def compile(self, src: AssembledSource) -> CompileResult: ...

    def run(self, artifact: Any, test: TestCase) -> RunResult: ...

    def release(self, artifact: Any) -> None: ...


_DIAG_RE = re.compile(
    r"^(?P<file>[^\n]*?):(?P<line>\d+):(?:(?P<col>\d+):)?\s*(?:fatal )?error:\s*(?P<msg>.*)$",
    re.MULTILINE)


def parse_first_error(stderr: str) -> Optional[tuple[int, Optional[int], str]]:
    """(line, column, message) of the first error-severity diagnostic, or None."""
    m = _DIAG_RE.search(stderr)
    if m is None:
        return None
    col = m.group("col")
    return int(m.group("line")), int(col) if col else None, m.group("msg").strip()


def normalize_output(text: bytes | str) -> str:
    if isinstance(text, bytes):
        text = text.decode("utf-8", "replace")
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = [ln.rstrip() for ln in text.split("\n")]
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines)


def outputs_match(actual: bytes | str, expected: bytes | str) -> bool:
    return normalize_output(actual) == normalize_output(expected)


def compile_outcome(src: AssembledSource, result: CompileResult) -> TrialOutcome:
    """Turn a failed CompileResult into a TrialOutcome with a logical line (or unmapped)."""
    line = None
    if result.physical_line is not None:
        line = map_physical_to_logical(src, result.physical_line)
    return TrialOutcome(OutcomeKind.COMPILE_ERROR, line, result.message)


def run_public_tests(judge: Judge, artifact: Any, tests: Sequence[TestCase]) -> TrialOutcome:
    for idx, test in enumerate(tests):
        if test.visibility is not Visibility.PUBLIC:
            continue
        res = judge.run(artifact, test)
        if res.status is RunStatus.PASSED:
            continue
        kind = {RunStatus.WRONG_OUTPUT: OutcomeKind.WRONG_OUTPUT,
                RunStatus.RUNTIME_ERROR: OutcomeKind.RUNTIME_ERROR,
                RunStatus.TIMEOUT: OutcomeKind.TIMEOUT}[res.status]
        return TrialOutcome(kind, test_index=idx)
    return TrialOutcome(OutcomeKind.ACCEPTED)


def run_all_tests(judge: Judge, artifact: Any, tests: Sequence[TestCase]) -> bool:
    """True iff every test (public and hidden) passes."""
    return all(judge.run(artifact, t).status is RunStatus.PASSED for t in tests)


def judge_program(judge: Judge, src: AssembledSource, tests: Sequence[TestCase],
                  all_tests: bool = False) -> TrialOutcome:
    """One compile plus test executions. ``all_tests`` also runs hidden tests."""
    result = judge.compile(src)
    if not result.ok:
        return compile_outcome(src, result)
    try:
        if all_tests:
            if run_all_tests(judge, result.artifact, tests):
                return TrialOutcome(OutcomeKind.ACCEPTED)
            return TrialOutcome(OutcomeKind.WRONG_OUTPUT)
        return run_public_tests(judge, result.artifact, tests)
    finally:
        judge.release(result.artifact)


@dataclass
class CompilerConfig:
    compiler: str = "g++"
    flags: tuple[str, ...] = ("-std=c++17", "-O1", "-w")
    compile_timeout: float = 30.0
    run_timeout: float = 2.0
    output_limit: int = 1 << 20
    cache: bool = False

    @classmethod
    def from_env(cls, **overrides) -> "CompilerConfig":
        cfg = cls()
        if "LINESYNTH_CXX" in os.environ:
            cfg.compiler = os.environ["LINESYNTH_CXX"]
        if "LINESYNTH_CXXFLAGS" in os.environ:
            cfg.flags = tuple(shlex.split(os.environ["LINESYNTH_CXXFLAGS"]))
        for k, v in overrides.items():
            if v is not None:
                setattr(cfg, k, v)
        return cfg


@dataclass
class _Binary:
    path: str
    workdir: str
    cached: bool = False


@dataclass
class CompilerJudge:
    """Judge that shells out to a C++ compiler; each compile gets its own scratch dir."""

    config: CompilerConfig = field(default_factory=CompilerConfig)
    compile_calls: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def available(self) -> bool:
        return shutil.which(self.config.compiler) is not None

    def compile(self, src: AssembledSource) -> CompileResult:
        self.compile_calls += 1
        key = hashlib.sha256(src.text.encode()).hexdigest()
        if self.config.cache and key in self._cache:
            return self._cache[key]
        try:
            workdir = tempfile.mkdtemp(prefix="linesynth-")
        except OSError as e:
            raise JudgeInfrastructureError(f"cannot create scratch dir: {e}") from e
        source = os.path.join(workdir, "main.cpp")
        binary = os.path.join(workdir, "main")
        with open(source, "w") as f:
            f.write(src.text)
        cmd = [self.config.compiler, *self.config.flags, source, "-o", binary]
        env = dict(os.environ, LC_ALL="C", LANG="C")  # ASCII quotes in diagnostics
        try:
            proc = subprocess.run(cmd, capture_output=True, timeout=self.config.compile_timeout, env=env)
        except FileNotFoundError as e:
            shutil.rmtree(workdir, ignore_errors=True)
            raise JudgeInfrastructureError(f"compiler not found: {self.config.compiler}") from e
        except subprocess.TimeoutExpired:
            shutil.rmtree(workdir, ignore_errors=True)
            return CompileResult(False, message="compiler timeout")
        stderr = proc.stderr.decode("utf-8", "replace").replace(source, "main.cpp")
        if proc.returncode == 0:
            result = CompileResult(True, artifact=_Binary(binary, workdir, self.config.cache),
                                   raw_stderr=stderr)
        else:
            shutil.rmtree(workdir, ignore_errors=True)
            parsed = parse_first_error(stderr)
            if parsed is None:
                # linker failure or ICE: no usable line
                last = stderr.strip().splitlines()[-1] if stderr.strip() else "compilation failed"
                result = CompileResult(False, message=last, raw_stderr=stderr)
            else:
                line, col, msg = parsed
                result = CompileResult(False, physical_line=line, column=col, message=msg, raw_stderr=stderr)
        if self.config.cache:
            self._cache[key] = result
        return result

    def run(self, artifact: _Binary, test: TestCase) -> RunResult:
        out_path = os.path.join(artifact.workdir, "stdout.txt")
        with open(out_path, "wb") as out:
            try:
                proc = subprocess.run([artifact.path], input=test.input, stdout=out,
                                      stderr=subprocess.DEVNULL, timeout=self.config.run_timeout,
                                      cwd=artifact.workdir)
            except subprocess.TimeoutExpired:
                return RunResult(RunStatus.TIMEOUT)
            except OSError as e:
                raise JudgeInfrastructureError(f"cannot execute {artifact.path}: {e}") from e
        if os.path.getsize(out_path) > self.config.output_limit:
            return RunResult(RunStatus.WRONG_OUTPUT)
        with open(out_path, "rb") as f:
            actual = f.read()
        if proc.returncode != 0:
            return RunResult(RunStatus.RUNTIME_ERROR, actual, proc.returncode)
        if outputs_match(actual, test.expected_output):
            return RunResult(RunStatus.PASSED, actual)
        return RunResult(RunStatus.WRONG_OUTPUT, actual)

    def release(self, artifact: Optional[_Binary]) -> None:
        if artifact is not None and not artifact.cached:
            shutil.rmtree(artifact.workdir, ignore_errors=True)

    def close(self) -> None:
        for res in self._cache.values():
            if res.ok:
                shutil.rmtree(res.artifact.workdir, ignore_errors=True)
        self._cache.clear()
