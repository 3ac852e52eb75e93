"""Stitch selected code lines into a translation unit and map compiler lines back."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import ProblemInstance, PseudocodeLine, Selection, StructuralError, validate_lines

DEFAULT_PREAMBLE = "#include <bits/stdc++.h>\nusing namespace std;"
INDENT = "  "


class AssemblyError(StructuralError):
    pass


@dataclass(frozen=True)
class AssembledSource:
    text: str
    # line_map[k] is the logical line of physical line k + 1, None for preamble and inserted braces
    line_map: tuple[Optional[int], ...]
    num_logical: int
    # ranks of the emitted logical lines when built from a selection (a prefix for probes)
    ranks: Optional[tuple[int, ...]] = None

    @property
    def emitted_lines(self) -> int:
        return max((i for i in self.line_map if i is not None), default=0)

    def physical_line_of(self, logical: int) -> int:
        for pos, i in enumerate(self.line_map, 1):
            if i == logical:
                return pos
        raise KeyError(logical)


def count_open_braces(code: str) -> int:
    """Return '{' minus '}' outside string/char literals and comments.

    An unterminated string or char literal runs to the end of its line.
    """
    depth = 0
    i, n = 0, len(code)
    while i < n:
        ch = code[i]
        if ch == "/" and code.startswith("//", i):
            nl = code.find("\n", i)
            i = n if nl < 0 else nl
            continue
        if ch == "/" and code.startswith("/*", i):
            end = code.find("*/", i + 2)
            i = n if end < 0 else end + 2
            continue
        if ch in "\"'":
            i += 1
            while i < n and code[i] != ch and code[i] != "\n":
                i += 2 if code[i] == "\\" else 1
            i += 1
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        i += 1
    return depth


def _leading_closers(line: PseudocodeLine, code: str) -> int:
    # explicit closing-brace lines from the dataset (fixed, unannotated) absorb indent drops
    if not line.is_fixed:
        return 0
    stripped = code.lstrip()
    return len(stripped) - len(stripped.lstrip("}"))


class _Emitter:
    def __init__(self, preamble: str):
        self.lines: list[str] = []
        self.map: list[Optional[int]] = []
        if preamble:
            for pl in preamble.splitlines():
                self.lines.append(pl)
                self.map.append(None)

    def emit(self, text: str, logical: Optional[int]) -> None:
        self.lines.append(text)
        self.map.append(logical)

    def close(self, from_depth: int, count: int) -> None:
        for k in range(count):
            self.emit(INDENT * max(from_depth - 1 - k, 0) + "}", None)


def _emit_body(lines: Sequence[PseudocodeLine], codes: Sequence[str], upto: int,
               preamble: str) -> _Emitter:
    em = _Emitter(preamble)
    for k in range(upto):
        line, code = lines[k], codes[k]
        if k:
            prev = lines[k - 1]
            drop = prev.indent - line.indent - _leading_closers(line, code)
            if drop > 0:
                em.close(prev.indent, drop)
        em.emit(INDENT * line.indent + code, line.index)
    return em


def _finish(em: _Emitter, num_logical: int, ranks) -> AssembledSource:
    return AssembledSource("\n".join(em.lines) + "\n", tuple(em.map), num_logical,
                           None if ranks is None else tuple(ranks))


def assemble_lines(lines: Sequence[PseudocodeLine], codes: Sequence[str],
                   preamble: str = DEFAULT_PREAMBLE, ranks=None) -> AssembledSource:
    """Assemble explicit code lines; closing braces follow the indent levels."""
    try:
        validate_lines(lines)
    except StructuralError as e:
        raise AssemblyError(str(e)) from None
    if len(codes) != len(lines):
        raise AssemblyError(f"{len(codes)} code lines for {len(lines)} pseudocode lines")
    em = _emit_body(lines, codes, len(lines), preamble)
    if lines:
        em.close(lines[-1].indent, lines[-1].indent)
    return _finish(em, len(lines), ranks)


def assemble(instance: ProblemInstance, selection: Selection,
             preamble: str = DEFAULT_PREAMBLE) -> AssembledSource:
    return assemble_lines(instance.lines, instance.codes(selection), preamble, selection.ranks)


def complete_prefix_lines(lines: Sequence[PseudocodeLine], codes: Sequence[str], prefix_len: int,
                          preamble: str = DEFAULT_PREAMBLE, ranks=None) -> AssembledSource:
    if not 1 <= prefix_len <= len(lines):
        raise AssemblyError(f"prefix length {prefix_len} out of 1..{len(lines)}")
    if prefix_len == len(lines):
        return assemble_lines(lines, codes, preamble, ranks)
    em = _emit_body(lines, codes, prefix_len, preamble)
    opened = count_open_braces("\n".join(em.lines))
    em.close(opened, max(opened, 0))
    return _finish(em, len(lines), None if ranks is None else tuple(ranks)[:prefix_len])


def complete_prefix(instance: ProblemInstance, selection: Selection, prefix_len: int,
                    preamble: str = DEFAULT_PREAMBLE) -> AssembledSource:
    """Lines 1..prefix_len plus as many closing braces as are left open."""
    return complete_prefix_lines(instance.lines, instance.codes(selection), prefix_len,
                                 preamble, selection.ranks)


def map_physical_to_logical(src: AssembledSource, physical_line: int) -> Optional[int]:
    """Logical line for a compiler-reported line; inserted lines borrow the nearest preceding one."""
    if physical_line < 1 or physical_line > len(src.line_map):
        return None
    for k in range(physical_line - 1, -1, -1):
        if src.line_map[k] is not None:
            return src.line_map[k]
    return None
