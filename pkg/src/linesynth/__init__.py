"""Search for programs line by line from ranked per-line translation candidates."""

from .assembler import AssembledSource, assemble, complete_prefix
from .core import (Candidate, CandidateList, DownWeightTable, ProblemInstance, PseudocodeLine, Selection,
                   TestCase, TrialOutcome, Visibility, effective_log_prob, selection_log_prob)
from .judge import CompilerConfig, CompilerJudge
from .localize import ClassifierLocalizer, PrefixPruningLocalizer, ReportedLineLocalizer, make_localizer
from .mock import MockJudge, MockSpec
from .search import SearchConfig, SearchResult, SearchStatus, best_first_search

__version__ = "0.1.0"
