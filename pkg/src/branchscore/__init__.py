"""Conditional-branching timed interactive scores over a constraint engine."""

from .engine import Engine, TickResult, run_program
from .score import Score, compile_score, example_score, validate_score
from .scorefile import generate_benchmark, parse_score, serialize_score

__all__ = [
    "Engine",
    "TickResult",
    "run_program",
    "Score",
    "compile_score",
    "example_score",
    "validate_score",
    "generate_benchmark",
    "parse_score",
    "serialize_score",
]
