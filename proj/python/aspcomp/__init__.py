"""ASP partial-compilation toolkit.

Splits an answer-set program into a solver-facing part and a compilable
stratified part, specializes the latter into an evaluation plan, and solves
the whole program through a candidate-generation / compiled-evaluation /
constraint-learning loop.
"""

from ._core import (
    AspError,
    canonical,
    check,
    emit_source,
    enumerate_answer_sets,
    evaluate,
    perfect_model,
    predicates,
    program_hash,
    rule_count,
    solve,
    split,
    suggest,
)

__all__ = [
    "AspError",
    "canonical",
    "check",
    "emit_source",
    "enumerate_answer_sets",
    "evaluate",
    "perfect_model",
    "predicates",
    "program_hash",
    "rule_count",
    "solve",
    "split",
    "suggest",
]
