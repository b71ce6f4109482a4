"""Datalog evaluation with choice-bounded relations."""
from .core import BoundSpec, Program
from .engine import Database, evaluate
from .metrics import check_bound, diff_databases
from .naive import evaluate_naive
from .parser import ParseError, format_program, parse_bounds, parse_program
from .transform import apply_choice_bound, hash_bucket, validate_specs

__all__ = [
    "BoundSpec", "Database", "ParseError", "Program", "apply_choice_bound", "check_bound",
    "diff_databases", "evaluate", "evaluate_naive", "format_program", "hash_bucket",
    "parse_bounds", "parse_program", "validate_specs",
]
