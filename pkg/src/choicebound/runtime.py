"""Runtime semantics of head/comparison arithmetic, shared by both evaluators."""
from __future__ import annotations

import operator
from typing import Callable

from .core import ArithExpr, Constant, SymbolTable, Term, Variable, emod, wrap64
from .hashing import mix_fold


class EvaluationError(RuntimeError):
    pass


def wrap_add(a: int, b: int) -> int:
    return wrap64(a + b)


def wrap_sub(a: int, b: int) -> int:
    return wrap64(a - b)


def wrap_mul(a: int, b: int) -> int:
    return wrap64(a * b)


def mod(a: int, b: int) -> int:
    try:
        return emod(a, b)
    except ZeroDivisionError:
        raise EvaluationError("modulo by zero") from None


def mix(seed: int, values: tuple[int, ...]) -> int:
    return mix_fold(seed, values)


class PerfectHasher:
    """Test hasher: numbers counting combinations per (relation, key) in first-seen order.

    Injective per key, so with a limit at least the number of distinct
    combinations per key no two tuples ever share a bucket.
    """

    def __init__(self) -> None:
        self.seen: dict[tuple, dict[tuple, int]] = {}

    def __call__(self, relation: int, key: tuple, combo: tuple) -> int:
        slots = self.seen.setdefault((relation, key), {})
        idx = slots.get(combo)
        if idx is None:
            idx = slots[combo] = len(slots)
        return idx


BINARY = {"+": wrap_add, "-": wrap_sub, "*": wrap_mul, "%": mod}

COMPARE: dict[str, Callable[[int, int], bool]] = {
    "=": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


def constant_value(c: Constant, symbols: SymbolTable) -> int:
    return symbols.intern(c.value) if isinstance(c.value, str) else c.value


def eval_term(term: Term, env: dict[str, int], symbols: SymbolTable, perfect: PerfectHasher) -> int:
    """Evaluate a term to its runtime int (symbols are their ordinals)."""
    if isinstance(term, Variable):
        return env[term.name]
    if isinstance(term, Constant):
        return constant_value(term, symbols)
    assert isinstance(term, ArithExpr)
    ops = term.operands
    if term.op == "ord":
        return eval_term(ops[0], env, symbols, perfect)
    if term.op == "mix":
        return mix(ops[0].value, tuple(eval_term(o, env, symbols, perfect) for o in ops[1:]))
    if term.op == "perfect":
        k = ops[1].value
        vals = [eval_term(o, env, symbols, perfect) for o in ops[2:]]
        return perfect(constant_value(ops[0], symbols), tuple(vals[:k]), tuple(vals[k:]))
    return BINARY[term.op](eval_term(ops[0], env, symbols, perfect), eval_term(ops[1], env, symbols, perfect))
