"""Datalog intermediate representation, value model and symbol interning.

Programs are immutable trees of frozen dataclasses. Symbol constants keep
their text inside a Program; ordinals are only assigned when a program is
loaded into a Database, in a canonical order, so that two programs compare
structurally without reference to any symbol table.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1
_U64 = (1 << 64) - 1

SYMBOL = "symbol"
NUMBER = "number"
COLUMN_TYPES = (SYMBOL, NUMBER)

BOUNDED_SUFFIX = "__bounded"
BUCKET_COLUMN = "__bucket"


def wrap64(x: int) -> int:
    """Reduce an arbitrary int to signed 64-bit two's complement."""
    x &= _U64
    return x - (1 << 64) if x > INT64_MAX else x


def u64(x: int) -> int:
    return x & _U64


def emod(a: int, b: int) -> int:
    """Euclidean remainder: result lies in [0, |b|)."""
    if b == 0:
        raise ZeroDivisionError("modulo by zero")
    r = a % b
    return r + abs(b) if r < 0 else r


class UnknownOrdinalError(KeyError):
    pass


@dataclass(frozen=True)
class SymbolRef:
    """Handle of an interned symbol. Equal iff ordinals are equal."""

    ordinal: int


Value = Union[SymbolRef, int]


class SymbolTable:
    """Bidirectional text <-> ordinal map with dense first-occurrence ordinals."""

    def __init__(self) -> None:
        self._ordinals: dict[str, int] = {}
        self._texts: list[str] = []

    def intern(self, text: str) -> int:
        o = self._ordinals.get(text)
        if o is None:
            o = len(self._texts)
            self._ordinals[text] = o
            self._texts.append(text)
        return o

    def resolve(self, ordinal: int) -> str:
        if not 0 <= ordinal < len(self._texts):
            raise UnknownOrdinalError(f"unknown ordinal {ordinal} (table holds {len(self._texts)} symbols)")
        return self._texts[ordinal]

    def lookup(self, text: str) -> int | None:
        return self._ordinals.get(text)

    def __len__(self) -> int:
        return len(self._texts)

    def __contains__(self, text: object) -> bool:
        return text in self._ordinals


# --- terms -----------------------------------------------------------------

ARITH_OPS = ("+", "-", "*", "%", "ord", "mix", "perfect")


@dataclass(frozen=True)
class Variable:
    name: str

    @property
    def anonymous(self) -> bool:
        return self.name == "_"


@dataclass(frozen=True)
class Constant:
    """A literal. ``str`` values are symbol text, ``int`` values are numbers."""

    value: Union[str, int]

    @property
    def type(self) -> str:
        return SYMBOL if isinstance(self.value, str) else NUMBER


@dataclass(frozen=True)
class ArithExpr:
    """Arithmetic or builtin-call term.

    ``mix(seed, v...)`` is the 63-bit mixing hash and ``perfect(R, k, v...)``
    is the per-key enumerating test hasher; both are produced by the
    choice-bound rewrite and evaluate to non-negative numbers.
    """

    op: str
    operands: tuple["Term", ...]


Term = Union[Variable, Constant, ArithExpr]


def term_variables(term: Term) -> Iterable[str]:
    if isinstance(term, Variable):
        if not term.anonymous:
            yield term.name
    elif isinstance(term, ArithExpr):
        for t in term.operands:
            yield from term_variables(t)


# --- atoms, literals, rules ---------------------------------------------------

@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[Term, ...]

    def variables(self) -> Iterable[str]:
        for a in self.args:
            yield from term_variables(a)


@dataclass(frozen=True)
class Negation:
    atom: Atom


COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Term
    right: Term


Literal = Union[Atom, Negation, Comparison]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Literal, ...]

    def positive_atoms(self) -> list[Atom]:
        return [lit for lit in self.body if isinstance(lit, Atom)]


@dataclass(frozen=True)
class Column:
    name: str
    type: str


@dataclass(frozen=True)
class RelationDecl:
    name: str
    columns: tuple[Column, ...]
    choice_domain: tuple[str, ...] | None = None
    input: bool = False
    output: bool = False

    @property
    def arity(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index_of(self, column: str) -> int:
        return self.column_names.index(column)

    def choice_positions(self) -> tuple[int, ...] | None:
        if self.choice_domain is None:
            return None
        return tuple(self.index_of(c) for c in self.choice_domain)


@dataclass(frozen=True)
class Fact:
    relation: str
    values: tuple[Union[str, int], ...]


@dataclass(frozen=True)
class Program:
    declarations: tuple[RelationDecl, ...] = ()
    rules: tuple[Rule, ...] = ()
    facts: tuple[Fact, ...] = ()

    def decl(self, name: str) -> RelationDecl:
        for d in self.declarations:
            if d.name == name:
                return d
        raise KeyError(name)

    def has_relation(self, name: str) -> bool:
        return any(d.name == name for d in self.declarations)

    @property
    def relation_names(self) -> list[str]:
        return [d.name for d in self.declarations]


# --- bound specifications -------------------------------------------------------

HASHERS = ("ordprod", "mix")
# "perfect" is a test hook: an injective-per-key enumeration of counting combinations.
TEST_HASHERS = ("perfect",)


class BoundSpecError(ValueError):
    """A BoundSpec violates one of its invariants; ``clause`` names which."""

    def __init__(self, clause: str, message: str) -> None:
        super().__init__(message)
        self.clause = clause


@dataclass(frozen=True)
class BoundSpec:
    relation: str
    bound_vars: tuple[str, ...]
    limit: int
    counting_vars: tuple[str, ...]
    feedback: bool = False
    hasher: str = "mix"
    seed: int = 0
    excluded_rules: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.bound_vars:
            raise BoundSpecError("empty-bound", f"{self.relation}: bound variables must be nonempty")
        if not self.counting_vars:
            raise BoundSpecError("empty-counting", f"{self.relation}: counting variables must be nonempty")
        if isinstance(self.limit, bool) or not isinstance(self.limit, int) or not 1 <= self.limit <= INT64_MAX:
            raise BoundSpecError("limit", f"{self.relation}: limit must be an integer in [1, 2**63), got {self.limit!r}")
        overlap = set(self.bound_vars) & set(self.counting_vars)
        if overlap:
            raise BoundSpecError(
                "overlap", f"{self.relation}: bound and counting variables overlap on {sorted(overlap)}")
        if len(set(self.bound_vars)) != len(self.bound_vars) or len(set(self.counting_vars)) != len(self.counting_vars):
            raise BoundSpecError("duplicate", f"{self.relation}: repeated variable in bound or counting list")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not INT64_MIN <= self.seed <= INT64_MAX:
            raise BoundSpecError("seed", f"{self.relation}: seed must be a signed 64-bit integer, got {self.seed!r}")
        if self.hasher not in HASHERS + TEST_HASHERS:
            raise BoundSpecError("hasher", f"{self.relation}: unknown hasher {self.hasher!r}")

    def check_columns(self, decl: RelationDecl) -> None:
        missing = [c for c in self.bound_vars + self.counting_vars if c not in decl.column_names]
        if missing:
            raise BoundSpecError("columns", f"{self.relation}: no column(s) {missing} in {decl.name}{decl.column_names}")

    def describe(self) -> str:
        return f"<{self.relation} | {','.join(self.bound_vars)} | {self.limit} | {','.join(self.counting_vars)}>"
