"""The choice-bound rewrite: cap how many tuples a relation keeps per key.

For ``R(c1..ck)`` bounded on ``bound_vars`` with ``limit`` N, rules that
derive ``R`` are redirected into ``R__bounded(c1..ck, __bucket)`` whose
choice-domain is ``bound_vars + (__bucket,)``. The bucket is a hash of the
counting columns taken modulo N, so each key admits at most N tuples.
``R`` itself is re-derived from the bounded relation by projection.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .core import (
    BOUNDED_SUFFIX, BUCKET_COLUMN, NUMBER, SYMBOL, ArithExpr, Atom, BoundSpec, Column,
    Constant, Negation, Program, RelationDecl, Rule, SymbolRef, Term, Value, Variable,
    emod, wrap64,
)
from .hashing import mix_fold


@dataclass(frozen=True)
class Hasher:
    kind: str = "mix"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("ordprod", "mix"):
            raise ValueError(f"unknown hasher kind {self.kind!r}")


def _raw(v: Value) -> int:
    return v.ordinal if isinstance(v, SymbolRef) else v


def hash_bucket(values: Sequence[Value], limit: int, hasher: Hasher = Hasher()) -> int:
    """Bucket in ``[0, limit)`` for a combination of counting values."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    raws = [_raw(v) for v in values]
    if hasher.kind == "ordprod":
        prod = 1
        for r in raws:
            prod = wrap64(prod * r)
        return emod(prod, limit)
    return emod(mix_fold(hasher.seed, raws), limit)


class TransformError(ValueError):
    def __init__(self, kind: str, message: str, spec_index: int | None = None) -> None:
        self.kind = kind
        self.spec_index = spec_index
        prefix = f"bound spec #{spec_index}: " if spec_index is not None else ""
        super().__init__(prefix + message)


def bounded_name(relation: str) -> str:
    return relation + BOUNDED_SUFFIX


def bucket_term(spec: BoundSpec, decl: RelationDecl, args: Sequence[Term]) -> Term:
    """Head term computing the bucket for ``args`` laid out as ``decl``'s columns."""
    names = decl.column_names
    counting = [(args[names.index(c)], decl.columns[names.index(c)].type) for c in spec.counting_vars]
    limit = Constant(spec.limit)
    if spec.hasher == "ordprod":
        factors = [ArithExpr("ord", (t,)) if ty == SYMBOL else t for t, ty in counting]
        prod = factors[0]
        for f in factors[1:]:
            prod = ArithExpr("*", (prod, f))
        return ArithExpr("%", (prod, limit))
    if spec.hasher == "mix":
        return ArithExpr("%", (ArithExpr("mix", (Constant(spec.seed),) + tuple(t for t, _ in counting)), limit))
    # perfect: enumerates counting combinations per key in first-seen order
    key = [args[names.index(c)] for c in spec.bound_vars]
    ops = (Constant(spec.relation), Constant(len(key))) + tuple(key) + tuple(t for t, _ in counting)
    return ArithExpr("%", (ArithExpr("perfect", ops), limit))


def _check(program: Program, specs: Sequence[BoundSpec]) -> None:
    seen: set[str] = set()
    for i, spec in enumerate(specs):
        if not program.has_relation(spec.relation):
            raise TransformError("unknown-relation", f"undeclared relation {spec.relation!r}", i)
        decl = program.decl(spec.relation)
        for c in spec.bound_vars + spec.counting_vars:
            if c not in decl.column_names:
                raise TransformError("unknown-column", f"{c!r} is not a column of {decl.name}{decl.column_names}", i)
        if program.has_relation(bounded_name(spec.relation)):
            raise TransformError("already-bounded",
                                 f"{bounded_name(spec.relation)} is already declared; "
                                 f"{spec.relation} has been transformed before", i)
        if decl.choice_domain is not None:
            raise TransformError("already-choice", f"{spec.relation} already has a choice-domain", i)
        if BUCKET_COLUMN in decl.column_names:
            raise TransformError("reserved-column", f"{spec.relation} uses reserved column {BUCKET_COLUMN}", i)
        if spec.relation in seen:
            raise TransformError("duplicate-spec", f"{spec.relation} is bounded twice", i)
        seen.add(spec.relation)
        for r in spec.excluded_rules:
            if not 0 <= r < len(program.rules):
                raise TransformError("bad-exclude", f"excluded rule index {r} out of range "
                                                    f"(program has {len(program.rules)} rules)", i)
            if program.rules[r].head.relation != spec.relation:
                raise TransformError("bad-exclude", f"excluded rule {r} does not derive {spec.relation}", i)


def apply_choice_bound(program: Program, specs: Sequence[BoundSpec]) -> Program:
    """Rewrite ``program`` so every spec'd relation is multiplicity-bounded."""
    specs = list(specs)
    if not specs:
        return program
    _check(program, specs)
    by_rel = {s.relation: s for s in specs}

    decls: list[RelationDecl] = []
    for d in program.declarations:
        decls.append(d)
        spec = by_rel.get(d.name)
        if spec is not None:
            decls.append(RelationDecl(
                bounded_name(d.name),
                d.columns + (Column(BUCKET_COLUMN, NUMBER),),
                spec.bound_vars + (BUCKET_COLUMN,),
            ))

    rules: list[Rule] = []
    for i, rule in enumerate(program.rules):
        spec = by_rel.get(rule.head.relation)
        if spec is None or i in spec.excluded_rules:
            rules.append(rule)
            continue
        decl = program.decl(spec.relation)
        h = bucket_term(spec, decl, rule.head.args)
        rules.append(replace(rule, head=Atom(bounded_name(spec.relation), rule.head.args + (h,))))

    for spec in specs:
        decl = program.decl(spec.relation)
        cols = tuple(Variable(c) for c in decl.column_names)
        rules.append(Rule(Atom(spec.relation, cols), (Atom(bounded_name(spec.relation), cols + (Variable("_"),)),)))
        if spec.feedback:
            h = bucket_term(spec, decl, cols)
            rules.append(Rule(Atom(bounded_name(spec.relation), cols + (h,)), (Atom(spec.relation, cols),)))

    return Program(tuple(decls), tuple(rules), program.facts)


@dataclass(frozen=True)
class Warning:
    kind: str  # "negation" | "partial-counting"
    relation: str
    message: str

    def __str__(self) -> str:
        return f"warning: {self.message}"


def validate_specs(program: Program, specs: Sequence[BoundSpec]) -> list[Warning]:
    """Flag spec/program combinations whose semantics deserve a second look."""
    bounded = {s.relation for s in specs}
    out: list[Warning] = []
    for i, rule in enumerate(program.rules):
        for lit in rule.body:
            if isinstance(lit, Negation) and lit.atom.relation in bounded:
                out.append(Warning(
                    "negation", lit.atom.relation,
                    f"rule {i} ({rule.head.relation}) negates bounded relation {lit.atom.relation}; "
                    f"its results are no longer a subset of the unbounded run"))
    for s in specs:
        if not program.has_relation(s.relation):
            continue
        cols = set(program.decl(s.relation).column_names)
        rest = cols - set(s.bound_vars) - set(s.counting_vars)
        if rest:
            out.append(Warning(
                "partial-counting", s.relation,
                f"{s.describe()}: columns {sorted(rest)} are neither bound nor counted; "
                f"tuples differing only there share a bucket"))
    return out
