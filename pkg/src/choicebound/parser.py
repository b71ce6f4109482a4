"""Parser and pretty-printer for the Datalog dialect and the ``.cb`` bounds format.

Grammar (``//`` comments)::

    .decl Name(col: symbol|number, ...) [choice-domain (col, ...)]
    .input Name
    .output Name
    Name(const, ...).
    Head(term, ...) :- literal, ..., literal.

literal := atom | '!' atom | term cmp term; terms are variables, ``_``,
integers, quoted strings, ``+ - * %`` and the builtins ``ord(t)``,
``mix(seed, t, ...)`` and ``perfect("R", k, t, ...)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .core import (
    ARITH_OPS, COLUMN_TYPES, COMPARISON_OPS, INT64_MAX, INT64_MIN, NUMBER, SYMBOL,
    ArithExpr, Atom, BoundSpec, BoundSpecError, Column, Comparison, Constant, Fact,
    Negation, Program, RelationDecl, Rule, Term, Variable, HASHERS,
)

ERROR_KINDS = (
    "syntax", "unknown-relation", "arity-mismatch", "type-mismatch",
    "range-restriction", "duplicate-decl", "bad-choice-domain", "bound-invariant",
)


class ParseError(Exception):
    def __init__(self, kind: str, message: str, line: int = 0, column: int = 0,
                 file: str | None = None) -> None:
        assert kind in ERROR_KINDS, kind
        self.kind = kind
        self.message = message
        self.line = line
        self.column = column
        self.file = file
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"{self.file or '<input>'}:{self.line}:{self.column}"
        return f"{where}: {self.kind}: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str  # ident, int, string, punct, directive, eof
    text: str
    value: Union[str, int, None]
    line: int
    col: int


_PUNCT = (":-", "!=", "<=", ">=", "(", ")", ",", ":", ".", "!", "=", "<", ">", "+", "-", "*", "%", "_")
_DIRECTIVES = ("decl", "input", "output")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"[0-9]+")


def _tokenize(text: str, file: str | None) -> list[Token]:
    toks: list[Token] = []
    i, line, line_start, n = 0, 1, 0, len(text)
    while i < n:
        ch = text[i]
        col = i - line_start + 1
        if ch == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if ch in " \t\r\f\v﻿":
            i += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if ch == "." and (m := _IDENT_RE.match(text, i + 1)) and m.group() in _DIRECTIVES:
            toks.append(Token("directive", m.group(), m.group(), line, col))
            i = m.end()
            continue
        if ch == '"':
            buf: list[str] = []
            j = i + 1
            while True:
                if j >= n or text[j] == "\n":
                    raise ParseError("syntax", "unterminated string literal", line, col, file)
                c = text[j]
                if c == '"':
                    break
                if c == "\\":
                    if j + 1 >= n:
                        raise ParseError("syntax", "unterminated string literal", line, col, file)
                    e = text[j + 1]
                    if e in _ESCAPES:
                        buf.append(_ESCAPES[e])
                        j += 2
                        continue
                    if e == "u" and re.fullmatch(r"[0-9A-Fa-f]{4}", text[j + 2:j + 6] or ""):
                        buf.append(chr(int(text[j + 2:j + 6], 16)))
                        j += 6
                        continue
                    raise ParseError("syntax", f"bad escape '\\{e}'", line, j - line_start + 1, file)
                buf.append(c)
                j += 1
            toks.append(Token("string", text[i:j + 1], "".join(buf), line, col))
            i = j + 1
            continue
        if "0" <= ch <= "9":
            m = _INT_RE.match(text, i)
            toks.append(Token("int", m.group(), int(m.group()), line, col))
            i = m.end()
            continue
        if _IDENT_RE.match(ch):
            m = _IDENT_RE.match(text, i)
            word = m.group()
            kind = "punct" if word == "_" else "ident"
            toks.append(Token(kind, word, word, line, col))
            i = m.end()
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token("punct", p, p, line, col))
                i += len(p)
                break
        else:
            raise ParseError("syntax", f"unexpected character {ch!r}", line, col, file)
    toks.append(Token("eof", "", None, line, i - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, file: str | None) -> None:
        self.file = file
        self.toks = _tokenize(text, file)
        self.i = 0
        self.pos: dict[int, tuple[int, int]] = {}  # id(node) -> (line, col)
        self.items: list[tuple[str, object, Token]] = []

    # -- token helpers --
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i = min(self.i + 1, len(self.toks) - 1)
        return t

    def error(self, msg: str, tok: Token | None = None, kind: str = "syntax") -> ParseError:
        tok = tok or self.peek()
        return ParseError(kind, msg, tok.line, tok.col, self.file)

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("punct",) and t.text == text

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.kind == "punct" and t.text == text:
            return self.next()
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise self.error(f"expected {text!r}, found {found}")

    def ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            found = "end of input" if t.kind == "eof" else repr(t.text)
            raise self.error(f"expected {what}, found {found}")
        return self.next()

    def mark(self, node, tok: Token):
        self.pos[id(node)] = (tok.line, tok.col)
        return node

    # -- top level --
    def parse(self) -> None:
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "directive":
                self.next()
                if t.text == "decl":
                    self.items.append(("decl", self.parse_decl(), t))
                else:
                    name = self.ident("relation name")
                    self.items.append((t.text, name.text, name))
            elif t.kind == "ident":
                self.parse_clause()
            else:
                raise self.error(f"unexpected token {t.text!r}")

    def parse_decl(self) -> RelationDecl:
        name = self.ident("relation name")
        self.expect("(")
        cols: list[tuple[Column, Token]] = []
        if not self.at(")"):
            while True:
                cname = self.ident("column name")
                self.expect(":")
                ctype = self.ident("column type")
                if ctype.text not in COLUMN_TYPES:
                    raise self.error(f"unknown column type {ctype.text!r} (expected symbol or number)", ctype)
                cols.append((Column(cname.text, ctype.text), cname))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        choice = None
        choice_tok = None
        t = self.peek()
        if t.kind == "ident" and t.text == "choice":
            choice_tok = self.next()
            self.expect("-")
            d = self.ident("'domain'")
            if d.text != "domain":
                raise self.error("expected 'choice-domain'", d)
            self.expect("(")
            names = [self.ident("column name").text]
            while self.at(","):
                self.next()
                names.append(self.ident("column name").text)
            self.expect(")")
            choice = tuple(names)
        decl = RelationDecl(name.text, tuple(c for c, _ in cols), choice)
        self.mark(decl, name)
        self._col_toks = getattr(self, "_col_toks", {})
        self._col_toks[id(decl)] = [tk for _, tk in cols]
        if choice_tok is not None:
            self.pos[id(decl.choice_domain)] = (choice_tok.line, choice_tok.col)
        return decl

    def parse_clause(self) -> None:
        start = self.peek()
        head = self.parse_atom()
        if self.at("."):
            self.next()
            self.items.append(("fact", head, start))
            return
        self.expect(":-")
        body = [self.parse_literal()]
        while self.at(","):
            self.next()
            body.append(self.parse_literal())
        self.expect(".")
        rule = Rule(head, tuple(body))
        self.items.append(("rule", rule, start))

    def parse_atom(self) -> Atom:
        name = self.ident("relation name")
        self.expect("(")
        args: list[Term] = []
        if not self.at(")"):
            args.append(self.parse_term())
            while self.at(","):
                self.next()
                args.append(self.parse_term())
        self.expect(")")
        return self.mark(Atom(name.text, tuple(args)), name)

    def parse_literal(self):
        t = self.peek()
        if self.at("!"):
            self.next()
            atom = self.parse_atom()
            return self.mark(Negation(atom), t)
        if t.kind == "ident" and self.peek(1).kind == "punct" and self.peek(1).text == "(" \
                and t.text not in ("ord", "mix", "perfect"):
            return self.parse_atom()
        left = self.parse_term()
        op = self.peek()
        if op.kind != "punct" or op.text not in COMPARISON_OPS:
            raise self.error("expected comparison operator", op)
        self.next()
        right = self.parse_term()
        return self.mark(Comparison(op.text, left, right), t)

    # term := product (('+'|'-') product)*
    def parse_term(self) -> Term:
        left = self.parse_product()
        while self.peek().kind == "punct" and self.peek().text in ("+", "-"):
            op = self.next()
            right = self.parse_product()
            left = self.mark(ArithExpr(op.text, (left, right)), op)
        return left

    def parse_product(self) -> Term:
        left = self.parse_factor()
        while self.peek().kind == "punct" and self.peek().text in ("*", "%"):
            op = self.next()
            right = self.parse_factor()
            left = self.mark(ArithExpr(op.text, (left, right)), op)
        return left

    def parse_factor(self) -> Term:
        t = self.peek()
        if t.kind == "int":
            self.next()
            if t.value > INT64_MAX:
                raise self.error("integer literal out of 64-bit range", t)
            return self.mark(Constant(t.value), t)
        if t.kind == "string":
            self.next()
            return self.mark(Constant(t.value), t)
        if t.kind == "punct" and t.text == "-":
            self.next()
            nxt = self.peek()
            if nxt.kind == "int":
                self.next()
                if -nxt.value < INT64_MIN:
                    raise self.error("integer literal out of 64-bit range", nxt)
                return self.mark(Constant(-nxt.value), t)
            inner = self.parse_factor()
            return self.mark(ArithExpr("-", (Constant(0), inner)), t)
        if t.kind == "punct" and t.text == "_":
            self.next()
            return self.mark(Variable("_"), t)
        if t.kind == "punct" and t.text == "(":
            self.next()
            inner = self.parse_term()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.next()
            if t.text in ("ord", "mix", "perfect") and self.at("("):
                self.next()
                ops = [self.parse_term()]
                while self.at(","):
                    self.next()
                    ops.append(self.parse_term())
                self.expect(")")
                return self.mark(ArithExpr(t.text, tuple(ops)), t)
            return self.mark(Variable(t.text), t)
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise self.error(f"expected a term, found {found}", t)


class _Validator:
    """Semantic checks in source order; raises the first ParseError found."""

    def __init__(self, parser: _Parser) -> None:
        self.p = parser
        self.decls: dict[str, RelationDecl] = {}

    def err(self, kind: str, msg: str, node=None, tok: Token | None = None) -> ParseError:
        if node is not None and id(node) in self.p.pos:
            line, col = self.p.pos[id(node)]
        elif tok is not None:
            line, col = tok.line, tok.col
        else:
            line, col = 0, 0
        return ParseError(kind, msg, line, col, self.p.file)

    def run(self) -> Program:
        # Declarations may appear after their first use, so collect them first.
        for kind, obj, tok in self.p.items:
            if kind == "decl":
                self.check_decl(obj, tok)
        io: dict[str, dict[str, bool]] = {}
        facts: list[Fact] = []
        rules: list[Rule] = []
        for kind, obj, tok in self.p.items:
            if kind in ("input", "output"):
                if obj not in self.decls:
                    raise self.err("unknown-relation", f"directive names undeclared relation {obj!r}", tok=tok)
                io.setdefault(obj, {})[kind] = True
            elif kind == "fact":
                facts.append(self.check_fact(obj))
            elif kind == "rule":
                self.check_rule(obj)
                rules.append(obj)
        decls = []
        for d in self.decls.values():
            flags = io.get(d.name, {})
            decls.append(RelationDecl(d.name, d.columns, d.choice_domain,
                                      flags.get("input", False), flags.get("output", False)))
        return Program(tuple(decls), tuple(rules), tuple(facts))

    def check_decl(self, d: RelationDecl, tok: Token) -> None:
        if d.name in self.decls:
            raise self.err("duplicate-decl", f"relation {d.name!r} declared twice", d)
        if d.name.startswith("__"):
            raise self.err("syntax", f"relation names starting with '__' are reserved: {d.name!r}", d)
        seen = set()
        for c, ctok in zip(d.columns, self.p._col_toks[id(d)]):
            if c.name in seen:
                raise self.err("duplicate-decl", f"column {c.name!r} repeated in {d.name}", tok=ctok)
            seen.add(c.name)
        if d.choice_domain is not None:
            cd = d.choice_domain
            for c in cd:
                if c not in seen:
                    raise self.err("bad-choice-domain", f"choice-domain column {c!r} is not a column of {d.name}",
                                   cd)
            if len(set(cd)) != len(cd):
                raise self.err("bad-choice-domain", f"choice-domain of {d.name} repeats a column", cd)
            if len(set(cd)) >= len(d.columns):
                raise self.err("bad-choice-domain",
                               f"choice-domain of {d.name} must leave at least one free column", cd)
        self.decls[d.name] = d

    def lookup(self, atom: Atom) -> RelationDecl:
        d = self.decls.get(atom.relation)
        if d is None:
            raise self.err("unknown-relation", f"undeclared relation {atom.relation!r}", atom)
        if len(atom.args) != d.arity:
            raise self.err("arity-mismatch",
                           f"{atom.relation} has arity {d.arity}, used with {len(atom.args)} argument(s)", atom)
        return d

    def check_fact(self, atom: Atom) -> Fact:
        d = self.lookup(atom)
        values = []
        for arg, col in zip(atom.args, d.columns):
            if not isinstance(arg, Constant):
                raise self.err("syntax", f"fact arguments must be constants in {atom.relation}", arg)
            if arg.type != col.type:
                raise self.err("type-mismatch",
                               f"column {col.name} of {d.name} is {col.type}, got {arg.type} constant", arg)
            values.append(arg.value)
        return Fact(atom.relation, tuple(values))

    def check_rule(self, rule: Rule) -> None:
        env: dict[str, str] = {}
        # Positive atoms bind variables; their column types define variable types.
        for lit in rule.body:
            if isinstance(lit, Atom):
                d = self.lookup(lit)
                for arg, col in zip(lit.args, d.columns):
                    if isinstance(arg, ArithExpr):
                        raise self.err("syntax", "arithmetic is not allowed inside body atoms", arg)
                    if isinstance(arg, Variable):
                        if arg.anonymous:
                            continue
                        prev = env.setdefault(arg.name, col.type)
                        if prev != col.type:
                            raise self.err("type-mismatch",
                                           f"variable {arg.name} used as {prev} and as {col.type}", arg)
                    elif arg.type != col.type:
                        raise self.err("type-mismatch",
                                       f"column {col.name} of {d.name} is {col.type}, got {arg.type}", arg)
        for lit in rule.body:
            if isinstance(lit, Negation):
                d = self.lookup(lit.atom)
                for arg, col in zip(lit.atom.args, d.columns):
                    if isinstance(arg, ArithExpr):
                        raise self.err("syntax", "arithmetic is not allowed inside body atoms", arg)
                    self.expect_type(arg, col.type, env, allow_anon=True)
            elif isinstance(lit, Comparison):
                lt = self.type_of(lit.left, env)
                rt = self.type_of(lit.right, env)
                if lt != rt:
                    raise self.err("type-mismatch", f"comparison between {lt} and {rt}", lit)
                if lt == SYMBOL and lit.op not in ("=", "!="):
                    raise self.err("type-mismatch", f"ordering comparison {lit.op!r} on symbols", lit)
        d = self.lookup(rule.head)
        for arg, col in zip(rule.head.args, d.columns):
            self.expect_type(arg, col.type, env)

    def expect_type(self, term: Term, expected: str, env: dict[str, str], allow_anon: bool = False) -> None:
        if allow_anon and isinstance(term, Variable) and term.anonymous:
            return
        got = self.type_of(term, env)
        if got != expected:
            raise self.err("type-mismatch", f"expected {expected}, got {got}", term)

    def type_of(self, term: Term, env: dict[str, str]) -> str:
        if isinstance(term, Constant):
            return term.type
        if isinstance(term, Variable):
            if term.anonymous:
                raise self.err("range-restriction", "'_' may only appear in body atoms", term)
            if term.name not in env:
                raise self.err("range-restriction",
                               f"variable {term.name} is not bound by a positive body atom", term)
            return env[term.name]
        assert isinstance(term, ArithExpr)
        op, ops = term.op, term.operands
        if op == "ord":
            if len(ops) != 1:
                raise self.err("syntax", "ord takes exactly one operand", term)
            if self.type_of(ops[0], env) != SYMBOL:
                raise self.err("type-mismatch", "ord applied to a number", ops[0])
            return NUMBER
        if op == "mix":
            if len(ops) < 2 or not (isinstance(ops[0], Constant) and ops[0].type == NUMBER):
                raise self.err("syntax", "mix takes an integer seed and at least one value", term)
            for o in ops[1:]:
                self.type_of(o, env)
            return NUMBER
        if op == "perfect":
            if (len(ops) < 3 or not (isinstance(ops[0], Constant) and ops[0].type == SYMBOL)
                    or not (isinstance(ops[1], Constant) and ops[1].type == NUMBER)
                    or not 0 <= ops[1].value < len(ops) - 2):
                raise self.err("syntax", 'perfect takes ("Relation", key-count, values...)', term)
            for o in ops[2:]:
                self.type_of(o, env)
            return NUMBER
        assert op in ARITH_OPS
        for o in ops:
            if self.type_of(o, env) != NUMBER:
                raise self.err("type-mismatch", f"operator {op!r} applied to a symbol", o)
        return NUMBER


def parse_program(text: str, file: str | None = None) -> Program:
    """Parse and validate a program. Raises ParseError on the first problem."""
    p = _Parser(text, file)
    p.parse()
    return _Validator(p).run()


# --- formatting -----------------------------------------------------------------

def _quote(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def format_value(v: Union[str, int]) -> str:
    return _quote(v) if isinstance(v, str) else str(v)


def format_term(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Constant):
        return format_value(t.value)
    if t.op in ("ord", "mix", "perfect"):
        return f"{t.op}({', '.join(format_term(o) for o in t.operands)})"
    left, right = t.operands
    return f"({format_term(left)} {t.op} {format_term(right)})"


def format_atom(a: Atom) -> str:
    return f"{a.relation}({', '.join(format_term(t) for t in a.args)})"


def format_literal(lit) -> str:
    if isinstance(lit, Atom):
        return format_atom(lit)
    if isinstance(lit, Negation):
        return "!" + format_atom(lit.atom)
    return f"{format_term(lit.left)} {lit.op} {format_term(lit.right)}"


def format_rule(r: Rule) -> str:
    body = ",\n    ".join(format_literal(lit) for lit in r.body)
    return f"{format_atom(r.head)} :-\n    {body}."


def format_program(program: Program) -> str:
    lines: list[str] = []
    for d in program.declarations:
        cols = ", ".join(f"{c.name}: {c.type}" for c in d.columns)
        s = f".decl {d.name}({cols})"
        if d.choice_domain is not None:
            s += f" choice-domain ({', '.join(d.choice_domain)})"
        lines.append(s)
        if d.input:
            lines.append(f".input {d.name}")
        if d.output:
            lines.append(f".output {d.name}")
    if program.facts:
        lines.append("")
        for f in program.facts:
            lines.append(f"{f.relation}({', '.join(format_value(v) for v in f.values)}).")
    for r in program.rules:
        lines.append("")
        lines.append(format_rule(r))
    return "\n".join(lines) + ("\n" if lines else "")


# --- bounds files ----------------------------------------------------------------

_BOUND_OPT = re.compile(r"(\w+)=(\([^)]*\)|\S+)")


def _name_list(raw: str, key: str, lineno: int, col: int, file: str | None) -> tuple[str, ...]:
    if not (raw.startswith("(") and raw.endswith(")")):
        raise ParseError("syntax", f"{key}= expects a parenthesized list", lineno, col, file)
    items = [x.strip() for x in raw[1:-1].split(",")]
    if items == [""]:
        return ()
    for x in items:
        if not _IDENT_RE.fullmatch(x):
            raise ParseError("syntax", f"bad name {x!r} in {key}=", lineno, col, file)
    return tuple(items)


def _parse_bool(raw: str, lineno: int, col: int, file: str | None) -> bool:
    if raw not in ("true", "false"):
        raise ParseError("syntax", f"expected true or false, got {raw!r}", lineno, col, file)
    return raw == "true"


def _parse_int(raw: str, key: str, lineno: int, col: int, file: str | None) -> int:
    if not re.fullmatch(r"-?[0-9]+", raw):
        raise ParseError("syntax", f"{key}= expects an integer, got {raw!r}", lineno, col, file)
    v = int(raw)
    if not INT64_MIN <= v <= INT64_MAX:
        raise ParseError("syntax", f"{key}= out of 64-bit range", lineno, col, file)
    return v


def parse_bounds(text: str, file: str | None = None) -> list[BoundSpec]:
    """Parse a bounds file: one ``Relation bound=(..) limit=N count=(..) [...]`` per line."""
    specs: list[BoundSpec] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        m = _IDENT_RE.match(line, indent)
        if not m:
            raise ParseError("syntax", "expected a relation name", lineno, indent + 1, file)
        rel = m.group()
        opts: dict[str, tuple[str, int]] = {}
        pos = m.end()
        while pos < len(line):
            while pos < len(line) and line[pos].isspace():
                pos += 1
            if pos >= len(line):
                break
            om = _BOUND_OPT.match(line, pos)
            if not om:
                raise ParseError("syntax", f"expected key=value, found {line[pos:].split()[0]!r}",
                                 lineno, pos + 1, file)
            key = om.group(1)
            if key in opts:
                raise ParseError("syntax", f"option {key!r} given twice", lineno, pos + 1, file)
            opts[key] = (om.group(2), pos + 1)
            pos = om.end()
        unknown = set(opts) - {"bound", "limit", "count", "feedback", "hasher", "exclude", "seed"}
        if unknown:
            k = sorted(unknown)[0]
            raise ParseError("syntax", f"unknown option {k!r}", lineno, opts[k][1], file)
        for req in ("bound", "limit", "count"):
            if req not in opts:
                raise ParseError("syntax", f"missing {req}=", lineno, indent + 1, file)
        bound = _name_list(opts["bound"][0], "bound", lineno, opts["bound"][1], file)
        count = _name_list(opts["count"][0], "count", lineno, opts["count"][1], file)
        limit = _parse_int(opts["limit"][0], "limit", lineno, opts["limit"][1], file)
        feedback = _parse_bool(opts["feedback"][0], lineno, opts["feedback"][1], file) if "feedback" in opts else False
        hasher = "mix"
        if "hasher" in opts:
            hasher = opts["hasher"][0]
            if hasher not in HASHERS:
                raise ParseError("syntax", f"hasher must be one of {HASHERS}, got {hasher!r}",
                                 lineno, opts["hasher"][1], file)
        seed = _parse_int(opts["seed"][0], "seed", lineno, opts["seed"][1], file) if "seed" in opts else 0
        excluded: frozenset[int] = frozenset()
        if "exclude" in opts:
            raw, col = opts["exclude"]
            names = [x.strip() for x in raw.strip("()").split(",") if x.strip()]
            if not (raw.startswith("(") and raw.endswith(")")) or not all(re.fullmatch(r"[0-9]+", x) for x in names):
                raise ParseError("syntax", "exclude= expects a list of rule indices", lineno, col, file)
            excluded = frozenset(int(x) for x in names)
        try:
            specs.append(BoundSpec(rel, bound, limit, count, feedback, hasher, seed, excluded))
        except BoundSpecError as e:
            col = {"limit": opts["limit"][1], "overlap": opts["count"][1],
                   "empty-counting": opts["count"][1]}.get(e.clause, opts["bound"][1])
            err = ParseError("bound-invariant", str(e), lineno, col, file)
            err.clause = e.clause
            raise err from None
    return specs


def format_bounds(specs: list[BoundSpec]) -> str:
    out = []
    for s in specs:
        line = f"{s.relation} bound=({','.join(s.bound_vars)}) limit={s.limit} count=({','.join(s.counting_vars)})"
        if s.feedback:
            line += " feedback=true"
        if s.hasher != "mix":
            line += f" hasher={s.hasher}"
        if s.seed:
            line += f" seed={s.seed}"
        if s.excluded_rules:
            line += f" exclude=({','.join(str(i) for i in sorted(s.excluded_rules))})"
        out.append(line)
    return "\n".join(out) + ("\n" if out else "")
