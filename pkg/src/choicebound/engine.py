"""Stratified semi-naive bottom-up evaluation with choice-domain enforcement.

Every derived tuple goes through :meth:`RelationStore.insert_choice` the
moment it is produced, so for a choice relation the first derivation of a
key wins and later ones are rejected. Scans and index probes read tuples
committed at the end of the previous iteration (full-tuple membership
probes may also see tuples accepted earlier in the same iteration); the
tuples accepted during an iteration form the next delta.

Rule bodies are compiled to Python source (nested loops over hash indexes)
once per stratum.
"""
from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from operator import itemgetter
from typing import Callable, Iterable, Mapping, Sequence

from .core import (
    SYMBOL, ArithExpr, Atom, Comparison, Constant, Negation, Program, RelationDecl,
    Rule, SymbolTable, Term, Variable, term_variables,
)
from .runtime import (
    EvaluationError, PerfectHasher, mix, mod, wrap_add, wrap_mul, wrap_sub,
)

Inputs = Mapping[str, Iterable[Sequence]]


class StratificationError(ValueError):
    def __init__(self, relations: Sequence[str]) -> None:
        self.relations = list(relations)
        super().__init__("program is not stratifiable: negation inside the recursive cycle "
                         + " -> ".join(self.relations))


# --- stores ------------------------------------------------------------------

def _key_getter(positions: Sequence[int]) -> Callable:
    if len(positions) == 0:
        return lambda t: ()
    return itemgetter(*positions)


class RelationStore:
    """Tuples of one relation plus its indexes and choice-key map.

    ``members`` and ``choice`` cover committed and pending tuples (so choice
    checks see everything accepted so far); ``tuples`` and the indexes cover
    committed tuples only.
    """

    def __init__(self, decl: RelationDecl) -> None:
        self.decl = decl
        self.name = decl.name
        self.tuples: list[tuple] = []
        self.members: set[tuple] = set()
        self.pending: list[tuple] = []
        cpos = decl.choice_positions()
        self.choice_positions = cpos
        self.choice: dict | None = {} if cpos is not None else None
        self.choice_key = _key_getter(cpos) if cpos is not None else None
        self.indexes: dict[tuple[int, ...], dict] = {}
        self.rejected_by_choice = 0

    @property
    def inserted(self) -> int:
        return len(self.members)

    def insert_choice(self, t: tuple) -> bool:
        if t in self.members:
            return False
        if self.choice is not None:
            k = self.choice_key(t)
            if k in self.choice:
                self.rejected_by_choice += 1
                return False
            self.choice[k] = t
        self.members.add(t)
        self.pending.append(t)
        return True

    def index(self, positions: tuple[int, ...]) -> dict:
        """Hash index over committed tuples; a scalar key when one column is indexed."""
        idx = self.indexes.get(positions)
        if idx is None:
            idx = {}
            get = _key_getter(positions)
            for t in self.tuples:
                k = get(t)
                bucket = idx.get(k)
                if bucket is None:
                    idx[k] = [t]
                else:
                    bucket.append(t)
            self.indexes[positions] = idx
        return idx

    def commit(self) -> list[tuple]:
        if not self.pending:
            return []
        # compiled rules hold a reference to this list object: clear, never rebind
        delta = self.pending[:]
        self.pending.clear()
        self.tuples.extend(delta)
        for positions, idx in self.indexes.items():
            get = _key_getter(positions)
            for t in delta:
                k = get(t)
                bucket = idx.get(k)
                if bucket is None:
                    idx[k] = [t]
                else:
                    bucket.append(t)
        return delta

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.tuples)


# --- metrics / database ------------------------------------------------------

@dataclass
class StratumMetrics:
    relations: list[str]
    rules: list[int]
    iterations: int = 0


@dataclass
class EvalMetrics:
    relations: dict[str, dict[str, int]] = field(default_factory=dict)
    strata: list[StratumMetrics] = field(default_factory=list)
    wall_time: float = 0.0
    mode: str = "seminaive"

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "wall_time": self.wall_time,
            "relations": self.relations,
            "strata": [{"relations": s.relations, "rules": s.rules, "iterations": s.iterations}
                       for s in self.strata],
        }

    def tuple_counts(self) -> dict[str, int]:
        return {k: v["tuples"] for k, v in self.relations.items()}


class Database:
    def __init__(self, program: Program, symbols: SymbolTable | None = None) -> None:
        self.program = program
        self.symbols = symbols if symbols is not None else SymbolTable()
        self.stores: dict[str, RelationStore] = {d.name: RelationStore(d) for d in program.declarations}
        self.metrics = EvalMetrics()
        self.perfect = PerfectHasher()

    def __getitem__(self, name: str) -> RelationStore:
        return self.stores[name]

    def __contains__(self, name: str) -> bool:
        return name in self.stores

    def decode(self, name: str, t: tuple) -> tuple:
        decl = self.stores[name].decl
        res = self.symbols.resolve
        return tuple(res(v) if c.type == SYMBOL else v for v, c in zip(t, decl.columns))

    def encode(self, name: str, row: Sequence) -> tuple:
        decl = self.stores[name].decl
        if len(row) != decl.arity:
            raise EvaluationError(f"{name}: expected {decl.arity} columns, got {len(row)}: {tuple(row)!r}")
        out = []
        for v, c in zip(row, decl.columns):
            if c.type == SYMBOL:
                if not isinstance(v, str):
                    raise EvaluationError(f"{name}.{c.name}: expected symbol, got {v!r}")
                out.append(self.symbols.intern(v))
            else:
                if isinstance(v, bool) or not isinstance(v, int):
                    raise EvaluationError(f"{name}.{c.name}: expected number, got {v!r}")
                if not -(1 << 63) <= v < (1 << 63):
                    raise EvaluationError(f"{name}.{c.name}: {v} outside 64-bit range")
                out.append(v)
        return tuple(out)

    def rows(self, name: str) -> list[tuple]:
        """Decoded tuples, sorted by column values."""
        return sorted(self.decode(name, t) for t in self.stores[name].members)

    def contents(self) -> dict[str, frozenset]:
        return {n: frozenset(self.decode(n, t) for t in s.members) for n, s in self.stores.items()}

    def columns(self, name: str) -> tuple[str, ...]:
        return self.stores[name].decl.column_names

    def refresh_metrics(self) -> None:
        self.metrics.relations = {
            n: {"tuples": len(s), "rejected_by_choice": s.rejected_by_choice} for n, s in self.stores.items()
        }


def load_database(program: Program, inputs: Inputs | None = None) -> Database:
    """Create a Database, interning symbols in canonical order and loading facts.

    Order: inline facts in program order, then rule constants, then inputs
    sorted by relation name with rows in given order.
    """
    db = Database(program)
    sym = db.symbols
    for f in program.facts:
        db.stores[f.relation].insert_choice(db.encode(f.relation, f.values))
    for rule in program.rules:
        for c in _rule_constants(rule):
            if isinstance(c.value, str):
                sym.intern(c.value)
    for name in sorted(inputs or {}):
        if name not in db.stores:
            raise EvaluationError(f"input facts for undeclared relation {name!r}")
        store = db.stores[name]
        if not store.decl.input:
            raise EvaluationError(f"input facts given for {name!r}, which is not declared .input")
        for row in inputs[name]:
            store.insert_choice(db.encode(name, row))
    for s in db.stores.values():
        s.commit()
    return db


def _term_constants(t: Term):
    if isinstance(t, Constant):
        yield t
    elif isinstance(t, ArithExpr):
        for o in t.operands:
            yield from _term_constants(o)


def _rule_constants(rule: Rule):
    for a in rule.head.args:
        yield from _term_constants(a)
    for lit in rule.body:
        if isinstance(lit, Atom):
            terms = lit.args
        elif isinstance(lit, Negation):
            terms = lit.atom.args
        else:
            terms = (lit.left, lit.right)
        for t in terms:
            yield from _term_constants(t)


# --- stratification -------------------------------------------------------------

@dataclass(frozen=True)
class Stratum:
    rules: tuple[int, ...]
    relations: frozenset[str]


def stratify(program: Program) -> list[Stratum]:
    """Order the rules into strata; negated relations are computed strictly earlier."""
    names = program.relation_names
    succ: dict[str, list[str]] = {n: [] for n in names}
    neg_edges: set[tuple[str, str]] = set()
    for rule in program.rules:
        h = rule.head.relation
        for lit in rule.body:
            if isinstance(lit, Atom):
                succ[lit.relation].append(h)
            elif isinstance(lit, Negation):
                succ[lit.atom.relation].append(h)
                neg_edges.add((lit.atom.relation, h))

    # Iterative Tarjan; emits SCCs in reverse topological order.
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0
    for root in names:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, i = work.pop()
            if i == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            recurse = False
            edges = succ[node]
            while i < len(edges):
                nxt = edges[i]
                i += 1
                if nxt not in index:
                    work.append((node, i))
                    work.append((nxt, 0))
                    recurse = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if recurse:
                continue
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    sccs.reverse()

    comp_of = {n: i for i, comp in enumerate(sccs) for n in comp}
    for src, dst in sorted(neg_edges):
        if comp_of[src] == comp_of[dst]:
            raise StratificationError(_cycle_through(src, dst, succ, set(sccs[comp_of[src]])))

    strata = []
    for comp in sccs:
        members = frozenset(comp)
        rules = tuple(i for i, r in enumerate(program.rules) if r.head.relation in members)
        if rules:
            strata.append(Stratum(rules, members))
    return strata


def _cycle_through(src: str, dst: str, succ: dict[str, list[str]], comp: set[str]) -> list[str]:
    """A relation cycle src -!-> dst -> ... -> src within one SCC, for error messages."""
    prev = {dst: None}
    queue = [dst]
    while queue:
        n = queue.pop(0)
        if n == src:
            break
        for m in succ[n]:
            if m in comp and m not in prev:
                prev[m] = n
                queue.append(m)
    path = [src]
    n = prev.get(src)
    while n is not None:
        path.append(n)
        n = prev[n]
    path.reverse()
    return [src] + path if path[0] != src else path + ([] if len(path) > 1 else [src])


# --- rule compilation ---------------------------------------------------------------

_ONE = (0,)


class _RuleCompiler:
    """Emits one Python function per (rule, delta position)."""

    def __init__(self, db: Database, perfect: PerfectHasher, parallel_locks: dict | None) -> None:
        self.db = db
        self.perfect = perfect
        self.locks = parallel_locks

    def compile(self, rule: Rule, rule_index: int, delta_pos: int | None) -> Callable[[list], int]:
        env: dict[str, object] = {
            "_ONE": _ONE, "_add": wrap_add, "_sub": wrap_sub, "_mul": wrap_mul, "_mod": mod,
            "_mix": mix, "_perfect": self.perfect,
        }
        self.env = env
        self.counter = 0
        lines: list[str] = ["def _run(_delta):", "    _rej = 0", "    for _o in _ONE:"]
        depth = 2

        def emit(s: str) -> None:
            lines.append("    " * depth + s)

        bound: set[str] = set()
        filters = [lit for lit in rule.body if not isinstance(lit, Atom)]

        def flush_filters() -> None:
            for f in list(filters):
                if set(self.filter_vars(f)) <= bound:
                    filters.remove(f)
                    self.emit_filter(f, emit)

        flush_filters()
        for pos, atom in self.join_order(rule, delta_pos):
            store = self.db.stores[atom.relation]
            pre: list[tuple[int, str]] = []    # columns fixed before this atom
            binds: list[tuple[int, str]] = []  # first occurrences, bound here
            intra: list[tuple[int, str]] = []  # repeats of a variable bound in this atom
            local: set[str] = set()
            for j, arg in enumerate(atom.args):
                if isinstance(arg, Constant):
                    pre.append((j, self.term(arg)))
                elif isinstance(arg, Variable) and not arg.anonymous:
                    v = self.var(arg.name)
                    if v in bound:
                        pre.append((j, v))
                    elif v in local:
                        intra.append((j, v))
                    else:
                        binds.append((j, v))
                        local.add(v)
            tv = self.name("t")
            if pos == delta_pos:
                emit(f"for {tv} in _delta:")
                depth += 1
                for j, e in pre:
                    emit(f"if {tv}[{j}] != {e}: continue")
            elif len(pre) == len(atom.args):
                mset = self.ref(store.members, "M")
                emit(f"if {self.tuple_expr([e for _, e in pre])} not in {mset}: continue")
            elif pre:
                cols = tuple(j for j, _ in pre)
                idx = self.ref(store.index(cols), "I")
                key = pre[0][1] if len(cols) == 1 else self.tuple_expr([e for _, e in pre])
                emit(f"for {tv} in {idx}.get({key}, ()):")
                depth += 1
            else:
                emit(f"for {tv} in {self.ref(store.tuples, 'L')}:")
                depth += 1
            for j, v in binds:
                emit(f"{v} = {tv}[{j}]")
            for j, v in intra:
                emit(f"if {tv}[{j}] != {v}: continue")
            bound |= local
            flush_filters()
        assert not filters, "range restriction guarantees every filter is placed"

        head_store = self.db.stores[rule.head.relation]
        emit(f"_h = {self.tuple_expr([self.term(a) for a in rule.head.args])}")
        if self.locks is not None:
            emit(f"{self.ref(_locked_insert(head_store, self.locks), 'INS')}(_h)")
        else:
            mset = self.ref(head_store.members, "M")
            plist = self.ref(head_store.pending, "P")
            emit(f"if _h not in {mset}:")
            depth += 1
            if head_store.choice is not None:
                cdict = self.ref(head_store.choice, "C")
                cpos = head_store.choice_positions
                key = f"_h[{cpos[0]}]" if len(cpos) == 1 else self.tuple_expr([f"_h[{p}]" for p in cpos])
                emit(f"_k = {key}")
                emit(f"if _k in {cdict}:")
                emit("    _rej += 1")
                emit("    continue")
                emit(f"{cdict}[_k] = _h")
            emit(f"{mset}.add(_h)")
            emit(f"{plist}.append(_h)")
        lines.append("    return _rej")
        src = "\n".join(lines)
        ns: dict[str, object] = {}
        exec(compile(src, f"<rule {rule_index} delta={delta_pos}>", "exec"), env, ns)
        fn = ns["_run"]
        fn.source = src  # type: ignore[attr-defined]
        return fn

    def join_order(self, rule: Rule, delta_pos: int | None) -> list[tuple[int, Atom]]:
        """Delta atom first, then greedily the atom with most columns already fixed."""
        atoms = [(i, lit) for i, lit in enumerate(rule.body) if isinstance(lit, Atom)]
        order = [a for a in atoms if a[0] == delta_pos]
        rest = [a for a in atoms if a[0] != delta_pos]
        known = {v for _, a in order for v in a.variables()}
        while rest:
            def score(item):
                return sum(1 for t in item[1].args
                           if isinstance(t, Constant) or (isinstance(t, Variable) and t.name in known))
            best = max(rest, key=score)  # max() keeps the first on ties: textual order
            rest.remove(best)
            order.append(best)
            known.update(best[1].variables())
        return order

    # helpers
    def name(self, prefix: str) -> str:
        self.counter += 1
        return f"_{prefix}{self.counter}"

    def ref(self, obj, prefix: str) -> str:
        n = self.name(prefix)
        self.env[n] = obj
        return n

    @staticmethod
    def var(name: str) -> str:
        return "v_" + name

    @staticmethod
    def tuple_expr(parts: list[str]) -> str:
        return "(" + "".join(p + ", " for p in parts) + ")"

    def filter_vars(self, lit) -> list[str]:
        if isinstance(lit, Negation):
            return [self.var(v) for v in lit.atom.variables()]
        return [self.var(v) for v in list(term_variables(lit.left)) + list(term_variables(lit.right))]

    def emit_filter(self, lit, emit) -> None:
        if isinstance(lit, Comparison):
            op = "==" if lit.op == "=" else lit.op
            emit(f"if not ({self.term(lit.left)} {op} {self.term(lit.right)}): continue")
            return
        atom = lit.atom
        store = self.db.stores[atom.relation]
        cols = [(j, self.term(a)) for j, a in enumerate(atom.args)
                if not (isinstance(a, Variable) and a.anonymous)]
        if len(cols) == len(atom.args):
            mset = self.ref(store.members, "N")
            emit(f"if {self.tuple_expr([e for _, e in cols])} in {mset}: continue")
        elif cols:
            idx = self.ref(store.index(tuple(j for j, _ in cols)), "NI")
            key = cols[0][1] if len(cols) == 1 else self.tuple_expr([e for _, e in cols])
            emit(f"if {idx}.get({key}): continue")
        else:
            lst = self.ref(store.tuples, "NL")
            emit(f"if {lst}: continue")

    def term(self, t: Term) -> str:
        if isinstance(t, Variable):
            return self.var(t.name)
        if isinstance(t, Constant):
            if isinstance(t.value, str):
                return repr(self.db.symbols.intern(t.value))
            return repr(t.value)
        ops = t.operands
        if t.op == "ord":
            return self.term(ops[0])
        if t.op == "mix":
            return f"_mix({ops[0].value!r}, {self.tuple_expr([self.term(o) for o in ops[1:]])})"
        if t.op == "perfect":
            k = ops[1].value
            vals = [self.term(o) for o in ops[2:]]
            rel = self.db.symbols.intern(ops[0].value)
            return f"_perfect({rel}, {self.tuple_expr(vals[:k])}, {self.tuple_expr(vals[k:])})"
        fn = {"+": "_add", "-": "_sub", "*": "_mul", "%": "_mod"}[t.op]
        return f"{fn}({self.term(ops[0])}, {self.term(ops[1])})"


def _locked_insert(store: RelationStore, locks: dict) -> Callable[[tuple], bool]:
    lock = locks.setdefault(store.name, threading.Lock())

    def ins(t: tuple) -> bool:
        with lock:
            return store.insert_choice(t)
    return ins


# --- evaluation -------------------------------------------------------------------------

def evaluate(program: Program, inputs: Inputs | None = None, *, threads: int = 1) -> Database:
    """Semi-naive fixpoint of ``program`` over ``inputs``, stratum by stratum.

    ``inputs`` maps input relation names to rows of Python values (``str``
    for symbol columns, ``int`` for number columns). With ``threads > 1`` rule
    versions of one iteration run concurrently and inserts are serialized per
    relation; the choice of surviving tuples is then order dependent.
    """
    t0 = time.perf_counter()
    strata = stratify(program)
    db = load_database(program, inputs)
    perfect = db.perfect
    locks: dict | None = {} if threads > 1 else None
    compiler = _RuleCompiler(db, perfect, locks)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for stratum in strata:
            db.metrics.strata.append(_run_stratum(program, db, stratum, compiler, pool))
    finally:
        if pool is not None:
            pool.shutdown()
    db.refresh_metrics()
    db.metrics.wall_time = time.perf_counter() - t0
    return db


def _run_stratum(program: Program, db: Database, stratum: Stratum, compiler: _RuleCompiler,
                 pool: ThreadPoolExecutor | None) -> StratumMetrics:
    heads = sorted({program.rules[i].head.relation for i in stratum.rules},
                   key=program.relation_names.index)
    metrics = StratumMetrics(heads, list(stratum.rules))

    full = [(i, compiler.compile(program.rules[i], i, None)) for i in stratum.rules]
    # (rule index, delta relation, compiled version)
    versions = []
    for i in stratum.rules:
        rule = program.rules[i]
        for pos, lit in enumerate(rule.body):
            if isinstance(lit, Atom) and lit.relation in stratum.relations:
                versions.append((i, lit.relation, compiler.compile(rule, i, pos)))

    def run(jobs):
        if pool is None:
            for i, fn, arg in jobs:
                _call(fn, arg, i, program, db)
        else:
            futures = [pool.submit(_call, fn, arg, i, program, db) for i, fn, arg in jobs]
            for f in futures:
                f.result()

    run([(i, fn, None) for i, fn in full])
    metrics.iterations = 1
    deltas = {r: db.stores[r].commit() for r in stratum.relations}
    while any(deltas.values()):
        run([(i, fn, deltas[rel]) for i, rel, fn in versions if deltas[rel]])
        metrics.iterations += 1
        deltas = {r: db.stores[r].commit() for r in stratum.relations}
    return metrics


def _call(fn, arg, rule_index: int, program: Program, db: Database) -> None:
    try:
        rejected = fn(arg)
    except EvaluationError as e:
        raise EvaluationError(f"rule {rule_index} ({program.rules[rule_index].head.relation}): {e}") from None
    if rejected:
        db.stores[program.rules[rule_index].head.relation].rejected_by_choice += rejected
