"""Naive evaluation: re-derive everything each round until nothing new is accepted.

This is the equivalence oracle for :func:`choicebound.engine.evaluate`. It
interprets rules directly over substitutions and shares none of the join
compiler, only fact loading and term semantics.
"""
from __future__ import annotations

import time
from typing import Iterator

from .core import Atom, Comparison, Negation, Program, Rule, Variable
from .engine import Database, Inputs, StratumMetrics, load_database, stratify
from .runtime import COMPARE, PerfectHasher, constant_value, eval_term


def _match(atom: Atom, t: tuple, env: dict[str, int], db: Database) -> dict[str, int] | None:
    out = env
    for arg, v in zip(atom.args, t):
        if isinstance(arg, Variable):
            if arg.anonymous:
                continue
            cur = out.get(arg.name)
            if cur is None:
                if out is env:
                    out = dict(env)
                out[arg.name] = v
            elif cur != v:
                return None
        elif constant_value(arg, db.symbols) != v:
            return None
    return out


def _solve(rule: Rule, snapshot: dict[str, list[tuple]], db: Database,
           perfect: PerfectHasher) -> Iterator[dict[str, int]]:
    positives = [lit for lit in rule.body if isinstance(lit, Atom)]
    checks = [lit for lit in rule.body if not isinstance(lit, Atom)]

    def go(k: int, env: dict[str, int]) -> Iterator[dict[str, int]]:
        if k == len(positives):
            yield env
            return
        atom = positives[k]
        for t in snapshot[atom.relation]:
            e = _match(atom, t, env, db)
            if e is not None:
                yield from go(k + 1, e)

    for env in go(0, {}):
        ok = True
        for c in checks:
            if isinstance(c, Negation):
                if any(_match(c.atom, t, env, db) is not None for t in snapshot[c.atom.relation]):
                    ok = False
                    break
            else:
                assert isinstance(c, Comparison)
                lhs = eval_term(c.left, env, db.symbols, perfect)
                rhs = eval_term(c.right, env, db.symbols, perfect)
                if not COMPARE[c.op](lhs, rhs):
                    ok = False
                    break
        if ok:
            yield env


def _round(program: Program, rule_indices, db: Database, perfect: PerfectHasher) -> int:
    snapshot = {name: list(store.tuples) for name, store in db.stores.items()}
    accepted = 0
    for i in rule_indices:
        rule = program.rules[i]
        store = db.stores[rule.head.relation]
        for env in _solve(rule, snapshot, db, perfect):
            t = tuple(eval_term(a, env, db.symbols, perfect) for a in rule.head.args)
            if store.insert_choice(t):
                accepted += 1
    for store in db.stores.values():
        store.commit()
    return accepted


def evaluate_naive(program: Program, inputs: Inputs | None = None) -> Database:
    t0 = time.perf_counter()
    strata = stratify(program)
    db = load_database(program, inputs)
    db.metrics.mode = "naive"
    perfect = db.perfect
    for stratum in strata:
        heads = sorted({program.rules[i].head.relation for i in stratum.rules},
                       key=program.relation_names.index)
        m = StratumMetrics(heads, list(stratum.rules))
        while True:
            m.iterations += 1
            if _round(program, stratum.rules, db, perfect) == 0:
                break
        db.metrics.strata.append(m)
    db.refresh_metrics()
    db.metrics.wall_time = time.perf_counter() - t0
    return db


def fixpoint_residue(program: Program, db: Database) -> int:
    """Tuples one more naive round over every rule would accept (0 at a fixpoint).

    Mutates ``db`` if the answer is nonzero.
    """
    return _round(program, range(len(program.rules)), db, db.perfect)

