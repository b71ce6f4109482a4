import pytest

from choicebound.core import Column, RelationDecl
from choicebound.corpus import chain_example_facts, choice_demo_program, ctxsensitive_program, fieldsensitive_program
from choicebound.engine import (
    EvaluationError, RelationStore, StratificationError, evaluate, load_database, stratify,
)
from choicebound.naive import evaluate_naive, fixpoint_residue
from choicebound.parser import parse_program

from fuzzgen import fuzz_program

FIELD_FACTS = {
    "AssignHeapAllocation": [("v1", "o1"), ("v3", "o2")],
    "Assign": [("v2", "v1"), ("v4", "v2")],
    "StoreField": [("v2", "f", "v3")],
    "LoadField": [("v4", "f", "v5")],
}


def _store(choice=None):
    cols = (Column("x", "number"), Column("y", "number"))
    return RelationStore(RelationDecl("r", cols, choice))


def test_insert_choice_unconstrained_dedup():
    s = _store()
    assert s.insert_choice((1, 1))
    assert not s.insert_choice((1, 1))
    assert len(s) == 1 and s.rejected_by_choice == 0


def test_insert_choice_duplicate_is_not_a_conflict():
    s = _store(("x",))
    assert s.insert_choice((1, 1))
    assert not s.insert_choice((1, 1))
    assert s.rejected_by_choice == 0
    assert not s.insert_choice((1, 2))
    assert s.rejected_by_choice == 1
    assert s.members == {(1, 1)}


def test_insert_choice_first_wins_in_file_order():
    s = _store(("x",))
    for t in [(1, 1), (1, 2), (1, 3), (2, 4), (2, 5), (3, 6)]:
        s.insert_choice(t)
    s.commit()
    assert s.tuples == [(1, 1), (2, 4), (3, 6)]
    assert s.rejected_by_choice == 3


def test_commit_updates_existing_indexes():
    s = _store()
    s.insert_choice((1, 2))
    s.commit()
    idx = s.index((0,))
    s.insert_choice((1, 3))
    assert idx[1] == [(1, 2)]
    assert s.commit() == [(1, 3)]
    assert idx[1] == [(1, 2), (1, 3)]


def test_choice_demo():
    db = evaluate(choice_demo_program())
    assert db.rows("r") == [(1, 1), (2, 4), (3, 6)]
    assert db["r"].rejected_by_choice == 3
    assert db.metrics.relations["r"] == {"tuples": 3, "rejected_by_choice": 3}
    assert evaluate_naive(choice_demo_program()).contents() == db.contents()


def test_stratify_fieldsensitive_single_stratum():
    strata = stratify(fieldsensitive_program())
    assert len(strata) == 1
    assert strata[0].rules == (0, 1, 2, 3)
    assert strata[0].relations == {"VarPointsTo", "InstanceFieldPointsTo"}


def test_stratify_self_negation():
    p = parse_program(".decl P(x: symbol)\n.decl Q(x: symbol)\nP(x) :- Q(x), !P(x).")
    with pytest.raises(StratificationError) as ei:
        stratify(p)
    assert "P" in ei.value.relations


def test_stratify_negation_cycle_names_relations():
    p = parse_program(".decl P(x: symbol)\n.decl Q(x: symbol)\n.decl S(x: symbol)\n"
                      "P(x) :- S(x), !Q(x).\nQ(x) :- P(x).")
    with pytest.raises(StratificationError) as ei:
        stratify(p)
    assert set(ei.value.relations) >= {"P", "Q"}


def test_stratify_orders_negation():
    p = parse_program(".decl P(x: symbol)\n.decl Q(x: symbol)\n.decl R(x: symbol)\n.decl S(x: symbol)\n"
                      "R(x) :- S(x), !P(x).\nP(x) :- Q(x).")
    strata = stratify(p)
    assert [s.rules for s in strata] == [(1,), (0,)]


def test_negation_evaluation():
    p = parse_program(".decl P(x: symbol)\n.decl Q(x: symbol)\n.decl R(x: symbol)\n.decl S(x: symbol)\n"
                      'S("a"). S("b"). Q("a").\nR(x) :- S(x), !P(x).\nP(x) :- Q(x).')
    assert evaluate(p).rows("R") == [("b",)]
    assert evaluate_naive(p).rows("R") == [("b",)]


def test_fieldsensitive_example():
    db = evaluate(fieldsensitive_program(), FIELD_FACTS)
    assert set(db.rows("VarPointsTo")) == {("v1", "o1"), ("v3", "o2"), ("v2", "o1"), ("v4", "o1"), ("v5", "o2")}
    assert set(db.rows("InstanceFieldPointsTo")) == {("o1", "f", "o2")}
    assert evaluate_naive(fieldsensitive_program(), FIELD_FACTS).contents() == db.contents()


def test_empty_inputs_empty_outputs():
    db = evaluate(fieldsensitive_program(), {})
    assert len(db["VarPointsTo"]) == 0 and len(db["InstanceFieldPointsTo"]) == 0


def test_fixpoint_residue_zero():
    db = evaluate(fieldsensitive_program(), FIELD_FACTS)
    assert fixpoint_residue(db.program, db) == 0


def test_interning_order_is_canonical():
    p = parse_program('.decl A(x: symbol)\n.decl B(x: symbol)\n.input B\n.input A\nA("lit").\nB(x) :- A(x), A("rule").')
    db = load_database(p, {"B": [("b1",)], "A": [("a1",)]})
    assert [db.symbols.resolve(i) for i in range(len(db.symbols))] == ["lit", "rule", "a1", "b1"]


def test_inputs_must_be_declared_input():
    with pytest.raises(EvaluationError):
        evaluate(fieldsensitive_program(), {"VarPointsTo": [("a", "b")]})
    with pytest.raises(EvaluationError):
        evaluate(fieldsensitive_program(), {"Nope": []})


def test_input_type_errors():
    with pytest.raises(EvaluationError):
        evaluate(fieldsensitive_program(), {"Assign": [("a", 1)]})
    with pytest.raises(EvaluationError):
        evaluate(fieldsensitive_program(), {"Assign": [("a",)]})


def test_arithmetic_wraps_and_mod_by_zero():
    p = parse_program(".decl A(x: number)\n.decl B(x: number)\nA(9223372036854775807).\nB(x + 1) :- A(x).")
    assert evaluate(p).rows("B") == [(-(2**63),)]
    q = parse_program(".decl A(x: number)\n.decl B(x: number)\nA(0).\nB(5 % x) :- A(x).")
    with pytest.raises(EvaluationError):
        evaluate(q)


def test_euclidean_mod_in_rules():
    p = parse_program(".decl A(x: number)\n.decl B(x: number)\nA(-7).\nB(x % 3) :- A(x).")
    assert evaluate(p).rows("B") == [(2,)]


def test_comparisons_and_constants_in_body():
    p = parse_program(".decl E(a: number, b: number)\n.decl T(a: number, b: number)\n"
                      "E(1,2). E(2,3). E(3,1). E(3,3).\nT(a, b) :- E(a, b), a < b.\nT(a, a) :- E(a, 3), a >= 3.")
    assert evaluate(p).rows("T") == [(1, 2), (2, 3), (3, 3)]


def test_repeated_variable_in_atom():
    p = parse_program(".decl E(a: symbol, b: symbol)\n.decl L(a: symbol)\n"
                      'E("x","x"). E("x","y").\nL(a) :- E(a, a).')
    assert evaluate(p).rows("L") == [("x",)]


def test_transitive_closure_iterations():
    n = 20
    facts = "".join(f"E({i}, {i + 1}).\n" for i in range(n))
    p = parse_program(".decl E(a: number, b: number)\n.decl T(a: number, b: number)\n" + facts
                      + "T(a, b) :- E(a, b).\nT(a, c) :- T(a, b), E(b, c).")
    db = evaluate(p)
    assert len(db["T"]) == n * (n + 1) // 2
    assert db.metrics.strata[0].iterations == n + 1


def test_choice_in_recursion_is_functional():
    p = parse_program(".decl E(a: number, b: number)\n.decl P(a: number, b: number) choice-domain (b)\n"
                      "E(0,1). E(0,2). E(1,3). E(2,3). E(3,4).\n"
                      "P(0, 0).\nP(a, b) :- P(_, a), E(a, b).")
    db = evaluate(p)
    parents = {}
    for a, b in db.rows("P"):
        assert b not in parents
        parents[b] = a
    assert set(parents) == {0, 1, 2, 3, 4}
    assert fixpoint_residue(p, db) == 0


def test_chain_contexts():
    db = evaluate(ctxsensitive_program(), chain_example_facts())
    from choicebound.corpus import SEP
    ctxs = {c for m, c in db.rows("Reachable") if m == "m3"}
    assert {tuple(c.split(SEP)) for c in ctxs} == {("c1", "b1"), ("c1", "b2"), ("c2", "b1"), ("c2", "b2")}
    assert evaluate_naive(ctxsensitive_program(), chain_example_facts()).contents() == db.contents()


def test_ctx_single_allocation_base_case():
    from choicebound.corpus import INITIAL_CONTEXT, context_facts
    facts = {"MainMethod": [("main",)], "Alloc": [("x", "h", "main")]}
    facts.update(context_facts(["h"]))
    rows = evaluate(ctxsensitive_program(), facts).rows("VarPointsTo")
    assert rows == [("x", INITIAL_CONTEXT, "h", "*")]


@pytest.mark.parametrize("seed", range(40))
def test_seminaive_matches_naive_on_fuzz(seed):
    case = fuzz_program(seed + 1000)
    assert evaluate(case.program).contents() == evaluate_naive(case.program).contents(), case.text


@pytest.mark.parametrize("seed", range(10))
def test_parallel_mode_matches_on_choice_free(seed):
    case = fuzz_program(seed + 2000)
    assert evaluate(case.program, threads=4).contents() == evaluate(case.program).contents()


def test_parallel_mode_respects_choice():
    p = choice_demo_program()
    db = evaluate(p, threads=3)
    assert len(db["r"]) == 3


def test_evaluation_is_deterministic():
    a = evaluate(ctxsensitive_program(), chain_example_facts())
    b = evaluate(ctxsensitive_program(), chain_example_facts())
    assert a.metrics.tuple_counts() == b.metrics.tuple_counts()
    assert all(a.rows(n) == b.rows(n) for n in a.stores)
