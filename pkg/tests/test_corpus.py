import pytest
from hypothesis import given, settings, strategies as st

from choicebound.core import BoundSpec
from choicebound.corpus import (
    CORPUS_DIR, NAMES, SEP, config, ctxsensitive_program, fieldsensitive_program, load_bounds, path,
)
from choicebound.corpus.generator import BlowupParams, generate_blowup
from choicebound.engine import evaluate
from choicebound.factsio import read_facts_dir, write_facts_dir
from choicebound.metrics import check_bound
from choicebound.transform import apply_choice_bound


def test_fieldsensitive_shape():
    p = fieldsensitive_program()
    assert len(p.rules) == 4
    assert len(p.declarations) == 6
    assert {d.name for d in p.declarations if d.input} == {"AssignHeapAllocation", "Assign", "LoadField", "StoreField"}
    assert {d.name for d in p.declarations if d.output} == {"VarPointsTo", "InstanceFieldPointsTo"}
    assert p.decl("StoreField").column_names == ("base", "fieldname", "from")
    assert p.decl("LoadField").column_names == ("base", "fieldname", "to")


def test_ctxsensitive_shape():
    p = ctxsensitive_program()
    assert p.decl("VarPointsTo").column_names == ("var", "ctx", "hobj", "hctx")
    assert len(p.rules) == 10
    q = apply_choice_bound(p, config("doop-2objH"))
    assert q.has_relation("VarPointsTo__bounded")


def test_corpus_layout():
    for name in NAMES:
        d = path(name)
        for part in ("program.dl", "bounds.cb", "facts", "expected"):
            assert (d / part).exists(), (name, part)
        load_bounds(name)
    with pytest.raises(KeyError):
        path("nope")


@pytest.mark.parametrize("name", NAMES)
def test_expected_outputs_match(name):
    from choicebound.corpus import load_program
    from choicebound.factsio import load_output_dir, snapshot
    p = load_program(name)
    db = evaluate(p, read_facts_dir(p, path(name) / "facts"))
    expected = load_output_dir(path(name) / "expected")
    got = snapshot(db, list(expected))
    assert got == expected


def test_context_separator_unused_by_generator():
    facts = generate_blowup(BlowupParams(12, 5, 0.2, 2, 2, seed=4))
    for name, rows in facts.items():
        if name in ("InitialContext", "MergeContext", "HeapContextOf"):
            continue
        assert not any(SEP in v for r in rows for v in r if isinstance(v, str))


def test_zero_vars_empty():
    assert generate_blowup(BlowupParams(0, 5, 1.0)) == {}


def test_complete_digraph_closure():
    facts = generate_blowup(BlowupParams(3, 2, 1.0))
    assert len(facts["Assign"]) == 9
    db = evaluate(fieldsensitive_program(), facts)
    assert len(db["VarPointsTo"]) == 6


@pytest.mark.parametrize("bad", [
    dict(num_vars=-1, num_objs=1), dict(num_vars=1, num_objs=1, assign_density=1.5),
    dict(num_vars=1, num_objs=1, context_depth=1), dict(num_vars=1.5, num_objs=1),
    dict(num_vars=1, num_objs=1, field_count=-2),
])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        BlowupParams(**bad)


def test_generator_deterministic_files(tmp_path):
    params = BlowupParams(40, 30, 0.05, 5, 0, seed=11)
    write_facts_dir(generate_blowup(params), tmp_path / "a")
    write_facts_dir(generate_blowup(params), tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    other = generate_blowup(BlowupParams(40, 30, 0.05, 5, 0, seed=12))
    assert other != generate_blowup(params)


def _reference_blowup(nv, no, density, nf, seed):
    """Scalar re-statement of the documented depth-0 draw order."""
    m64 = (1 << 64) - 1

    def draw(i):
        z = (seed + (i + 1) * 0x9E3779B97F4A7C15) & m64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & m64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & m64
        return z ^ (z >> 31)

    pos = 0
    alloc = []
    for j in range(no):
        alloc.append((f"v{draw(pos) % nv}", f"o{j}"))
        pos += 1
    edges = [(f"v{(i + 1) % nv}", f"v{i}") for i in range(nv)]
    threshold = int(density * 2.0 ** 64)
    for to in range(nv):
        for frm in range(nv):
            keep = density >= 1.0 or draw(pos) < threshold
            pos += 1
            e = (f"v{to}", f"v{frm}")
            if keep and e not in edges:
                edges.append(e)
    stores, loads = [], []
    for k in range(nf):
        b1, src, b2, dst = (draw(pos + i) % nv for i in range(4))
        pos += 4
        stores.append((f"v{b1}", f"f{k}", f"v{src}"))
        loads.append((f"v{b2}", f"f{k}", f"v{dst}"))
    return {"AssignHeapAllocation": alloc, "Assign": edges, "StoreField": stores, "LoadField": loads}


@pytest.mark.parametrize("args", [(4, 3, 0.25, 1, 0), (9, 5, 0.1, 3, 77), (6, 2, 1.0, 2, 2**63 + 5)])
def test_generator_matches_reference_draw_order(args):
    nv, no, density, nf, seed = args
    assert generate_blowup(BlowupParams(nv, no, density, nf, 0, seed)) == _reference_blowup(*args)


def test_generator_frozen_small_instance():
    facts = generate_blowup(BlowupParams(4, 3, 0.25, 1, 0, seed=0))
    assert facts == {
        "AssignHeapAllocation": [("v3", "o0"), ("v0", "o1"), ("v3", "o2")],
        "Assign": [("v1", "v0"), ("v2", "v1"), ("v3", "v2"), ("v0", "v3"), ("v0", "v1"), ("v1", "v1"),
                   ("v3", "v3")],
        "StoreField": [("v0", "f0", "v3")],
        "LoadField": [("v1", "f0", "v2")],
    }


def test_facts_round_trip_through_files(tmp_path):
    facts = generate_blowup(BlowupParams(10, 6, 0.1, 3, 0, seed=2))
    write_facts_dir(facts, tmp_path)
    back = read_facts_dir(fieldsensitive_program(), tmp_path)
    assert back == facts


def test_depth2_runs_and_multiplies_contexts():
    facts = generate_blowup(BlowupParams(24, 6, 0.1, 2, 2, seed=1))
    db = evaluate(ctxsensitive_program(), facts)
    reach = db.rows("Reachable")
    assert ("m0", "*" + SEP + "*") in reach
    assert len(reach) > len({m for m, _ in reach})
    spec = config("doop-2objH")[0]
    bounded = evaluate(apply_choice_bound(ctxsensitive_program(), [spec]), facts)
    assert check_bound(bounded, spec) == []


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(0, 8), st.integers(1, 4), st.integers(0, 2**32))
def test_bounded_cardinality_at_most_vars_times_limit(nv, no, limit, seed):
    facts = generate_blowup(BlowupParams(nv, no, 0.3, 2, 0, seed))
    spec = BoundSpec("VarPointsTo", ("var",), limit, ("obj",))
    db = evaluate(apply_choice_bound(fieldsensitive_program(), [spec]), facts)
    assert len(db["VarPointsTo"]) <= nv * limit


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 10), st.integers(0, 6), st.integers(0, 2**32))
def test_density_one_is_total(nv, no, seed):
    facts = generate_blowup(BlowupParams(nv, no, 1.0, 0, 0, seed))
    assert len(evaluate(fieldsensitive_program(), facts)["VarPointsTo"]) == nv * no


def test_ring_alone_is_total():
    facts = generate_blowup(BlowupParams(50, 7, 0.0, 0, 0, seed=3))
    assert len(facts["Assign"]) == 50
    assert len(evaluate(fieldsensitive_program(), facts)["VarPointsTo"]) == 350


def test_package_data_present():
    assert (CORPUS_DIR / "configs" / "doop-2objH.cb").exists()
