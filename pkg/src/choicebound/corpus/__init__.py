"""Bundled analyses and their example inputs.

Each corpus entry is a directory ``<name>/`` holding ``program.dl``,
``facts/``, ``bounds.cb`` and ``expected/`` (sorted golden outputs).
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable

from ..core import BoundSpec, Program
from ..parser import parse_bounds, parse_program

CORPUS_DIR = Path(__file__).resolve().parent
NAMES = ("choice-demo", "fieldsensitive", "ctxsensitive")

# contexts are pairs encoded as one symbol; generated names never contain SEP
SEP = "\u0001"
INIT = "*"
INITIAL_CONTEXT = INIT + SEP + INIT


def path(name: str) -> Path:
    p = CORPUS_DIR / name
    if not p.is_dir():
        raise KeyError(f"no corpus entry {name!r}")
    return p


def load_program(name: str) -> Program:
    f = path(name) / "program.dl"
    return parse_program(f.read_text(encoding="utf-8"), str(f))


def load_bounds(name: str) -> list[BoundSpec]:
    f = path(name) / "bounds.cb"
    return parse_bounds(f.read_text(encoding="utf-8"), str(f))


def config(name: str) -> list[BoundSpec]:
    """A bounds file from ``configs/`` (e.g. ``doop-2objH``, ``symvalic``)."""
    f = CORPUS_DIR / "configs" / f"{name}.cb"
    return parse_bounds(f.read_text(encoding="utf-8"), str(f))


def choice_demo_program() -> Program:
    return load_program("choice-demo")


def fieldsensitive_program() -> Program:
    return load_program("fieldsensitive")


def ctxsensitive_program() -> Program:
    return load_program("ctxsensitive")


def pair(first: str, second: str) -> str:
    return first + SEP + second


def context_facts(heaps: Iterable[str]) -> dict[str, list[tuple]]:
    """Context-constructor facts for the 2-object-sensitive toy analysis.

    Heap contexts range over ``heaps`` plus the initial element; method
    contexts are all pairs of those. MergeContext builds the callee context
    (receiver, receiver's heap context); HeapContextOf projects a method
    context to its first element.
    """
    elems = [INIT] + sorted(set(heaps))
    merge = [(h, hc, pair(h, hc)) for h in elems[1:] for hc in elems]
    contexts = [pair(a, b) for a in elems for b in elems]
    return {
        "InitialContext": [(INITIAL_CONTEXT,)],
        "MergeContext": merge,
        "HeapContextOf": [(c, c.split(SEP, 1)[0]) for c in contexts],
    }


def chain_example_facts() -> dict[str, list[tuple]]:
    """main -> m1 -> m2 -> m3, each receiver pointing to two objects.

    The deepest callee ends up reachable under four contexts.
    """
    facts: dict[str, list[tuple]] = {
        "MainMethod": [("main",)],
        "Alloc": [("x", "a1", "main"), ("x", "a2", "main"),
                  ("y", "b1", "m1"), ("y", "b2", "m1"),
                  ("z", "c1", "m2"), ("z", "c2", "m2"),
                  ("w", "d1", "m3")],
        "VirtualCall": [("x", "i1", "m1", "main"), ("y", "i2", "m2", "m1"), ("z", "i3", "m3", "m2")],
        "ThisVar": [("m1", "this1"), ("m2", "this2"), ("m3", "this3")],
        "ActualArg": [("i1", "x")],
        "FormalParam": [("m1", "p1")],
        "ReturnVar": [("m3", "w")],
        "AssignReturn": [("i3", "r2")],
        "Move": [("u", "r2")],
        "StoreField": [("this1", "f", "y")],
        "LoadField": [("x", "f", "q")],
    }
    heaps = [h for _, h, _ in facts["Alloc"]]
    facts.update(context_facts(heaps))
    return facts
