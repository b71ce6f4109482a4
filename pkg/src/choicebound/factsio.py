"""Tab-separated fact files in, sorted tab-separated output files out.

Input: ``<Relation>.facts`` per ``.input`` relation, columns in declaration
order, symbols unquoted, numbers in decimal. Output: ``<Relation>.csv`` with
rows sorted by column values (numbers numerically), plus ``schema.json``
naming each written relation's columns and types so that output directories
can be compared without the program.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import BOUNDED_SUFFIX, NUMBER, Program
from .engine import Database

SCHEMA_FILE = "schema.json"


class FactsError(ValueError):
    pass


def _decode_row(fields: list[str], types: Sequence[str], where: str) -> tuple:
    if len(fields) != len(types):
        raise FactsError(f"{where}: expected {len(types)} columns, got {len(fields)}")
    row = []
    for f, ty in zip(fields, types):
        if ty == NUMBER:
            try:
                row.append(int(f))
            except ValueError:
                raise FactsError(f"{where}: expected a number, got {f!r}") from None
        else:
            row.append(f)
    return tuple(row)


def _read_rows(path: Path, types: Sequence[str]) -> list[tuple]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line and len(types) != 1:
                continue
            rows.append(_decode_row(line.split("\t"), types, f"{path}:{lineno}"))
    return rows


def read_facts_dir(program: Program, directory: str | os.PathLike | None) -> dict[str, list[tuple]]:
    """Rows for every ``.input`` relation with a ``<Relation>.facts`` file in ``directory``."""
    if directory is None:
        return {}
    d = Path(directory)
    if not d.is_dir():
        raise FactsError(f"facts directory not found: {d}")
    inputs: dict[str, list[tuple]] = {}
    for decl in program.declarations:
        if not decl.input:
            continue
        path = d / f"{decl.name}.facts"
        if path.exists():
            inputs[decl.name] = _read_rows(path, [c.type for c in decl.columns])
    return inputs


def _format_rows(rows: Iterable[tuple]) -> str:
    return "".join("\t".join(str(v) for v in r) + "\n" for r in rows)


def write_facts_dir(inputs: Mapping[str, Iterable[tuple]], directory: str | os.PathLike) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name in sorted(inputs):
        (d / f"{name}.facts").write_text(_format_rows(inputs[name]), encoding="utf-8", newline="")


def write_outputs(db: Database, directory: str | os.PathLike,
                  relations: Sequence[str] | None = None) -> list[Path]:
    """Write sorted ``<Relation>.csv`` files (default: the ``.output`` relations)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if relations is None:
        relations = [decl.name for decl in db.program.declarations if decl.output]
    written = []
    schema = {}
    for name in relations:
        path = d / f"{name}.csv"
        path.write_text(_format_rows(db.rows(name)), encoding="utf-8", newline="")
        written.append(path)
        decl = db[name].decl
        schema[name] = {"columns": list(decl.column_names), "types": [c.type for c in decl.columns],
                        "bounded": name + BOUNDED_SUFFIX in db}
    (d / SCHEMA_FILE).write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return written


@dataclass(frozen=True)
class Relation:
    """Decoded contents of one relation, detached from any symbol table.

    ``bounded`` records that the relation was produced under a choice bound.
    """

    columns: tuple[str, ...]
    rows: frozenset[tuple]
    bounded: bool = False


Snapshot = dict[str, Relation]


def snapshot(db: Database, relations: Sequence[str] | None = None) -> Snapshot:
    names = relations if relations is not None else list(db.stores)
    return {n: Relation(db.columns(n), frozenset(db.decode(n, t) for t in db[n].members),
                        n + BOUNDED_SUFFIX in db) for n in names}


def load_output_dir(directory: str | os.PathLike) -> Snapshot:
    """Read every ``<Relation>.csv`` listed in the directory's ``schema.json``."""
    d = Path(directory)
    schema_path = d / SCHEMA_FILE
    if not schema_path.exists():
        raise FactsError(f"{d}: missing {SCHEMA_FILE} (not an output directory?)")
    schema = json.loads(schema_path.read_text(encoding="utf-8"))
    out: Snapshot = {}
    for name in sorted(schema):
        path = d / f"{name}.csv"
        if not path.exists():
            raise FactsError(f"{d}: {SCHEMA_FILE} lists {name} but {path.name} is missing")
        entry = schema[name]
        out[name] = Relation(tuple(entry["columns"]), frozenset(_read_rows(path, entry["types"])),
                             bool(entry.get("bounded", False)))
    return out
