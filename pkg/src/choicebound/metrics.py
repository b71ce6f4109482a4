"""Completeness/performance comparison of two evaluated databases."""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence, Union

from .core import BoundSpec
from .engine import Database
from .factsio import Relation, Snapshot, snapshot
from .transform import bounded_name


class SchemaMismatchError(ValueError):
    pass


class UnknownRelationError(KeyError):
    pass


Side = Union[Database, Snapshot]


def _as_snapshot(side: Side) -> Snapshot:
    return snapshot(side) if isinstance(side, Database) else side


@dataclass(frozen=True)
class Violation:
    relation: str
    key: tuple
    count: int
    limit: int


def _per_key_counts(view: Snapshot, spec: BoundSpec) -> Counter:
    if spec.relation not in view:
        raise UnknownRelationError(spec.relation)
    rel = view[spec.relation]
    key_pos = [rel.columns.index(c) for c in spec.bound_vars]
    bname = bounded_name(spec.relation)
    if bname in view:
        # count what flowed through the bounded rules, projected to R's columns
        width = len(rel.columns)
        rows = {r[:width] for r in view[bname].rows}
    else:
        rows = rel.rows
    return Counter(tuple(r[p] for p in key_pos) for r in rows)


def check_bound(db: Side, spec: BoundSpec) -> list[Violation]:
    """Keys of ``spec.relation`` holding more than ``spec.limit`` tuples.

    When the bounded shadow relation is present its contents are counted,
    which exempts tuples that reached the relation only through facts or
    excluded rules; otherwise the relation itself is counted.
    """
    counts = _per_key_counts(_as_snapshot(db), spec)
    return [Violation(spec.relation, k, n, spec.limit) for k, n in sorted(counts.items()) if n > spec.limit]


@dataclass
class RelationDiff:
    tuples_a: int
    tuples_b: int
    a_minus_b: int
    b_minus_a: int
    jaccard: float
    coverage_columns: list[str]
    coverage_a: float
    coverage_b: float


@dataclass
class BoundDiff:
    spec: str
    relation: str
    limit: int
    max_per_key_a: int
    max_per_key_b: int
    bounded_a: bool
    bounded_b: bool
    violations_a: list[dict]
    violations_b: list[dict]


@dataclass
class CompletenessReport:
    relations: dict[str, RelationDiff] = field(default_factory=dict)
    bounds: list[BoundDiff] = field(default_factory=list)
    only_in_a: list[str] = field(default_factory=list)
    only_in_b: list[str] = field(default_factory=list)
    time_a: float | None = None
    time_b: float | None = None

    @property
    def timing_ratio(self) -> float | None:
        if self.time_a is None or self.time_b is None or self.time_b == 0:
            return None
        return self.time_a / self.time_b

    @property
    def has_violations(self) -> bool:
        """Violations on a side that was actually evaluated under the bound."""
        return any((b.bounded_a and b.violations_a) or (b.bounded_b and b.violations_b) for b in self.bounds)

    def to_json(self) -> dict:
        return {
            "relations": {k: asdict(v) for k, v in self.relations.items()},
            "bounds": [asdict(b) for b in self.bounds],
            "only_in_a": self.only_in_a,
            "only_in_b": self.only_in_b,
            "time_a": self.time_a,
            "time_b": self.time_b,
            "timing_ratio": self.timing_ratio,
        }

    def to_table(self) -> str:
        header = ["relation", "A", "B", "A-B", "B-A", "jaccard", "cover", "covA", "covB"]
        rows = [header]
        for name, d in self.relations.items():
            rows.append([name, str(d.tuples_a), str(d.tuples_b), str(d.a_minus_b), str(d.b_minus_a),
                         f"{d.jaccard:.4f}", ",".join(d.coverage_columns),
                         f"{d.coverage_a:.4f}", f"{d.coverage_b:.4f}"])
        out = _align(rows)
        if self.bounds:
            brows = [["bound", "limit", "maxA", "maxB", "violA", "violB"]]
            for b in self.bounds:
                va = str(len(b.violations_a)) + ("" if b.bounded_a else " (unbounded)")
                vb = str(len(b.violations_b)) + ("" if b.bounded_b else " (unbounded)")
                brows.append([b.spec, str(b.limit), str(b.max_per_key_a), str(b.max_per_key_b), va, vb])
            out += "\n" + _align(brows)
        if self.timing_ratio is not None:
            out += f"\ntime A/B: {self.time_a:.3f}s / {self.time_b:.3f}s = {self.timing_ratio:.2f}x\n"
        return out


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _coverage(rel: Relation, other: Relation, cols: Sequence[str]) -> tuple[float, float]:
    pos = [rel.columns.index(c) for c in cols]
    ka = {tuple(r[p] for p in pos) for r in rel.rows}
    kb = {tuple(r[p] for p in pos) for r in other.rows}
    union = ka | kb
    if not union:
        return 1.0, 1.0
    return len(ka) / len(union), len(kb) / len(union)


def diff_databases(a: Side, b: Side, specs: Sequence[BoundSpec] = (), *,
                   coverage: Mapping[str, Sequence[str]] | None = None,
                   time_a: float | None = None, time_b: float | None = None) -> CompletenessReport:
    """Exact per-relation set differences, coverage, and per-spec key maxima.

    Coverage for a relation is measured over ``coverage[relation]`` if given,
    else the first bound variable of a spec on it, else its first column.
    """
    if isinstance(a, Database) and time_a is None:
        time_a = a.metrics.wall_time
    if isinstance(b, Database) and time_b is None:
        time_b = b.metrics.wall_time
    va, vb = _as_snapshot(a), _as_snapshot(b)
    report = CompletenessReport(time_a=time_a, time_b=time_b)
    report.only_in_a = sorted(set(va) - set(vb))
    report.only_in_b = sorted(set(vb) - set(va))
    spec_cols = {}
    for s in specs:
        spec_cols.setdefault(s.relation, [s.bound_vars[0]])
    coverage = dict(coverage or {})
    for name in sorted(set(va) & set(vb)):
        ra, rb = va[name], vb[name]
        if ra.columns != rb.columns:
            raise SchemaMismatchError(f"{name}: columns {ra.columns} vs {rb.columns}")
        inter = len(ra.rows & rb.rows)
        union = len(ra.rows) + len(rb.rows) - inter
        cols = list(coverage.get(name) or spec_cols.get(name) or ra.columns[:1])
        cov_a, cov_b = _coverage(ra, rb, cols) if cols else (1.0, 1.0)
        report.relations[name] = RelationDiff(
            len(ra.rows), len(rb.rows), len(ra.rows) - inter, len(rb.rows) - inter,
            inter / union if union else 1.0, cols, cov_a, cov_b)
    for s in specs:
        ca = _per_key_counts(va, s)
        cb = _per_key_counts(vb, s)
        report.bounds.append(BoundDiff(
            s.describe(), s.relation, s.limit,
            max(ca.values(), default=0), max(cb.values(), default=0),
            va[s.relation].bounded, vb[s.relation].bounded,
            [{"key": list(k), "count": n} for k, n in sorted(ca.items()) if n > s.limit],
            [{"key": list(k), "count": n} for k, n in sorted(cb.items()) if n > s.limit]))
    return report
