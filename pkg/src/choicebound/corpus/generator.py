"""Deterministic synthetic inputs that make points-to analysis blow up.

All randomness comes from one counter-based SplitMix64 stream:
draw ``i`` is ``mix64(seed + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)``.
Draws are consumed in a fixed order (see :func:`generate_blowup`), so the
fact set is a pure function of the parameters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hashing import splitmix_draw, splitmix_draws
from . import context_facts


@dataclass(frozen=True)
class BlowupParams:
    num_vars: int
    num_objs: int
    assign_density: float = 0.0
    field_count: int = 0
    context_depth: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("num_vars", "num_objs", "field_count"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
        if not 0.0 <= self.assign_density <= 1.0:
            raise ValueError(f"assign_density must lie in [0, 1], got {self.assign_density!r}")
        if self.context_depth not in (0, 2):
            raise ValueError(f"context_depth must be 0 or 2, got {self.context_depth!r}")


class _Stream:
    def __init__(self, seed: int) -> None:
        self.seed = seed
        self.pos = 0

    def next(self) -> int:
        v = splitmix_draw(self.seed, self.pos)
        self.pos += 1
        return v

    def below(self, n: int) -> int:
        return self.next() % n

    def bernoulli_block(self, count: int, density: float) -> np.ndarray:
        """``count`` coin flips: draw < floor(density * 2**64)."""
        draws = splitmix_draws(self.seed, self.pos, count)
        self.pos += count
        if density >= 1.0:
            return np.ones(count, dtype=bool)
        return draws < np.uint64(int(density * 2.0 ** 64))


def _graph(vars_: list[str], stream: _Stream, density: float) -> list[tuple[str, str]]:
    """Ring ``(v[i+1], v[i])`` making ``vars_`` one SCC, then sampled ``(to, from)`` pairs."""
    n = len(vars_)
    edges = [(vars_[(i + 1) % n], vars_[i]) for i in range(n)]
    seen = {(((i + 1) % n), i) for i in range(n)}
    keep = stream.bernoulli_block(n * n, density)
    for k in np.flatnonzero(keep).tolist():
        to, frm = divmod(k, n)
        if (to, frm) not in seen:
            seen.add((to, frm))
            edges.append((vars_[to], vars_[frm]))
    return edges


def generate_blowup(params: BlowupParams) -> dict[str, list[tuple]]:
    """Input facts for the field-sensitive (depth 0) or 2objH (depth 2) analysis.

    Depth 0, draw order:
      1. object ``o{j}`` is allocated into ``v{draw % num_vars}`` for j in order;
      2. Assign: the ring over all variables, then one coin per ordered pair
         ``(to, from)`` in row-major order, kept when the draw is below
         ``density * 2**64`` (density 1 gives the complete digraph);
      3. per field ``f{k}``: StoreField(base, f, from) and LoadField(base, f, to)
         with base/from/base/to drawn in that order.
    With every variable on the ring, unbounded VarPointsTo is exactly
    num_vars * num_objs whenever num_objs > 0.

    Depth 2 splits variables round-robin over ``M = max(1, min(8, num_vars // 4))``
    methods ``m0`` (main) .. ``m{M-1}``; each method gets its own ring plus
    coins over its own variable pairs. Method ``m{k}`` (k >= 1) is called from
    a drawn variable of ``m{k-1}`` and copies its ``this`` into its first
    variable, so receiver objects multiply contexts down the chain.
    """
    p = params
    facts: dict[str, list[tuple]] = {}
    if p.num_vars == 0:
        return facts
    stream = _Stream(p.seed)
    vars_ = [f"v{i}" for i in range(p.num_vars)]
    objs = [f"o{j}" for j in range(p.num_objs)]
    alloc_var = [stream.below(p.num_vars) for _ in objs]

    if p.context_depth == 0:
        facts["AssignHeapAllocation"] = [(vars_[alloc_var[j]], o) for j, o in enumerate(objs)]
        facts["Assign"] = _graph(vars_, stream, p.assign_density)
        stores, loads = [], []
        for k in range(p.field_count):
            f = f"f{k}"
            stores.append((vars_[stream.below(p.num_vars)], f, vars_[stream.below(p.num_vars)]))
            loads.append((vars_[stream.below(p.num_vars)], f, vars_[stream.below(p.num_vars)]))
        facts["StoreField"] = stores
        facts["LoadField"] = loads
        return facts

    m = max(1, min(8, p.num_vars // 4))
    methods = [f"m{k}" for k in range(m)]
    by_method = [[v for i, v in enumerate(vars_) if i % m == k] for k in range(m)]
    facts["MainMethod"] = [(methods[0],)]
    facts["Alloc"] = [(vars_[alloc_var[j]], o, methods[alloc_var[j] % m]) for j, o in enumerate(objs)]
    moves: list[tuple] = []
    for k in range(m):
        moves.extend(_graph(by_method[k], stream, p.assign_density))
    calls, this_vars = [], []
    for k in range(1, m):
        caller_vars = by_method[k - 1]
        base = caller_vars[stream.below(len(caller_vars))]
        calls.append((base, f"i{k}", methods[k], methods[k - 1]))
        this = f"this{k}"
        this_vars.append((methods[k], this))
        moves.append((by_method[k][0], this))
    facts["Move"] = moves
    facts["VirtualCall"] = calls
    facts["ThisVar"] = this_vars
    stores, loads = [], []
    for k in range(p.field_count):
        f = f"f{k}"
        stores.append((vars_[stream.below(p.num_vars)], f, vars_[stream.below(p.num_vars)]))
        loads.append((vars_[stream.below(p.num_vars)], f, vars_[stream.below(p.num_vars)]))
    facts["StoreField"] = stores
    facts["LoadField"] = loads
    facts.update(context_facts(objs))
    return facts
