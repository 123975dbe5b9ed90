"""Non-adaptive query-model simulator with exact query counting.

The oracle answers three query types about a hidden graph: the degree of a
vertex, the i-th neighbor of a vertex, and whether a pair is an edge. A
plan is fixed before any answer is read. Two conflict-discovery strategies
are provided: a neighbor scan (all degrees, then every neighbor slot, so
exactly n + 2m queries get issued) and color classes (every pair of
vertices sharing a sampled color, deduplicated, so every conflict edge is
found because a conflicting edge lies inside some class). The auto
strategy executes whichever of the two exact costs is smaller.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .cover import ListAssignment
from .graphcore import Graph
from .nibble import PartialColoring, SolveResult, solve
from .sparsify import (
    ConflictInstance,
    PaletteFamily,
    SharedPalette,
    SparsifyParams,
    packed_masks,
    sample_palettes,
)

__all__ = [
    "QueryOracle",
    "QueryPlan",
    "UnsupportedStrategy",
    "plan_queries",
    "execute_plan",
    "end_to_end_query_color",
    "QueryRunResult",
]


class UnsupportedStrategy(ValueError):
    pass


class QueryOracle:
    """Sole access point to the hidden graph; counts every issued query."""

    def __init__(self, g: Graph):
        self._g = g
        self.degree_queries = 0
        self.neighbor_queries = 0
        self.pair_queries = 0

    @property
    def n(self) -> int:
        return self._g.n

    def degree(self, v: int) -> int:
        self.degree_queries += 1
        return self._g.degree(v)

    def neighbor(self, v: int, i: int) -> int:
        self.neighbor_queries += 1
        return self._g.adj[v][i]

    def pair(self, u: int, v: int) -> bool:
        self.pair_queries += 1
        return self._g.has_edge(u, v)

    @property
    def total_queries(self) -> int:
        return self.degree_queries + self.neighbor_queries + self.pair_queries

    def counts(self) -> dict[str, int]:
        return {
            "degree": self.degree_queries,
            "neighbor": self.neighbor_queries,
            "pair": self.pair_queries,
            "total": self.total_queries,
        }


def _pair_union_size(masks: np.ndarray) -> int:
    """Exact number of vertex pairs sharing at least one sampled color,
    without materializing the pairs."""
    n = masks.shape[0]
    total = 0
    for u in range(n - 1):
        hit = (masks[u + 1 :] & masks[u]).any(axis=1)
        total += int(hit.sum())
    return total


def _pair_union(fam: PaletteFamily, n: int) -> np.ndarray:
    """Deduplicated within-class pairs, ordered by color then lexicographic
    first occurrence."""
    classes: dict[int, list[int]] = {}
    for v, row in enumerate(fam.sampled):
        for c in row:
            classes.setdefault(c, []).append(v)
    seen: set[int] = set()
    out_u: list[int] = []
    out_v: list[int] = []
    for c in sorted(classes):
        members = classes[c]
        for i, u in enumerate(members):
            for v in members[i + 1 :]:
                key = u * n + v
                if key not in seen:
                    seen.add(key)
                    out_u.append(u)
                    out_v.append(v)
    return np.array([out_u, out_v], dtype=np.int64).T.reshape(-1, 2)


@dataclass(frozen=True)
class QueryPlan:
    """All queries fixed before any answer: a function of (n, palettes,
    strategy, hints) only. `pairs` is None for the neighbor scan, whose
    slots are implicit: n degree queries, then per vertex the neighbor
    slots 0..delta_hint-1 of which only the first deg(v) are issued."""

    strategy: str
    n: int
    delta_hint: int | None
    pairs: np.ndarray | None
    cost_scan: int | None
    cost_classes: int | None

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.strategy}|{self.n}|{self.delta_hint}".encode())
        if self.pairs is not None:
            h.update(np.ascontiguousarray(self.pairs).tobytes())
        return h.hexdigest()


def plan_queries(n: int, fam: PaletteFamily, strategy: str,
                 delta_hint: int | None, *, m_hint: int | None = None) -> QueryPlan:
    """Build the fixed query plan for one strategy.

    scan: n degree queries plus per-vertex neighbor slots; issued cost is
    exactly n + 2m once executed. classes: the deduplicated pairs within
    the color classes V_c = {v : c in S(v)}; needs the shared global
    palette (per-vertex lists or covers are unsupported here, since
    membership classes are only well defined for a common palette). auto:
    compares the exact class cost against the exact scan cost n + 2m when
    m_hint is given (falling back to the n + n*delta_hint bound otherwise)
    and plans the cheaper one.
    """
    if strategy not in ("scan", "classes", "auto"):
        raise ValueError(f"unknown strategy {strategy!r}")
    needs_classes = strategy in ("classes", "auto")
    if needs_classes and fam.universe is None:
        raise UnsupportedStrategy(
            "color-class planning requires sampling from the shared palette; "
            "per-vertex lists and correspondence covers are unsupported"
        )
    cost_scan = None
    if delta_hint is not None:
        cost_scan = n + n * delta_hint
    if m_hint is not None:
        cost_scan = n + 2 * m_hint
    if strategy == "scan":
        if delta_hint is None:
            raise ValueError("neighbor scan needs delta_hint")
        return QueryPlan("scan", n, delta_hint, None, cost_scan, None)
    masks = packed_masks(fam.sampled, fam.universe)
    cost_classes = _pair_union_size(masks)
    if strategy == "classes":
        return QueryPlan("classes", n, delta_hint, _pair_union(fam, n),
                         cost_scan, cost_classes)
    # auto: pick the strategy with the smaller exact cost (ties go to scan)
    if delta_hint is None and m_hint is None:
        raise ValueError("auto strategy needs delta_hint or m_hint")
    if cost_scan is not None and cost_scan <= cost_classes:
        return QueryPlan("scan", n, delta_hint, None, cost_scan, cost_classes)
    return QueryPlan("classes", n, delta_hint, _pair_union(fam, n),
                     cost_scan, cost_classes)


def execute_plan(oracle: QueryOracle, plan: QueryPlan, fam: PaletteFamily):
    """Issue the plan and return (conflict instance, issued query count).

    Discovered conflict edges are exactly the true conflict edges among
    queried pairs; for the class strategy that is all of them, since a
    conflicting edge shares a color and therefore lies inside a class.
    """
    before = oracle.total_queries
    n = plan.n
    sets = [frozenset(row) for row in fam.sampled]
    conflict: list[tuple[int, int]] = []
    if plan.strategy == "scan":
        seen: set[tuple[int, int]] = set()
        for v in range(n):
            d = oracle.degree(v)
            slots = min(d, plan.delta_hint) if plan.delta_hint is not None else d
            for i in range(slots):
                u = oracle.neighbor(v, i)
                e = (u, v) if u < v else (v, u)
                if e not in seen:
                    seen.add(e)
                    if sets[e[0]] & sets[e[1]]:
                        conflict.append(e)
    else:
        for u, v in plan.pairs.tolist():
            if oracle.pair(u, v):
                conflict.append((u, v))
    issued = oracle.total_queries - before
    sub = Graph(n, sorted(set(conflict)))
    inst = ConflictInstance(sub, lists=ListAssignment(fam.sampled))
    return inst, issued


@dataclass
class QueryRunResult:
    coloring: PartialColoring | None
    queries: int
    plan: QueryPlan
    solve_result: SolveResult | None
    error: str = ""

    @property
    def success(self) -> bool:
        return self.coloring is not None


def end_to_end_query_color(oracle: QueryOracle, params: SparsifyParams, seed: int,
                           *, strategy: str = "auto", delta_hint: int | None = None,
                           m_hint: int | None = None,
                           policy: str = "auto") -> QueryRunResult:
    """sample -> plan -> execute -> prune -> solve, with exact counting.

    Pruning reuses the conflict counts of discovered edges only, so no
    query beyond the plan is ever issued. The returned coloring should be
    verified by the caller against the hidden graph.
    """
    n = oracle.n
    fam = sample_palettes(SharedPalette(n, params.q), params.s, seed)
    plan = plan_queries(n, fam, strategy, delta_hint, m_hint=m_hint)
    found, issued = execute_plan(oracle, plan, fam)

    q = params.q
    counts = np.zeros((n, q), dtype=np.int32)
    if found.graph.m:
        member = np.zeros((n, q), dtype=np.int16)
        for v, row in enumerate(fam.sampled):
            member[v, list(row)] = 1
        us, vs = found.graph.edge_arrays()
        np.add.at(counts, us, member[vs])
        np.add.at(counts, vs, member[us])
    thr = params.prune_threshold
    pruned = tuple(
        tuple(c for c in row if counts[v, c] <= thr)
        for v, row in enumerate(fam.sampled)
    )
    fam2 = PaletteFamily(fam.sampled, pruned, fam.universe)
    keep = [frozenset(row) for row in pruned]
    conflict = [
        (u, v) for u, v in found.graph.edges() if keep[u] & keep[v]
    ]
    if any(len(row) == 0 for row in pruned):
        return QueryRunResult(None, issued, plan, None,
                              error="a vertex lost every sampled color in pruning")
    res = solve(Graph(n, conflict), ListAssignment(pruned), policy=policy, seed=seed)
    return QueryRunResult(res.coloring, issued, plan, res,
                          error="" if res.success else "solver failed")
