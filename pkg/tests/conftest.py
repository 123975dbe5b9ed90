"""Shared helpers: seeded instance generators and independent oracles.

Oracles here are deliberately naive (pair enumeration, exhaustive product
search) so they stay independent of the library's optimized code paths.
"""

from __future__ import annotations

import itertools

import numpy as np

from palettesparse.cover import CorrespondenceCover, ListAssignment
from palettesparse.graphcore import Graph


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_graph(rng, n: int, p: float) -> Graph:
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < p
    ]
    return Graph(n, edges)


def random_lists(rng, n: int, universe: int, size: int) -> ListAssignment:
    return ListAssignment(tuple(
        tuple(sorted(rng.choice(universe, size=size, replace=False).tolist()))
        for _ in range(n)
    ))


def random_cover_for(rng, g: Graph, list_size: int, density: float) -> CorrespondenceCover:
    lists = [tuple(range(v * list_size, (v + 1) * list_size)) for v in range(g.n)]
    matchings = {}
    for u, v in g.edges():
        t = int(rng.binomial(list_size, density))
        if t == 0:
            continue
        left = rng.permutation(list_size)[:t]
        right = rng.permutation(list_size)[:t]
        matchings[(u, v)] = tuple(
            (u * list_size + int(a), v * list_size + int(b))
            for a, b in zip(left, right)
        )
    return CorrespondenceCover(lists, matchings)


# --------------------------------------------------------------------------
# independent oracles


def oracle_neighborhood_edges(g: Graph) -> list[int]:
    """Edges inside each neighborhood by direct pair enumeration."""
    out = []
    for v in range(g.n):
        nbrs = g.neighbors(v)
        count = sum(
            1 for a, b in itertools.combinations(nbrs, 2) if g.has_edge(a, b)
        )
        out.append(count)
    return out


def oracle_list_colorings(g: Graph, lists) -> list[tuple[int, ...]]:
    """All proper list colorings, by exhaustive product enumeration."""
    rows = lists.lists if isinstance(lists, ListAssignment) else lists
    out = []
    for combo in itertools.product(*rows):
        if all(combo[u] != combo[v] for u, v in g.edges()):
            out.append(combo)
    return out


def oracle_cover_colorings(g: Graph, cov: CorrespondenceCover) -> list[tuple[int, ...]]:
    """All proper cover colorings, by exhaustive product enumeration."""
    pair_sets = {e: set(p) for e, p in cov.matchings.items()}
    out = []
    for combo in itertools.product(*cov.lists):
        ok = True
        for (u, v), pairs in pair_sets.items():
            if (combo[u], combo[v]) in pairs:
                ok = False
                break
        if ok:
            out.append(combo)
    return out


def oracle_colorable(g: Graph, obj) -> bool:
    if isinstance(obj, CorrespondenceCover):
        return bool(oracle_cover_colorings(g, obj))
    return bool(oracle_list_colorings(g, obj))
