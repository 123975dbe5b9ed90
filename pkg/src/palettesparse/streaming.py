"""Single-pass edge-stream coloring with exact space accounting.

Palettes are sampled before the first edge arrives. An edge is stored
exactly when the endpoint samples can collide (for covers: when its
matching restricted to the samples is nonempty), per-(vertex, color)
conflict counters are maintained along the way, pruning happens after the
stream, and the retained conflict instance goes to the solver. The ledger
uses a concrete word model: one word per id or counter, two words per
stored edge, two per stored matching pair, n*s words for palettes and for
counters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import TAG_PERMUTE, substream
from .cover import CorrespondenceCover, ListAssignment
from .graphcore import Graph
from .nibble import PartialColoring, SolveResult, solve
from .sparsify import PaletteFamily, SharedPalette, SparsifyParams, sample_palettes

__all__ = [
    "SpaceLedger",
    "EdgeStream",
    "SpaceCapExceeded",
    "StreamResult",
    "stream_color",
    "stream_color_correspondence",
]


class SpaceCapExceeded(RuntimeError):
    pass


@dataclass
class SpaceLedger:
    """Exact word counts; peak_words is the running maximum of the total."""

    stored_edges: int = 0
    palette_words: int = 0
    counter_words: int = 0
    matching_words: int = 0
    peak_words: int = 0

    def total(self) -> int:
        return (
            self.palette_words
            + self.counter_words
            + 2 * self.stored_edges
            + self.matching_words
        )

    def bump(self, cap: int | None = None) -> None:
        t = self.total()
        if t > self.peak_words:
            self.peak_words = t
        if cap is not None and t > cap:
            raise SpaceCapExceeded(f"ledger total {t} exceeds space cap {cap}")


@dataclass(frozen=True)
class EdgeStream:
    """A single forward pass over edge records, in a fixed order.

    Plain records are (u, v); cover records are (u, v, pairs). Each edge
    appears exactly once (the producer's contract). `lists` carries the
    per-vertex cover color lists for the correspondence case, which are
    known before the stream starts.
    """

    n: int
    records: tuple
    lists: tuple[tuple[int, ...], ...] | None = None

    @classmethod
    def from_graph(cls, g: Graph, permute_seed: int | None = None) -> "EdgeStream":
        recs = list(g.edges())
        if permute_seed is not None:
            rng = substream(permute_seed, TAG_PERMUTE)
            rng.shuffle(recs)
        return cls(g.n, tuple(recs))

    @classmethod
    def from_cover(cls, g: Graph, cov: CorrespondenceCover,
                   permute_seed: int | None = None) -> "EdgeStream":
        recs = [(u, v, cov.matchings.get((u, v), ())) for u, v in g.edges()]
        if permute_seed is not None:
            rng = substream(permute_seed, TAG_PERMUTE)
            rng.shuffle(recs)
        return cls(g.n, tuple(recs), lists=cov.lists)

    def save(self, path) -> None:
        """One record per line: 'u v', with matching pairs appended as
        'u v p c c_prime ...' in the cover case. Header: 'n r [lists]'."""
        with open(path, "w") as fh:
            fh.write(f"{self.n} {len(self.records)} {int(self.lists is not None)}\n")
            if self.lists is not None:
                for row in self.lists:
                    fh.write(" ".join(str(c) for c in row) + "\n")
            for rec in self.records:
                if len(rec) == 2:
                    fh.write(f"{rec[0]} {rec[1]}\n")
                else:
                    u, v, pairs = rec
                    flat = " ".join(f"{a} {b}" for a, b in pairs)
                    fh.write(f"{u} {v} {len(pairs)}" + (f" {flat}" if flat else "") + "\n")

    @classmethod
    def load(cls, path) -> "EdgeStream":
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 3:
                raise ValueError("expected stream header 'n records has_lists'")
            n, r, has_lists = int(header[0]), int(header[1]), int(header[2])
            lists = None
            if has_lists:
                lists = tuple(
                    tuple(int(x) for x in fh.readline().split()) for _ in range(n)
                )
            records = []
            for line in fh:
                parts = [int(x) for x in line.split()]
                if len(parts) < 2:
                    raise ValueError(f"bad stream record: {line!r}")
                if len(parts) == 2:
                    records.append((parts[0], parts[1]))
                else:
                    p = parts[2]
                    if len(parts) != 3 + 2 * p:
                        raise ValueError(f"bad stream record: {line!r}")
                    pairs = tuple(
                        (parts[3 + 2 * i], parts[4 + 2 * i]) for i in range(p)
                    )
                    records.append((parts[0], parts[1], pairs))
        if len(records) != r:
            raise ValueError(f"header claims {r} records, file has {len(records)}")
        return cls(n, tuple(records), lists=lists)


@dataclass
class StreamResult:
    coloring: PartialColoring | None
    ledger: SpaceLedger
    family: PaletteFamily
    stored: tuple
    solve_result: SolveResult | None
    error: str = ""

    @property
    def success(self) -> bool:
        return self.coloring is not None


def stream_color(stream: EdgeStream, n: int, params: SparsifyParams, seed: int,
                 *, space_cap: int | None = None, policy: str = "auto",
                 delta_from_stream: bool = False) -> StreamResult:
    """One pass over a plain edge stream; q-coloring from sampled palettes.

    Stores an edge iff the endpoint samples intersect; counts, per sampled
    (v, c), the neighbors whose sample also holds c; prunes after the
    stream at (1+gamma')*s*delta/q; solves the retained instance. With
    `delta_from_stream` the pruning threshold is recomputed from the
    observed max degree instead of the a-priori delta (costs n extra
    counter words).
    """
    q, s = params.q, params.s
    fam = sample_palettes(SharedPalette(n, q), s, seed)
    ledger = SpaceLedger(palette_words=n * s, counter_words=n * s)
    if delta_from_stream:
        ledger.counter_words += n
    ledger.bump(space_cap)

    samp = np.array(fam.sampled, dtype=np.int64)
    masks = [0] * n
    for v, row in enumerate(fam.sampled):
        acc = 0
        for c in row:
            acc |= 1 << c
        masks[v] = acc
    # with full palettes the per-(v, c) counter is just the degree of v
    whole_palette = s == q
    counts = None if whole_palette else np.zeros(n * q, dtype=np.int64)
    degrees = np.zeros(n, dtype=np.int64) if (delta_from_stream or whole_palette) else None

    stored: list[tuple[int, int]] = []
    buf_u: list[int] = []
    buf_v: list[int] = []
    flush_every = max(1, 2_000_000 // max(1, s))

    def flush():
        nonlocal counts
        if buf_u:
            bu = np.array(buf_u, dtype=np.int64)
            bv = np.array(buf_v, dtype=np.int64)
            keys_u = (bu[:, None] * q + samp[bv]).ravel()
            keys_v = (bv[:, None] * q + samp[bu]).ravel()
            counts += np.bincount(keys_u, minlength=n * q)
            counts += np.bincount(keys_v, minlength=n * q)
            buf_u.clear()
            buf_v.clear()

    for rec in stream.records:
        u, v = rec[0], rec[1]
        if degrees is not None:
            degrees[u] += 1
            degrees[v] += 1
        if masks[u] & masks[v]:
            stored.append((u, v) if u < v else (v, u))
            ledger.stored_edges += 1
            ledger.bump(space_cap)
            if not whole_palette:
                buf_u.append(u)
                buf_v.append(v)
                if len(buf_u) >= flush_every:
                    flush()
    if whole_palette:
        counts = np.broadcast_to(degrees[:, None], (n, q))
    else:
        flush()
        counts = counts.reshape(n, q)

    thr = params.prune_threshold
    if delta_from_stream:
        observed = int(degrees.max()) if n else 0
        thr = (1.0 + params.gamma_prime) * s * observed / q
    pruned = tuple(
        tuple(c for c in row if counts[v, c] <= thr)
        for v, row in enumerate(fam.sampled)
    )
    fam = PaletteFamily(fam.sampled, pruned, fam.universe)

    keep_masks = [0] * n
    for v, row in enumerate(pruned):
        acc = 0
        for c in row:
            acc |= 1 << c
        keep_masks[v] = acc
    conflict = [(u, v) for u, v in stored if keep_masks[u] & keep_masks[v]]
    sub = Graph(n, conflict)
    lists = ListAssignment(pruned)
    if any(len(row) == 0 for row in pruned):
        return StreamResult(None, ledger, fam, tuple(stored), None,
                            error="a vertex lost every sampled color in pruning")
    res = solve(sub, lists, policy=policy, seed=seed)
    return StreamResult(res.coloring, ledger, fam, tuple(stored), res,
                        error="" if res.success else "solver failed")


def stream_color_correspondence(stream: EdgeStream, n: int,
                                params: SparsifyParams, seed: int,
                                *, space_cap: int | None = None,
                                policy: str = "auto") -> StreamResult:
    """Correspondence variant: records carry matchings, retention keeps the
    pairs restricted to the samples, and pruning uses per-color degrees of
    the sampled cover subgraph."""
    if stream.lists is None:
        raise ValueError("correspondence streaming needs the stream's cover lists")
    s = params.s
    fam = sample_palettes(stream.lists, s, seed)
    ledger = SpaceLedger(palette_words=n * s, counter_words=n * s)
    ledger.bump(space_cap)

    sets = [frozenset(row) for row in fam.sampled]
    counts: dict[int, int] = {}
    stored: list[tuple[int, int, tuple]] = []
    for u, v, pairs in stream.records:
        kept = tuple(
            (a, b) for a, b in pairs if a in sets[u] and b in sets[v]
        )
        if kept:
            e = (u, v) if u < v else (v, u)
            kept_o = kept if u < v else tuple((b, a) for a, b in kept)
            stored.append((e[0], e[1], kept_o))
            ledger.stored_edges += 1
            ledger.matching_words += 2 * len(kept)
            ledger.bump(space_cap)
            for a, b in kept:
                counts[a] = counts.get(a, 0) + 1
                counts[b] = counts.get(b, 0) + 1

    thr = params.prune_threshold
    pruned = tuple(
        tuple(c for c in row if counts.get(c, 0) <= thr)
        for row in fam.sampled
    )
    fam = PaletteFamily(fam.sampled, pruned, fam.universe)
    keep = [frozenset(row) for row in pruned]
    matchings = {}
    conflict = []
    for u, v, pairs in stored:
        kept = tuple((a, b) for a, b in pairs if a in keep[u] and b in keep[v])
        if kept:
            conflict.append((u, v))
            matchings[(u, v)] = kept
    sub = Graph(n, conflict)
    cov = CorrespondenceCover(pruned, matchings)
    if any(len(row) == 0 for row in pruned):
        return StreamResult(None, ledger, fam, tuple(stored), None,
                            error="a vertex lost every sampled color in pruning")
    res = solve(sub, cov, policy=policy, seed=seed)
    return StreamResult(res.coloring, ledger, fam, tuple(stored), res,
                        error="" if res.success else "solver failed")
