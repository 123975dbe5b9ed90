"""Palette sampling, high-conflict color pruning, and conflict instances.

The pipeline implemented here: derive the palette size q and per-vertex
sample size s from (delta, n, k, alpha, gamma, epsilon); sample each vertex
an s-subset of its palette; drop colors whose conflict count crosses the
pruning threshold (1 + gamma')*s*delta_ref/q; and keep only the edges that
can still be monochromatic. Any proper coloring of the resulting conflict
instance that picks colors from the pruned palettes is a proper coloring of
the original instance, which is the whole point of the reduction.

All logarithms are natural. Thresholds are compared with <= against the
real-valued bound ("at most"), never rounded.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._rng import TAG_PALETTE, substream
from .cover import CorrespondenceCover, ListAssignment
from .graphcore import Graph

__all__ = [
    "InvalidParameters",
    "PaletteTooSmall",
    "SparsifyParams",
    "PaletteFamily",
    "ConflictInstance",
    "derive_params",
    "sample_palettes",
    "prune",
    "build_conflict",
    "packed_masks",
]


class InvalidParameters(ValueError):
    pass


class PaletteTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class SparsifyParams:
    """Derived sampling parameters.

    gamma_prime = epsilon^2 / (3*(1+gamma)) is the pruning slack and
    big_c = 3*gamma_prime^(-3/2) the constant in the sample-size lower bound
    s >= delta^alpha + big_c*sqrt(ln n). When the bound meets or exceeds q
    the instance is flagged degenerate and the whole palette is sampled.
    """

    q: int
    s: int
    alpha: float
    gamma: float
    epsilon: float
    gamma_prime: float
    big_c: float
    prune_threshold: float
    delta_ref: int
    degenerate: bool

    def with_overrides(self, q: int | None = None, s: int | None = None,
                       delta_ref: int | None = None) -> "SparsifyParams":
        """Replace q/s/delta_ref and recompute the threshold and the flag."""
        q2 = self.q if q is None else q
        d2 = self.delta_ref if delta_ref is None else delta_ref
        s2 = self.s if s is None else s
        s2 = min(s2, q2)
        return replace(
            self,
            q=q2,
            s=s2,
            delta_ref=d2,
            degenerate=s2 >= q2,
            prune_threshold=(1.0 + self.gamma_prime) * s2 * d2 / q2,
        )


def derive_params(delta: int, n: int, k: int, alpha: float, gamma: float,
                  epsilon: float) -> SparsifyParams:
    """Compute q = ceil(4(1+gamma+epsilon)*delta / ln(delta^alpha / sqrt(k)))
    and s = ceil(delta^alpha + big_c*sqrt(ln n)), capped at q.

    Requires delta^alpha > sqrt(k) so the logarithm is positive. Warns (but
    does not reject) when k falls outside [1, delta^(2*alpha*gamma)].
    """
    if delta < 1 or n < 1:
        raise InvalidParameters(f"need delta >= 1 and n >= 1, got delta={delta}, n={n}")
    if k < 1:
        raise InvalidParameters(f"need k >= 1 (use k=1 for triangle-free audits), got {k}")
    if not (0.0 < alpha < 1.0) or not (0.0 < gamma < 1.0) or epsilon <= 0.0:
        raise InvalidParameters(
            f"need alpha,gamma in (0,1) and epsilon > 0, got {alpha}, {gamma}, {epsilon}"
        )
    ratio = delta ** alpha / math.sqrt(k)
    if ratio <= 1.0:
        raise InvalidParameters(
            f"delta^alpha = {delta ** alpha:.6g} must exceed sqrt(k) = {math.sqrt(k):.6g}"
        )
    if k > delta ** (2.0 * alpha * gamma):
        warnings.warn(
            f"k={k} above delta^(2*alpha*gamma)={delta ** (2 * alpha * gamma):.4g}; "
            "outside the supported sparsity range",
            stacklevel=2,
        )
    gamma_prime = epsilon ** 2 / (3.0 * (1.0 + gamma))
    big_c = 3.0 * gamma_prime ** -1.5
    q = math.ceil(4.0 * (1.0 + gamma + epsilon) * delta / math.log(ratio))
    s_raw = delta ** alpha + big_c * math.sqrt(math.log(n)) if n > 1 else delta ** alpha
    s = math.ceil(s_raw)
    degenerate = s >= q
    s = min(s, q)
    return SparsifyParams(
        q=q,
        s=s,
        alpha=alpha,
        gamma=gamma,
        epsilon=epsilon,
        gamma_prime=gamma_prime,
        big_c=big_c,
        prune_threshold=(1.0 + gamma_prime) * s * delta / q,
        delta_ref=delta,
        degenerate=degenerate,
    )


def manual_params(delta: int, gamma: float, epsilon: float, q: int,
                  s: int) -> SparsifyParams:
    """Params with q and s fixed by the caller instead of the closed form.

    The slack constants still come from (gamma, epsilon); use this for
    regimes like (Delta+1, Theta(log n)) where the palette is prescribed.
    """
    if q < 1 or s < 1:
        raise InvalidParameters(f"need q >= 1 and s >= 1, got q={q}, s={s}")
    if not (0.0 < gamma < 1.0) or epsilon <= 0.0:
        raise InvalidParameters(f"need gamma in (0,1) and epsilon > 0, got {gamma}, {epsilon}")
    gamma_prime = epsilon ** 2 / (3.0 * (1.0 + gamma))
    s = min(s, q)
    return SparsifyParams(
        q=q,
        s=s,
        alpha=0.5,
        gamma=gamma,
        epsilon=epsilon,
        gamma_prime=gamma_prime,
        big_c=3.0 * gamma_prime ** -1.5,
        prune_threshold=(1.0 + gamma_prime) * s * delta / q,
        delta_ref=delta,
        degenerate=s >= q,
    )


@dataclass(frozen=True)
class SharedPalette:
    """Marker for 'every one of n vertices samples from 0..q-1'."""

    n: int
    q: int


@dataclass(frozen=True)
class PaletteFamily:
    """Sampled per-vertex palettes S(v) and, after pruning, S'(v) <= S(v).

    `universe` is q when every vertex sampled from the shared palette
    0..q-1, which unlocks the vectorized code paths; None for per-vertex
    lists or cover colors.
    """

    sampled: tuple[tuple[int, ...], ...]
    pruned: tuple[tuple[int, ...], ...] | None = None
    universe: int | None = None

    @property
    def n(self) -> int:
        return len(self.sampled)

    def active(self) -> tuple[tuple[int, ...], ...]:
        return self.sampled if self.pruned is None else self.pruned


def sample_palettes(palettes, s: int, seed: int) -> PaletteFamily:
    """Draw a uniform s-subset of each vertex's palette, independently.

    `palettes` is a SharedPalette (every vertex draws from 0..q-1) or a
    per-vertex sequence of color sets. Draw order: one stream, vertices
    ascending, each palette consumed in sorted order, so the result is a
    deterministic function of (palettes, s, seed). `s` must be at least 1
    and no palette may be smaller than s.
    """
    if s < 1:
        raise PaletteTooSmall(f"sample size must be >= 1, got {s}")
    rng = substream(seed, TAG_PALETTE)
    if isinstance(palettes, SharedPalette):
        n, q = palettes.n, palettes.q
        if q < s:
            raise PaletteTooSmall(f"palette has {q} colors, need {s}")
        sampled = []
        full = tuple(range(q))
        for _ in range(n):
            if s == q:
                sampled.append(full)
            else:
                idx = rng.choice(q, size=s, replace=False)
                idx.sort()
                sampled.append(tuple(idx.tolist()))
        return PaletteFamily(tuple(sampled), universe=q)
    sampled = []
    for v, pal in enumerate(palettes):
        pal = sorted(pal)
        if len(pal) < s:
            raise PaletteTooSmall(f"palette of vertex {v} has {len(pal)} colors, need {s}")
        if len(pal) == s:
            pick = tuple(pal)
        else:
            idx = rng.choice(len(pal), size=s, replace=False)
            idx.sort()
            pick = tuple(pal[i] for i in idx.tolist())
        sampled.append(pick)
    return PaletteFamily(tuple(sampled))


def packed_masks(lists, q: int) -> np.ndarray:
    """Per-vertex color sets over universe 0..q-1 as packed uint64 rows."""
    words = max(1, (q + 63) // 64)
    out = np.zeros((len(lists), words), dtype=np.uint64)
    one = np.uint64(1)
    for v, row in enumerate(lists):
        for c in row:
            out[v, c >> 6] |= one << np.uint64(c & 63)
    return out


def _plain_conflict_counts(g: Graph, fam: PaletteFamily) -> np.ndarray:
    """counts[v, c] = number of neighbors u of v with c in S(u), for the
    shared-palette case. Accumulated as bincounts over (vertex, color) keys,
    which beats scattered adds when samples are much smaller than q."""
    q = fam.universe
    n = g.n
    sizes = {len(row) for row in fam.sampled}
    if g.m and len(sizes) == 1:
        samp = np.array(fam.sampled, dtype=np.int64)
        counts = np.zeros(n * q, dtype=np.int64)
        us, vs = g.edge_arrays()
        chunk = max(1, 4_000_000 // max(1, samp.shape[1]))
        for lo in range(0, g.m, chunk):
            cu = us[lo : lo + chunk]
            cv = vs[lo : lo + chunk]
            keys_u = (cu[:, None] * q + samp[cv]).ravel()
            keys_v = (cv[:, None] * q + samp[cu]).ravel()
            counts += np.bincount(keys_u, minlength=n * q)
            counts += np.bincount(keys_v, minlength=n * q)
        return counts.reshape(n, q).astype(np.int32)
    member = np.zeros((n, q), dtype=np.int16)
    for v, row in enumerate(fam.sampled):
        member[v, list(row)] = 1
    counts = np.zeros((n, q), dtype=np.int32)
    if g.m:
        us, vs = g.edge_arrays()
        np.add.at(counts, us, member[vs])
        np.add.at(counts, vs, member[us])
    return counts


def prune(subject, fam: PaletteFamily, params: SparsifyParams,
          *, delta_ref: int | None = None) -> PaletteFamily:
    """Drop every sampled color whose conflict count exceeds the threshold.

    For a Graph subject the conflict count of c at v is the number of
    neighbors whose sample also contains c, and the threshold reference
    degree is the graph's a-priori delta. For a CorrespondenceCover subject
    the count is the number of sampled colors corresponding to c, and the
    reference degree defaults to the cover's measured max color degree.
    Keeps a color exactly when its count is <= the real-valued threshold.
    """
    if isinstance(subject, Graph):
        thr = params.prune_threshold
        if delta_ref is not None:
            thr = (1.0 + params.gamma_prime) * params.s * delta_ref / params.q
        if fam.universe is not None:
            counts = _plain_conflict_counts(subject, fam)
            pruned = tuple(
                tuple(c for c in row if counts[v, c] <= thr)
                for v, row in enumerate(fam.sampled)
            )
        else:
            member = [frozenset(row) for row in fam.sampled]
            pruned = tuple(
                tuple(
                    c
                    for c in row
                    if sum(1 for u in subject.neighbors(v) if c in member[u]) <= thr
                )
                for v, row in enumerate(fam.sampled)
            )
        return PaletteFamily(fam.sampled, pruned, fam.universe)
    if isinstance(subject, CorrespondenceCover):
        d_h = delta_ref if delta_ref is not None else subject.max_color_degree()
        thr = (1.0 + params.gamma_prime) * params.s * d_h / params.q
        picked: set[int] = set()
        for row in fam.sampled:
            picked.update(row)
        nbrs = subject.color_neighbors
        pruned = tuple(
            tuple(
                c
                for c in row
                if sum(1 for c2 in nbrs.get(c, ()) if c2 in picked) <= thr
            )
            for row in fam.sampled
        )
        return PaletteFamily(fam.sampled, pruned, fam.universe)
    raise TypeError(f"expected Graph or CorrespondenceCover, got {type(subject)!r}")


@dataclass(frozen=True)
class ConflictInstance:
    """The edges that can still be monochromatic, plus restricted palettes.

    Any proper coloring of this instance choosing colors from its lists (or
    cover) is a proper coloring of the original graph (or cover): absent
    edges cannot clash because their endpoint palettes cannot collide.
    """

    graph: Graph
    lists: ListAssignment | None = None
    cover: CorrespondenceCover | None = None

    @property
    def kind(self) -> str:
        return "cover" if self.cover is not None else "list"


def build_conflict(g: Graph, fam: PaletteFamily,
                   cover: CorrespondenceCover | None = None) -> ConflictInstance:
    """Keep exactly the edges whose endpoint palettes can collide.

    Plain/list case: edge uv survives iff the active palettes share a color.
    Cover case: edge uv survives iff its matching restricted to the active
    palettes is nonempty; the restricted cover rides along.
    """
    active = fam.active()
    if cover is None:
        conflict = []
        if fam.universe is not None and g.m > 4096:
            masks = packed_masks(active, fam.universe)
            us, vs = g.edge_arrays()
            hit = (masks[us] & masks[vs]).any(axis=1)
            conflict = [(int(u), int(v)) for u, v in zip(us[hit], vs[hit])]
        else:
            sets = [frozenset(row) for row in active]
            for u, v in g.edges():
                if sets[u] & sets[v]:
                    conflict.append((u, v))
        return ConflictInstance(Graph(g.n, conflict), lists=ListAssignment(active))
    keep_sets = [frozenset(row) for row in active]
    conflict = []
    matchings = {}
    for (u, v), pairs in cover.matchings.items():
        kept = tuple(
            (a, b) for a, b in pairs if a in keep_sets[u] and b in keep_sets[v]
        )
        if kept:
            conflict.append((u, v))
            matchings[(u, v)] = kept
    sub = CorrespondenceCover(active, matchings, source_color=cover.source_color)
    return ConflictInstance(Graph(g.n, conflict), cover=sub)
