"""The list/correspondence coloring solver.

The workhorse is a semi-random nibble: each round activates every cover
color independently at rate eta/ell, equalizes every color's survival
probability to exactly keep = (1 - eta/ell)^(2d) with a per-color coin
flip, colors each vertex holding an activated surviving color, and trims
surviving colors whose degree into the still-uncolored part is too large.
A derived parameter schedule says how many rounds shrink the
degree-to-list-size ratio enough that a resampling finisher (assign colors
uniformly, resample the endpoints of violated constraints until none
remain) is guaranteed to complete the coloring.

At small scale the schedule's hypotheses rarely hold, so `solve` wraps the
nibble in a fallback chain: greedy first, then the nibble when admissible,
then the resampling finisher directly, then bounded backtracking. Every
returned coloring is verified internally; an improper coloring is never
returned.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import TAG_LLL, TAG_SOLVE, TAG_WCP, substream
from .cover import (
    CorrespondenceCover,
    ListAssignment,
    c_degrees,
    cover_from_lists,
    cover_sparsity,
)
from .graphcore import Graph

__all__ = [
    "PartialColoring",
    "VerifyResult",
    "verify_coloring",
    "WcpParams",
    "RoundStats",
    "wcp_round",
    "PreconditionViolation",
    "ParamSchedule",
    "ScheduleError",
    "build_schedule",
    "LllResult",
    "BudgetExceeded",
    "finish_lll",
    "brute_force",
    "InstanceTooLarge",
    "greedy_color",
    "StageRecord",
    "SolveResult",
    "solve",
]


class PreconditionViolation(RuntimeError):
    pass


class BudgetExceeded(RuntimeError):
    pass


class InstanceTooLarge(ValueError):
    pass


class ScheduleError(ValueError):
    pass


@dataclass
class PartialColoring:
    """Vertex -> color map; vertices absent from the map are blank."""

    assignment: dict[int, int] = field(default_factory=dict)

    @property
    def domain(self) -> set[int]:
        return set(self.assignment)

    def get(self, v: int):
        return self.assignment.get(v)

    def is_total(self, n: int) -> bool:
        return len(self.assignment) == n

    def __len__(self) -> int:
        return len(self.assignment)


# ---------------------------------------------------------------------------
# unified instance view (list assignment or correspondence cover)


class _Instance:
    """Solver-side view: per-vertex lists plus an edge conflict relation.

    List mode: colors clash across an edge iff they are equal.
    Cover mode: colors clash iff the edge's matching pairs them.
    """

    def __init__(self, g: Graph, obj):
        self.g = g
        if isinstance(obj, ListAssignment):
            if obj.n != g.n:
                raise ValueError("list assignment size does not match graph")
            self.lists = obj.lists
            self.cover = None
            self._fwd = None
        elif isinstance(obj, CorrespondenceCover):
            if obj.n != g.n:
                raise ValueError("cover size does not match graph")
            self.lists = obj.lists
            self.cover = obj
            fwd: dict[tuple[int, int], dict[int, int]] = {}
            rev: dict[tuple[int, int], dict[int, int]] = {}
            for (u, v), pairs in obj.matchings.items():
                fwd[(u, v)] = {a: b for a, b in pairs}
                rev[(u, v)] = {b: a for a, b in pairs}
            self._fwd = fwd
            self._rev = rev
        else:
            raise TypeError(f"expected ListAssignment or CorrespondenceCover, got {type(obj)!r}")
        self.list_sets = [frozenset(row) for row in self.lists]

    @property
    def is_cover(self) -> bool:
        return self.cover is not None

    def partner(self, u: int, v: int, cu: int):
        """Color of v that clashes with color cu at u across edge uv, or None."""
        if self.cover is None:
            return cu if cu in self.list_sets[v] else None
        if u < v:
            return self._fwd.get((u, v), {}).get(cu)
        return self._rev.get((v, u), {}).get(cu)

    def conflicts(self, u: int, v: int, cu: int, cv: int) -> bool:
        if self.cover is None:
            return cu == cv
        return self.partner(u, v, cu) == cv

    def max_color_degree(self) -> int:
        if self.cover is not None:
            return self.cover.max_color_degree()
        return c_degrees(self.g, ListAssignment(self.lists)).max_c_degree

    def max_cdeg_per_vertex(self) -> list[int]:
        if self.cover is not None:
            nbrs = self.cover.color_neighbors
            return [
                max((len(nbrs.get(c, ())) for c in row), default=0)
                for row in self.lists
            ]
        table = c_degrees(self.g, ListAssignment(self.lists)).by_vertex
        return [max(row.values(), default=0) for row in table]


def _as_instance(g: Graph, obj) -> _Instance:
    return obj if isinstance(obj, _Instance) else _Instance(g, obj)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    witness: tuple | None = None
    reason: str = ""


def verify_coloring(g: Graph, obj, phi: PartialColoring) -> VerifyResult:
    """Check list membership and non-conflict across every edge.

    Blank vertices are fine (a partial coloring verifies vacuously on its
    blank part). Runs in O(n + m).
    """
    inst = _as_instance(g, obj)
    for v, c in phi.assignment.items():
        if not (0 <= v < g.n):
            return VerifyResult(False, (v,), f"vertex {v} out of range")
        if c not in inst.list_sets[v]:
            return VerifyResult(False, (v, c), f"color {c} not in the list of vertex {v}")
    if not inst.is_cover and g.m > 4096:
        assigned = np.full(g.n, -1, dtype=np.int64)
        for v, c in phi.assignment.items():
            assigned[v] = c
        us, vs = g.edge_arrays()
        bad = (assigned[us] >= 0) & (assigned[us] == assigned[vs])
        idx = np.flatnonzero(bad)
        if idx.size:
            i = int(idx[0])
            u, v = int(us[i]), int(vs[i])
            return VerifyResult(False, (u, v), f"edge ({u}, {v}) is monochromatic")
        return VerifyResult(True)
    get = phi.assignment.get
    for u, v in g.edges():
        cu = get(u)
        if cu is None:
            continue
        cv = get(v)
        if cv is None:
            continue
        if inst.conflicts(u, v, cu, cv):
            return VerifyResult(False, (u, v), f"edge ({u}, {v}) carries corresponding colors")
    return VerifyResult(True)


# ---------------------------------------------------------------------------
# one nibble round


@dataclass(frozen=True)
class WcpParams:
    """Per-round quantities: activation rate eta, list scale ell, degree
    scale d, the derived keep/uncolor probabilities, and next-round scales."""

    eta: float
    ell: float
    d: float
    beta: float
    keep: float
    uncolor: float
    ell_next: float
    d_next: float
    beta_next: float

    @classmethod
    def from_basics(cls, eta: float, ell: float, d: float, beta: float = 0.0) -> "WcpParams":
        if ell <= 0 or d < 0 or not (0.0 <= eta < ell):
            raise ValueError(f"need ell > 0 and 0 <= eta < ell, got eta={eta}, ell={ell}")
        # keep = (1 - eta/ell)^(2d) via exp/log1p; 2d can be large
        lp = math.log1p(-eta / ell)
        keep = math.exp(2.0 * d * lp)
        uncolor = math.exp(keep * ell / 2.0 * lp)
        return cls(
            eta=eta,
            ell=ell,
            d=d,
            beta=beta,
            keep=keep,
            uncolor=uncolor,
            ell_next=keep * ell,
            d_next=keep * uncolor * d,
            beta_next=(1.0 + 36.0 * eta) * beta,
        )


@dataclass(frozen=True)
class RoundStats:
    activated: int
    kept: int
    colored: int
    kept_ids: tuple[int, ...] = ()
    activated_ids: tuple[int, ...] = ()


def wcp_round(g: Graph, cov: CorrespondenceCover, p: WcpParams, seed: int):
    """Run one nibble round and return (coloring, next lists, stats).

    Steps: (1) activate each cover color independently with probability
    eta/ell; (2) give each color an equalizing coin flip with probability
    keep / (1 - eta/ell)^deg(c), so survival probability is exactly keep;
    (3) keep colors that survive their flip and have no activated
    correspondent; (4) color each vertex with its smallest activated kept
    color, if any; (5) collect the colors of blank vertices; (6) next lists
    are the kept colors with at most 2*d_next kept-and-blank correspondents.

    Requires every color degree <= 2*d (else the equalizer probability
    leaves [0, 1]).
    """
    colors = sorted(cov.owner)
    pos = {c: i for i, c in enumerate(colors)}
    N = len(colors)
    owner = np.array([cov.owner[c] for c in colors], dtype=np.int64) if N else np.zeros(0, np.int64)
    nbrs = cov.color_neighbors
    deg = np.array([len(nbrs.get(c, ())) for c in colors], dtype=np.int64) if N else np.zeros(0, np.int64)
    if N and deg.max() > 2.0 * p.d:
        c_bad = colors[int(deg.argmax())]
        raise PreconditionViolation(
            f"color {c_bad} has degree {int(deg.max())} > 2*d = {2.0 * p.d}"
        )
    hu = []
    hv = []
    for pairs in cov.matchings.values():
        for a, b in pairs:
            hu.append(pos[a])
            hv.append(pos[b])
    hu = np.array(hu, dtype=np.int64)
    hv = np.array(hv, dtype=np.int64)

    rng = substream(seed, TAG_WCP)
    # draw order: activations then equalizers, both over colors ascending by id
    act = rng.random(N) < (p.eta / p.ell)
    lp = math.log1p(-p.eta / p.ell) if p.eta > 0 else 0.0
    eq_prob = np.exp((2.0 * p.d - deg) * lp) if p.eta > 0 else np.ones(N)
    eq = rng.random(N) < eq_prob

    act_nbr = np.zeros(N, dtype=bool)
    if hu.size:
        np.logical_or.at(act_nbr, hu, act[hv])
        np.logical_or.at(act_nbr, hv, act[hu])
    kept = eq & ~act_nbr

    phi = PartialColoring()
    for v, row in enumerate(cov.lists):
        for c in row:
            i = pos[c]
            if act[i] and kept[i]:
                phi.assignment[v] = c  # smallest, lists are sorted
                break

    blank = np.ones(g.n, dtype=bool)
    for v in phi.assignment:
        blank[v] = False
    in_u = blank[owner] if N else np.zeros(0, bool)

    ku = kept & in_u
    cnt = np.zeros(N, dtype=np.int64)
    if hu.size:
        np.add.at(cnt, hu, ku[hv])
        np.add.at(cnt, hv, ku[hu])
    bound = 2.0 * p.d_next
    next_lists = tuple(
        tuple(c for c in row if kept[pos[c]] and cnt[pos[c]] <= bound)
        for row in cov.lists
    )

    # two corresponding colors cannot both be kept, so the round is proper
    for (u, v), pairs in cov.matchings.items():
        cu = phi.assignment.get(u)
        if cu is None:
            continue
        cv = phi.assignment.get(v)
        if cv is None:
            continue
        assert (cu, cv) not in cov.pair_sets[(u, v)], "nibble round produced a clash"

    stats = RoundStats(
        int(act.sum()), int(kept.sum()), len(phi.assignment),
        tuple(colors[i] for i in np.flatnonzero(kept)),
        tuple(colors[i] for i in np.flatnonzero(act)),
    )
    return phi, next_lists, stats


# ---------------------------------------------------------------------------
# the parameter schedule


@dataclass(frozen=True)
class ParamSchedule:
    """Round-by-round (ell_i, d_i, beta_i, keep_i, uncolor_i) sequences.

    i_star is the first index where d_i <= ell_i / ratio_stop (None when the
    iteration cap was exhausted first, which is the expected outcome at
    small d). `relations` reports which of the three structural relations
    hold numerically: ratio monotone from round 1 (R1), the list lower
    bound (R2), and termination within the cap (R3).
    """

    d: float
    k: float
    gamma: float
    epsilon: float
    gamma_prime: float
    big_c: float
    mu: float
    eta: float
    ell: np.ndarray
    dd: np.ndarray
    keep: np.ndarray
    uncolor: np.ndarray
    beta: np.ndarray
    i_star: int | None
    i_star_bound: int
    relations: dict[str, bool]

    @property
    def terminated(self) -> bool:
        return self.i_star is not None

    def round_params(self, i: int) -> WcpParams:
        return WcpParams.from_basics(self.eta, float(self.ell[i]), float(self.dd[i]),
                                     float(self.beta[i]))


def recursion_margin(gamma: float, epsilon: float) -> float:
    """Exponent margin gamma*(1+gamma-7*epsilon/32)/(2*gamma-epsilon/4) of
    the schedule; lies strictly between gamma and 1 for small epsilon, and
    the schedule is rejected outside that range."""
    denom = 2.0 * gamma - epsilon / 4.0
    if denom <= 0:
        raise ScheduleError(f"epsilon={epsilon} too large for gamma={gamma}")
    gamma_prime = gamma * (1.0 + gamma - 7.0 * epsilon / 32.0) / denom
    if not (gamma < gamma_prime < 1.0):
        raise ScheduleError(
            f"derived exponent margin {gamma_prime:.6g} outside ({gamma}, 1); shrink epsilon"
        )
    return gamma_prime


def build_schedule(d: float, k: float, gamma: float, epsilon: float,
                   *, ratio_stop: float = 100.0) -> ParamSchedule:
    """Iterate the nibble recursion until d_i <= ell_i/ratio_stop.

    Starts from ell_0 = big_c*d/ln(d/sqrt(k)) with big_c = 4*(1+gamma),
    activation eta = mu/ln(d/sqrt(k)) where
    mu = ((big_c-epsilon)/2)*ln(1+epsilon/(8*big_c)), and the recursion
    ell' = keep*ell, d' = keep*uncolor*d, beta' = max((1+36*eta)*beta,
    d'^(-x)) with x = gamma_prime*(1-sqrt(gamma_prime))/200. Gives up (with
    i_star = None, not an exception) when the iteration cap
    ceil((16/mu)*L*ln(L)) for L = ln(d/sqrt(k)) is exhausted first.
    """
    if d < 2:
        raise ScheduleError(f"need d >= 2, got {d}")
    if k < 1:
        raise ScheduleError(f"need k >= 1, got {k}")
    if d <= math.sqrt(k):
        raise ScheduleError(f"need d > sqrt(k), got d={d}, k={k}")
    gamma_prime = recursion_margin(gamma, epsilon)
    big_c = 4.0 * (1.0 + gamma)
    mu = (big_c - epsilon) / 2.0 * math.log1p(epsilon / (8.0 * big_c))
    bigL = math.log(d / math.sqrt(k))
    eta = mu / bigL
    x = gamma_prime * (1.0 - math.sqrt(gamma_prime)) / 200.0
    i_star_bound = math.ceil(16.0 / mu * bigL * math.log(bigL)) if bigL > 1.0 else 0

    ell = [big_c * d / bigL]
    dd = [float(d)]
    keep = []
    uncolor = []
    beta = [dd[0] ** (-x)]
    i_star = None
    for i in range(i_star_bound + 1):
        if dd[i] <= ell[i] / ratio_stop:
            i_star = i
            break
        if i == i_star_bound:
            break
        p = WcpParams.from_basics(eta, ell[i], dd[i])
        keep.append(p.keep)
        uncolor.append(p.uncolor)
        ell.append(p.ell_next)
        dd.append(p.d_next)
        beta.append(max((1.0 + 36.0 * eta) * beta[i], dd[i + 1] ** (-x)))

    ell_a = np.array(ell)
    dd_a = np.array(dd)
    ratios = dd_a / ell_a
    tol = 1e-12
    r1 = bool(len(ratios) < 2 or (
        np.all(ratios[1:] <= ratios[1] * (1 + tol))
        and ratios[1] <= bigL / big_c * (1 + tol)
    ))
    lower = d * (d / math.sqrt(k)) ** (-4.0 / (big_c - 7.0 * epsilon / 8.0))
    r2 = bool(np.all(ell_a >= lower * (1 - tol)))
    r3 = i_star is not None
    return ParamSchedule(
        d=float(d), k=float(k), gamma=gamma, epsilon=epsilon,
        gamma_prime=gamma_prime, big_c=big_c, mu=mu, eta=eta,
        ell=ell_a, dd=dd_a,
        keep=np.array(keep), uncolor=np.array(uncolor), beta=np.array(beta),
        i_star=i_star, i_star_bound=i_star_bound,
        relations={"R1": r1, "R2": r2, "R3": r3},
    )


# ---------------------------------------------------------------------------
# resampling finisher


@dataclass(frozen=True)
class LllResult:
    coloring: PartialColoring
    resamples: int


def finish_lll(g: Graph, obj, seed: int, *, threshold: float = 8.0,
               budget: int = 10 ** 6) -> LllResult:
    """Complete a coloring by resampling violated constraints.

    Requires lists at least `threshold` times larger than the maximum color
    degree (default 8; 2 is known to suffice and is exposed as a knob).
    Assigns every vertex an independent uniform color from its list, then
    repeatedly resamples both endpoints of the lowest-indexed violated edge.
    Under the precondition the expected number of resamples is finite;
    exceeding `budget` raises BudgetExceeded and indicates a caller bug.
    """
    inst = _as_instance(g, obj)
    sizes = [len(row) for row in inst.lists]
    if g.n and min(sizes) == 0:
        raise PreconditionViolation("some vertex has an empty list")
    ell = min(sizes) if g.n else 0
    dmax = inst.max_color_degree()
    if g.n and dmax > ell / threshold:
        raise PreconditionViolation(
            f"max color degree {dmax} exceeds min list size {ell} / {threshold}"
        )
    rng = substream(seed, TAG_LLL)
    phi = {v: inst.lists[v][int(rng.integers(sizes[v]))] for v in range(g.n)}

    edges = list(g.edges())
    incident: list[list[int]] = [[] for _ in range(g.n)]
    for i, (u, v) in enumerate(edges):
        incident[u].append(i)
        incident[v].append(i)

    def violated(i: int) -> bool:
        u, v = edges[i]
        return inst.conflicts(u, v, phi[u], phi[v])

    heap = [i for i in range(len(edges)) if violated(i)]
    heapq.heapify(heap)
    resamples = 0
    while heap:
        i = heapq.heappop(heap)
        if not violated(i):
            continue
        if resamples >= budget:
            raise BudgetExceeded(f"exceeded {budget} resamples")
        resamples += 1
        u, v = edges[i]
        phi[u] = inst.lists[u][int(rng.integers(sizes[u]))]
        phi[v] = inst.lists[v][int(rng.integers(sizes[v]))]
        for w in (u, v):
            for j in incident[w]:
                if violated(j):
                    heapq.heappush(heap, j)
    coloring = PartialColoring(dict(sorted(phi.items())))
    return LllResult(coloring, resamples)


# ---------------------------------------------------------------------------
# exhaustive search (oracle) and bounded backtracking


def _dfs_color(inst: _Instance, node_cap: int | None):
    """Backtracking with forward pruning. Returns (coloring | None, complete)
    where complete means the search space was fully explored (or a coloring
    was found) within the node cap."""
    g = inst.g
    n = g.n
    order = sorted(range(n), key=lambda v: (len(inst.lists[v]), -g.degree(v), v))
    rank = {v: i for i, v in enumerate(order)}
    avail: list[set[int]] = [set(row) for row in inst.lists]
    assignment: dict[int, int] = {}
    nodes = 0

    def extend(i: int):
        nonlocal nodes
        if i == n:
            return True, True
        v = order[i]
        for c in sorted(avail[v]):
            nodes += 1
            if node_cap is not None and nodes > node_cap:
                return None, False
            removed = []
            ok = True
            for u in g.neighbors(v):
                if rank[u] <= i:
                    continue
                b = inst.partner(v, u, c)
                if b is not None and b in avail[u]:
                    avail[u].discard(b)
                    removed.append((u, b))
                    if not avail[u]:
                        ok = False
            if ok:
                assignment[v] = c
                res, complete = extend(i + 1)
                if res:
                    return True, True
                if not complete:
                    return None, False
                del assignment[v]
            for u, b in removed:
                avail[u].add(b)
        return False, True

    if any(len(row) == 0 for row in inst.lists) and n > 0:
        return None, True
    found, complete = extend(0)
    if found:
        return PartialColoring(dict(sorted(assignment.items()))), True
    return None, complete


def brute_force(g: Graph, obj, *, max_n: int = 20):
    """Exhaustive search with pruning; exact. Returns a total proper
    coloring or None when the instance is uncolorable. Guarded to n <= max_n."""
    if g.n > max_n:
        raise InstanceTooLarge(f"brute force guarded to n <= {max_n}, got {g.n}")
    inst = _as_instance(g, obj)
    coloring, complete = _dfs_color(inst, None)
    assert complete
    return coloring


# ---------------------------------------------------------------------------
# greedy stage


def _greedy_generic(inst: _Instance):
    g = inst.g
    maxcdeg = inst.max_cdeg_per_vertex()
    order = sorted(range(g.n), key=lambda v: (-maxcdeg[v], v))
    assignment: dict[int, int] = {}
    for v in order:
        blocked = set()
        unc = []
        for u in g.neighbors(v):
            cu = assignment.get(u)
            if cu is None:
                unc.append(u)
            else:
                b = inst.partner(u, v, cu)
                if b is not None:
                    blocked.add(b)
        best = None
        for c in inst.lists[v]:
            if c in blocked:
                continue
            score = sum(1 for u in unc if inst.partner(v, u, c) is not None)
            if best is None or score < best[0]:
                best = (score, c)
        if best is None:
            return None, v
        assignment[v] = best[1]
    return PartialColoring(dict(sorted(assignment.items()))), None


def _greedy_full_palette(g: Graph, q: int):
    """Degenerate twin of `_greedy_generic` when every list is the full
    0..q-1 palette: max c-degree collapses to the degree and every
    available color is equally unconflicted, so the rule becomes
    degree-descending order with smallest available color."""
    n = g.n
    degs = np.array([g.degree(v) for v in range(n)], dtype=np.int64)
    order = np.lexsort((np.arange(n), -degs))
    assigned = np.full(n, -1, dtype=np.int64)
    for v in order.tolist():
        blocked = np.zeros(q, dtype=bool)
        for u in g.neighbors(v):
            cu = assigned[u]
            if cu >= 0:
                blocked[cu] = True
        free = np.flatnonzero(~blocked)
        if free.size == 0:
            return None, v
        assigned[v] = int(free[0])
    return PartialColoring({v: int(assigned[v]) for v in range(n)}), None


def _greedy_plain(g: Graph, lists) -> tuple[PartialColoring | None, int | None]:
    """Vectorized twin of `_greedy_generic` for list instances over a small
    shared color universe. Identical ordering and tie-breaking."""
    n = g.n
    q = max((row[-1] for row in lists if row), default=-1) + 1
    if q and all(len(row) == q for row in lists):
        return _greedy_full_palette(g, q)
    member = np.zeros((n, q + 1), dtype=np.int32)
    for v, row in enumerate(lists):
        member[v, list(row)] = 1
    cdeg = np.zeros((n, q + 1), dtype=np.int32)
    if g.m:
        us, vs = g.edge_arrays()
        np.add.at(cdeg, us, member[vs])
        np.add.at(cdeg, vs, member[us])
    maxc = np.where(member[:, : q or 1].astype(bool), cdeg[:, : q or 1], -1).max(axis=1) if q else np.zeros(n, np.int64)
    order = np.lexsort((np.arange(n), -maxc))
    assigned = np.full(n, -1, dtype=np.int64)
    nbr = [np.array(g.neighbors(v), dtype=np.int64) for v in range(n)]
    big = np.int32(2 ** 30)
    for v in order.tolist():
        row = member[v, :q].astype(bool) if q else np.zeros(0, bool)
        nb = nbr[v]
        if nb.size:
            cols = assigned[nb]
            colored = cols >= 0
            avail = row.copy()
            taken = cols[colored]
            if taken.size:
                avail[taken] = False
            if not avail.any():
                return None, v
            unc = nb[~colored]
            score = member[unc, :q].sum(axis=0, dtype=np.int32) if unc.size else np.zeros(q, np.int32)
            score = np.where(avail, score, big)
            c = int(score.argmin())
        else:
            if not row.any():
                return None, v
            c = int(row.argmax())
        assigned[v] = c
    return PartialColoring({v: int(assigned[v]) for v in range(n)}), None


def greedy_color(g: Graph, obj):
    """Greedy in descending max-c-degree order, picking the available color
    conflicting with the fewest uncolored neighbors (ties: smallest color).
    Returns (coloring | None, stuck vertex | None)."""
    inst = _as_instance(g, obj)
    if not inst.is_cover and g.n:
        colors = [c for row in inst.lists for c in row]
        if colors and min(colors) >= 0:
            q = max(colors) + 1
            if g.m > 2048 and q <= 4 * len(colors):
                return _greedy_plain(g, inst.lists)
    return _greedy_generic(inst)


# ---------------------------------------------------------------------------
# orchestration


@dataclass
class StageRecord:
    name: str
    attempted: bool
    succeeded: bool
    reason: str = ""
    stats: dict = field(default_factory=dict)


@dataclass
class SolveResult:
    coloring: PartialColoring | None
    stages: list[StageRecord]
    policy: str
    seed: int

    @property
    def success(self) -> bool:
        return self.coloring is not None

    @property
    def path(self) -> str:
        done = [s.name for s in self.stages if s.attempted]
        return ">".join(done) if done else "none"

    @property
    def chosen(self) -> str | None:
        for s in self.stages:
            if s.succeeded:
                return s.name
        return None


def _child_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(TAG_SOLVE, *key)).generate_state(1)[0])


def _round_hypotheses(g: Graph, cov: CorrespondenceCover, p: WcpParams,
                      k_bound: float) -> str | None:
    """Check the per-round structural hypotheses; return a reason on failure.

    Local sparsity is not rechecked: each round's cover graph is an induced
    subgraph of the previous one, so the bound measured at stage start can
    only improve.
    """
    dmax = cov.max_color_degree()
    if dmax > 2.0 * p.d:
        return f"max color degree {dmax} > 2*d = {2 * p.d:.4g}"
    nbrs = cov.color_neighbors
    for v in range(g.n):
        lv = len(cov.lists[v])
        if not ((1.0 - p.beta) * p.ell / 2.0 <= lv <= (1.0 + p.beta) * p.ell):
            return f"list size {lv} of vertex {v} outside the allowed band"
        if lv:
            avg = sum(len(nbrs.get(c, ())) for c in cov.lists[v]) / lv
            if avg > (2.0 - (1.0 - p.beta) * p.ell / lv) * p.d + 1e-9:
                return f"average color degree of vertex {v} too large"
    return None


def _round_conclusions(cov: CorrespondenceCover, lists, colored: set[int],
                       ell_n: float, d_n: float, beta_n: float) -> str | None:
    """Check the round output against next-round scales; reason on failure.

    Sparsity is omitted: the next cover graph is an induced subgraph, so it
    inherits the bound.
    """
    remaining = [v for v in range(cov.n) if v not in colored]
    keep_sets = [frozenset(lists[v]) for v in range(cov.n)]
    deg: dict[int, int] = {}
    for (u, v), pairs in cov.matchings.items():
        if u in colored or v in colored:
            continue
        for a, b in pairs:
            if a in keep_sets[u] and b in keep_sets[v]:
                deg[a] = deg.get(a, 0) + 1
                deg[b] = deg.get(b, 0) + 1
    for v in remaining:
        lv = len(lists[v])
        if lv > (1.0 + beta_n) * ell_n:
            return f"next list of vertex {v} too large"
        if lv < (1.0 - beta_n) * ell_n / 2.0:
            return f"next list of vertex {v} too small"
    if deg and max(deg.values()) > 2.0 * d_n:
        return "next cover max degree too large"
    for v in remaining:
        lv = len(lists[v])
        if lv:
            avg = sum(deg.get(c, 0) for c in lists[v]) / lv
            if avg > (2.0 - (1.0 - beta_n) * ell_n / lv) * d_n + 1e-9:
                return f"next average color degree of vertex {v} too large"
    return None


def _restrict_cover(cov: CorrespondenceCover, keep_sets) -> CorrespondenceCover:
    lists = tuple(tuple(c for c in row if c in keep_sets[v]) for v, row in enumerate(cov.lists))
    matchings = {}
    for (u, v), pairs in cov.matchings.items():
        kept = tuple((a, b) for a, b in pairs if a in keep_sets[u] and b in keep_sets[v])
        if kept:
            matchings[(u, v)] = kept
    return CorrespondenceCover(lists, matchings, source_color=cov.source_color)


def _nibble_stage(g: Graph, inst: _Instance, seed: int, retries: int,
                  schedule_gamma: float, schedule_epsilon: float,
                  lll_threshold: float, lll_budget: int, record: StageRecord):
    """Stage (b): schedule, rounds with re-validation and retries, finisher."""
    if inst.is_cover:
        cov = inst.cover
        to_source = None
    else:
        cov = cover_from_lists(g, ListAssignment(inst.lists))
        to_source = cov.source_color
    d0 = cov.max_color_degree()
    k0 = max(1, cover_sparsity(cov))
    if d0 < 2 or d0 <= math.sqrt(k0):
        record.reason = f"degree scale d={d0} incompatible with sparsity k={k0}"
        return None
    try:
        sched = build_schedule(d0, k0, schedule_gamma, schedule_epsilon)
    except ScheduleError as e:
        record.reason = f"schedule rejected: {e}"
        return None
    if not sched.terminated:
        record.reason = (
            f"schedule did not terminate within {sched.i_star_bound} rounds"
        )
        return None
    ell_t = int(math.floor(sched.ell[0]))
    if ell_t < 1 or any(len(row) < ell_t for row in cov.lists):
        record.reason = (
            f"lists smaller than the schedule's starting scale {sched.ell[0]:.4g}"
        )
        return None
    # trim every list to the starting scale (smallest ids kept)
    trimmed = tuple(row[:ell_t] for row in cov.lists)
    cur_cov = _restrict_cover(cov, [frozenset(r) for r in trimmed])
    cur_g = g
    orig_of = list(range(g.n))
    assignment: dict[int, int] = {}
    rounds_run = 0
    for i in range(sched.i_star):
        if cur_g.n == 0:
            break
        # jump to the finisher as soon as its precondition already holds
        sizes = [len(row) for row in cur_cov.lists]
        if min(sizes) >= lll_threshold * max(1, cur_cov.max_color_degree()):
            break
        p = sched.round_params(i)
        reason = _round_hypotheses(cur_g, cur_cov, p, k0)
        if reason is not None:
            record.reason = f"round {i} hypotheses failed: {reason}"
            record.stats["rounds"] = rounds_run
            return None
        committed = False
        for r in range(retries):
            phi, nxt, stats = wcp_round(cur_g, cur_cov, p, _child_seed(seed, i, r))
            colored = set(phi.assignment)
            reason = _round_conclusions(
                cur_cov, nxt, colored, p.ell_next, p.d_next, p.beta_next
            )
            if reason is None:
                committed = True
                break
        if not committed:
            record.reason = f"round {i} conclusions failed after {retries} tries: {reason}"
            record.stats["rounds"] = rounds_run
            return None
        rounds_run += 1
        for v, c in phi.assignment.items():
            assignment[orig_of[v]] = c
        remaining = [v for v in range(cur_g.n) if v not in colored]
        remap = {v: j for j, v in enumerate(remaining)}
        keep_sets = [frozenset(nxt[v]) for v in range(cur_g.n)]
        new_lists = [nxt[v] for v in remaining]
        new_matchings = {}
        sub_edges = []
        for (u, v), pairs in cur_cov.matchings.items():
            if u in colored or v in colored:
                continue
            keptp = tuple((a, b) for a, b in pairs if a in keep_sets[u] and b in keep_sets[v])
            if keptp:
                e = (remap[u], remap[v])
                new_matchings[e] = keptp
                sub_edges.append(e)
        orig_of = [orig_of[v] for v in remaining]
        cur_g = Graph(len(remaining), sub_edges)
        cur_cov = CorrespondenceCover(new_lists, new_matchings, source_color=cov.source_color)
    record.stats["rounds"] = rounds_run
    if cur_g.n:
        try:
            fin = finish_lll(cur_g, cur_cov, _child_seed(seed, 1 << 20),
                             threshold=lll_threshold, budget=lll_budget)
        except PreconditionViolation as e:
            record.reason = f"finisher precondition failed after rounds: {e}"
            return None
        record.stats["resamples"] = fin.resamples
        for v, c in fin.coloring.assignment.items():
            assignment[orig_of[v]] = c
    if to_source is not None:
        assignment = {v: to_source[c] for v, c in assignment.items()}
    return PartialColoring(dict(sorted(assignment.items())))


def solve(g: Graph, obj, policy: str = "auto", seed: int = 0, *,
          retries: int = 20, schedule_gamma: float = 0.1,
          schedule_epsilon: float = 0.3, lll_threshold: float = 8.0,
          lll_budget: int = 10 ** 6, backtrack_cap: int = 200_000,
          backtrack_max_n: int = 30) -> SolveResult:
    """Fallback chain returning the first total proper coloring found.

    auto order: greedy, then the nibble when its schedule is admissible,
    then the resampling finisher when its precondition already holds, then
    bounded backtracking on small instances. Forcing a single stage:
    policy in {"greedy", "nibble", "lll", "auto"}. Every candidate coloring
    is re-verified before being returned; on failure the result carries one
    record per stage saying why it stopped.
    """
    if policy not in ("auto", "greedy", "nibble", "lll"):
        raise ValueError(f"unknown policy {policy!r}")
    inst = _as_instance(g, obj)
    stage_names = [policy] if policy != "auto" else ["greedy", "nibble", "lll", "backtracking"]
    stages = [StageRecord(name, False, False) for name in stage_names]
    result = SolveResult(None, stages, policy, seed)

    def finalize(rec: StageRecord, coloring: PartialColoring | None) -> bool:
        if coloring is None or not coloring.is_total(g.n):
            return False
        check = verify_coloring(g, obj, coloring)
        if not check.ok:
            rec.reason = f"produced an improper coloring ({check.reason}); discarded"
            return False
        rec.succeeded = True
        result.coloring = coloring
        return True

    for rec in stages:
        rec.attempted = True
        if rec.name == "greedy":
            coloring, stuck = greedy_color(g, inst)
            if finalize(rec, coloring):
                return result
            if rec.reason == "":
                rec.reason = f"stuck at vertex {stuck}" if stuck is not None else "incomplete"
        elif rec.name == "nibble":
            coloring = _nibble_stage(
                g, inst, seed, retries, schedule_gamma, schedule_epsilon,
                lll_threshold, lll_budget, rec,
            )
            if finalize(rec, coloring):
                return result
            if rec.reason == "":
                rec.reason = "nibble produced no total coloring"
        elif rec.name == "lll":
            try:
                fin = finish_lll(g, inst, _child_seed(seed, 2 << 20),
                                 threshold=lll_threshold, budget=lll_budget)
                rec.stats["resamples"] = fin.resamples
                if finalize(rec, fin.coloring):
                    return result
            except PreconditionViolation as e:
                rec.reason = f"precondition failed: {e}"
            except BudgetExceeded as e:
                rec.reason = str(e)
        elif rec.name == "backtracking":
            if g.n > backtrack_max_n:
                rec.reason = f"instance too large for backtracking (n={g.n})"
                continue
            coloring, complete = _dfs_color(inst, backtrack_cap)
            if finalize(rec, coloring):
                return result
            rec.reason = (
                "search space exhausted: instance is uncolorable" if complete
                else f"node budget {backtrack_cap} exhausted"
            )
    return result
