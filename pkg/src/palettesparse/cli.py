"""Experiment driver: config-driven seed sweeps plus one-shot subcommands.

Sweeps are fully reproducible: the instance is fixed by the config, each
row is a deterministic function of (config, seed), every emitted coloring
is re-verified against the full instance and stored, and the CSV tables
contain no wall-clock data (timings live in the JSON report only, outside
the determinism contract).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field

from ._rng import TAG_COVER, substream
from .cover import (
    CorrespondenceCover,
    ListAssignment,
    cover_from_lists,
    load_cover,
    random_cover,
    validate_cover,
)
from .graphcore import (
    Graph,
    gen_bipartite,
    gen_locally_sparse,
    load_graph,
    local_sparsity,
    max_degree,
    save_graph,
)
from .nibble import solve, verify_coloring
from .querysim import QueryOracle, UnsupportedStrategy, end_to_end_query_color
from .sparsify import (
    InvalidParameters,
    SharedPalette,
    SparsifyParams,
    build_conflict,
    derive_params,
    manual_params,
    prune,
    sample_palettes,
)
from .streaming import EdgeStream, stream_color, stream_color_correspondence

SCHEMA = "palette-sparse/1"

CSV_COLUMNS = ["seed", "success", "q", "s", "conflict_edges", "resource",
               "solver_path", "error"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything needed to reproduce a sweep, JSON round-trippable."""

    instance: dict
    pipeline: str = "plain"          # plain | list | cover
    model: str = "offline"           # offline | stream | query
    alpha: float = 0.5
    gamma: float = 0.1
    epsilon: float = 0.05
    q_override: int | None = None
    s_override: int | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    policy: str = "auto"
    strategy: str = "auto"
    permute_seed: int | None = None
    instance_seed: int = 0
    list_universe: int | None = None
    cover_size: int | None = None
    cover_density: float = 0.5
    out_dir: str | None = None
    schema: str = SCHEMA

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        schema = d.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}, expected {SCHEMA!r}")
        try:
            cfg = cls(**d, schema=schema)
        except TypeError as e:
            raise ConfigError(str(e)) from None
        if cfg.pipeline not in ("plain", "list", "cover"):
            raise ConfigError(f"unknown pipeline {cfg.pipeline!r}")
        if cfg.model not in ("offline", "stream", "query"):
            raise ConfigError(f"unknown model {cfg.model!r}")
        if not cfg.seeds:
            raise ConfigError("seeds must be nonempty")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "instance": self.instance,
            "pipeline": self.pipeline,
            "model": self.model,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "q_override": self.q_override,
            "s_override": self.s_override,
            "seeds": list(self.seeds),
            "policy": self.policy,
            "strategy": self.strategy,
            "permute_seed": self.permute_seed,
            "instance_seed": self.instance_seed,
            "list_universe": self.list_universe,
            "cover_size": self.cover_size,
            "cover_density": self.cover_density,
            "out_dir": self.out_dir,
        }


@dataclass
class SweepRow:
    seed: int
    success: bool
    q: int
    s: int
    conflict_edges: int
    resource: int | None      # peak words (stream) or query count (query)
    solver_path: str
    error: str
    wall_time: float          # JSON report only, never in the CSV

    def csv_values(self) -> list:
        return [
            self.seed,
            int(self.success),
            self.q,
            self.s,
            self.conflict_edges,
            "" if self.resource is None else self.resource,
            self.solver_path,
            self.error,
        ]


@dataclass
class SweepResult:
    config: RunConfig
    rows: list[SweepRow]

    def aggregates(self) -> dict:
        """Recomputed from the rows, never stored independently."""
        total = len(self.rows)
        ok = sum(1 for r in self.rows if r.success)
        res = [r.resource for r in self.rows if r.resource is not None]
        return {
            "runs": total,
            "successes": ok,
            "success_rate": ok / total if total else 0.0,
            "mean_conflict_edges": (
                sum(r.conflict_edges for r in self.rows) / total if total else 0.0
            ),
            "max_resource": max(res) if res else None,
            "mean_resource": sum(res) / len(res) if res else None,
        }

    @property
    def exit_code(self) -> int:
        return 0 if all(r.success for r in self.rows) else 2


def _build_instance(cfg: RunConfig):
    """Materialize (graph, params, lists-or-cover) from the config."""
    spec = cfg.instance
    kind = spec.get("kind", "gen")
    try:
        if kind == "gen":
            g = gen_locally_sparse(spec["n"], spec["delta"], spec["k"],
                                   spec.get("seed", 0))
        elif kind == "gen-bipartite":
            g = gen_bipartite(spec["n"], spec["delta"], spec.get("seed", 0))
        elif kind == "file":
            g = load_graph(spec["path"])
        else:
            raise ConfigError(f"unknown instance kind {kind!r}")
    except KeyError as e:
        raise ConfigError(f"instance spec missing field {e}") from None
    delta = max(1, max_degree(g))
    k_audit = max(1, local_sparsity(g).k_star)
    k = spec.get("k", k_audit)
    if cfg.q_override is not None and cfg.s_override is not None:
        # fully prescribed palette; skip the closed form, which desk-scale
        # instances outside the supported sparsity range would reject
        params = manual_params(delta, cfg.gamma, cfg.epsilon,
                               cfg.q_override, cfg.s_override)
    else:
        params = derive_params(delta, max(2, g.n), max(1, k), cfg.alpha,
                               cfg.gamma, cfg.epsilon)
        if cfg.q_override is not None or cfg.s_override is not None:
            params = params.with_overrides(q=cfg.q_override, s=cfg.s_override)

    if cfg.pipeline == "plain":
        return g, params, None
    if cfg.pipeline == "list":
        universe = cfg.list_universe or 2 * params.q
        rng = substream(cfg.instance_seed, TAG_COVER, 99)
        lists = ListAssignment(tuple(
            tuple(sorted(rng.choice(universe, size=params.q, replace=False).tolist()))
            for _ in range(g.n)
        ))
        return g, params, lists
    size = cfg.cover_size or params.q
    cov = random_cover(g, size, cfg.cover_density, cfg.instance_seed)
    return g, params, cov


def _offline_seed(g: Graph, params: SparsifyParams, obj, cfg: RunConfig,
                  seed: int) -> tuple:
    if obj is None:
        fam = sample_palettes(SharedPalette(g.n, params.q), params.s, seed)
        fam = prune(g, fam, params)
        conflict = build_conflict(g, fam)
        target = conflict.lists
    elif isinstance(obj, ListAssignment):
        fam = sample_palettes(obj.lists, params.s, seed)
        fam = prune(g, fam, params)
        conflict = build_conflict(g, fam)
        target = conflict.lists
    else:
        fam = sample_palettes(obj.lists, params.s, seed)
        fam = prune(obj, fam, params)
        conflict = build_conflict(g, fam, cover=obj)
        target = conflict.cover
    if any(len(row) == 0 for row in fam.active()):
        return None, conflict.graph.m, None, "a vertex lost every sampled color", target
    res = solve(conflict.graph, target, policy=cfg.policy, seed=seed)
    err = "" if res.success else "; ".join(
        f"{s.name}: {s.reason}" for s in res.stages if s.attempted
    )
    return res.coloring, conflict.graph.m, res, err, target


def _run_seed(g: Graph, params: SparsifyParams, obj, config: RunConfig,
              seed: int):
    """One end-to-end run; returns (row, verified assignment or None)."""
    t0 = time.perf_counter()
    coloring = None
    resource = None
    conflict_edges = 0
    path = ""
    error = ""
    try:
        if config.model == "offline":
            coloring, conflict_edges, res, error, _ = _offline_seed(
                g, params, obj, config, seed
            )
            path = res.path if res is not None else ""
        elif config.model == "stream":
            if obj is None:
                stream = EdgeStream.from_graph(g, config.permute_seed)
                out = stream_color(stream, g.n, params, seed,
                                   policy=config.policy)
            else:
                cov = obj if isinstance(obj, CorrespondenceCover) \
                    else cover_from_lists(g, obj)
                stream = EdgeStream.from_cover(g, cov, config.permute_seed)
                out = stream_color_correspondence(stream, g.n, params, seed,
                                                  policy=config.policy)
            coloring = out.coloring
            resource = out.ledger.peak_words
            conflict_edges = len(out.stored)
            path = out.solve_result.path if out.solve_result else ""
            error = out.error
            if obj is not None and not isinstance(obj, CorrespondenceCover) \
                    and coloring is not None:
                # cover streaming colors with cover ids; map back to names
                coloring = _pullback(coloring, cov)
        else:
            if obj is not None:
                raise UnsupportedStrategy(
                    "query model supports the shared global palette only; "
                    "list and cover pipelines are unsupported"
                )
            oracle = QueryOracle(g)
            out = end_to_end_query_color(
                oracle, params, seed, strategy=config.strategy,
                delta_hint=max_degree(g), m_hint=g.m, policy=config.policy,
            )
            coloring = out.coloring
            resource = out.queries
            path = out.solve_result.path if out.solve_result else ""
            error = out.error
    except (UnsupportedStrategy, InvalidParameters) as e:
        error = str(e)
        coloring = None

    success = False
    if coloring is not None:
        check = _full_verify(g, params, obj, coloring)
        success = check.ok
        if not success:
            error = f"verification failed: {check.reason}"
    row = SweepRow(
        seed=seed,
        success=success,
        q=params.q,
        s=params.s,
        conflict_edges=conflict_edges,
        resource=resource,
        solver_path=path,
        error=error,
        wall_time=time.perf_counter() - t0,
    )
    assignment = dict(sorted(coloring.assignment.items())) if success else None
    return row, assignment


def run(config: RunConfig, workers: int = 1) -> SweepResult:
    """Execute the sweep; per-seed failures are recorded, never fatal.

    With workers > 1 seeds are dispatched to a process pool, each worker
    owning its run end-to-end; rows come back merged in seed order either
    way, so the outputs are identical to a sequential run.
    """
    g, params, obj = _build_instance(config)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        from functools import partial

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                partial(_run_seed, g, params, obj, config), config.seeds
            ))
    else:
        results = [_run_seed(g, params, obj, config, seed) for seed in config.seeds]
    rows = [row for row, _ in results]
    colorings = {
        row.seed: assignment for row, assignment in results if assignment is not None
    }
    result = SweepResult(config, rows)
    if config.out_dir:
        _write_outputs(result, colorings)
    return result


def _pullback(coloring, cov: CorrespondenceCover):
    from .nibble import PartialColoring

    src = cov.source_color
    return PartialColoring({v: src[c] for v, c in coloring.assignment.items()})


def _full_verify(g: Graph, params: SparsifyParams, obj, coloring):
    """Verify a coloring against the full original instance."""
    if obj is None or isinstance(obj, ListAssignment):
        palette = obj if obj is not None else ListAssignment(
            tuple(tuple(range(params.q)) for _ in range(g.n))
        )
        return verify_coloring(g, palette, coloring)
    return verify_coloring(g, obj, coloring)


def _write_outputs(result: SweepResult, colorings: dict[int, dict]) -> None:
    import os

    os.makedirs(result.config.out_dir, exist_ok=True)
    base = result.config.out_dir
    with open(os.path.join(base, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in result.rows:
            w.writerow(row.csv_values())
    report = {
        "config": result.config.to_dict(),
        "aggregates": result.aggregates(),
        "rows": [
            {**{k: row.csv_values()[i] for i, k in enumerate(CSV_COLUMNS)},
             "wall_time": row.wall_time}
            for row in result.rows
        ],
    }
    with open(os.path.join(base, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for seed, assignment in colorings.items():
        with open(os.path.join(base, f"coloring_seed{seed}.json"), "w") as fh:
            json.dump({str(v): c for v, c in assignment.items()}, fh, sort_keys=True)
            fh.write("\n")


def sweep_success_vs_s(config: RunConfig, s_values) -> dict:
    """Hold q fixed, vary s, and report the success rate per s.

    The monotone-trend flag is informational: success rates are expected,
    not guaranteed, to be nondecreasing in s.
    """
    table = []
    for s in s_values:
        cfg = RunConfig.from_dict({**config.to_dict(), "s_override": int(s),
                                   "out_dir": None})
        res = run(cfg)
        agg = res.aggregates()
        table.append({"s": int(s), "success_rate": agg["success_rate"],
                      "runs": agg["runs"]})
    rates = [t["success_rate"] for t in table]
    return {
        "table": table,
        "monotone_nondecreasing": all(a <= b + 1e-12 for a, b in zip(rates, rates[1:])),
    }


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    if args.bipartite:
        g = gen_bipartite(args.n, args.delta, args.seed)
    else:
        g = gen_locally_sparse(args.n, args.delta, args.k, args.seed)
    save_graph(g, args.out)
    rep = local_sparsity(g)
    print(f"wrote {args.out}: n={g.n} m={g.m} max_degree={rep.max_degree} "
          f"k_star={rep.k_star}")
    return 0


def _cmd_verify_cover(args) -> int:
    g = load_graph(args.graph)
    cov = load_cover(args.cover)
    rep = validate_cover(g, cov)
    print(f"CC1 partition: {'pass' if rep.cc1_partition else 'FAIL'}")
    print(f"CC2 lists independent: {'pass' if rep.cc2_lists_independent else 'FAIL'}")
    print(f"CC3 matchings: {'pass' if rep.cc3_matchings else 'FAIL'}")
    if rep.witness:
        print(f"witness: {rep.witness}")
    return 0 if rep.ok else 2


def _cmd_sparsify(args) -> int:
    g = load_graph(args.graph)
    delta = max(1, max_degree(g))
    k = max(1, local_sparsity(g).k_star)
    params = derive_params(delta, max(2, g.n), k, args.alpha, args.gamma, args.epsilon)
    if args.cover:
        cov = load_cover(args.cover)
        fam = sample_palettes(cov.lists, params.s, args.seed)
        fam = prune(cov, fam, params)
    else:
        fam = sample_palettes(SharedPalette(g.n, params.q), params.s, args.seed)
        fam = prune(g, fam, params)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for v in range(g.n):
            kept = " ".join(str(c) for c in fam.pruned[v])
            full = " ".join(str(c) for c in fam.sampled[v])
            out.write(f"{v} : {full} | {kept}\n")
    finally:
        if args.out:
            out.close()
    print(f"q={params.q} s={params.s} degenerate={params.degenerate}", file=sys.stderr)
    return 0


def _cmd_solve(args) -> int:
    g = load_graph(args.graph)
    if args.cover:
        obj = load_cover(args.cover)
    elif args.lists:
        obj = _load_lists(args.lists)
    else:
        print("solve needs --lists or --cover", file=sys.stderr)
        return 3
    res = solve(g, obj, policy=args.policy, seed=args.seed)
    if args.report:
        report = {
            "success": res.success,
            "policy": res.policy,
            "seed": res.seed,
            "path": res.path,
            "stages": [
                {"name": s.name, "attempted": s.attempted,
                 "succeeded": s.succeeded, "reason": s.reason, "stats": s.stats}
                for s in res.stages
            ],
            "coloring": dict(sorted(res.coloring.assignment.items())) if res.success else None,
        }
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"{'proper coloring found' if res.success else 'no coloring'} via {res.path}")
    return 0 if res.success else 2


def _cmd_stream(args) -> int:
    g = load_graph(args.graph)
    delta = max(1, max_degree(g))
    k = max(1, local_sparsity(g).k_star)
    params = derive_params(delta, max(2, g.n), k, args.alpha, args.gamma, args.epsilon)
    if args.cover:
        cov = load_cover(args.cover)
        stream = EdgeStream.from_cover(g, cov, args.permute_seed)
        out = stream_color_correspondence(stream, g.n, params, args.seed)
    else:
        stream = EdgeStream.from_graph(g, args.permute_seed)
        out = stream_color(stream, g.n, params, args.seed)
    if args.ledger:
        with open(args.ledger, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["stored_edges", "palette_words", "counter_words",
                        "matching_words", "peak_words"])
            led = out.ledger
            w.writerow([led.stored_edges, led.palette_words, led.counter_words,
                        led.matching_words, led.peak_words])
    print(f"stored={out.ledger.stored_edges} peak_words={out.ledger.peak_words} "
          f"success={out.success}")
    return 0 if out.success else 2


def _cmd_queries(args) -> int:
    g = load_graph(args.graph)
    delta = max(1, max_degree(g))
    k = max(1, local_sparsity(g).k_star)
    params = derive_params(delta, max(2, g.n), k, args.alpha, args.gamma, args.epsilon)
    oracle = QueryOracle(g)
    out = end_to_end_query_color(oracle, params, args.seed, strategy=args.strategy,
                                 delta_hint=delta, m_hint=g.m)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["strategy", "degree", "neighbor", "pair", "total", "success"])
            c = oracle.counts()
            w.writerow([out.plan.strategy, c["degree"], c["neighbor"], c["pair"],
                        c["total"], int(out.success)])
    print(f"strategy={out.plan.strategy} queries={out.queries} success={out.success}")
    return 0 if out.success else 2


def _cmd_sweep(args) -> int:
    try:
        config = RunConfig.load(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3
    result = run(config, workers=args.workers)
    agg = result.aggregates()
    print(f"runs={agg['runs']} successes={agg['successes']} "
          f"success_rate={agg['success_rate']:.3f}")
    return result.exit_code


def _load_lists(path) -> ListAssignment:
    with open(path) as fh:
        n = int(fh.readline())
        rows = [tuple(int(x) for x in fh.readline().split()) for _ in range(n)]
    return ListAssignment(tuple(rows))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="palettesparse")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a locally sparse graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--bipartite", action="store_true")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("verify-cover", help="validate a correspondence cover")
    p.add_argument("--graph", required=True)
    p.add_argument("--cover", required=True)
    p.set_defaults(func=_cmd_verify_cover)

    p = sub.add_parser("sparsify", help="sample and prune palettes")
    p.add_argument("--graph", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cover")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sparsify)

    p = sub.add_parser("solve", help="solve a list or cover instance")
    p.add_argument("--graph", required=True)
    p.add_argument("--lists")
    p.add_argument("--cover")
    p.add_argument("--policy", default="auto",
                   choices=["auto", "greedy", "nibble", "lll"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("stream", help="single-pass streaming pipeline")
    p.add_argument("--graph", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--permute-seed", type=int, default=None)
    p.add_argument("--cover")
    p.add_argument("--ledger")
    p.set_defaults(func=_cmd_stream)

    p = sub.add_parser("queries", help="non-adaptive query pipeline")
    p.add_argument("--graph", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--strategy", default="auto", choices=["auto", "scan", "classes"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_queries)

    p = sub.add_parser("sweep", help="run a config-driven seed sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
