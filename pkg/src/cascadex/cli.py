"""Command-line pipeline: each subcommand reads earlier artifacts from the
output directory and writes its own next to them."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .cascades import (InitiatorCounts, TREES_HEADER, ablate_trolls, read_edges,
                       run_cascades, select_urls, write_edges, write_influence, write_trees)
from .graph import (EGO_NET, GROUP_NAMES, MENTION, REPLY, TROLL, InteractionMultigraph, SimpleDigraph,
                    build_multigraph, degree_profile, project_simple, to_undirected)
from .influence import TrollUrlSet, extract_troll_urls, identify_spreaders, induced_subgraph
from .ingest import JSONL, TSV, IngestError, load_troll_registry, parse_event_stream
from .shares import ShareTable
from .snapshot import SnapshotError, snapshot_load, snapshot_save
from .stats import (EmpiricalDistribution, TopKThresholds, correlate_scores, load_scores, topk_summary)
from .synth import InfeasibleScenario, ScenarioParams, generate
from .topology import connected_components, k_core_decomposition, largest_component, write_histogram

log = logging.getLogger("cascadex")

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_DATA = 0, 1, 2, 3

GRAPH = "graph.igr"
REGION = "region.igr"
SHARES = "shares.csv"
TROLL_URLS = "troll_urls.csv"
CORENESS = "coreness.csv"
EDGES = "cascade_edges.csv"
TREES = "trees.csv"
INFLUENCE = "influence.csv"

# artifact -> subcommand that writes it
PRODUCER = {GRAPH: "build", SHARES: "build", TROLL_URLS: "build", REGION: "region",
            CORENESS: "kcore", EDGES: "cascades", TREES: "cascades", INFLUENCE: "influence"}


class CliError(Exception):
    code = EXIT_CONFIG


class ConfigError(CliError):
    code = EXIT_CONFIG


class MissingPrerequisite(CliError):
    code = EXIT_MISSING

    def __init__(self, path: Path, hint: str | None = None):
        msg = f"missing prerequisite: {path}"
        if hint:
            msg += f" (run `cascadex {hint}` first)"
        super().__init__(msg)
        self.path = path


class DataError(CliError):
    code = EXIT_DATA


@dataclass
class PipelineConfig:
    out: Path
    events: Path | None = None
    registry: Path | None = None
    scores: Path | None = None
    event_format: str | None = None
    min_distinct_sharers: int = 100
    viral_size: int = 1000
    influence_threshold: int = 100
    degree_threshold: int = 1000
    topk_influence_threshold: int = 1000
    ccdf_geq: bool = True
    strict_urls: bool = False
    workers: int = 1
    seed: int = 42
    p_method: str = "t"
    graph: str = "full"

    def validate(self) -> None:
        for name in ("min_distinct_sharers", "viral_size", "influence_threshold",
                     "degree_threshold", "topk_influence_threshold", "seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name.replace('_', '-')} must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {self.out}: {exc}") from None
        if not os.access(self.out, os.W_OK):
            raise ConfigError(f"output directory {self.out} is not writable")


# --- small helpers -------------------------------------------------------------

def _require(cfg: PipelineConfig, name: str) -> Path:
    path = cfg.out / name
    if not path.is_file():
        raise MissingPrerequisite(path, PRODUCER.get(name))
    return path


def _input(path: Path | None, flag: str) -> Path:
    if path is None:
        raise ConfigError(f"{flag} is required")
    if not path.is_file():
        raise MissingPrerequisite(path)
    return path


def _csv_out(cfg: PipelineConfig, name: str, header: Sequence[str] | None,
             rows: Iterable[Sequence[object]]) -> Path:
    path = cfg.out / name
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        w.writerows(rows)
    log.info("wrote %s", path)
    return path


def _with_file(cfg: PipelineConfig, name: str, fn: Callable) -> Path:
    path = cfg.out / name
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fn(fh)
    log.info("wrote %s", path)
    return path


def _load_graph(cfg: PipelineConfig, name: str = GRAPH) -> InteractionMultigraph:
    path = _require(cfg, name)
    try:
        return snapshot_load(path)
    except SnapshotError as exc:
        raise DataError(f"{path}: {exc}") from None


def _selected_graph(cfg: PipelineConfig) -> tuple[InteractionMultigraph, str]:
    if cfg.graph == "region":
        return _load_graph(cfg, REGION), "region_"
    return _load_graph(cfg), ""


def _ccdf_rows(values: np.ndarray, geq: bool) -> list[tuple[float, float]]:
    if len(values) == 0:
        return []
    return EmpiricalDistribution(values, geq).ccdf_points()


def _fmt(x: float) -> str:
    return repr(float(x))


def _read_trees(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        if r.fieldnames is None or r.fieldnames[:len(TREES_HEADER)] != TREES_HEADER:
            raise DataError(f"{path}: expected header {','.join(TREES_HEADER)}")
        return list(r)


def _read_influence(path: Path) -> dict[str, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["user"]: int(row["influence_degree"]) for row in csv.DictReader(fh)}


def _read_coreness(path: Path) -> dict[str, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["user"]: int(row["coreness"]) for row in csv.DictReader(fh)}


def _group_rows(g: InteractionMultigraph) -> list[tuple[str, int, int]]:
    rows = []
    for code in (TROLL, EGO_NET, 0):
        m = g.nodes.base == code
        for sp in (1, 0):
            rows.append((GROUP_NAMES[code], sp, int(np.count_nonzero(m & (g.nodes.spreader == bool(sp))))))
    return rows


# --- subcommands -----------------------------------------------------------------

def cmd_build(cfg: PipelineConfig) -> None:
    events = _input(cfg.events, "--events")
    registry_path = _input(cfg.registry, "--registry")
    fmt = cfg.event_format or (JSONL if events.suffix.lower() in (".jsonl", ".json") else TSV)
    try:
        elog, report = parse_event_stream(events, fmt=fmt, strict_urls=cfg.strict_urls)
        registry = load_troll_registry(registry_path)
    except IngestError as exc:
        raise DataError(str(exc)) from None
    if report.events == 0:
        raise DataError(f"{events}: no valid events ({report.error_count} rejected lines)")
    g = build_multigraph(elog, registry)
    shares = ShareTable.from_log(elog)
    turls = extract_troll_urls(shares, registry)
    identify_spreaders(shares, turls, g.nodes)
    snapshot_save(g, cfg.out / GRAPH)
    log.info("wrote %s", cfg.out / GRAPH)
    _with_file(cfg, SHARES, shares.write_csv)
    _with_file(cfg, TROLL_URLS, turls.write_csv)
    _csv_out(cfg, "parse_errors.csv", ["line", "reason"], report.errors)

    troll = g.nodes.is_troll
    simple_edges = project_simple(g).n_edges
    _csv_out(cfg, "build_summary.csv", ["metric", "value"], [
        ("lines", report.lines), ("events", report.events), ("rejected_lines", report.error_count),
        ("nodes", g.n_nodes), ("multigraph_edges", g.n_edges), ("simple_edges", simple_edges),
        ("trolls_in_graph", int(troll.sum())), ("registry_size", len(registry)),
        ("urls", len(shares.urls)), ("url_shares", len(shares)), ("troll_urls", len(turls)),
        ("spreaders", int(g.nodes.spreader.sum())),
    ])
    _csv_out(cfg, "group_counts.csv", ["group", "spreader", "nodes"], _group_rows(g))

    # troll-sourced actions split by target group
    rows = []
    for kind, name in ((REPLY, "replies"), (MENTION, "mentions")):
        m = (g.kind == kind) & troll[g.src]
        targets = np.unique(g.dst[m])
        t_trolls = int(troll[targets].sum())
        rows.append((name, int(m.sum()), t_trolls, len(targets) - t_trolls))
    _csv_out(cfg, "troll_actions.csv", ["action", "total", "target_trolls", "target_real_users"], rows)

    # collection overview per author group
    user_troll = registry.mask(elog.users)
    author_troll = user_troll[elog.authors]
    src_troll = troll[g.src]
    rows = [("user_ids", int((~user_troll).sum()), int(user_troll.sum())),
            ("total_events", int((~author_troll).sum()), int(author_troll.sum()))]
    for kind, name in ((REPLY, "replies"), (MENTION, "mentions")):
        k = g.kind == kind
        rows.append((name, int((k & ~src_troll).sum()), int((k & src_troll).sum())))
    _csv_out(cfg, "collection.csv", ["metric", "real_users", "trolls"], rows)


def cmd_degrees(cfg: PipelineConfig) -> None:
    g, prefix = _selected_graph(cfg)
    prof = degree_profile(g)
    _with_file(cfg, f"{prefix}degrees.csv", prof.write_csv)
    rows = []
    for column in ("in_multi", "out_multi", "in_simple", "out_simple"):
        for (group, sp), values in prof.partition(column).items():
            for x, f in _ccdf_rows(values, cfg.ccdf_geq):
                rows.append((column, group, int(sp), int(x), _fmt(f)))
    _csv_out(cfg, f"{prefix}degree_ccdf.csv", ["degree", "group", "spreader", "x", "fraction"], rows)


def cmd_components(cfg: PipelineConfig) -> None:
    g, prefix = _selected_graph(cfg)
    und = to_undirected(project_simple(g))
    comps = connected_components(und)
    _with_file(cfg, f"{prefix}component_hist.csv", lambda fh: write_histogram(comps, fh))
    lcc = largest_component(und, comps)
    rows = [("nodes", und.n_nodes), ("edges", und.n_edges), ("components", comps.n_components),
            ("largest_nodes", lcc.n_nodes), ("largest_edges", lcc.n_edges)]
    rows += [(f"largest_{k}", v) for k, v in lcc.nodes.group_counts().items()]
    _csv_out(cfg, f"{prefix}components_summary.csv", ["metric", "value"], rows)


def cmd_kcore(cfg: PipelineConfig) -> None:
    g, prefix = _selected_graph(cfg)
    und = to_undirected(project_simple(g))
    comps = connected_components(und)
    # coreness never crosses components, so whole-graph values hold inside the largest one
    core = k_core_decomposition(und)
    c, labels = core.coreness.tolist(), comps.labels.tolist()
    _csv_out(cfg, f"{prefix}{CORENESS}", ["user", "component_id", "coreness"],
             ((u, labels[i], c[i]) for i, u in enumerate(und.nodes.users)))
    lcc = largest_component(und, comps)
    in_lcc = np.zeros(und.n_nodes, dtype=bool)
    if lcc.n_nodes:
        in_lcc = comps.labels == comps.labels[und.nodes.index[lcc.nodes.users[0]]]
    lcc_max = int(core.coreness[in_lcc].max(initial=0))
    top = in_lcc & (core.coreness == lcc_max)
    rows = [("max_coreness", core.max_coreness), ("largest_component_max_coreness", lcc_max),
            ("largest_component_max_core_nodes", int(top.sum()))]
    rows += [(f"largest_component_max_core_{k}", v) for k, v in und.nodes.group_counts(top).items()]
    _csv_out(cfg, f"{prefix}kcore_summary.csv", ["metric", "value"], rows)
    _csv_out(cfg, f"{prefix}coreness_ccdf.csv", ["x", "fraction"],
             ((int(x), _fmt(f)) for x, f in _ccdf_rows(core.coreness, cfg.ccdf_geq)))


def cmd_region(cfg: PipelineConfig) -> None:
    g = _load_graph(cfg)
    simple = project_simple(g)
    region = induced_subgraph(simple, g.nodes.spreader)
    snapshot_save(region.graph.to_multigraph(), cfg.out / REGION)
    log.info("wrote %s", cfg.out / REGION)
    _csv_out(cfg, "region_summary.csv", ["metric", "value"], region.summary_rows())


def _cascade_inputs(cfg: PipelineConfig) -> tuple[InteractionMultigraph, SimpleDigraph, ShareTable, list[int]]:
    g = _load_graph(cfg)
    shares_path, turls_path = _require(cfg, SHARES), _require(cfg, TROLL_URLS)
    shares = ShareTable.read_csv(shares_path)
    turls = TrollUrlSet.read_csv(turls_path)
    codes = select_urls(shares, turls.urls, cfg.min_distinct_sharers)
    return g, project_simple(g), shares, codes


def cmd_cascades(cfg: PipelineConfig) -> None:
    g, simple, shares, codes = _cascade_inputs(cfg)
    cs = run_cascades(shares, simple, codes, cfg.workers)
    _with_file(cfg, EDGES, lambda fh: write_edges(cs.forests, fh))
    _with_file(cfg, TREES, lambda fh: write_trees(cs.trees, fh))
    n_edges = sum(int((f.parent_pos >= 0).sum()) for f in cs.forests)
    _csv_out(cfg, "cascades_summary.csv", ["metric", "value"], [
        ("urls", len(codes)), ("trees", len(cs.trees)), ("influence_edges", n_edges),
        ("largest_tree", max((t.size for t in cs.trees), default=0)),
    ])
    # where trolls first show up in each diffusion list
    troll_names = {g.nodes.users[i] for i in np.flatnonzero(g.nodes.is_troll)}
    rows = []
    for k in codes:
        sl = shares.url_slice(k)
        seq = [shares.users[u] for u in shares.user[sl].tolist()]
        seen = set()
        for pos, u in enumerate(seq):
            if u in troll_names and u not in seen:
                seen.add(u)
                rows.append((shares.urls[k], u, _fmt((pos + 1) / len(seq))))
    _csv_out(cfg, "troll_first_appearance.csv", ["url", "user", "relative_first_appearance"], rows)


def cmd_virality(cfg: PipelineConfig) -> None:
    rows = _read_trees(_require(cfg, TREES))
    v = np.array([float(r["virality"]) for r in rows], dtype=float)
    summary = [("trees", len(v))]
    if len(v):
        summary += [("mean", _fmt(v.mean())), ("median", _fmt(np.median(v))), ("max", _fmt(v.max()))]
    _csv_out(cfg, "virality_summary.csv", ["metric", "value"], summary)
    _csv_out(cfg, "virality_ccdf.csv", ["x", "fraction"],
             ((_fmt(x), _fmt(f)) for x, f in _ccdf_rows(v, cfg.ccdf_geq)))


def _initiators(rows: list[dict[str, str]], threshold: int) -> InitiatorCounts:
    initiated: Counter = Counter()
    viral: Counter = Counter()
    for r in rows:
        initiated[r["root"]] += 1
        if int(r["size"]) > threshold:
            viral[r["root"]] += 1
    return InitiatorCounts(threshold, initiated, viral)


def cmd_influence(cfg: PipelineConfig) -> None:
    g = _load_graph(cfg)
    edges = read_edges(_require(cfg, EDGES))
    trees = _read_trees(_require(cfg, TREES))
    deg = Counter()
    for pairs in edges.values():
        deg.update(p for p, _ in pairs)
    _with_file(cfg, INFLUENCE, lambda fh: write_influence(deg, g.nodes, fh))
    init = _initiators(trees, cfg.viral_size)
    idx = g.nodes.index
    users = sorted(init.initiated)
    _csv_out(cfg, "initiators.csv", ["user", "group", "initiated", f"initiated_size_gt_{cfg.viral_size}"],
             ((u, g.nodes.group_of(idx[u]) if u in idx else "unknown", init.initiated[u], init.viral[u])
              for u in users))
    rows = []
    for code in (TROLL, EGO_NET, 0):
        mask = g.nodes.base == code
        values = np.array([deg.get(g.nodes.users[i], 0) for i in np.flatnonzero(mask)], dtype=np.int64)
        for x, f in _ccdf_rows(values[values > 0], cfg.ccdf_geq):
            rows.append((GROUP_NAMES[code], int(x), _fmt(f)))
    _csv_out(cfg, "influence_ccdf.csv", ["group", "x", "fraction"], rows)


def cmd_ablate(cfg: PipelineConfig) -> None:
    _, simple, shares, codes = _cascade_inputs(cfg)
    res = ablate_trolls(shares, simple, url_codes=codes, workers=cfg.workers)

    def trees(fh):
        write_trees(res.original.trees, fh, ablated=0)
        write_trees(res.ablated.trees, fh, ablated=1, header=False)
    _with_file(cfg, "ablation_trees.csv", trees)
    _csv_out(cfg, "ablation_summary.csv", ["metric", "value"],
             ((k, _fmt(v) if isinstance(v, float) else v) for k, v in res.summary_rows()))
    rows = []
    for name, cs in (("original", res.original), ("ablated", res.ablated)):
        if cs.trees:
            rows += [(name, _fmt(x), _fmt(f)) for x, f in EmpiricalDistribution(cs.viralities).cdf_points()]
    _csv_out(cfg, "ablation_cdf.csv", ["variant", "x", "cdf"], rows)


def cmd_correlate(cfg: PipelineConfig) -> None:
    scores_path = _input(cfg.scores, "--scores")
    g = _load_graph(cfg)
    influence = _read_influence(_require(cfg, INFLUENCE))
    scores = load_scores(scores_path)
    ego = [g.nodes.users[i] for i in np.flatnonzero(g.nodes.base == EGO_NET)]
    try:
        rep = correlate_scores(scores, influence, cfg.influence_threshold, population=ego,
                               method=cfg.p_method, seed=cfg.seed)
    except ValueError as exc:
        log.warning("correlation skipped: %s", exc)
        _csv_out(cfg, "correlation.csv", ["statistic", "value", "p_value"],
                 [("n", 0, ""), ("threshold", cfg.influence_threshold, ""),
                  ("pearson", "undefined", "undefined"), ("spearman", "undefined", "undefined"),
                  ("note", str(exc), "")])
        _csv_out(cfg, "correlation_pairs.csv", ["user", "score", "influence_degree"], [])
        return
    _csv_out(cfg, "correlation.csv", ["statistic", "value", "p_value"],
             rep.rows() + [("note", n, "") for n in rep.notes])
    _csv_out(cfg, "correlation_pairs.csv", ["user", "score", "influence_degree"],
             ((u, _fmt(s), d) for u, s, d in rep.pairs))


def cmd_topk(cfg: PipelineConfig) -> None:
    g = _load_graph(cfg)
    coreness = _read_coreness(_require(cfg, CORENESS))
    trees = _read_trees(_require(cfg, TREES))
    influence = _read_influence(_require(cfg, INFLUENCE))
    n = g.n_nodes
    table = topk_summary(
        g.nodes, np.bincount(g.dst, minlength=n), np.bincount(g.src, minlength=n), coreness,
        _initiators(trees, cfg.viral_size), influence,
        TopKThresholds(cfg.degree_threshold, cfg.degree_threshold, cfg.topk_influence_threshold))
    _with_file(cfg, "topk.csv", table.write_csv)
    print(table.format())


def cmd_synth(cfg: PipelineConfig, params: ScenarioParams) -> None:
    try:
        params.validate()
        files = generate(params, cfg.out)
    except InfeasibleScenario as exc:
        raise ConfigError(f"infeasible scenario: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for p in (files.events, files.registry, files.ground_truth, files.scores):
        log.info("wrote %s", p)


REPORT_STAGES = ("degrees", "components", "kcore", "region", "cascades", "virality",
                 "influence", "ablate", "correlate", "topk")


def cmd_report(cfg: PipelineConfig) -> None:
    for name in (GRAPH, SHARES, TROLL_URLS):
        _require(cfg, name)
    cfg.graph = "full"
    for stage in REPORT_STAGES:
        if stage == "correlate" and cfg.scores is None:
            log.info("no --scores given; skipping correlate")
            continue
        log.info("report stage: %s", stage)
        COMMANDS[stage](cfg)
    sections = ["build_summary.csv", "group_counts.csv", "troll_actions.csv", "collection.csv",
                "components_summary.csv", "kcore_summary.csv", "region_summary.csv",
                "cascades_summary.csv", "virality_summary.csv", "ablation_summary.csv",
                "correlation.csv", "topk.csv"]
    with open(cfg.out / "report.txt", "w", encoding="utf-8", newline="\n") as fh:
        for name in sections:
            path = cfg.out / name
            if not path.is_file():
                continue
            fh.write(f"== {name}\n")
            with open(path, newline="", encoding="utf-8") as src:
                rows = list(csv.reader(src))
            widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(max(map(len, rows)))]
            for r in rows:
                fh.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")
            fh.write("\n")
    log.info("wrote %s", cfg.out / "report.txt")


COMMANDS: dict[str, Callable[[PipelineConfig], None]] = {
    "build": cmd_build, "degrees": cmd_degrees, "components": cmd_components, "kcore": cmd_kcore,
    "region": cmd_region, "cascades": cmd_cascades, "virality": cmd_virality,
    "influence": cmd_influence, "ablate": cmd_ablate, "correlate": cmd_correlate,
    "topk": cmd_topk, "report": cmd_report,
}


# --- argument parsing ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive(text: str) -> int:
    v = _nonneg(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("."), help="artifact directory (default: .)")
    common.add_argument("--events", type=Path, help="event log (TSV or JSONL)")
    common.add_argument("--format", dest="event_format", choices=(TSV, JSONL),
                        help="event log format (default: from file suffix)")
    common.add_argument("--registry", type=Path, help="troll id list, one per line")
    common.add_argument("--scores", type=Path, help="CSV user,score")
    common.add_argument("--min-distinct-sharers", type=_nonneg, default=100,
                        help="cascade URLs need more than this many distinct sharers")
    common.add_argument("--viral-size", type=_nonneg, default=1000,
                        help="cascade size above which an initiated cascade counts as large")
    common.add_argument("--influence-threshold", type=_nonneg, default=100,
                        help="influence-degree cut for the score correlation")
    common.add_argument("--degree-threshold", type=_nonneg, default=1000,
                        help="in/out-degree cut for the top-k table")
    common.add_argument("--topk-influence-threshold", type=_nonneg, default=1000,
                        help="influence-degree cut for the top-k table")
    ccdf = common.add_mutually_exclusive_group()
    ccdf.add_argument("--ccdf-geq", dest="ccdf_geq", action="store_true", default=True,
                      help="CCDF as P(X >= x) (default)")
    ccdf.add_argument("--ccdf-gt", dest="ccdf_geq", action="store_false", help="CCDF as P(X > x)")
    common.add_argument("--strict-urls", action="store_true", help="reject events with malformed URLs")
    common.add_argument("--workers", type=_positive, default=1, help="threads for per-URL cascades")
    common.add_argument("--seed", type=_nonneg, default=42, help="seed for all randomness")
    common.add_argument("--p-method", choices=("t", "permutation"), default="t",
                        help="p-value method for correlations")
    common.add_argument("--graph", choices=("full", "region"), default="full",
                        help="graph for degrees/components/kcore")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cascadex", description="Troll interaction graph and cascade analytics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "build": "parse events, build the interaction graph snapshot and share tables",
        "degrees": "degree table and CCDFs by group",
        "components": "connected component histogram",
        "kcore": "coreness of the largest component",
        "region": "region of influence among spreaders",
        "cascades": "infer cascade trees for troll-URLs",
        "virality": "structural virality distribution",
        "influence": "influence-degree and cascade initiators",
        "ablate": "re-infer cascades without trolls",
        "correlate": "correlate external scores with influence-degree",
        "topk": "trolls vs ego-net spreaders summary table",
        "report": "run every analysis stage after build",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    sp = sub.add_parser("synth", parents=[common], help="write a seeded synthetic scenario",
                        description="write a seeded synthetic scenario")
    defaults = ScenarioParams()
    for field in ("n_trolls", "n_real", "n_urls", "trees_per_url", "tree_size_max", "noise_events"):
        sp.add_argument("--" + field.replace("_", "-"), type=_nonneg, default=getattr(defaults, field))
    sp.add_argument("--score-slope", type=float, default=defaults.score_slope)
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        out=args.out, events=args.events, registry=args.registry, scores=args.scores,
        event_format=args.event_format, min_distinct_sharers=args.min_distinct_sharers,
        viral_size=args.viral_size, influence_threshold=args.influence_threshold,
        degree_threshold=args.degree_threshold, topk_influence_threshold=args.topk_influence_threshold,
        ccdf_geq=args.ccdf_geq, strict_urls=args.strict_urls, workers=args.workers, seed=args.seed,
        p_method=args.p_method, graph=args.graph)


def run(command: str, cfg: PipelineConfig, params: ScenarioParams | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    try:
        cfg.validate()
        if command == "synth":
            cmd_synth(cfg, params or ScenarioParams(seed=cfg.seed))
        else:
            COMMANDS[command](cfg)
    except CliError as exc:
        print(f"cascadex {command}: {exc}", file=sys.stderr)
        return exc.code
    except (SnapshotError, IngestError, csv.Error, ValueError, KeyError, UnicodeDecodeError) as exc:
        print(f"cascadex {command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PermissionError as exc:
        print(f"cascadex {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:          # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    params = None
    if args.command == "synth":
        params = ScenarioParams(seed=args.seed, n_trolls=args.n_trolls, n_real=args.n_real,
                                n_urls=args.n_urls, trees_per_url=args.trees_per_url,
                                tree_size_max=args.tree_size_max, noise_events=args.noise_events,
                                score_slope=args.score_slope)
    return run(args.command, config_from_args(args), params)


if __name__ == "__main__":
    sys.exit(main())
