"""Time-inferred diffusion cascades over URL share histories.

A first-time sharer ``i`` of URL ``x`` at time ``t_i`` is attached to the
latest earlier sharer ``j`` of ``x`` such that the interaction edge ``i -> j``
existed before ``t_i``. Ties on equal share times go to the smallest user id.
All comparisons are strict. Later shares by the same user are kept in the
diffusion list but never create influence.
"""
from __future__ import annotations

import csv
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numba
import numpy as np

from .graph import GROUP_NAMES, NodeTable, SimpleDigraph
from .ingest import EventLog, TrollRegistry
from .shares import ShareTable


@dataclass
class DiffusionList:
    url: str
    users: list[str]           # chronological, repetitions included
    ts: np.ndarray
    event_ids: list[str]

    def __len__(self) -> int:
        return len(self.users)

    @property
    def distinct_user_count(self) -> int:
        return len(set(self.users))

    def first_shares(self) -> dict[str, int]:
        first: dict[str, int] = {}
        for u, t in zip(self.users, self.ts.tolist()):
            first.setdefault(u, t)
        return first


def build_diffusion_lists(events: EventLog | ShareTable, urls: Iterable[str] | None = None) -> dict[str, DiffusionList]:
    """One list per URL with at least one share (restricted to ``urls`` if given)."""
    shares = events if isinstance(events, ShareTable) else ShareTable.from_log(events)
    wanted = None if urls is None else set(urls)
    out = {}
    for k, url in enumerate(shares.urls):
        if wanted is not None and url not in wanted:
            continue
        sl = shares.url_slice(k)
        out[url] = DiffusionList(url, [shares.users[i] for i in shares.user[sl].tolist()],
                                 shares.ts[sl].copy(), shares.event_ids[sl])
    return out


def relative_first_appearance(dl: DiffusionList, user: str) -> float:
    """1-based position of the user's earliest share over the full list length."""
    try:
        pos = dl.users.index(user)
    except ValueError:
        raise KeyError(f"user {user!r} never shared {dl.url}") from None
    return (pos + 1) / len(dl.users)


@numba.njit(nogil=True, cache=True)
def _infer_parents(sharer, t, rank, indptr, dst, first_ts, slot):
    """Parent position of every sharer (-1 for roots).

    ``sharer``/``t`` are distinct sharers sorted by (first share, rank);
    ``slot`` is an all -1 scratch array over graph nodes and is left all -1.
    """
    k = len(sharer)
    parent = np.full(k, -1, dtype=np.int64)
    for a in range(k):
        if sharer[a] >= 0:
            slot[sharer[a]] = a
    prior = 0
    for a in range(k):
        ti = t[a]
        while t[prior] < ti:
            prior += 1
        i = sharer[a]
        if i < 0 or prior == 0:
            continue
        lo = indptr[i]
        hi = indptr[i + 1]
        best = -1
        if hi - lo <= prior:
            for e in range(lo, hi):
                if first_ts[e] < ti:
                    b = slot[dst[e]]
                    if b >= 0 and t[b] < ti:
                        if best < 0 or t[b] > t[best] or (t[b] == t[best] and rank[b] < rank[best]):
                            best = b
        else:
            for b in range(prior):
                j = sharer[b]
                if j < 0:
                    continue
                l = lo
                h = hi
                while l < h:
                    m = (l + h) >> 1
                    if dst[m] < j:
                        l = m + 1
                    else:
                        h = m
                if l < hi and dst[l] == j and first_ts[l] < ti:
                    if best < 0 or t[b] > t[best] or (t[b] == t[best] and rank[b] < rank[best]):
                        best = b
        parent[a] = best
    for a in range(k):
        if sharer[a] >= 0:
            slot[sharer[a]] = -1
    return parent


@numba.njit(cache=True)
def _tree_stats(parent):
    """Root position, subtree size and per-root edge-cut sum for a parent array.

    Parents always precede children, so one forward and one backward pass suffice.
    """
    k = len(parent)
    root = np.empty(k, dtype=np.int64)
    for a in range(k):
        root[a] = a if parent[a] < 0 else root[parent[a]]
    sub = np.ones(k, dtype=np.int64)
    for a in range(k - 1, -1, -1):
        if parent[a] >= 0:
            sub[parent[a]] += sub[a]
    cut = np.zeros(k, dtype=np.int64)
    for a in range(k):
        if parent[a] >= 0:
            n = sub[root[a]]
            cut[root[a]] += sub[a] * (n - sub[a])
    return root, sub, cut


@dataclass
class CascadeTree:
    url: str
    tree_id: int
    root: str
    nodes: list[str]                 # in first-share order, root first
    parent: dict[str, str]           # child -> parent
    virality: float | None = None

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass
class CascadeForest:
    url: str
    sharers: list[str]               # distinct, by (first share, user id)
    first_share: np.ndarray
    parent_pos: np.ndarray           # index into sharers, -1 for roots
    _stats: tuple | None = field(default=None, repr=False)

    @property
    def edges(self) -> list[tuple[str, str]]:
        """Influence edges as (parent, child), in child first-share order."""
        s = self.sharers
        return [(s[p], s[a]) for a, p in enumerate(self.parent_pos.tolist()) if p >= 0]

    @property
    def parent_map(self) -> dict[str, str]:
        return {c: p for p, c in self.edges}

    @property
    def roots(self) -> list[str]:
        s = self.sharers
        return [s[a] for a, p in enumerate(self.parent_pos.tolist()) if p < 0]

    def stats(self):
        if self._stats is None:
            self._stats = _tree_stats(self.parent_pos)
        return self._stats


def _sorted_sharers(names: Sequence[str], first_t: np.ndarray, rank: np.ndarray | None):
    if rank is None:
        order = sorted(range(len(names)), key=lambda a: (first_t[a], names[a]))
        order = np.array(order, dtype=np.int64)
    else:
        order = np.lexsort((rank, first_t))
    return order


def _forest(url: str, names: list[str], node: np.ndarray, first_t: np.ndarray,
            simple: SimpleDigraph, slot: np.ndarray) -> CascadeForest:
    """names/node/first_t describe distinct sharers in any order."""
    node_rank = simple.nodes.name_rank
    rank = node_rank[node] if np.all(node >= 0) else None
    order = _sorted_sharers(names, first_t, rank)
    node, first_t = node[order], first_t[order]
    names = [names[i] for i in order.tolist()]
    # rank of each sharer within this forest == position, since sorted by (t, name)
    local_rank = np.arange(len(names), dtype=np.int64)
    parent = _infer_parents(node, first_t, local_rank, simple.indptr, simple.dst,
                            simple.first_ts, slot)
    return CascadeForest(url, names, first_t, parent)


def infer_cascade_forest(dl: DiffusionList, simple: SimpleDigraph) -> CascadeForest:
    first = dl.first_shares()
    names = list(first)
    index = simple.nodes.index
    node = np.array([index.get(u, -1) for u in names], dtype=np.int64)
    first_t = np.array([first[u] for u in names], dtype=np.int64)
    slot = np.full(simple.n_nodes, -1, dtype=np.int64)
    return _forest(dl.url, names, node, first_t, simple, slot)


def extract_trees(forest: CascadeForest) -> list[CascadeTree]:
    """Connected pieces of the influence edges with two or more users."""
    root, sub, cut = forest.stats()
    parent = forest.parent_pos.tolist()
    s = forest.sharers
    members: dict[int, list[int]] = {}
    for a, r in enumerate(root.tolist()):
        members.setdefault(r, []).append(a)
    trees = []
    for r in sorted(members):
        if sub[r] < 2:
            continue
        nodes = members[r]
        n = len(nodes)
        trees.append(CascadeTree(
            url=forest.url, tree_id=len(trees), root=s[r], nodes=[s[a] for a in nodes],
            parent={s[a]: s[parent[a]] for a in nodes if parent[a] >= 0},
            virality=2 * int(cut[r]) / (n * (n - 1)),
        ))
    return trees


def structural_virality(tree: CascadeTree | Mapping[str, str], root: str | None = None) -> float:
    """Mean shortest-path distance over ordered node pairs of a tree.

    Uses the edge-cut identity: each edge separating ``s`` nodes from the other
    ``n - s`` lies on ``2 s (n - s)`` ordered paths.
    """
    if isinstance(tree, CascadeTree):
        parent, root = tree.parent, tree.root
    else:
        parent = dict(tree)
        if root is None:
            roots = set(parent.values()) - set(parent)
            if len(roots) != 1:
                raise ValueError("parent map does not describe a single tree")
            root = roots.pop()
    children: dict[str, list[str]] = {}
    for c, p in parent.items():
        children.setdefault(p, []).append(c)
    order = [root]
    for v in order:
        order.extend(children.get(v, ()))
    n = len(order)
    if n <= 1:
        raise ValueError("structural virality is undefined for trees with fewer than 2 nodes")
    if n != len(parent) + 1:
        raise ValueError("parent map is not a tree rooted at the given root")
    size = dict.fromkeys(order, 1)
    total = 0
    for v in reversed(order[1:]):
        s = size[v]
        total += s * (n - s)
        size[parent[v]] += s
    return 2 * total / (n * (n - 1))


def influence_degree(forests: Iterable[CascadeForest]) -> Counter:
    """user -> number of children summed over all forests."""
    deg: Counter = Counter()
    for f in forests:
        p = f.parent_pos[f.parent_pos >= 0]
        if len(p):
            pos, cnt = np.unique(p, return_counts=True)
            for a, c in zip(pos.tolist(), cnt.tolist()):
                deg[f.sharers[a]] += c
    return deg


@dataclass
class InitiatorCounts:
    threshold: int
    initiated: Counter
    viral: Counter                   # cascades with size > threshold


def cascade_initiators(trees: Iterable[CascadeTree], threshold: int = 1000) -> InitiatorCounts:
    initiated: Counter = Counter()
    viral: Counter = Counter()
    for t in trees:
        initiated[t.root] += 1
        if t.size > threshold:
            viral[t.root] += 1
    return InitiatorCounts(threshold, initiated, viral)


@dataclass
class CascadeSet:
    forests: list[CascadeForest]
    trees: list[CascadeTree]

    @property
    def viralities(self) -> np.ndarray:
        return np.array([t.virality for t in self.trees], dtype=float)


def select_urls(shares: ShareTable, allowed: Iterable[str] | None = None,
                min_distinct_sharers: int = 0) -> list[int]:
    """URL codes in sorted order, restricted to ``allowed`` and to URLs shared by
    more than ``min_distinct_sharers`` distinct users."""
    wanted = None if allowed is None else set(allowed)
    codes = []
    for k, url in enumerate(shares.urls):
        if wanted is not None and url not in wanted:
            continue
        sl = shares.url_slice(k)
        if min_distinct_sharers and len(np.unique(shares.user[sl])) <= min_distinct_sharers:
            continue
        codes.append(k)
    return codes


def infer_forests(shares: ShareTable, simple: SimpleDigraph, url_codes: Sequence[int],
                  workers: int = 1) -> list[CascadeForest]:
    """Forests for the given URL codes, in the order given, computed in parallel.

    The parent kernel releases the GIL, so threads share the graph without
    copying; each worker owns its scratch array.
    """
    node_of = shares.node_map(simple.nodes.index)
    names = shares.users
    # warm the lazy caches before threads read them
    simple.indptr, simple.nodes.name_rank
    local = threading.local()

    def one(k: int) -> CascadeForest:
        slot = getattr(local, "slot", None)
        if slot is None:
            slot = local.slot = np.full(simple.n_nodes, -1, dtype=np.int64)
        sl = shares.url_slice(k)
        users = shares.user[sl]
        uniq, first_idx = np.unique(users, return_index=True)
        first_t = shares.ts[sl][first_idx]
        return _forest(shares.urls[k], [names[u] for u in uniq.tolist()], node_of[uniq],
                       first_t, simple, slot)

    if workers <= 1 or len(url_codes) < 2:
        return [one(k) for k in url_codes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, url_codes, chunksize=16))


def run_cascades(shares: ShareTable, simple: SimpleDigraph, url_codes: Sequence[int],
                 workers: int = 1) -> CascadeSet:
    forests = infer_forests(shares, simple, url_codes, workers)
    trees = [t for f in forests for t in extract_trees(f)]
    return CascadeSet(forests, trees)


@dataclass
class AblationResult:
    original: CascadeSet
    ablated: CascadeSet
    max_cdf_gap: float | None

    def summary_rows(self) -> list[tuple[str, object]]:
        o, a = self.original, self.ablated
        return [
            ("trees_original", len(o.trees)),
            ("trees_ablated", len(a.trees)),
            ("mean_virality_original", float(o.viralities.mean()) if o.trees else ""),
            ("mean_virality_ablated", float(a.viralities.mean()) if a.trees else ""),
            ("max_cdf_gap", "" if self.max_cdf_gap is None else self.max_cdf_gap),
        ]


def _lists_to_shares(lists: Mapping[str, DiffusionList]) -> ShareTable:
    urls = sorted(lists)
    user_index: dict[str, int] = {}
    url, user, ts, eids = [], [], [], []
    for k, u in enumerate(urls):
        dl = lists[u]
        for name, t, e in zip(dl.users, dl.ts.tolist(), dl.event_ids):
            url.append(k)
            user.append(user_index.setdefault(name, len(user_index)))
            ts.append(t)
            eids.append(e)
    return ShareTable.build(urls, list(user_index), np.array(url, dtype=np.int64),
                            np.array(user, dtype=np.int64), np.array(ts, dtype=np.int64), eids)


def ablate_trolls(lists: Mapping[str, DiffusionList] | ShareTable, simple: SimpleDigraph,
                  registry: TrollRegistry | None = None, url_codes: Sequence[int] | None = None,
                  workers: int = 1, original: CascadeSet | None = None) -> AblationResult:
    """Re-infer cascades with trolls removed from the graph and every diffusion list.

    Trolls come from ``registry`` when given, otherwise from the graph's labels.
    """
    from .stats import distribution_compare

    shares = lists if isinstance(lists, ShareTable) else _lists_to_shares(lists)
    if url_codes is None:
        url_codes = list(range(len(shares.urls)))
    if registry is not None:
        troll_node = registry.mask(simple.nodes.users)
        troll_user = registry.mask(shares.users)
    else:
        troll_node = simple.nodes.is_troll
        node_of = shares.node_map(simple.nodes.index)
        troll_user = np.zeros(len(shares.users), dtype=bool)
        ok = node_of >= 0
        troll_user[ok] = troll_node[node_of[ok]]
    if original is None:
        original = run_cascades(shares, simple, url_codes, workers)
    ablated = run_cascades(shares.without_users(troll_user), simple.without_nodes(troll_node),
                           url_codes, workers)
    gap = None
    if original.trees and ablated.trees:
        gap = distribution_compare(original.viralities, ablated.viralities)
    return AblationResult(original, ablated, gap)


# --- CSV writers -----------------------------------------------------------

TREES_HEADER = ["url", "tree_id", "root", "size", "virality"]


def write_trees(trees: Iterable[CascadeTree], fh: IO[str], ablated: int | None = None,
                header: bool = True) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(TREES_HEADER + (["ablated"] if ablated is not None else []))
    for t in trees:
        row = [t.url, t.tree_id, t.root, t.size, repr(t.virality)]
        if ablated is not None:
            row.append(ablated)
        w.writerow(row)


def write_edges(forests: Iterable[CascadeForest], fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["url", "parent", "child"])
    for f in forests:
        for p, c in f.edges:
            w.writerow([f.url, p, c])


def read_edges(path) -> dict[str, list[tuple[str, str]]]:
    out: dict[str, list[tuple[str, str]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["url"], []).append((row["parent"], row["child"]))
    return out


def trees_from_edges(url: str, edges: Sequence[tuple[str, str]],
                     first_share: Mapping[str, int] | None = None) -> list[CascadeTree]:
    """Rebuild trees from an edge dump.

    With ``first_share`` the tree ids and node order match ``extract_trees``;
    without it, edge-list order is used.
    """
    parent = {c: p for p, c in edges}
    order: list[str] = []
    seen = set()
    for p, c in edges:
        for v in (p, c):
            if v not in seen:
                seen.add(v)
                order.append(v)
    if first_share is not None:
        order.sort(key=lambda v: (first_share[v], v))
    root: dict[str, str] = {}
    for v in order:
        # parents precede children in first-share order
        root[v] = root[parent[v]] if v in parent and first_share is not None else v
    if first_share is None:
        for v in order:
            r = v
            while r in parent:
                r = parent[r]
            root[v] = r
    members: dict[str, list[str]] = {}
    for v in order:
        members.setdefault(root[v], []).append(v)
    trees = []
    for r, nodes in members.items():
        tree = CascadeTree(url, len(trees), r, nodes, {v: parent[v] for v in nodes if v in parent})
        tree.virality = structural_virality(tree)
        trees.append(tree)
    return trees


def write_influence(deg: Mapping[str, int], nodes: NodeTable, fh: IO[str]) -> None:
    """All nodes, including zero influence."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["user", "group", "influence_degree"])
    for i, u in enumerate(nodes.users):
        w.writerow([u, GROUP_NAMES[int(nodes.base[i])], deg.get(u, 0)])
