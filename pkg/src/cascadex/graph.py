"""Interaction multigraph and its simple / undirected projections."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import IO

import numpy as np

from .ingest import EventLog, TrollRegistry

OTHER, EGO_NET, TROLL = 0, 1, 2
GROUP_NAMES = {OTHER: "other", EGO_NET: "ego_net", TROLL: "troll"}
REPLY, MENTION = 0, 1
KIND_NAMES = {REPLY: "reply", MENTION: "mention"}


class NodeTable:
    """Dense node index <-> user id, plus the group label of every node.

    Graphs built here order nodes by user id, so index order is name order;
    ``name_rank`` covers tables that arrive in some other order.
    """

    def __init__(self, users: list[str], base: np.ndarray, spreader: np.ndarray | None = None):
        self.users = users
        self.base = np.asarray(base, dtype=np.uint8)
        self.spreader = (np.zeros(len(users), dtype=bool) if spreader is None
                         else np.asarray(spreader, dtype=bool))

    def __len__(self) -> int:
        return len(self.users)

    @cached_property
    def index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.users)}

    @cached_property
    def name_rank(self) -> np.ndarray:
        users = self.users
        if all(users[i] < users[i + 1] for i in range(len(users) - 1)):
            return np.arange(len(users), dtype=np.int64)
        order = sorted(range(len(users)), key=users.__getitem__)
        rank = np.empty(len(users), dtype=np.int64)
        rank[order] = np.arange(len(users))
        return rank

    @property
    def is_troll(self) -> np.ndarray:
        return self.base == TROLL

    def group_of(self, i: int) -> str:
        return GROUP_NAMES[int(self.base[i])]

    def subset(self, keep: np.ndarray) -> tuple["NodeTable", np.ndarray]:
        """Restrict to the nodes flagged in ``keep``.

        Returns the new table and an old->new index map (-1 for dropped nodes).
        """
        keep = np.asarray(keep, dtype=bool)
        kept = np.flatnonzero(keep)
        remap = np.full(len(self), -1, dtype=np.int64)
        remap[kept] = np.arange(len(kept))
        users = self.users
        table = NodeTable([users[i] for i in kept], self.base[kept], self.spreader[kept])
        return table, remap

    def group_counts(self, mask: np.ndarray | None = None) -> dict[str, int]:
        base = self.base if mask is None else self.base[mask]
        counts = np.bincount(base, minlength=3)
        return {GROUP_NAMES[g]: int(counts[g]) for g in (TROLL, EGO_NET, OTHER)}


@dataclass
class InteractionMultigraph:
    """Directed multigraph, one edge per reply or mention action.

    Edges are sorted by (src, ts, dst, kind), which makes the structure
    independent of input event order.
    """
    nodes: NodeTable
    src: np.ndarray
    dst: np.ndarray
    ts: np.ndarray
    kind: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.src)


@dataclass
class SimpleDigraph:
    """At most one edge per ordered pair, in CSR form sorted by (src, dst).

    ``first_ts`` is the earliest timestamp among the collapsed parallel edges and
    ``first_kind`` the kind of that earliest edge.
    """
    nodes: NodeTable
    src: np.ndarray
    dst: np.ndarray
    first_ts: np.ndarray
    first_kind: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @cached_property
    def indptr(self) -> np.ndarray:
        return _indptr(self.src, self.n_nodes)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n_nodes).astype(np.int64)

    def edge_time(self, i: int, j: int) -> int | None:
        """first_ts of edge i->j, or None."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = lo + np.searchsorted(self.dst[lo:hi], j)
        if k < hi and self.dst[k] == j:
            return int(self.first_ts[k])
        return None

    def without_nodes(self, drop: np.ndarray) -> "SimpleDigraph":
        """Same node table, with every edge incident to a dropped node removed."""
        keep = ~(drop[self.src] | drop[self.dst])
        return SimpleDigraph(self.nodes, self.src[keep], self.dst[keep],
                             self.first_ts[keep], self.first_kind[keep])

    def to_multigraph(self) -> InteractionMultigraph:
        """View as a multigraph with one edge per pair (used for region snapshots)."""
        return InteractionMultigraph(self.nodes, self.src, self.dst, self.first_ts, self.first_kind)


@dataclass
class UndirectedGraph:
    """Simple undirected graph as a symmetric CSR adjacency (neighbours sorted)."""
    nodes: NodeTable
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.indices) // 2

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Each undirected edge once, as (u, v) with u < v."""
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degree())
        keep = rows < self.indices
        return rows[keep], self.indices[keep]

    def subgraph(self, keep: np.ndarray) -> "UndirectedGraph":
        nodes, remap = self.nodes.subset(keep)
        u, v = self.edges()
        ok = keep[u] & keep[v]
        return _undirected_from_pairs(nodes, remap[u[ok]], remap[v[ok]])

    @classmethod
    def from_edges(cls, users: list[str], pairs) -> "UndirectedGraph":
        """Convenience constructor from user-id pairs (nodes in the given order)."""
        nodes = NodeTable(list(users), np.zeros(len(users), dtype=np.uint8))
        idx = nodes.index
        pairs = list(pairs)
        u = np.array([idx[a] for a, _ in pairs], dtype=np.int64)
        v = np.array([idx[b] for _, b in pairs], dtype=np.int64)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        if np.any(lo == hi):
            raise ValueError("self-loops are not allowed")
        return _undirected_from_pairs(nodes, lo, hi)


def _indptr(rows: np.ndarray, n: int) -> np.ndarray:
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=ptr[1:])
    return ptr


def _undirected_from_pairs(nodes: NodeTable, lo: np.ndarray, hi: np.ndarray) -> UndirectedGraph:
    n = len(nodes)
    key = np.unique(lo.astype(np.int64) * n + hi)
    lo, hi = key // n, key % n
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    return UndirectedGraph(nodes, _indptr(rows, n), cols)


def build_multigraph(events: EventLog, registry: TrollRegistry) -> InteractionMultigraph:
    """One edge author->reply_to per reply, one edge author->m per mention."""
    is_reply = events.reply_to >= 0
    n_mentions = np.diff(events.mention_ptr)
    src = np.concatenate([events.authors[is_reply], np.repeat(events.authors, n_mentions)])
    dst = np.concatenate([events.reply_to[is_reply], events.mention_idx])
    ts = np.concatenate([events.ts[is_reply], np.repeat(events.ts, n_mentions)])
    kind = np.concatenate([np.full(int(is_reply.sum()), REPLY, dtype=np.uint8),
                           np.full(len(events.mention_idx), MENTION, dtype=np.uint8)])

    referenced = np.unique(np.concatenate([events.authors, dst]))
    names = events.users
    ordered = sorted(referenced.tolist(), key=names.__getitem__)
    remap = np.full(len(names), -1, dtype=np.int64)
    remap[ordered] = np.arange(len(ordered))
    users = [names[i] for i in ordered]
    src, dst = remap[src], remap[dst]

    order = np.lexsort((kind, dst, ts, src))
    src, dst, ts, kind = src[order], dst[order], ts[order], kind[order]
    nodes = NodeTable(users, label_groups(len(users), registry.mask(users), src, dst))
    return InteractionMultigraph(nodes, src, dst, ts, kind)


def label_groups(n: int, troll: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Troll / ego-net / other; ego-net means a real user with any edge to or from a troll."""
    touched = np.zeros(n, dtype=bool)
    touched[src[troll[dst]]] = True
    touched[dst[troll[src]]] = True
    base = np.full(n, OTHER, dtype=np.uint8)
    base[touched] = EGO_NET
    base[troll] = TROLL
    return base


def project_simple(g: InteractionMultigraph) -> SimpleDigraph:
    n = max(g.n_nodes, 1)
    key = g.src * n + g.dst
    order = np.lexsort((g.kind, g.ts, key))
    key_sorted = key[order]
    first = np.ones(len(key_sorted), dtype=bool)
    first[1:] = key_sorted[1:] != key_sorted[:-1]
    pick = order[first]
    return SimpleDigraph(g.nodes, g.src[pick], g.dst[pick], g.ts[pick], g.kind[pick])


def to_undirected(g: SimpleDigraph) -> UndirectedGraph:
    return _undirected_from_pairs(g.nodes, np.minimum(g.src, g.dst), np.maximum(g.src, g.dst))


DEGREE_HEADER = ["user", "group", "spreader", "in_multi", "out_multi", "in_simple", "out_simple"]


@dataclass
class DegreeProfile:
    nodes: NodeTable
    in_multi: np.ndarray
    out_multi: np.ndarray
    in_simple: np.ndarray
    out_simple: np.ndarray

    def partition(self, column: str) -> dict[tuple[str, bool], np.ndarray]:
        """Values of one degree column split by (group, spreader)."""
        values = getattr(self, column)
        out = {}
        for g, name in GROUP_NAMES.items():
            for sp in (True, False):
                mask = (self.nodes.base == g) & (self.nodes.spreader == sp)
                out[(name, sp)] = values[mask]
        return out

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DEGREE_HEADER)
        users, base, sp = self.nodes.users, self.nodes.base, self.nodes.spreader
        cols = [self.in_multi.tolist(), self.out_multi.tolist(),
                self.in_simple.tolist(), self.out_simple.tolist()]
        for i, u in enumerate(users):
            w.writerow([u, GROUP_NAMES[int(base[i])], int(sp[i]),
                        cols[0][i], cols[1][i], cols[2][i], cols[3][i]])


def degree_profile(multi: InteractionMultigraph, simple: SimpleDigraph | None = None) -> DegreeProfile:
    if simple is None:
        simple = project_simple(multi)
    n = multi.n_nodes
    return DegreeProfile(
        multi.nodes,
        np.bincount(multi.dst, minlength=n).astype(np.int64),
        np.bincount(multi.src, minlength=n).astype(np.int64),
        simple.in_degree(),
        simple.out_degree(),
    )
