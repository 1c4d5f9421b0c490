"""Troll-URLs, spreaders and the region of influence."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import IO

import numpy as np

from .graph import NodeTable, SimpleDigraph
from .ingest import EventLog, TrollRegistry
from .shares import ShareTable

log = logging.getLogger(__name__)


@dataclass
class TrollUrlSet:
    urls: list[str]                 # sorted
    troll_share_count: np.ndarray
    first_troll_ts: np.ndarray

    def __len__(self) -> int:
        return len(self.urls)

    def __contains__(self, url: object) -> bool:
        return url in set(self.urls)

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["url", "troll_share_count", "first_troll_ts"])
        for u, c, t in zip(self.urls, self.troll_share_count.tolist(), self.first_troll_ts.tolist()):
            w.writerow([u, c, t])

    @classmethod
    def read_csv(cls, path) -> "TrollUrlSet":
        urls, counts, first = [], [], []
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.DictReader(fh)
            for row in r:
                urls.append(row["url"])
                counts.append(int(row["troll_share_count"]))
                first.append(int(row["first_troll_ts"]))
        return cls(urls, np.array(counts, dtype=np.int64), np.array(first, dtype=np.int64))


def _as_shares(events: EventLog | ShareTable) -> ShareTable:
    return events if isinstance(events, ShareTable) else ShareTable.from_log(events)


def extract_troll_urls(events: EventLog | ShareTable, registry: TrollRegistry) -> TrollUrlSet:
    """URLs appearing in at least one troll-authored event."""
    shares = _as_shares(events)
    troll_user = registry.mask(shares.users)
    hit = troll_user[shares.user]
    url, ts = shares.url[hit], shares.ts[hit]
    codes, counts = np.unique(url, return_counts=True)
    first = np.full(len(shares.urls), np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, url, ts)
    if len(codes) == 0:
        log.warning("no troll-authored URL shares; troll-URL set is empty")
    return TrollUrlSet([shares.urls[c] for c in codes.tolist()], counts.astype(np.int64), first[codes])


def troll_url_mask(shares: ShareTable, troll_urls: TrollUrlSet) -> np.ndarray:
    """Per URL code of ``shares``: is it a troll-URL."""
    wanted = set(troll_urls.urls)
    return np.fromiter((u in wanted for u in shares.urls), dtype=bool, count=len(shares.urls))


def identify_spreaders(events: EventLog | ShareTable, troll_urls: TrollUrlSet,
                       nodes: NodeTable | None = None) -> frozenset[str]:
    """Users who authored at least one share of a troll-URL.

    When ``nodes`` is given the spreader flags of that table are overwritten.
    """
    shares = _as_shares(events)
    hit = troll_url_mask(shares, troll_urls)[shares.url]
    users = frozenset(shares.users[i] for i in np.unique(shares.user[hit]).tolist())
    if nodes is not None:
        flags = np.zeros(len(nodes), dtype=bool)
        idx = nodes.index
        for u in users:
            i = idx.get(u)
            if i is not None:
                flags[i] = True
        nodes.spreader = flags
    return users


@dataclass
class RegionOfInfluence:
    """Simple-graph edges among spreaders; node table is the spreader set."""
    graph: SimpleDigraph

    @property
    def nodes(self) -> NodeTable:
        return self.graph.nodes

    def group_counts(self) -> dict[str, int]:
        return self.nodes.group_counts()

    def summary_rows(self) -> list[tuple[str, int]]:
        rows = [("nodes", self.graph.n_nodes), ("edges", self.graph.n_edges)]
        rows += [(f"{g}_nodes", c) for g, c in self.group_counts().items()]
        return rows


def induced_subgraph(simple: SimpleDigraph, spreaders: np.ndarray | frozenset[str] | set[str]) -> RegionOfInfluence:
    if isinstance(spreaders, (set, frozenset)):
        mask = np.fromiter((u in spreaders for u in simple.nodes.users), dtype=bool, count=simple.n_nodes)
    else:
        mask = np.asarray(spreaders, dtype=bool)
    nodes, remap = simple.nodes.subset(mask)
    nodes.spreader = np.ones(len(nodes), dtype=bool)
    keep = mask[simple.src] & mask[simple.dst]
    sub = SimpleDigraph(nodes, remap[simple.src[keep]], remap[simple.dst[keep]],
                        simple.first_ts[keep], simple.first_kind[keep])
    return RegionOfInfluence(sub)

