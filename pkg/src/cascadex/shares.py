"""URL share events, grouped per URL in chronological order."""
from __future__ import annotations

import bisect
import csv
from pathlib import Path
from typing import IO

import numpy as np

from .ingest import EventLog

SHARES_HEADER = ["url", "user", "ts", "event_id"]


class ShareTable:
    """Every (event, url) pair, sorted by url, then ts, then event_id.

    URLs are indexed in lexicographic order, so ``url_ptr`` slices come out in
    URL-sorted order. A share is any authored event carrying the URL.
    """

    def __init__(self, urls: list[str], users: list[str], url: np.ndarray, user: np.ndarray,
                 ts: np.ndarray, event_ids: list[str]):
        self.urls = urls
        self.users = users
        self.url = url
        self.user = user
        self.ts = ts
        self.event_ids = event_ids
        self.url_ptr = np.zeros(len(urls) + 1, dtype=np.int64)
        np.cumsum(np.bincount(url, minlength=len(urls)), out=self.url_ptr[1:])

    def __len__(self) -> int:
        return len(self.url)

    @classmethod
    def build(cls, urls: list[str], users: list[str], url: np.ndarray, user: np.ndarray,
              ts: np.ndarray, event_ids: list[str]) -> "ShareTable":
        """Sort and re-index raw share columns (url/user index into the given tables)."""
        url = np.asarray(url, dtype=np.int64)
        used = np.unique(url)
        ordered = sorted(used.tolist(), key=urls.__getitem__)
        remap = np.full(len(urls), -1, dtype=np.int64)
        remap[ordered] = np.arange(len(ordered))
        url = remap[url]
        eid = np.array(event_ids) if event_ids else np.zeros(0, dtype="U1")
        order = np.lexsort((eid, ts, url))
        return cls([urls[i] for i in ordered], users, url[order],
                   np.asarray(user, dtype=np.int64)[order], np.asarray(ts, dtype=np.int64)[order],
                   [event_ids[i] for i in order.tolist()])

    @classmethod
    def from_log(cls, events: EventLog) -> "ShareTable":
        per_event = np.diff(events.url_ptr)
        ev = np.repeat(np.arange(len(events), dtype=np.int64), per_event)
        eids = events.event_ids
        return cls.build(events.urls, events.users, events.url_idx, events.authors[ev],
                         events.ts[ev], [eids[i] for i in ev.tolist()])

    def url_slice(self, k: int) -> slice:
        return slice(int(self.url_ptr[k]), int(self.url_ptr[k + 1]))

    def url_code(self, url: str) -> int:
        k = bisect.bisect_left(self.urls, url)
        if k < len(self.urls) and self.urls[k] == url:
            return k
        raise KeyError(url)

    def node_map(self, index: dict[str, int]) -> np.ndarray:
        """share-user index -> node index of some graph (-1 if absent)."""
        return np.fromiter((index.get(u, -1) for u in self.users), dtype=np.int64, count=len(self.users))

    def without_users(self, drop: np.ndarray) -> "ShareTable":
        """Drop every share whose author is flagged in ``drop`` (indexed like ``users``)."""
        keep = ~drop[self.user]
        idx = np.flatnonzero(keep)
        return ShareTable(self.urls, self.users, self.url[keep], self.user[keep], self.ts[keep],
                          [self.event_ids[i] for i in idx.tolist()])

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SHARES_HEADER)
        urls, users = self.urls, self.users
        for u, a, t, e in zip(self.url.tolist(), self.user.tolist(), self.ts.tolist(), self.event_ids):
            w.writerow([urls[u], users[a], t, e])

    @classmethod
    def read_csv(cls, path: str | Path) -> "ShareTable":
        url_index: dict[str, int] = {}
        user_index: dict[str, int] = {}
        url, user, ts, eids = [], [], [], []
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r, None)
            if header != SHARES_HEADER:
                raise ValueError(f"{path}: expected header {','.join(SHARES_HEADER)}")
            for row in r:
                u, a, t, e = row
                url.append(url_index.setdefault(u, len(url_index)))
                user.append(user_index.setdefault(a, len(user_index)))
                ts.append(int(t))
                eids.append(e)
        return cls.build(list(url_index), list(user_index), np.array(url, dtype=np.int64),
                         np.array(user, dtype=np.int64), np.array(ts, dtype=np.int64), eids)
