"""Event-log and troll-registry ingestion.

Events are held column-wise (``EventLog``) because real logs run to tens of
millions of records; ``ActionEvent`` is the per-record view used at API edges
and in tests.
"""
from __future__ import annotations

import io
import json
import logging
import re
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)

TSV = "tsv"
JSONL = "jsonl"

_URL_RE = re.compile(r"^([A-Za-z][A-Za-z0-9+.\-]*)://([^/?#\s]*)(.*)$", re.DOTALL)
_MAX_LOGGED_ERRORS = 50


class MalformedUrlError(ValueError):
    pass


class IngestError(RuntimeError):
    """Unreadable source; fatal."""


def normalize_url(raw: str, strict: bool = False) -> str:
    """Canonical URL string: trimmed, lowercase scheme and host, no fragment.

    Anything that does not look like ``scheme://host...`` is malformed: in
    strict mode that raises ``MalformedUrlError``, otherwise the trimmed raw
    string is returned unchanged.
    """
    if not raw or not raw.strip():
        raise ValueError("empty URL")
    s = raw.strip()
    m = _URL_RE.match(s)
    if m is None or not m.group(2):
        if strict:
            raise MalformedUrlError(f"malformed URL: {s!r}")
        return s
    scheme, netloc, rest = m.groups()
    userinfo, at, host = netloc.rpartition("@")
    netloc = f"{userinfo}{at}{host.lower()}"
    rest = rest.split("#", 1)[0]
    return f"{scheme.lower()}://{netloc}{rest}"


@dataclass(frozen=True)
class ActionEvent:
    event_id: str
    author: str
    ts: int
    reply_to: str | None = None
    mentions: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()


def _check_event(event_id: str, author: str, ts: int, reply_to: str | None,
                 mentions: Sequence[str]) -> None:
    if not event_id:
        raise ValueError("empty event_id")
    if not author:
        raise ValueError("empty author")
    if ts < 0:
        raise ValueError(f"negative timestamp {ts}")
    if reply_to == author:
        raise ValueError("reply_to equals author")
    if author in mentions:
        raise ValueError("author mentions self")
    if len(set(mentions)) != len(mentions):
        raise ValueError("duplicate mentions")
    if any(not m for m in mentions):
        raise ValueError("empty mention id")


@dataclass
class ParseReport:
    lines: int = 0
    events: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def error_count(self) -> int:
        return len(self.errors)

    def add_error(self, line_no: int, reason: str) -> None:
        if len(self.errors) < _MAX_LOGGED_ERRORS:
            log.warning("line %d rejected: %s", line_no, reason)
        elif len(self.errors) == _MAX_LOGGED_ERRORS:
            log.warning("further rejected lines not logged individually")
        self.errors.append((line_no, reason))


class EventLog:
    """Column store of parsed events.

    ``authors``, ``reply_to``, ``mention_idx`` index into ``users``;
    ``url_idx`` indexes into ``urls``. Mentions and urls of event ``i`` are
    ``mention_idx[mention_ptr[i]:mention_ptr[i+1]]`` (likewise for urls).
    ``reply_to`` is -1 when the event is not a reply.
    """

    def __init__(self, event_ids: list[str], users: list[str], urls: list[str],
                 authors: np.ndarray, ts: np.ndarray, reply_to: np.ndarray,
                 mention_ptr: np.ndarray, mention_idx: np.ndarray,
                 url_ptr: np.ndarray, url_idx: np.ndarray):
        self.event_ids = event_ids
        self.users = users
        self.urls = urls
        self.authors = authors
        self.ts = ts
        self.reply_to = reply_to
        self.mention_ptr = mention_ptr
        self.mention_idx = mention_idx
        self.url_ptr = url_ptr
        self.url_idx = url_idx

    def __len__(self) -> int:
        return len(self.event_ids)

    def event(self, i: int) -> ActionEvent:
        users = self.users
        r = int(self.reply_to[i])
        ms = self.mention_idx[self.mention_ptr[i]:self.mention_ptr[i + 1]]
        us = self.url_idx[self.url_ptr[i]:self.url_ptr[i + 1]]
        return ActionEvent(
            event_id=self.event_ids[i],
            author=users[self.authors[i]],
            ts=int(self.ts[i]),
            reply_to=users[r] if r >= 0 else None,
            mentions=tuple(users[m] for m in ms),
            urls=tuple(self.urls[u] for u in us),
        )

    def __iter__(self) -> Iterator[ActionEvent]:
        for i in range(len(self)):
            yield self.event(i)

    @classmethod
    def from_events(cls, events: Iterable[ActionEvent], strict_urls: bool = False) -> "EventLog":
        """Build a log from records, validating each (raises on the first bad one)."""
        b = _Builder(strict_urls)
        for ev in events:
            b.add(ev.event_id, ev.author, int(ev.ts), ev.reply_to or None,
                  list(ev.mentions), list(ev.urls))
        return b.finish()


class _Builder:
    def __init__(self, strict_urls: bool):
        self.strict_urls = strict_urls
        self.event_ids: list[str] = []
        self.seen: set[str] = set()
        self.user_index: dict[str, int] = {}
        self.url_index: dict[str, int] = {}
        self.raw_url_index: dict[str, int] = {}
        self.authors = array("q")
        self.ts = array("q")
        self.reply_to = array("q")
        self.mention_ptr = array("q", [0])
        self.mention_idx = array("q")
        self.url_ptr = array("q", [0])
        self.url_idx = array("q")

    def _user(self, uid: str) -> int:
        idx = self.user_index.get(uid)
        if idx is None:
            idx = self.user_index[uid] = len(self.user_index)
        return idx

    def url_code(self, raw: str) -> int:
        """Intern a raw URL; normalization runs once per distinct raw string."""
        code = self.raw_url_index.get(raw)
        if code is None:
            norm = normalize_url(raw, self.strict_urls)
            code = self.url_index.get(norm)
            if code is None:
                code = self.url_index[norm] = len(self.url_index)
            self.raw_url_index[raw] = code
        return code

    def add(self, event_id: str, author: str, ts: int, reply_to: str | None,
            mentions: list[str], urls: list[str]) -> None:
        _check_event(event_id, author, ts, reply_to, mentions)
        if event_id in self.seen:
            raise ValueError(f"duplicate event_id {event_id!r}")
        self._append(event_id, author, ts, reply_to, mentions, [self.url_code(u) for u in urls])

    def _append(self, event_id, author, ts, reply_to, mentions, url_codes) -> None:
        self.seen.add(event_id)
        self.event_ids.append(event_id)
        self.authors.append(self._user(author))
        self.ts.append(ts)
        self.reply_to.append(self._user(reply_to) if reply_to else -1)
        for m in mentions:
            self.mention_idx.append(self._user(m))
        self.mention_ptr.append(len(self.mention_idx))
        # an event shares a URL at most once, whatever field(s) it came from
        seen_codes = set()
        for c in url_codes:
            if c not in seen_codes:
                seen_codes.add(c)
                self.url_idx.append(c)
        self.url_ptr.append(len(self.url_idx))

    def finish(self) -> EventLog:
        def arr(a: array) -> np.ndarray:
            return np.frombuffer(a, dtype=np.int64).copy() if len(a) else np.zeros(0, np.int64)

        users = [None] * len(self.user_index)
        for u, i in self.user_index.items():
            users[i] = u
        urls = [None] * len(self.url_index)
        for u, i in self.url_index.items():
            urls[i] = u
        self.seen = set()
        return EventLog(self.event_ids, users, urls, arr(self.authors), arr(self.ts),
                        arr(self.reply_to), arr(self.mention_ptr), arr(self.mention_idx),
                        arr(self.url_ptr), arr(self.url_idx))


def _parse_tsv_line(line: str):
    f = line.split("\t")
    if len(f) != 6:
        raise ValueError(f"expected 6 tab-separated fields, found {len(f)}")
    event_id, author, ts, reply_to, mentions, urls = f
    if not ts.isdigit():
        raise ValueError(f"timestamp is not a non-negative integer: {ts!r}")
    return (event_id, author, int(ts), reply_to or None,
            mentions.split(",") if mentions else [],
            urls.split(",") if urls else [])


def _parse_json_line(line: str):
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    ts = obj.get("ts")
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ValueError(f"timestamp is not an integer: {ts!r}")
    mentions = obj.get("mentions") or []
    urls = obj.get("urls") or []
    event_id, author = obj.get("event_id"), obj.get("author")
    reply_to = obj.get("reply_to") or None
    for v in (event_id, author):
        if not isinstance(v, str):
            raise ValueError("event_id and author must be strings")
    if reply_to is not None and not isinstance(reply_to, str):
        raise ValueError("reply_to must be a string")
    if not all(isinstance(x, str) for x in [*mentions, *urls]):
        raise ValueError("mentions and urls must be lists of strings")
    return event_id, author, ts, reply_to, list(mentions), list(urls)


def parse_event_stream(source: IO[bytes] | IO[str] | str | Path, fmt: str = TSV,
                       strict_urls: bool = False) -> tuple[EventLog, ParseReport]:
    """Parse a line-delimited event log.

    Invalid lines (wrong arity, bad timestamp, invariant violations, duplicate
    event ids, malformed URLs under ``strict_urls``) are skipped and recorded
    in the report with their 1-based line number.
    """
    if fmt not in (TSV, JSONL):
        raise ValueError(f"unknown event format {fmt!r}")
    if isinstance(source, (str, Path)):
        try:
            fh = open(source, "r", encoding="utf-8", newline="\n")
        except OSError as exc:
            raise IngestError(f"cannot read events from {source}: {exc}") from exc
        with fh:
            return _parse_lines(fh, fmt, strict_urls)
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        source = io.TextIOWrapper(source, encoding="utf-8", newline="\n")
    return _parse_lines(source, fmt, strict_urls)


def _parse_lines(lines: Iterable[str], fmt: str, strict_urls: bool) -> tuple[EventLog, ParseReport]:
    parse = _parse_tsv_line if fmt == TSV else _parse_json_line
    b = _Builder(strict_urls)
    report = ParseReport()
    seen = b.seen
    url_code = b.url_code
    line_no = 0
    try:
        for line_no, line in enumerate(lines, 1):
            line = line.rstrip("\r\n")
            if not line:
                report.add_error(line_no, "empty line")
                continue
            try:
                event_id, author, ts, reply_to, mentions, urls = parse(line)
                _check_event(event_id, author, ts, reply_to, mentions)
                if event_id in seen:
                    raise ValueError(f"duplicate event_id {event_id!r}")
                codes = [url_code(u) for u in urls if u.strip()]
            except (ValueError, MalformedUrlError) as exc:
                report.add_error(line_no, str(exc))
                continue
            b._append(event_id, author, ts, reply_to, mentions, codes)
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"unreadable event source near line {line_no + 1}: {exc}") from exc
    report.lines = line_no
    events = b.finish()
    report.events = len(events)
    return events, report


def _check_field(value: str, what: str) -> str:
    if any(c in value for c in "\t\n\r,"):
        raise ValueError(f"{what} {value!r} cannot be written as TSV")
    return value


def write_events(events: EventLog | Iterable[ActionEvent], out: IO[str], fmt: str = TSV) -> None:
    """Serialize events in the input format, so that re-parsing round-trips."""
    for ev in events:
        if fmt == JSONL:
            out.write(json.dumps({
                "event_id": ev.event_id, "author": ev.author, "ts": ev.ts,
                "reply_to": ev.reply_to, "mentions": list(ev.mentions), "urls": list(ev.urls),
            }, ensure_ascii=False) + "\n")
        else:
            out.write("\t".join((
                _check_field(ev.event_id, "event_id"),
                _check_field(ev.author, "user id"),
                str(ev.ts),
                _check_field(ev.reply_to or "", "user id"),
                ",".join(_check_field(m, "user id") for m in ev.mentions),
                ",".join(ev.urls),
            )) + "\n")


@dataclass(frozen=True)
class TrollRegistry:
    ids: frozenset[str] = frozenset()

    def __contains__(self, user: object) -> bool:
        return user in self.ids

    def __len__(self) -> int:
        return len(self.ids)

    def mask(self, users: Sequence[str]) -> np.ndarray:
        ids = self.ids
        return np.fromiter((u in ids for u in users), dtype=bool, count=len(users))


def load_troll_registry(source: str | Path) -> TrollRegistry:
    """One id per line; blank lines and ``#`` comments skipped."""
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read troll registry {source}: {exc}") from exc
    ids = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ids.add(line)
    if not ids:
        log.warning("troll registry %s is empty; every user is treated as real", source)
    return TrollRegistry(frozenset(ids))
