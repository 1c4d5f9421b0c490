import io
import json
import logging

import pytest
from hypothesis import given, strategies as st

from cascadex.ingest import (ActionEvent, EventLog, IngestError, MalformedUrlError, load_troll_registry,
                             normalize_url, parse_event_stream, write_events)


@pytest.mark.parametrize("raw, expected", [
    ("HTTP://Example.com/A#frag", "http://example.com/A"),
    ("http://a.b/x", "http://a.b/x"),
    (" http://a.b/x ", "http://a.b/x"),
    ("https://User@HOST.org:8080/Path?q=1", "https://User@host.org:8080/Path?q=1"),
])
def test_normalize_url(raw, expected):
    assert normalize_url(raw) == expected


def test_normalize_idempotent_on_examples():
    for raw in ["HTTP://Example.com/A#frag", " http://a.b/x "]:
        once = normalize_url(raw)
        assert normalize_url(once) == once


def test_malformed_url_lenient_and_strict():
    assert normalize_url("  not a url ") == "not a url"
    with pytest.raises(MalformedUrlError):
        normalize_url("not a url", strict=True)
    with pytest.raises(ValueError):
        normalize_url("   ")


@given(st.text(alphabet="abcXYZ019-./", min_size=1, max_size=20),
       st.text(alphabet="abcXYZ019/?=&", max_size=20))
def test_normalize_fixed_point(host, rest):
    url = normalize_url(f"HtTp://{host}/{rest}")
    assert normalize_url(url) == url


def tsv(*rows):
    return io.StringIO("".join("\t".join(r) + "\n" for r in rows))


def test_three_valid_lines():
    src = tsv(("e1", "a", "1", "", "", "http://u/1"),
              ("e2", "b", "2", "a", "", ""),
              ("e3", "c", "3", "", "a,b", ""))
    log, rep = parse_event_stream(src)
    assert (len(log), rep.events, rep.error_count, rep.lines) == (3, 3, 0, 3)
    assert log.event(2).mentions == ("a", "b")
    assert log.event(1).reply_to == "a"


def test_malformed_line_reported_with_number():
    src = tsv(("e1", "a", "1", "", "", ""),
              ("e2", "b", "oops", "", "", ""),
              ("e3", "c", "3", "", "", ""))
    log, rep = parse_event_stream(src)
    assert len(log) == 2
    assert rep.error_count == 1
    assert rep.errors[0][0] == 2


def test_duplicate_event_id_rejected():
    src = tsv(("e1", "a", "1", "", "", ""), ("e1", "b", "2", "", "", ""))
    log, rep = parse_event_stream(src)
    assert len(log) == 1 and rep.error_count == 1
    assert log.event(0).author == "a"


@pytest.mark.parametrize("row", [
    ("e1", "a", "1", "a", "", ""),          # reply to self
    ("e1", "a", "1", "", "a", ""),          # self-mention
    ("e1", "a", "1", "", "b,b", ""),        # duplicate mention
    ("e1", "", "1", "", "", ""),            # no author
    ("e1", "a", "-4", "", "", ""),          # negative ts
    ("e1", "a", "1", "", ""),               # wrong arity
])
def test_invariant_violations_skipped(row):
    log, rep = parse_event_stream(tsv(row))
    assert len(log) == 0 and rep.error_count == 1


def test_strict_urls_rejects_record():
    row = ("e1", "a", "1", "", "", "nonsense")
    assert parse_event_stream(tsv(row))[1].error_count == 0
    log, rep = parse_event_stream(tsv(row), strict_urls=True)
    assert len(log) == 0 and rep.error_count == 1


def test_urls_normalized_and_deduplicated_per_event():
    log, _ = parse_event_stream(tsv(("e1", "a", "1", "", "", "HTTP://X.org/p#1,http://x.org/p")))
    assert log.event(0).urls == ("http://x.org/p",)


def test_jsonl_and_binary_source():
    lines = [json.dumps({"event_id": "e1", "author": "a", "ts": 3, "mentions": ["b"], "urls": []}),
             json.dumps({"event_id": "e2", "author": "b", "ts": "x"}),
             "{broken"]
    log, rep = parse_event_stream(io.BytesIO(("\n".join(lines) + "\n").encode()), fmt="jsonl")
    assert len(log) == 1 and rep.error_count == 2
    assert [e for e, _ in rep.errors] == [2, 3]


def test_unreadable_source_is_fatal(tmp_path):
    with pytest.raises(IngestError):
        parse_event_stream(tmp_path / "absent.tsv")


def test_bad_utf8_is_fatal():
    with pytest.raises(IngestError):
        parse_event_stream(io.BytesIO(b"e1\ta\t1\t\t\t\n\xff\xfe\n"))


events_strategy = st.lists(
    st.tuples(st.sampled_from("abcdef"), st.integers(0, 50), st.sampled_from([None, "a", "b"]),
              st.lists(st.sampled_from("cdef"), unique=True, max_size=3),
              st.lists(st.sampled_from(["http://h/1", "http://h/2"]), unique=True, max_size=2)),
    max_size=15)


@given(events_strategy, st.sampled_from(["tsv", "jsonl"]))
def test_write_parse_round_trip(rows, fmt):
    events = []
    for k, (author, ts, reply, mentions, urls) in enumerate(rows):
        if reply == author:
            reply = None
        events.append(ActionEvent(f"e{k}", author, ts, reply,
                                  tuple(m for m in mentions if m != author), tuple(urls)))
    buf = io.StringIO()
    write_events(events, buf, fmt)
    buf.seek(0)
    log, rep = parse_event_stream(buf, fmt=fmt)
    assert rep.error_count == 0
    assert list(log) == events


def test_from_events_raises_on_bad_record():
    with pytest.raises(ValueError):
        EventLog.from_events([ActionEvent("e1", "a", 1, reply_to="a")])


def write(tmp_path, text):
    p = tmp_path / "trolls.txt"
    p.write_text(text)
    return p


def test_registry_comments_and_duplicates(tmp_path):
    assert load_troll_registry(write(tmp_path, "a\n#c\nb\n")).ids == {"a", "b"}
    assert load_troll_registry(write(tmp_path, "a\na\n")).ids == {"a"}


def test_empty_registry_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        reg = load_troll_registry(write(tmp_path, ""))
    assert len(reg) == 0
    assert "empty" in caplog.text
