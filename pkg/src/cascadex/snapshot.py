"""Binary graph snapshots ("IGR1").

Layout, all little-endian::

    b"IGR1" | u32 version | u64 node_count | u64 edge_count
    node_count x (u32 byte length, UTF-8 id, u8 group)
    edge_count x (u64 src, u64 dst, i64 ts, u8 kind)

The group byte holds the base label (0 other, 1 ego_net, 2 troll) in its low
bits and the spreader flag in bit 7.
"""
from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .graph import InteractionMultigraph, NodeTable

MAGIC = b"IGR1"
VERSION = 1
SPREADER_BIT = 0x80
_HEADER = struct.Struct("<4sIQQ")
_EDGE_DTYPE = np.dtype([("src", "<u8"), ("dst", "<u8"), ("ts", "<i8"), ("kind", "u1")])


class SnapshotError(RuntimeError):
    pass


def snapshot_bytes(g: InteractionMultigraph) -> bytes:
    parts = [_HEADER.pack(MAGIC, VERSION, g.n_nodes, g.n_edges)]
    codes = (g.nodes.base | np.where(g.nodes.spreader, SPREADER_BIT, 0)).astype(np.uint8).tolist()
    pack = struct.Struct("<I").pack
    for user, code in zip(g.nodes.users, codes):
        b = user.encode("utf-8")
        parts.append(pack(len(b)))
        parts.append(b)
        parts.append(bytes((code,)))
    edges = np.empty(g.n_edges, dtype=_EDGE_DTYPE)
    edges["src"] = g.src
    edges["dst"] = g.dst
    edges["ts"] = g.ts
    edges["kind"] = g.kind
    parts.append(edges.tobytes())
    return b"".join(parts)


def snapshot_save(g: InteractionMultigraph, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(snapshot_bytes(g))
    tmp.replace(path)


def _need(buf: bytes, offset: int, size: int, what: str) -> None:
    if offset + size > len(buf):
        raise SnapshotError(
            f"truncated snapshot: {what} needs {size} bytes at offset {offset}, "
            f"file has {len(buf)} bytes")


def snapshot_from_bytes(buf: bytes) -> InteractionMultigraph:
    _need(buf, 0, _HEADER.size, "header")
    magic, version, n_nodes, n_edges = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic at offset 0: found {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version at offset 4: found {version}, expected {VERSION}")
    off = _HEADER.size
    users = []
    codes = bytearray()
    unpack_len = struct.Struct("<I").unpack_from
    for _ in range(n_nodes):
        _need(buf, off, 4, "node id length")
        (length,) = unpack_len(buf, off)
        off += 4
        _need(buf, off, length + 1, "node record")
        try:
            users.append(buf[off:off + length].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise SnapshotError(f"invalid UTF-8 node id at offset {off}") from exc
        off += length
        code = buf[off]
        if code & ~SPREADER_BIT > 2:
            raise SnapshotError(f"invalid group code {code} at offset {off}")
        codes.append(code)
        off += 1
    _need(buf, off, n_edges * _EDGE_DTYPE.itemsize, "edge section")
    edges = np.frombuffer(buf, dtype=_EDGE_DTYPE, count=n_edges, offset=off)
    end = off + n_edges * _EDGE_DTYPE.itemsize
    if end != len(buf):
        raise SnapshotError(f"{len(buf) - end} trailing bytes after edge section at offset {end}")
    codes_arr = np.frombuffer(bytes(codes), dtype=np.uint8)
    src = edges["src"].astype(np.int64)
    dst = edges["dst"].astype(np.int64)
    if n_edges and (src.max() >= n_nodes or dst.max() >= n_nodes):
        raise SnapshotError(f"edge endpoint out of range in edge section at offset {off}")
    nodes = NodeTable(users, codes_arr & ~np.uint8(SPREADER_BIT), (codes_arr & SPREADER_BIT) != 0)
    return InteractionMultigraph(nodes, src, dst, edges["ts"].astype(np.int64),
                                 edges["kind"].astype(np.uint8))


def snapshot_load(path: str | Path) -> InteractionMultigraph:
    return snapshot_from_bytes(Path(path).read_bytes())


def edge_list_hash(g: InteractionMultigraph) -> str:
    """SHA-256 over node ids, labels and the full edge list."""
    h = hashlib.sha256()
    for u in g.nodes.users:
        h.update(u.encode("utf-8"))
        h.update(b"\0")
    h.update(np.ascontiguousarray(g.nodes.base).tobytes())
    h.update(np.ascontiguousarray(g.nodes.spreader).tobytes())
    for a, dt in ((g.src, "<i8"), (g.dst, "<i8"), (g.ts, "<i8"), (g.kind, "u1")):
        h.update(np.ascontiguousarray(a, dtype=dt).tobytes())
    return h.hexdigest()
