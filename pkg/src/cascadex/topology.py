"""Connected components and k-core decomposition of undirected graphs."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numba
import numpy as np

from .graph import UndirectedGraph


@numba.njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True)
def _union_find_labels(n, indptr, indices):
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for u in range(n):
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if v <= u:
                continue
            ru = _find(parent, u)
            rv = _find(parent, v)
            if ru == rv:
                continue
            if size[ru] < size[rv]:
                ru, rv = rv, ru
            parent[rv] = ru
            size[ru] += size[rv]
    # dense ids in order of each component's smallest node index
    label = np.full(n, -1, dtype=np.int64)
    root_label = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for u in range(n):
        r = _find(parent, u)
        if root_label[r] < 0:
            root_label[r] = nxt
            nxt += 1
        label[u] = root_label[r]
    return label


@numba.njit(cache=True)
def _bucket_core(n, indptr, indices):
    deg = np.empty(n, dtype=np.int64)
    md = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] > md:
            md = deg[v]
    bin_start = np.zeros(md + 1, dtype=np.int64)
    for v in range(n):
        bin_start[deg[v]] += 1
    start = 0
    for d in range(md + 1):
        num = bin_start[d]
        bin_start[d] = start
        start += num
    pos = np.empty(n, dtype=np.int64)
    vert = np.empty(n, dtype=np.int64)
    for v in range(n):
        pos[v] = bin_start[deg[v]]
        vert[pos[v]] = v
        bin_start[deg[v]] += 1
    for d in range(md, 0, -1):
        bin_start[d] = bin_start[d - 1]
    if md >= 0 and n > 0:
        bin_start[0] = 0
    for i in range(n):
        v = vert[i]
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            if deg[u] > deg[v]:
                du = deg[u]
                pu = pos[u]
                pw = bin_start[du]
                w = vert[pw]
                if u != w:
                    pos[u] = pw
                    vert[pu] = w
                    pos[w] = pu
                    vert[pw] = u
                bin_start[du] += 1
                deg[u] -= 1
    return deg


@dataclass
class ComponentAssignment:
    labels: np.ndarray      # per-node component id, dense from 0
    sizes: np.ndarray       # size of each component id

    @property
    def n_components(self) -> int:
        return len(self.sizes)

    def histogram(self) -> dict[int, int]:
        """component size -> number of components of that size"""
        s, c = np.unique(self.sizes, return_counts=True)
        return {int(a): int(b) for a, b in zip(s, c)}


@dataclass
class CorenessMap:
    coreness: np.ndarray

    @property
    def max_coreness(self) -> int:
        return int(self.coreness.max()) if len(self.coreness) else 0

    def in_max_core(self) -> np.ndarray:
        return self.coreness == self.max_coreness if len(self.coreness) else self.coreness.astype(bool)


def connected_components(g: UndirectedGraph) -> ComponentAssignment:
    labels = _union_find_labels(g.n_nodes, g.indptr, g.indices)
    return ComponentAssignment(labels, np.bincount(labels).astype(np.int64))


def largest_component(g: UndirectedGraph, comps: ComponentAssignment | None = None) -> UndirectedGraph:
    """Induced subgraph of the biggest component; ties go to the smallest user id."""
    if g.n_nodes == 0:
        return g
    if comps is None:
        comps = connected_components(g)
    best = comps.sizes.max()
    tied = np.flatnonzero(comps.sizes == best)
    if len(tied) == 1:
        pick = tied[0]
    else:
        rank = g.nodes.name_rank
        min_rank = np.full(comps.n_components, np.iinfo(np.int64).max)
        np.minimum.at(min_rank, comps.labels, rank)
        pick = tied[np.argmin(min_rank[tied])]
    return g.subgraph(comps.labels == pick)


def k_core_decomposition(g: UndirectedGraph) -> CorenessMap:
    """Coreness by bucket peeling (Batagelj-Zaversnik), O(n + m)."""
    return CorenessMap(_bucket_core(g.n_nodes, g.indptr, g.indices))


def write_histogram(comps: ComponentAssignment, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["size", "count"])
    for size, count in sorted(comps.histogram().items()):
        w.writerow([size, count])
