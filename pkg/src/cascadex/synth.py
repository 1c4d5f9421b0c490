"""Seeded synthetic event logs with planted cascades.

Each planted URL gets its own time window, windows never overlap, and every
planted child ``c`` of parent ``p`` gets a fresh ``c -> p`` interaction one
second before its share. Share times inside a window are at least two seconds
apart. User draws are rejected whenever an interaction planted for an earlier
URL would make some other sharer the latest eligible parent, so inference on
the generated log recovers the planted parent maps exactly. Noise interactions
all happen after the last share window and cannot change any planted parent.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

WINDOW_START = 1000
NOISE_URL_PREFIX = "http://noise.example/n"
PLANTED_URL_PREFIX = "http://planted.example/u"


class InfeasibleScenario(ValueError):
    pass


@dataclass
class ScenarioParams:
    seed: int = 42
    n_trolls: int = 20
    n_real: int = 2000
    n_urls: int = 30
    activity_exponent: float = 2.2
    horizon: int = 47 * 86400
    tree_size_min: int = 2
    tree_size_max: int = 200
    trees_per_url: int = 3
    singletons_per_url: int = 5
    repeat_share_prob: float = 0.2
    noise_events: int = 5000
    noise_urls: int = 50
    noise_shares: int = 2000
    score_slope: float = -1.0
    score_noise: float = 0.1
    # optional explicit shapes: one parent array per planted URL (-1 = root, parents first)
    tree_shapes: list[list[int]] | None = None

    def validate(self) -> None:
        counts = ("n_trolls", "n_real", "n_urls", "noise_events", "noise_urls", "noise_shares",
                  "tree_size_min", "tree_size_max", "trees_per_url", "singletons_per_url")
        for name in counts:
            if getattr(self, name) < 0:
                raise InfeasibleScenario(f"{name} must be >= 0")
        if not self.activity_exponent > 1:
            raise InfeasibleScenario("activity_exponent must be > 1")
        if self.horizon <= 0:
            raise InfeasibleScenario("horizon must be > 0")
        if self.tree_size_min < 1 or self.tree_size_max < self.tree_size_min:
            raise InfeasibleScenario("need 1 <= tree_size_min <= tree_size_max")
        if not 0 <= self.repeat_share_prob <= 1:
            raise InfeasibleScenario("repeat_share_prob must lie in [0, 1]")
        if self.noise_shares and not self.noise_urls:
            raise InfeasibleScenario("noise_shares needs noise_urls > 0")
        if self.tree_shapes is not None:
            for shape in self.tree_shapes:
                _check_shape(shape)


def _check_shape(parent: Sequence[int]) -> None:
    if not parent or parent[0] != -1:
        raise InfeasibleScenario("tree shape must start with its root (-1)")
    for i, p in enumerate(parent[1:], 1):
        if not 0 <= p < i:
            raise InfeasibleScenario(f"tree shape node {i} has parent {p}; parents must come first")


class _Sampler:
    """Weighted index draws with an inverse-CDF table and buffered uniforms."""

    def __init__(self, weights: np.ndarray, rng: np.random.Generator):
        self.cdf = np.cumsum(weights) / weights.sum()
        self.rng = rng
        self.buf = np.empty(0)
        self.pos = 0

    def draw(self) -> int:
        if self.pos >= len(self.buf):
            self.buf = np.searchsorted(self.cdf, self.rng.random(4096), side="right")
            np.minimum(self.buf, len(self.cdf) - 1, out=self.buf)
            self.pos = 0
        v = int(self.buf[self.pos])
        self.pos += 1
        return v


def _draw_user(sampler: _Sampler | None, offset: int, share_time: dict[int, int],
               out_edges: list[set[int]], parent: int, attempts: int = 500) -> int:
    """A user not yet sharing this URL whose eligible parents leave ``parent``
    (or nobody, for a root) as the latest one; -1 if none found."""
    if sampler is None:
        return -1
    for _ in range(attempts):
        c = sampler.draw() + offset
        if c in share_time:
            continue
        eligible = [j for j in out_edges[c] if j in share_time]
        if parent < 0:
            if not eligible:
                return c
        elif all(share_time[j] <= share_time[parent] for j in eligible):
            return c
    return -1


def _random_tree(size: int, rng: np.random.Generator) -> list[int]:
    """Preferential-attachment recursive tree as a parent array."""
    parent = [-1]
    weight = [1.0]
    for i in range(1, size):
        w = np.asarray(weight)
        p = int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right"))
        p = min(p, i - 1)
        parent.append(p)
        weight[p] += 1.0
        weight.append(1.0)
    return parent


@dataclass
class Scenario:
    users: list[str]
    trolls: list[str]
    events: list[tuple]                     # (author, ts, reply_to, mentions, urls)
    ground_truth: list[tuple[str, str, str]]   # (url, parent, child)
    planted_urls: list[str]
    planted_trees: dict[str, list[list[str]]] = field(default_factory=dict)
    influence: dict[str, int] = field(default_factory=dict)
    scores: dict[str, float] = field(default_factory=dict)
    noise: tuple | None = None               # vectorized noise columns, written lazily

    @property
    def parent_maps(self) -> dict[str, dict[str, str]]:
        out: dict[str, dict[str, str]] = {}
        for url, p, c in self.ground_truth:
            out.setdefault(url, {})[c] = p
        return out


def plant(params: ScenarioParams) -> Scenario:
    params.validate()
    rng = np.random.default_rng(params.seed)
    nt, nr = params.n_trolls, params.n_real
    trolls = [f"t{i:06d}" for i in range(nt)]
    reals = [f"u{i:07d}" for i in range(nr)]
    users = trolls + reals                     # user code = position here
    n = len(users)
    shapes = params.tree_shapes
    n_urls = len(shapes) if shapes is not None else params.n_urls
    if n_urls and n == 0:
        raise InfeasibleScenario("no users to plant cascades on")

    a = params.activity_exponent
    activity = rng.pareto(a - 1, size=n) + 1.0
    real_sampler = _Sampler(activity[nt:], rng) if nr else None
    troll_sampler = _Sampler(activity[:nt], rng) if nt else None

    out_edges: list[set[int]] = [set() for _ in range(n)]
    events: list[tuple] = []
    truth: list[tuple[str, str, str]] = []
    trees_by_url: dict[str, list[list[str]]] = {}
    influence = np.zeros(n, dtype=np.int64)
    clock = WINDOW_START
    url_names = [f"{PLANTED_URL_PREFIX}{k:06d}" for k in range(n_urls)]

    for k, url in enumerate(url_names):
        if shapes is not None:
            trees = [list(shapes[k])]
        else:
            n_trees = int(rng.integers(1, params.trees_per_url + 1)) if params.trees_per_url else 0
            lo, hi = math.log(params.tree_size_min), math.log(params.tree_size_max + 1)
            sizes = [int(math.exp(rng.uniform(lo, hi))) for _ in range(n_trees)]
            sizes = [min(max(s, params.tree_size_min), params.tree_size_max) for s in sizes]
            trees = [_random_tree(s, rng) for s in sizes]
            trees += [[-1] for _ in range(int(rng.integers(0, params.singletons_per_url + 1)))]
        total = sum(len(t) for t in trees)
        if total > n:
            raise InfeasibleScenario(f"URL {url} needs {total} distinct users; pool has {n}")
        if total == 0:
            continue

        # random interleaving that keeps each tree's parents-first order
        remaining = [len(t) for t in trees]
        nxt = [0] * len(trees)
        schedule = []
        for _ in range(total):
            w = np.asarray(remaining, dtype=float)
            ti = int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right"))
            ti = min(ti, len(trees) - 1)
            while remaining[ti] == 0:
                ti = (ti + 1) % len(trees)
            schedule.append((ti, nxt[ti]))
            nxt[ti] += 1
            remaining[ti] -= 1
        troll_slot = int(rng.integers(total)) if nt else -1

        share_time: dict[int, int] = {}
        assigned: list[list[int]] = [[-1] * len(t) for t in trees]
        t = clock
        for pos, (ti, node) in enumerate(schedule):
            t += 2 + 2 * int(rng.integers(0, 3))
            p_node = trees[ti][node]
            p_user = assigned[ti][p_node] if p_node >= 0 else -1
            c = -1
            if pos >= troll_slot >= 0 or not nr:
                c = _draw_user(troll_sampler, 0, share_time, out_edges, p_user)
                if c >= 0:
                    troll_slot = -1
            if c < 0 and nr:
                c = _draw_user(real_sampler, nt, share_time, out_edges, p_user)
            if c < 0:
                raise InfeasibleScenario(f"could not place a conflict-free user in {url}; "
                                         "increase the user pool or shrink the trees")
            assigned[ti][node] = c
            share_time[c] = t
            if p_user >= 0:
                if rng.random() < 0.3:
                    events.append((c, t - 1, p_user, (), ()))
                else:
                    events.append((c, t - 1, None, (p_user,), ()))
                out_edges[c].add(p_user)
                truth.append((url, users[p_user], users[c]))
                influence[p_user] += 1
            events.append((c, t, None, (), (url,)))
            if rng.random() < params.repeat_share_prob:
                events.append((c, t + 1 + int(rng.integers(0, 3 * total + 1)), None, (), (url,)))
        trees_by_url[url] = [[users[u] for u in tree_users] for tree_users in assigned]
        clock = t + 3 * total + 10

    if clock >= params.horizon and (params.noise_events or n_urls):
        raise InfeasibleScenario(f"share windows end at {clock}, past the horizon {params.horizon}")

    noise = _noise_columns(params, rng, activity, nt, clock)
    scores = _scores(params, rng, users, influence)
    return Scenario(users=users, trolls=trolls, events=events, ground_truth=truth,
                    planted_urls=url_names, planted_trees=trees_by_url,
                    influence={users[i]: int(d) for i, d in enumerate(influence.tolist()) if d},
                    scores=scores, noise=noise)


def _noise_columns(params: ScenarioParams, rng: np.random.Generator, activity: np.ndarray,
                   nt: int, clock: int):
    """Background interactions after ``clock`` and real-user shares of noise URLs."""
    n = len(activity)
    m = params.noise_events
    if m and n < 2:
        raise InfeasibleScenario("noise interactions need at least two users")
    cdf = np.cumsum(activity) / activity.sum()
    popularity = rng.pareto(params.activity_exponent - 1, size=n) + 1.0
    pcdf = np.cumsum(popularity) / popularity.sum()

    def draw(c, size):
        return np.minimum(np.searchsorted(c, rng.random(size), side="right"), len(c) - 1)

    authors = draw(cdf, m)
    ts = np.sort(rng.integers(clock + 1, params.horizon + 1, size=m)) if m else np.zeros(0, np.int64)
    is_reply = rng.random(m) < 0.3
    reply_to = np.where(is_reply, draw(pcdf, m), -1)
    n_mentions = rng.integers(0, 3, size=m)
    n_mentions[~is_reply & (n_mentions == 0)] = 1
    mentions = draw(pcdf, int(n_mentions.sum()))
    # self-targets move to the next user so every noise event stays valid
    reply_to = np.where(reply_to == authors, (authors + 1) % n, reply_to)
    mention_author = np.repeat(authors, n_mentions)
    mentions = np.where(mentions == mention_author, (mention_author + 1) % n, mentions)

    nr = n - nt
    sh = params.noise_shares if nr else 0
    share_user = np.zeros(0, dtype=np.int64)
    if sh:
        real_cdf = np.cumsum(activity[nt:]) / activity[nt:].sum()
        share_user = nt + draw(real_cdf, sh)
    share_url = rng.integers(0, max(params.noise_urls, 1), size=sh)
    share_ts = rng.integers(0, params.horizon + 1, size=sh)
    return authors, ts, reply_to, n_mentions, mentions, share_user, share_url, share_ts


def _scores(params: ScenarioParams, rng: np.random.Generator, users: list[str],
            influence: np.ndarray) -> dict[str, float]:
    """Classifier-like scores, a monotone function of planted influence plus noise."""
    x = np.log1p(influence.astype(float))
    sd = x.std()
    z = (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)
    logit = params.score_slope * z + params.score_noise * rng.standard_normal(len(users))
    s = 1.0 / (1.0 + np.exp(-logit))
    return {u: float(v) for u, v in zip(users, s.tolist())}


def _event_lines(sc: Scenario) -> Iterator[str]:
    users = sc.users
    eid = 0
    for author, ts, reply_to, mentions, urls in sc.events:
        eid += 1
        yield (f"e{eid:09d}\t{users[author]}\t{ts}\t{users[reply_to] if reply_to is not None else ''}"
               f"\t{','.join(users[m] for m in mentions)}\t{','.join(urls)}\n")
    if sc.noise is None:
        return
    authors, ts, reply_to, n_mentions, mentions, share_user, share_url, share_ts = sc.noise
    ptr = np.concatenate([[0], np.cumsum(n_mentions)])
    chunk = 200_000
    for start in range(0, len(authors), chunk):
        stop = min(start + chunk, len(authors))
        a_l = authors[start:stop].tolist()
        t_l = ts[start:stop].tolist()
        r_l = reply_to[start:stop].tolist()
        p_l = ptr[start:stop + 1].tolist()
        m_all = mentions[p_l[0]:p_l[-1]].tolist()
        base = p_l[0]
        lines = []
        for i, (a, t, r) in enumerate(zip(a_l, t_l, r_l)):
            ms = []
            for m in m_all[p_l[i] - base:p_l[i + 1] - base]:
                if m not in ms:
                    ms.append(m)
            eid += 1
            lines.append(f"e{eid:09d}\t{users[a]}\t{t}\t{users[r] if r >= 0 else ''}\t"
                         f"{','.join(users[m] for m in ms)}\t\n")
        yield "".join(lines)
    for u, k, t in zip(share_user.tolist(), share_url.tolist(), share_ts.tolist()):
        eid += 1
        yield f"e{eid:09d}\t{users[u]}\t{t}\t\t\t{NOISE_URL_PREFIX}{k:06d}\n"


@dataclass
class ScenarioFiles:
    events: Path
    registry: Path
    ground_truth: Path
    scores: Path


def write_scenario(sc: Scenario, out_dir: str | Path) -> ScenarioFiles:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = ScenarioFiles(out / "events.tsv", out / "trolls.txt", out / "ground_truth.csv", out / "scores.csv")
    with open(files.events, "w", encoding="utf-8", newline="\n") as fh:
        for chunk in _event_lines(sc):
            fh.write(chunk)
    with open(files.registry, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# synthetic troll registry\n")
        for t in sc.trolls:
            fh.write(t + "\n")
    with open(files.ground_truth, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["url", "parent", "child"])
        w.writerows(sc.ground_truth)
    with open(files.scores, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "score"])
        for u in sorted(sc.scores):
            w.writerow([u, repr(sc.scores[u])])
    return files


def generate(params: ScenarioParams, out_dir: str | Path) -> ScenarioFiles:
    """Plant a scenario and write events, registry, ground truth and scores."""
    return write_scenario(plant(params), out_dir)


def read_ground_truth(path: str | Path) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["url"], {})[row["child"]] = row["parent"]
    return out
