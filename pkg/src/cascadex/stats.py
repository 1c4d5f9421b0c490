"""Distribution summaries, correlation tests and the top-k group comparison."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .cascades import InitiatorCounts
from .graph import EGO_NET, TROLL, NodeTable

log = logging.getLogger(__name__)


class EmpiricalDistribution:
    def __init__(self, values: Iterable[float], geq: bool = True):
        self.values = np.sort(np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                                         dtype=float))
        if len(self.values) == 0:
            raise ValueError("empirical distribution needs at least one value")
        self.geq = geq

    def __len__(self) -> int:
        return len(self.values)

    def ccdf_at(self, x: float) -> float:
        side = "left" if self.geq else "right"
        return (len(self.values) - np.searchsorted(self.values, x, side=side)) / len(self.values)

    def cdf_at(self, x: float) -> float:
        return np.searchsorted(self.values, x, side="right") / len(self.values)

    def ccdf_points(self) -> list[tuple[float, float]]:
        xs, counts = np.unique(self.values, return_counts=True)
        n = len(self.values)
        cum = np.cumsum(counts)
        above = n - (cum - counts) if self.geq else n - cum
        return [(float(x), a / n) for x, a in zip(xs, above.tolist())]

    def cdf_points(self) -> list[tuple[float, float]]:
        xs, counts = np.unique(self.values, return_counts=True)
        n = len(self.values)
        return [(float(x), c / n) for x, c in zip(xs, np.cumsum(counts).tolist())]


def ccdf(values: Iterable[float], geq: bool = True) -> list[tuple[float, float]]:
    """(x, fraction of samples >= x) at each distinct sample value (``>`` if not geq)."""
    return EmpiricalDistribution(values, geq).ccdf_points()


def cdf(values: Iterable[float]) -> list[tuple[float, float]]:
    return EmpiricalDistribution(values).cdf_points()


def distribution_compare(a, b) -> float:
    """Largest absolute gap between two empirical CDFs."""
    a = a.values if isinstance(a, EmpiricalDistribution) else np.sort(np.asarray(a, dtype=float))
    b = b.values if isinstance(b, EmpiricalDistribution) else np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("distribution_compare needs two non-empty samples")
    xs = np.union1d(a, b)
    fa = np.searchsorted(a, xs, side="right") / len(a)
    fb = np.searchsorted(b, xs, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def write_points(points: Sequence[tuple[float, float]], fh: IO[str], header=("x", "fraction")) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for x, f in points:
        w.writerow([repr(x), repr(f)])


# --- correlation -------------------------------------------------------------

def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if len(x) < 3:
        raise ValueError(f"need at least 3 pairs, got {len(x)}")
    return x, y


def _r(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0 or syy == 0:
        raise ValueError("zero variance: correlation undefined")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def _t_pvalue(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return float(2 * sps.t.sf(abs(t), n - 2))


def _perm_pvalue(stat: Callable[[np.ndarray, np.ndarray], float], x, y, observed: float,
                 n_permutations: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_permutations):
        if abs(stat(x, rng.permutation(y))) >= abs(observed) - 1e-12:
            hits += 1
    return (hits + 1) / (n_permutations + 1)


def pearson(x, y, method: str = "t", n_permutations: int = 9999, seed: int = 0) -> tuple[float, float]:
    """(r, two-sided p). ``method="permutation"`` swaps the t approximation for a
    seeded permutation test."""
    x, y = _check_pair(x, y)
    r = _r(x, y)
    if method == "t":
        return r, _t_pvalue(r, len(x))
    if method == "permutation":
        return r, _perm_pvalue(_r, x, y, r, n_permutations, seed)
    raise ValueError(f"unknown p-value method {method!r}")


def average_ranks(a) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    a = np.asarray(a, dtype=float)
    n = len(a)
    order = np.argsort(a, kind="mergesort")
    s = a[order]
    cuts = np.flatnonzero(s[1:] != s[:-1]) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [n]])
    ranks = np.empty(n, dtype=float)
    ranks[order] = np.repeat((starts + ends + 1) / 2, ends - starts)
    return ranks


def spearman(x, y, method: str = "t", n_permutations: int = 9999, seed: int = 0) -> tuple[float, float]:
    x, y = _check_pair(x, y)
    rx, ry = average_ranks(x), average_ranks(y)
    return pearson(rx, ry, method=method, n_permutations=n_permutations, seed=seed)


# --- external scores -----------------------------------------------------------

@dataclass
class ScoreTable:
    scores: dict[str, float]

    def __contains__(self, user: object) -> bool:
        return user in self.scores

    def __getitem__(self, user: str) -> float:
        return self.scores[user]

    def __len__(self) -> int:
        return len(self.scores)


def load_scores(path: str | Path) -> ScoreTable:
    """CSV ``user,score``; out-of-range scores are clamped into [0, 1]."""
    scores: dict[str, float] = {}
    clamped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or [h.strip() for h in header[:2]] != ["user", "score"]:
            raise ValueError(f"{path}: expected header user,score")
        for line_no, row in enumerate(r, 2):
            if not row:
                continue
            try:
                user, value = row[0], float(row[1])
            except (IndexError, ValueError):
                raise ValueError(f"{path}:{line_no}: bad score row {row!r}") from None
            if not math.isfinite(value):
                raise ValueError(f"{path}:{line_no}: non-finite score")
            if value < 0 or value > 1:
                clamped += 1
                value = min(1.0, max(0.0, value))
            scores[user] = value
    if clamped:
        log.warning("%s: %d scores outside [0,1] were clamped", path, clamped)
    return ScoreTable(scores)


@dataclass
class CorrelationReport:
    n: int
    threshold: int
    pearson: tuple[float, float] | None
    spearman: tuple[float, float] | None
    pairs: list[tuple[str, float, int]] = field(default_factory=list)   # (user, score, influence)
    notes: list[str] = field(default_factory=list)

    def rows(self) -> list[tuple[str, object, object]]:
        def cell(v):
            return ("undefined", "undefined") if v is None else (repr(v[0]), repr(v[1]))
        return [("n", self.n, ""), ("threshold", self.threshold, ""),
                ("pearson", *cell(self.pearson)), ("spearman", *cell(self.spearman))]


def correlate_scores(scores: ScoreTable | Mapping[str, float], influence: Mapping[str, int],
                     threshold: int = 100, population: Iterable[str] | None = None,
                     method: str = "t", seed: int = 0) -> CorrelationReport:
    """Correlate classifier score (independent) with influence-degree (dependent)
    over users whose influence-degree exceeds ``threshold``."""
    table = scores.scores if isinstance(scores, ScoreTable) else scores
    pop = None if population is None else set(population)
    eligible = sorted(u for u, d in influence.items()
                      if d > threshold and (pop is None or u in pop))
    missing = [u for u in eligible if u not in table]
    if missing:
        log.warning("%d users above threshold have no score and are ignored", len(missing))
    users = [u for u in eligible if u in table]
    if len(users) < 3:
        raise ValueError(f"only {len(users)} scored users with influence-degree > {threshold}; need 3")
    x = np.array([table[u] for u in users], dtype=float)
    y = np.array([influence[u] for u in users], dtype=float)
    report = CorrelationReport(len(users), threshold, None, None,
                               [(u, float(s), int(d)) for u, s, d in zip(users, x, y)])
    for name in ("pearson", "spearman"):
        fn = pearson if name == "pearson" else spearman
        try:
            setattr(report, name, fn(x, y, method=method, seed=seed))
        except ValueError as exc:
            report.notes.append(f"{name}: {exc}")
    return report


# --- top-k summary ---------------------------------------------------------------

@dataclass(frozen=True)
class TopKThresholds:
    in_degree: int = 1000
    out_degree: int = 1000
    influence: int = 1000


def _power(v: int) -> str:
    if v >= 10:
        e = round(math.log10(v))
        if 10 ** e == v:
            return f"10^{e}"
    return str(v)


@dataclass
class TopKTable:
    rows: list[tuple[str, int, int]]      # (metric, trolls, ego-net spreaders)

    def write_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "trolls", "ego_net"])
        w.writerows(self.rows)

    def format(self) -> str:
        width = max(len(r[0]) for r in self.rows)
        lines = [f"{'Metrics':<{width}}  {'trolls':>8}  {'ego-net':>8}"]
        lines += [f"{m:<{width}}  {a:>8}  {b:>8}" for m, a, b in self.rows]
        return "\n".join(lines)


def topk_summary(nodes: NodeTable, in_degree: np.ndarray | None, out_degree: np.ndarray | None,
                 coreness: Mapping[str, int] | None, initiators: InitiatorCounts | None,
                 influence: Mapping[str, int] | None,
                 thresholds: TopKThresholds = TopKThresholds()) -> TopKTable:
    """Counts for trolls vs ego-net spreaders; degrees are multigraph degrees
    aligned with ``nodes``, the other metrics are keyed by user id."""
    for name, v in (("in-degree", in_degree), ("out-degree", out_degree), ("coreness", coreness),
                    ("cascade initiators", initiators), ("influence-degree", influence)):
        if v is None:
            raise ValueError(f"missing upstream metric: {name}")
    troll = nodes.base == TROLL
    ego = (nodes.base == EGO_NET) & nodes.spreader
    users = nodes.users
    troll_ids = [users[i] for i in np.flatnonzero(troll)]
    ego_ids = [users[i] for i in np.flatnonzero(ego)]

    def count_mask(mask):
        return int(np.count_nonzero(troll & mask)), int(np.count_nonzero(ego & mask))

    def total(metric: Callable[[str], int]):
        return sum(metric(u) for u in troll_ids), sum(metric(u) for u in ego_ids)

    max_core = max(coreness.values(), default=None)
    t = thresholds
    rows = [
        (f"Popularity: in-degree > {_power(t.in_degree)}", *count_mask(in_degree > t.in_degree)),
        (f"Sociability: out-degree > {_power(t.out_degree)}", *count_mask(out_degree > t.out_degree)),
        ("Nodes in the largest k-core",
         *total(lambda u: int(max_core is not None and coreness.get(u) == max_core))),
        ('Source node ("patient-zero"): Number of cascades', *total(lambda u: initiators.initiated.get(u, 0))),
        (f"Source node: number of cascades with cascade size > {_power(initiators.threshold)}",
         *total(lambda u: initiators.viral.get(u, 0))),
        (f"influence-degree > {_power(t.influence)}", *total(lambda u: int(influence.get(u, 0) > t.influence))),
    ]
    return TopKTable(rows)
