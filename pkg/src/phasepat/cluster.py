"""Average-linkage agglomerative clustering on Manhattan distances, dendrogram cutting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Collection, Hashable, Literal, Mapping, Sequence

import numba as nb
import numpy as np

from .errors import ConfigError, InputError
from .features import FeatureVector


def manhattan(p: Sequence[float] | np.ndarray, q: Sequence[float] | np.ndarray) -> float:
    a = np.asarray(p, dtype=float)
    b = np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def manhattan_matrix(values: np.ndarray, block: int = 256) -> np.ndarray:
    """Pairwise city-block distances between the rows of ``values``."""
    x = np.asarray(values, dtype=float)
    n = x.shape[0]
    out = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(n, start + block)
        out[start:stop] = np.abs(x[start:stop, None, :] - x[None, :, :]).sum(axis=2)
    # exact symmetry regardless of summation order
    upper = np.triu_indices(n, 1)
    out[(upper[1], upper[0])] = out[upper]
    np.fill_diagonal(out, 0.0)
    return out


def average_link_distance(
    r: Collection[Hashable],
    s: Collection[Hashable],
    pairwise: Callable[[Hashable, Hashable], float] | Mapping,
) -> float:
    """Mean distance over all cross pairs of two disjoint, non-empty clusters."""
    if not r or not s:
        raise ValueError("average linkage needs two non-empty clusters")
    dist = pairwise if callable(pairwise) else (lambda i, j: pairwise[i, j])
    total = 0.0
    for i in r:
        for j in s:
            total += dist(i, j)
    return total / (len(r) * len(s))


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Merge tree. Leaves are nodes ``0..n-1``; merge ``i`` creates node ``n + i``."""

    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]
    distances: np.ndarray = field(repr=False)

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def to_dict(self) -> dict:
        return {
            "leaves": list(self.leaves),
            "merges": [
                {"node": len(self.leaves) + i, "left": m.left, "right": m.right, "height": m.height, "size": m.size}
                for i, m in enumerate(self.merges)
            ],
        }


@nb.njit(cache=True)
def _less(d1, a1, b1, d2, a2, b2):
    if d1 < d2:
        return True
    if d1 > d2:
        return False
    if a1 != a2:
        return a1 < a2
    return b1 < b2


@nb.njit(cache=True)
def _row_best(d, s, active, cid, n):
    best_d = np.inf
    best_t = -1
    ba = 1 << 62
    bb = 1 << 62
    for t in range(n):
        if t == s or not active[t]:
            continue
        a = min(cid[s], cid[t])
        b = max(cid[s], cid[t])
        if best_t < 0 or _less(d[s, t], a, b, best_d, ba, bb):
            best_d = d[s, t]
            best_t = t
            ba = a
            bb = b
    return best_d, best_t


@nb.njit(cache=True)
def _average_linkage(dist):
    n = dist.shape[0]
    d = dist.copy()
    active = np.ones(n, dtype=np.bool_)
    cid = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    best_d = np.empty(n)
    best_t = np.empty(n, dtype=np.int64)
    for s in range(n):
        best_d[s], best_t[s] = _row_best(d, s, active, cid, n)
    left = np.empty(n - 1, dtype=np.int64)
    right = np.empty(n - 1, dtype=np.int64)
    height = np.empty(n - 1)
    count = np.empty(n - 1, dtype=np.int64)
    last = 0.0
    for step in range(n - 1):
        sel = -1
        sd = np.inf
        sa = 1 << 62
        sb = 1 << 62
        for s in range(n):
            if not active[s]:
                continue
            t = best_t[s]
            a = min(cid[s], cid[t])
            b = max(cid[s], cid[t])
            if sel < 0 or _less(best_d[s], a, b, sd, sa, sb):
                sel = s
                sd = best_d[s]
                sa = a
                sb = b
        s = sel
        t = best_t[s]
        keep = min(s, t)
        gone = max(s, t)
        left[step] = sa
        right[step] = sb
        # average linkage is monotone; clamp float round-off so heights never decrease
        last = max(last, sd)
        height[step] = last
        ns = size[keep]
        nt = size[gone]
        for k in range(n):
            if active[k] and k != keep and k != gone:
                v = (ns * d[keep, k] + nt * d[gone, k]) / (ns + nt)
                d[keep, k] = v
                d[k, keep] = v
        active[gone] = False
        size[keep] = ns + nt
        cid[keep] = n + step
        count[step] = ns + nt
        for k in range(n):
            if not active[k] or k == keep:
                continue
            if best_t[k] == keep or best_t[k] == gone:
                best_d[k], best_t[k] = _row_best(d, k, active, cid, n)
            else:
                p = best_t[k]
                if _less(d[k, keep], cid[k], cid[keep], best_d[k], min(cid[k], cid[p]), max(cid[k], cid[p])):
                    best_d[k] = d[k, keep]
                    best_t[k] = keep
        if step < n - 2:
            best_d[keep], best_t[keep] = _row_best(d, keep, active, cid, n)
    return left, right, height, count


def agglomerate_matrix(distances: np.ndarray, ids: Sequence[str]) -> Dendrogram:
    dist = np.ascontiguousarray(distances, dtype=float)
    n = dist.shape[0]
    if n < 2:
        raise InputError(f"clustering needs at least 2 items, got {n}")
    left, right, height, count = _average_linkage(dist)
    merges = tuple(Merge(int(l), int(r), float(h), int(c)) for l, r, h, c in zip(left, right, height, count))
    return Dendrogram(tuple(ids), merges, dist)


def agglomerate(features: Sequence[FeatureVector]) -> Dendrogram:
    """Bottom-up average-linkage merging under the Manhattan distance.

    Ties in merge distance go to the lexicographically smallest pair of
    cluster creation indices (leaves first, then merged nodes in order).
    """
    if len(features) < 2:
        raise InputError(f"clustering needs at least 2 feature vectors, got {len(features)}")
    values = np.vstack([f.values for f in features])
    return agglomerate_matrix(manhattan_matrix(values), [f.origin_id for f in features])


@dataclass(frozen=True)
class CutPolicy:
    kind: Literal["largest-gap", "fixed-k", "height"] = "largest-gap"
    k_min: int = 2
    k_max: int = 10
    k: int | None = None
    height: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("largest-gap", "fixed-k", "height"):
            raise ConfigError(f"unknown cut policy {self.kind!r}")
        if self.kind == "largest-gap" and not (2 <= self.k_min <= self.k_max):
            raise ConfigError(f"largest-gap cut needs 2 <= k_min <= k_max (got {self.k_min}, {self.k_max})")
        if self.kind == "fixed-k" and (self.k is None or self.k < 1):
            raise ConfigError("fixed-k cut needs k >= 1")
        if self.kind == "height" and (self.height is None or self.height < 0):
            raise ConfigError("height cut needs a non-negative height")

    @classmethod
    def fixed(cls, k: int) -> "CutPolicy":
        return cls(kind="fixed-k", k=k)

    @classmethod
    def at_height(cls, h: float) -> "CutPolicy":
        return cls(kind="height", height=h)


@dataclass(frozen=True)
class ClusteringResult:
    k: int
    assignment: dict[str, int]
    cut_height: float
    inter_cluster_df: float

    def members(self) -> list[list[str]]:
        groups: list[list[str]] = [[] for _ in range(self.k)]
        for pid, c in self.assignment.items():
            groups[c].append(pid)
        return groups


def flat_labels(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Cluster label per leaf after undoing the top ``k - 1`` merges.

    Labels are numbered by first appearance in leaf order.
    """
    n = len(dendrogram.leaves)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, m in enumerate(dendrogram.merges[: n - k]):
        node = n + i
        parent[find(m.left)] = node
        parent[find(m.right)] = node
    roots: dict[int, int] = {}
    labels = np.empty(n, dtype=np.int64)
    for leaf in range(n):
        labels[leaf] = roots.setdefault(find(leaf), len(roots))
    return labels


def _gap(heights: np.ndarray, n: int, k: int) -> float:
    below = heights[n - k - 1] if k < n else 0.0
    return float(heights[n - k] - below)


def choose_k(dendrogram: Dendrogram, policy: CutPolicy) -> int:
    n = len(dendrogram.leaves)
    h = dendrogram.heights
    if policy.kind == "fixed-k":
        if policy.k > n:
            raise ConfigError(f"fixed-k {policy.k} exceeds the {n} leaves")
        return int(policy.k)
    if policy.kind == "height":
        return int(n - np.count_nonzero(h <= policy.height))
    lo, hi = policy.k_min, min(policy.k_max, n)
    if lo > hi:
        raise ConfigError(f"empty gap range [{policy.k_min}, {policy.k_max}] for {n} leaves")
    best_k, best_gap = lo, -math.inf
    for k in range(lo, hi + 1):
        g = _gap(h, n, k)
        if g > best_gap:
            best_k, best_gap = k, g
    # no separation anywhere in range: the tree has no preferred cut
    if best_gap <= 0.0:
        return 1
    return best_k


def inter_cluster_difference(distances: np.ndarray, labels: np.ndarray) -> float:
    """Smallest average-link distance between any two flat clusters (+inf for one cluster)."""
    k = int(labels.max()) + 1
    if k < 2:
        return math.inf
    onehot = np.zeros((labels.size, k))
    onehot[np.arange(labels.size), labels] = 1.0
    sums = onehot.T @ distances @ onehot
    sizes = onehot.sum(axis=0)
    means = sums / np.outer(sizes, sizes)
    iu = np.triu_indices(k, 1)
    return float(means[iu].min())


def cut(dendrogram: Dendrogram, policy: CutPolicy = CutPolicy()) -> ClusteringResult:
    n = len(dendrogram.leaves)
    k = choose_k(dendrogram, policy)
    labels = flat_labels(dendrogram, k)
    h = dendrogram.heights
    if k == 1:
        cut_height = float(h[-1])
    else:
        below = h[n - k - 1] if k < n else 0.0
        cut_height = float((below + h[n - k]) / 2)
    return ClusteringResult(
        k=k,
        assignment={pid: int(c) for pid, c in zip(dendrogram.leaves, labels)},
        cut_height=cut_height,
        inter_cluster_df=inter_cluster_difference(dendrogram.distances, labels),
    )
