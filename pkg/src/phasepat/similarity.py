"""Exact and multilevel (FastDTW) warping distances and intra-cluster dissimilarity auditing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numba as nb
import numpy as np

from .errors import InputError
from .model import N_VARIABLES, VariableId, FixedPhase


@dataclass(frozen=True, eq=False)
class WarpPath:
    """Alignment steps as a (K, 2) array of 0-based (i, j) index pairs."""

    steps: np.ndarray

    def __len__(self) -> int:
        return int(self.steps.shape[0])

    def violations(self, n: int, m: int) -> list[str]:
        s = self.steps
        problems = []
        if s.ndim != 2 or s.shape[1] != 2 or len(s) == 0:
            return ["path must be a non-empty (K, 2) array"]
        if tuple(s[0]) != (0, 0):
            problems.append(f"path starts at {tuple(s[0])}, not (0, 0)")
        if tuple(s[-1]) != (n - 1, m - 1):
            problems.append(f"path ends at {tuple(s[-1])}, not {(n - 1, m - 1)}")
        if not max(n, m) <= len(s) < n + m:
            problems.append(f"path length {len(s)} outside [{max(n, m)}, {n + m})")
        step = np.diff(s, axis=0)
        if np.any((step < 0) | (step > 1)) or np.any(step.sum(axis=1) == 0):
            problems.append("path is not monotone and continuous")
        return problems


# ---------------------------------------------------------------- kernels


@nb.njit(cache=True)
def _windowed(x, y, lo, hi):
    """DTW restricted to cells ``lo[i] <= j <= hi[i]`` of each row ``i``."""
    n = x.size
    m = y.size
    offs = np.empty(n + 1, dtype=np.int64)
    offs[0] = 0
    for i in range(n):
        offs[i + 1] = offs[i] + hi[i] - lo[i] + 1
    acc = np.empty(offs[n])
    inf = np.inf
    for i in range(n):
        base = offs[i]
        for j in range(lo[i], hi[i] + 1):
            c = abs(x[i] - y[j])
            if i == 0 and j == 0:
                acc[base] = c
                continue
            best = inf
            if i > 0:
                if lo[i - 1] <= j <= hi[i - 1]:
                    v = acc[offs[i - 1] + j - lo[i - 1]]
                    if v < best:
                        best = v
                if lo[i - 1] <= j - 1 <= hi[i - 1]:
                    v = acc[offs[i - 1] + j - 1 - lo[i - 1]]
                    if v < best:
                        best = v
            if j - 1 >= lo[i]:
                v = acc[base + j - 1 - lo[i]]
                if v < best:
                    best = v
            acc[base + j - lo[i]] = c + best
    cost = acc[offs[n - 1] + m - 1 - lo[n - 1]]
    # backtrack; ties prefer the diagonal, then (i-1, j), then (i, j-1)
    pi = np.empty(n + m, dtype=np.int64)
    pj = np.empty(n + m, dtype=np.int64)
    i = n - 1
    j = m - 1
    k = 0
    pi[0] = i
    pj[0] = j
    while i > 0 or j > 0:
        bi = -1
        bj = -1
        best = inf
        if i > 0 and j > 0 and lo[i - 1] <= j - 1 <= hi[i - 1]:
            v = acc[offs[i - 1] + j - 1 - lo[i - 1]]
            if v < best:
                best = v
                bi = i - 1
                bj = j - 1
        if i > 0 and lo[i - 1] <= j <= hi[i - 1]:
            v = acc[offs[i - 1] + j - lo[i - 1]]
            if v < best:
                best = v
                bi = i - 1
                bj = j
        if j > 0 and j - 1 >= lo[i]:
            v = acc[offs[i] + j - 1 - lo[i]]
            if v < best:
                best = v
                bi = i
                bj = j - 1
        i = bi
        j = bj
        k += 1
        pi[k] = i
        pj[k] = j
    k += 1
    return cost, pi[:k][::-1].copy(), pj[:k][::-1].copy()


@nb.njit(cache=True)
def _exact(x, y):
    n = x.size
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, y.size - 1, dtype=np.int64)
    return _windowed(x, y, lo, hi)


@nb.njit(cache=True)
def _coarsen(x):
    """Average adjacent pairs; an odd trailing sample is carried as is."""
    n = x.size
    half = (n + 1) // 2
    out = np.empty(half)
    for i in range(n // 2):
        out[i] = 0.5 * (x[2 * i] + x[2 * i + 1])
    if n % 2:
        out[half - 1] = x[n - 1]
    return out


@nb.njit(cache=True)
def _project(pi, pj, n, m, radius):
    """Window on the finer grid: the projected coarse path grown by ``radius`` cells."""
    plo = np.full(n, m, dtype=np.int64)
    phi = np.full(n, -1, dtype=np.int64)
    for k in range(pi.size):
        c0 = 2 * pj[k]
        c1 = min(2 * pj[k] + 1, m - 1)
        for r in (2 * pi[k], 2 * pi[k] + 1):
            if r < n:
                if c0 < plo[r]:
                    plo[r] = c0
                if c1 > phi[r]:
                    phi[r] = c1
    lo = np.empty(n, dtype=np.int64)
    hi = np.empty(n, dtype=np.int64)
    for i in range(n):
        a = m
        b = -1
        for r in range(max(0, i - radius), min(n, i + radius + 1)):
            if plo[r] < a:
                a = plo[r]
            if phi[r] > b:
                b = phi[r]
        lo[i] = max(0, a - radius)
        hi[i] = min(m - 1, b + radius)
    return lo, hi


@nb.njit(cache=True)
def _fast(x, y, radius):
    base = max(radius + 2, 10)
    xs = [x]
    ys = [y]
    while xs[-1].size > base and ys[-1].size > base:
        xs.append(_coarsen(xs[-1]))
        ys.append(_coarsen(ys[-1]))
    top = len(xs) - 1
    cost, pi, pj = _exact(xs[top], ys[top])
    for level in range(top - 1, -1, -1):
        lo, hi = _project(pi, pj, xs[level].size, ys[level].size, radius)
        cost, pi, pj = _windowed(xs[level], ys[level], lo, hi)
    return cost, pi, pj


@nb.njit(cache=True, parallel=True)
def _pairs_fast(series, pairs, radius):
    """dtw_fast cost for each (i, j) row of ``pairs`` over each channel of ``series`` (N, C, L)."""
    npairs = pairs.shape[0]
    nch = series.shape[1]
    out = np.empty((npairs, nch))
    for p in nb.prange(npairs):
        a = pairs[p, 0]
        b = pairs[p, 1]
        for c in range(nch):
            cost, _, _ = _fast(series[a, c], series[b, c], radius)
            out[p, c] = cost
    return out


# ---------------------------------------------------------------- public API


def _prep(seq: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(seq, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("DTW needs non-empty 1-D sequences")
    return arr


def dtw_exact(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> tuple[float, WarpPath]:
    """Full dynamic-programming DTW with absolute-difference point cost."""
    cost, pi, pj = _exact(_prep(x), _prep(y))
    return float(cost), WarpPath(np.column_stack([pi, pj]))


def dtw_fast(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray, radius: int = 1) -> tuple[float, WarpPath]:
    """Multilevel approximate DTW (coarsen, project, refine within ``radius``).

    Series at or below ``max(radius + 2, 10)`` samples are aligned exactly,
    so a radius covering the longer input reproduces :func:`dtw_exact`.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    cost, pi, pj = _fast(_prep(x), _prep(y), int(radius))
    return float(cost), WarpPath(np.column_stack([pi, pj]))


def pairwise_dtw(series: np.ndarray, pairs: np.ndarray, radius: int = 1) -> np.ndarray:
    """Batch :func:`dtw_fast` costs for index ``pairs`` into ``series`` of shape (N, C, L)."""
    series = np.ascontiguousarray(series, dtype=float)
    pairs = np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size == 0:
        return np.empty((0, series.shape[1]))
    return _pairs_fast(series, pairs, int(radius))


# ---------------------------------------------------------------- dissimilarity


@dataclass(frozen=True)
class DissimilarityRecord:
    phase_id: str
    dsi: tuple[float, float, float, float]
    triggering_set: frozenset[VariableId]

    @property
    def retained(self) -> bool:
        return not self.triggering_set


def pair_from_index(t: np.ndarray, n: int) -> np.ndarray:
    """Decode linear indices into the strict upper triangle of an n x n grid (row-major)."""
    t = np.asarray(t, dtype=np.int64)
    total = n * (n - 1) // 2
    i = n - 2 - np.floor(np.sqrt(-8.0 * t + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    j = t + i + 1 - total + (n - i) * ((n - i) - 1) // 2
    return np.column_stack([i, j])


def select_pairs(n: int, pair_budget: int | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
    total = n * (n - 1) // 2
    if pair_budget is None or total <= pair_budget:
        i, j = np.triu_indices(n, 1)
        return np.column_stack([i, j]).astype(np.int64)
    if rng is None:
        raise ValueError("pair sampling needs a seeded generator")
    picked = np.sort(rng.choice(total, size=pair_budget, replace=False))
    return pair_from_index(picked, n)


def medoid_index(stack: np.ndarray) -> int:
    flat = stack.reshape(stack.shape[0], -1)
    totals = np.array([np.abs(flat - row).sum() for row in flat])
    return int(np.argmin(totals))


@dataclass(frozen=True, eq=False)
class ClusterDsi:
    """Raw pairwise dSI values for one cluster, before thresholding."""

    ids: tuple[str, ...]
    pairs: np.ndarray  # (P, 2) indices into ids
    values: np.ndarray  # (P, 4) per-variable DTW cost
    mode: str = "pairwise"

    def per_phase(self) -> np.ndarray:
        """Per-phase dSI: the maximum over every evaluated pair involving the phase."""
        out = np.zeros((len(self.ids), N_VARIABLES))
        for side in (0, 1):
            if self.mode == "medoid" and side == 0:
                continue  # the medoid is the reference, not a member under audit
            np.maximum.at(out, self.pairs[:, side], self.values)
        return out

    def records(self, epsilon: Sequence[float]) -> list[DissimilarityRecord]:
        eps = np.asarray(epsilon, dtype=float)
        if eps.shape != (N_VARIABLES,):
            raise ValueError(f"expected {N_VARIABLES} thresholds")
        dsi = self.per_phase()
        out = []
        for pid, row in zip(self.ids, dsi):
            trig = frozenset(VariableId(v) for v in range(N_VARIABLES) if row[v] > eps[v])
            out.append(DissimilarityRecord(pid, tuple(float(x) for x in row), trig))
        return out


def cluster_dsi(
    cluster: Sequence[str],
    fixed: Mapping[str, FixedPhase],
    radius: int = 1,
    pair_budget: int | None = None,
    rng: np.random.Generator | None = None,
    mode: Literal["pairwise", "medoid"] = "pairwise",
) -> ClusterDsi:
    ids = tuple(cluster)
    if len(ids) < 2:
        raise InputError(f"similarity evaluation needs a cluster of at least 2 phases, got {len(ids)}")
    stack = np.stack([fixed[pid].series for pid in ids])
    if mode == "medoid":
        center = medoid_index(stack)
        others = np.array([i for i in range(len(ids)) if i != center], dtype=np.int64)
        pairs = np.column_stack([np.full(others.size, center, dtype=np.int64), others])
    elif mode == "pairwise":
        pairs = select_pairs(len(ids), pair_budget, rng)
    else:
        raise ValueError(f"unknown dSI mode {mode!r}")
    return ClusterDsi(ids, pairs, pairwise_dtw(stack, pairs, radius), mode)


def evaluate_cluster_similarity(
    cluster: Sequence[str],
    fixed: Mapping[str, FixedPhase],
    epsilon: Sequence[float],
    pair_budget: int | None = None,
    radius: int = 1,
    rng: np.random.Generator | None = None,
    mode: Literal["pairwise", "medoid"] = "pairwise",
) -> list[DissimilarityRecord]:
    """Per-phase, per-variable dSI for one cluster and the variables exceeding ``epsilon``."""
    return cluster_dsi(cluster, fixed, radius, pair_budget, rng, mode).records(epsilon)


def epsilon_from_percentile(all_dsi: Sequence[Sequence[float] | np.ndarray], pct: float = 99.0) -> tuple[float, ...]:
    """Per-variable linearly interpolated percentile of pooled dSI values."""
    if not 0 < pct <= 100:
        raise ValueError(f"percentile must lie in (0, 100], got {pct}")
    out = []
    for var, values in zip(VariableId, all_dsi):
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError(f"no dSI values for variable {var.key!r}")
        out.append(float(np.percentile(arr, pct)))
    return tuple(out)
