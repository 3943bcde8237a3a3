"""The iterative clustering calibration loop and the run report it produces."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cluster import ClusteringResult, CutPolicy, Dendrogram, agglomerate, cut
from .config import CalibrationConfig
from .errors import DegenerateDataError, InputError, NonConvergenceError, PhasePatError
from .features import UNIFORM_WEIGHTS, ContributionSummary, extract_all, normalize_weights, pc1_contribution_summary
from .importance import I80_DISTANCE_NOTE, BallotMatrix, ImportanceScore, UndefinedImportance, borda_score, tally_ballots
from .interpret import PatternLabel, label_cluster, pattern_overview, phase_trend
from .model import VARIABLE_KEYS, FixedPhase, PhaseLibrary, validate_library
from .rdm import standardize_library
from .similarity import DissimilarityRecord, cluster_dsi, epsilon_from_percentile

log = logging.getLogger(__name__)

INTERPRETATION_NOTES = (
    "features: later rounds re-weight PCA by the previous round's importance scores rather than replacing it",
    "calibrate: later rounds reuse the round-1 length-standardized phases of the re-extracted pool",
    "interpret: Stable/Unstable is an operational rule (pooled v/dv boxplot outlier share above outlier_frac)",
    I80_DISTANCE_NOTE,
)


@dataclass(frozen=True, eq=False)
class RoundRecord:
    index: int
    weights: tuple[float, ...]
    pc1: ContributionSummary
    dendrogram: Dendrogram
    clustering: ClusteringResult
    accepted: dict[int, list[str]]
    dsi_evaluated: bool
    records: list[DissimilarityRecord]
    epsilon: tuple[float, ...] | None
    re_extracted: list[str]
    ballots: BallotMatrix
    importance: ImportanceScore | None
    pairs_evaluated: int = 0

    @property
    def retained(self) -> list[str]:
        return [pid for members in self.accepted.values() for pid in members]

    def to_dict(self) -> dict:
        c = self.clustering
        return {
            "round": self.index,
            "weights": list(self.weights),
            "pc1_contribution": self.pc1.quantiles,
            "pc1_warning": self.pc1.warning,
            "k": c.k,
            "cut_height": c.cut_height,
            "inter_cluster_df": c.inter_cluster_df,
            "assignment": c.assignment,
            "dsi_evaluated": self.dsi_evaluated,
            "epsilon": None if self.epsilon is None else dict(zip(VARIABLE_KEYS, self.epsilon)),
            "pairs_evaluated": self.pairs_evaluated,
            "accepted": {str(k): v for k, v in self.accepted.items()},
            "re_extracted": self.re_extracted,
            "ballots": self.ballots.to_dict(),
            "importance": None if self.importance is None else self.importance.to_dict(),
        }


@dataclass(frozen=True)
class Pattern:
    pattern_id: str
    round: int
    cluster: int
    members: tuple[str, ...]
    label: PatternLabel
    trend_labels: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"pattern_id": self.pattern_id, "round": self.round, "cluster": self.cluster}
        out.update(self.label.to_dict())
        out["members"] = list(self.members)
        out["input_trend_labels"] = self.trend_labels
        return out


@dataclass(frozen=True, eq=False)
class RunReport:
    config: CalibrationConfig
    source_tag: str
    reference_length: int
    normalization: tuple[tuple[float, float], ...] | None
    rounds: list[RoundRecord]
    patterns: list[Pattern]
    unresolved: list[str]
    terminated_by: str
    notes: tuple[str, ...] = INTERPRETATION_NOTES

    def pattern_of(self) -> dict[str, str]:
        return {pid: p.pattern_id for p in self.patterns for pid in p.members}

    def conservation_violations(self, ids: Sequence[str]) -> list[str]:
        seen: dict[str, int] = {}
        for p in self.patterns:
            for pid in p.members:
                seen[pid] = seen.get(pid, 0) + 1
        for pid in self.unresolved:
            seen[pid] = seen.get(pid, 0) + 1
        problems = [f"{pid} placed {n} times" for pid, n in seen.items() if n != 1]
        problems += [f"{pid} missing" for pid in ids if pid not in seen]
        problems += [f"{pid} not in input" for pid in seen if pid not in set(ids)]
        return problems

    def overview(self) -> dict[str, dict[str, int]]:
        return pattern_overview(p.label for p in self.patterns)

    def to_dict(self) -> dict:
        return {
            "source_tag": self.source_tag,
            "config": self.config.to_dict(),
            "reference_length": self.reference_length,
            "normalization": None
            if self.normalization is None
            else {k: {"mean": m, "std": s} for k, (m, s) in zip(VARIABLE_KEYS, self.normalization)},
            "terminated_by": self.terminated_by,
            "n_rounds": len(self.rounds),
            "rounds": [r.to_dict() for r in self.rounds],
            "patterns": [p.to_dict() for p in self.patterns],
            "overview": self.overview(),
            "unresolved": list(self.unresolved),
            "notes": list(self.notes),
        }


def _with_round(exc: PhasePatError, index: int) -> PhasePatError:
    return type(exc)(f"round {index}: {exc}")


def run_round(
    pool: Sequence[FixedPhase],
    weights: Sequence[float],
    cfg: CalibrationConfig,
    index: int = 1,
) -> RoundRecord:
    """Cluster one pool and split it into accepted clusters and re-extracted phases."""
    policy = cfg.cut_for(index)
    need = max(4, policy.k_min if policy.kind == "largest-gap" else 1)
    if len(pool) < need:
        raise DegenerateDataError(f"round {index}: pool of {len(pool)} phases is below the minimum of {need}")
    try:
        weights = normalize_weights(weights)
        feats = extract_all(pool, weights)
    except PhasePatError as exc:
        raise _with_round(exc, index) from exc
    pc1 = pc1_contribution_summary(feats, cfg.pc1_floor)
    tree = agglomerate(feats)
    if policy.kind == "largest-gap" and policy.k_max >= len(pool):
        # an all-singleton partition is not a clustering
        policy = CutPolicy(kind=policy.kind, k_min=policy.k_min, k_max=max(policy.k_min, len(pool) - 1))
    clustering = cut(tree, policy)
    groups = clustering.members()
    empty = BallotMatrix.zeros()

    if clustering.inter_cluster_df < cfg.delta:
        log.info("round %d: df=%.4g below delta=%.4g, accepting %d clusters", index, clustering.inter_cluster_df, cfg.delta, clustering.k)
        return RoundRecord(index, weights, pc1, tree, clustering, dict(enumerate(groups)), False, [], None, [], empty, None)

    lookup = {f.origin_id: f for f in pool}
    rng = np.random.default_rng([cfg.seed, index])
    audits = {}
    for c, members in enumerate(groups):
        if len(members) >= 2:
            audits[c] = cluster_dsi(members, lookup, cfg.fastdtw_radius, cfg.pair_budget, rng, cfg.dsi_mode)
    if not audits:
        return RoundRecord(index, weights, pc1, tree, clustering, dict(enumerate(groups)), True, [], None, [], empty, None)
    if cfg.epsilon_pool == "pairs":
        pooled = np.concatenate([a.values for a in audits.values()])
    else:
        pooled = np.concatenate([a.per_phase() for a in audits.values()])
    epsilon = epsilon_from_percentile(pooled.T, cfg.epsilon_percentile)

    records: dict[str, DissimilarityRecord] = {}
    for c, members in enumerate(groups):
        if c in audits:
            for rec in audits[c].records(epsilon):
                records[rec.phase_id] = rec
        else:
            records[members[0]] = DissimilarityRecord(members[0], (0.0, 0.0, 0.0, 0.0), frozenset())
    accepted = {c: [pid for pid in members if records[pid].retained] for c, members in enumerate(groups)}
    order = [f.origin_id for f in pool]
    re_extracted = [pid for pid in order if not records[pid].retained]
    ballots = tally_ballots(records[pid] for pid in order)
    try:
        importance = borda_score(ballots)
    except UndefinedImportance:
        importance = None
    return RoundRecord(
        index=index,
        weights=weights,
        pc1=pc1,
        dendrogram=tree,
        clustering=clustering,
        accepted=accepted,
        dsi_evaluated=True,
        records=[records[pid] for pid in order],
        epsilon=epsilon,
        re_extracted=re_extracted,
        ballots=ballots,
        importance=importance,
        pairs_evaluated=int(sum(len(a.pairs) for a in audits.values())),
    )


def label_patterns(
    lib: PhaseLibrary,
    groups: Sequence[tuple[str, int, int, Sequence[str]]],
    cfg: CalibrationConfig,
    reference_length: int,
) -> list[Pattern]:
    """Label ``(pattern_id, round, cluster, members)`` groups from raw-unit trend indices."""
    phases = lib.by_id()
    window = cfg.interpret.window_for(reference_length)
    out = []
    for pattern_id, rnd, c, members in groups:
        trends = [phase_trend(phases[pid], window) for pid in members]
        label = label_cluster(trends, cfg.interpret.tau, cfg.interpret.outlier_frac, cluster_id=pattern_id)
        tally: dict[str, int] = {}
        for pid in members:
            labels = phases[pid].labels
            if labels is not None:
                key = "".join(x.value for x in labels)
                tally[key] = tally.get(key, 0) + 1
        out.append(Pattern(pattern_id, rnd, c, tuple(members), label, dict(sorted(tally.items()))))
    return out


def calibrate(lib: PhaseLibrary, cfg: CalibrationConfig = CalibrationConfig()) -> RunReport:
    """Standardize, then iterate feature extraction, clustering and auditing until no phase is re-extracted.

    The loop also stops when the re-extracted pool falls below ``min_pool``
    (those phases are reported unresolved) or after ``max_rounds`` rounds.
    A round that retains nothing aborts with :class:`NonConvergenceError`.
    """
    report = validate_library(lib)
    if not report.ok:
        raise InputError(f"invalid library:\n{report}")
    fixed, ref_len, stats = standardize_library(lib, cfg.rdm)
    lookup = {f.origin_id: f for f in fixed}
    pool = [f.origin_id for f in fixed]
    weights: tuple[float, ...] = UNIFORM_WEIGHTS
    rounds: list[RoundRecord] = []
    groups: list[tuple[str, int, int, list[str]]] = []
    unresolved: list[str] = []
    terminated_by = "max-rounds"

    for index in range(1, cfg.max_rounds + 1):
        rec = run_round([lookup[pid] for pid in pool], weights, cfg, index)
        rounds.append(rec)
        if rec.re_extracted and not rec.retained:
            raise NonConvergenceError(f"round {index}: every one of {len(pool)} phases was re-extracted")
        for c, members in rec.accepted.items():
            if members:
                groups.append((f"r{index}c{c}", index, c, members))
        pool = rec.re_extracted
        if not pool:
            terminated_by = "converged"
            break
        if len(pool) < cfg.min_pool:
            terminated_by = "small-pool"
            unresolved = list(pool)
            break
        if rec.importance is not None:
            weights = rec.importance.scores
        log.info("round %d: %d phases re-extracted, weights %s", index, len(pool), weights)
    else:
        unresolved = list(pool)

    patterns = label_patterns(lib, groups, cfg, ref_len)
    return RunReport(
        config=cfg,
        source_tag=lib.source_tag,
        reference_length=ref_len,
        normalization=stats,
        rounds=rounds,
        patterns=patterns,
        unresolved=unresolved,
        terminated_by=terminated_by,
    )
