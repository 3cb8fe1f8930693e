"""Cluster quality scoring and constrained random hyperparameter search.

The score rewards clusterings whose members share frequent code patterns
that are rare in the cohort at large: for each cluster and each pattern
length, the top patterns' within-cluster frequencies are compared against
their whole-dataset frequencies and the differences averaged.

The search samples component weights and the cluster count uniformly at
random under the ordering constraint, re-clusters, and keeps the
best-scoring trial.  Every trial derives its own generator from the master
seed and the trial index, so trials are reproducible in isolation.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .kmedoids import fit_kmedoids
from .metric import MAX_WEIGHT, MetricWeights, PatientTrajectory, distance_matrix
from .patterns import MiningConfig, MinedPattern, frequent_patterns, support

K_MIN = 2
K_MAX = 20


@dataclass(frozen=True)
class ScoreConfig:
    top_per_length: int = 3
    lengths: tuple[int, ...] = (1, 2, 3)

    def __post_init__(self) -> None:
        if self.top_per_length < 1:
            raise DataError("top_per_length must be >= 1")
        if not self.lengths or any(l < 1 for l in self.lengths):
            raise DataError("lengths must be positive")


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    weights: MetricWeights
    k: int
    score: float
    seed: int
    wall_ms: float
    td_history: tuple[float, ...]


def cluster_score(
    db: Sequence[Sequence[str]],
    labels: Sequence[int],
    cfg: ScoreConfig = ScoreConfig(),
    n_clusters: int | None = None,
) -> float:
    """Mean lift of cluster-local top-pattern frequencies over the whole dataset.

    ``labels`` assigns a cluster id to each sequence of ``db``.  Per cluster
    and per pattern length, the ``cfg.top_per_length`` most frequent
    patterns of exactly that length contribute the difference between their
    within-cluster and whole-dataset relative frequencies; lengths with no
    patterns at all drop out of that cluster's average.
    """
    seqs = [list(s) for s in db]
    if len(labels) != len(seqs):
        raise DataError("labels and database must have the same length")
    if not seqs:
        raise DataError("sequence database is empty")
    present = sorted(set(labels))
    if n_clusters is not None:
        missing = sorted(set(range(n_clusters)) - set(present))
        if missing:
            raise DataError(f"empty clusters: {missing}")
    n_total = len(seqs)
    mining = MiningConfig(min_support=1, min_len=min(cfg.lengths), max_len=max(cfg.lengths))

    dataset_freq: dict[tuple[str, ...], float] = {}
    per_cluster: list[float] = []
    for cid in present:
        members = [seqs[i] for i, l in enumerate(labels) if l == cid]
        size = len(members)
        by_len: dict[int, list[MinedPattern]] = {}
        for mined in frequent_patterns(members, mining):
            by_len.setdefault(len(mined.pattern), []).append(mined)
        length_means: list[float] = []
        for length in cfg.lengths:
            # already in (support desc, pattern asc) order, so the head is the top
            top = by_len.get(length, [])[: cfg.top_per_length]
            if not top:
                continue
            diffs = []
            for mined in top:
                freq = dataset_freq.get(mined.pattern)
                if freq is None:
                    freq = support(seqs, mined.pattern) / n_total
                    dataset_freq[mined.pattern] = freq
                diffs.append(mined.support / size - freq)
            length_means.append(sum(diffs) / len(diffs))
        if not length_means:
            raise DataError(f"cluster {cid} yields no patterns")
        per_cluster.append(sum(length_means) / len(length_means))
    return sum(per_cluster) / len(per_cluster)


def sample_weights(rng: np.random.Generator) -> MetricWeights:
    """Four uniform integer draws in [0, 100], sorted into the ordering constraint."""
    draws = sorted((int(x) for x in rng.integers(0, MAX_WEIGHT + 1, size=4)), reverse=True)
    return MetricWeights(*draws)


def sample_cluster_count(rng: np.random.Generator) -> int:
    return int(rng.integers(K_MIN, K_MAX + 1))


def tune_search(
    patients: Sequence[PatientTrajectory],
    db: Sequence[Sequence[str]],
    budget: int,
    seed: int,
    score_cfg: ScoreConfig = ScoreConfig(),
) -> tuple[TrialRecord, list[TrialRecord]]:
    """Random search over weights and cluster count; returns (best, full log).

    ``db`` must align with ``patients`` index by index.  Ties on the score
    go to the earliest trial.
    """
    if budget < 1:
        raise DataError("budget must be >= 1")
    if len(db) != len(patients):
        raise DataError("db and patients must align")
    log: list[TrialRecord] = []
    for trial in range(budget):
        rng = np.random.default_rng([seed, trial])
        weights = sample_weights(rng)
        k = sample_cluster_count(rng)
        fit_seed = int(rng.integers(0, 2**31 - 1))
        started = time.perf_counter()
        matrix = distance_matrix(patients, weights)
        fit = fit_kmedoids(matrix, k, seed=fit_seed)
        score = cluster_score(db, fit.assignment, score_cfg, n_clusters=fit.k)
        wall_ms = (time.perf_counter() - started) * 1000.0
        log.append(
            TrialRecord(
                trial_index=trial,
                weights=weights,
                k=k,
                score=score,
                seed=fit_seed,
                wall_ms=wall_ms,
                td_history=fit.td_history,
            )
        )
    best = max(log, key=lambda r: r.score)
    return best, log


TRIAL_LOG_HEADER = ("trial_index", "w1", "w2", "w3", "w4", "k", "score", "wall_ms")


def write_trial_log(path, log: Sequence[TrialRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_LOG_HEADER)
        for rec in log:
            writer.writerow(
                [
                    rec.trial_index,
                    *rec.weights.as_tuple(),
                    rec.k,
                    repr(rec.score),
                    f"{rec.wall_ms:.3f}",
                ]
            )
