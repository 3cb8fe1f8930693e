"""Partitioning around medoids on a precomputed distance matrix.

The swap search is first-improvement: medoid slots and candidate points are
scanned in ascending index order and any swap that lowers the total
assignment distance is taken immediately; a full sweep without an accepted
swap ends the search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .metric import MetricWeights, PatientTrajectory, code_distance

DEFAULT_MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class Clustering:
    k: int
    medoid_indices: tuple[int, ...]
    assignment: np.ndarray
    distance_to_medoid: np.ndarray
    total_distance: float
    initial_total: float
    td_history: tuple[float, ...]  # total distance after each accepted swap
    converged: bool
    seed: int


def _total_distance(matrix: np.ndarray, medoids: np.ndarray) -> float:
    return float(matrix[:, medoids].min(axis=1).sum())


def fit_kmedoids(
    matrix: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_SWEEPS,
) -> Clustering:
    """Cluster the points of a symmetric distance matrix around ``k`` medoids.

    Initial medoids are drawn without replacement from a generator seeded
    with ``seed``.  Ties in the nearest-medoid assignment go to the medoid
    with the lowest index, and every medoid belongs to its own cluster.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DataError("distance matrix must be square")
    n = m.shape[0]
    if k < 1:
        raise DataError("k must be >= 1")
    if k > n:
        raise DataError(f"k={k} exceeds point count {n}")
    if max_iter < 1:
        raise DataError("max_iter must be >= 1")

    rng = np.random.default_rng(seed)
    medoids = np.sort(rng.choice(n, size=k, replace=False))
    td = _total_distance(m, medoids)
    initial_total = td
    history: list[float] = []

    converged = False
    for _ in range(max_iter):
        improved = False
        medoids = np.sort(medoids)
        for slot in range(k):
            current = set(medoids.tolist())
            for p in range(n):
                if p in current:
                    continue
                candidate = medoids.copy()
                candidate[slot] = p
                cand_td = _total_distance(m, candidate)
                if cand_td < td:
                    medoids = candidate
                    td = cand_td
                    history.append(td)
                    current = set(medoids.tolist())
                    improved = True
        if not improved:
            converged = True
            break

    medoids = np.sort(medoids)
    cols = m[:, medoids]
    assignment = cols.argmin(axis=1)
    # force each medoid into its own cluster even if another sits at distance 0
    for cid, mi in enumerate(medoids):
        assignment[mi] = cid
    dist = cols[np.arange(n), assignment]
    return Clustering(
        k=k,
        medoid_indices=tuple(int(x) for x in medoids),
        assignment=assignment.astype(int),
        distance_to_medoid=dist,
        total_distance=float(dist.sum()),
        initial_total=initial_total,
        td_history=tuple(history),
        converged=converged,
        seed=seed,
    )


def medoid_profile(
    trajectory: PatientTrajectory,
    medoid: PatientTrajectory,
    weights: MetricWeights,
) -> list[float]:
    """Per-stay minimum code distance from ``trajectory`` to any medoid stay."""
    return [
        min(code_distance(c, mc, weights) for mc in medoid.codes)
        for c in trajectory.codes
    ]
