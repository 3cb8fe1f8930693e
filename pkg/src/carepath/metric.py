"""Weighted distances between stay codes and between patient trajectories.

The code distance compares the four code components separately and scales
each component's normalized edit distance by its own weight, so a category
mismatch can be made to matter more than a severity mismatch.  The
trajectory distance aligns every stay with a three-position window of the
other sequence, keeps the cheapest match, and averages the two directions
so the result is symmetric.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codes import StayCode
from .errors import DataError
from .levenshtein import levenshtein_ratio

MAX_WEIGHT = 100


@dataclass(frozen=True)
class MetricWeights:
    """Per-component weights, ordered category >= care_type >= counter >= severity."""

    category: int
    care_type: int
    counter: int
    severity: int

    def __post_init__(self) -> None:
        w = self.as_tuple()
        if not all(isinstance(x, int) for x in w):
            raise DataError(f"weights must be integers, got {w!r}")
        if not 0 <= self.severity <= self.counter <= self.care_type <= self.category <= MAX_WEIGHT:
            raise DataError(
                "weights must satisfy 0 <= severity <= counter <= care_type "
                f"<= category <= {MAX_WEIGHT}, got {w!r}"
            )

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.category, self.care_type, self.counter, self.severity)

    @property
    def total(self) -> int:
        return sum(self.as_tuple())

    @classmethod
    def from_sequence(cls, values: Sequence[int]) -> "MetricWeights":
        if len(values) != 4:
            raise DataError(f"expected 4 weights, got {len(values)}")
        return cls(*(int(v) for v in values))


@dataclass(frozen=True)
class PatientTrajectory:
    """Ordered stay codes for one patient; a death marker may only close it."""

    patient_id: str
    codes: tuple[StayCode, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", tuple(self.codes))
        if not self.codes:
            raise DataError(f"patient {self.patient_id!r} has an empty trajectory")
        deaths = [i for i, c in enumerate(self.codes) if c.is_death]
        if deaths and (len(deaths) > 1 or deaths[0] != len(self.codes) - 1):
            raise DataError(
                f"patient {self.patient_id!r}: death marker must be unique and terminal"
            )

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def ends_in_death(self) -> bool:
        return self.codes[-1].is_death

    def renderings(self) -> tuple[str, ...]:
        return tuple(c.render() for c in self.codes)


def code_distance(a: StayCode, b: StayCode, weights: MetricWeights) -> float:
    """Weighted component-wise distance between two codes.

    Death matches death at distance zero and sits at the full weight total
    from every real code.
    """
    if a.is_death or b.is_death:
        return 0.0 if a.is_death == b.is_death else float(weights.total)
    if a == b:
        return 0.0
    return (
        weights.category * levenshtein_ratio(a.category, b.category)
        + weights.care_type * levenshtein_ratio(a.care_type, b.care_type)
        + weights.counter * levenshtein_ratio(a.counter, b.counter)
        + weights.severity * levenshtein_ratio(a.severity, b.severity)
    )


def _window_bounds(i: int, last: int) -> tuple[int, int]:
    # positions i-1, i, i+1 clamped into [0, last]; as a contiguous range
    lo = i - 1
    if lo < 0:
        lo = 0
    elif lo > last:
        lo = last
    hi = i + 1
    if hi > last:
        hi = last
    return lo, hi


def _directed_sum(seq_a, seq_b, weights: MetricWeights) -> float:
    last = len(seq_b) - 1
    total = 0.0
    for i, code in enumerate(seq_a):
        lo, hi = _window_bounds(i, last)
        total += min(code_distance(code, seq_b[j], weights) for j in range(lo, hi + 1))
    return total


def trajectory_distance(
    a: PatientTrajectory, b: PatientTrajectory, weights: MetricWeights
) -> float:
    """Symmetrized windowed-minimum distance between two trajectories.

    Each stay of one sequence is matched against the cheapest of the
    other sequence's stays at the same position give or take one, and the
    two directed sums are averaged.
    """
    return 0.5 * (
        _directed_sum(a.codes, b.codes, weights)
        + _directed_sum(b.codes, a.codes, weights)
    )


def _directed_sum_cached(ids_a, ids_b, table) -> float:
    last = len(ids_b) - 1
    total = 0.0
    for i, ca in enumerate(ids_a):
        row = table[ca]
        lo, hi = _window_bounds(i, last)
        best = row[ids_b[lo]]
        for j in range(lo + 1, hi + 1):
            v = row[ids_b[j]]
            if v < best:
                best = v
        total += best
    return total


def distance_matrix(
    patients: Sequence[PatientTrajectory], weights: MetricWeights
) -> np.ndarray:
    """Symmetric matrix of pairwise trajectory distances with a zero diagonal.

    Code-level distances are cached per distinct rendering, so the cost
    scales with the number of distinct codes rather than raw sequence
    content.  Entries equal :func:`trajectory_distance` exactly.
    """
    if not patients:
        raise DataError("cohort is empty")
    ids = [p.patient_id for p in patients]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate patient ids in cohort")

    vocab: dict[str, int] = {}
    reps: list[StayCode] = []
    encoded: list[list[int]] = []
    for p in patients:
        row = []
        for c in p.codes:
            key = c.render()
            idx = vocab.get(key)
            if idx is None:
                idx = len(reps)
                vocab[key] = idx
                reps.append(c)
            row.append(idx)
        encoded.append(row)

    u = len(reps)
    table = [[0.0] * u for _ in range(u)]
    for i in range(u):
        for j in range(i + 1, u):
            d = code_distance(reps[i], reps[j], weights)
            table[i][j] = d
            table[j][i] = d

    n = len(patients)
    out = np.zeros((n, n))
    for i in range(n):
        ei = encoded[i]
        for j in range(i + 1, n):
            ej = encoded[j]
            d = 0.5 * (
                _directed_sum_cached(ei, ej, table)
                + _directed_sum_cached(ej, ei, table)
            )
            out[i, j] = d
            out[j, i] = d
    return out


def save_matrix_csv(path, matrix: np.ndarray, patient_ids: Sequence[str]) -> None:
    """Write the matrix with a patient-id header row; floats keep full precision."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] != len(patient_ids):
        raise DataError("matrix size does not match patient id count")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(patient_ids)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def load_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            ids = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty matrix file") from None
        rows = [[float(v) for v in row] for row in reader]
    matrix = np.array(rows, dtype=float)
    if matrix.shape != (len(ids), len(ids)):
        raise DataError(f"{path}: matrix shape {matrix.shape} does not match header")
    return ids, matrix


def save_matrix_binary(path, matrix: np.ndarray) -> None:
    """Compact form: little-endian int64 size, then row-major float64 entries."""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<q", matrix.shape[0]))
        fh.write(matrix.tobytes())


def load_matrix_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise DataError(f"{path}: truncated matrix file")
        (n,) = struct.unpack("<q", header)
        body = fh.read()
    expected = n * n * 8
    if len(body) != expected:
        raise DataError(f"{path}: expected {expected} payload bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(n, n).copy()
