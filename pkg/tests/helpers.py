"""Shared test utilities: random domain objects and independent reference
implementations used to cross-check the package ("oracles")."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from carepath.codes import DEATH, StayCode
from carepath.metric import MetricWeights, PatientTrajectory
from carepath.synthetic import ArchetypeSpec

CARE_TYPES = "CKM"
SEVERITIES = "1234_"


def random_code(rng: np.random.Generator) -> StayCode:
    return StayCode(
        category=f"{int(rng.integers(0, 28)):02d}",
        care_type=CARE_TYPES[int(rng.integers(0, len(CARE_TYPES)))],
        counter=f"{int(rng.integers(0, 40)):02d}",
        severity=SEVERITIES[int(rng.integers(0, len(SEVERITIES)))],
    )


def random_trajectory(
    rng: np.random.Generator,
    patient_id: str,
    max_len: int = 6,
    death_prob: float = 0.3,
) -> PatientTrajectory:
    length = int(rng.integers(1, max_len + 1))
    codes = [random_code(rng) for _ in range(length)]
    if rng.random() < death_prob:
        codes.append(DEATH)
    return PatientTrajectory(patient_id, tuple(codes))


def random_weights(rng: np.random.Generator, cap: int = 100) -> MetricWeights:
    draws = sorted((int(x) for x in rng.integers(0, cap + 1, size=4)), reverse=True)
    return MetricWeights(*draws)


# ---------------------------------------------------------------------------
# reference implementations


def oracle_levenshtein(a: str, b: str) -> int:
    """Memoized recursive edit distance, the textbook definition."""

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        cost = 0 if a[i - 1] == b[j - 1] else 1
        return min(rec(i - 1, j) + 1, rec(i, j - 1) + 1, rec(i - 1, j - 1) + cost)

    return rec(len(a), len(b))


def oracle_code_distance(a: StayCode, b: StayCode, w: MetricWeights) -> float:
    if a.is_death and b.is_death:
        return 0.0
    if a.is_death or b.is_death:
        return float(w.category + w.care_type + w.counter + w.severity)

    def ratio(x: str, y: str) -> float:
        return oracle_levenshtein(x, y) / max(len(x), len(y))

    return (
        w.category * ratio(a.category, b.category)
        + w.care_type * ratio(a.care_type, b.care_type)
        + w.counter * ratio(a.counter, b.counter)
        + w.severity * ratio(a.severity, b.severity)
    )


def oracle_trajectory_distance(
    a: PatientTrajectory, b: PatientTrajectory, w: MetricWeights
) -> float:
    def directed(xs, ys) -> float:
        total = 0.0
        for i in range(len(xs)):
            window = sorted({min(max(j, 0), len(ys) - 1) for j in (i - 1, i, i + 1)})
            total += min(oracle_code_distance(xs[i], ys[j], w) for j in window)
        return total

    return (directed(a.codes, b.codes) + directed(b.codes, a.codes)) / 2.0


def oracle_pattern_supports(db, max_len: int) -> dict[tuple[str, ...], int]:
    """Brute force: enumerate every distinct subsequence, count containment."""

    def subsequences(seq):
        out = set()
        for r in range(1, min(max_len, len(seq)) + 1):
            for picks in combinations(range(len(seq)), r):
                out.add(tuple(seq[i] for i in picks))
        return out

    candidates: set[tuple[str, ...]] = set()
    for seq in db:
        candidates |= subsequences(seq)

    def contains(seq, pattern) -> bool:
        it = iter(seq)
        return all(any(item == want for item in it) for want in pattern)

    return {
        pattern: sum(1 for seq in db if contains(seq, pattern))
        for pattern in candidates
    }


def oracle_nelson_aalen(times, events):
    """Plain-loop cumulative hazard estimate: sum of d/n at event times."""
    times = list(times)
    events = list(events)
    grid = sorted({t for t, e in zip(times, events) if e == 1})
    out_t, out_v = [], []
    acc = 0.0
    for t in grid:
        d = sum(1 for tt, ee in zip(times, events) if tt == t and ee == 1)
        n = sum(1 for tt in times if tt >= t)
        acc += d / n
        out_t.append(t)
        out_v.append(acc)
    return out_t, out_v


def oracle_c_index(risks, times, events) -> float:
    mass = 0.0
    pairs = 0
    n = len(risks)
    for i in range(n):
        for j in range(n):
            if i == j or events[i] != 1 or not times[i] < times[j]:
                continue
            pairs += 1
            if risks[i] > risks[j]:
                mass += 1.0
            elif risks[i] == risks[j]:
                mass += 0.5
    if pairs == 0:
        raise ZeroDivisionError("no comparable pairs")
    return mass / pairs


def oracle_cox_logpl(beta: float, x, T, E) -> float:
    """Single-covariate Breslow log partial likelihood."""
    x = np.asarray(x, dtype=float)
    T = np.asarray(T, dtype=float)
    E = np.asarray(E, dtype=int)
    order = np.argsort(-T, kind="stable")
    xs, ts, es = x[order], T[order], E[order]
    cw = np.cumsum(np.exp(beta * xs))
    block_end = np.searchsorted(-ts, -ts, side="right")
    ll = 0.0
    for i in np.nonzero(es == 1)[0]:
        ll += beta * xs[i] - np.log(cw[block_end[i] - 1])
    return float(ll)


# ---------------------------------------------------------------------------
# synthetic batteries for specific scenarios


def blob_archetypes() -> list[ArchetypeSpec]:
    """Two subpopulations with disjoint code categories, easy to separate."""
    shared = dict(
        stickiness=0.5,
        death_hazard=0.05,
        p_female=0.5,
        p_shock=0.1,
        mean_stay_days=5.0,
        base_rate=1.0 / 2000.0,
        beta_age=1.0,
        beta_sex=0.1,
        beta_shock=0.5,
    )
    return [
        ArchetypeSpec(
            name="cardiac",
            code_pool=(("05M091", 2.0), ("05M092", 3.0), ("05M093", 1.0)),
            birth_year_range=(1930, 1950),
            **shared,
        ),
        ArchetypeSpec(
            name="renal",
            code_pool=(("11M041", 2.0), ("11M042", 3.0), ("11M043", 1.0)),
            birth_year_range=(1935, 1955),
            **shared,
        ),
    ]


def strong_signal_archetypes() -> list[ArchetypeSpec]:
    """One population whose hazard leans hard on age and shock."""
    return [
        ArchetypeSpec(
            name="gradient",
            code_pool=(("05M091", 1.0), ("05M092", 1.0)),
            stickiness=0.5,
            death_hazard=0.0,
            birth_year_range=(1920, 1960),
            p_female=0.5,
            p_shock=0.3,
            mean_stay_days=5.0,
            base_rate=1.0 / 3000.0,
            beta_age=2.5,
            beta_sex=0.1,
            beta_shock=1.5,
        )
    ]
