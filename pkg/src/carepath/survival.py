"""Censored survival estimation on hospitalization cohorts.

Covers the product-limit survival curve, Harrell concordance, proportional
hazards regression with Breslow tie handling, and a random survival forest
whose leaves hold Nelson-Aalen cumulative hazards.  All estimators consume
:class:`SurvivalRecord` rows carrying the five cohort covariates plus
follow-up time and an event indicator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, NumericError

COVARIATE_NAMES = (
    "birth_year",
    "sex",
    "n_hospitalizations",
    "shock_flag",
    "total_stay_days",
)
DEFAULT_REFERENCE_YEAR = 2016
SEPARATION_BOUND = 50.0
DEFAULT_MIN_SAMPLES_SPLIT = 10
DEFAULT_MIN_SAMPLES_LEAF = 15

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class SeparationError(NumericError):
    """Monotone partial likelihood: a coefficient ran away during fitting."""


class DegenerateCovariatesError(NumericError):
    """The information matrix is singular; covariates carry no usable signal."""


@dataclass(frozen=True)
class SurvivalRecord:
    """Follow-up of one patient: covariates, time in days, event indicator."""

    patient_id: str
    birth_year: int
    sex: int
    n_hospitalizations: int
    shock_flag: int
    total_stay_days: int
    time: float
    event: int

    def __post_init__(self) -> None:
        if self.time < 0:
            raise DataError(f"patient {self.patient_id!r}: negative follow-up time")
        if self.event not in (0, 1):
            raise DataError(f"patient {self.patient_id!r}: event must be 0 or 1")
        if self.sex not in (1, 2):
            raise DataError(f"patient {self.patient_id!r}: sex must be 1 or 2")
        if self.shock_flag not in (0, 1):
            raise DataError(f"patient {self.patient_id!r}: shock_flag must be 0 or 1")


def record_covariates(record: SurvivalRecord) -> np.ndarray:
    return np.array(
        [
            record.birth_year,
            record.sex,
            record.n_hospitalizations,
            record.shock_flag,
            record.total_stay_days,
        ],
        dtype=float,
    )


def covariate_matrix(
    records: Sequence[SurvivalRecord],
    use_age: bool = False,
    reference_year: int = DEFAULT_REFERENCE_YEAR,
) -> np.ndarray:
    """Design matrix over the five cohort covariates.

    With ``use_age`` the birth year column is replaced by
    ``reference_year - birth_year``.
    """
    X = np.array([record_covariates(r) for r in records], dtype=float)
    if use_age:
        X[:, 0] = reference_year - X[:, 0]
    return X


def times_events(records: Sequence[SurvivalRecord]) -> tuple[np.ndarray, np.ndarray]:
    T = np.array([r.time for r in records], dtype=float)
    E = np.array([r.event for r in records], dtype=int)
    return T, E


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function given by jump times and post-jump values."""

    times: np.ndarray
    values: np.ndarray
    initial: float = 1.0

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise DataError("times and values must be equal-length vectors")
        if t.size and np.any(np.diff(t) <= 0):
            raise DataError("jump times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if self.times.size == 0:
            out = np.full(arr.shape, self.initial)
        else:
            idx = np.searchsorted(self.times, arr, side="right") - 1
            out = np.where(idx >= 0, self.values[np.maximum(idx, 0)], self.initial)
        if arr.ndim == 0:
            return float(out)
        return out


def _event_table(T: np.ndarray, E: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # distinct event times with event counts and at-risk counts
    event_times, d = np.unique(T[E == 1], return_counts=True)
    sorted_times = np.sort(T)
    at_risk = len(T) - np.searchsorted(sorted_times, event_times, side="left")
    return event_times, d, at_risk


def kaplan_meier(records: Sequence[SurvivalRecord]) -> StepFunction:
    """Product-limit estimate of the survival function.

    Starts at 1, multiplies by ``1 - d/n`` at each distinct event time, and
    is constant between events.  Censored times only shrink the risk sets.
    """
    if not records:
        raise DataError("no records")
    T, E = times_events(records)
    times, d, n_risk = _event_table(T, E)
    if times.size == 0:
        return StepFunction(np.empty(0), np.empty(0), initial=1.0)
    # (n - d) / n rather than 1 - d/n keeps single-event factors exact
    surv = np.cumprod((n_risk - d) / n_risk)
    return StepFunction(times, surv, initial=1.0)


def _nelson_aalen_arrays(T: np.ndarray, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    times, d, n_risk = _event_table(T, E)
    if times.size == 0:
        return np.empty(0), np.empty(0)
    return times, np.cumsum(d / n_risk)


def nelson_aalen(records: Sequence[SurvivalRecord]) -> StepFunction:
    """Cumulative hazard estimate: sum of ``d/n`` increments at event times."""
    if not records:
        raise DataError("no records")
    T, E = times_events(records)
    times, chf = _nelson_aalen_arrays(T, E)
    return StepFunction(times, chf, initial=0.0)


def c_index(risks: Sequence[float], records: Sequence[SurvivalRecord]) -> float:
    """Harrell concordance of risk scores against observed outcomes.

    A pair is comparable when the earlier time belongs to an observed event;
    the pair counts 1 when the earlier failure carries the higher risk, 0.5
    on tied risks.
    """
    risks = np.asarray(risks, dtype=float)
    T, E = times_events(records)
    if risks.shape != T.shape:
        raise DataError("risks and records must align")
    comparable = (T[:, None] < T[None, :]) & (E[:, None] == 1)
    n_comparable = int(comparable.sum())
    if n_comparable == 0:
        raise NumericError("no comparable pairs; concordance is undefined")
    ri, rj = risks[:, None], risks[None, :]
    concordant = int((comparable & (ri > rj)).sum())
    tied = int((comparable & (ri == rj)).sum())
    return (concordant + 0.5 * tied) / n_comparable


@dataclass(frozen=True, eq=False)
class CoxModel:
    """Fitted proportional-hazards model on centered covariates."""

    beta: np.ndarray
    log_partial_likelihood: float
    baseline_cumhaz: StepFunction
    covariate_means: np.ndarray
    n_iter: int

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.covariate_means) @ self.beta


def _breslow_stats(Xc, T, E, beta):
    # one descending-time sweep accumulating risk-set sums
    order = np.argsort(-T, kind="stable")
    x = Xc[order]
    t = T[order]
    e = E[order]
    eta = x @ beta
    w = np.exp(eta)
    p = Xc.shape[1]
    ll = 0.0
    grad = np.zeros(p)
    hess = np.zeros((p, p))
    s0 = 0.0
    s1 = np.zeros(p)
    s2 = np.zeros((p, p))
    n = len(t)
    i = 0
    while i < n:
        j = i
        while j < n and t[j] == t[i]:
            j += 1
        xb = x[i:j]
        wb = w[i:j]
        s0 += float(wb.sum())
        s1 += wb @ xb
        s2 += (xb * wb[:, None]).T @ xb
        ev = e[i:j] == 1
        d = int(ev.sum())
        if d:
            mean = s1 / s0
            ll += float(eta[i:j][ev].sum()) - d * np.log(s0)
            grad += xb[ev].sum(axis=0) - d * mean
            hess -= d * (s2 / s0 - np.outer(mean, mean))
        i = j
    return ll, grad, hess


def _breslow_baseline(Xc, T, E, beta) -> StepFunction:
    order = np.argsort(-T, kind="stable")
    t = T[order]
    e = E[order]
    w = np.exp(Xc[order] @ beta)
    s0 = 0.0
    times: list[float] = []
    increments: list[float] = []
    n = len(t)
    i = 0
    while i < n:
        j = i
        while j < n and t[j] == t[i]:
            j += 1
        s0 += float(w[i:j].sum())
        d = int((e[i:j] == 1).sum())
        if d:
            times.append(float(t[i]))
            increments.append(d / s0)
        i = j
    times.reverse()
    increments.reverse()
    return StepFunction(np.array(times), np.cumsum(increments), initial=0.0)


def cox_fit(
    records: Sequence[SurvivalRecord],
    covariates: np.ndarray | None = None,
    use_age: bool = False,
    reference_year: int = DEFAULT_REFERENCE_YEAR,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> CoxModel:
    """Fit a proportional-hazards model by damped Newton iterations.

    Ties use the Breslow approximation.  Covariates are centered before
    fitting; ``covariates`` overrides the default five-column design.
    Convergence means the gradient max-norm drops below ``tol``; a
    coefficient passing +-50 raises :class:`SeparationError` and a singular
    information matrix raises :class:`DegenerateCovariatesError`.
    """
    if covariates is None:
        X = covariate_matrix(records, use_age=use_age, reference_year=reference_year)
    else:
        X = np.asarray(covariates, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
    T, E = times_events(records)
    if X.shape[0] != len(T):
        raise DataError("covariate rows and records must align")
    if int(E.sum()) < 2:
        raise DataError("need at least two events to fit")

    means = X.mean(axis=0)
    Xc = X - means
    beta = np.zeros(X.shape[1])
    ll, grad, hess = _breslow_stats(Xc, T, E, beta)
    n_iter = 0
    for _ in range(max_iter):
        if float(np.max(np.abs(grad))) < tol:
            break
        n_iter += 1
        try:
            delta = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError as exc:
            raise DegenerateCovariatesError("singular information matrix") from exc
        step = 1.0
        improved = False
        for _ in range(45):
            cand = beta + step * delta
            ll_new, grad_new, hess_new = _breslow_stats(Xc, T, E, cand)
            if ll_new >= ll - 1e-12:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        beta, ll, grad, hess = cand, ll_new, grad_new, hess_new
        if float(np.max(np.abs(beta))) > SEPARATION_BOUND:
            raise SeparationError(
                f"coefficient magnitude exceeded {SEPARATION_BOUND}; likely separation"
            )
    baseline = _breslow_baseline(Xc, T, E, beta)
    return CoxModel(
        beta=beta,
        log_partial_likelihood=float(ll),
        baseline_cumhaz=baseline,
        covariate_means=means,
        n_iter=n_iter,
    )


def cox_aic(model: CoxModel, p: int) -> float:
    """Akaike information criterion: ``2 p - 2 log PL``."""
    return 2.0 * p - 2.0 * model.log_partial_likelihood


def logrank_statistic(T: np.ndarray, E: np.ndarray, group: np.ndarray) -> float:
    """Absolute standardized two-sample log-rank statistic.

    ``group`` flags membership of the first sample.  Zero when the split
    separates nothing (or the variance vanishes).
    """
    T = np.asarray(T, dtype=float)
    E = np.asarray(E, dtype=int)
    group = np.asarray(group, dtype=bool)
    uniq, ranks = np.unique(T, return_inverse=True)
    u = uniq.size
    d = np.bincount(ranks[E == 1], minlength=u)
    total = np.bincount(ranks, minlength=u)
    at_risk = np.cumsum(total[::-1])[::-1]
    in1 = np.bincount(ranks[group], minlength=u)
    at_risk1 = np.cumsum(in1[::-1])[::-1]
    d1 = np.bincount(ranks[group & (E == 1)], minlength=u)
    return _split_stat(d, at_risk, d1, at_risk1)


@dataclass(eq=False)
class SurvivalForest:
    """Bagged survival trees splitting on the log-rank statistic."""

    trees: list[dict]
    bootstrap_indices: list[np.ndarray]
    event_times: np.ndarray
    n_estimators: int
    mtry: int
    min_samples_split: int
    min_samples_leaf: int
    seed: int
    use_age: bool = False
    reference_year: int = DEFAULT_REFERENCE_YEAR


def _leaf(T, E) -> dict:
    times, chf = _nelson_aalen_arrays(T, E)
    return {"times": times, "chf": chf}


def _best_split(X, T, E, rng, mtry, min_leaf):
    n, p = X.shape
    feats = np.sort(rng.choice(p, size=min(mtry, p), replace=False))
    uniq, ranks = np.unique(T, return_inverse=True)
    u = uniq.size
    d = np.bincount(ranks[E == 1], minlength=u)
    total = np.bincount(ranks, minlength=u)
    at_risk = np.cumsum(total[::-1])[::-1]
    events = E == 1

    best_stat = 0.0
    best = None
    for f in feats:
        vals = X[:, f]
        levels = np.unique(vals)
        if levels.size < 2:
            continue
        thresholds = (levels[:-1] + levels[1:]) / 2.0
        for thr in thresholds:
            mask = vals <= thr
            n_left = int(mask.sum())
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            in1 = np.bincount(ranks[mask], minlength=u)
            at_risk1 = np.cumsum(in1[::-1])[::-1]
            d1 = np.bincount(ranks[mask & events], minlength=u)
            stat = _split_stat(d, at_risk, d1, at_risk1)
            if stat > best_stat:
                best_stat = stat
                best = (int(f), float(thr), mask)
    return best


def _split_stat(d, at_risk, d1, at_risk1) -> float:
    has_events = d > 0
    if not has_events.any():
        return 0.0
    d_e = d[has_events]
    y_e = at_risk[has_events]
    frac = at_risk1[has_events] / y_e
    num = float(np.sum(d1[has_events] - d_e * frac))
    ok = y_e > 1
    var = float(
        np.sum(
            d_e[ok]
            * frac[ok]
            * (1.0 - frac[ok])
            * (y_e[ok] - d_e[ok])
            / (y_e[ok] - 1.0)
        )
    )
    if var <= 0.0:
        return 0.0
    return abs(num) / np.sqrt(var)


def _grow(X, T, E, rng, mtry, min_split, min_leaf) -> dict:
    if len(T) < min_split:
        return _leaf(T, E)
    split = _best_split(X, T, E, rng, mtry, min_leaf)
    if split is None:
        return _leaf(T, E)
    feature, threshold, mask = split
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _grow(X[mask], T[mask], E[mask], rng, mtry, min_split, min_leaf),
        "right": _grow(X[~mask], T[~mask], E[~mask], rng, mtry, min_split, min_leaf),
    }


def rsf_fit(
    records: Sequence[SurvivalRecord],
    n_estimators: int,
    mtry: int | None = None,
    seed: int = 0,
    min_samples_split: int = DEFAULT_MIN_SAMPLES_SPLIT,
    min_samples_leaf: int = DEFAULT_MIN_SAMPLES_LEAF,
    use_age: bool = False,
    reference_year: int = DEFAULT_REFERENCE_YEAR,
) -> SurvivalForest:
    """Grow a random survival forest on bootstrap samples of ``records``.

    Each tree draws its own generator from ``(seed, tree_index)``, takes a
    with-replacement bootstrap of size n, and recursively picks the
    (feature, midpoint-threshold) split maximizing the two-sample log-rank
    statistic among ``mtry`` randomly chosen covariates.  Leaves keep the
    Nelson-Aalen cumulative hazard of the records that reached them.
    """
    if n_estimators < 1:
        raise DataError("n_estimators must be >= 1")
    if not records:
        raise DataError("no records")
    X = covariate_matrix(records, use_age=use_age, reference_year=reference_year)
    T, E = times_events(records)
    n, p = X.shape
    if mtry is None:
        mtry = int(np.ceil(np.sqrt(p)))
    if mtry < 1:
        raise DataError("mtry must be >= 1")

    trees: list[dict] = []
    boots: list[np.ndarray] = []
    for tree_index in range(n_estimators):
        rng = np.random.default_rng([seed, tree_index])
        idx = rng.integers(0, n, size=n)
        boots.append(idx)
        trees.append(
            _grow(X[idx], T[idx], E[idx], rng, mtry, min_samples_split, min_samples_leaf)
        )
    return SurvivalForest(
        trees=trees,
        bootstrap_indices=boots,
        event_times=np.unique(T[E == 1]),
        n_estimators=n_estimators,
        mtry=mtry,
        min_samples_split=min_samples_split,
        min_samples_leaf=min_samples_leaf,
        seed=seed,
        use_age=use_age,
        reference_year=reference_year,
    )


def _find_leaf(tree: dict, x: np.ndarray) -> dict:
    node = tree
    while "feature" in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node


def _eval_steps(times: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    if times.size == 0:
        return np.zeros(grid.shape)
    idx = np.searchsorted(times, grid, side="right") - 1
    return np.where(idx >= 0, values[np.maximum(idx, 0)], 0.0)


def _model_vector(forest: SurvivalForest, covariates) -> np.ndarray:
    x = np.array(covariates, dtype=float)
    if x.ndim != 1:
        raise DataError("covariates must be a flat vector")
    if forest.use_age:
        x = x.copy()
        x[0] = forest.reference_year - x[0]
    return x


def rsf_predict(forest: SurvivalForest, covariates) -> tuple[StepFunction, float]:
    """Ensemble survival curve and risk score for one covariate vector.

    The cumulative hazard is the tree average evaluated on the union of the
    reached leaves' jump times; survival is its exponential decay, and the
    risk score sums the cumulative hazard over the training event-time grid.
    """
    x = _model_vector(forest, covariates)
    leaves = [_find_leaf(tree, x) for tree in forest.trees]
    parts = [leaf["times"] for leaf in leaves if leaf["times"].size]
    if not parts:
        return StepFunction(np.empty(0), np.empty(0), initial=1.0), 0.0
    grid = np.unique(np.concatenate(parts))
    acc = np.zeros(grid.shape)
    for leaf in leaves:
        acc += _eval_steps(leaf["times"], leaf["chf"], grid)
    chf = acc / len(leaves)
    risk = float(_eval_steps(grid, chf, forest.event_times).sum())
    return StepFunction(grid, np.exp(-chf), initial=1.0), risk


def rsf_risk_scores(
    forest: SurvivalForest, records: Sequence[SurvivalRecord]
) -> np.ndarray:
    """Risk scores for many records at once, sharing per-leaf partial sums."""
    X = covariate_matrix(records)  # raw; _model_vector applies the forest transform
    cache: dict[int, float] = {}
    out = np.empty(len(records))
    for i in range(len(records)):
        x = _model_vector(forest, X[i])
        total = 0.0
        for tree in forest.trees:
            leaf = _find_leaf(tree, x)
            key = id(leaf)
            val = cache.get(key)
            if val is None:
                val = float(
                    _eval_steps(leaf["times"], leaf["chf"], forest.event_times).sum()
                )
                cache[key] = val
            total += val
        out[i] = total / len(forest.trees)
    return out


def scenario_curves(
    forest: SurvivalForest, records: Sequence[SurvivalRecord]
) -> tuple[StepFunction, StepFunction]:
    """Most and least favorable member survival curves of a patient group.

    Every record's predicted survival is evaluated on a shared grid (zero
    plus the training event times) and ranked by trapezoidal area under the
    curve; ties keep the earliest record.
    """
    if not records:
        raise DataError("no records")
    grid = np.unique(np.concatenate([[0.0], forest.event_times]))
    curves: list[StepFunction] = []
    areas: list[float] = []
    for rec in records:
        surv, _ = rsf_predict(forest, record_covariates(rec))
        vals = surv(grid)
        curves.append(StepFunction(grid, vals, initial=1.0))
        areas.append(float(_trapezoid(vals, grid)))
    best = int(np.argmax(areas))
    worst = int(np.argmin(areas))
    return curves[best], curves[worst]
