"""End-to-end orchestration: cohort in, analysis artifacts out.

A run ingests (or synthesizes) a cohort, optionally tunes the metric
weights and cluster count, builds the distance matrix, clusters around
medoids, mines per-cluster code patterns, fits per-cluster survival models,
and writes every report as CSV plus a manifest that pins the run.  All
randomness derives from one master seed, so a fixed configuration
reproduces its artifact directory byte for byte.  On failure the partial
output directory is removed and the failing stage is named.
"""

from __future__ import annotations

import configparser
import csv
import platform
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dataio import load_dataset, write_covariates_csv, write_trajectories_csv
from .errors import DataError, NumericError
from .kmedoids import Clustering, fit_kmedoids, medoid_profile
from .metric import (
    MetricWeights,
    PatientTrajectory,
    distance_matrix,
    save_matrix_binary,
    save_matrix_csv,
)
from .patterns import MinedPattern, MiningConfig, frequent_patterns, render_pattern, topk
from .survival import (
    SurvivalRecord,
    c_index,
    covariate_matrix,
    cox_aic,
    cox_fit,
    rsf_fit,
    rsf_risk_scores,
    scenario_curves,
)
from .synthetic import generate_cohort
from .tuning import ScoreConfig, tune_search, write_trial_log

NONE_TOKEN = "none"

DEFAULT_WEIGHTS = MetricWeights(85, 75, 55, 40)


class StageError(RuntimeError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    seed: int = 0
    out_dir: str = "artifacts"
    trajectory_csv: str | None = None
    covariate_csv: str | None = None
    synth_patients: int = 0
    synth_max_len: int = 8
    horizon_days: float = 1825.0
    weights: MetricWeights = DEFAULT_WEIGHTS
    tune_budget: int = 0
    k: int = 5
    min_support: int = 2
    mining_max_len: int = 3
    top_k: int = 3
    trees: int = 100
    mtry: int | None = None
    test_size: float = 0.25
    use_age: bool = False
    reference_year: int = 2016
    positions: int = 10
    sankey_pairs: int = 2

    def validate(self) -> None:
        synth = self.synth_patients > 0
        files = self.trajectory_csv is not None and self.covariate_csv is not None
        if synth == files:
            raise DataError(
                "configure exactly one data source: synth_patients or both CSV paths"
            )
        if self.k < 1:
            raise DataError("k must be >= 1")
        if self.tune_budget < 0:
            raise DataError("tune_budget must be >= 0")
        if not 0.0 < self.test_size < 1.0:
            raise DataError("test_size must be in (0, 1)")
        if self.trees < 1:
            raise DataError("trees must be >= 1")
        if self.positions < 1 or self.sankey_pairs < 0:
            raise DataError("bad report geometry")


@dataclass(frozen=True)
class FrequencyTable:
    """Per-position code proportions, one column per trajectory position."""

    positions: int
    columns: tuple[tuple[tuple[str, float], ...], ...]
    denominators: tuple[int, ...]


def frequency_table(
    trajectories: Sequence[PatientTrajectory], positions: int, top_k: int
) -> FrequencyTable:
    """Most frequent codes at each position among trajectories reaching it.

    Proportions divide by the number of trajectories with that position, so
    an anchored cohort reports its anchor at proportion 1.0 in column 0.
    """
    if positions < 1:
        raise DataError("positions must be >= 1")
    if top_k < 1:
        raise DataError("top_k must be >= 1")
    columns = []
    denominators = []
    for pos in range(positions):
        holders = [t for t in trajectories if len(t.codes) > pos]
        denominators.append(len(holders))
        if not holders:
            columns.append(())
            continue
        counts: dict[str, int] = {}
        for t in holders:
            key = t.codes[pos].render()
            counts[key] = counts.get(key, 0) + 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
        columns.append(
            tuple((code, count / len(holders)) for code, count in ranked)
        )
    return FrequencyTable(positions, tuple(columns), tuple(denominators))


@dataclass(frozen=True)
class SankeyEdge:
    source_pos: int
    source_code: str
    target_pos: int
    target_code: str
    count: int


def sankey_flows(
    trajectories: Sequence[PatientTrajectory],
    position_pairs: Sequence[tuple[int, int]],
    top_k: int,
) -> list[SankeyEdge]:
    """Top transition bigrams between consecutive positions.

    For each (i, i+1) pair, every trajectory with an i-th stay contributes
    the ordered pair of renderings, with a missing successor encoded as the
    ``none`` token; the ``top_k`` bigrams by count are kept per pair.
    """
    edges: list[SankeyEdge] = []
    for source_pos, target_pos in position_pairs:
        if target_pos != source_pos + 1 or source_pos < 0:
            raise DataError(f"position pair {(source_pos, target_pos)} is not consecutive")
        corpus = []
        for t in trajectories:
            if len(t.codes) <= source_pos:
                continue
            source = t.codes[source_pos].render()
            target = (
                t.codes[target_pos].render()
                if len(t.codes) > target_pos
                else NONE_TOKEN
            )
            corpus.append([source, target])
        for mined in topk(corpus, top_k, min_len=2):
            edges.append(
                SankeyEdge(
                    source_pos=source_pos,
                    source_code=mined.pattern[0],
                    target_pos=target_pos,
                    target_code=mined.pattern[1],
                    count=mined.support,
                )
            )
    return edges


@dataclass
class ClusterMetrics:
    cluster: int
    size: int
    aic: float | None
    c_index: float | None


@dataclass
class RunResult:
    out_dir: Path
    weights: MetricWeights
    k: int
    clustering: Clustering
    trajectories: list[PatientTrajectory]
    records: list[SurvivalRecord]
    metrics: list[ClusterMetrics]
    tuned: bool


def _derived_seed(*parts: int) -> int:
    return int(np.random.default_rng(list(parts)).integers(0, 2**31 - 1))


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_frequency_csv(path: Path, table: FrequencyTable) -> None:
    codes = sorted({code for column in table.columns for code, _ in column})
    by_column = [dict(column) for column in table.columns]
    rows = []
    for code in codes:
        rows.append(
            [code]
            + [
                f"{col[code]:.6f}" if code in col else ""
                for col in by_column
            ]
        )
    header = ["code"] + [f"p{i}" for i in range(table.positions)]
    _write_csv(path, header, rows)


def _pattern_report_rows(
    scope: str,
    db: Sequence[Sequence[str]],
    cfg: PipelineConfig,
) -> list[list]:
    mining = MiningConfig(
        min_support=cfg.min_support, min_len=1, max_len=cfg.mining_max_len
    )
    by_len: dict[int, list[MinedPattern]] = {}
    for mined in frequent_patterns(db, mining):
        by_len.setdefault(len(mined.pattern), []).append(mined)
    rows = []
    for length in range(1, cfg.mining_max_len + 1):
        for rank, mined in enumerate(by_len.get(length, [])[: cfg.top_k], start=1):
            rows.append(
                [
                    scope,
                    length,
                    rank,
                    mined.support,
                    f"{mined.support / len(db):.6f}",
                    render_pattern(mined.pattern),
                ]
            )
    return rows


def _split_indices(m: int, test_size: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    n_test = max(1, int(round(m * test_size)))
    if n_test >= m:
        n_test = m - 1
    return perm[n_test:], perm[:n_test]


def _nonconstant_columns(X: np.ndarray) -> np.ndarray:
    return np.array([np.unique(X[:, j]).size > 1 for j in range(X.shape[1])])


def run_pipeline(cfg: PipelineConfig) -> RunResult:
    cfg.validate()
    out = Path(cfg.out_dir)
    if out.exists() and any(out.iterdir()):
        raise DataError(f"output directory {out} exists and is not empty")
    out.mkdir(parents=True, exist_ok=True)

    stage = "data"
    try:
        # --- data -----------------------------------------------------
        if cfg.synth_patients > 0:
            trajectories, records, _ = generate_cohort(
                cfg.synth_patients,
                seed=_derived_seed(cfg.seed, 0),
                max_len=cfg.synth_max_len,
                horizon_days=cfg.horizon_days,
            )
            write_trajectories_csv(out / "trajectories.csv", trajectories)
            write_covariates_csv(out / "covariates.csv", records)
            # reload through the ingestion path so both sources behave alike
            trajectories, records = load_dataset(
                out / "trajectories.csv", out / "covariates.csv"
            )
        else:
            trajectories, records = load_dataset(cfg.trajectory_csv, cfg.covariate_csv)
        db = [t.renderings() for t in trajectories]

        # --- tuning ---------------------------------------------------
        stage = "tuning"
        weights, k = cfg.weights, cfg.k
        tuned = cfg.tune_budget > 0
        if tuned:
            best, log = tune_search(
                trajectories,
                db,
                budget=cfg.tune_budget,
                seed=_derived_seed(cfg.seed, 4),
                score_cfg=ScoreConfig(top_per_length=cfg.top_k),
            )
            weights, k = best.weights, best.k
            write_trial_log(out / "trial_log.csv", log)

        # --- distance matrix -----------------------------------------
        stage = "distance"
        matrix = distance_matrix(trajectories, weights)
        patient_ids = [t.patient_id for t in trajectories]
        save_matrix_csv(out / "distance_matrix.csv", matrix, patient_ids)
        save_matrix_binary(out / "distance_matrix.bin", matrix)

        # --- clustering ----------------------------------------------
        stage = "clustering"
        clustering = fit_kmedoids(matrix, k, seed=_derived_seed(cfg.seed, 1))
        medoid_set = set(clustering.medoid_indices)
        _write_csv(
            out / "assignments.csv",
            ("patient_id", "cluster", "distance_to_medoid", "is_medoid"),
            (
                [
                    patient_ids[i],
                    int(clustering.assignment[i]),
                    repr(float(clustering.distance_to_medoid[i])),
                    1 if i in medoid_set else 0,
                ]
                for i in range(len(patient_ids))
            ),
        )

        members: dict[int, list[int]] = {c: [] for c in range(k)}
        for i, label in enumerate(clustering.assignment):
            members[int(label)].append(i)

        # --- pattern report ------------------------------------------
        stage = "patterns"
        pattern_rows = _pattern_report_rows("all", db, cfg)
        for cid in range(k):
            cluster_db = [db[i] for i in members[cid]]
            pattern_rows.extend(_pattern_report_rows(f"cluster_{cid}", cluster_db, cfg))
        _write_csv(
            out / "patterns.csv",
            ("scope", "length", "rank", "count", "frequency", "pattern"),
            pattern_rows,
        )

        # --- frequency tables (deceased subset) ----------------------
        stage = "frequency"
        deceased = [t for t in trajectories if t.ends_in_death]
        if deceased:
            write_frequency_csv(
                out / "frequency_global.csv",
                frequency_table(deceased, cfg.positions, cfg.top_k),
            )
        for cid in range(k):
            dead = [trajectories[i] for i in members[cid] if trajectories[i].ends_in_death]
            if dead:
                write_frequency_csv(
                    out / f"frequency_cluster_{cid}.csv",
                    frequency_table(dead, cfg.positions, cfg.top_k),
                )

        # --- sankey flows --------------------------------------------
        stage = "sankey"
        pairs = [(i, i + 1) for i in range(cfg.sankey_pairs)]
        for cid in range(k):
            cluster_traj = [trajectories[i] for i in members[cid]]
            edges = sankey_flows(cluster_traj, pairs, cfg.top_k)
            _write_csv(
                out / f"sankey_cluster_{cid}.csv",
                ("source_pos", "source_code", "target_pos", "target_code", "count"),
                (
                    [e.source_pos, e.source_code, e.target_pos, e.target_code, e.count]
                    for e in edges
                ),
            )

        # --- medoid profiles -----------------------------------------
        stage = "profiles"
        profile_rows = []
        for i, traj in enumerate(trajectories):
            cid = int(clustering.assignment[i])
            medoid = trajectories[clustering.medoid_indices[cid]]
            for pos, dist in enumerate(medoid_profile(traj, medoid, weights)):
                profile_rows.append([traj.patient_id, cid, pos, repr(float(dist))])
        _write_csv(
            out / "medoid_profiles.csv",
            ("patient_id", "cluster", "position", "distance"),
            profile_rows,
        )

        # --- survival models -----------------------------------------
        stage = "survival"
        metrics: list[ClusterMetrics] = []
        for cid in range(k):
            cluster_records = [records[i] for i in members[cid]]
            aic = _cluster_cox_aic(cluster_records, cfg)
            cidx, forest = _cluster_rsf_cindex(cluster_records, cfg, cid)
            metrics.append(ClusterMetrics(cid, len(cluster_records), aic, cidx))
            if forest is not None:
                best, worst = scenario_curves(forest, cluster_records)
                rows = []
                for label, curve in (("best", best), ("worst", worst)):
                    for t, s in zip(curve.times, curve.values):
                        rows.append([label, repr(float(t)), repr(float(s))])
                _write_csv(
                    out / f"scenarios_cluster_{cid}.csv",
                    ("scenario", "time", "survival"),
                    rows,
                )
        _write_csv(
            out / "metrics.csv",
            ("cluster", "size", "aic", "c_index"),
            (
                [m.cluster, m.size, _fmt(m.aic), _fmt(m.c_index)]
                for m in metrics
            ),
        )

        # --- manifest -------------------------------------------------
        stage = "manifest"
        _write_manifest(out / "manifest.ini", cfg, weights, k, tuned)
    except Exception as exc:
        shutil.rmtree(out, ignore_errors=True)
        raise StageError(stage, exc) from exc

    return RunResult(
        out_dir=out,
        weights=weights,
        k=k,
        clustering=clustering,
        trajectories=trajectories,
        records=records,
        metrics=metrics,
        tuned=tuned,
    )


def cohort_cox_aic(
    records: Sequence[SurvivalRecord],
    use_age: bool = False,
    reference_year: int = 2016,
) -> float | None:
    """AIC of a proportional-hazards fit on the non-constant covariates.

    Returns ``None`` when no covariate varies or the fit degenerates.
    """
    X = covariate_matrix(records, use_age=use_age, reference_year=reference_year)
    keep = _nonconstant_columns(X)
    if not keep.any():
        return None
    try:
        model = cox_fit(records, covariates=X[:, keep])
    except (DataError, NumericError):
        return None
    return cox_aic(model, int(keep.sum()))


def holdout_rsf(
    records: Sequence[SurvivalRecord],
    trees: int,
    mtry: int | None,
    seed: int,
    test_size: float = 0.25,
    use_age: bool = False,
    reference_year: int = 2016,
):
    """Forest on a seeded train split, concordance on the held-out rest.

    Returns ``(c_index, forest)``, or ``(None, None)`` when the group is
    too small or the statistic is undefined on the holdout.
    """
    m = len(records)
    if m < 4:
        return None, None
    train_idx, test_idx = _split_indices(m, test_size, seed)
    train = [records[i] for i in train_idx]
    test = [records[i] for i in test_idx]
    try:
        forest = rsf_fit(
            train,
            n_estimators=trees,
            mtry=mtry,
            seed=seed,
            use_age=use_age,
            reference_year=reference_year,
        )
        risks = rsf_risk_scores(forest, test)
        value = c_index(risks, test)
    except (DataError, NumericError):
        return None, None
    return value, forest


def _cluster_cox_aic(records: list[SurvivalRecord], cfg: PipelineConfig) -> float | None:
    return cohort_cox_aic(records, cfg.use_age, cfg.reference_year)


def _cluster_rsf_cindex(records: list[SurvivalRecord], cfg: PipelineConfig, cid: int):
    return holdout_rsf(
        records,
        trees=cfg.trees,
        mtry=cfg.mtry,
        seed=_derived_seed(cfg.seed, 3, cid),
        test_size=cfg.test_size,
        use_age=cfg.use_age,
        reference_year=cfg.reference_year,
    )


def _write_manifest(
    path: Path, cfg: PipelineConfig, weights: MetricWeights, k: int, tuned: bool
) -> None:
    parser = configparser.ConfigParser()
    parser["versions"] = {
        "carepath": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    data = {}
    if cfg.synth_patients > 0:
        data["synth_patients"] = str(cfg.synth_patients)
        data["synth_max_len"] = str(cfg.synth_max_len)
        data["horizon_days"] = repr(cfg.horizon_days)
    else:
        data["trajectories"] = str(cfg.trajectory_csv)
        data["covariates"] = str(cfg.covariate_csv)
    parser["run"] = {"seed": str(cfg.seed)}
    parser["data"] = data
    parser["metric"] = {
        "weights": ",".join(str(w) for w in weights.as_tuple()),
        "tune_budget": str(cfg.tune_budget),
        "tuned": str(tuned).lower(),
    }
    parser["cluster"] = {"k": str(k)}
    parser["mining"] = {
        "min_support": str(cfg.min_support),
        "max_len": str(cfg.mining_max_len),
        "top_k": str(cfg.top_k),
    }
    parser["survival"] = {
        "trees": str(cfg.trees),
        "mtry": "" if cfg.mtry is None else str(cfg.mtry),
        "test_size": repr(cfg.test_size),
        "use_age": str(cfg.use_age).lower(),
        "reference_year": str(cfg.reference_year),
    }
    parser["report"] = {
        "positions": str(cfg.positions),
        "sankey_pairs": str(cfg.sankey_pairs),
    }
    with open(path, "w") as fh:
        parser.write(fh)
