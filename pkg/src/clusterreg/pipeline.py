"""End-to-end workflow: clean, cluster, aggregate, log-transform, fit the
three penalized models, profile clusters, and forecast a holdout window.

The regression target I(t) is the grand total emission in year t, which
by construction equals the sum of the per-cluster regressors x_i(t); the
conservation identity is asserted on every run. Models are fitted on the
training years only; the elastic-net fit produces the holdout forecasts.
"""

from __future__ import annotations

import configparser
import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import clustering, preprocess, regression
from .clustering import NOISE, ClusterAssignment
from .dataio import EnergyPanel, load_panel, save_report, validate_panel
from .errors import ClusterRegError, ConfigError, PipelineStageError

ARTIFACT_FILES = (
    "assignment.csv",
    "cluster_quality.csv",
    "model_ridge.json",
    "model_lasso.json",
    "model_elastic_net.json",
    "path_ridge.csv",
    "path_lasso.csv",
    "path_elastic_net.csv",
    "forecast.csv",
    "pipeline_report.json",
)

CONSERVATION_TOL = 1e-9

_DEFAULT_EPS_GRID = [round(0.05 * k, 2) for k in range(1, 41)]  # 0.05 .. 2.00
_DEFAULT_MINPTS_GRID = [1, 2, 3, 4, 5]
_DEFAULT_RIDGE_GRID = [round(0.01 * k, 2) for k in range(0, 51)]  # 0.00 .. 0.50
_DEFAULT_L1_GRID = [float(v) for v in np.logspace(-8, 1, 28)]


def parse_grid(text: str) -> list[float]:
    """Parse a grid spec: 'a:b:step' (inclusive), 'logspace:e0:e1:count',
    or a comma-separated list."""
    text = text.strip()
    if text.startswith("logspace:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"bad logspace grid {text!r}, want logspace:e0:e1:count")
        e0, e1, count = float(parts[1]), float(parts[2]), int(parts[3])
        if count < 1:
            raise ConfigError("logspace grid needs count >= 1")
        return [float(v) for v in np.logspace(e0, e1, count)]
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad range grid {text!r}, want start:stop:step")
        a, b, step = (float(p) for p in parts)
        if step <= 0 or b < a:
            raise ConfigError(f"bad range grid {text!r}")
        count = int(round((b - a) / step)) + 1
        vals = [a + step * k for k in range(count)]
        return [v for v in vals if v <= b + 1e-12]
    vals = [float(p) for p in text.split(",") if p.strip()]
    if not vals:
        raise ConfigError(f"empty grid {text!r}")
    return vals


def parse_years(text: str) -> list[int]:
    """Parse a year range 'a-b' (inclusive) or a comma-separated list."""
    text = text.strip()
    if "-" in text and "," not in text:
        a, b = text.split("-", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ConfigError(f"bad year range {text!r}")
        return list(range(lo, hi + 1))
    years = [int(p) for p in text.split(",") if p.strip()]
    if not years:
        raise ConfigError(f"empty year list {text!r}")
    return years


@dataclass
class PipelineConfig:
    """All knobs of a pipeline run; every field has a documented default."""

    data_path: str = "panel.csv"
    layout: str = "long"
    train_years: list[int] = field(default_factory=list)
    test_years: list[int] = field(default_factory=list)
    anchor: str = "train_mean"  # or "year"
    anchor_year: int | None = None
    log_epsilon: float = 1e-6
    eps_grid: list[float] = field(default_factory=lambda: list(_DEFAULT_EPS_GRID))
    minpts_grid: list[int] = field(default_factory=lambda: list(_DEFAULT_MINPTS_GRID))
    ridge_lambdas: list[float] = field(default_factory=lambda: list(_DEFAULT_RIDGE_GRID))
    lasso_lambdas: list[float] = field(default_factory=lambda: list(_DEFAULT_L1_GRID))
    enet_lambdas: list[float] = field(default_factory=lambda: list(_DEFAULT_L1_GRID))
    enet_alpha: float = 0.5
    cv_folds: int = 5
    tol: float = 1e-10
    max_iter: int = 100_000
    standardize: bool = False
    out_dir: str | None = None

    def validate(self) -> None:
        if not self.train_years or not self.test_years:
            raise ConfigError("train_years and test_years must be set")
        if set(self.train_years) & set(self.test_years):
            raise ConfigError("train and test year ranges overlap")
        if max(self.train_years) >= min(self.test_years):
            raise ConfigError("test years must come after train years")
        if self.layout not in ("long", "wide"):
            raise ConfigError(f"unknown layout {self.layout!r}")
        if self.anchor not in ("train_mean", "year"):
            raise ConfigError(f"unknown normalization anchor {self.anchor!r}")
        if self.anchor == "year" and self.anchor_year is None:
            raise ConfigError("anchor=year requires anchor_year")
        for name, grid in (
            ("eps_grid", self.eps_grid),
            ("minpts_grid", self.minpts_grid),
            ("ridge_lambdas", self.ridge_lambdas),
            ("lasso_lambdas", self.lasso_lambdas),
            ("enet_lambdas", self.enet_lambdas),
        ):
            if not grid:
                raise ConfigError(f"{name} must be non-empty")
        if not 0.0 <= self.enet_alpha <= 1.0:
            raise ConfigError("enet_alpha must be in [0, 1]")
        if self.log_epsilon <= 0:
            raise ConfigError("log_epsilon must be > 0")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be >= 2")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"cannot read config file {path}")

        def section(name):
            return parser[name] if parser.has_section(name) else {}

        cfg = cls()
        data = section("data")
        cfg.data_path = data.get("path", cfg.data_path)
        cfg.layout = data.get("layout", cfg.layout)
        pre = section("preprocess")
        cfg.log_epsilon = float(pre.get("log_epsilon", cfg.log_epsilon))
        cfg.anchor = pre.get("anchor", cfg.anchor)
        if pre.get("anchor_year", "").strip():
            cfg.anchor_year = int(pre["anchor_year"])
        clu = section("cluster")
        if clu.get("eps_grid"):
            cfg.eps_grid = parse_grid(clu["eps_grid"])
        if clu.get("minpts_grid"):
            cfg.minpts_grid = [int(v) for v in parse_grid(clu["minpts_grid"])]
        reg = section("regress")
        if reg.get("ridge_lambdas"):
            cfg.ridge_lambdas = parse_grid(reg["ridge_lambdas"])
        if reg.get("lasso_lambdas"):
            cfg.lasso_lambdas = parse_grid(reg["lasso_lambdas"])
        if reg.get("enet_lambdas"):
            cfg.enet_lambdas = parse_grid(reg["enet_lambdas"])
        cfg.enet_alpha = float(reg.get("enet_alpha", cfg.enet_alpha))
        cfg.cv_folds = int(reg.get("cv_folds", cfg.cv_folds))
        cfg.tol = float(reg.get("tol", cfg.tol))
        cfg.max_iter = int(reg.get("max_iter", cfg.max_iter))
        cfg.standardize = str(reg.get("standardize", "false")).strip().lower() in (
            "1", "true", "yes", "on",
        )
        fc = section("forecast")
        if fc.get("train_years"):
            cfg.train_years = parse_years(fc["train_years"])
        if fc.get("test_years"):
            cfg.test_years = parse_years(fc["test_years"])
        return cfg

    def to_dict(self) -> dict:
        return {
            "data_path": self.data_path,
            "layout": self.layout,
            "train_years": list(self.train_years),
            "test_years": list(self.test_years),
            "anchor": self.anchor,
            "anchor_year": self.anchor_year,
            "log_epsilon": self.log_epsilon,
            "eps_grid": list(self.eps_grid),
            "minpts_grid": list(self.minpts_grid),
            "ridge_lambdas": list(self.ridge_lambdas),
            "lasso_lambdas": list(self.lasso_lambdas),
            "enet_lambdas": list(self.enet_lambdas),
            "enet_alpha": self.enet_alpha,
            "cv_folds": self.cv_folds,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "standardize": self.standardize,
            "out_dir": self.out_dir,
        }


@dataclass(frozen=True)
class ClusterProfile:
    """Distribution summary of one cluster's annual emission totals.

    The pooled values are the cluster's per-year totals (summed over
    member entities and all features), one value per year in the window."""

    cluster_id: int
    total: float
    mean: float
    variance: float
    minimum: float
    p25: float
    median: float
    p75: float
    maximum: float

    def __post_init__(self):
        order = (self.minimum, self.p25, self.median, self.p75, self.maximum)
        if any(b < a - 1e-12 for a, b in zip(order, order[1:])):
            raise ClusterRegError("cluster profile quantiles out of order")
        if self.variance < 0:
            raise ClusterRegError("cluster profile variance negative")

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "sum": self.total,
            "mean": self.mean,
            "variance": self.variance,
            "minimum": self.minimum,
            "p25": self.p25,
            "median": self.median,
            "p75": self.p75,
            "maximum": self.maximum,
        }


def aggregate_by_cluster(
    panel: EnergyPanel, assignment: ClusterAssignment
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster-level yearly totals and the grand total target.

    regressors[t, i] sums every feature of every entity in cluster i for
    year t; target[t] is the sum over clusters. The assignment must cover
    exactly the panel's entities with noise already promoted."""
    if assignment.n_points != panel.n_entities:
        raise ClusterRegError(
            f"assignment covers {assignment.n_points} entities, panel has {panel.n_entities}"
        )
    labels = np.asarray(assignment.labels)
    if np.any(labels == NOISE):
        raise ClusterRegError("assignment still contains noise; promote it first")
    entity_totals = panel.values.sum(axis=2)  # (years, entities)
    regressors = np.zeros((panel.n_years, assignment.num_clusters))
    for cid in range(assignment.num_clusters):
        regressors[:, cid] = entity_totals[:, labels == cid].sum(axis=1)
    target = regressors.sum(axis=1)
    return regressors, target


def profile_clusters(
    panel: EnergyPanel, assignment: ClusterAssignment, years: list[int]
) -> list[ClusterProfile]:
    """Summary statistics of each cluster's annual totals over the window.

    Quartiles interpolate linearly between order statistics; variance is
    the sample variance (n-1 denominator) of the yearly totals."""
    idx = [panel.year_index(y) for y in years]
    if not idx:
        raise ClusterRegError("empty year window for cluster profiles")
    regressors, _ = aggregate_by_cluster(panel, assignment)
    profiles = []
    for cid in range(assignment.num_clusters):
        vals = regressors[idx, cid]
        p25, median, p75 = np.percentile(vals, [25, 50, 75])
        profiles.append(
            ClusterProfile(
                cluster_id=cid,
                total=float(vals.sum()),
                mean=float(vals.mean()),
                variance=float(vals.var(ddof=1)) if len(vals) > 1 else 0.0,
                minimum=float(vals.min()),
                p25=float(p25),
                median=float(median),
                p75=float(p75),
                maximum=float(vals.max()),
            )
        )
    return profiles


def summarize_forecast(differences) -> tuple[float, float]:
    """Mean and sample variance (n-1 denominator) of forecast differences."""
    diffs = np.asarray(differences, dtype=float).ravel()
    if diffs.size < 2:
        raise ClusterRegError("need at least 2 forecast differences")
    return float(diffs.mean()), float(diffs.var(ddof=1))


@dataclass
class PipelineReport:
    """Everything a pipeline run produced, serializable to one JSON file."""

    config: PipelineConfig
    dropped_features: list[str]
    dropped_entities: list[str]
    params: clustering.NeighborhoodParams
    quality: clustering.ClusteringQuality
    assignment: ClusterAssignment
    promoted: ClusterAssignment
    sweep: list
    entities: list[str]
    profiles: list[ClusterProfile]
    years: list[int]
    columns: list[str]
    regressors: np.ndarray
    target: np.ndarray
    log_regressors: np.ndarray
    log_target: np.ndarray
    epsilon_cells: list[tuple[str, int]]
    cv_tables: dict
    models: dict
    reports: dict
    paths: dict
    forecast_rows: list[dict]
    mean_error: float
    variance: float

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "dropped": {
                "features": list(self.dropped_features),
                "entities": list(self.dropped_entities),
            },
            "clustering": {
                "eps": self.params.eps,
                "min_pts": self.params.min_pts,
                "num_clusters": self.assignment.num_clusters,
                "sc": self.quality.sc,
                "sse": self.quality.sse,
                "labels": {e: int(l) for e, l in zip(self.entities, self.assignment.labels)},
                "core": {e: bool(c) for e, c in zip(self.entities, self.assignment.core_flags)},
                "promoted_labels": {
                    e: int(l) for e, l in zip(self.entities, self.promoted.labels)
                },
                "promoted_num_clusters": self.promoted.num_clusters,
            },
            "cluster_profiles": [p.to_dict() for p in self.profiles],
            "aggregates": {
                "years": list(self.years),
                "columns": list(self.columns),
                "regressors": [[float(v) for v in row] for row in self.regressors],
                "target": [float(v) for v in self.target],
                "log_regressors": [[float(v) for v in row] for row in self.log_regressors],
                "log_target": [float(v) for v in self.log_target],
                "epsilon_cells": [[col, int(year)] for col, year in self.epsilon_cells],
            },
            "cv": {
                kind: {
                    "penalty": spec.to_dict(),
                    "table": [[lam, m] for lam, m in table],
                }
                for kind, (spec, table) in self.cv_tables.items()
            },
            "models": {kind: m.to_dict() for kind, m in self.models.items()},
            "fit_reports": {kind: r.to_dict() for kind, r in self.reports.items()},
            "forecast": {
                "rows": list(self.forecast_rows),
                "mean_error": self.mean_error,
                "variance": self.variance,
            },
        }


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineStageError:
        raise
    except (ClusterRegError, OSError) as err:
        raise PipelineStageError(name, str(err)) from err


def build_design(
    log_regressors: np.ndarray,
    log_target: np.ndarray,
    columns: list[str],
    row_idx: list[int],
) -> regression.DesignMatrix:
    """Design matrix over a subset of year rows of the log aggregates."""
    rows = np.asarray(row_idx, dtype=int)
    return regression.DesignMatrix(log_regressors[rows], log_target[rows], tuple(columns))


@dataclass
class PreparedInputs:
    """Shared pipeline front-end output: cleaned panel through log design."""

    panel: EnergyPanel
    dropped_features: list[str]
    dropped_entities: list[str]
    ranked: list
    params: clustering.NeighborhoodParams
    quality: clustering.ClusteringQuality
    assignment: ClusterAssignment
    promoted: ClusterAssignment
    columns: list[str]
    regressors: np.ndarray
    target: np.ndarray
    log_regressors: np.ndarray
    log_target: np.ndarray
    epsilon_cells: list[tuple[str, int]]
    train_idx: list[int]
    test_idx: list[int]
    train_design: regression.DesignMatrix


def prepare_inputs(config: PipelineConfig) -> PreparedInputs:
    """Run the front half of the pipeline: load, clean, cluster, aggregate,
    log-transform, and build the training design matrix."""
    _stage("config", config.validate)

    panel = _stage("load", load_panel, config.data_path, config.layout)
    check = validate_panel(panel)
    if not check.ok:
        issues = "; ".join(f"{loc}: {msg}" for sev, loc, msg in check.issues if sev == "error")
        raise PipelineStageError("load", f"panel validation failed: {issues}")
    for year in list(config.train_years) + list(config.test_years):
        if year not in panel.years:
            raise PipelineStageError("load", f"configured year {year} not present in data")

    raw_panel = panel
    panel, _ = _stage("clean", preprocess.drop_zero_series, panel)
    dropped_features = [f for f in raw_panel.features if f not in panel.features]
    dropped_entities = [e for e in raw_panel.entities if e not in panel.entities]

    if config.anchor == "year":
        window = [config.anchor_year]
    else:
        window = list(config.train_years)
    profile = _stage("cluster-matrix", preprocess.entity_profile, panel, window)
    normalized = preprocess.minmax_normalize_rows(profile)

    ranked = _stage("sweep", clustering.sweep_params, normalized,
                    config.eps_grid, config.minpts_grid)
    params, quality, assignment = ranked[0]
    promoted = clustering.promote_noise(assignment)

    regressors, target = _stage("aggregate", aggregate_by_cluster, panel, promoted)
    # independent check: cluster totals must reproduce the full-panel totals
    panel_totals = panel.values.sum(axis=(1, 2))
    gap = np.abs(regressors.sum(axis=1) - panel_totals)
    if gap.max() > CONSERVATION_TOL * max(1.0, float(np.abs(panel_totals).max())):
        raise PipelineStageError("aggregate", "conservation identity violated")

    columns = [f"cluster_{cid}" for cid in range(promoted.num_clusters)]
    epsilon_cells = [
        (columns[cid], panel.years[yi])
        for yi, cid in zip(*np.nonzero(regressors == 0.0))
    ]
    log_regressors = _stage("log", preprocess.log_transform, regressors,
                            config.log_epsilon, True)
    log_target = _stage("log", preprocess.log_transform, target,
                        config.log_epsilon, True)

    train_idx = [panel.year_index(y) for y in config.train_years]
    test_idx = [panel.year_index(y) for y in config.test_years]
    train_design = build_design(log_regressors, log_target, columns, train_idx)
    return PreparedInputs(
        panel=panel,
        dropped_features=dropped_features,
        dropped_entities=dropped_entities,
        ranked=ranked,
        params=params,
        quality=quality,
        assignment=assignment,
        promoted=promoted,
        columns=columns,
        regressors=regressors,
        target=target,
        log_regressors=log_regressors,
        log_target=log_target,
        epsilon_cells=epsilon_cells,
        train_idx=train_idx,
        test_idx=test_idx,
        train_design=train_design,
    )


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """Execute the full workflow and (if configured) write all artifacts.

    Stages: load -> clean -> cluster matrix -> parameter sweep -> noise
    promotion -> cluster aggregation -> log transform -> cross-validated
    ridge/lasso/elastic-net fits -> holdout forecast. Any stage failure
    aborts with a stage-tagged error and no partial output files."""
    prep = prepare_inputs(config)
    panel = prep.panel
    promoted = prep.promoted
    columns = prep.columns
    log_regressors = prep.log_regressors
    log_target = prep.log_target
    test_idx = prep.test_idx
    train_design = prep.train_design

    profiles = _stage("profiles", profile_clusters, panel, promoted, list(config.train_years))

    grids = {
        "ridge": config.ridge_lambdas,
        "lasso": config.lasso_lambdas,
        "elastic_net": config.enet_lambdas,
    }
    cv_tables: dict = {}
    models: dict = {}
    reports: dict = {}
    paths: dict = {}
    for kind, grid in grids.items():
        spec, table = _stage("fit", regression.cross_validate, train_design, kind, grid,
                             folds=config.cv_folds, alpha=config.enet_alpha,
                             tol=config.tol, max_iter=config.max_iter,
                             standardize=config.standardize)
        model = _stage("fit", regression.fit_penalized, train_design, spec,
                       tol=config.tol, max_iter=config.max_iter,
                       standardize=config.standardize)
        cv_tables[kind] = (spec, table)
        models[kind] = model
        reports[kind] = regression.fit_report(model, train_design)
        path_grid = sorted(set(float(v) for v in grid))
        paths[kind] = _stage("fit", regression.iterate_lambda, train_design, kind,
                             path_grid, alpha=config.enet_alpha, tol=config.tol,
                             max_iter=config.max_iter, standardize=config.standardize)

    enet = models["elastic_net"]
    predictions = regression.predict(enet, log_regressors[test_idx])
    forecast_rows = []
    differences = []
    for k, year in enumerate(config.test_years):
        true = float(log_target[test_idx[k]])
        pred = float(predictions[k])
        diff = true - pred
        differences.append(diff)
        forecast_rows.append(
            {"year": int(year), "true": true, "predict": pred, "difference": diff}
        )
    mean_error, variance = _stage("forecast", summarize_forecast, differences)

    report = PipelineReport(
        config=config,
        dropped_features=prep.dropped_features,
        dropped_entities=prep.dropped_entities,
        params=prep.params,
        quality=prep.quality,
        assignment=prep.assignment,
        promoted=promoted,
        sweep=prep.ranked,
        entities=list(panel.entities),
        profiles=profiles,
        years=list(panel.years),
        columns=columns,
        regressors=prep.regressors,
        target=prep.target,
        log_regressors=log_regressors,
        log_target=log_target,
        epsilon_cells=prep.epsilon_cells,
        cv_tables=cv_tables,
        models=models,
        reports=reports,
        paths=paths,
        forecast_rows=forecast_rows,
        mean_error=mean_error,
        variance=variance,
    )
    if config.out_dir is not None:
        _stage("write", write_artifacts, report, config.out_dir)
    return report


def _csv_text(header: list, rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_artifacts(report: PipelineReport, out_dir: str | Path) -> list[Path]:
    """Write the documented artifact set; clean up on partial failure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entities = tuple(report.entities)
    files: dict[str, str] = {
        "assignment.csv": _csv_text(
            ["entity", "cluster_id", "is_core"],
            clustering.assignment_rows(entities, report.assignment),
        ),
        "cluster_quality.csv": _csv_text(
            ["eps", "min_pts", "c", "sc", "sse"], clustering.quality_rows(report.sweep)
        ),
        "forecast.csv": _csv_text(
            ["year", "true", "predict", "difference"],
            [[r["year"], r["true"], r["predict"], r["difference"]] for r in report.forecast_rows],
        ),
    }
    for kind in ("ridge", "lasso", "elastic_net"):
        path_report = report.paths[kind]
        files[f"path_{kind}.csv"] = _csv_text(path_report.header(), path_report.rows())
    written: list[Path] = []
    try:
        for name, text in files.items():
            target = out / name
            target.write_text(text, encoding="utf-8")
            written.append(target)
        for kind in ("ridge", "lasso", "elastic_net"):
            target = out / f"model_{kind}.json"
            save_report(report.models[kind], target)
            written.append(target)
        target = out / "pipeline_report.json"
        save_report(report.to_dict(), target)
        written.append(target)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written
