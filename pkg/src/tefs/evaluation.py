"""Scoring selections against ground truth and by out-of-sample R^2, plus benchmark sweeps."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyDenominator, SingularDesign, ValidationError
from .estimators import EstimatorConfig
from .scm import (
    BUILTIN_GRAPHS,
    TARGET,
    GraphTemplate,
    GroundTruth,
    ScmSpec,
    builtin_graph,
    extend_to_dimension,
    generate,
)
from .selection import SelectionConfig, Task, select
from .timeseries import LagSpec, TimeSeriesDataset, embed, standardize

OLS_RIDGE = 1e-10
SWEEP_AXES = ("none", "noise", "lag", "samples", "coefficients", "dimension")

# default sweep grids; the noise grid depends on the graph size
DEFAULT_GRIDS = {
    "noise": {"graph3": [0.1, 0.3, 0.5, 0.7, 0.9], None: [0.01, 0.05, 0.1, 0.15, 0.2]},
    "lag": [2, 3, 4, 5],
    "samples": [100, 200, 300, 400, 500],
    "coefficients": [1, 2, 3, 4, 5],
    "dimension": [15, 20, 40, 60, 80, 100],
}


def tpr_fpr(selected_per_seed: Sequence, truth: GroundTruth, all_candidates) -> tuple[float, float]:
    """Pooled true/false positive rates over repetitions.

    Each (repetition, candidate) pair counts once; a link counts as detected
    when its source node is in that repetition's selected set, whatever lag
    carried it.
    """
    candidates = set(all_candidates)
    true_links = set(truth.true_target_links)
    if not true_links <= candidates:
        raise ValidationError("true links must be a subset of the candidates")
    false_links = candidates - true_links
    reps = len(selected_per_seed)
    if reps == 0 or not true_links or not false_links:
        raise EmptyDenominator("need at least one repetition, one true and one false candidate")
    tp = fp = 0
    for sel in selected_per_seed:
        sel = set(sel)
        if not sel <= candidates:
            raise ValidationError(f"selection {sorted(sel - candidates, key=str)} is not among the candidates")
        tp += len(sel & true_links)
        fp += len(sel & false_links)
    return tp / (len(true_links) * reps), fp / (len(false_links) * reps)


def _ols_design(ds: TimeSeriesDataset, selected, lags: LagSpec):
    d = embed(ds, lags, selected)
    X = np.hstack([d.target_lags, d.features_block(selected), np.ones((d.n, 1))])
    return X, d.response


def _r2(y, pred) -> Optional[float]:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    return 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot


def r2_linear(train: TimeSeriesDataset, test: TimeSeriesDataset, selected, lags: LagSpec) -> tuple[float, float]:
    """Fit OLS of Y_t on the target's past, the selected features' past and an intercept.

    Coefficients come from ``train`` only. A constant test target scores 0;
    a constant train target raises :class:`SingularDesign`.
    """
    selected = sorted(set(selected))
    Xtr, ytr = _ols_design(train, selected, lags)
    Xte, yte = _ols_design(test, selected, lags)
    if Xtr.shape[0] < Xtr.shape[1]:
        raise SingularDesign(f"{Xtr.shape[0]} training rows for {Xtr.shape[1]} regressors")
    gram = Xtr.T @ Xtr
    try:
        beta = np.linalg.solve(gram + OLS_RIDGE * np.eye(gram.shape[0]), Xtr.T @ ytr)
    except np.linalg.LinAlgError:
        raise SingularDesign("normal equations are singular after ridge regularization") from None
    r2_train = _r2(ytr, Xtr @ beta)
    if r2_train is None:
        raise SingularDesign("training target has zero variance")
    r2_test = _r2(yte, Xte @ beta)
    return r2_train, (0.0 if r2_test is None else r2_test)


# --- benchmark ------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkConfig:
    """One benchmark suite: a graph, a seed list, and optionally a swept parameter.

    ``graph`` is a builtin name or an inline :class:`ScmSpec` JSON document
    (its ``seed`` and ``length`` are overridden per run). ``lag`` defaults to
    2 for graph3/graph5 and 3 otherwise; ``n_features`` grows the graph with
    noise triples. ``sweep_values`` defaults to the standard grid of the axis.
    """

    graph: object = "graph3"
    seeds: tuple = tuple(range(10))
    algorithm: str = "forward"
    threshold: Optional[float] = None
    target_bound_B: float = 1.0
    task: str = "regression"
    estimator: str = "ksg"
    k: int = 5
    epsilon_stop: float = 0.0
    n_samples: int = 300
    noise: float = 0.1
    lag: Optional[int] = None
    coef_seed: int = 0
    n_features: Optional[int] = None
    burn_in: int = 200
    test_length: int = 100
    standardize: bool = True
    sweep_axis: str = "none"
    sweep_values: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValidationError("seed list must not be empty")
        if self.algorithm not in ("forward", "backward"):
            raise ValidationError(f"algorithm must be forward or backward, got {self.algorithm!r}")
        if self.sweep_axis not in SWEEP_AXES:
            raise ValidationError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if isinstance(self.graph, str) and self.graph not in BUILTIN_GRAPHS:
            raise ValidationError(f"unknown graph {self.graph!r}")
        if self.sweep_values is not None:
            object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
            if self.sweep_axis == "none" or not self.sweep_values:
                raise ValidationError("sweep_values needs a sweep axis and at least one value")
        if self.test_length < 0 or self.n_samples < 2:
            raise ValidationError("n_samples must be >= 2 and test_length >= 0")

    @property
    def default_lag(self) -> int:
        if self.lag is not None:
            return self.lag
        return 2 if self.graph in ("graph3", "graph5") else 3

    @property
    def default_threshold(self) -> float:
        # operating points: small tolerated loss backward, large required gain forward
        if self.threshold is not None:
            return self.threshold
        return 1e-6 if self.algorithm == "backward" else 100.0

    def grid(self) -> tuple:
        if self.sweep_axis == "none":
            return (None,)
        if self.sweep_values is not None:
            return self.sweep_values
        g = DEFAULT_GRIDS[self.sweep_axis]
        if isinstance(g, dict):
            return tuple(g.get(self.graph, g[None]))
        return tuple(g)

    def to_json(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d["sweep_values"] = None if self.sweep_values is None else list(self.sweep_values)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "BenchmarkConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown benchmark config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None


@dataclass
class EvalReport:
    sweep_axis: str
    sweep_value: object
    tpr: float
    fpr: float
    per_seed_selected: list = field(default_factory=list)
    r2_train: float = float("nan")
    r2_test: float = float("nan")
    per_seed_r2_test: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "sweep_axis": self.sweep_axis,
            "sweep_value": self.sweep_value,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "per_seed_selected": [sorted(s, key=_sort_key) for s in self.per_seed_selected],
            "r2_train": self.r2_train,
            "r2_test": self.r2_test,
            "per_seed_r2_test": self.per_seed_r2_test,
        }


def _sort_key(v):
    return (1, 0) if v == TARGET else (0, v)


def _template(cfg: BenchmarkConfig, coef_seed: int) -> tuple[GraphTemplate, float]:
    """Template with coefficients, plus the base noise level."""
    if isinstance(cfg.graph, str):
        return builtin_graph(cfg.graph).with_coefficients(coef_seed), cfg.noise
    spec = ScmSpec.from_json(cfg.graph)
    return GraphTemplate(spec.n_features, spec.edges, spec.node_noise_std), spec.noise_std


def build_spec(cfg: BenchmarkConfig, point, seed: int) -> tuple[ScmSpec, LagSpec]:
    """Simulation spec and lag depths for one (sweep point, seed) job."""
    axis = cfg.sweep_axis
    noise = float(point) if axis == "noise" else cfg.noise
    n = int(point) if axis == "samples" else cfg.n_samples
    lag = int(point) if axis == "lag" else cfg.default_lag
    coef_seed = int(point) if axis == "coefficients" else cfg.coef_seed
    template, base_noise = _template(cfg, coef_seed)
    if axis != "noise":
        noise = base_noise
    # the swept dimension counts the target as one of the variables
    dim = int(point) - 1 if axis == "dimension" else cfg.n_features
    if dim is not None:
        template = extend_to_dimension(template, dim, coef_seed)
    spec = template.to_spec(noise_std=noise, length=n + cfg.test_length, burn_in=cfg.burn_in, seed=seed)
    return spec, LagSpec(lag, lag)


def _selection_config(cfg: BenchmarkConfig, lags: LagSpec, seed: int) -> SelectionConfig:
    return SelectionConfig(
        lags=lags,
        threshold=cfg.default_threshold,
        target_bound_B=cfg.target_bound_B,
        task=Task(cfg.task),
        estimator=EstimatorConfig(cfg.estimator, cfg.k, rng_seed=seed),
        epsilon_stop=cfg.epsilon_stop,
    )


def run_job(cfg: BenchmarkConfig, point, seed: int) -> dict:
    """generate -> select -> score for one (sweep point, seed)."""
    spec, lags = build_spec(cfg, point, seed)
    full, truth = generate(spec)
    n = spec.length - cfg.test_length
    train = full.select_rows(0, n)
    fit_on = standardize(train) if cfg.standardize else train
    result = select(fit_on, _selection_config(cfg, lags, seed), cfg.algorithm)
    r2_train = r2_test = float("nan")
    if cfg.test_length > lags.max_lag + 1:
        test = full.select_rows(n, spec.length)
        r2_train, r2_test = r2_linear(train, test, result.selected, lags)
    return {
        "selected": list(result.selected),
        "truth": sorted(truth.true_target_links, key=_sort_key),
        "n_features": spec.n_features,
        "r2_train": r2_train,
        "r2_test": r2_test,
    }


def _resolve_jobs(jobs: Optional[int]) -> int:
    if jobs is None:
        env = os.environ.get("TEFS_JOBS")
        jobs = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(jobs))


def run_benchmark(cfg: BenchmarkConfig, jobs: Optional[int] = None) -> list:
    """One :class:`EvalReport` per sweep point.

    The target's own past is always conditioned on, so the target's
    autoregressive link is credited as detected in every repetition. The
    candidate universe is every feature plus the target.
    """
    tasks = [(point, seed) for point in cfg.grid() for seed in cfg.seeds]
    n_jobs = _resolve_jobs(jobs)
    if n_jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outs = list(pool.map(run_job, [cfg] * len(tasks), *zip(*tasks)))
    else:
        outs = [run_job(cfg, p, s) for p, s in tasks]

    reports = []
    per_point = len(cfg.seeds)
    for i, point in enumerate(cfg.grid()):
        chunk = outs[i * per_point:(i + 1) * per_point]
        truth = GroundTruth(frozenset(chunk[0]["truth"]))
        candidates = set(range(chunk[0]["n_features"])) | {TARGET}
        # the autoregressive component is always part of the conditioning
        selections = [set(o["selected"]) | {TARGET} for o in chunk]
        tpr, fpr = tpr_fpr(selections, truth, candidates)
        r2_tests = [o["r2_test"] for o in chunk]
        reports.append(EvalReport(
            cfg.sweep_axis, point, tpr, fpr, selections,
            float(np.mean([o["r2_train"] for o in chunk])), float(np.mean(r2_tests)), r2_tests,
        ))
    return reports


def format_table(reports) -> str:
    lines = []
    for r in reports:
        label = "benchmark" if r.sweep_axis == "none" else f"{r.sweep_axis}={r.sweep_value}"
        lines.append(f"{label:<20} TPR {r.tpr:.2f}  FPR {r.fpr:.2f}  R2_test {r.r2_test:.3f}")
    return "\n".join(lines)


def write_reports(reports, cfg: BenchmarkConfig, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jpath, cpath = out / "report.json", out / "report.csv"
    doc = {"config": cfg.to_json(), "reports": [r.to_json() for r in reports]}
    jpath.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n", encoding="utf-8")
    with cpath.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep_axis", "sweep_value", "tpr", "fpr", "mean_r2_test"])
        for r in reports:
            w.writerow([r.sweep_axis, "" if r.sweep_value is None else r.sweep_value,
                        repr(r.tpr), repr(r.fpr), repr(r.r2_test)])
    return jpath, cpath


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o, key=_sort_key)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
