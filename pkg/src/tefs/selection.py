"""Greedy transfer-entropy feature selection (forward and backward) and error bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import MissingTotalTe, ValidationError
from .estimators import ConcentrationParams, EstimatorConfig, concentration_bound, te_from_design
from .timeseries import EmbeddedDesign, LagSpec, TimeSeriesDataset, embed


class Task(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class StopReason(str, Enum):
    THRESHOLD_REACHED = "ThresholdReached"
    CANDIDATES_EXHAUSTED = "CandidatesExhausted"
    ESTIMATE_FLOOR = "EstimateFloor"


@dataclass(frozen=True)
class SelectionConfig:
    """``threshold`` is the tolerated loss (backward) or required gain (forward).

    ``target_bound_B`` left as ``None`` is replaced by max |Y| of the data
    being selected on.
    """

    lags: LagSpec = LagSpec(1, 1)
    threshold: float = 0.0
    target_bound_B: Optional[float] = None
    task: Task = Task.REGRESSION
    estimator: EstimatorConfig = EstimatorConfig()
    epsilon_stop: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        if not self.threshold >= 0:
            raise ValidationError(f"threshold must be nonnegative, got {self.threshold}")
        if self.target_bound_B is not None and not self.target_bound_B > 0:
            raise ValidationError(f"target bound B must be positive, got {self.target_bound_B}")
        if not self.epsilon_stop >= 0:
            raise ValidationError("epsilon_stop must be nonnegative")

    def resolved_B(self, ds: TimeSeriesDataset) -> float:
        if self.target_bound_B is not None:
            return float(self.target_bound_B)
        b = float(np.abs(ds.target).max())
        if b <= 0:
            raise ValidationError("cannot derive B from an all-zero target")
        return b


def te_threshold(threshold: float, task: Task, B: float) -> float:
    """Cumulative-TE budget: threshold / (2 B^2) in regression, threshold^2 / 2 in classification."""
    if Task(task) is Task.CLASSIFICATION:
        return threshold ** 2 / 2.0
    return threshold / (2.0 * B ** 2)


@dataclass(frozen=True)
class Step:
    feature: int
    te: float
    cumulative: float


@dataclass
class SelectionResult:
    direction: str
    selected: list
    removed: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    iterations_K: int = 0
    stop_reason: StopReason = StopReason.CANDIDATES_EXHAUSTED
    te_budget: float = 0.0
    target_bound_B: float = 1.0

    @property
    def cumulative(self) -> float:
        return self.steps[-1].cumulative if self.steps else 0.0

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "selected": [int(i) for i in self.selected],
            "removed": [int(i) for i in self.removed],
            "steps": [{"feature": int(s.feature), "te": s.te, "cumulative": s.cumulative} for s in self.steps],
            "iterations_K": self.iterations_K,
            "stop_reason": self.stop_reason.value,
            "te_budget": self.te_budget,
            "target_bound_B": self.target_bound_B,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SelectionResult":
        return cls(
            direction=d["direction"],
            selected=list(d["selected"]),
            removed=list(d.get("removed", [])),
            steps=[Step(int(s["feature"]), float(s["te"]), float(s["cumulative"])) for s in d["steps"]],
            iterations_K=int(d["iterations_K"]),
            stop_reason=StopReason(d["stop_reason"]),
            te_budget=float(d.get("te_budget", 0.0)),
            target_bound_B=float(d.get("target_bound_B", 1.0)),
        )


# (source, conditioning) -> conditional TE in nats
TeScorer = Callable[[int, frozenset], float]


def _design_scorer(design: EmbeddedDesign, cfg: EstimatorConfig) -> TeScorer:
    def score(feature, cond):
        return te_from_design(design, {feature}, cond, cfg)
    return score


def backward_tefs(ds: TimeSeriesDataset, cfg: SelectionConfig, scorer: Optional[TeScorer] = None) -> SelectionResult:
    """Backward elimination under a cumulative TE-loss budget.

    Each round finds the remaining feature with the smallest TE given all the
    other remaining ones. Its removal is committed only if the cumulative loss
    (negative estimates count as zero) stays within the budget; the first
    removal that would exceed it ends the search. The last feature is never
    removed.
    """
    B = cfg.resolved_B(ds)
    budget = te_threshold(cfg.threshold, cfg.task, B)
    if scorer is None:
        scorer = _design_scorer(embed(ds, cfg.lags), cfg.estimator)
    remaining = list(range(ds.D))
    result = SelectionResult("backward", remaining, te_budget=budget, target_bound_B=B)
    loss = 0.0
    while True:
        if len(remaining) <= 1:
            result.stop_reason = StopReason.CANDIDATES_EXHAUSTED
            break
        scores = [scorer(i, frozenset(remaining) - {i}) for i in remaining]
        j = int(np.argmin(scores))  # first minimum -> lowest index among ties
        worst, te = remaining[j], float(scores[j])
        tentative = loss + max(te, 0.0)
        if tentative > budget:
            result.stop_reason = StopReason.THRESHOLD_REACHED
            break
        loss = tentative
        remaining = remaining[:j] + remaining[j + 1:]
        result.removed.append(worst)
        result.steps.append(Step(worst, te, loss))
    result.selected = remaining
    result.iterations_K = len(result.steps)
    return result


def forward_tefs(ds: TimeSeriesDataset, cfg: SelectionConfig, scorer: Optional[TeScorer] = None) -> SelectionResult:
    """Forward selection until the cumulative TE gain meets the budget.

    Also stops when no candidates remain or when the best candidate's
    estimated conditional TE is at or below ``cfg.epsilon_stop``.
    """
    B = cfg.resolved_B(ds)
    budget = te_threshold(cfg.threshold, cfg.task, B)
    if scorer is None:
        scorer = _design_scorer(embed(ds, cfg.lags), cfg.estimator)
    candidates = list(range(ds.D))
    result = SelectionResult("forward", [], te_budget=budget, target_bound_B=B)
    gain = 0.0
    while True:
        if gain >= budget:
            result.stop_reason = StopReason.THRESHOLD_REACHED
            break
        if not candidates:
            result.stop_reason = StopReason.CANDIDATES_EXHAUSTED
            break
        chosen = frozenset(result.selected)
        scores = [scorer(i, chosen) for i in candidates]
        j = int(np.argmax(scores))
        best, te = candidates[j], float(scores[j])
        if te <= cfg.epsilon_stop:
            result.stop_reason = StopReason.ESTIMATE_FLOOR
            break
        gain += max(te, 0.0)
        candidates = candidates[:j] + candidates[j + 1:]
        result.selected.append(best)
        result.steps.append(Step(best, te, gain))
    result.iterations_K = len(result.steps)
    return result


def select(ds: TimeSeriesDataset, cfg: SelectionConfig, direction: str) -> SelectionResult:
    if direction == "forward":
        return forward_tefs(ds, cfg)
    if direction == "backward":
        return backward_tefs(ds, cfg)
    raise ValidationError(f"direction must be 'forward' or 'backward', got {direction!r}")


@dataclass(frozen=True)
class BoundReport:
    """Excess error over the irreducible term.

    The full bound reads ``sigma^2 + excess_term`` (regression) or
    ``epsilon + excess_term`` (classification); the irreducible terms are
    never estimated. ``finite_sample_term`` is the extra slack when every
    greedy step's TE estimate carries a concentration band.
    """

    task: Task
    direction: str
    threshold_used: float
    excess_term: float
    total_te_estimate: Optional[float] = None
    finite_sample_term: Optional[float] = None
    irreducible_term: str = "sigma^2"

    def to_json(self) -> dict:
        return {
            "task": self.task.value,
            "direction": self.direction,
            "threshold_used": self.threshold_used,
            "excess_term": self.excess_term,
            "total_te_estimate": self.total_te_estimate,
            "finite_sample_term": self.finite_sample_term,
            "irreducible_term": self.irreducible_term,
            "bound": f"{self.irreducible_term} + {self.excess_term!r}",
        }


def compute_bounds(
    result: SelectionResult,
    cfg: SelectionConfig,
    total_te: Optional[float] = None,
    concentration: Optional[ConcentrationParams] = None,
) -> BoundReport:
    """Error bound guaranteed by the stopping rule of ``result``.

    Backward: excess = threshold. Forward regression: 2 B^2 TE_total - threshold;
    forward classification: sqrt(max(0, 2 TE_total - threshold^2)), where
    ``total_te`` is the TE from all features jointly. With ``concentration``
    (regression only) the finite-sample slack 2 B^2 K (variance + bias) is
    added, using the union-bound log term.
    """
    task = Task(cfg.task)
    B = result.target_bound_B if cfg.target_bound_B is None else float(cfg.target_bound_B)
    delta = float(cfg.threshold)
    irreducible = "epsilon" if task is Task.CLASSIFICATION else "sigma^2"
    if result.direction == "backward":
        excess = delta
    elif result.direction == "forward":
        if total_te is None:
            raise MissingTotalTe("forward bounds need the total transfer entropy of all features")
        if task is Task.REGRESSION:
            excess = 2.0 * B ** 2 * total_te - delta
        else:
            excess = math.sqrt(max(0.0, 2.0 * total_te - delta ** 2))
    else:
        raise ValidationError(f"unknown direction {result.direction!r}")
    finite = None
    if concentration is not None and task is Task.REGRESSION:
        finite = 2.0 * B ** 2 * result.iterations_K * concentration_bound(concentration, union_dimension=True)
    return BoundReport(task, result.direction, delta, excess, total_te, finite, irreducible)


def total_transfer_entropy(ds: TimeSeriesDataset, cfg: SelectionConfig) -> float:
    """TE from every feature jointly to the target (forward bound input)."""
    design = embed(ds, cfg.lags)
    return te_from_design(design, set(range(ds.D)), (), cfg.estimator)


