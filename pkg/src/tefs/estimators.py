"""Mutual information, conditional mutual information and transfer entropy (nats).

Three interchangeable backends:

``discrete``
    exact plug-in CMI of the empirical joint frequencies of integer symbols.
``gaussian``
    closed form under a joint Gaussian model, from sample covariance log-determinants.
``ksg``
    k-nearest-neighbour estimate in the Frenzel-Pompe conditional form
    (max-norm, digamma correction). Without conditioning it reduces to the
    first Kraskov-Stoegbauer-Grassberger estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .errors import (
    InvalidParams,
    NonIntegerSymbols,
    OverlappingSets,
    RowCountMismatch,
    SingularCovariance,
    TooFewSamples,
    ValidationError,
)
from .timeseries import EmbeddedDesign, LagSpec, TimeSeriesDataset, embed

MIN_SAMPLES = 4
GAUSSIAN_RIDGE = 1e-10


class Backend(str, Enum):
    DISCRETE = "discrete"
    GAUSSIAN = "gaussian"
    KSG = "ksg"


@dataclass(frozen=True)
class EstimatorConfig:
    backend: Backend = Backend.KSG
    k: int = 5
    noise_tiebreak: float = 1e-10
    rng_seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "backend", Backend(self.backend))
        except ValueError:
            raise ValidationError(f"unknown estimator backend {self.backend!r}") from None
        if int(self.k) != self.k or self.k < 1:
            raise ValidationError(f"k must be a positive integer, got {self.k!r}")
        if not self.noise_tiebreak >= 0:
            raise ValidationError("noise_tiebreak must be nonnegative")


def _as_2d(a, name):
    if a is None:
        return None
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValidationError(f"{name} must be a vector or a 2-D matrix")
    return a


def _check_inputs(x, y, z):
    x, y = _as_2d(x, "x"), _as_2d(y, "y")
    n = x.shape[0]
    z = np.empty((n, 0)) if z is None else _as_2d(z, "z")
    if y.shape[0] != n or z.shape[0] != n:
        raise RowCountMismatch(f"row counts differ: x={n}, y={y.shape[0]}, z={z.shape[0]}")
    if n < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {n}")
    if x.shape[1] == 0 or y.shape[1] == 0:
        raise ValidationError("x and y must each have at least one column")
    return x, y, z


# --- discrete plug-in -----------------------------------------------------

def _entropy_rows(a: np.ndarray) -> float:
    n = a.shape[0]
    if a.shape[1] == 0:
        return 0.0
    _, counts = np.unique(a, axis=0, return_counts=True)
    # sorted exact summation makes the value independent of column order
    p = np.sort(counts) / n
    return -math.fsum(p * np.log(p))


def _cmi_discrete(x, y, z) -> float:
    for a in (x, y, z):
        if a.size and not np.all(a == np.round(a)):
            raise NonIntegerSymbols("the discrete backend needs integer symbol codes")
    xz, yz, xyz = np.hstack([x, z]), np.hstack([y, z]), np.hstack([x, y, z])
    value = _entropy_rows(xz) + _entropy_rows(yz) - _entropy_rows(z) - _entropy_rows(xyz)
    # true value is >= 0; only rounding can push it below
    return max(value, 0.0)


# --- Gaussian closed form -------------------------------------------------

def _logdet_cov(a: np.ndarray) -> float:
    if a.shape[1] == 0:
        return 0.0
    cov = np.atleast_2d(np.cov(a, rowvar=False, bias=True))
    cov = cov + GAUSSIAN_RIDGE * np.eye(cov.shape[0])
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        raise SingularCovariance("covariance block is singular even after ridge regularization")
    return float(logdet)


def _cmi_gaussian(x, y, z) -> float:
    xz, yz, xyz = np.hstack([x, z]), np.hstack([y, z]), np.hstack([x, y, z])
    return 0.5 * (_logdet_cov(xz) + _logdet_cov(yz) - _logdet_cov(z) - _logdet_cov(xyz))


# --- k-nearest neighbours -------------------------------------------------

def _count_within(points: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Number of points strictly closer than ``radii[i]`` to point i (max-norm), self included."""
    tree = cKDTree(points)
    r = np.nextafter(radii, 0)
    return np.asarray(tree.query_ball_point(points, r, p=np.inf, return_length=True))


def _cmi_ksg(x, y, z, k: int, jitter: float, seed: int) -> float:
    n = x.shape[0]
    if k >= n:
        raise TooFewSamples(f"k={k} must be smaller than the sample count {n}")
    joint = np.hstack([x, y, z])
    if jitter > 0:
        rng = np.random.default_rng(seed)
        joint = joint + jitter * rng.random(joint.shape)
    dx, dy = x.shape[1], y.shape[1]
    tree = cKDTree(joint)
    # k+1: the query point itself is returned at distance 0
    eps = tree.query(joint, k=[k + 1], p=np.inf)[0][:, 0]
    xs, ys, zs = joint[:, :dx], joint[:, dx:dx + dy], joint[:, dx + dy:]
    if zs.shape[1] == 0:
        n_x = _count_within(xs, eps)
        n_y = _count_within(ys, eps)
        return float(digamma(k) + digamma(n) - np.mean(digamma(n_x) + digamma(n_y)))
    n_xz = _count_within(np.hstack([xs, zs]), eps)
    n_yz = _count_within(np.hstack([ys, zs]), eps)
    n_z = _count_within(zs, eps)
    return float(digamma(k) - np.mean(digamma(n_xz) + digamma(n_yz) - digamma(n_z)))


def cmi(x, y, z=None, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Estimate I(X; Y | Z) in nats; ``z`` may be ``None`` or have zero columns.

    The discrete and Gaussian backends are symmetric in ``x`` and ``y``. The
    KSG estimate may be slightly negative and is returned unclamped.
    """
    x, y, z = _check_inputs(x, y, z)
    if cfg.backend is Backend.DISCRETE:
        return _cmi_discrete(x, y, z)
    if cfg.backend is Backend.GAUSSIAN:
        return _cmi_gaussian(x, y, z)
    return _cmi_ksg(x, y, z, cfg.k, cfg.noise_tiebreak, cfg.rng_seed)


def mi(x, y, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    return cmi(x, y, None, cfg)


def te_from_design(
    design: EmbeddedDesign,
    source_set: Iterable[int],
    cond_set: Iterable[int] = (),
    cfg: EstimatorConfig = EstimatorConfig(),
) -> float:
    """Conditional transfer entropy from an existing embedding.

    X slot: source lags; Y slot: the response; Z slot: the target's own past
    followed by the lags of ``cond_set``.
    """
    source, cond = set(source_set), set(cond_set)
    if not source:
        raise ValidationError("source_set must not be empty")
    if source & cond:
        raise OverlappingSets(f"features {sorted(source & cond)} are both source and conditioning")
    x = design.features_block(source)
    z = np.hstack([design.target_lags, design.features_block(cond)])
    return cmi(x, design.response, z, cfg)


def transfer_entropy(
    ds: TimeSeriesDataset,
    source_set: Iterable[int],
    cond_set: Iterable[int],
    lags: LagSpec,
    cfg: EstimatorConfig = EstimatorConfig(),
) -> float:
    """TE from ``source_set`` to the target given the target's past and ``cond_set``."""
    source, cond = set(source_set), set(cond_set)
    if source & cond:
        raise OverlappingSets(f"features {sorted(source & cond)} are both source and conditioning")
    design = embed(ds, lags, source | cond)
    return te_from_design(design, source, cond, cfg)


# --- finite-sample concentration ------------------------------------------

@dataclass(frozen=True)
class ConcentrationParams:
    """Inputs of the CMI concentration inequality for a density plug-in estimator.

    ``c_v`` and ``c_b`` are the variance and bias constants, ``beta`` the
    Hoelder order of the joint density and ``d`` the total dimension of
    (X, Y, Z). None of them can be estimated from data.
    """

    n: int
    eta: float
    c_v: float
    c_b: float
    beta: float
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParams("n must be at least 1")
        if not 0 < self.eta <= 1:
            raise InvalidParams(f"eta must lie in (0, 1], got {self.eta}")
        if self.c_v < 0 or self.c_b < 0:
            raise InvalidParams("c_v and c_b must be nonnegative")
        if not 0 < self.beta <= 1:
            raise InvalidParams(f"beta must lie in (0, 1], got {self.beta}")
        if self.d < 1:
            raise InvalidParams("d must be a positive integer")


def concentration_bound(p: ConcentrationParams, union_dimension: bool = False) -> float:
    """Half-width of the (1 - eta) confidence band on a CMI estimate.

    ``sqrt(4 c_v^2 / n * log(2 / eta)) + c_b * n^(-beta / (beta + d))``.
    With ``union_dimension`` the log term becomes ``log(2^(d+1) / eta)``, the
    union-bound form used when every greedy step shares one confidence budget.
    """
    log_term = (p.d + 1) * math.log(2.0) - math.log(p.eta) if union_dimension else math.log(2.0 / p.eta)
    variance = math.sqrt(4.0 * p.c_v ** 2 / p.n * log_term)
    bias = p.c_b * p.n ** (-p.beta / (p.beta + p.d))
    return variance + bias
