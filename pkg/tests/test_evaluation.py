import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tefs.errors import EmptyDenominator, SingularDesign, ValidationError
from tefs.evaluation import (
    BenchmarkConfig,
    build_spec,
    r2_linear,
    run_benchmark,
    tpr_fpr,
    write_reports,
)
from tefs.scm import TARGET, GroundTruth, builtin_graph
from tefs.timeseries import LagSpec, TimeSeriesDataset

TRUTH = GroundTruth(frozenset({1, TARGET}))
CANDS = {0, 1, TARGET}


def test_tpr_fpr_examples():
    assert tpr_fpr([{1, TARGET}] * 10, TRUTH, CANDS) == (1.0, 0.0)
    sels = [{1, TARGET}] * 9 + [{0, 1, TARGET}]
    assert tpr_fpr(sels, TRUTH, CANDS) == (1.0, 0.1)
    assert tpr_fpr([set()] * 10, TRUTH, CANDS) == (0.0, 0.0)


def test_tpr_fpr_errors():
    with pytest.raises(EmptyDenominator):
        tpr_fpr([], TRUTH, CANDS)
    with pytest.raises(EmptyDenominator):
        tpr_fpr([{1}], TRUTH, {1, TARGET})
    with pytest.raises(ValidationError):
        tpr_fpr([{7}], TRUTH, CANDS)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sets(st.sampled_from([0, 1, 2, 3, TARGET])), min_size=1, max_size=12), st.randoms())
def test_tpr_fpr_permutation_invariant(sels, rnd):
    truth = GroundTruth(frozenset({2, TARGET}))
    cands = {0, 1, 2, 3, TARGET}
    shuffled = list(sels)
    rnd.shuffle(shuffled)
    assert tpr_fpr(sels, truth, cands) == tpr_fpr(shuffled, truth, cands)


def test_r2_exact_linear_model():
    rng = np.random.default_rng(0)
    T = 200
    x = rng.normal(size=T)
    y = np.zeros(T)
    for t in range(1, T):
        y[t] = 0.9 * x[t - 1] + 0.1 * y[t - 1]
    ds = TimeSeriesDataset(x[:, None], y)
    r2_tr, r2_te = r2_linear(ds.select_rows(0, 120), ds.select_rows(120, T), {0}, LagSpec(1, 1))
    assert r2_tr == pytest.approx(1.0, abs=1e-8)
    assert r2_te == pytest.approx(1.0, abs=1e-8)


def test_r2_no_signal():
    vals = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        ds = TimeSeriesDataset(rng.normal(size=(300, 1)), rng.normal(size=300))
        vals.append(r2_linear(ds.select_rows(0, 200), ds.select_rows(200, 300), set(), LagSpec(1, 1))[1])
    assert np.mean(vals) <= 0.05


def test_r2_constant_targets():
    rng = np.random.default_rng(1)
    good = TimeSeriesDataset(rng.normal(size=(50, 1)), rng.normal(size=50))
    flat = TimeSeriesDataset(rng.normal(size=(30, 1)), np.full(30, 2.0))
    assert r2_linear(good, flat, {0}, LagSpec(1, 1))[1] == 0.0
    with pytest.raises(SingularDesign):
        r2_linear(flat, good, {0}, LagSpec(1, 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_r2_nested_models(seed):
    rng = np.random.default_rng(seed)
    ds = TimeSeriesDataset(rng.normal(size=(80, 3)), rng.normal(size=80))
    train, test = ds.select_rows(0, 60), ds.select_rows(60, 80)
    lags = LagSpec(2, 2)
    assert r2_linear(train, test, {0, 2}, lags)[0] >= r2_linear(train, test, set(), lags)[0] - 1e-12


def test_benchmark_config_defaults_and_json():
    cfg = BenchmarkConfig()
    assert cfg.default_lag == 2 and cfg.default_threshold == 100.0
    assert BenchmarkConfig(graph="graph10").default_lag == 3
    assert BenchmarkConfig(algorithm="backward").default_threshold == 1e-6
    assert BenchmarkConfig(sweep_axis="noise").grid() == (0.1, 0.3, 0.5, 0.7, 0.9)
    assert BenchmarkConfig(graph="graph5", sweep_axis="noise").grid() == (0.01, 0.05, 0.1, 0.15, 0.2)
    assert BenchmarkConfig(sweep_axis="dimension").grid() == (15, 20, 40, 60, 80, 100)
    doc = json.loads(json.dumps(cfg.to_json()))
    assert BenchmarkConfig.from_json(doc) == cfg
    with pytest.raises(ValidationError):
        BenchmarkConfig.from_json({"bogus": 1})
    with pytest.raises(ValidationError):
        BenchmarkConfig(seeds=[])


def test_dimension_axis_counts_the_target():
    cfg = BenchmarkConfig(graph="graph10", sweep_axis="dimension")
    spec, lags = build_spec(cfg, 100, seed=0)
    assert spec.n_features + 1 == 100 and lags == LagSpec(3, 3)


def test_noise_triples_keep_truth():
    cfg = BenchmarkConfig(graph="graph10", sweep_axis="dimension")
    base = builtin_graph("graph10").with_coefficients(0)
    for dim in (15, 40):
        spec, _ = build_spec(cfg, dim, seed=0)
        assert GroundTruth.from_edges(spec.edges) == GroundTruth.from_edges(base.edges)


def test_single_seed_benchmark_and_reproducibility(tmp_path):
    cfg = BenchmarkConfig(graph="graph3", seeds=(3,), n_samples=150)
    a = run_benchmark(cfg, jobs=1)
    b = run_benchmark(cfg, jobs=1)
    assert len(a) == 1 and len(a[0].per_seed_selected) == 1
    assert a[0].to_json() == b[0].to_json()
    jpath, cpath = write_reports(a, cfg, tmp_path)
    doc = json.loads(jpath.read_text())
    assert doc["config"]["seeds"] == [3]
    assert cpath.read_text().splitlines()[0] == "sweep_axis,sweep_value,tpr,fpr,mean_r2_test"


def test_sweep_produces_one_report_per_point():
    cfg = BenchmarkConfig(graph="graph3", seeds=(0,), n_samples=120, sweep_axis="noise", algorithm="backward")
    reports = run_benchmark(cfg, jobs=1)
    assert [r.sweep_value for r in reports] == [0.1, 0.3, 0.5, 0.7, 0.9]
