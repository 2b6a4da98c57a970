import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tefs.errors import InvalidSpec, UnknownGraph, Unstable
from tefs.scm import (
    BUILTIN_GRAPHS,
    DRIVER_AR,
    TARGET,
    Edge,
    GroundTruth,
    ScmSpec,
    builtin_graph,
    extend_to_dimension,
    extend_with_noise_triples,
    generate,
    sample_coefficients,
)


def test_no_edges_no_noise_is_zero():
    ds, truth = generate(ScmSpec(1, (), noise_std=0.0, length=50))
    assert ds.T == 50 and not ds.features.any() and not ds.target.any()
    assert truth.true_target_links == frozenset()


def test_forced_linear_recurrence():
    spec = ScmSpec(1, (Edge(0, TARGET, 1, 0.9),), noise_std=0.0, length=100, node_noise_std={0: 1.0})
    ds, truth = generate(spec)
    np.testing.assert_allclose(ds.target[1:], 0.9 * ds.features[:-1, 0], rtol=0, atol=1e-15)
    assert truth.true_target_links == {0}


def test_explosive_self_loop_is_unstable():
    spec = ScmSpec(1, (Edge(TARGET, TARGET, 1, 1.5),), noise_std=0.1, length=300)
    with pytest.raises(Unstable):
        generate(spec)
    # independent check: the same AR(1) recursion does cross 1e6 within the horizon
    rng = np.random.default_rng(0)
    y, crossed = 0.0, False
    for e in rng.standard_normal(500) * 0.1:
        y = 1.5 * y + e
        crossed |= abs(y) > 1e6
    assert crossed


@pytest.mark.parametrize("edges", [
    (Edge(0, 5, 1, 0.5),),
    (Edge(0, TARGET, 0, 0.5),),
    (Edge(0, TARGET, 1, 0.5), Edge(0, TARGET, 1, 0.2)),
    (Edge(0, TARGET, 1, float("nan")),),
    (Edge(0, TARGET, 1),),
])
def test_invalid_specs(edges):
    with pytest.raises(InvalidSpec):
        ScmSpec(1, edges)


def test_coefficient_draws():
    template = [Edge(0, TARGET, 1)] * 10_000
    coefs = np.array([e.coef for e in sample_coefficients(template, 3)])
    assert np.all((np.abs(coefs) >= 0.5) & (np.abs(coefs) <= 1.0))
    assert 0.47 <= np.mean(coefs > 0) <= 0.53
    again = np.array([e.coef for e in sample_coefficients(template, 3)])
    np.testing.assert_array_equal(coefs, again)
    fixed = sample_coefficients([Edge(0, 0, 1, 0.25)], 0)
    assert fixed[0].coef == 0.25


def test_graph3_topology():
    g = builtin_graph("graph3")
    sampled = [e for e in g.edges if e.coef is None]
    drivers = [e for e in g.edges if e.coef is not None]
    assert len(sampled) == 3
    # the exogenous driver X0 carries a fixed AR(1) loop instead of a recorded series
    assert drivers == [Edge(0, 0, 1, DRIVER_AR)]
    truth = GroundTruth.from_edges(g.edges)
    assert truth.true_target_links == {1, TARGET}


def test_graph10_topology():
    g = builtin_graph("graph10")
    assert g.n_features + 1 == 10
    children = {}
    for e in g.edges:
        if e.source != e.dest:
            children.setdefault(e.source, set()).add(e.dest)
    assert any(len(c - {TARGET}) >= 2 for c in children.values())
    truth = GroundTruth.from_edges(g.edges)
    assert len(truth.true_target_links) >= 2


def test_unknown_graph():
    with pytest.raises(UnknownGraph):
        builtin_graph("graph4")


def test_noise_triples():
    base = builtin_graph("graph10").with_coefficients(0)
    big = extend_with_noise_triples(base, 30, seed=1)
    assert big.n_features == 99  # together with Y: 100 columns
    assert GroundTruth.from_edges(big.edges) == GroundTruth.from_edges(base.edges)
    added = big.edges[len(base.edges):]
    assert len(added) == 90
    assert all(e.dest >= base.n_features and e.source >= base.n_features for e in added)
    assert all(-1.0 <= e.coef <= 1.0 for e in added)
    assert extend_with_noise_triples(base, 0, 1).edges == base.edges


def test_extend_to_dimension_truncates_last_triple():
    base = builtin_graph("graph10").with_coefficients(0)
    g = extend_to_dimension(base, 19, seed=0)
    assert g.n_features == 19
    assert all(e.dest == TARGET or e.dest < 19 for e in g.edges)
    ds, _ = generate(g.to_spec(length=40))
    assert ds.D == 19


def test_generate_reproducible_and_prefix_stable():
    g = builtin_graph("graph5").with_coefficients(2)
    a, _ = generate(g.to_spec(length=200, seed=9))
    b, _ = generate(g.to_spec(length=200, seed=9))
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.target, b.target)
    longer, _ = generate(g.to_spec(length=300, seed=9))
    np.testing.assert_array_equal(longer.target[:200], a.target)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(BUILTIN_GRAPHS), st.integers(0, 1000))
def test_noiseless_coefficient_recovery(name, coef_seed):
    g = builtin_graph(name).with_coefficients(coef_seed)
    # drivers keep their innovations, everything else is noiseless
    spec = g.to_spec(noise_std=0.0, length=400, seed=coef_seed)
    ds, _ = generate(spec)
    series = {i: ds.features[:, i] for i in range(ds.D)}
    series[TARGET] = ds.target
    max_lag = max(e.lag for e in spec.edges)
    for node in spec.nodes():
        if node in spec.node_noise_std:
            continue
        parents = [e for e in spec.edges if e.dest == node]
        if not parents:
            continue
        X = np.column_stack([series[e.source][max_lag - e.lag: len(series[e.source]) - e.lag] for e in parents])
        y = series[node][max_lag:]
        beta = np.linalg.lstsq(X, y, rcond=None)[0]
        np.testing.assert_allclose(beta, [e.coef for e in parents], atol=1e-10)


def _batch_se(x: np.ndarray, n_batches: int = 20) -> float:
    # batch-means standard error, valid for autocorrelated series
    means = np.array([b.mean() for b in np.array_split(x, n_batches)])
    return means.std(ddof=1) / np.sqrt(n_batches)


@pytest.mark.parametrize("name", BUILTIN_GRAPHS)
def test_stationarity_smoke(name):
    g = builtin_graph(name).with_coefficients(0)
    for seed in range(10):
        ds, _ = generate(g.to_spec(length=2000, seed=seed))
        for col in np.column_stack([ds.features, ds.target]).T:
            a, b = col[:1000], col[1000:]
            se = np.hypot(_batch_se(a), _batch_se(b))
            assert abs(a.mean() - b.mean()) < 5 * se


def test_spec_json_round_trip():
    g = builtin_graph("graph3").with_coefficients(4)
    spec = g.to_spec(noise_std=0.3, length=123, seed=5)
    doc = json.loads(spec.dumps())
    assert set(doc) >= {"n_features", "edges", "noise_std", "length", "burn_in", "seed"}
    assert any(e["dest"] == "Y" for e in doc["edges"])
    assert ScmSpec.from_json(doc) == spec
    with pytest.raises(InvalidSpec):
        ScmSpec.from_json({"edges": []})
