"""Tests for variational Wasserstein compression."""

import numpy as np
import pytest

from syndeepc import (CompressionConfig, DiscreteDistribution,
                      WassersteinCompressor, compress, eta_curve,
                      in_convex_hull, recompute_eta, wasserstein)
from syndeepc.compress import weighted_median


@pytest.fixture(scope="module")
def data_matrix():
    rng = np.random.default_rng(12)
    # three well-separated clusters of columns
    centers = rng.normal(scale=10.0, size=(20, 3))
    cols = [centers[:, i % 3] + rng.normal(scale=0.3, size=20)
            for i in range(40)]
    return np.array(cols).T


def test_weighted_median_uniform_is_median():
    rng = np.random.default_rng(0)
    for size in (3, 4, 7, 10):
        v = rng.normal(size=size)
        w = np.full(size, 1.0 / size)
        assert weighted_median(v, w) == pytest.approx(np.median(v), abs=1e-12)


def test_weighted_median_pulls_towards_weight():
    v = np.array([0.0, 1.0, 2.0])
    assert weighted_median(v, np.array([10.0, 1.0, 1.0])) == 0.0
    assert weighted_median(v, np.array([1.0, 1.0, 10.0])) == 2.0


def test_cost_history_monotone(data_matrix):
    cfg = CompressionConfig(S=4, ground_norm="one", seed=0)
    ds = compress(data_matrix, cfg)
    hist = np.array(ds.cost_history)
    assert np.all(np.diff(hist) <= 1e-9)
    assert ds.eta == pytest.approx(hist[-1])


def test_s_equals_r_gives_zero_eta(data_matrix):
    R = data_matrix.shape[1]
    cfg = CompressionConfig(S=R, init="random-columns", seed=1)
    ds = compress(data_matrix, cfg)
    assert ds.eta == pytest.approx(0.0, abs=1e-12)
    assert ds.iterations == 0


def test_s_exceeding_r_rejected(data_matrix):
    with pytest.raises(ValueError):
        compress(data_matrix, CompressionConfig(S=data_matrix.shape[1] + 1))


def test_s_one_is_coordinatewise_median(data_matrix):
    """With one atom and 1-norm ground metric the barycenter is the plain
    coordinate-wise median of the columns."""
    cfg = CompressionConfig(S=1, ground_norm="one", seed=0)
    ds = compress(data_matrix, cfg)
    assert np.allclose(ds.atoms[:, 0], np.median(data_matrix, axis=1),
                       atol=1e-9)


def test_euclidean_atoms_stay_in_hull(data_matrix):
    """Weiszfeld barycenters are convex combinations of the columns, so
    every atom must pass the hull membership LP."""
    cfg = CompressionConfig(S=3, ground_norm="two", seed=2)
    ds = compress(data_matrix, cfg)
    for j in range(ds.S):
        assert in_convex_hull(ds.atoms[:, j], data_matrix)


def test_in_convex_hull_basic():
    cols = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert in_convex_hull(np.array([0.3, 0.3]), cols)
    assert not in_convex_hull(np.array([1.0, 1.0]), cols)
    with pytest.raises(ValueError):
        in_convex_hull(np.zeros(3), cols)


def test_reproducible_bit_for_bit(data_matrix):
    cfg = CompressionConfig(S=5, seed=33)
    a = compress(data_matrix, cfg)
    b = compress(data_matrix, cfg)
    assert np.array_equal(a.atoms, b.atoms)
    assert a.cost_history == b.cost_history


def test_recompute_eta_matches(data_matrix):
    ds = compress(data_matrix, CompressionConfig(S=4, seed=3))
    assert recompute_eta(data_matrix, ds) == pytest.approx(ds.eta, abs=1e-8)


def test_eta_matches_transport_definition(data_matrix):
    """eta is exactly the 1-Wasserstein distance between the uniform
    distributions on columns and atoms."""
    ds = compress(data_matrix, CompressionConfig(S=3, seed=5))
    P = DiscreteDistribution.uniform(data_matrix)
    Q = DiscreteDistribution.uniform(ds.atoms)
    assert wasserstein(P, Q) == pytest.approx(ds.eta, abs=1e-8)


def test_eta_curve_decreasing_trend(data_matrix):
    base = CompressionConfig(S=2, init="random-columns", seed=4)
    results = eta_curve(data_matrix, [2, 10, 40], base)
    etas = {S: eta for S, eta, _ in results}
    assert etas[40] == pytest.approx(0.0, abs=1e-12)
    assert etas[10] < etas[2]
    assert all(wall >= 0.0 for _, _, wall in results)


def test_eta_curve_requires_entries(data_matrix):
    with pytest.raises(ValueError):
        eta_curve(data_matrix, [], CompressionConfig(S=2))


def test_provided_init(data_matrix):
    atoms0 = data_matrix[:, :3].copy()
    cfg = CompressionConfig(S=3, init="provided", init_atoms=atoms0, seed=0)
    ds = compress(data_matrix, cfg)
    assert ds.eta <= wasserstein(
        DiscreteDistribution.uniform(data_matrix),
        DiscreteDistribution.uniform(atoms0)) + 1e-9


def test_config_validation():
    with pytest.raises(ValueError):
        CompressionConfig(S=0)
    with pytest.raises(ValueError):
        CompressionConfig(S=2, ground_norm="inf")
    with pytest.raises(ValueError):
        CompressionConfig(S=2, init="provided")


def test_estimator_wrapper(data_matrix):
    comp = WassersteinCompressor(n_atoms=4, seed=6)
    params = comp.get_params()
    assert params["n_atoms"] == 4
    comp.set_params(n_atoms=3)
    labels = comp.fit_transform(data_matrix)
    assert comp.atoms_.shape == (data_matrix.shape[0], 3)
    assert comp.eta_ == pytest.approx(comp.cost_history_[-1])
    assert labels.shape == (data_matrix.shape[1],)
    assert set(labels) <= set(range(3))
    with pytest.raises(ValueError):
        comp.set_params(bogus=1)


def test_estimator_requires_fit(data_matrix):
    with pytest.raises(RuntimeError):
        WassersteinCompressor().transform(data_matrix)
