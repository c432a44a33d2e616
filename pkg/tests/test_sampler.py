import numpy as np
import pytest
from hypothesis import given, strategies as st

from g3.diffusion import DiffusionConfig
from g3.errors import EmptyDataset, NonFiniteState
from g3.graph import Graph, largest_connected_component
from g3.nn import MlpConfig, SurrogateGenerator, feature_dim
from g3.sampler import (CovariateSpec, SampleConfig, base_avg_degree, dataset_statistics,
                        estimate_avg_degree, estimate_degree_lognormal, estimate_threshold,
                        euler_sample, generate, sample_base_asymmetric, sample_base_conditional,
                        sample_base_symmetric, sparsity_threshold, threshold_to_graph)
from g3.trainer import TrainConfig, train

from test_graph import K3, P2, STAR, graphs


class ConstantModel:
    """Stand-in network returning a fixed drift vector."""

    def __init__(self, value, full_matrix=False):
        self.value = value
        self.cfg = MlpConfig(width=1, n_max=8, full_matrix=full_matrix)
        self.calls = []

    def forward(self, x, t, n):
        self.calls.append(t)
        return np.full(feature_dim(n, self.cfg.full_matrix), self.value)


# -- base distributions ------------------------------------------------------------

@given(st.integers(2, 12), st.floats(0.05, 20.0), st.floats(0.01, 10.0),
       st.integers(0, 2**32 - 1))
def test_symmetric_base_mass_and_symmetry(n, alpha, d, seed):
    X = sample_base_symmetric(n, alpha, d, np.random.default_rng(seed))
    assert np.array_equal(X, X.T)
    assert X.min() >= 0
    assert X.sum() == pytest.approx(2 * n * d, rel=1e-10)


def test_symmetric_base_concentrates_for_large_alpha():
    X = sample_base_symmetric(6, 1e6, 3.0, np.random.default_rng(0))
    np.testing.assert_allclose(X, np.full((6, 6), 2 * 3.0 / 6), atol=1e-2)


def test_base_is_reproducible():
    a = sample_base_symmetric(5, 1.0, 2.0, np.random.default_rng(7))
    b = sample_base_symmetric(5, 1.0, 2.0, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_asymmetric_base_without_variance_has_constant_weights():
    X = sample_base_asymmetric(5, 1.0, 0.7, 0.0, np.random.default_rng(1))
    # x v^T with v = e^mu 1: every column equals x e^mu, and x sums to one
    np.testing.assert_allclose(X.sum(axis=0), np.full(5, np.exp(0.7)))
    np.testing.assert_allclose(X, X[:, :1] @ np.ones((1, 5)))
    with pytest.raises(ValueError):
        sample_base_asymmetric(5, 1.0, 0.0, -1.0, np.random.default_rng(1))


def test_conditional_base_examples():
    rng = np.random.default_rng(2)
    n, w = 4, 3.0
    X = sample_base_conditional(np.ones(n), w, 1.0, rng)
    # x^T 1 = 1, so X = (w / n) x 1^T: constant rows
    np.testing.assert_allclose(X, X[:, :1] @ np.ones((1, n)))
    assert X.sum() == pytest.approx(w)
    assert not np.any(sample_base_conditional(np.zeros(n), w, 1.0, rng))


# -- Euler integration ----------------------------------------------------------------

def test_zero_model_returns_projected_base():
    cfg = SampleConfig(n=5, M=7, avg_degree=0.3)
    base = sample_base_symmetric(5, 1.0, 0.3, np.random.default_rng(0))
    model = ConstantModel(0.0)
    X = euler_sample(model, cfg, np.random.default_rng(0), base=base)
    want = np.clip(base, 0, 1)
    np.fill_diagonal(want, 0)
    np.testing.assert_array_equal(X, want)
    np.testing.assert_allclose(model.calls, np.arange(7) / 7, rtol=0, atol=1e-15)


def test_single_step_is_unrolled_update():
    cfg = SampleConfig(n=3, M=1, clip_bounds=(0.0, 5.0))
    base = np.full((3, 3), 0.5)
    X = euler_sample(ConstantModel(0.25), cfg, np.random.default_rng(0), base=base)
    want = np.full((3, 3), 0.75)
    np.fill_diagonal(want, 0)
    np.testing.assert_array_equal(X, want)


@given(st.integers(2, 7), st.integers(1, 12), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_states_stay_clipped_and_symmetric(n, M, drift, seed):
    cfg = SampleConfig(n=n, M=M, avg_degree=1.0)
    traj = []
    X = euler_sample(ConstantModel(drift), cfg, np.random.default_rng(seed), trajectory=traj)
    assert len(traj) == M
    for S in traj:
        assert S.min() >= 0 and S.max() <= 1
    assert np.array_equal(X, X.T)
    assert not np.any(np.diag(X))


def test_asymmetric_mode_needs_full_matrix_model():
    cfg = SampleConfig(n=3, mode="asymmetric")
    with pytest.raises(ValueError):
        euler_sample(ConstantModel(0.0), cfg, np.random.default_rng(0))
    X = euler_sample(ConstantModel(0.1, full_matrix=True), cfg, np.random.default_rng(0))
    assert X.shape == (3, 3)


def test_non_finite_drift_aborts():
    with pytest.raises(NonFiniteState):
        euler_sample(ConstantModel(np.nan), SampleConfig(n=3), np.random.default_rng(0))


def test_sample_config_validation():
    for kw in ({"M": 0}, {"alpha": 0.0}, {"clip_bounds": (1.0, 1.0)}, {"threshold": -0.1},
               {"threshold_rule": "median"}):
        with pytest.raises(ValueError):
            SampleConfig(n=3, **kw)
    with pytest.raises(ValueError):
        SampleConfig(n=3, covariates=CovariateSpec(np.ones(4)))
    with pytest.raises(ValueError):
        CovariateSpec(np.array([1.0, np.inf]))


# -- thresholding ------------------------------------------------------------------------

def test_threshold_examples():
    assert threshold_to_graph(np.full((4, 4), 0.9), 0.5).num_edges == 6
    assert threshold_to_graph(np.zeros((4, 4)), 0.1).num_edges == 0
    assert threshold_to_graph(np.array([[0, 1], [0, 0]]), 0.4) == P2


@given(st.integers(1, 8), st.floats(0.0, 1.0), st.integers(0, 2**32 - 1), st.booleans())
def test_threshold_output_is_valid_graph(n, c, seed, bern):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n))
    g = threshold_to_graph(X, c, rng, bern)
    assert isinstance(g, Graph) and g.n == n


def test_bernoulli_uses_entries_as_probabilities():
    rng = np.random.default_rng(0)
    ones = threshold_to_graph(np.ones((5, 5)), 0.5, rng, bernoulli=True)
    zeros = threshold_to_graph(-np.ones((5, 5)), 0.5, rng, bernoulli=True)
    assert ones.num_edges == 10 and zeros.num_edges == 0
    half = [threshold_to_graph(np.full((20, 20), 0.3), 0.5, rng, True).num_edges for _ in range(20)]
    assert np.mean(half) / 190 == pytest.approx(0.3, abs=0.03)
    with pytest.raises(ValueError):
        threshold_to_graph(np.ones((2, 2)), 0.5, bernoulli=True)


def test_sparsity_threshold_keeps_requested_pairs():
    X = np.array([[0, 5, 1, 2], [5, 0, 4, 3], [1, 4, 0, 6], [2, 3, 6, 0]], dtype=float)
    # density 0.5 on n=4 keeps round(0.5 * 16 / 2) = 4 pairs: values 6, 5, 4, 3
    c = sparsity_threshold(X, 0.5)
    assert c == 3.0
    assert threshold_to_graph(X, c).num_edges == 4
    assert sparsity_threshold(X, 0.0) == np.inf
    assert sparsity_threshold(X, 5.0) == 1.0


def test_sparsity_threshold_keeps_ties():
    X = np.ones((4, 4))
    assert threshold_to_graph(X, sparsity_threshold(X, 0.25)).num_edges == 6


# -- statistics ----------------------------------------------------------------------------

def test_threshold_estimator_examples():
    assert estimate_threshold([K3]) == pytest.approx(6 / 9)
    assert estimate_threshold([Graph(4, np.zeros((4, 4)))]) == 0.0
    assert estimate_threshold([K3, Graph(3, np.zeros((3, 3)))]) == pytest.approx(1 / 3)
    with pytest.raises(EmptyDataset):
        estimate_threshold([])


def test_avg_degree_estimator():
    # (2 / n) ||A||_1 for K3 is 2 * 6 / 3 = 4
    assert estimate_avg_degree([K3]) == pytest.approx(4.0)
    assert estimate_avg_degree([K3, STAR]) == pytest.approx((4.0 + 2 * 6 / 4) / 2)
    stats = {"avg_degree": 4.0}
    assert base_avg_degree(stats) == 4.0
    assert base_avg_degree(stats, "limit") == 1.0
    with pytest.raises(ValueError):
        base_avg_degree(stats, "other")


@given(graphs(min_n=2, max_n=9))
def test_limit_scale_matches_diffused_mass(g):
    if g.num_edges == 0:
        return
    stats = dataset_statistics([g])
    X = sample_base_symmetric(stats["node_counts"][0], 1.0, base_avg_degree(stats, "limit"),
                              np.random.default_rng(0))
    lcc = largest_connected_component(g)
    assert X.sum() == pytest.approx(lcc.adjacency.sum(), rel=1e-9)


def test_degree_lognormal_estimator():
    mu, var = estimate_degree_lognormal([STAR])
    logs = np.log([3, 1, 1, 1])
    assert mu == pytest.approx(logs.mean()) and var == pytest.approx(logs.var())


def test_dataset_statistics_covariate_bounds():
    g = Graph.from_edges(3, [(0, 1), (1, 2)], z=[1.0, -1.0, 1.0])
    stats = dataset_statistics([g], "covariate_laplacian", 1.0)
    assert stats["clip_bounds"] == [-2.0, 3.0]
    assert dataset_statistics([K3])["clip_bounds"] == [0.0, 1.0]


# -- generation ----------------------------------------------------------------------------

def test_generate_streams_are_per_sample():
    model = SurrogateGenerator.init(MlpConfig(width=8, n_max=5), np.random.default_rng(0))
    cfg = SampleConfig(n=5, M=5, avg_degree=0.5, threshold=0.3, seed=3)
    five = generate(model, cfg, 5)
    assert generate(model, cfg, 3) == five[:3]
    assert generate(model, cfg, 5) == five


def test_generate_conditional_attaches_covariates():
    model = SurrogateGenerator.zeros(MlpConfig(width=4, n_max=4, full_matrix=True))
    z = np.array([1.0, 1.0, -1.0, -1.0])
    cfg = SampleConfig(n=4, M=3, mode="asymmetric", clip_bounds=(-2, 4), threshold=0.3,
                       threshold_rule="sparsity", covariates=CovariateSpec(z))
    (g,) = generate(model, cfg, 1)
    np.testing.assert_array_equal(g.z, z)


def test_two_node_oracle():
    """A network trained on the single edge drives the off-diagonal entry to 1."""
    entries = []
    for seed in range(5):
        model, _ = train([P2], MlpConfig(width=64, n_max=2),
                         TrainConfig(epochs=400, lr0=1e-3, seed=seed, times_per_graph=16,
                                     diffusion=DiffusionConfig(T=2.0)))
        stats = dataset_statistics([P2])
        cfg = SampleConfig(n=2, M=100, avg_degree=base_avg_degree(stats, "limit"), seed=seed)
        X = euler_sample(model, cfg, np.random.default_rng(seed))
        entries.append(X[0, 1])
    assert abs(np.median(entries) - 1.0) <= 0.3
