import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from g3.diffusion import (DiffusionConfig, DiffusionMode, HeatKernel, diffuse, forward_limit,
                          heat_kernel_at, laplacian_heat_kernel, rescaled_state, rw_kernel_at,
                          rw_limit, true_generator)
from g3.errors import DimensionMismatch, IsolatedNode, NegativeEntries, NegativeTime
from g3.graph import Graph, LaplacianKind, laplacian, spectral_decompose

from test_graph import K3, P2, STAR, connected_graphs

times = st.floats(0.0, 5.0)


def kernel(g):
    return HeatKernel.from_graph(g)


# -- heat kernel ----------------------------------------------------------------------

@pytest.mark.parametrize("s", [0.0, 0.3, 1.0, 4.0])
def test_p2_closed_form(s):
    e = math.exp(-2 * s)
    want = 0.5 * np.array([[1 + e, 1 - e], [1 - e, 1 + e]])
    np.testing.assert_allclose(kernel(P2).at(s), want, atol=1e-14)


def test_kernel_at_zero_is_identity():
    np.testing.assert_allclose(kernel(STAR).at(0.0), np.eye(4), atol=1e-14)


def test_kernel_converges_to_projector():
    np.testing.assert_allclose(kernel(K3).at(100.0), np.full((3, 3), 1 / 3), atol=1e-8)


def test_negative_time_rejected():
    with pytest.raises(NegativeTime):
        heat_kernel_at(spectral_decompose(laplacian(K3)), -0.1)
    with pytest.raises(NegativeTime):
        laplacian_heat_kernel(K3, -1.0)


@given(connected_graphs(max_n=10), times)
def test_kernel_matches_expm(g, s):
    L = laplacian(g)
    np.testing.assert_allclose(kernel(g).at(s), scipy.linalg.expm(-s * L), atol=1e-9)


@given(connected_graphs(max_n=10), times, times)
def test_kernel_semigroup(g, s, u):
    k = kernel(g)
    np.testing.assert_allclose(k.at(s) @ k.at(u), k.at(s + u), atol=1e-8)
    assert np.array_equal(k.at(s), k.at(s).T)


def test_cache_returns_read_only_copies():
    k = HeatKernel.from_graph(K3, cache_size=2)
    h = k.at(1.0)
    assert k.at(1.0) is h
    with pytest.raises(ValueError):
        h[0, 0] = 5.0
    k.at(2.0)
    k.at(3.0)
    assert len(k._cache) == 2


# -- forward process ------------------------------------------------------------------

def test_diffuse_examples():
    np.testing.assert_array_equal(diffuse(P2.adjacency, kernel(P2), 0.0), P2.adjacency)
    np.testing.assert_allclose(diffuse(K3.adjacency, kernel(K3), 100.0), np.full((3, 3), 6 / 9),
                               atol=1e-8)
    E = scipy.linalg.expm(-0.5 * laplacian(P2))
    np.testing.assert_allclose(diffuse(P2.adjacency, kernel(P2), 0.5), E @ P2.adjacency @ E,
                               atol=1e-12)


def test_diffuse_asymmetric_is_one_sided():
    k = kernel(STAR)
    Y = np.arange(16.0).reshape(4, 4)
    np.testing.assert_allclose(diffuse(Y, k, 0.7, "asymmetric"), k.at(0.7) @ Y)


def test_diffuse_checks_shape():
    with pytest.raises(DimensionMismatch):
        diffuse(np.zeros((2, 2)), kernel(K3), 1.0)


@given(connected_graphs(max_n=9), st.floats(0.05, 4.0), st.integers(0, 2**32 - 1))
def test_heat_equation_derivative(g, s, seed):
    # Y_s = H Y H solves dY/ds = -(L Y + Y L)
    Y = np.random.default_rng(seed).normal(size=(g.n, g.n))
    k, L, h = kernel(g), laplacian(g), 1e-4
    fd = (diffuse(Y, k, s + h) - diffuse(Y, k, s - h)) / (2 * h)
    Ys = diffuse(Y, k, s)
    np.testing.assert_allclose(fd, -(L @ Ys + Ys @ L), atol=1e-6 * (1 + np.abs(Y).max()))


@given(connected_graphs(max_n=9), times, st.integers(0, 2**32 - 1))
def test_contraction(g, s, seed):
    Y = np.random.default_rng(seed).normal(size=(g.n, g.n))
    assert np.linalg.norm(diffuse(Y, kernel(g), s)) <= np.linalg.norm(Y) + 1e-10


@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_dissipativity_for_psd_matrices(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    L = B @ B.T
    Y = rng.normal(size=(n, n))
    assert np.sum(-(L @ Y + Y @ L) * Y) <= 1e-10


@given(connected_graphs(max_n=9), st.sampled_from([1.0, 5.0, 10.0]), st.integers(0, 2**32 - 1))
def test_forward_convergence_bound(g, T, seed):
    Y = np.random.default_rng(seed).normal(size=(g.n, g.n))
    k = kernel(g)
    lam2 = k.spectral.spectral_gap()
    Pi = np.full((g.n, g.n), 1 / g.n)
    gap = np.linalg.norm(diffuse(Y, k, T) - Pi @ Y @ Pi)
    assert gap <= 2 * math.exp(-T * lam2) * np.linalg.norm(Y) + 1e-10


@given(connected_graphs(max_n=9), st.sampled_from([0.5, 1.0]), st.integers(0, 2**32 - 1))
def test_reverse_blow_up(g, T, seed):
    n = g.n
    Pi = np.full((n, n), 1 / n)
    Q = np.eye(n) - Pi
    X_perp = Q @ np.random.default_rng(seed).normal(size=(n, n)) @ Q
    L = laplacian(g)
    lam2 = spectral_decompose(L).spectral_gap()
    E = scipy.linalg.expm(T * L)
    back = np.linalg.norm(E @ (Pi + X_perp) @ E)
    assert back >= math.exp(2 * T * lam2) * np.linalg.norm(X_perp) * (1 - 1e-9)


# -- generator, rescaling, limits --------------------------------------------------

def test_true_generator_examples():
    X = np.random.default_rng(0).normal(size=(3, 3))
    np.testing.assert_array_equal(true_generator(np.zeros((3, 3)), X, 6.0), np.zeros((3, 3)))
    L = laplacian(P2)
    np.testing.assert_allclose(true_generator(L, np.eye(2), 1.0), 2 * L)
    np.testing.assert_allclose(true_generator(laplacian(STAR), np.ones((4, 4)), 3.0), 0, atol=1e-14)
    np.testing.assert_allclose(true_generator(L, X[:2, :2], 2.0, "asymmetric"), 2 * L @ X[:2, :2])


def test_true_generator_checks_shapes():
    with pytest.raises(DimensionMismatch):
        true_generator(np.zeros((2, 2)), np.zeros((3, 3)), 1.0)


@given(connected_graphs(max_n=8), st.integers(0, 2**32 - 1))
def test_true_generator_is_permutation_equivariant(g, seed):
    rng = np.random.default_rng(seed)
    P = np.eye(g.n)[rng.permutation(g.n)]
    L = laplacian(g)
    # integer states keep every product exact, whatever the summation order
    X = rng.integers(-50, 50, size=(g.n, g.n)).astype(float)
    lhs = true_generator(P @ L @ P.T, P @ X @ P.T, 3.0)
    np.testing.assert_array_equal(lhs, P @ true_generator(L, X, 3.0) @ P.T)
    X = rng.normal(size=(g.n, g.n))
    lhs = true_generator(P @ L @ P.T, P @ X @ P.T, 3.0)
    np.testing.assert_allclose(lhs, P @ true_generator(L, X, 3.0) @ P.T, rtol=0, atol=1e-12)


@given(connected_graphs(max_n=8), st.floats(0.0, 1.0))
def test_generator_conserves_total_mass(g, t):
    X = diffuse(g.adjacency, kernel(g), 6.0 * (1 - t))
    assert abs(true_generator(laplacian(g), X, 6.0).sum()) <= 1e-9


def test_rescaled_state_examples():
    cfg = DiffusionConfig(T=6.0)
    k = kernel(P2)
    Y0 = P2.adjacency
    assert np.array_equal(rescaled_state(Y0, k, 1.0, cfg).matrix, Y0)
    np.testing.assert_allclose(rescaled_state(Y0, k, 0.0, cfg).matrix, diffuse(Y0, k, 6.0))
    E = scipy.linalg.expm(-3.0 * laplacian(P2))
    np.testing.assert_allclose(rescaled_state(Y0, k, 0.5, cfg).matrix, E @ Y0 @ E, atol=1e-12)
    with pytest.raises(ValueError):
        rescaled_state(Y0, k, 1.5, cfg)


@given(connected_graphs(max_n=8), st.floats(0.0, 1.0))
def test_rescaled_time_derivative_is_true_generator(g, t):
    # X_t = Y_{T(1-t)}, so dX/dt = T (L X + X L)
    cfg = DiffusionConfig(T=4.0)
    k, h = kernel(g), 1e-5
    lo, hi = max(t - h, 0.0), min(t + h, 1.0)
    fd = (rescaled_state(g.adjacency, k, hi, cfg).matrix
          - rescaled_state(g.adjacency, k, lo, cfg).matrix) / (hi - lo)
    X = rescaled_state(g.adjacency, k, 0.5 * (lo + hi), cfg).matrix
    np.testing.assert_allclose(fd, true_generator(laplacian(g), X, cfg.T), atol=1e-4)


def test_config_validation():
    with pytest.raises(ValueError):
        DiffusionConfig(T=1.0, tau=1.0)
    with pytest.raises(ValueError):
        DiffusionConfig(T=1.0, tau=0.0)
    assert DiffusionMode.parse("asymmetric") is DiffusionMode.ASYMMETRIC
    with pytest.raises(ValueError):
        DiffusionMode.parse("sideways")


def test_forward_limit_examples():
    np.testing.assert_allclose(forward_limit(K3.adjacency), np.full((3, 3), 2 / 3))
    np.testing.assert_array_equal(forward_limit(np.zeros((3, 3))), np.zeros((3, 3)))
    want = np.ones((4, 1)) @ np.array([[3, 1, 1, 1]]) / 4
    np.testing.assert_allclose(forward_limit(STAR.adjacency, "asymmetric"), want)
    with pytest.raises(NegativeEntries):
        forward_limit(-np.eye(2))


@given(connected_graphs(max_n=8))
def test_forward_limit_matches_long_diffusion(g):
    k = kernel(g)
    for mode in ("symmetric", "asymmetric"):
        np.testing.assert_allclose(diffuse(g.adjacency, k, 400.0, mode),
                                   forward_limit(g.adjacency, mode), atol=1e-7)


# -- alternative kernels -----------------------------------------------------------

def test_rw_kernel_examples():
    np.testing.assert_array_equal(rw_kernel_at(K3, 0), np.eye(3))
    want = np.full((3, 3), 0.5) - 0.5 * np.eye(3)
    np.testing.assert_allclose(rw_kernel_at(K3, 1), want)
    with pytest.raises(NegativeTime):
        rw_kernel_at(K3, -1)
    with pytest.raises(IsolatedNode):
        rw_kernel_at(Graph.from_edges(3, [(0, 1)]), 1)


@given(connected_graphs(min_n=2, max_n=8))
def test_lazy_walk_converges_to_rank_one_limit(g):
    limit = rw_limit(g, lazy=True)
    np.testing.assert_allclose(rw_kernel_at(g, 200, lazy=True), limit, atol=1e-6)
    # the stationary distribution of a walk is proportional to degree
    d = g.adjacency.sum(1)
    np.testing.assert_allclose(limit, np.outer(np.ones(g.n), d / d.sum()), atol=1e-8)


def test_random_walk_kernel_matches_expm():
    L = laplacian(STAR, LaplacianKind.RANDOM_WALK)
    np.testing.assert_allclose(laplacian_heat_kernel(STAR, 0.8, LaplacianKind.RANDOM_WALK),
                               scipy.linalg.expm(-0.8 * L), atol=1e-12)


@given(connected_graphs(max_n=8), st.floats(0.01, 10.0))
def test_stochastic_kernels_preserve_row_sums(g, s):
    one = np.ones(g.n)
    for kind in (LaplacianKind.COMBINATORIAL, LaplacianKind.RANDOM_WALK):
        np.testing.assert_allclose(laplacian_heat_kernel(g, s, kind) @ one, one, atol=1e-8)


def test_normalized_kernel_is_not_stochastic_on_irregular_graph():
    rows = laplacian_heat_kernel(STAR, 1.0, LaplacianKind.NORMALIZED).sum(axis=1)
    assert np.abs(rows - 1).max() > 1e-3
