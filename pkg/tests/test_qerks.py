import math
import tracemalloc

import numpy as np
import pytest
from hypothesis import given, strategies as st

from photonic_qml import gkm, qerks
from photonic_qml.errors import ConfigError
from photonic_qml.metrics import score

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def cos_obs():
    return qerks.train_cosine_observable(1)


def make_model(r=100, gamma=0.1, seed=0, dist="gaussian", obs=None, placement="outer"):
    obs = obs or qerks.train_cosine_observable(1)
    w, b = qerks.sample_random_features(r, 2, dist, seed)
    return qerks.RksModel(r, gamma, 1, w, b, dist, obs, seed=seed, placement=placement)


def test_sampling_is_seeded():
    a = qerks.sample_random_features(3, seed=5)
    b = qerks.sample_random_features(3, seed=5)
    assert a[0].shape == (3, 2)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_gaussian_sample_mean():
    w, b = qerks.sample_random_features(100_000, seed=1)
    assert np.all(np.abs(w.mean(axis=0)) < 0.02)
    assert np.all((b >= 0) & (b <= 2 * np.pi))


def test_chi2_support_and_mean():
    w, _ = qerks.sample_random_features(50_000, dist="chi2", seed=2)
    assert np.all(w >= 0)
    assert w.mean() == pytest.approx(qerks.CHI2_DOF, rel=0.02)


def test_unknown_distribution():
    with pytest.raises(ConfigError):
        qerks.sample_random_features(3, dist="laplace")


def test_cosine_observable_values(cos_obs):
    assert cos_obs.coefficient((1, 0)) == pytest.approx(-SQRT2, abs=1e-10)
    assert cos_obs.coefficient((0, 1)) == pytest.approx(SQRT2, abs=1e-10)
    assert gkm.kernel_model_output(0.0, cos_obs) == pytest.approx(SQRT2)
    assert abs(gkm.kernel_model_output(np.pi / 2, cos_obs)) < 1e-10


def test_cosine_observable_bh_matches_ls(cos_obs):
    bh = qerks.train_cosine_observable(1, method="bh", niter=3, niter_basin=3)
    states = gkm.output_states(1)
    np.testing.assert_allclose(bh.vector(states), cos_obs.vector(states), atol=1e-6)


def test_cosine_observable_unrepresentable_frequency():
    with pytest.raises(Exception, match="cannot represent"):
        qerks.train_cosine_observable(1, k=2)


@given(x=st.tuples(st.floats(-1, 1), st.floats(-1, 1)), seed=st.integers(0, 50))
def test_circuit_features_match_closed_form(x, seed):
    m = make_model(r=20, seed=seed)
    np.testing.assert_allclose(qerks.feature_map(np.array(x), m),
                               m.features_closed_form(np.array(x))[0], atol=1e-10)


@pytest.mark.parametrize("placement", qerks.PLACEMENTS)
def test_feature_norm_bound(placement, rng):
    m = make_model(r=50, placement=placement)
    z = m.features(rng.uniform(-1, 1, (200, 2)))
    assert np.all(np.sum(z**2, axis=1) <= 2 + 1e-12)


def test_small_gamma_limit():
    m = make_model(r=40, gamma=1e-8)
    w, b = m.w, m.b
    z = qerks.feature_map(np.array([0.3, -0.7]), m)
    np.testing.assert_allclose(z, SQRT2 * np.cos(b) / math.sqrt(40), atol=1e-7)
    inner = make_model(r=40, gamma=1e-8, placement="inner")
    np.testing.assert_allclose(qerks.feature_map(np.array([0.3, -0.7]), inner), SQRT2 / math.sqrt(40), atol=1e-7)


def test_kernel_approximation_pairs(rng):
    m = make_model(r=1000, gamma=0.1, seed=3)
    x, xp = rng.uniform(-1, 1, (100, 2)), rng.uniform(-1, 1, (100, 2))
    approx = np.sum(m.features(x) * m.features(xp), axis=1)
    exact = np.exp(-0.1**2 * np.sum((x - xp) ** 2, axis=1) / 2)
    assert np.sum(np.abs(approx - exact) < 0.1) >= 95


def test_photon_count_indifference(cos_obs, rng):
    obs10 = qerks.train_cosine_observable(10)
    m1, m10 = make_model(r=30, obs=cos_obs), make_model(r=30, obs=obs10)
    x = rng.uniform(-1, 1, (50, 2))
    np.testing.assert_allclose(m10.features(x), m1.features(x), atol=1e-8)


def test_model_invariants(cos_obs):
    w, b = qerks.sample_random_features(3)
    with pytest.raises(ConfigError):
        qerks.RksModel(3, 0.0, 1, w, b, "gaussian", cos_obs)
    with pytest.raises(ConfigError):
        qerks.RksModel(3, 0.1, 1, w, b + 7.0, "gaussian", cos_obs)
    with pytest.raises(ConfigError):
        qerks.RksModel(3, 0.1, 1, w, b, "gaussian", cos_obs, c=np.zeros(2))


def test_zero_coefficients_tie_to_plus_one(cos_obs):
    m = make_model(r=5, obs=cos_obs)
    m.c = np.zeros(5)
    assert qerks.rks_classify([0.1, 0.9], m) == 1


def test_single_point_recovered():
    m = qerks.train_rks([[0.4, -0.2]], [-1], r=5)
    assert qerks.rks_classify([0.4, -0.2], m) == -1


def test_separable_blobs():
    from photonic_qml import data
    ds = data.synth_dataset(600, 0.0, 3)
    m = qerks.train_rks(ds.x[:400], ds.y[:400], r=100)
    assert score(m, ds.x[400:], ds.y[400:]) >= 0.95


@pytest.mark.parametrize("r", [3, 10, 20, 100])
def test_feature_count_sweep(r, synth_split):
    tr, va = synth_split["train"], synth_split["validation"]
    m = qerks.train_rks(tr.x, tr.y, r=r)
    assert m.c.shape == (r,)
    assert 0.5 <= score(m, va.x, va.y) <= 1.0


def test_more_features_not_worse(synth_split):
    tr, va = synth_split["train"], synth_split["validation"]
    small = score(qerks.train_rks(tr.x, tr.y, r=3), va.x, va.y)
    large = score(qerks.train_rks(tr.x, tr.y, r=100), va.x, va.y)
    assert large >= small - 0.02


def test_distribution_choice_matters_little(synth_split):
    tr, te = synth_split["train"], synth_split["test"]
    g = score(qerks.train_rks(tr.x, tr.y, r=100, dist="gaussian"), te.x, te.y)
    c = score(qerks.train_rks(tr.x, tr.y, r=100, dist="chi2"), te.x, te.y)
    assert abs(g - c) <= 0.03


def test_ridge_variant_solves_normal_equations(synth_split):
    tr = synth_split["train"]
    m = qerks.train_rks(tr.x, tr.y, r=20, ridge=0.5)
    z = m.features(tr.x)
    np.testing.assert_allclose((z.T @ z + 0.5 * np.eye(20)) @ m.c, z.T @ tr.y, atol=1e-8)


def test_training_never_builds_pairwise_kernel(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("pairwise kernel requested on the RKS path")

    monkeypatch.setattr(gkm, "pairwise_sq_dists", boom)
    monkeypatch.setattr(gkm, "kernel_matrix", boom)
    rng = np.random.default_rng(0)
    n = 6000
    x = rng.uniform(-1, 1, (n, 2))
    y = np.where(x.sum(axis=1) >= 0, 1, -1)
    tracemalloc.start()
    qerks.train_rks(x, y, r=50)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert peak < n * n * 8 / 4
