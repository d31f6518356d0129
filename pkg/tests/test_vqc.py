import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from photonic_qml import vqc
from photonic_qml.errors import ConfigError, DataError
from photonic_qml.fock import FockState, unitarity_error
from photonic_qml.metrics import score

angles = st.lists(st.floats(0, 2 * np.pi), min_size=6, max_size=6)
points = st.tuples(st.floats(-1, 1), st.floats(-1, 1))


def model(inp=(1, 0, 0), seed=0, lam=None):
    rng = np.random.default_rng(seed)
    n = sum(inp)
    lam = rng.normal(size=vqc.lambda_size(n)) if lam is None else lam
    return vqc.VqcModel(FockState(inp), rng.uniform(0, 6, 6), rng.uniform(0, 6, 6), lam)


@pytest.mark.parametrize("n,size", [(1, 3), (3, 10), (5, 21)])
def test_lambda_size(n, size):
    assert vqc.lambda_size(n) == size


def test_mesh_all_pi_internal_is_diagonal():
    u = vqc.mesh_unitary([np.pi, 0, np.pi, 0, np.pi, 0]).matrix
    np.testing.assert_allclose(u, np.diag(np.diag(u)), atol=1e-15)
    np.testing.assert_allclose(np.abs(np.diag(u)), 1.0, atol=1e-15)


def test_mesh_zero_internal_is_permutation():
    u = np.abs(vqc.mesh_unitary(np.zeros(6)).matrix)
    assert np.allclose(np.sort(u, axis=None), [0] * 6 + [1] * 3, atol=1e-15)


@given(angles)
def test_mesh_unitary(theta):
    assert unitarity_error(vqc.mesh_unitary(theta).matrix) < 1e-12


def test_mesh_continuity(rng):
    theta = rng.uniform(0, 2 * np.pi, 6)
    a = vqc.mesh_unitary(theta).matrix
    b = vqc.mesh_unitary(theta + 1e-6).matrix
    assert np.linalg.norm(a - b) < 1e-4


def test_mesh_wrong_size():
    with pytest.raises(ConfigError):
        vqc.mesh_unitary(np.zeros(5))


def test_encoding_examples():
    np.testing.assert_allclose(vqc.encoding_unitary([0, 0]).matrix, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(vqc.encoding_unitary([1, -1]).matrix,
                               np.diag([np.exp(1j), np.exp(-1j), 1]), atol=1e-15)
    t = vqc.AffineTransform((2.0, 1.0), (0.5, 0.0))
    np.testing.assert_allclose(np.diag(vqc.encoding_unitary([0.25, 0.0], t).matrix),
                               [np.exp(1j), 1, 1], atol=1e-15)


def test_encoding_rejects_out_of_range():
    with pytest.raises(ConfigError):
        vqc.encoding_unitary([np.pi, 0])


@given(points, st.sampled_from([(1, 0, 0), (1, 1, 1), (2, 2, 1)]))
def test_probability_completeness(x, inp):
    m = model(inp, lam=np.ones(vqc.lambda_size(sum(inp))))
    assert vqc.vqc_output(np.array(x), m) == pytest.approx(1.0, abs=1e-9)


def test_zero_lambda_output_and_tie():
    m = model(lam=np.zeros(3))
    assert vqc.vqc_output(np.array([0.3, 0.2]), m) == 0.0
    assert vqc.vqc_classify([0.3, 0.2], m) == 1


def test_one_hot_outputs_sum_to_one(rng):
    x = np.array([0.4, -0.9])
    vals = [vqc.vqc_output(x, model(lam=np.eye(3)[i])) for i in range(3)]
    assert all(0 <= v <= 1 for v in vals)
    assert sum(vals) == pytest.approx(1.0, abs=1e-12)


@given(points, st.integers(0, 20))
def test_output_linear_in_lambda(x, seed):
    rng = np.random.default_rng(seed)
    l1, l2 = rng.normal(size=10), rng.normal(size=10)
    base = model((1, 1, 1), seed)
    m1 = vqc.VqcModel(base.input_state, base.theta1, base.theta2, l1)
    m2 = vqc.VqcModel(base.input_state, base.theta1, base.theta2, l2)
    m12 = vqc.VqcModel(base.input_state, base.theta1, base.theta2, l1 + l2)
    x = np.array(x)
    assert vqc.vqc_output(x, m12) == pytest.approx(vqc.vqc_output(x, m1) + vqc.vqc_output(x, m2), abs=1e-12)


@pytest.mark.parametrize("inp", [(1, 0, 0), (2, 2, 1)])
def test_global_phase_invariance(inp, rng):
    w1 = vqc.mesh_unitary(rng.uniform(0, 6, 6)).matrix
    w2 = vqc.mesh_unitary(rng.uniform(0, 6, 6)).matrix
    diag = vqc._encoding_phases(rng.uniform(-1, 1, (20, 2)), vqc.IDENTITY)
    s = FockState(inp)
    states = vqc.output_states(s)
    ref = vqc._batch_probabilities(w1, w2, diag, s, states)
    rot = vqc._batch_probabilities(w1 * np.exp(0.7j), w2 * np.exp(-2.1j), diag, s, states)
    np.testing.assert_allclose(rot, ref, atol=1e-12)


@pytest.mark.parametrize("inp", [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
def test_single_photon_shortcut_matches_permanents(inp, rng):
    from photonic_qml.fock import batch_probabilities
    w1 = vqc.mesh_unitary(rng.uniform(0, 6, 6)).matrix
    w2 = vqc.mesh_unitary(rng.uniform(0, 6, 6)).matrix
    diag = vqc._encoding_phases(rng.uniform(-1, 1, (20, 2)), vqc.IDENTITY)
    s = FockState(inp)
    states = vqc.output_states(s)
    u = (w2[None] * diag[:, None, :]) @ w1
    np.testing.assert_allclose(vqc._batch_probabilities(w1, w2, diag, s, states),
                               batch_probabilities(u, s, states), atol=1e-14)


def test_sign_flip_of_lambda(rng):
    m = model()
    neg = vqc.VqcModel(m.input_state, m.theta1, m.theta2, -m.lam)
    x = rng.uniform(-1, 1, (100, 2))
    f = m.decision_function(x)
    nz = f != 0
    assert np.array_equal(m.predict(x)[nz], -neg.predict(x)[nz])


def test_loss_examples():
    x = np.array([[0.1, 0.2], [-0.3, 0.4]])
    y = np.array([1.0, -1.0])
    theta = np.zeros(6)
    assert vqc.vqc_loss(theta, theta, np.zeros(3), x, y) == pytest.approx(0.5)
    lam = np.array([0.3, -0.2, 0.5])
    a = vqc.vqc_loss(theta, theta, lam, x, y, alpha=1e-4)
    b = vqc.vqc_loss(theta, theta, lam, x, y, alpha=2e-4)
    assert b > a >= 0
    with pytest.raises(DataError):
        vqc.vqc_loss(theta, theta, lam, np.zeros((0, 2)), [])


def test_perfect_fit_loss_is_zero():
    m = model()
    x = np.random.default_rng(1).uniform(-1, 1, (10, 2))
    y = m.decision_function(x)
    assert vqc.vqc_loss(m.theta1, m.theta2, m.lam, x, y, alpha=0.0) == pytest.approx(0.0, abs=1e-30)


def test_model_validation():
    with pytest.raises(ConfigError):
        vqc.VqcModel((1, 0), np.zeros(6), np.zeros(6), np.zeros(3))
    with pytest.raises(ConfigError):
        vqc.VqcModel((1, 0, 0), np.zeros(6), np.zeros(6), np.zeros(4))
    m = vqc.VqcModel((1, 0, 0), np.full(6, 7.0), np.full(6, -1.0), np.zeros(3))
    assert np.all((m.theta1 >= 0) & (m.theta1 < 2 * np.pi))
    assert np.all((m.theta2 >= 0) & (m.theta2 < 2 * np.pi))


@pytest.fixture(scope="module")
def small_run():
    from photonic_qml import data
    ds = data.synth_dataset(400, 0.0, 5)
    tr, va = ds.subset(range(300)), ds.subset(range(300, 400))
    m = vqc.train_vqc(tr.x, tr.y, restarts=3, max_iter=60, x_val=va.x, y_val=va.y, polish=False)
    return m, tr, va


def test_training_bookkeeping(small_run):
    m, _, _ = small_run
    assert len(m.restart_losses) == 3 == len(m.seeds) == len(m.restart_scores)
    assert m.retained_loss == min(m.restart_losses)
    assert m.seeds == vqc.default_seeds(3)


def test_training_beats_constant_predictor(small_run):
    m, tr, va = small_run
    assert m.retained_loss < 0.5
    assert score(m, va.x, va.y) >= 0.9


def test_restart_monotonicity(small_run):
    m, _, _ = small_run
    running = np.minimum.accumulate(m.restart_losses)
    assert np.all(np.diff(running) <= 0)


def test_training_is_deterministic(small_run):
    m, tr, va = small_run
    again = vqc.train_vqc(tr.x, tr.y, restarts=3, max_iter=60, x_val=va.x, y_val=va.y, polish=False)
    assert again.restart_losses == m.restart_losses
    assert np.array_equal(again.lam, m.lam)


def test_seed_count_must_match():
    with pytest.raises(ConfigError):
        vqc.train_vqc(np.zeros((4, 2)), [1, -1, 1, -1], restarts=2, seeds=[1])


def test_affine_transform_fit_on_held_out(small_run):
    m, _, va = small_run
    t = vqc.fit_affine_transform(m, va.x, va.y)
    tuned = vqc.VqcModel(m.input_state, m.theta1, m.theta2, m.lam, m.alpha, t)
    assert score(tuned, va.x, va.y) >= score(m, va.x, va.y)
    assert vqc.IDENTITY.is_identity and m.transform.is_identity
