import math

import numpy as np
import pytest

from h2df_rlmpc.core_types import NumericError, ScalingTable
from h2df_rlmpc.engine_sim import PlantConfig, generate_prbs_dataset
from h2df_rlmpc.neural_plant import (
    AugmentedState,
    NeuralPlant,
    TrainHyper,
    dataset_arrays,
    find_equilibrium,
    gradient_check,
    init_params,
    train,
)

SCALING = ScalingTable()
LO = np.array([4.5, 2.0, 0.2, 0.0])
HI = np.array([9.0, 20.0, 1.2, 8.0])


def random_state(rng):
    u = rng.uniform(LO, HI)
    return np.concatenate([rng.uniform(-0.8, 0.8, 8), u]), rng.normal(0, 0.1, 4) * (HI - LO)


def scalar_reference(params, h, u):
    """Element-by-element evaluation of encoder, GRU cell and decoder."""

    def dense(W, b, v, act):
        out = []
        for i in range(W.shape[0]):
            s = b[i]
            for j in range(W.shape[1]):
                s += W[i, j] * v[j]
            out.append(math.tanh(s) if act else s)
        return out

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    v = [2.0 * (u[i] - LO[i]) / (HI[i] - LO[i]) - 1.0 for i in range(4)]
    for k in range(3):
        v = dense(params[f"enc{k}_W"], params[f"enc{k}_b"], v, True)
    Wz, Uz, bz = params["gru_Wz"], params["gru_Uz"], params["gru_bz"]
    Wr, Ur, br = params["gru_Wr"], params["gru_Ur"], params["gru_br"]
    Wn, Un, bn = params["gru_Wn"], params["gru_Un"], params["gru_bn"]
    z = [sig(bz[i] + sum(Wz[i, j] * v[j] + Uz[i, j] * h[j] for j in range(8))) for i in range(8)]
    r = [sig(br[i] + sum(Wr[i, j] * v[j] + Ur[i, j] * h[j] for j in range(8))) for i in range(8)]
    n = [math.tanh(bn[i] + sum(Wn[i, j] * v[j] + Un[i, j] * r[j] * h[j] for j in range(8))) for i in range(8)]
    h_next = [(1 - z[i]) * h[i] + z[i] * n[i] for i in range(8)]
    a = h_next
    for k in range(2):
        a = dense(params[f"dec{k}_W"], params[f"dec{k}_b"], a, True)
    yn = dense(params["dec2_W"], params["dec2_b"], a, False)
    lo, hi = np.array([4.5, 0.0, 0.0]), np.array([9.0, 1850.0, 10.0])
    y = [lo[i] + (yn[i] + 1.0) * (hi[i] - lo[i]) / 2.0 for i in range(3)]
    return np.array(h_next), np.array(y)


def test_forward_matches_scalar_reference(random_model):
    rng = np.random.default_rng(1)
    for _ in range(5):
        x, du = random_state(rng)
        x_next, y = random_model.step_vec(x, du)
        h_ref, y_ref = scalar_reference(random_model.params, x[:8], x[8:] + du)
        np.testing.assert_allclose(x_next[:8], h_ref, rtol=0, atol=1e-12)
        np.testing.assert_allclose(y, y_ref, rtol=1e-12, atol=1e-10)
        np.testing.assert_array_equal(x_next[8:], x[8:] + du)


def test_architecture(random_model):
    assert random_model.n_hidden_layers == 7
    assert random_model.params["gru_Uz"].shape == (8, 8)


def test_same_input_twice_same_output(random_model):
    x = AugmentedState(np.zeros(8), np.array([6.0, 10.0, 0.7, 3.0]))
    _, y1 = random_model.forward_step(x, np.zeros(4))
    _, y2 = random_model.forward_step(x, np.zeros(4))
    assert y1 == y2


def test_zero_network_emits_midpoint():
    params = {k: np.zeros_like(v) for k, v in init_params(0).items()}
    model = NeuralPlant(params)
    rng = np.random.default_rng(0)
    for _ in range(3):
        x, du = random_state(rng)
        _, y = model.step_vec(x, du)
        np.testing.assert_array_equal(y, [6.75, 925.0, 5.0])
        _, _, A, B, C, D = model.linearize_vec(x, du)
        assert not np.any(C) and not np.any(D)


def test_non_finite_input_reports_index(random_model):
    x = np.zeros(12)
    x[9] = np.nan
    with pytest.raises(NumericError, match="index 9"):
        random_model.step_vec(x, np.zeros(4))


def test_rollout_base_case_and_causality(random_model):
    rng = np.random.default_rng(2)
    x, _ = random_state(rng)
    x0 = AugmentedState.from_vector(x)
    dus = rng.normal(0, 0.05, (5, 4))
    y5 = random_model.rollout(x0, dus)
    y3 = random_model.rollout(x0, dus[:3])
    assert y5.shape == (6, 3)
    np.testing.assert_array_equal(y5[:3], y3[:3])
    _, y_manual = random_model.step_vec(x, dus[0])
    np.testing.assert_array_equal(random_model.rollout(x0, dus[:1])[0], y_manual)


def test_rollout_constant_at_equilibrium(random_model):
    u = np.array([6.0, 10.0, 0.7, 3.0])
    h = find_equilibrium(random_model, u)
    ys = random_model.rollout(AugmentedState(h, u), np.zeros((5, 4)))
    np.testing.assert_allclose(ys, np.broadcast_to(ys[0], ys.shape), atol=1e-10)


def test_gradient_check_random_instances():
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(10):
        model = NeuralPlant.initialized(seed=100 + i)
        x, du = random_state(rng)
        worst = max(worst, gradient_check(model, x, du))
    assert worst < 1e-5


def test_linearize_structure(random_model):
    x, du = random_state(np.random.default_rng(3))
    J = random_model.linearize(AugmentedState.from_vector(x), du)
    assert [J[k].shape for k in "ABCD"] == [(12, 12), (12, 4), (3, 12), (3, 4)]
    np.testing.assert_array_equal(J["A"][8:, 8:], np.eye(4))
    np.testing.assert_array_equal(J["A"][8:, :8], 0.0)
    np.testing.assert_array_equal(J["B"][8:], np.eye(4))


def test_linear_activation_fc_jacobians_constant():
    # with linear FC layers the encoder and decoder Jacobians no longer depend
    # on the operating point; the GRU gates stay nonlinear
    model = NeuralPlant.initialized(seed=4, activation="linear")
    rng = np.random.default_rng(4)
    enc, dec = [], []
    for _ in range(2):
        x, du = random_state(rng)
        _, c = model._forward(x[None, :8], (x[8:] + du)[None])
        enc.append(model._dense_jacobian("enc", c.enc, 0, 2))
        dec.append(model._dense_jacobian("dec", c.dec, 0, 2))
    np.testing.assert_array_equal(enc[0], enc[1])
    np.testing.assert_array_equal(dec[0], dec[1])
    x, du = random_state(rng)
    assert gradient_check(model, x, du) < 1e-5


def test_save_load_bitwise(tmp_path, random_model):
    random_model.save(tmp_path / "m.json")
    back = NeuralPlant.load(tmp_path / "m.json")
    x, du = random_state(np.random.default_rng(6))
    a = random_model.step_vec(x, du)
    b = back.step_vec(x, du)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def test_predict_sequence_matches_stepping(random_model):
    U = np.random.default_rng(7).uniform(LO, HI, (50, 4))
    ys = random_model.predict_sequence(U)
    h = np.zeros(8)
    for t, u in enumerate(U):
        h, y = random_model.advance(h, u)
        np.testing.assert_allclose(ys[t], y, rtol=1e-13, atol=1e-10)


def constant_dataset(n=256):
    U = np.random.default_rng(0).uniform(LO, HI, (n, 4))
    Y = np.tile([6.0, 700.0, 5.0], (n, 1))
    return U, Y


def test_constant_dataset_learned_quickly():
    U, Y = constant_dataset()
    res = train(U, Y, TrainHyper(epochs=50, learning_rate=1e-2, truncation=16, batch_size=8, val_fraction=0.0))
    assert res.final_loss < 1e-4


def test_loss_non_increasing_at_small_learning_rate():
    U, Y = constant_dataset()
    res = train(U, Y, TrainHyper(epochs=30, learning_rate=1e-4, truncation=16, batch_size=8, val_fraction=0.0))
    losses = [h["train_mse"] for h in res.history]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def test_training_is_seed_deterministic():
    U, Y = constant_dataset(128)
    hyper = TrainHyper(epochs=5, truncation=16, batch_size=4)
    a, b = train(U, Y, hyper), train(U, Y, hyper)
    assert a.final_loss == b.final_loss
    assert all(np.array_equal(a.model.params[k], b.model.params[k]) for k in a.model.params)


def test_short_dataset_rejected():
    U, Y = constant_dataset(40)
    with pytest.raises(ValueError):
        train(U, Y, TrainHyper(truncation=32))


@pytest.mark.slow
def test_prbs_identification_accuracy():
    cfg = PlantConfig().without_noise()
    rows = generate_prbs_dataset(5000, cfg, [(2.0, 20.0), (0.2, 1.2), (0.0, 8.0)], hold=3, seed=0, redraw_every=50)
    U, Y = dataset_arrays(rows)
    res = train(U, Y, TrainHyper(epochs=200, learning_rate=3e-3))
    assert res.val_rmse[0] < 0.15
