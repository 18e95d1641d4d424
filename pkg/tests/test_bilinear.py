import numpy as np
import pytest

from consbandit.bilinear import (
    BilinearModel,
    CsvSchema,
    YieldDataset,
    dataset_mse,
    example_loss_and_grads,
    load_dataset,
    make_surrogate,
    predict,
    save_dataset,
    sgd_fit,
)


def small_dataset(n=50, seed=0):
    data, _, _ = make_surrogate(n=n, latent=3, noise=0.01, seed=seed)
    return data


# ---------------------------------------------------------------------------
# loader
# ---------------------------------------------------------------------------

def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="empty"):
        load_dataset(path)
    path.write_text(",".join(CsvSchema().header) + "\n")
    with pytest.raises(ValueError, match="empty"):
        load_dataset(path)


def test_roundtrip_three_rows(tmp_path):
    data = small_dataset(3)
    path = tmp_path / "three.csv"
    save_dataset(data, path)
    back = load_dataset(path)
    assert len(back) == 3
    assert np.array_equal(back.contexts, data.contexts)
    assert np.array_equal(back.actions, data.actions)
    assert np.array_equal(back.yields, data.yields)


def test_out_of_range_action_rejected(tmp_path):
    data = small_dataset(5)
    data.actions[3] = 23  # valid, then corrupt the written file
    path = tmp_path / "bad.csv"
    save_dataset(data, path)
    lines = path.read_text().splitlines()
    cells = lines[4].split(",")
    cells[-2] = "24"
    lines[4] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="row 3"):
        load_dataset(path)


def test_missing_column_and_bad_cells(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("f1,f2\n1,2\n")
    with pytest.raises(ValueError, match="missing columns"):
        load_dataset(path)
    data = small_dataset(2)
    good = tmp_path / "good.csv"
    save_dataset(data, good)
    lines = good.read_text().splitlines()
    cells = lines[1].split(",")
    cells[0] = "not-a-number"
    lines[1] = ",".join(cells)
    good.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="row 0"):
        load_dataset(good)


def test_onehot_violation_rejected(tmp_path):
    data = small_dataset(2)
    data.contexts[1, 6:] = 0.0
    path = tmp_path / "onehot.csv"
    save_dataset(data, path)
    with pytest.raises(ValueError, match="row 1"):
        load_dataset(path)


def test_dataset_invariants():
    with pytest.raises(ValueError, match="empty"):
        YieldDataset(np.zeros((0, 28)), np.zeros(0, dtype=int), np.zeros(0))
    with pytest.raises(ValueError, match="out of range"):
        YieldDataset(np.zeros((2, 28)), np.array([0, 24]), np.zeros(2))


# ---------------------------------------------------------------------------
# model and SGD
# ---------------------------------------------------------------------------

def test_predict_examples():
    model = BilinearModel(W=np.zeros((28, 2)), V=np.zeros((24, 2)))
    assert predict(model, np.ones(28), 3) == 0.0
    # latent 1, W a column of ones, V_x = (2), one-hot context
    model2 = BilinearModel(W=np.ones((28, 1)), V=2.0 * np.ones((24, 1)))
    c = np.zeros(28)
    c[7] = 1.0
    assert predict(model2, c, 0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        predict(model2, np.ones(5), 0)
    with pytest.raises(ValueError):
        predict(model2, c, 24)


def test_zero_epochs_returns_initial_model():
    data = small_dataset(20)
    rng = np.random.default_rng(1)
    model, traces = sgd_fit(data, epochs=0, latent=3, rng=rng)
    expect = np.random.default_rng(1)
    assert np.array_equal(model.W, 0.1 * expect.standard_normal((28, 3)))
    assert np.array_equal(model.V, 0.1 * expect.standard_normal((24, 3)))
    assert len(traces["loss"]) == 0


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    data = small_dataset(10)
    lam_v, lam_w_step = 1e-3, 1e-3 / len(data)
    step = 1e-5
    for _ in range(20):
        model = BilinearModel(W=rng.standard_normal((28, 3)), V=rng.standard_normal((24, 3)))
        i = int(rng.integers(len(data)))
        c, a, y = data.contexts[i], int(data.actions[i]), float(data.yields[i])
        _, grad_w, grad_v = example_loss_and_grads(model, c, a, y, lam_v, lam_w_step)

        def loss_at(W=None, V=None):
            m = BilinearModel(W=model.W if W is None else W,
                              V=model.V if V is None else V)
            return example_loss_and_grads(m, c, a, y, lam_v, lam_w_step)[0]

        for _ in range(3):
            r, s = int(rng.integers(28)), int(rng.integers(3))
            w_hi, w_lo = model.W.copy(), model.W.copy()
            w_hi[r, s] += step
            w_lo[r, s] -= step
            fd = (loss_at(W=w_hi) - loss_at(W=w_lo)) / (2 * step)
            assert grad_w[r, s] == pytest.approx(fd, rel=1e-4, abs=1e-7)
        for _ in range(3):
            s = int(rng.integers(3))
            v_hi, v_lo = model.V.copy(), model.V.copy()
            v_hi[a, s] += step
            v_lo[a, s] -= step
            fd = (loss_at(V=v_hi) - loss_at(V=v_lo)) / (2 * step)
            assert grad_v[s] == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_noiseless_rank_one_recovery():
    # rank-1 data, latent-2 model: SGD should fit nearly exactly
    rng = np.random.default_rng(3)
    n = 200
    schema = CsvSchema()
    contexts = np.zeros((n, 28))
    contexts[:, :6] = rng.standard_normal((n, 6))
    contexts[np.arange(n), 6 + rng.integers(22, size=n)] = 1.0
    w = 0.4 * rng.standard_normal(28)
    v = np.abs(rng.standard_normal(24)) + 0.2
    actions = rng.integers(24, size=n)
    yields = (contexts @ w) * v[actions]
    data = YieldDataset(contexts, actions, yields)
    model, traces = sgd_fit(data, lr=0.015, epochs=300, latent=2, rng=np.random.default_rng(4))
    assert traces["mse"][-1] <= 1e-3


def test_fit_trace_finite_and_mse_consistent():
    data = small_dataset(300, seed=5)
    model, traces = sgd_fit(data, epochs=40, latent=3, rng=np.random.default_rng(6))
    assert np.all(np.isfinite(traces["loss"]))
    assert traces["mse"][-1] == pytest.approx(dataset_mse(model, data), rel=1e-12)


def test_regularization_shrinks_norms():
    data = small_dataset(100, seed=7)
    norms = []
    for lam in (1e-3, 1.0, 50.0):
        model, _ = sgd_fit(data, lam_v=lam, lam_w=lam, epochs=30, latent=3,
                           rng=np.random.default_rng(8))
        norms.append(np.linalg.norm(model.W) + np.linalg.norm(model.V))
    assert norms[0] > norms[1] > norms[2]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reported_with_epoch():
    data = small_dataset(100, seed=9)
    with pytest.raises(RuntimeError, match="epoch"):
        sgd_fit(data, lr=5.0, epochs=10, latent=3, rng=np.random.default_rng(10))
