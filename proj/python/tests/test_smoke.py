import json
import math
import os

import numpy as np
import pytest

import pykgam

DATA = os.environ.get("KGAM_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))
IRIS = os.path.join(DATA, "iris.csv")


def test_psi_hand_values():
    v = pykgam.psi([0.31, 0.39], gamma=10, k=2, n_beta=2)
    assert v == pytest.approx([0.301, 0.354], abs=1e-12)


def test_psi_series_monotone():
    xs, ys = pykgam.psi_series(gamma=10, k=3, n_beta=2, grid=101)
    assert len(xs) == 101
    assert all(b >= a for a, b in zip(ys, ys[1:]))


def test_embed_shape_and_channel_offsets():
    X, _ = pykgam.friedman(n=20, seed=1)
    Z = pykgam.embed(X)
    assert Z.shape == (20, 11)
    # channel q carries the +q offset and a sum of lambda-weighted psi values in [0, 1)
    for q in range(11):
        assert np.all(Z[:, q] >= q)


def test_train_predict_save_load(tmp_path):
    cfg = {
        "dataset": {"kind": "iris", "path": IRIS},
        "model": {"outer_mode": "per_channel_g", "hidden_width": 4, "hidden_layers": 1},
        "train": {"epochs": 5, "optimizer": "adam"},
        "output_dir": str(tmp_path),
    }
    model = pykgam.train(cfg)
    assert model.channels == 7
    assert len(model.loss_trace) == 5
    assert model.metrics["test"]["n"] == 45
    X, y = pykgam.iris(IRIS)
    p = model.predict(X)
    assert p.shape == (150,)
    assert np.all((p > 0) & (p < 1))
    path = tmp_path / "ck.json"
    model.save(path)
    again = pykgam.load(path)
    assert np.array_equal(again.predict(X), p)


def test_config_errors_map_to_value_error():
    with pytest.raises(ValueError):
        pykgam.train({"trian": {}})
    with pytest.raises(pykgam.ConfigError):
        pykgam.resolve_config({"kst": {"gamma": 3}})


def test_glm_reference_fit():
    X, y = pykgam.iris(IRIS)
    fit = pykgam.glm(X, y, ["SepalWidth", "PetalLength", "PetalWidth"])
    coef = fit["coefficients"]
    assert coef["SepalWidth"] > 0 and coef["PetalLength"] > 0 and coef["PetalWidth"] < 0
    assert fit["aic"] == pytest.approx(67.90515719369711, rel=1e-9)


def test_attention_is_nadaraya_watson():
    rng = np.random.default_rng(0)
    Q = rng.normal(size=(1, 4))
    K = rng.normal(size=(6, 4))
    V = rng.normal(size=(6, 1))
    att = pykgam.attention(Q, K, V)[0, 0]
    nw = pykgam.nadaraya_watson(K, V[:, 0], Q[0], kernel="exp_inner_product", bandwidth=math.sqrt(4))
    assert abs(att - nw) <= 1e-12


def test_split_indices_partition():
    tr, te = pykgam.split_indices(150, 105, 42)
    assert len(tr) == 105 and len(te) == 45
    assert sorted(tr + te) == list(range(150))
