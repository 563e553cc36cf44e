import numpy as np
import pytest

from sentipers.embed import random_embedding
from sentipers.errors import ConfigError
from sentipers.nn import functional as F
from sentipers.nn.layers import Conv1D, Dense, GlobalMaxPool1D, MaxPool1D
from sentipers.nn.models import ModelConfig, build_blstm, build_cnn, build_model, cnn_lengths
from sentipers.nn.tensor import Tensor


def _small(arch, **kw):
    cfg = ModelConfig(architecture=arch, vocab_size=20, embed_dim=8, lstm_hidden=4, dense_units=6,
                      cnn_dense_units=5, filters=3, **kw)
    return build_model(cfg, random_embedding(20, 8, seed=0).matrix)


def _batch(B=2, T=257, seed=0):
    rng = np.random.default_rng(seed)
    lengths = rng.integers(1, 12, B)
    ids = np.zeros((B, T), dtype=np.int64)
    for i, n in enumerate(lengths):
        ids[i, :n] = rng.integers(1, 20, n)
    return ids, lengths


# -- op-level examples -----------------------------------------------------------------

def test_dense_identity_and_arithmetic():
    x = np.array([[1.0, 2.0]])
    assert F.dense(x, np.eye(2), np.zeros(2)).data.tolist() == [[1.0, 2.0]]
    assert F.dense(x, np.eye(2), np.array([3.0, 3.0])).data.tolist() == [[4.0, 5.0]]


def test_relu_examples():
    assert F.relu(np.array([-1.0, 0.0, 2.0])).data.tolist() == [0.0, 0.0, 2.0]
    assert np.all(F.relu(-np.arange(1.0, 5.0)).data == 0)


def test_sigmoid_examples():
    assert F.sigmoid(np.array([0.0])).data[0] == 0.5
    x = np.random.default_rng(0).standard_normal(100) * 5
    np.testing.assert_allclose(F.sigmoid(x).data + F.sigmoid(-x).data, 1.0, atol=1e-12)


def test_softmax_examples():
    assert F.softmax(np.zeros((1, 2))).data.tolist() == [[0.5, 0.5]]
    x = np.random.default_rng(1).standard_normal((10, 5))
    assert np.array_equal(F.softmax(x).data.argmax(axis=1), x.argmax(axis=1))


def test_lstm_zero_fixed_point():
    B, T, E, H = 2, 4, 3, 2
    out = F.bilstm(np.zeros((B, T, E)), None, (np.zeros((E, 4 * H)), np.zeros((H, 4 * H)), np.zeros(4 * H)),
                   (np.zeros((E, 4 * H)), np.zeros((H, 4 * H)), np.zeros(4 * H))).data
    assert np.all(out == 0)


def test_delta_kernel_shifts_channel():
    x = np.random.default_rng(2).standard_normal((1, 6, 2))
    W = np.zeros((3, 2, 1))
    W[2, 1, 0] = 1.0  # picks channel 1 at tap 2
    y = F.conv1d(x, W, np.zeros(1)).data
    np.testing.assert_array_equal(y[0, :, 0], x[0, 2:, 1])


def test_global_maxpool_example():
    assert F.global_maxpool(np.array([[[1.0, 5.0], [3.0, 2.0]]])).data.tolist() == [[3.0, 5.0]]


def test_padding_never_wins_the_max():
    x = -np.ones((1, 4, 2))
    x[0, 2:] = 0.0  # padded positions hold zeros, larger than every real value
    assert F.global_maxpool(x, np.array([2])).data.tolist() == [[-1.0, -1.0]]
    assert np.all(F.maxpool1d(x, 2, 1, np.array([2])).data[0, :2] == -1.0)


def test_dropout_rates():
    x = np.ones((1000, 100))
    assert np.array_equal(F.dropout(x, 0.0, training=True, rng=np.random.default_rng(0)).data, x)
    assert np.array_equal(F.dropout(x, 0.5, training=False).data, x)
    dropped = (F.dropout(x, 0.10, training=True, rng=np.random.default_rng(1)).data == 0).mean()
    assert abs(dropped - 0.10) < 0.01


def test_tensor_shape_invariant():
    t = Tensor(np.zeros((3, 4)), requires_grad=True)
    (t * 2.0).sum().backward()
    assert t.grad.shape == t.data.shape == (3, 4)


# -- architectures ------------------------------------------------------------------------

def test_blstm_has_six_layers_after_embedding():
    model = _small("blstm")
    assert model.describe()[:2] == ["input", "embedding"]
    assert len(model.layers) == 6
    kinds = [layer.kind for layer in model.layers]
    assert kinds == ["bilstm", "global_maxpool1d", "dropout", "dense", "dropout", "dense"]


def test_cnn_has_nine_layers_after_embedding():
    model = _small("cnn")
    assert len(model.layers) == 9
    kinds = [layer.kind for layer in model.layers]
    assert kinds == ["conv1d", "maxpool1d", "conv1d", "maxpool1d", "conv1d", "global_maxpool1d", "dropout", "dense", "dense"]
    assert [layer.activation for layer in model.layers if isinstance(layer, Dense)] == ["sigmoid", "softmax"]


def test_cnn_lengths_match_brute_force():
    expected = []
    T = 257
    for n, k in enumerate([4, 8, 16]):
        T = len(range(0, T - k + 1))  # window start positions
        expected.append(T)
        if n < 2:
            T = len(range(0, T - 2 + 1, 1))
            expected.append(T)
    assert expected == [254, 253, 246, 245, 230]
    assert cnn_lengths(257, (4, 8, 16), 2, 1) == expected


def test_cnn_layer_outputs_have_those_lengths():
    model = _small("cnn")
    ids, lengths = _batch()
    x, _ = model.embedding.forward(ids, None)
    seen = []
    for layer in model.layers:
        x, _ = layer.forward(x, None)
        if isinstance(layer, (Conv1D, MaxPool1D)):
            seen.append(x.data.shape[1])
        if isinstance(layer, GlobalMaxPool1D):
            break
    assert seen == [254, 253, 246, 245, 230]


def test_cnn_too_short_is_config_error():
    with pytest.raises(ConfigError):
        cnn_lengths(20, (4, 8, 16))
    with pytest.raises(ConfigError):
        ModelConfig(architecture="cnn", max_len=20)


def test_dense_600_parameter_count():
    cfg = ModelConfig(architecture="blstm", vocab_size=20, embed_dim=8)
    model = build_blstm(cfg, random_embedding(20, 8).matrix)
    dense = model.layers[3]
    H = cfg.lstm_hidden
    assert sum(p.data.size for p in dense.params.values()) == 2 * H * 600 + 600


@pytest.mark.parametrize("arch", ["blstm", "cnn"])
@pytest.mark.parametrize("classes", [2, 5])
def test_output_rows_sum_to_one(arch, classes):
    model = _small(arch, output_classes=classes)
    ids, lengths = _batch()
    probs, pred = model.predict(ids, lengths)
    assert probs.shape == (2, classes)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    assert np.array_equal(pred, probs.argmax(axis=1))


@pytest.mark.parametrize("arch", ["blstm", "cnn"])
def test_predict_deterministic_and_seeded(arch):
    ids, lengths = _batch(4)
    a = _small(arch).predict_proba(ids, lengths)
    b = _small(arch).predict_proba(ids, lengths)
    assert np.array_equal(a, b)
    other = build_model(ModelConfig(architecture=arch, vocab_size=20, embed_dim=8, lstm_hidden=4, dense_units=6,
                                    cnn_dense_units=5, filters=3, seed=1), random_embedding(20, 8).matrix)
    assert not np.array_equal(other.predict_proba(ids, lengths), a)


def test_padding_does_not_change_prediction():
    model = _small("blstm")
    ids, lengths = _batch(1)
    base = model.predict_proba(ids, lengths)
    noisy = ids.copy()
    noisy[0, lengths[0]:] = 5  # garbage beyond true_length is masked out
    np.testing.assert_allclose(model.predict_proba(noisy, lengths), base, atol=1e-12)


def test_state_dict_roundtrip_and_frozen_embedding():
    model = _small("cnn")
    state = model.state_dict()
    other = _small("cnn")
    for p in other.named_parameters().values():
        p.data = p.data + 1.0
    other.load_state_dict(state)
    ids, lengths = _batch()
    assert np.array_equal(other.predict_proba(ids, lengths), model.predict_proba(ids, lengths))
    frozen = build_cnn(model.config, random_embedding(20, 8).matrix, trainable=False)
    assert "embedding.weight" not in frozen.named_parameters()
    with pytest.raises(ConfigError):
        other.load_state_dict({})


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(architecture="rnn")
    with pytest.raises(ConfigError):
        ModelConfig(output_classes=3)
    with pytest.raises(ConfigError):
        ModelConfig(dropout=1.0)
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({"hidden": 3})
    cfg = ModelConfig(architecture="cnn")
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg


def test_wrong_input_width():
    with pytest.raises(ConfigError):
        _small("blstm").forward(np.zeros((1, 10), dtype=np.int64))
