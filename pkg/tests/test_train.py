import numpy as np
import pytest

from sentipers.embed import random_embedding
from sentipers.errors import NumericError
from sentipers.nn.models import ModelConfig, build_model
from sentipers.nn.optim import Adam
from sentipers.nn.train import EncodedSet, dataset_loss, evaluate_f1, train

SMALL = dict(vocab_size=12, embed_dim=8, lstm_hidden=6, dense_units=8, cnn_dense_units=8, filters=6, max_len=40)


def _model(arch, **kw):
    cfg = ModelConfig(architecture=arch, **{**SMALL, **kw})
    return build_model(cfg, random_embedding(12, 8, seed=cfg.seed).matrix)


def _marker_set(n, seed):
    """Token 2 marks class 0, token 3 class 1; tokens 4..11 are filler."""
    rng = np.random.default_rng(seed)
    ids = np.zeros((n, SMALL["max_len"]), dtype=np.int64)
    lengths = rng.integers(3, 8, n)
    y = np.arange(n) % 2
    for i in range(n):
        ids[i, :lengths[i]] = rng.integers(4, 12, lengths[i])
        ids[i, rng.integers(0, lengths[i])] = 2 + y[i]
    return EncodedSet(ids, lengths, y)


@pytest.mark.parametrize("arch", ["blstm", "cnn"])
def test_zero_epochs_returns_initial_model(arch):
    model = _model(arch)
    before = model.state_dict()
    result = train(model, _marker_set(10, 0), epochs=0)
    assert result.history == [] and result.model is model
    for k, v in model.state_dict().items():
        assert np.array_equal(v, before[k])


@pytest.mark.parametrize("arch", ["blstm", "cnn"])
def test_first_epoch_does_not_raise_training_loss(arch):
    data = _marker_set(64, 1)
    result = train(_model(arch), data, epochs=1)
    assert result.history[0]["train_loss"] <= result.initial_loss


@pytest.mark.parametrize("arch", ["blstm", "cnn"])
def test_separable_markers_learned(arch):
    data, valid = _marker_set(160, 2), _marker_set(40, 3)
    result = train(_model(arch, learning_rate=1e-2, dropout=0.0), data, valid, epochs=10)
    assert result.best_valid_f1 >= 0.99
    assert evaluate_f1(result.model, valid) == result.best_valid_f1


def test_best_validation_epoch_is_restored():
    data, valid = _marker_set(64, 4), _marker_set(20, 5)
    result = train(_model("blstm", learning_rate=1e-2), data, valid, epochs=4)
    scores = [r["valid_f1"] for r in result.history]
    best = max(scores)
    assert result.best_valid_f1 == best
    assert result.best_epoch == max(i + 1 for i, s in enumerate(scores) if s == best)
    assert evaluate_f1(result.model, valid) == best


def test_training_is_deterministic():
    data = _marker_set(40, 6)
    a = train(_model("cnn"), data, epochs=2)
    b = train(_model("cnn"), data, epochs=2)
    assert [r["train_loss"] for r in a.history] == [r["train_loss"] for r in b.history]
    for k, v in a.model.state_dict().items():
        assert np.array_equal(v, b.model.state_dict()[k])


def test_padding_row_stays_zero_through_training():
    model = _model("blstm")
    train(model, _marker_set(40, 7), epochs=3)
    assert np.all(model.embedding.weight.data[0] == 0)


def test_non_finite_loss_raises_numeric_error():
    model = _model("blstm")
    model.layers[-1].params["W"].data[:] = np.nan
    with pytest.raises(NumericError, match="non-finite loss"):
        train(model, _marker_set(8, 8), epochs=1)


def test_gradient_clipping_bounds_norm():
    model = _model("blstm")
    data = _marker_set(8, 9)
    opt = Adam(model.named_parameters())
    from sentipers.nn import functional as F
    F.cross_entropy(model.forward(data.ids, data.lengths, training=False), data.y).backward()
    before = opt.grad_norm()
    returned = opt.clip(before / 10)
    assert returned == pytest.approx(before)
    assert opt.grad_norm() == pytest.approx(before / 10)


def test_dataset_loss_of_empty_set():
    empty = EncodedSet(np.zeros((0, 40), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    assert dataset_loss(_model("cnn"), empty) == 0.0
