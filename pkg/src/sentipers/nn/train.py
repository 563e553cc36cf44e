"""Mini-batch training with Adam and best-validation checkpoint selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError
from ..metrics import confusion, weighted_f1
from . import functional as F
from .optim import Adam

logger = logging.getLogger(__name__)


@dataclass
class EncodedSet:
    ids: np.ndarray
    lengths: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.y)


@dataclass
class TrainedModel:
    model: object
    vocab: object = None
    history: list = field(default_factory=list)
    initial_loss: float | None = None
    best_epoch: int = 0
    best_valid_f1: float | None = None

    @property
    def config(self):
        return self.model.config

    def predict(self, ids, lengths=None):
        return self.model.predict(ids, lengths)


def dataset_loss(model, data: EncodedSet, batch_size: int = 256) -> float:
    """Mean cross-entropy over ``data`` with dropout off."""
    total = 0.0
    for start in range(0, len(data), batch_size):
        sl = slice(start, start + batch_size)
        logits = model.forward(data.ids[sl], data.lengths[sl], training=False)
        total += float(F.cross_entropy(logits, data.y[sl]).data) * len(data.y[sl])
    return total / max(len(data), 1)


def evaluate_f1(model, data: EncodedSet) -> float:
    _, pred = model.predict(data.ids, data.lengths)
    return weighted_f1(confusion(data.y, pred, model.config.output_classes))


def train(model, train_set: EncodedSet, valid_set: EncodedSet | None = None, epochs: int | None = None,
          batch_size: int | None = None, optimizer: Adam | None = None, seed: int | None = None,
          vocab=None, log_every_epoch: bool = False) -> TrainedModel:
    """Minimize cross-entropy; keep the parameters of the best validation-F1 epoch.

    Without a validation set the final parameters are kept.
    """
    cfg = model.config
    epochs = cfg.epochs if epochs is None else epochs
    batch_size = batch_size or cfg.batch_size
    seed = cfg.seed if seed is None else seed
    optimizer = optimizer or Adam(model.named_parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    rng = np.random.default_rng(seed)
    result = TrainedModel(model, vocab)
    if epochs == 0 or len(train_set) == 0:
        return result

    result.initial_loss = dataset_loss(model, train_set)
    best_state = None
    last_norm = 0.0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_set))
        batch_losses = []
        for b, start in enumerate(range(0, len(order), batch_size)):
            idx = order[start:start + batch_size]
            optimizer.zero_grad()
            logits = model.forward(train_set.ids[idx], train_set.lengths[idx], training=True, rng=rng)
            loss = F.cross_entropy(logits, train_set.y[idx])
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {b} (last grad norm {last_norm:.4g})")
            loss.backward()
            last_norm = optimizer.clip(cfg.clip_norm)
            if not np.isfinite(last_norm):
                raise NumericError(f"non-finite gradient at epoch {epoch}, batch {b}")
            optimizer.step()
            batch_losses.append(value)
        record = {
            "epoch": epoch,
            "batch_loss": float(np.mean(batch_losses)),
            "train_loss": dataset_loss(model, train_set),
        }
        if valid_set is not None and len(valid_set):
            record["valid_f1"] = evaluate_f1(model, valid_set)
            if result.best_valid_f1 is None or record["valid_f1"] >= result.best_valid_f1:
                result.best_valid_f1 = record["valid_f1"]
                result.best_epoch = epoch
                best_state = model.state_dict()
        if log_every_epoch:
            logger.info("epoch %d %s", epoch, record)
        result.history.append(record)
    if best_state is not None:
        model.load_state_dict(best_state)
    else:
        result.best_epoch = epochs
    return result
