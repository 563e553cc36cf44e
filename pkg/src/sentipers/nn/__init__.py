from . import functional
from .models import ModelConfig, Model, build_blstm, build_cnn, build_model, cnn_lengths
from .optim import Adam
from .tensor import Tensor, parameter
from .train import EncodedSet, TrainedModel, train

__all__ = [
    "functional", "ModelConfig", "Model", "build_blstm", "build_cnn", "build_model", "cnn_lengths",
    "Adam", "Tensor", "parameter", "EncodedSet", "TrainedModel", "train",
]
