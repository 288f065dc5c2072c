"""Layered text classifiers: weight manifests, forward pass and fixture training."""

from .layers import ActivationLayer, Conv2DLayer, DenseLayer, FlattenLayer, LSTMLayer, layer_from_manifest
from .model import NetworkModel, Prediction, forward, load_model, predict_logits, save_model, softmax
from .fixtures import FixtureBundle, train_fixture, write_corpus

__all__ = [
    "ActivationLayer",
    "Conv2DLayer",
    "DenseLayer",
    "FlattenLayer",
    "LSTMLayer",
    "layer_from_manifest",
    "NetworkModel",
    "Prediction",
    "forward",
    "load_model",
    "predict_logits",
    "save_model",
    "softmax",
    "FixtureBundle",
    "train_fixture",
    "write_corpus",
]
