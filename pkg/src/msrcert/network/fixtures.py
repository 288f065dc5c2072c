"""Deterministic desk-scale models trained on a synthetic polarity task.

The task: ``polarity_words`` positive and as many negative tokens; each text has
``length`` words drawn with a strict majority of one polarity, labelled by that
polarity (class 1 = positive). The first ``signal_dims`` embedding dimensions carry
the polarity, the remaining ones are uniform noise. Models are trained full-batch
with Adam on the cross-entropy of the normalized embeddings.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from ..base import Layer
from ..embedding import EmbeddingStore, normalize
from ..exceptions import TrainingError
from ..models import FixtureConfig, LayerKind
from .layers import (
    ACTIVATION_GRADIENTS,
    ActivationLayer,
    Conv2DLayer,
    DenseLayer,
    FlattenLayer,
)
from .model import NetworkModel, save_model, softmax


logger = logging.getLogger(__name__)

POSITIVE_CENTER = 0.75
NEGATIVE_CENTER = 0.25
SIGNAL_SPREAD = 0.05
POLARITY_TAG = "ADJ"

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class FixtureBundle:
    """Everything a trained fixture consists of."""
    config: FixtureConfig
    seed: int
    raw_store: EmbeddingStore
    store: EmbeddingStore
    model: NetworkModel
    texts: List[str]
    labels: np.ndarray
    tags: Dict[str, str]
    accuracy: float

    def embedded(self) -> np.ndarray:
        """``(num_texts, length, dim)`` normalized inputs of the training texts."""
        return np.stack([
            np.stack([self.store.vector(token) for token in text.split()]) for text in self.texts
        ])


def polarity_vocabulary(config: FixtureConfig) -> Tuple[List[str], List[str]]:
    positive = [f"pos{i}" for i in range(config.polarity_words)]
    negative = [f"neg{i}" for i in range(config.polarity_words)]
    return positive, negative


def _raw_embedding(config: FixtureConfig, rng: np.random.Generator) -> EmbeddingStore:
    positive, negative = polarity_vocabulary(config)
    n = config.polarity_words
    signal = min(config.signal_dims, config.dim)
    vectors = rng.uniform(0.0, 1.0, size=(2 * n, config.dim))
    spread = np.clip(rng.normal(0.0, SIGNAL_SPREAD, size=(2 * n, signal)), -3 * SIGNAL_SPREAD, 3 * SIGNAL_SPREAD)
    vectors[:n, :signal] = POSITIVE_CENTER + spread[:n]
    vectors[n:, :signal] = NEGATIVE_CENTER + spread[n:]
    return EmbeddingStore(tokens=tuple(positive + negative), vectors=vectors, dim=config.dim)


def _majority_count(config: FixtureConfig, rng: np.random.Generator) -> int:
    smallest = config.length // 2 + 1
    if config.minimal_majority:
        return smallest
    return int(rng.integers(smallest, config.length + 1))


def _corpus(config: FixtureConfig, rng: np.random.Generator) -> Tuple[List[str], np.ndarray]:
    positive, negative = polarity_vocabulary(config)
    texts: List[str] = []
    labels = np.zeros(config.num_texts, dtype=np.int64)
    for t in range(config.num_texts):
        label = t % 2
        majority = _majority_count(config, rng)
        major, minor = (positive, negative) if label == 1 else (negative, positive)
        words = [major[i] for i in rng.integers(0, len(major), size=majority)]
        words += [minor[i] for i in rng.integers(0, len(minor), size=config.length - majority)]
        order = rng.permutation(config.length)
        texts.append(" ".join(words[i] for i in order))
        labels[t] = label
    if config.label_noise > 0:
        flip = rng.uniform(size=config.num_texts) < config.label_noise
        labels = np.where(flip, 1 - labels, labels)
    return texts, labels


def _dense(rng: np.random.Generator, fan_in: int, units: int) -> DenseLayer:
    scale = np.sqrt(2.0 / (fan_in + units))
    return DenseLayer(rng.normal(0.0, scale, size=(units, fan_in)), np.zeros(units))


def build_architecture(config: FixtureConfig, rng: np.random.Generator) -> List[Layer]:
    """Freshly initialized layers for ``config.architecture``."""
    fan_in = config.length * config.dim
    if config.architecture == "dense":
        return [_dense(rng, fan_in, 2)]
    if config.architecture == "mlp":
        return [
            _dense(rng, fan_in, config.hidden_units),
            ActivationLayer(LayerKind.RELU),
            _dense(rng, config.hidden_units, 2),
        ]
    kh, kw = config.kernel_size
    scale = np.sqrt(2.0 / (kh * kw + config.filters))
    conv = Conv2DLayer(rng.normal(0.0, scale, size=(config.filters, kh, kw, 1)), np.zeros(config.filters))
    conv_out = (config.length - kh + 1) * (config.dim - kw + 1) * config.filters
    return [conv, ActivationLayer(LayerKind.RELU), FlattenLayer(), _dense(rng, conv_out, 2)]


def _parameters(layer: Layer) -> List[np.ndarray]:
    if isinstance(layer, (DenseLayer, Conv2DLayer)):
        return [layer.kernel, layer.bias]
    return []


def _backward(
    layers: List[Layer],
    shapes: List[tuple],
    inputs: List[np.ndarray],
    grad: np.ndarray,
) -> List[List[np.ndarray]]:
    """Parameter gradients of every layer given the gradient at the logits."""
    grads: List[List[np.ndarray]] = [[] for _ in layers]
    for k in range(len(layers) - 1, -1, -1):
        layer, x = layers[k], inputs[k]
        batch = x.shape[0]
        if isinstance(layer, DenseLayer):
            flat = x.reshape(batch, -1)
            grads[k] = [grad.T @ flat, grad.sum(axis=0)]
            grad = (grad @ layer.kernel).reshape(x.shape)
        elif isinstance(layer, Conv2DLayer):
            flat_in = x.reshape(batch, -1)
            flat_grad = grad.reshape(batch, -1)
            mapping = layer.index_map(shapes[k])
            dense_grad = flat_grad.T @ flat_in
            used = mapping >= 0
            kernel_grad = np.bincount(mapping[used], weights=dense_grad[used], minlength=layer.kernel.size)
            grads[k] = [kernel_grad.reshape(layer.kernel.shape), grad.reshape(batch, -1, layer.filters).sum(axis=(0, 1))]
            weight, _ = layer.affine(shapes[k])
            grad = (flat_grad @ weight).reshape(x.shape)
        elif isinstance(layer, ActivationLayer):
            grad = grad * ACTIVATION_GRADIENTS[layer.kind](x)
        else:
            grad = grad.reshape(x.shape)
    return grads


def _fit(model: NetworkModel, xs: np.ndarray, labels: np.ndarray, config: FixtureConfig) -> float:
    params = [p for layer in model.layers for p in _parameters(layer)]
    first = [np.zeros_like(p) for p in params]
    second = [np.zeros_like(p) for p in params]
    beta1, beta2 = ADAM_BETAS
    onehot = np.eye(model.num_classes)[labels]
    for step in range(1, config.iterations + 1):
        inputs: List[np.ndarray] = []
        out = xs
        for layer in model.layers:
            inputs.append(out)
            out = layer.forward(out)
        probs = softmax(out)
        grad = (probs - onehot) / len(xs)
        flat_grads = [g for layer_grads in _backward(model.layers, model.shapes, inputs, grad) for g in layer_grads]
        for p, g, m, v in zip(params, flat_grads, first, second):
            m *= beta1
            m += (1 - beta1) * g
            v *= beta2
            v += (1 - beta2) * g * g
            m_hat = m / (1 - beta1 ** step)
            v_hat = v / (1 - beta2 ** step)
            p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        if step % 100 == 0:
            loss = -float(np.mean(np.log(probs[np.arange(len(xs)), labels] + 1e-12)))
            logger.debug(f"fixture step {step}: loss {loss:.4f}")
    predictions = np.argmax(model.forward(xs), axis=1)
    return float(np.mean(predictions == labels))


def train_fixture(config: FixtureConfig, seed: int = 0) -> FixtureBundle:
    """Train a fixture model; deterministic in ``(config, seed)``.

    Raises TrainingError when the training accuracy stays below ``target_accuracy``.
    """
    rng = np.random.default_rng(seed)
    raw_store = _raw_embedding(config, rng)
    store = normalize(raw_store)
    texts, labels = _corpus(config, rng)
    model = NetworkModel(build_architecture(config, rng), (config.length, config.dim), num_classes=2)
    xs = np.stack([np.stack([store.vector(token) for token in text.split()]) for text in texts])

    accuracy = _fit(model, xs, labels, config)
    logger.info(
        f"Trained {config.architecture} fixture (d={config.dim}, m={config.length}) "
        f"to accuracy {accuracy:.3f} in {config.iterations} iterations"
    )
    if accuracy < config.target_accuracy:
        raise TrainingError(
            f"Fixture reached accuracy {accuracy:.3f} after {config.iterations} iterations, "
            f"target {config.target_accuracy:.3f}",
            accuracy=accuracy,
        )
    positive, negative = polarity_vocabulary(config)
    tags = {token: POLARITY_TAG for token in positive + negative}
    return FixtureBundle(
        config=config, seed=seed, raw_store=raw_store, store=store, model=model,
        texts=texts, labels=labels, tags=tags, accuracy=accuracy,
    )


def write_embedding(store: EmbeddingStore, path: Union[str, Path]) -> Path:
    """Write a store in the ``token v1 ... vd`` text format, values exact to float64."""
    path = Path(path)
    lines = [
        " ".join([token] + [format(float(v), ".17g") for v in row])
        for token, row in zip(store.tokens, store.vectors)
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_corpus(bundle: FixtureBundle, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write the raw embedding, weight manifest, texts and lexicon of a fixture."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "embedding": write_embedding(bundle.raw_store, out_dir / "embedding.txt"),
        "model": save_model(bundle.model, out_dir / "model.json"),
        "texts": out_dir / "texts.txt",
        "labels": out_dir / "labels.txt",
        "lexicon": out_dir / "lexicon.tsv",
    }
    paths["texts"].write_text("\n".join(bundle.texts) + "\n", encoding="utf-8")
    paths["labels"].write_text("\n".join(str(int(label)) for label in bundle.labels) + "\n", encoding="utf-8")
    lexicon_lines = [f"{token}\t{tag}" for token, tag in bundle.tags.items()]
    paths["lexicon"].write_text("\n".join(lexicon_lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote fixture corpus ({len(bundle.texts)} texts) to {out_dir}")
    return paths
