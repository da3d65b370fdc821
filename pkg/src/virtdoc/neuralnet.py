"""From-scratch feed-forward network for binary risk prediction.

Hidden layers use tanh, the single output unit a sigmoid. Training is
mini-batch gradient descent with classical momentum on binary cross-entropy,
fully deterministic given (data, config, seed). A finite-difference gradient
oracle is built in so backprop can always be audited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Cohort, NormalizationStats, feature_matrix, feature_vector
from .errors import (
    DimensionMismatchError,
    FeatureMismatchError,
    InvalidConfigError,
    NonFiniteLossError,
    SingleClassError,
)
from .numerics import PROB_EPS, log1pexp, sigmoid

MAX_HIDDEN_LAYERS = 3
MAX_WIDTH = 20


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and optimizer settings."""

    input_dim: int
    hidden_layers: tuple[int, ...] = (10,)
    epochs: int = 100
    learning_rate: float = 0.1
    batch_size: int = 32
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(self.hidden_layers))

    def validate(self) -> None:
        if self.input_dim < 1:
            raise InvalidConfigError(f"input_dim must be >= 1, got {self.input_dim}")
        if not (1 <= len(self.hidden_layers) <= MAX_HIDDEN_LAYERS):
            raise InvalidConfigError(
                f"must have 1 to {MAX_HIDDEN_LAYERS} hidden layers, got {len(self.hidden_layers)}"
            )
        for w in self.hidden_layers:
            if not (1 <= w <= MAX_WIDTH):
                raise InvalidConfigError(
                    f"hidden width must be in [1, {MAX_WIDTH}], got {w}"
                )
        if self.epochs < 1:
            raise InvalidConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise InvalidConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise InvalidConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0.0 <= self.momentum < 1.0):
            raise InvalidConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.seed < 0:
            raise InvalidConfigError(f"seed must be non-negative, got {self.seed}")

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_layers": list(self.hidden_layers),
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "momentum": self.momentum,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(
            input_dim=int(d["input_dim"]),
            hidden_layers=tuple(int(w) for w in d["hidden_layers"]),
            epochs=int(d["epochs"]),
            learning_rate=float(d["learning_rate"]),
            batch_size=int(d["batch_size"]),
            momentum=float(d["momentum"]),
            seed=int(d["seed"]),
        )


@dataclass
class Network:
    """Layered weights/biases plus the preprocessing needed to score records.

    Weight matrices are (fan_out, fan_in); treat instances as immutable once
    trained and safe to share across threads.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    config: NetworkConfig
    feature_set: str = "basic"
    norm_stats: NormalizationStats | None = None


@dataclass(frozen=True)
class TrainingReport:
    """Per-epoch mean training loss, one entry per epoch."""

    losses: tuple[float, ...]
    epochs: int
    config: NetworkConfig


def init_network(
    config: NetworkConfig,
    feature_set: str = "basic",
    norm_stats: NormalizationStats | None = None,
) -> Network:
    """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero."""
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    dims = [config.input_dim, *config.hidden_layers, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(
        weights=weights, biases=biases, config=config,
        feature_set=feature_set, norm_stats=norm_stats,
    )


def _forward_pass(net: Network, X: np.ndarray):
    """Return (activations per layer incl. input, output logits)."""
    activations = [X]
    a = X
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        a = np.tanh(a @ W.T + b)
        activations.append(a)
    z = a @ net.weights[-1].T + net.biases[-1]
    return activations, z[:, 0]


def forward(net: Network, features: np.ndarray) -> float:
    """Score one normalized feature vector; output strictly inside (0, 1)."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 1 or x.shape[0] != net.config.input_dim:
        raise DimensionMismatchError(
            f"expected feature vector of length {net.config.input_dim}, got shape {x.shape}"
        )
    _, z = _forward_pass(net, x[None, :])
    return float(np.clip(sigmoid(z[0]), PROB_EPS, 1.0 - PROB_EPS))


def forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Vectorized forward over rows of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.config.input_dim:
        raise DimensionMismatchError(
            f"expected (n, {net.config.input_dim}) inputs, got shape {X.shape}"
        )
    _, z = _forward_pass(net, X)
    return np.clip(sigmoid(z), PROB_EPS, 1.0 - PROB_EPS)


def bce_from_logits(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample binary cross-entropy, stable in the logit."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    return log1pexp(z) - z * y


def _backprop(net: Network, X: np.ndarray, y: np.ndarray):
    """Mean-loss gradients for one batch. Returns (loss_sum, dWs, dbs)."""
    activations, z = _forward_pass(net, X)
    n = X.shape[0]
    loss_sum = float(np.sum(bce_from_logits(z, y)))
    delta = ((sigmoid(z) - y) / n)[:, None]  # (n, 1)
    dWs = [np.empty(0)] * len(net.weights)
    dbs = [np.empty(0)] * len(net.biases)
    for layer in range(len(net.weights) - 1, -1, -1):
        dWs[layer] = delta.T @ activations[layer]
        dbs[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer]) * (1.0 - activations[layer] ** 2)
    return loss_sum, dWs, dbs


def train(
    net: Network, X: np.ndarray, y: np.ndarray, config: NetworkConfig | None = None
) -> tuple[Network, TrainingReport]:
    """Mini-batch SGD with momentum on binary cross-entropy.

    Shuffle order is derived from the config seed, so (data, config, seed)
    fully determines the returned parameters. The input network is left
    untouched.
    """
    config = config or net.config
    config.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != config.input_dim:
        raise DimensionMismatchError(
            f"expected (n, {config.input_dim}) training inputs, got shape {X.shape}"
        )
    if len(set(y.tolist())) < 2:
        raise SingleClassError("training data must contain both classes")

    trained = Network(
        weights=[W.copy() for W in net.weights],
        biases=[b.copy() for b in net.biases],
        config=config,
        feature_set=net.feature_set,
        norm_stats=net.norm_stats,
    )
    vel_W = [np.zeros_like(W) for W in trained.weights]
    vel_b = [np.zeros_like(b) for b in trained.biases]
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    n = X.shape[0]
    losses = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        loss_total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss_sum, dWs, dbs = _backprop(trained, X[idx], y[idx])
            loss_total += loss_sum
            for layer in range(len(trained.weights)):
                vel_W[layer] = config.momentum * vel_W[layer] - config.learning_rate * dWs[layer]
                vel_b[layer] = config.momentum * vel_b[layer] - config.learning_rate * dbs[layer]
                trained.weights[layer] += vel_W[layer]
                trained.biases[layer] += vel_b[layer]
        epoch_loss = loss_total / n
        if not np.isfinite(epoch_loss):
            raise NonFiniteLossError(
                "training loss diverged; lower the learning rate or momentum"
            )
        losses.append(epoch_loss)
    return trained, TrainingReport(losses=tuple(losses), epochs=config.epochs, config=config)


def train_on_cohort(
    net: Network, cohort: Cohort, config: NetworkConfig | None = None
) -> tuple[Network, TrainingReport]:
    """Train on a cohort using the network's attached normalization stats."""
    if net.norm_stats is None:
        raise FeatureMismatchError("network has no normalization stats attached")
    X, y = feature_matrix(cohort, net.norm_stats)
    return train(net, X, y, config)


def predict_score(net: Network, record) -> float:
    """Raw model score for one patient record (normalize, then forward)."""
    if net.norm_stats is None:
        raise FeatureMismatchError("network has no normalization stats attached")
    return forward(net, feature_vector(record, net.norm_stats))


def predict_scores(net: Network, cohort: Cohort) -> np.ndarray:
    """Raw scores for a whole cohort."""
    if net.norm_stats is None:
        raise FeatureMismatchError("network has no normalization stats attached")
    X, _ = feature_matrix(cohort, net.norm_stats)
    return forward_batch(net, X)


def _loss_at(net: Network, x: np.ndarray, y: float) -> float:
    _, z = _forward_pass(net, x[None, :])
    return float(bce_from_logits(z, np.array([y]))[0])


def gradient_check(net: Network, sample: tuple[np.ndarray, float], step: float = 1e-5) -> float:
    """Max relative error of backprop vs central finite differences.

    Perturbs every parameter; the relative error is
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    x = np.asarray(sample[0], dtype=float)
    y = float(sample[1])
    _, dWs, dbs = _backprop(net, x[None, :], np.array([y]))
    worst = 0.0
    for params, grads in ((net.weights, dWs), (net.biases, dbs)):
        for P, G in zip(params, grads):
            it = np.nditer(P, flags=["multi_index"])
            while not it.finished:
                ij = it.multi_index
                orig = P[ij]
                P[ij] = orig + step
                hi = _loss_at(net, x, y)
                P[ij] = orig - step
                lo = _loss_at(net, x, y)
                P[ij] = orig
                numeric = (hi - lo) / (2.0 * step)
                analytic = float(G[ij])
                err = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
                worst = max(worst, err)
                it.iternext()
    return worst
