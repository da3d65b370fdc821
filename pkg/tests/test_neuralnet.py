import numpy as np
import pytest

from virtdoc.dataset import FEATURE_SETS, fit_normalization, generate_synthetic_cohort
from virtdoc.errors import (
    DimensionMismatchError,
    FeatureMismatchError,
    InvalidConfigError,
    MissingFeatureError,
    NonFiniteLossError,
    SingleClassError,
)
from virtdoc.neuralnet import (
    Network,
    NetworkConfig,
    forward,
    forward_batch,
    gradient_check,
    init_network,
    predict_score,
    train,
)
from virtdoc.numerics import sigmoid


def _toy_separable(seed=1):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-1, 0.1, (10, 2)), rng.normal(1, 0.1, (10, 2))])
    y = np.array([0.0] * 10 + [1.0] * 10)
    return X, y


def _logistic_regression_separates(X, y, steps=2000, lr=0.5):
    """Independent oracle: plain gradient-descent logistic regression."""
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(steps):
        p = sigmoid(X @ w + b)
        w -= lr * (X.T @ (p - y)) / len(y)
        b -= lr * float(np.mean(p - y))
    return float(np.mean((sigmoid(X @ w + b) > 0.5) == (y == 1))) == 1.0


class TestInit:
    def test_shapes_and_zero_biases(self):
        net = init_network(NetworkConfig(input_dim=3, hidden_layers=(4,), seed=0))
        assert [W.shape for W in net.weights] == [(4, 3), (1, 4)]
        assert all(np.all(b == 0) for b in net.biases)

    def test_bound_scales_with_fan_in(self):
        net = init_network(NetworkConfig(input_dim=16, hidden_layers=(20, 20), seed=1))
        assert np.max(np.abs(net.weights[0])) <= 1 / 4
        assert np.max(np.abs(net.weights[1])) <= 1 / np.sqrt(20)

    def test_deterministic(self):
        cfg = NetworkConfig(input_dim=3, hidden_layers=(5, 5), seed=7)
        a, b = init_network(cfg), init_network(cfg)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))

    @pytest.mark.parametrize("kwargs", [
        {"hidden_layers": (20, 20, 20, 20)},
        {"hidden_layers": (21,)},
        {"hidden_layers": (0,)},
        {"hidden_layers": ()},
        {"epochs": 0},
        {"learning_rate": 0.0},
        {"momentum": 1.0},
        {"batch_size": 0},
    ])
    def test_invalid_config(self, kwargs):
        with pytest.raises(InvalidConfigError):
            init_network(NetworkConfig(input_dim=3, **kwargs))


class TestForward:
    def _zero_net(self, input_dim=3, hidden=(4,)):
        net = init_network(NetworkConfig(input_dim=input_dim, hidden_layers=hidden, seed=0))
        for W in net.weights:
            W[:] = 0.0
        return net

    def test_all_zero_parameters_give_half(self):
        net = self._zero_net()
        assert forward(net, np.array([3.0, -2.0, 0.5])) == 0.5

    def test_output_bias_saturation(self):
        net = self._zero_net()
        net.biases[-1][0] = 10.0
        assert forward(net, np.zeros(3)) == pytest.approx(sigmoid(10.0), rel=1e-9)

    def test_wrong_length(self):
        net = self._zero_net()
        with pytest.raises(DimensionMismatchError):
            forward(net, np.zeros(4))

    def test_open_interval_even_for_extreme_inputs(self):
        net = init_network(NetworkConfig(input_dim=2, hidden_layers=(3,), seed=2))
        net.biases[-1][0] = 500.0
        p = forward(net, np.array([1e12, -1e12]))
        assert 0.0 < p < 1.0
        net.biases[-1][0] = -500.0
        p = forward(net, np.array([1e12, -1e12]))
        assert 0.0 < p < 1.0


class TestTrain:
    def test_separates_toy_set(self):
        X, y = _toy_separable()
        assert _logistic_regression_separates(X, y)
        cfg = NetworkConfig(input_dim=2, hidden_layers=(4,), epochs=100, seed=3)
        trained, report = train(init_network(cfg), X, y, cfg)
        preds = forward_batch(trained, X)
        assert report.losses[-1] < 0.25
        assert np.mean((preds > 0.5) == (y == 1)) == 1.0

    def test_loss_decreases_on_average(self):
        X, y = _toy_separable()
        cfg = NetworkConfig(input_dim=2, hidden_layers=(4,), epochs=20, seed=3)
        _, report = train(init_network(cfg), X, y, cfg)
        assert report.losses[9] < report.losses[0]
        assert len(report.losses) == 20

    def test_deterministic(self):
        X, y = _toy_separable()
        cfg = NetworkConfig(input_dim=2, hidden_layers=(4,), epochs=10, seed=4)
        a, _ = train(init_network(cfg), X, y, cfg)
        b, _ = train(init_network(cfg), X, y, cfg)
        assert all(np.array_equal(x, z) for x, z in zip(a.weights, b.weights))
        assert all(np.array_equal(x, z) for x, z in zip(a.biases, b.biases))

    def test_input_network_untouched(self):
        X, y = _toy_separable()
        cfg = NetworkConfig(input_dim=2, hidden_layers=(4,), epochs=5, seed=4)
        net = init_network(cfg)
        before = [W.copy() for W in net.weights]
        train(net, X, y, cfg)
        assert all(np.array_equal(a, b) for a, b in zip(net.weights, before))

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        cfg = NetworkConfig(input_dim=2, hidden_layers=(2,), epochs=5, seed=0)
        with pytest.raises(SingleClassError):
            train(init_network(cfg), X, np.ones(10), cfg)

    def test_zero_epochs_rejected(self):
        X, y = _toy_separable()
        cfg = NetworkConfig(input_dim=2, hidden_layers=(4,), epochs=0, seed=0)
        with pytest.raises(InvalidConfigError):
            train(Network(weights=[np.zeros((4, 2)), np.zeros((1, 4))],
                          biases=[np.zeros(4), np.zeros(1)], config=cfg), X, y, cfg)

    def test_divergence_raises(self):
        # contradictory labels keep the gradient alive at saturation, so an
        # absurd learning rate drives the parameters past float range
        X, y = _toy_separable()
        y[0], y[10] = 1.0, 0.0
        cfg = NetworkConfig(input_dim=2, hidden_layers=(4,), epochs=50, batch_size=1,
                            learning_rate=1e307, momentum=0.9, seed=0)
        with pytest.raises(NonFiniteLossError):
            with np.errstate(over="ignore", invalid="ignore"):
                train(init_network(cfg), X, y, cfg)


class TestPredictScore:
    def test_means_map_to_half_with_zero_net(self):
        cohort = generate_synthetic_cohort(200, seed=1)
        stats = fit_normalization(cohort, FEATURE_SETS["basic"])
        net = init_network(NetworkConfig(input_dim=3, hidden_layers=(4,), seed=0),
                           norm_stats=stats)
        for W in net.weights:
            W[:] = 0.0
        record = cohort.records[0]
        assert predict_score(net, record) == 0.5  # zero weights ignore the inputs

    def test_missing_hba1c(self):
        cohort = generate_synthetic_cohort(200, seed=1, with_hba1c=True)
        stats = fit_normalization(cohort, FEATURE_SETS["with_hba1c"])
        net = init_network(NetworkConfig(input_dim=4, hidden_layers=(4,), seed=0),
                           feature_set="with_hba1c", norm_stats=stats)
        plain = generate_synthetic_cohort(200, seed=2).records[0]
        with pytest.raises(MissingFeatureError):
            predict_score(net, plain)

    def test_stats_required(self):
        net = init_network(NetworkConfig(input_dim=3, hidden_layers=(4,), seed=0))
        record = generate_synthetic_cohort(200, seed=1).records[0]
        with pytest.raises(FeatureMismatchError):
            predict_score(net, record)

    def test_scores_in_open_interval(self):
        cohort = generate_synthetic_cohort(200, seed=1)
        stats = fit_normalization(cohort, FEATURE_SETS["basic"])
        net = init_network(NetworkConfig(input_dim=3, hidden_layers=(6,), seed=3),
                           norm_stats=stats)
        for r in cohort.records[:50]:
            assert 0.0 < predict_score(net, r) < 1.0


class TestGradientCheck:
    def test_random_small_net(self):
        rng = np.random.default_rng(0)
        cfg = NetworkConfig(input_dim=3, hidden_layers=(4,), seed=1)
        net = init_network(cfg)
        err = gradient_check(net, (rng.normal(size=3), 1.0))
        assert err < 1e-4

    def test_many_seeds(self):
        rng = np.random.default_rng(99)
        for seed in range(10):
            depth = int(rng.integers(1, 4))
            hidden = tuple(int(rng.integers(1, 8)) for _ in range(depth))
            dim = int(rng.integers(2, 6))
            net = init_network(NetworkConfig(input_dim=dim, hidden_layers=hidden, seed=seed))
            for W in net.weights:
                W += rng.normal(0, 0.5, W.shape)
            err = gradient_check(net, (rng.normal(size=dim), float(rng.integers(0, 2))))
            assert err < 1e-4

    def test_near_stationary_point(self):
        # saturating output bias makes the prediction match the label almost
        # exactly; both gradient routes agree that there is nothing to learn
        cfg = NetworkConfig(input_dim=2, hidden_layers=(2,), seed=0)
        net = init_network(cfg)
        for W in net.weights:
            W[:] = 0.0
        net.biases[-1][0] = 30.0
        err = gradient_check(net, (np.array([0.3, -0.2]), 1.0))
        assert err < 1e-4
