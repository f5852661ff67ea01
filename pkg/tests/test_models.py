import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_mlp
from defectlens import kernels
from defectlens.data import ClassWeights, compute_class_weights, generate_synthetic_linear, stratified_split, synthetic_schema
from defectlens.errors import ConfigError, NonDifferentiableModel, SingleClass, WidthMismatch
from defectlens.metrics import auc
from defectlens.models import (
    LogisticModel,
    TrainConfig,
    default_config,
    fit_logistic,
    fit_mlp,
    fit_random_forest,
    init_mlp,
    input_gradient,
    load_model,
    predict_proba,
    save_model,
)
from defectlens.models.forest import ForestModel, Tree
from defectlens.models.persistence import model_from_dict, model_to_dict
from oracles import central_difference, tree_predict_recursive


@pytest.fixture(scope="module")
def linear_split():
    d = generate_synthetic_linear(3000, [3.0, 0.0, 0.0], 0.0, 0.0, seed=21)
    return stratified_split(d, 0.2, 1)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(validation_fraction=0.6)
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"learning_rat": 0.1})
    assert TrainConfig.from_dict({"seed": 4}).seed == 4


class TestLogistic:
    def test_recovers_informative_feature(self, linear_split):
        train, test = linear_split
        m = fit_logistic(train.features, train.labels, compute_class_weights(train.labels))
        assert abs(m.weights[0]) > 10 * max(abs(m.weights[1]), abs(m.weights[2]))
        # Bernoulli labels cap the attainable AUC; score against the true logit
        bayes = auc(test.features[:, 0], test.labels)
        assert auc(m.predict_proba(test.features), test.labels) >= bayes - 0.01

    def test_high_auc_on_strong_signal(self):
        d = generate_synthetic_linear(3000, [8.0, 0.0, 0.0], 0.0, 0.0, seed=21)
        train, test = stratified_split(d, 0.2, 1)
        m = fit_logistic(train.features, train.labels, compute_class_weights(train.labels))
        assert auc(m.predict_proba(test.features), test.labels) >= 0.95

    def test_flipped_labels_negate_weights(self, linear_split):
        train, _ = linear_split
        y = train.labels
        a = fit_logistic(train.features, y, compute_class_weights(y))
        b = fit_logistic(train.features, 1 - y, compute_class_weights(1 - y))
        np.testing.assert_allclose(b.weights, -a.weights, rtol=1e-9, atol=1e-12)
        assert b.bias == pytest.approx(-a.bias, abs=1e-9)

    def test_zero_column_weight_stays_zero(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(300, 3))
        X[:, 1] = 0.0
        y = (X[:, 0] > 0).astype(int)
        m = fit_logistic(X, y, ClassWeights.unit())
        assert abs(m.weights[1]) <= 1e-12

    def test_loss_non_increasing(self, linear_split):
        train, _ = linear_split
        cfg = default_config("logistic")
        m = fit_logistic(train.features, train.labels, compute_class_weights(train.labels), cfg)
        h = np.array(m.loss_history)
        assert np.all(np.diff(h) <= 1e-12)

    def test_loss_non_increasing_small_step(self, linear_split):
        train, _ = linear_split
        cfg = TrainConfig(learning_rate=0.01, max_epochs=300)
        m = fit_logistic(train.features, train.labels, ClassWeights.unit(), cfg)
        assert np.all(np.diff(m.loss_history) <= 1e-12)

    def test_zero_weights_predict_half(self):
        m = LogisticModel(np.zeros(4), 0.0)
        np.testing.assert_array_equal(m.predict_proba(np.random.default_rng(0).normal(size=(5, 4))), 0.5)

    def test_gradient_closed_form(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            m = LogisticModel(rng.normal(size=6), float(rng.normal()))
            x = rng.normal(size=6)
            s = 1 / (1 + np.exp(-(x @ m.weights + m.bias)))
            assert np.max(np.abs(m.input_gradient(x) - s * (1 - s) * m.weights)) <= 1e-12

    def test_single_class(self):
        with pytest.raises(SingleClass):
            fit_logistic(np.ones((4, 2)), [1, 1, 1, 1], ClassWeights.unit())

    def test_width_mismatch(self):
        with pytest.raises(WidthMismatch):
            LogisticModel(np.zeros(3), 0.0).predict_proba(np.ones((2, 4)))


@pytest.fixture(scope="module")
def forest_and_data():
    d = generate_synthetic_linear(400, [2.0, -1.0, 0.5, 0.0], 0.0, 0.0, seed=8)
    cw = compute_class_weights(d.labels)
    return fit_random_forest(d.features, d.labels, cw, TrainConfig(seed=3, n_trees=25)), d


class TestForest:

    def test_interpolates_training_data(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(300, 5))
        y = (X[:, 0] + X[:, 1] > 0).astype(int)
        f = fit_random_forest(X, y, compute_class_weights(y), TrainConfig(seed=1))
        assert np.mean((f.predict_proba(X) >= 0.5) == y) >= 0.99

    def test_mean_of_tree_traversals(self, forest_and_data):
        f, d = forest_and_data
        X = d.features[:40]
        expected = [np.mean([tree_predict_recursive(t, row) for t in f.trees]) for row in X]
        np.testing.assert_allclose(f.predict_proba(X), expected, rtol=0, atol=1e-15)

    def test_structure(self, forest_and_data):
        f, d = forest_and_data
        assert len(f.trees) == 25
        for t in f.trees:
            assert np.all(t.feature < d.p)
            assert np.all((t.value >= 0) & (t.value <= 1))

    def test_default_hundred_trees(self):
        assert default_config("forest").n_trees == 100

    def test_deterministic(self, forest_and_data):
        f, d = forest_and_data
        g = fit_random_forest(d.features, d.labels, compute_class_weights(d.labels), TrainConfig(seed=3, n_trees=25))
        for a, b in zip(f.trees, g.trees):
            np.testing.assert_array_equal(a.feature, b.feature)
            np.testing.assert_array_equal(a.threshold, b.threshold)

    def test_parallel_equals_serial(self, forest_and_data):
        f, d = forest_and_data
        g = fit_random_forest(d.features, d.labels, compute_class_weights(d.labels),
                              TrainConfig(seed=3, n_trees=25), n_jobs=4)
        np.testing.assert_array_equal(f.predict_proba(d.features), g.predict_proba(d.features))

    def test_backends_agree(self, forest_and_data, monkeypatch):
        f, d = forest_and_data
        monkeypatch.setattr(kernels, "_impl", kernels._numpy)
        g = fit_random_forest(d.features, d.labels, compute_class_weights(d.labels), TrainConfig(seed=3, n_trees=25))
        np.testing.assert_array_equal(f.predict_proba(d.features), g.predict_proba(d.features))

    def test_single_instance_per_class(self):
        X = np.array([[0.0], [1.0]])
        f = fit_random_forest(X, [0, 1], ClassWeights.unit(), TrainConfig(seed=0, n_trees=10))
        for t in f.trees:
            assert t.n_nodes in (1, 3)
        grown = [t for t in f.trees if t.n_nodes == 3]
        assert grown and all(t.value[1:].tolist() == [0.0, 1.0] for t in grown)

    def test_pure_positive_leaves(self):
        leaf = Tree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), np.ones(1))
        f = ForestModel([leaf] * 5, [0] * 5, 3)
        np.testing.assert_array_equal(f.predict_proba(np.zeros((4, 3))), 1.0)

    def test_no_input_gradient(self, forest_and_data):
        with pytest.raises(NonDifferentiableModel):
            input_gradient(forest_and_data[0], np.zeros(4))


class TestMlp:
    def test_architecture(self):
        m = init_mlp(13, 0)
        assert m.layer_sizes == [13, 64, 32, 20, 10, 1]
        assert len(m.weights) == 5

    def test_memorizes_small_dataset(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(32, 5))
        y = np.r_[np.zeros(16, int), np.ones(16, int)]
        rng.shuffle(y)
        cfg = TrainConfig(seed=0, dropout_rate=0.0, max_epochs=2000, validation_fraction=0.0)
        m = fit_mlp(X, y, compute_class_weights(y), cfg)
        assert np.mean((m.predict_proba(X) >= 0.5) == y) == 1.0

    def test_deterministic(self):
        d = generate_synthetic_linear(400, [2.0, -1.0, 0.0], 0.0, 0.0, seed=3)
        cfg = TrainConfig(seed=7, max_epochs=15)
        a = fit_mlp(d.features, d.labels, compute_class_weights(d.labels), cfg)
        b = fit_mlp(d.features, d.labels, compute_class_weights(d.labels), cfg)
        np.testing.assert_array_equal(a.predict_proba(d.features), b.predict_proba(d.features))
        np.testing.assert_array_equal(a.predict_proba(d.features), a.predict_proba(d.features))

    @pytest.mark.slow
    @pytest.mark.parametrize("rate", [0.0, 0.2])
    def test_dropout_rates_learn_linear_task(self, rate):
        d = generate_synthetic_linear(4000, [6.0, -4.0, 3.0, 0.0, 0.0], 0.0, 0.0, seed=12)
        train, test = stratified_split(d, 0.2, 0)
        m = fit_mlp(train.features, train.labels, compute_class_weights(train.labels),
                    TrainConfig(seed=1, dropout_rate=rate))
        assert auc(m.predict_proba(test.features), test.labels) >= 0.9

    def test_constant_network_zero_gradient(self):
        m = init_mlp(4, 0)
        for W in m.weights:
            W[:] = 0.0
        np.testing.assert_array_equal(m.input_gradient(np.ones(4)), 0.0)
        assert m.predict_proba(np.ones(4)) == 0.5

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        checked = 0
        for seed in range(30):
            m = random_mlp(6, seed)
            x = rng.normal(size=6)
            if min(np.min(np.abs(z)) for z in m.hidden_preactivations(x)) < 1e-3:
                continue
            g = m.input_gradient(x)
            fd = central_difference(lambda v: m.predict_proba(v), x, 1e-4)
            assert np.linalg.norm(g - fd) <= 1e-4 * max(np.linalg.norm(fd), 1e-12)
            checked += 1
        assert checked >= 20

    def test_logit_gradient(self):
        m = random_mlp(5, 1)
        x = np.random.default_rng(1).normal(size=5)
        fd = central_difference(lambda v: m.decision_function(v), x, 1e-5)
        np.testing.assert_allclose(m.input_gradient(x, output="logit"), fd, rtol=1e-6, atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 4, elements=st.floats(-1e6, 1e6)))
    def test_output_strictly_inside_unit_interval(self, x):
        m = random_mlp(4, 3, bias_scale=5.0)
        p = m.predict_proba(x)
        assert 0.0 < p < 1.0

    def test_single_class(self):
        with pytest.raises(SingleClass):
            fit_mlp(np.ones((4, 2)), [0, 0, 0, 0], ClassWeights.unit())


class TestPersistence:
    def _round_trip(self, model, p, tmp_path):
        schema = synthetic_schema(p)
        path = save_model(tmp_path / "m.json", model, schema, TrainConfig())
        loaded, s2, cfg, std = load_model(path)
        assert s2.feature_names == schema.feature_names and std is None
        X = np.random.default_rng(0).normal(size=(50, p))
        np.testing.assert_allclose(loaded.predict_proba(X), model.predict_proba(X), rtol=0, atol=1e-12)
        doc = json.loads(path.read_text())
        assert doc["kind"] == model.kind and doc["schema"]["fingerprint"] == schema.fingerprint

    def test_logistic(self, tmp_path):
        self._round_trip(LogisticModel(np.array([0.1, -2.0, 3.3]), 0.25), 3, tmp_path)

    def test_mlp(self, tmp_path):
        self._round_trip(random_mlp(3, 0), 3, tmp_path)

    def test_forest(self, tmp_path):
        d = generate_synthetic_linear(200, [1.0, 1.0, 0.0], 0.0, 0.0, seed=0)
        f = fit_random_forest(d.features, d.labels, ClassWeights.unit(), TrainConfig(n_trees=5))
        self._round_trip(f, 3, tmp_path)

    def test_dict_round_trip_keeps_config(self):
        m = LogisticModel(np.array([1.0, 2.0]), 0.0)
        cfg = TrainConfig(seed=9, learning_rate=0.3)
        _, _, cfg2, _ = model_from_dict(model_to_dict(m, synthetic_schema(2), cfg))
        assert cfg2 == cfg


def test_predict_proba_dispatch():
    m = LogisticModel(np.zeros(2), 0.0)
    assert predict_proba(m, np.zeros((3, 2))).tolist() == [0.5, 0.5, 0.5]
