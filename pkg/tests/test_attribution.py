import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_mlp
from defectlens.attribution import (
    IgConfig,
    ImportanceReport,
    Method,
    ShapConfig,
    compare_rankings,
    exact_shapley,
    explain_rows,
    global_importance,
    integrated_gradients,
    kernel_shap,
)
from defectlens.attribution.shap import shapley_kernel_weight
from defectlens.data import ClassWeights, generate_synthetic_linear
from defectlens.errors import (
    ConfigError,
    EmptyBackground,
    EmptyInput,
    InconsistentWidth,
    NonDifferentiableModel,
    SchemaMismatch,
    TooManyFeatures,
    WidthMismatch,
)
from defectlens.models import LogisticModel, TrainConfig, fit_random_forest
from oracles import kendall_tau_pairs, shapley_permutations


class AffineModel:
    """F(x) = w.x + c with no squashing."""

    def __init__(self, w, c=0.0):
        self.w = np.asarray(w, dtype=float)
        self.c = c
        self.n_features = self.w.shape[0]

    def predict_proba(self, X):
        return np.asarray(X, dtype=float) @ self.w + self.c

    def input_gradient(self, X, output="probability"):
        X = np.atleast_2d(X)
        return np.tile(self.w, (X.shape[0], 1))


class SigmoidOfFirst:
    n_features = 1

    def predict_proba(self, X):
        X = np.atleast_2d(X)
        return 1 / (1 + np.exp(-X[:, 0]))

    def input_gradient(self, X, output="probability"):
        s = self.predict_proba(X)
        return (s * (1 - s))[:, None]


class TestIntegratedGradients:
    def test_constant_model(self):
        m = AffineModel([0.0, 0.0, 0.0], 0.7)
        a = integrated_gradients(m, np.array([1.0, -2.0, 3.0]))
        np.testing.assert_array_equal(a.values, 0.0)
        assert a.completeness_gap <= 1e-15
        assert a.method is Method.INTEGRATED_GRADIENTS

    @pytest.mark.parametrize("m", [1, 2, 7, 64])
    def test_linear_exact(self, m):
        a = integrated_gradients(AffineModel([2.0, -1.0]), np.array([1.0, 1.0]), IgConfig(steps=m))
        np.testing.assert_allclose(a.values, [2.0, -1.0], rtol=0, atol=1e-15)

    def test_single_feature_sigmoid(self):
        a = integrated_gradients(SigmoidOfFirst(), np.array([2.0]), IgConfig(steps=4096))
        assert a.values[0] == pytest.approx(0.3807970779778823, abs=1e-7)

    def test_custom_baseline(self):
        a = integrated_gradients(AffineModel([1.0, 3.0]), np.array([2.0, 2.0]),
                                 IgConfig(steps=3, baseline=np.array([1.0, 0.0])))
        np.testing.assert_allclose(a.values, [1.0, 6.0], atol=1e-14)
        np.testing.assert_array_equal(a.baseline, [1.0, 0.0])

    def test_rejects_forest(self):
        d = generate_synthetic_linear(60, [1.0, 1.0], 0, 0, seed=0)
        f = fit_random_forest(d.features, d.labels, ClassWeights.unit(), TrainConfig(n_trees=3))
        with pytest.raises(NonDifferentiableModel):
            integrated_gradients(f, np.zeros(2))

    def test_width_and_config_errors(self):
        with pytest.raises(WidthMismatch):
            integrated_gradients(AffineModel([1.0, 2.0]), np.zeros(3))
        with pytest.raises(ConfigError):
            IgConfig(steps=0)

    def test_logit_option(self):
        m = LogisticModel(np.array([1.0, -2.0]), 0.3)
        a = integrated_gradients(m, np.array([0.5, 0.5]), IgConfig(steps=1, output="logit"))
        np.testing.assert_allclose(a.values, [0.5, -1.0], atol=1e-15)

    def test_completeness_on_random_mlps(self):
        rng = np.random.default_rng(0)
        for seed in range(20):
            m = random_mlp(7, seed)
            x = rng.normal(size=7)
            a = integrated_gradients(m, x, IgConfig(steps=512))
            assert a.completeness_gap <= 1e-3 * max(1.0, abs(a.prediction - a.reference_value))

    def test_gap_shrinks_with_more_steps(self):
        rng = np.random.default_rng(1)
        coarse, fine = [], []
        for seed in range(100):
            m = random_mlp(5, 500 + seed)
            x = rng.normal(size=5) * 2
            coarse.append(integrated_gradients(m, x, IgConfig(steps=32)).completeness_gap)
            fine.append(integrated_gradients(m, x, IgConfig(steps=512)).completeness_gap)
        assert np.mean(fine) <= np.mean(coarse)


class TestKernelShap:
    def test_linear_single_background(self):
        w = np.array([1.5, -2.0, 0.5, 3.0])
        x = np.array([1.0, 2.0, -1.0, 0.5])
        b = np.array([0.2, -0.3, 0.0, 1.0])
        a = kernel_shap(AffineModel(w, 0.1).predict_proba, x, ShapConfig(b))
        np.testing.assert_allclose(a.values, w * (x - b), rtol=0, atol=1e-12)

    def test_additive_symmetric(self):
        a = kernel_shap(lambda R: R[:, 0] + R[:, 1], np.array([1.0, 1.0]), ShapConfig(np.zeros((1, 2))))
        np.testing.assert_allclose(a.values, [1.0, 1.0], atol=1e-12)

    def test_product_game(self):
        a = kernel_shap(lambda R: R[:, 0] * R[:, 1], np.array([1.0, 1.0]), ShapConfig(np.zeros((1, 2))))
        np.testing.assert_allclose(a.values, [0.5, 0.5], atol=1e-12)

    def test_kernel_weight(self):
        assert shapley_kernel_weight(4, 1) == pytest.approx(3 / (4 * 1 * 3))
        assert shapley_kernel_weight(4, 2) == pytest.approx(3 / (6 * 2 * 2))

    def test_errors(self):
        with pytest.raises(EmptyBackground):
            ShapConfig(np.empty((0, 3)))
        with pytest.raises(WidthMismatch):
            kernel_shap(lambda R: R[:, 0], np.zeros(3), ShapConfig(np.zeros((2, 4))))
        with pytest.raises(ConfigError):
            ShapConfig(np.zeros((1, 2)), exact_threshold=15)

    def test_sampled_efficiency_by_construction(self):
        rng = np.random.default_rng(4)
        m = random_mlp(12, 4)
        x = rng.normal(size=12)
        a = kernel_shap(m.predict_proba, x, ShapConfig(rng.normal(size=(10, 12)), 256, exact_threshold=0, seed=3))
        assert a.completeness_gap <= 4 * np.finfo(float).eps * max(1.0, abs(a.prediction))

    def test_sampled_deterministic_per_seed(self):
        rng = np.random.default_rng(5)
        m = random_mlp(11, 5)
        x = rng.normal(size=11)
        cfg = ShapConfig(rng.normal(size=(5, 11)), 300, exact_threshold=0, seed=8)
        np.testing.assert_array_equal(kernel_shap(m.predict_proba, x, cfg).values,
                                      kernel_shap(m.predict_proba, x, cfg).values)

    def test_single_feature(self):
        a = kernel_shap(lambda R: 2 * R[:, 0], np.array([3.0]), ShapConfig(np.array([[1.0]])))
        assert a.values.tolist() == [4.0]


class TestExactShapley:
    def test_matches_permutation_oracle(self):
        rng = np.random.default_rng(7)
        m = random_mlp(5, 7)
        x = rng.normal(size=5)
        bg = rng.normal(size=(4, 5))
        a = exact_shapley(m.predict_proba, x, bg)
        np.testing.assert_allclose(a.values, shapley_permutations(m.predict_proba, x, bg), rtol=0, atol=1e-13)

    def test_dummy_feature(self):
        rng = np.random.default_rng(8)
        x, bg = rng.normal(size=4), rng.normal(size=(3, 4))
        a = exact_shapley(lambda R: np.sin(R[:, 0]) * R[:, 2] + R[:, 3], x, bg)
        assert a.values[1] == 0.0

    def test_instance_equal_to_background(self):
        m = random_mlp(4, 2)
        x = np.array([0.3, -1.0, 2.0, 0.1])
        a = exact_shapley(m.predict_proba, x, x[None, :])
        np.testing.assert_array_equal(a.values, 0.0)

    def test_too_many_features(self):
        with pytest.raises(TooManyFeatures):
            exact_shapley(lambda R: R[:, 0], np.zeros(13), np.zeros((1, 13)))

    def test_kernel_exact_mode_on_six_feature_mlp(self):
        rng = np.random.default_rng(9)
        m = random_mlp(6, 9)
        x, bg = rng.normal(size=6), rng.normal(size=(8, 6))
        k = kernel_shap(m.predict_proba, x, ShapConfig(bg))
        e = exact_shapley(m.predict_proba, x, bg)
        assert np.max(np.abs(k.values - e.values)) <= 1e-8


class TestImportance:
    def test_normalization_example(self):
        r = ImportanceReport.from_raw(["a", "b", "c"], [0.2, 0.8, 0.4])
        np.testing.assert_allclose(r.normalized_scores, [0.25, 1.0, 0.5])
        assert r.ranking == ("b", "c", "a")

    def test_all_equal(self):
        r = ImportanceReport.from_raw(["a", "b", "c"], [0.3, 0.3, 0.3])
        np.testing.assert_array_equal(r.normalized_scores, 1.0)
        assert r.ranking == ("a", "b", "c")

    def test_absolute_aggregation(self):
        r = global_importance([np.array([-3.0, 1.0])], ["a", "b"])
        np.testing.assert_allclose(r.raw_scores, [3.0, 1.0])
        np.testing.assert_allclose(r.normalized_scores, [1.0, 1 / 3])

    def test_all_zero(self):
        r = global_importance([np.zeros(3), np.zeros(3)], ["a", "b", "c"])
        np.testing.assert_array_equal(r.normalized_scores, 0.0)

    def test_errors(self):
        with pytest.raises(EmptyInput):
            global_importance([], ["a"])
        with pytest.raises(InconsistentWidth):
            global_importance([np.zeros(2), np.zeros(3)], ["a", "b"])

    def test_csv_is_rank_ordered(self):
        r = ImportanceReport.from_raw(["a", "b", "c"], [0.1, 0.9, 0.5])
        rows = list(csv.reader(io.StringIO(r.to_csv())))
        assert rows[0] == ["feature", "normalized_score"]
        assert [row[0] for row in rows[1:]] == ["b", "c", "a"]
        assert float(rows[2][1]) == pytest.approx(0.5 / 0.9)

    def test_json_round_trip(self):
        r = ImportanceReport.from_raw(["a", "b"], [0.1, 0.9], "kernel_shap")
        r2 = ImportanceReport.from_dict(r.to_dict())
        assert r2.ranking == r.ranking and r2.method == "kernel_shap"


class TestCompareRankings:
    def _rep(self, order):
        names = sorted(order)
        raw = [len(order) - order.index(n) for n in names]
        return ImportanceReport.from_raw(names, raw)

    def test_identical(self):
        a = self._rep(["f1", "f2", "f3", "f4"])
        c = compare_rankings(a, a, 3)
        assert (c.top_k_overlap, c.kendall_tau) == (3, 1.0)

    def test_reversed(self):
        c = compare_rankings(self._rep(["f1", "f2", "f3"]), self._rep(["f3", "f2", "f1"]), 1)
        assert c.kendall_tau == -1.0 and c.top_k_overlap == 0

    def test_worked_example(self):
        a, b = self._rep(["f1", "f2", "f3", "f4"]), self._rep(["f2", "f1", "f4", "f3"])
        c = compare_rankings(a, b, 2)
        assert c.top_k_overlap == 2
        assert c.kendall_tau == pytest.approx(1 / 3, abs=1e-15)
        assert c.common_top_k == ("f1", "f2")

    def test_schema_mismatch(self):
        with pytest.raises(SchemaMismatch):
            compare_rankings(self._rep(["a", "b"]), self._rep(["a", "c"]), 1)

    def test_disjoint_allowed(self):
        c = compare_rankings(self._rep(["a", "b"]), self._rep(["c", "d"]), 2, allow_disjoint=True)
        assert c.kendall_tau is None and c.common_top_k == ()
        assert c.to_dict()["schema_relation"] == "disjoint-schema"

    @settings(max_examples=60, deadline=None)
    @given(st.permutations(list(range(7))), st.permutations(list(range(7))))
    def test_tau_matches_pair_count(self, pa, pb):
        oa = [f"f{i}" for i in pa]
        ob = [f"f{i}" for i in pb]
        c = compare_rankings(self._rep(oa), self._rep(ob), 3)
        assert c.kendall_tau == pytest.approx(kendall_tau_pairs(oa, ob), abs=1e-12)
        assert c.top_k_overlap == len(set(oa[:3]) & set(ob[:3]))


def test_explain_rows_keeps_order_and_seeds_per_row():
    rng = np.random.default_rng(0)
    m = random_mlp(11, 0)
    X = rng.normal(size=(4, 11))
    cfg = ShapConfig(rng.normal(size=(5, 11)), 200, exact_threshold=0, seed=1)
    all_rows = explain_rows(m, X, "shap", shap=cfg)
    last_alone = explain_rows(m, X, "shap", shap=cfg)[3]
    np.testing.assert_array_equal(all_rows[3].values, last_alone.values)
    ig = explain_rows(m, X, "ig", ig=IgConfig(steps=16))
    assert [a.instance.tolist() for a in ig] == X.tolist()
    assert math.isfinite(sum(a.completeness_gap for a in ig))
