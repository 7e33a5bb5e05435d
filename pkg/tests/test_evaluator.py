"""
评估与交叉验证测试
"""
import logging

import numpy as np
import pytest

from conftest import make_random_table
from controllers.evaluator import (
    assign_folds,
    bench_latency,
    center_series,
    correlation_profile,
    error_by_slip,
    holdout_cv,
    input_selection_study,
    interval_coverage,
    kfold_cv,
    mean_profiles_by_slip,
    metrics_report,
    nrmse,
    peak_magnitudes,
    pearson,
    resolution_study,
)
from controllers.regressor import condition
from models.features import FeatureTable
from models.gp_model import Hyperparameters, PredictionBatch
from utils.errors import (
    InsufficientDataError,
    InvalidConfigError,
    InvalidInputError,
    UndefinedMetricError,
)


def _batch(mean, variance=None, noise=0.0) -> PredictionBatch:
    mean = np.asarray(mean, dtype=float)
    variance = np.zeros_like(mean) if variance is None else np.asarray(variance, dtype=float)
    return PredictionBatch.from_moments(mean, variance, noise)


def _clean_table(n: int = 30, seed: int = 0) -> FeatureTable:
    """Ac_y 网格几乎无噪声地决定侧偏角"""
    rng = np.random.default_rng(seed)
    slip = rng.uniform(-8.0, 8.0, size=n)
    grids = rng.normal(size=(n, 4, 3))
    grids[:, :, 1] = -0.5 * slip[:, None] + 0.05 * rng.normal(size=(n, 4))
    labels = np.column_stack([-400.0 * slip, np.full(n, 4160.0), slip, np.full(n, 60.0)])
    return FeatureTable(np.arange(n), grids, labels, step=0.5, half_span=1.0)


class TestMetrics:
    """测试精度指标"""

    def test_nrmse_perfect(self):
        assert nrmse([1.0, -2.0, 3.0], [1.0, -2.0, 3.0]) == 0.0

    def test_nrmse_example(self):
        assert nrmse([0.0, 10.0], [0.0, 0.0]) == pytest.approx(70.71, abs=0.01)

    def test_nrmse_scale_invariant(self):
        y, yhat = np.array([1.0, -3.0, 2.0]), np.array([1.5, -2.0, 2.5])
        assert nrmse(1000 * y, 1000 * yhat) == pytest.approx(nrmse(y, yhat), rel=1e-12)

    def test_nrmse_all_zero(self):
        with pytest.raises(UndefinedMetricError):
            nrmse([0.0, 0.0], [1.0, 2.0])

    def test_nrmse_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            nrmse([1.0, 2.0], [1.0])

    def test_pearson(self):
        assert pearson([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)
        assert pearson([1.0, 2.0, 3.0], [-1.0, -2.0, -3.0]) == pytest.approx(-1.0)
        assert pearson([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]) == pytest.approx(0.98198, abs=1e-5)

    def test_pearson_constant(self):
        with pytest.raises(UndefinedMetricError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_pearson_too_short(self):
        with pytest.raises(InsufficientDataError):
            pearson([1.0], [1.0])

    def test_coverage_perfect(self):
        """完美预测且方差非零时覆盖率为 1"""
        truth = np.array([1.0, -2.0, 5.0])
        assert interval_coverage(_batch(truth, [1.0, 1.0, 1.0]), truth) == 1.0

    def test_coverage_zero_width(self):
        """零宽度区间与带噪声的真值"""
        rng = np.random.default_rng(0)
        truth = rng.normal(size=50)
        assert interval_coverage(_batch(truth + rng.normal(size=50)), truth) == 0.0

    def test_coverage_level(self):
        truth = np.zeros(4)
        batch = _batch([1.0, 1.5, 2.5, 3.5], variance=np.ones(4))
        assert interval_coverage(batch, truth, 0.95) == 0.5
        with pytest.raises(InvalidConfigError):
            interval_coverage(batch, truth, 1.0)

    def test_report(self):
        truth = np.array([0.0, 10.0, -10.0, 5.0])
        batch = _batch([0.0, 9.0, -10.0, 6.0], variance=np.full(4, 4.0))
        report = metrics_report(truth, batch)
        assert report.n == 4
        assert report.mean_abs_err == pytest.approx(0.5)
        assert report.nrmse == pytest.approx(100 * np.sqrt(0.5) / 10)
        assert report.coverage_95 == 1.0
        assert set(report.as_dict()) == {
            "nrmse_pct",
            "pearson_r",
            "mean_abs_err_N",
            "coverage_95",
            "n",
            "level",
        }

    def test_report_level(self):
        """覆盖率按给定置信水平计算"""
        truth = np.array([0.0, 10.0, -10.0, 5.0])
        batch = _batch([0.0, 9.0, -10.0, 6.0], variance=np.full(4, 4.0))
        report = metrics_report(truth, batch, level=0.2)
        assert report.level == 0.2
        assert report.coverage_95 == 0.5


class TestErrorBySlip:
    """测试侧偏角分箱"""

    def test_bins(self):
        slip = np.array([-7.5, -7.2, 0.5, 8.0, 9.0])
        truth = np.zeros(5)
        bins = error_by_slip(_batch([1.0, 3.0, 2.0, 4.0, 100.0]), truth, slip)
        assert [(b.lower, b.upper) for b in bins] == [(-8.0, -7.0), (0.0, 1.0), (7.0, 8.0)]
        assert [b.count for b in bins] == [2, 1, 1]
        assert bins[0].mean == pytest.approx(2.0)
        assert bins[0].std == pytest.approx(np.sqrt(2.0))
        assert bins[1].std == 0.0

    def test_bins_cover_range(self):
        slip = np.linspace(-8.0, 8.0, 161)
        bins = error_by_slip(_batch(np.ones(161)), np.zeros(161), slip)
        assert len(bins) == 16
        assert bins[0].lower == -8.0 and bins[-1].upper == 8.0
        assert sum(b.count for b in bins) == 161

    def test_invalid_width(self):
        with pytest.raises(InvalidConfigError):
            error_by_slip(_batch([1.0]), [0.0], [0.0], bin_width=0.0)


class TestHoldout:
    """测试重复留出法"""

    def test_result_shape(self, random_table, fast_gpr):
        result = holdout_cv(random_table, "xyz", 0.5, repetitions=3, gpr_settings=fast_gpr)
        assert result.repetitions == 3
        assert result.n_inputs == 12
        assert result.label == "xyz"
        assert np.all(np.isfinite(result.values))

    def test_same_seed_identical(self, random_table, fast_gpr):
        first = holdout_cv(random_table, "y", 0.5, repetitions=2, seed=4, gpr_settings=fast_gpr)
        second = holdout_cv(random_table, "y", 0.5, repetitions=2, seed=4, gpr_settings=fast_gpr)
        assert np.array_equal(first.values, second.values)

    def test_parallel_matches_sequential(self, random_table, fast_gpr):
        serial = holdout_cv(random_table, "y", 0.5, repetitions=3, gpr_settings=fast_gpr)
        parallel = holdout_cv(
            random_table, "y", 0.5, repetitions=3, gpr_settings=fast_gpr, workers=3
        )
        assert np.array_equal(serial.values, parallel.values)

    def test_degenerate_split(self, random_table, fast_gpr):
        with pytest.raises(InvalidConfigError):
            holdout_cv(random_table, repetitions=1, train_fraction=1.0, resolution=0.5, gpr_settings=fast_gpr)

    def test_too_few_rotations(self, fast_gpr):
        with pytest.raises(InsufficientDataError):
            holdout_cv(make_random_table(n=8), resolution=0.5, gpr_settings=fast_gpr)

    def test_study_result_summary(self, random_table, fast_gpr):
        result = holdout_cv(random_table, "xy", 0.5, repetitions=3, gpr_settings=fast_gpr)
        summary = result.summary()
        assert summary["min"] <= summary["q1"] <= summary["median"] <= summary["q3"] <= summary["max"]
        assert summary["config"] == "xy"


class TestStudies:
    """测试输入选择与分辨率研究"""

    def test_input_selection(self, random_table, fast_gpr):
        results = input_selection_study(
            random_table, resolution=0.5, repetitions=2, gpr_settings=fast_gpr
        )
        assert [r.label for r in results] == ["y", "xy", "yz", "xz", "xyz"]
        assert [r.n_inputs for r in results] == [4, 8, 8, 8, 12]
        assert all(r.repetitions == 2 for r in results)

    def test_unknown_axes(self, random_table, fast_gpr):
        with pytest.raises(InvalidConfigError):
            input_selection_study(random_table, configs=("y", "w"), resolution=0.5)

    def test_resolution_input_counts(self, fast_gpr):
        table = make_random_table(n=12, n_points=140)
        results = resolution_study(table, repetitions=1, gpr_settings=fast_gpr)
        assert [r.n_inputs for r in results] == [420, 210, 84, 42, 21]
        assert [r.label for r in results] == ["0.5deg", "1deg", "2.5deg", "5deg", "10deg"]


class TestKFold:
    """测试 k 折交叉验证"""

    def test_assign_folds_balanced(self):
        fold = assign_folds(10, 3, seed=1)
        assert sorted(np.bincount(fold).tolist()) == [3, 3, 4]

    def test_assign_folds_invalid(self):
        with pytest.raises(InvalidConfigError):
            assign_folds(10, 1)
        with pytest.raises(InvalidConfigError):
            assign_folds(5, 6)

    def test_out_of_fold(self, fast_gpr):
        """每个转圈恰好被预测一次，且顺序与原表一致"""
        table = _clean_table(30)
        result = kfold_cv(table, k=5, axes="y", resolution=0.5, gpr_settings=fast_gpr)
        assert np.array_equal(result.rotation_ids, table.rotation_ids)
        assert np.array_equal(result.truth, table.fy)
        assert sorted(np.bincount(result.fold).tolist()) == [6, 6, 6, 6, 6]
        assert len(result.predictions) == 30
        assert result.fold_nrmse.shape == (5,)
        assert pearson(result.truth, result.predictions.mean) > 0.9

    def test_leave_one_out(self, fast_gpr):
        table = _clean_table(10)
        result = kfold_cv(table, k=10, axes="y", resolution=0.5, gpr_settings=fast_gpr)
        assert sorted(result.fold.tolist()) == list(range(10))

    def test_leave_one_out_zero_force(self, fast_gpr, caplog):
        """留一法中侧向力为零的折记为 NaN，其余折与合并指标照常"""
        table = _clean_table(10)
        table.labels[3, 0] = 0.0
        table.labels[3, 2] = 0.0
        with caplog.at_level(logging.WARNING):
            result = kfold_cv(table, k=10, axes="y", resolution=0.5, gpr_settings=fast_gpr)
        zero_fold = result.fold[3]
        assert np.isnan(result.fold_nrmse[zero_fold])
        assert np.sum(np.isfinite(result.fold_nrmse)) == 9
        assert np.all(np.isfinite(result.predictions.mean))
        assert np.isfinite(nrmse(result.truth, result.predictions.mean))
        assert any(record.levelno == logging.WARNING for record in caplog.records)

    def test_k_larger_than_n(self, fast_gpr):
        with pytest.raises(InvalidConfigError):
            kfold_cv(_clean_table(10), k=11, resolution=0.5, gpr_settings=fast_gpr)


class TestAnalysis:
    """测试相关分析与平均曲线"""

    def test_correlation_profile(self, random_table):
        profile = correlation_profile(random_table)
        assert profile.r.shape == (3, 4)
        assert np.all(profile.r[1] > 0.5)
        assert np.argmax(profile.max_abs) == 1
        assert profile.n_rotations == int(np.sum(np.abs(random_table.slip) < 6.0))

    def test_constant_column(self, random_table, caplog):
        """常数测点记为 0 并给出警告"""
        random_table.grids[:, 0, 0] = 1.0
        with caplog.at_level(logging.WARNING):
            profile = correlation_profile(random_table)
        assert profile.r[0, 0] == 0.0
        assert any(record.levelno == logging.WARNING for record in caplog.records)

    def test_correlation_insufficient(self, random_table):
        random_table.labels[:, 2] = 7.0
        with pytest.raises(InsufficientDataError):
            correlation_profile(random_table)

    def test_mean_profiles(self):
        table = make_random_table(n=4)
        table.labels[:, 2] = [0.2, 0.4, 1.6, -0.9]
        profiles = mean_profiles_by_slip(table, bin_width=1.0)
        assert profiles.levels.tolist() == [-1.0, 0.0, 2.0]
        assert profiles.counts.tolist() == [1, 2, 1]
        assert profiles.means.shape == (3, 4, 3)
        np.testing.assert_allclose(profiles.means[1], table.grids[:2].mean(axis=0))

    def test_center_series(self, random_table):
        ids, values, slip = center_series(random_table, "y")
        np.testing.assert_array_equal(values, random_table.grids[:, 2, 1])
        np.testing.assert_array_equal(ids, random_table.rotation_ids)
        np.testing.assert_array_equal(slip, random_table.slip)
        with pytest.raises(InvalidConfigError):
            center_series(random_table, "xy")

    def test_peak_magnitudes(self, random_table):
        peaks = peak_magnitudes(random_table)
        assert peaks.shape == (3,)
        assert peaks[1] == np.max(np.abs(random_table.grids[:, :, 1]))


class TestLatency:
    """测试预测耗时"""

    @pytest.fixture
    def model(self):
        rng = np.random.default_rng(0)
        hyper = Hyperparameters(1.0, np.ones(3), 0.1)
        return condition(rng.normal(size=(20, 3)), rng.normal(size=20), hyper)

    def test_report(self, model):
        report = bench_latency(model, np.zeros((3, 3)), repeats=2)
        assert report.repeats == 2
        assert report.n_points == 3
        assert report.n_train == 20
        assert report.mean > 0

    def test_zero_repeats(self, model):
        with pytest.raises(InvalidConfigError):
            bench_latency(model, np.zeros((3, 3)), repeats=0)

    def test_no_inputs(self, model):
        with pytest.raises(InvalidInputError):
            bench_latency(model, np.zeros((0, 3)))
