"""
Pipeline Controller - 主控制器，按命令协调各个组件
每个命令读取输入产物、调用对应模块并返回写出的产物路径
"""

from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np

from controllers.evaluator import (
    bench_latency,
    center_series,
    correlation_profile,
    error_by_slip,
    input_selection_study,
    kfold_cv,
    mean_profiles_by_slip,
    metrics_report,
    peak_magnitudes,
    resolution_study,
)
from controllers.generator import generate_dataset, generate_maneuver
from controllers.regressor import fit, predict_batch
from controllers.signal_processor import FeatureExtractor, downsample_table
from models.features import AXES, FeatureTable, axes_label
from models.gp_model import FeatureConfig, TrainedModel
from models.reports import MetricsReport, PredictionRecords
from utils.config import PipelineConfig, load_maneuver
from utils.csv_io import (
    read_features_csv,
    read_predictions_csv,
    read_raw_csv,
    write_features_csv,
    write_predictions_csv,
    write_raw_csv,
    write_table,
)
from utils.errors import InvalidConfigError
from utils.logger import Logger
from utils.model_store import load_model, save_model
from utils.path_helper import ensure_dir
from utils.plot_renderer import render_prediction_svg

logger = Logger.get_logger("PipelineController")

MODEL_FILE = "model.tgpr"


def _stem(path: Path, suffix: str) -> str:
    """dataset1_raw.csv -> dataset1"""
    stem = path.stem
    return stem[: -len(suffix)] if stem.endswith(suffix) else stem


class PipelineController:
    """流程主控制器"""

    def __init__(self, config: PipelineConfig):
        """
        Args:
            config: 已校验的流程配置
        """
        self._config = config
        self._stage = "init"
        logger.debug("PipelineController 初始化完成")

    @property
    def config(self) -> PipelineConfig:
        return self._config

    @property
    def current_stage(self) -> str:
        """最近进入的阶段名，用于错误诊断"""
        return self._stage

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        self._stage = name
        logger.info(f"阶段开始: {name}")
        yield
        logger.info(f"阶段完成: {name}")

    @property
    def axes(self) -> str:
        return axes_label(self._config.eval_settings().axes)

    @property
    def resolution(self) -> float:
        return self._config.eval_settings().resolution_deg

    def _read_features(self, path: Path) -> FeatureTable:
        with self.stage("read-features"):
            return read_features_csv(path, self._config.patch_settings().half_span_deg)

    def _design(self, table: FeatureTable, config: FeatureConfig) -> np.ndarray:
        if not np.isclose(config.half_span_deg, table.half_span):
            raise InvalidConfigError(
                f"特征半跨度 {table.half_span}° 与模型的 {config.half_span_deg}° 不一致"
            )
        if not np.isclose(config.resolution_deg, table.step):
            table = downsample_table(table, config.resolution_deg)
        return table.design_matrix(config.axes)

    # ------------------------------------------------------------------ 数据

    def generate(
        self, which: int, out_dir: Path, maneuver: Optional[Path] = None, noise: bool = True
    ) -> List[Path]:
        """
        生成合成原始流

        Args:
            which: 数据集编号 1/2（maneuver 给出时忽略）
            out_dir: 输出目录
            maneuver: 单工况描述文件
            noise: 是否加噪声

        Returns:
            [原始流 CSV]
        """
        params = self._config.tire_params()
        with self.stage("generate"):
            if maneuver is not None:
                spec = load_maneuver(maneuver)
                stream = generate_maneuver(spec, params, noise)
                name = f"{maneuver.stem}_raw.csv"
            else:
                stream = generate_dataset(which, params, self._config.seed, noise)
                name = f"dataset{which}_raw.csv"
        with self.stage("write-raw"):
            return [write_raw_csv(stream, ensure_dir(out_dir) / name)]

    def preprocess(self, raw_path: Path, out_dir: Path) -> List[Path]:
        """原始流 -> 0.5° 特征表"""
        with self.stage("read-raw"):
            stream = read_raw_csv(raw_path)
        with self.stage("preprocess"):
            extractor = FeatureExtractor(
                self._config.filter_settings(), self._config.patch_settings()
            )
            table = extractor.extract(stream)
        with self.stage("write-features"):
            name = f"{_stem(raw_path, '_raw')}_features.csv"
            return [write_features_csv(table, ensure_dir(out_dir) / name)]

    # ------------------------------------------------------------------ 模型

    def train(self, features_path: Path, out_dir: Path) -> List[Path]:
        """
        训练模型，写出模型文件与拟合报告

        Returns:
            [模型文件, 拟合报告 CSV]
        """
        table = self._read_features(features_path)
        feature_config = FeatureConfig(
            axes=self.axes, resolution_deg=self.resolution, half_span_deg=table.half_span
        )
        with self.stage("train"):
            X = self._design(table, feature_config)
            model = fit(X, table.fy, self._config.gpr_settings(), feature_config)

        out_dir = ensure_dir(out_dir)
        with self.stage("save-model"):
            model_path = save_model(model, out_dir / MODEL_FILE)
            report_path = write_table(self._fit_rows(model), out_dir / "fit_report.csv")
        return [model_path, report_path]

    @staticmethod
    def _fit_rows(model: TrainedModel) -> List[dict]:
        hyper = model.hyper
        rows = [
            {"parameter": "log_likelihood", "value": model.log_likelihood},
            {"parameter": "signal_variance", "value": hyper.signal_variance},
            {"parameter": "noise_variance", "value": hyper.noise_variance},
            {"parameter": "jitter", "value": model.jitter},
            {"parameter": "n_train", "value": model.n_train},
            {"parameter": "n_inputs", "value": model.n_inputs},
        ]
        rows += [
            {"parameter": f"length_scale_{i}", "value": v}
            for i, v in enumerate(hyper.length_scales)
        ]
        return rows

    def predict(self, model_path: Path, features_path: Path, out_dir: Path) -> List[Path]:
        """逐圈预测"""
        with self.stage("load-model"):
            model = load_model(model_path)
        table = self._read_features(features_path)
        with self.stage("predict"):
            predictions = predict_batch(
                model,
                self._design(table, model.feature_config),
                self._config.eval_settings().level,
            )
        records = PredictionRecords(table.rotation_ids, table.labels, predictions)
        with self.stage("write-predictions"):
            name = f"{_stem(features_path, '_features')}_predictions.csv"
            return [write_predictions_csv(records, ensure_dir(out_dir) / name)]

    # ------------------------------------------------------------------ 评估

    def evaluate(
        self, predictions_path: Path, out_dir: Path, svg: bool = True
    ) -> Tuple[List[Path], MetricsReport]:
        """
        指标报告、绘图数据、侧偏角误差分箱、文本摘要与可选 SVG

        Returns:
            (产物路径, 指标)
        """
        with self.stage("read-predictions"):
            records = read_predictions_csv(predictions_path)
        ev = self._config.eval_settings()
        with self.stage("evaluate"):
            report = metrics_report(records.truth, records.predictions, ev.level)
            bins = error_by_slip(
                records.predictions,
                records.truth,
                records.slip,
                ev.bin_width_deg,
                ev.slip_range_deg,
            )

        out_dir = ensure_dir(out_dir)
        batch = records.predictions
        plot_rows = [
            {
                "index": i,
                "rotation_id": int(records.rotation_ids[i]),
                "slip_deg": float(records.slip[i]),
                "truth_N": float(records.truth[i]),
                "mean_N": float(batch.mean[i]),
                "lower_N": float(batch.lower[i]),
                "upper_N": float(batch.upper[i]),
            }
            for i in range(len(records))
        ]
        with self.stage("write-report"):
            paths = [
                write_table([report.as_dict()], out_dir / "metrics.csv"),
                write_table(plot_rows, out_dir / "plot_data.csv"),
                write_table(
                    [asdict(b) for b in bins],
                    out_dir / "error_by_slip.csv",
                    columns=("lower", "upper", "mean", "std", "count"),
                ),
            ]
            summary = out_dir / "summary.txt"
            summary.write_text(
                "".join(f"{k} = {v:.6g}\n" for k, v in report.as_dict().items()),
                encoding="utf-8",
            )
            paths.append(summary)
            if svg:
                svg_path = render_prediction_svg(records, out_dir / "prediction.svg")
                if svg_path is not None:
                    paths.append(svg_path)
        logger.info(
            f"NRMSE = {report.nrmse:.3f}%, R = {report.pearson_r:.4f}, "
            f"{report.level:.0%} 区间覆盖率 = {report.coverage_95:.3f}"
        )
        return paths, report

    def _studies_kwargs(self, repetitions: Optional[int]) -> dict:
        ev = self._config.eval_settings()
        return {
            "repetitions": repetitions or ev.repetitions,
            "train_fraction": ev.train_fraction,
            "seed": self._config.seed,
            "gpr_settings": self._config.gpr_settings(),
            "workers": ev.workers,
        }

    def study_inputs(
        self, features_path: Path, out_dir: Path, repetitions: Optional[int] = None
    ) -> List[Path]:
        """不同轴组合的留出法研究"""
        table = self._read_features(features_path)
        with self.stage("study-inputs"):
            results = input_selection_study(
                table, resolution=self.resolution, **self._studies_kwargs(repetitions)
            )
        with self.stage("write-study"):
            rows = [r.summary() for r in results]
            return [write_table(rows, ensure_dir(out_dir) / "study_inputs.csv")]

    def study_resolution(
        self, features_path: Path, out_dir: Path, repetitions: Optional[int] = None
    ) -> List[Path]:
        """不同接地区分辨率的留出法研究"""
        table = self._read_features(features_path)
        with self.stage("study-resolution"):
            results = resolution_study(table, axes=self.axes, **self._studies_kwargs(repetitions))
        with self.stage("write-study"):
            rows = [r.summary() for r in results]
            return [write_table(rows, ensure_dir(out_dir) / "study_resolution.csv")]

    def correlate(self, features_path: Path, out_dir: Path) -> List[Path]:
        """各测点加速度与侧向力的相关曲线"""
        table = self._read_features(features_path)
        with self.stage("correlate"):
            profile = correlation_profile(table, self._config.eval_settings().slip_filter_deg)
        rows = [
            {
                "angle_deg": float(a),
                **{f"r_{axis}": float(profile.r[i, j]) for i, axis in enumerate(AXES)},
            }
            for j, a in enumerate(profile.angles)
        ]
        with self.stage("write-correlation"):
            return [write_table(rows, ensure_dir(out_dir) / "correlation.csv")]

    def crossval(self, features_path: Path, out_dir: Path, k: Optional[int] = None) -> List[Path]:
        """k 折折外预测与每折 NRMSE"""
        table = self._read_features(features_path)
        ev = self._config.eval_settings()
        with self.stage("crossval"):
            result = kfold_cv(
                table,
                k=k or ev.folds,
                axes=self.axes,
                resolution=self.resolution,
                seed=self._config.seed,
                gpr_settings=self._config.gpr_settings(),
                workers=ev.workers,
                level=ev.level,
            )
        out_dir = ensure_dir(out_dir)
        records = PredictionRecords(table.rotation_ids, table.labels, result.predictions)
        fold_rows = [
            {"fold": j, "n": int(np.sum(result.fold == j)), "nrmse_pct": float(v)}
            for j, v in enumerate(result.fold_nrmse)
        ]
        with self.stage("write-crossval"):
            return [
                write_predictions_csv(records, out_dir / "crossval_predictions.csv"),
                write_table(fold_rows, out_dir / "crossval_folds.csv"),
            ]

    def analyze(self, features_path: Path, out_dir: Path) -> List[Path]:
        """按侧偏角的平均加速度曲线、接地区中心序列与峰值幅度"""
        table = self._read_features(features_path)
        with self.stage("analyze"):
            profiles = mean_profiles_by_slip(table, self._config.eval_settings().bin_width_deg)
            rotation_ids, center, slip = center_series(table, "y")
            peaks = peak_magnitudes(table)

        profile_rows = [
            {
                "slip_deg": float(level),
                "count": int(profiles.counts[i]),
                "angle_deg": float(angle),
                **{f"a{axis}_g": float(profiles.means[i, j, a]) for a, axis in enumerate(AXES)},
            }
            for i, level in enumerate(profiles.levels)
            for j, angle in enumerate(profiles.relative_angles)
        ]
        center_rows = [
            {"rotation_id": int(r), "slip_deg": float(s), "ay_center_g": float(v)}
            for r, s, v in zip(rotation_ids, slip, center)
        ]
        peak_rows = [{"axis": axis, "max_abs_g": float(peaks[a])} for a, axis in enumerate(AXES)]

        out_dir = ensure_dir(out_dir)
        with self.stage("write-analysis"):
            return [
                write_table(profile_rows, out_dir / "slip_profiles.csv"),
                write_table(center_rows, out_dir / "center_series.csv"),
                write_table(peak_rows, out_dir / "peak_magnitudes.csv"),
            ]

    def bench(self, model_path: Path, features_path: Path, out_dir: Path) -> List[Path]:
        """单点预测耗时"""
        with self.stage("load-model"):
            model = load_model(model_path)
        table = self._read_features(features_path)
        with self.stage("bench"):
            X = self._design(table, model.feature_config)
            report = bench_latency(model, X, int(self._config.get("eval.latency_repeats")))
        with self.stage("write-latency"):
            return [write_table([asdict(report)], ensure_dir(out_dir) / "latency.csv")]
