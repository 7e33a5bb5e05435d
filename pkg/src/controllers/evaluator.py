"""
Evaluator - 精度指标、交叉验证与各项研究
"""

import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from controllers.regressor import fit, predict, predict_batch
from controllers.signal_processor import downsample_table
from models.features import AXES, DEFAULT_AXIS_CONFIGS, FeatureTable, axes_label, parse_axes
from models.gp_model import FeatureConfig, PredictionBatch, TrainedModel, interval_z
from models.reports import (
    CorrelationProfile,
    LatencyReport,
    MetricsReport,
    OutOfFoldResult,
    SlipBinError,
    SlipProfiles,
    StudyResult,
)
from models.settings import GprSettings
from utils.errors import (
    InsufficientDataError,
    InvalidConfigError,
    InvalidInputError,
    UndefinedMetricError,
)
from utils.logger import Logger

logger = Logger.get_logger("Evaluator")

DEFAULT_RESOLUTIONS_DEG = (0.5, 1.0, 2.5, 5.0, 10.0)
MIN_CV_ROTATIONS = 10


def _paired(y: np.ndarray, yhat: np.ndarray, min_size: int) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.size != yhat.size:
        raise InvalidInputError(f"长度不一致: {y.size} vs {yhat.size}")
    if y.size < min_size:
        raise InsufficientDataError(f"至少需要 {min_size} 个样本，实际 {y.size}")
    return y, yhat


def nrmse(y: np.ndarray, yhat: np.ndarray) -> float:
    """
    以最大绝对目标值归一化的均方根误差（%）

    Args:
        y: 真值
        yhat: 预测值

    Returns:
        100·sqrt(mean((y − ŷ)²)) / max|y|
    """
    y, yhat = _paired(y, yhat, min_size=1)
    scale = float(np.max(np.abs(y)))
    if scale == 0.0:
        raise UndefinedMetricError("目标全为零，NRMSE 归一化无定义")
    return float(100.0 * np.sqrt(np.mean((y - yhat) ** 2)) / scale)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """样本 Pearson 相关系数"""
    a, b = _paired(a, b, min_size=2)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedMetricError("常数序列的相关系数无定义")
    r = stats.pearsonr(a, b)[0]
    return float(np.clip(r, -1.0, 1.0))


def interval_coverage(
    predictions: PredictionBatch, truth: np.ndarray, level: float = 0.95
) -> float:
    """
    真值落在 level 对称预测区间内的比例

    区间由预测方差（含观测噪声）按正态分位数重新计算

    Args:
        predictions: 批量预测
        truth: 真值
        level: 置信水平

    Returns:
        覆盖率，位于 [0, 1]
    """
    z = interval_z(level)
    truth, mean = _paired(truth, predictions.mean, min_size=1)
    half_width = z * np.sqrt(np.maximum(predictions.predictive_variance, 0.0))
    return float(np.mean(np.abs(truth - mean) <= half_width))


def metrics_report(
    truth: np.ndarray, predictions: PredictionBatch, level: float = 0.95
) -> MetricsReport:
    """汇总 NRMSE、Pearson R、平均绝对误差与 level 区间覆盖率"""
    truth, mean = _paired(truth, predictions.mean, min_size=2)
    return MetricsReport(
        nrmse=nrmse(truth, mean),
        pearson_r=pearson(truth, mean),
        mean_abs_err=float(np.mean(np.abs(truth - mean))),
        coverage_95=interval_coverage(predictions, truth, level),
        n=int(truth.size),
        level=level,
    )


def correlation_profile(table: FeatureTable, slip_filter: float = 6.0) -> CorrelationProfile:
    """
    每个测点、每个轴的加速度与侧向力的相关曲线

    Args:
        table: 0.5° 分辨率的特征表
        slip_filter: 只使用 |slip| < slip_filter 的转圈

    Returns:
        3 × n_points 的相关系数
    """
    keep = np.abs(table.slip) < slip_filter
    if np.count_nonzero(keep) < 2:
        raise InsufficientDataError(
            f"|slip| < {slip_filter}° 的转圈只有 {np.count_nonzero(keep)} 个，至少需要 2 个"
        )
    fy = table.fy[keep]
    if np.ptp(fy) == 0:
        raise UndefinedMetricError("侧向力为常数，相关系数无定义")

    grids = table.grids[keep]  # (n, points, 3)
    fy_c = fy - fy.mean()
    g_c = grids - grids.mean(axis=0)
    numerator = np.einsum("n,npa->ap", fy_c, g_c)
    norm = np.sqrt(np.sum(fy_c**2) * np.sum(g_c**2, axis=0)).T
    constant = norm == 0
    if np.any(constant):
        logger.warning(f"{int(np.count_nonzero(constant))} 个测点为常数，相关系数记为 0")
    r = np.where(constant, 0.0, numerator / np.where(constant, 1.0, norm))

    logger.info(
        f"相关分析: {int(np.count_nonzero(keep))} 圈, 最大 |r| "
        + ", ".join(f"Ac_{a}={m:.3f}" for a, m in zip(AXES, np.max(np.abs(r), axis=1)))
    )
    return CorrelationProfile(
        angles=table.relative_angles, r=np.clip(r, -1.0, 1.0), n_rotations=int(keep.sum())
    )


def _design(table: FeatureTable, axes: str, resolution: float) -> Tuple[np.ndarray, FeatureConfig]:
    if not np.isclose(resolution, table.step):
        table = downsample_table(table, resolution)
    config = FeatureConfig(
        axes=axes_label(axes), resolution_deg=float(resolution), half_span_deg=table.half_span
    )
    return table.design_matrix(axes), config


def _child_seeds(seed: int, count: int) -> List[int]:
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(count)]


def _run_parallel(tasks: Sequence[Callable[[], float]], workers: int, what: str) -> List:
    """并行执行相互独立的拟合任务，结果按任务顺序返回"""
    results: List = [None] * len(tasks)
    if workers <= 1:
        for i, task in enumerate(tasks):
            results[i] = task()
            logger.debug(f"{what}: {i + 1}/{len(tasks)} 完成")
        return results

    with ThreadPoolExecutor(max_workers=workers) as executor:
        logger.info(f"使用 {workers} 个线程并行执行 {what}")
        futures = {executor.submit(task): i for i, task in enumerate(tasks)}
        completed = 0
        for future in as_completed(futures):
            results[futures[future]] = future.result()
            completed += 1
            logger.debug(f"{what}: {completed}/{len(tasks)} 完成")
    return results


def holdout_cv(
    table: FeatureTable,
    axes: str = AXES,
    resolution: float = 5.0,
    repetitions: int = 20,
    train_fraction: float = 0.7,
    seed: int = 0,
    gpr_settings: GprSettings = GprSettings(),
    workers: int = 1,
    label: Optional[str] = None,
) -> StudyResult:
    """
    重复的留出法交叉验证，每次重复独立打乱并重新优化超参数

    Args:
        table: 特征表
        axes: 输入轴
        resolution: 接地区分辨率（度）
        repetitions: 重复次数
        train_fraction: 训练集比例
        seed: 顶层种子
        gpr_settings: 优化参数（其中的 seed 被每次重复的子种子覆盖）
        workers: 并行线程数
        label: 结果标签，缺省为轴标签

    Returns:
        各次重复验证集 NRMSE 的分布
    """
    n = len(table)
    if n < MIN_CV_ROTATIONS:
        raise InsufficientDataError(f"交叉验证至少需要 {MIN_CV_ROTATIONS} 圈，实际 {n}")
    if repetitions < 1:
        raise InvalidConfigError(f"重复次数必须 >= 1: {repetitions}")
    n_train = int(round(train_fraction * n))
    if not 0.0 < train_fraction < 1.0 or n_train < 2 or n_train >= n:
        raise InvalidConfigError(f"训练比例 {train_fraction} 在 {n} 圈上产生退化划分")

    X, feature_config = _design(table, axes, resolution)
    y = table.fy
    seeds = _child_seeds(seed, repetitions)

    def run(rep_seed: int) -> float:
        order = np.random.default_rng(rep_seed).permutation(n)
        train, valid = order[:n_train], order[n_train:]
        settings = _with_seed(gpr_settings, rep_seed)
        model = fit(X[train], y[train], settings, feature_config)
        return nrmse(y[valid], predict_batch(model, X[valid]).mean)

    label = label or feature_config.axes
    logger.info(
        f"留出法交叉验证 [{label}]: {repetitions} 次, 训练 {n_train} / 验证 {n - n_train}, "
        f"输入维度 {X.shape[1]}"
    )
    values = _run_parallel([lambda s=s: run(s) for s in seeds], workers, f"留出法 [{label}]")
    result = StudyResult(label=label, values=np.asarray(values), n_inputs=X.shape[1])
    logger.info(f"[{label}] NRMSE = {result.mean:.3f}% ± {result.std:.3f}%")
    return result


def _with_seed(settings: GprSettings, seed: int) -> GprSettings:
    return replace(settings, seed=seed)


def assign_folds(n: int, k: int, seed: int = 0) -> np.ndarray:
    """
    随机而均衡的折分配

    Returns:
        长度为 n 的折编号，各折大小相差不超过 1
    """
    if k < 2:
        raise InvalidConfigError(f"折数必须 >= 2: {k}")
    if k > n:
        raise InvalidConfigError(f"折数 {k} 大于样本数 {n}")
    order = np.random.default_rng(seed).permutation(n)
    fold = np.empty(n, dtype=np.int64)
    fold[order] = np.arange(n) % k
    return fold


def _fold_nrmse(y: np.ndarray, mean: np.ndarray, fold: np.ndarray, k: int) -> np.ndarray:
    """每折 NRMSE，真值全为零的折记为 NaN"""
    values = np.full(k, np.nan)
    for j in range(k):
        held = fold == j
        try:
            values[j] = nrmse(y[held], mean[held])
        except UndefinedMetricError:
            logger.warning(f"第 {j} 折真值全为零，NRMSE 记为 NaN")
    return values


def kfold_cv(
    table: FeatureTable,
    k: int = 5,
    axes: str = AXES,
    resolution: float = 5.0,
    seed: int = 0,
    gpr_settings: GprSettings = GprSettings(),
    workers: int = 1,
    level: float = 0.95,
) -> OutOfFoldResult:
    """
    k 折交叉验证，每个转圈恰好由一个未见过它的模型预测一次

    Args:
        table: 特征表
        k: 折数
        axes: 输入轴
        resolution: 接地区分辨率（度）
        seed: 顶层种子
        gpr_settings: 优化参数
        workers: 并行线程数
        level: 折外预测区间的置信水平

    Returns:
        按原顺序排列的折外预测
    """
    n = len(table)
    fold_seed, *model_seeds = _child_seeds(seed, k + 1)
    fold = assign_folds(n, k, fold_seed)
    X, feature_config = _design(table, axes, resolution)
    y = table.fy

    def run(j: int) -> PredictionBatch:
        held = fold == j
        model = fit(X[~held], y[~held], _with_seed(gpr_settings, model_seeds[j]), feature_config)
        return predict_batch(model, X[held], level)

    logger.info(f"{k} 折交叉验证: {n} 圈, 输入维度 {X.shape[1]}")
    batches = _run_parallel([lambda j=j: run(j) for j in range(k)], workers, f"{k} 折交叉验证")

    # 按折拼接后恢复原顺序
    held_index = np.concatenate([np.flatnonzero(fold == j) for j in range(k)])
    predictions = PredictionBatch.concat(batches, order=np.argsort(held_index, kind="stable"))
    fold_nrmse = _fold_nrmse(y, predictions.mean, fold, k)
    defined = fold_nrmse[np.isfinite(fold_nrmse)]
    if defined.size:
        spread = defined.std(ddof=1) if defined.size > 1 else 0.0
        logger.info(f"{k} 折 NRMSE = {defined.mean():.3f}% ± {spread:.3f}% ({defined.size} 折有定义)")
    return OutOfFoldResult(
        rotation_ids=table.rotation_ids,
        truth=y,
        slip=table.slip,
        fold=fold,
        predictions=predictions,
        fold_nrmse=fold_nrmse,
    )


def input_selection_study(
    table: FeatureTable,
    configs: Sequence[str] = DEFAULT_AXIS_CONFIGS,
    resolution: float = 5.0,
    repetitions: int = 20,
    train_fraction: float = 0.7,
    seed: int = 0,
    gpr_settings: GprSettings = GprSettings(),
    workers: int = 1,
) -> List[StudyResult]:
    """对每种轴组合运行留出法交叉验证（各组合共用同一组划分）"""
    for axes in configs:
        parse_axes(axes)
    return [
        holdout_cv(
            table, axes, resolution, repetitions, train_fraction, seed, gpr_settings, workers
        )
        for axes in configs
    ]


def resolution_study(
    table: FeatureTable,
    steps: Sequence[float] = DEFAULT_RESOLUTIONS_DEG,
    axes: str = AXES,
    repetitions: int = 20,
    train_fraction: float = 0.7,
    seed: int = 0,
    gpr_settings: GprSettings = GprSettings(),
    workers: int = 1,
) -> List[StudyResult]:
    """对每种接地区分辨率运行留出法交叉验证"""
    return [
        holdout_cv(
            table,
            axes,
            step,
            repetitions,
            train_fraction,
            seed,
            gpr_settings,
            workers,
            label=f"{step:g}deg",
        )
        for step in steps
    ]


def error_by_slip(
    predictions: PredictionBatch,
    truth: np.ndarray,
    slip: np.ndarray,
    bin_width: float = 1.0,
    slip_range: float = 8.0,
) -> List[SlipBinError]:
    """
    按侧偏角分箱统计绝对误差

    Args:
        predictions: 预测
        truth: 侧向力真值
        slip: 侧偏角（度）
        bin_width: 箱宽（度）
        slip_range: 覆盖 [−slip_range, slip_range]

    Returns:
        非空箱的 (均值, 标准差)，空箱不出现
    """
    if bin_width <= 0 or slip_range <= 0:
        raise InvalidConfigError("箱宽与侧偏角范围必须为正")
    truth, mean = _paired(truth, predictions.mean, min_size=1)
    slip = np.asarray(slip, dtype=float).ravel()
    if slip.size != truth.size:
        raise InvalidInputError("侧偏角与真值长度不一致")

    error = np.abs(truth - mean)
    n_bins = int(np.ceil(2.0 * slip_range / bin_width - 1e-9))
    edges = -slip_range + bin_width * np.arange(n_bins + 1)
    index = np.clip(np.floor((slip + slip_range) / bin_width + 1e-9).astype(np.int64), 0, n_bins - 1)
    inside = np.abs(slip) <= slip_range + 1e-9

    bins = []
    for b in range(n_bins):
        members = error[inside & (index == b)]
        if members.size == 0:
            continue
        bins.append(
            SlipBinError(
                lower=float(edges[b]),
                upper=float(edges[b + 1]),
                mean=float(members.mean()),
                std=float(members.std(ddof=1)) if members.size > 1 else 0.0,
                count=int(members.size),
            )
        )
    return bins


def mean_profiles_by_slip(table: FeatureTable, bin_width: float = 1.0) -> SlipProfiles:
    """各侧偏角水平（取整到 bin_width）的平均加速度网格"""
    if len(table) == 0:
        raise InsufficientDataError("特征表为空")
    if bin_width <= 0:
        raise InvalidConfigError(f"箱宽必须为正: {bin_width}")
    rounded = np.round(table.slip / bin_width) * bin_width
    levels, inverse, counts = np.unique(rounded, return_inverse=True, return_counts=True)
    means = np.stack([table.grids[inverse == i].mean(axis=0) for i in range(levels.size)])
    return SlipProfiles(
        levels=levels, relative_angles=table.relative_angles, means=means, counts=counts
    )


def center_series(table: FeatureTable, axis: str = "y") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    每圈接地区中心处的加速度

    Returns:
        (rotation_ids, 加速度, 侧偏角)
    """
    indices = parse_axes(axis)
    if len(indices) != 1:
        raise InvalidConfigError(f"只能选择单个轴: {axis!r}")
    index = indices[0]
    center = int(np.argmin(np.abs(table.relative_angles)))
    return table.rotation_ids, table.grids[:, center, index], table.slip


def peak_magnitudes(table: FeatureTable) -> np.ndarray:
    """各轴的最大 |加速度|（g）"""
    if len(table) == 0:
        raise InsufficientDataError("特征表为空")
    return np.max(np.abs(table.grids), axis=(0, 1))


def bench_latency(model: TrainedModel, X_star: np.ndarray, repeats: int = 5) -> LatencyReport:
    """
    单点预测（均值 + 方差）耗时

    Args:
        model: 训练好的模型
        X_star: (m, d) 测试输入，逐行单独预测
        repeats: 重复轮数

    Returns:
        每次预测的平均耗时与标准差（秒）
    """
    if repeats <= 0:
        raise InvalidConfigError(f"重复次数必须为正: {repeats}")
    X_star = np.atleast_2d(np.asarray(X_star, dtype=float))
    if X_star.shape[0] == 0:
        raise InvalidInputError("没有可用于计时的输入")

    timings = []
    for _ in range(repeats):
        for row in X_star:
            start = time.perf_counter()
            predict(model, row)
            timings.append(time.perf_counter() - start)
    timings = np.asarray(timings)
    report = LatencyReport(
        mean=float(timings.mean()),
        std=float(timings.std(ddof=1)) if timings.size > 1 else 0.0,
        repeats=repeats,
        n_points=X_star.shape[0],
        n_train=model.n_train,
    )
    logger.info(f"预测耗时: {report.mean * 1e3:.3f} ± {report.std * 1e3:.3f} ms（n={model.n_train}）")
    return report
