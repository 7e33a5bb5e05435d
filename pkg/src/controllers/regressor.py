"""
GP Regressor - 精确高斯过程回归
边际似然优化与后验预测
"""

from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from models.gp_model import (
    FeatureConfig,
    Hyperparameters,
    Prediction,
    PredictionBatch,
    Standardizer,
    TrainedModel,
)
from models.settings import GprSettings
from utils.errors import (
    IllConditionedError,
    InvalidDataError,
    InvalidInputError,
    NumericalError,
    OptimizationError,
)
from utils.kernels import gram, gram_log_gradients
from utils.logger import Logger

logger = Logger.get_logger("Regressor")

JITTER_LADDER = (1e-10, 1e-8, 1e-6)
LOG_2PI = np.log(2.0 * np.pi)


def _check_training_data(X: np.ndarray, y: np.ndarray, min_rows: int) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidInputError(f"输入矩阵形状错误: {X.shape}")
    if X.shape[0] != y.size:
        raise InvalidInputError(f"输入行数 {X.shape[0]} 与目标数 {y.size} 不一致")
    if X.shape[0] < min_rows:
        raise InvalidDataError(f"训练样本数 {X.shape[0]} 少于 {min_rows}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidDataError("训练数据包含非有限值")
    return X, y


def _factorize(
    K: np.ndarray, hyper: Hyperparameters, jitter_ladder: Sequence[float]
) -> Tuple[np.ndarray, float]:
    """
    对 K + (σ_ε² + jitter·σ_f²)·I 做 Cholesky 分解，失败时逐级加大抖动

    Returns:
        (下三角因子, 实际加入的抖动量)
    """
    diag = np.diag_indices(K.shape[0])
    for level in jitter_ladder:
        jitter = level * hyper.signal_variance
        K_y = K.copy()
        K_y[diag] += hyper.noise_variance + jitter
        try:
            return cholesky(K_y, lower=True, check_finite=False), jitter
        except LinAlgError:
            logger.debug(f"Cholesky 失败，抖动 {level:g}·σ_f² 不足")
    raise IllConditionedError(f"抖动升级到 {jitter_ladder[-1]:g}·σ_f² 后分解仍失败")


def log_marginal_likelihood(
    X: np.ndarray,
    y: np.ndarray,
    hyper: Hyperparameters,
    jitter_ladder: Sequence[float] = JITTER_LADDER,
) -> Tuple[float, np.ndarray]:
    """
    对数边际似然及其对对数超参数的梯度

    Args:
        X: (n, d) 输入（通常已标准化）
        y: (n,) 目标
        hyper: 超参数
        jitter_ladder: 抖动升级序列（×σ_f²）

    Returns:
        (似然值, 梯度)，梯度顺序 [log σ_f², log l_1..l_k, log σ_ε²]
    """
    X, y = _check_training_data(X, y, min_rows=1)
    hyper.check_dimension(X.shape[1])
    n = y.size

    K = gram(X, X, hyper)
    L, jitter = _factorize(K, hyper, jitter_ladder)
    alpha = cho_solve((L, True), y, check_finite=False)

    value = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG_2PI

    # ½ tr((ααᵀ − K_y⁻¹)·∂K_y/∂θ)
    K_inv = cho_solve((L, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - K_inv
    trace_w = np.trace(W)

    grad = [0.5 * np.sum(W * dK) for dK in gram_log_gradients(X, hyper)]
    # 抖动与 σ_f² 成比例
    grad[0] += 0.5 * jitter * trace_w
    grad.append(0.5 * hyper.noise_variance * trace_w)
    return float(value), np.asarray(grad)


def _negative_objective(
    theta: np.ndarray, X: np.ndarray, y: np.ndarray, jitter_ladder: Sequence[float]
) -> Tuple[float, np.ndarray]:
    value, grad = log_marginal_likelihood(X, y, Hyperparameters.from_log_vector(theta), jitter_ladder)
    return -value, -grad


def condition(
    X: np.ndarray,
    y: np.ndarray,
    hyper: Hyperparameters,
    standardizer: Optional[Standardizer] = None,
    feature_config: FeatureConfig = FeatureConfig(),
    jitter_ladder: Sequence[float] = JITTER_LADDER,
) -> TrainedModel:
    """
    以固定超参数构造模型（X、y 处于标准化空间）

    Args:
        X: (n, d) 标准化输入
        y: (n,) 标准化目标
        hyper: 超参数
        standardizer: 标准化器，缺省为恒等变换
        feature_config: 特征配置
        jitter_ladder: 抖动升级序列

    Returns:
        训练好的模型
    """
    X, y = _check_training_data(X, y, min_rows=1)
    hyper.check_dimension(X.shape[1])
    if standardizer is None:
        standardizer = Standardizer.identity(X.shape[1])

    K = gram(X, X, hyper)
    L, jitter = _factorize(K, hyper, jitter_ladder)
    alpha = cho_solve((L, True), y, check_finite=False)
    value = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * y.size * LOG_2PI

    return TrainedModel(
        X=X,
        y=y,
        hyper=hyper,
        chol_l=L,
        alpha=alpha,
        standardizer=standardizer,
        feature_config=feature_config,
        log_likelihood=float(value),
        jitter=jitter,
    )


def fit(
    X_raw: np.ndarray,
    y_raw: np.ndarray,
    settings: GprSettings = GprSettings(),
    feature_config: FeatureConfig = FeatureConfig(),
) -> TrainedModel:
    """
    标准化数据并在对数超参数空间最大化边际似然（多起点）

    Args:
        X_raw: (n, d) 原始输入
        y_raw: (n,) 原始目标（N）
        settings: 优化参数
        feature_config: 特征配置，随模型保存

    Returns:
        似然最高的模型
    """
    X_raw, y_raw = _check_training_data(X_raw, y_raw, min_rows=2)
    standardizer = Standardizer.fit(X_raw, y_raw)
    X = standardizer.transform_inputs(X_raw)
    y = standardizer.transform_targets(y_raw)
    dropped = int(np.sum(~standardizer.active))
    if dropped:
        logger.warning(f"丢弃 {dropped} 个方差为零的输入列")

    n_scales = X.shape[1] if settings.ard else 1
    theta0 = np.log(
        np.concatenate(
            [
                [settings.init_signal_variance],
                np.full(n_scales, settings.init_length_scale),
                [settings.init_noise_variance],
            ]
        )
    )
    bound = settings.log_bound
    rng = np.random.default_rng(settings.seed)
    starts = [theta0] + [
        np.clip(theta0 + rng.normal(0.0, settings.restart_spread, theta0.size), -bound, bound)
        for _ in range(settings.restarts - 1)
    ]

    logger.info(
        f"开始优化超参数: n={X.shape[0]}, d={X.shape[1]}, 参数数={theta0.size}, "
        f"重启次数={settings.restarts}"
    )
    best_value, best_theta = -np.inf, None
    for i, start in enumerate(starts):
        try:
            result = minimize(
                _negative_objective,
                start,
                args=(X, y, settings.jitter_ladder),
                jac=True,
                method="L-BFGS-B",
                bounds=[(-bound, bound)] * theta0.size,
                options={"maxiter": settings.max_iterations, "gtol": settings.tolerance},
            )
        except NumericalError as e:
            logger.warning(f"第 {i + 1} 次起点失败，跳过: {e}")
            continue

        if not (np.all(np.isfinite(result.x)) and np.isfinite(result.fun)):
            raise OptimizationError(f"第 {i + 1} 次起点出现非有限步长")
        logger.debug(
            f"起点 {i + 1}: log p = {-result.fun:.6f}, 迭代 {result.nit}, {result.message}"
        )
        if -result.fun > best_value:
            best_value, best_theta = -result.fun, result.x

    if best_theta is None:
        raise OptimizationError("所有起点的优化均失败")

    hyper = Hyperparameters.from_log_vector(best_theta)
    model = condition(X, y, hyper, standardizer, feature_config, settings.jitter_ladder)
    logger.info(
        f"优化完成: log p = {model.log_likelihood:.6f}, σ_f² = {hyper.signal_variance:.4g}, "
        f"σ_ε² = {hyper.noise_variance:.4g}"
    )
    return model


def predict_batch(model: TrainedModel, X_star: np.ndarray, level: float = 0.95) -> PredictionBatch:
    """
    批量后验预测，复用模型中的分解

    Args:
        model: 训练好的模型
        X_star: (m, d) 原始输入
        level: 预测区间的置信水平

    Returns:
        原始单位的批量预测
    """
    X_star = np.asarray(X_star, dtype=float)
    if X_star.ndim != 2:
        raise InvalidInputError(f"预测输入必须是二维矩阵: {X_star.shape}")
    Xs = model.standardizer.transform_inputs(X_star)
    hyper = model.hyper

    K_star = gram(model.X, Xs, hyper)
    mean_z = K_star.T @ model.alpha
    v = solve_triangular(model.chol_l, K_star, lower=True, check_finite=False)
    var_z = np.maximum(hyper.signal_variance - np.sum(v * v, axis=0), 0.0)

    scaler = model.standardizer
    return PredictionBatch.from_moments(
        mean=scaler.inverse_targets(mean_z),
        variance=scaler.inverse_variance(var_z),
        noise_variance=float(scaler.inverse_variance(hyper.noise_variance)),
        level=level,
    )


def predict(model: TrainedModel, x_star: np.ndarray) -> Prediction:
    """
    单点后验预测

    Args:
        model: 训练好的模型
        x_star: 长度为 d 的原始输入向量

    Returns:
        预测结果
    """
    x_star = np.asarray(x_star, dtype=float)
    if x_star.ndim != 1 or x_star.size != model.n_inputs:
        raise InvalidInputError(f"输入维度 {x_star.shape} 与模型维度 {model.n_inputs} 不匹配")
    return predict_batch(model, x_star[None, :])[0]
