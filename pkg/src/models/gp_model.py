"""
GP Model - 高斯过程回归的数据类型
超参数、标准化器、训练好的模型与预测结果
"""

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy import stats

from utils.errors import (
    InvalidConfigError,
    InvalidDataError,
    InvalidHyperparameterError,
    InvalidInputError,
)


def interval_z(level: float = 0.95) -> float:
    """对称 level 区间的标准正态分位数，0.95 对应 1.96"""
    if not 0.0 < level < 1.0:
        raise InvalidConfigError(f"置信水平必须位于 (0, 1): {level}")
    return float(stats.norm.ppf(0.5 + level / 2.0))


@dataclass(frozen=True)
class Hyperparameters:
    """核与噪声超参数 {σ_f², l, σ_ε²}；length_scales 长度为 1（各向同性）或 d（ARD）"""

    signal_variance: float
    length_scales: np.ndarray
    noise_variance: float

    def __post_init__(self):
        scales = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", scales)
        if scales.ndim != 1 or scales.size == 0:
            raise InvalidHyperparameterError("length_scales 必须是非空向量")
        values = np.concatenate([[self.signal_variance, self.noise_variance], scales])
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise InvalidHyperparameterError(f"超参数必须全部为正: {values.tolist()}")

    @property
    def is_ard(self) -> bool:
        return self.length_scales.size > 1

    def check_dimension(self, d: int) -> None:
        if self.length_scales.size not in (1, d):
            raise InvalidInputError(
                f"length_scales 长度 {self.length_scales.size} 与输入维度 {d} 不匹配"
            )

    def to_log_vector(self) -> np.ndarray:
        """对数空间向量 [log σ_f², log l_1..l_k, log σ_ε²]"""
        return np.log(
            np.concatenate([[self.signal_variance], self.length_scales, [self.noise_variance]])
        )

    @classmethod
    def from_log_vector(cls, theta: np.ndarray) -> "Hyperparameters":
        values = np.exp(np.asarray(theta, dtype=float))
        return cls(
            signal_variance=float(values[0]),
            length_scales=values[1:-1],
            noise_variance=float(values[-1]),
        )


@dataclass(frozen=True)
class Standardizer:
    """
    z-score 标准化器

    方差为零的输入列被标记并丢弃（active 为保留列掩码）
    """

    input_mean: np.ndarray
    input_std: np.ndarray
    active: np.ndarray
    target_mean: float
    target_std: float

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray) -> "Standardizer":
        """
        由训练数据估计均值和标准差

        Args:
            X: (n, d) 原始输入
            y: (n,) 原始目标

        Returns:
            标准化器
        """
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        target_std = float(np.std(y))
        if not np.isfinite(target_std) or target_std == 0.0:
            raise InvalidDataError("目标值方差为零，无法标准化")
        input_std = np.std(X, axis=0)
        active = input_std > 0
        if not np.any(active):
            raise InvalidDataError("所有输入列方差为零")
        return cls(
            input_mean=np.mean(X, axis=0),
            input_std=np.where(active, input_std, 1.0),
            active=active,
            target_mean=float(np.mean(y)),
            target_std=target_std,
        )

    @classmethod
    def identity(cls, d: int) -> "Standardizer":
        """不做变换的标准化器"""
        return cls(
            input_mean=np.zeros(d),
            input_std=np.ones(d),
            active=np.ones(d, dtype=bool),
            target_mean=0.0,
            target_std=1.0,
        )

    @property
    def n_inputs(self) -> int:
        """原始输入维度"""
        return self.input_mean.size

    def transform_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_inputs:
            raise InvalidInputError(f"输入维度 {X.shape[1]} 与模型维度 {self.n_inputs} 不匹配")
        return ((X - self.input_mean) / self.input_std)[:, self.active]

    def transform_targets(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_std

    def inverse_targets(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.target_std + self.target_mean

    def inverse_variance(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) * self.target_std**2


@dataclass(frozen=True)
class FeatureConfig:
    """模型对应的特征配置"""

    axes: str = "xyz"
    resolution_deg: float = 5.0
    half_span_deg: float = 35.0

    def as_dict(self) -> dict:
        return {
            "axes": self.axes,
            "resolution_deg": self.resolution_deg,
            "half_span_deg": self.half_span_deg,
        }


@dataclass(frozen=True)
class TrainedModel:
    """
    训练完成的 GPR 模型，创建后不可变

    X/y 为标准化后的训练数据，chol_l 为 K + (σ_ε² + jitter)·I 的下三角因子，
    alpha 为 (K + σ_ε²·I)·alpha = y 的解
    """

    X: np.ndarray
    y: np.ndarray
    hyper: Hyperparameters
    chol_l: np.ndarray
    alpha: np.ndarray
    standardizer: Standardizer
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    log_likelihood: float = float("nan")
    jitter: float = 0.0

    @property
    def n_train(self) -> int:
        return self.X.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.standardizer.n_inputs


@dataclass(frozen=True)
class Prediction:
    """单点预测（原始单位: N 与 N²）"""

    mean: float
    variance: float
    predictive_variance: float
    lower: float
    upper: float

    @property
    def interval_95(self) -> tuple:
        """(lower, upper)，置信水平由构造时的 level 决定"""
        return (self.lower, self.upper)


@dataclass(frozen=True)
class PredictionBatch:
    """批量预测，以数组保存，可按下标取出 Prediction"""

    mean: np.ndarray
    variance: np.ndarray
    predictive_variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_moments(
        cls, mean: np.ndarray, variance: np.ndarray, noise_variance: float, level: float = 0.95
    ) -> "PredictionBatch":
        """由均值、f* 方差和观测噪声方差构造 level 对称区间"""
        mean = np.asarray(mean, dtype=float)
        variance = np.asarray(variance, dtype=float)
        predictive = variance + noise_variance
        half_width = interval_z(level) * np.sqrt(predictive)
        return cls(
            mean=mean,
            variance=variance,
            predictive_variance=predictive,
            lower=mean - half_width,
            upper=mean + half_width,
        )

    @classmethod
    def concat(cls, batches: list, order: Optional[np.ndarray] = None) -> "PredictionBatch":
        """拼接多个批次，可选按 order 重排"""
        fields = {}
        for name in ("mean", "variance", "predictive_variance", "lower", "upper"):
            values = np.concatenate([getattr(b, name) for b in batches])
            fields[name] = values if order is None else values[order]
        return cls(**fields)

    def __len__(self) -> int:
        return self.mean.size

    def __getitem__(self, i: int) -> Prediction:
        return Prediction(
            mean=float(self.mean[i]),
            variance=float(self.variance[i]),
            predictive_variance=float(self.predictive_variance[i]),
            lower=float(self.lower[i]),
            upper=float(self.upper[i]),
        )

    def __iter__(self) -> Iterator[Prediction]:
        for i in range(len(self)):
            yield self[i]
