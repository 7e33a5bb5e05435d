"""
Report Model - 评估与研究结果
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from models.gp_model import PredictionBatch


@dataclass(frozen=True)
class MetricsReport:
    """预测精度指标，coverage_95 为 level 对称区间（缺省 95%）的覆盖率"""

    nrmse: float  # %
    pearson_r: float
    mean_abs_err: float  # N
    coverage_95: float
    n: int
    level: float = 0.95

    def as_dict(self) -> Dict[str, float]:
        return {
            "nrmse_pct": self.nrmse,
            "pearson_r": self.pearson_r,
            "mean_abs_err_N": self.mean_abs_err,
            "coverage_95": self.coverage_95,
            "n": self.n,
            "level": self.level,
        }


@dataclass(frozen=True)
class StudyResult:
    """某一配置在多次交叉验证重复下的 NRMSE 分布（箱线图统计量）"""

    label: str
    values: np.ndarray
    n_inputs: int

    @property
    def repetitions(self) -> int:
        return self.values.size

    def quartiles(self) -> np.ndarray:
        # 线性插值的 Tukey 四分位
        return np.percentile(self.values, [0, 25, 50, 75, 100], method="linear")

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values, ddof=1)) if self.values.size > 1 else 0.0

    def summary(self) -> Dict[str, float]:
        lo, q1, med, q3, hi = self.quartiles()
        return {
            "config": self.label,
            "n_inputs": self.n_inputs,
            "repetitions": self.repetitions,
            "min": float(lo),
            "q1": float(q1),
            "median": float(med),
            "q3": float(q3),
            "max": float(hi),
            "mean": self.mean,
            "std": self.std,
        }


@dataclass(frozen=True)
class SlipBinError:
    """某一侧偏角区间内的绝对误差统计"""

    lower: float
    upper: float
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class LatencyReport:
    """单点预测耗时（秒）"""

    mean: float
    std: float
    repeats: int
    n_points: int
    n_train: int


@dataclass(frozen=True)
class CorrelationProfile:
    """每个测点、每个轴与侧向力的 Pearson 相关系数，r 形状 (3, n_points)"""

    angles: np.ndarray
    r: np.ndarray
    n_rotations: int

    @property
    def max_abs(self) -> np.ndarray:
        """各轴的最大 |r|"""
        return np.max(np.abs(self.r), axis=1)


@dataclass(frozen=True)
class OutOfFoldResult:
    """k 折交叉验证的折外预测，按数据集原始顺序排列"""

    rotation_ids: np.ndarray
    truth: np.ndarray
    slip: np.ndarray
    fold: np.ndarray
    predictions: PredictionBatch
    fold_nrmse: np.ndarray


@dataclass(frozen=True)
class SlipProfiles:
    """按侧偏角水平分组的平均加速度网格，means 形状 (levels, n_points, 3)"""

    levels: np.ndarray
    relative_angles: np.ndarray
    means: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class PredictionRecords:
    """逐圈预测记录，labels 列为 Fy, Fz, slip, speed"""

    rotation_ids: np.ndarray
    labels: np.ndarray
    predictions: PredictionBatch

    def __len__(self) -> int:
        return self.rotation_ids.size

    @property
    def truth(self) -> np.ndarray:
        return self.labels[:, 0]

    @property
    def slip(self) -> np.ndarray:
        return self.labels[:, 2]
