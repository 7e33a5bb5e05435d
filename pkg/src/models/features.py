"""
Feature Model - 接地区窗口与速度无关的特征网格
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from models.stream import RotationLabels
from utils.errors import InvalidConfigError, InvalidInputError

AXES = "xyz"

# 研究中使用的轴组合
DEFAULT_AXIS_CONFIGS = ("y", "xy", "yz", "xz", "xyz")


def parse_axes(axes: str) -> Tuple[int, ...]:
    """
    解析轴选择字符串

    Args:
        axes: 如 "xyz"、"yz"，顺序不限，大小写不敏感

    Returns:
        升序的轴索引元组
    """
    cleaned = axes.strip().lower().replace(",", "").replace("{", "").replace("}", "")
    if not cleaned or any(c not in AXES for c in cleaned) or len(set(cleaned)) != len(cleaned):
        raise InvalidConfigError(f"非法的轴选择: {axes!r}")
    return tuple(sorted(AXES.index(c) for c in cleaned))


def axes_label(axes: str) -> str:
    """规范化的轴标签，如 "zy" -> "yz" """
    return "".join(AXES[i] for i in parse_axes(axes))


@dataclass(frozen=True)
class PatchWindow:
    """接地区窗口（编码器坐标，度）"""

    entry_b: float
    center_c: float
    exit_d: float

    @property
    def width(self) -> float:
        """B 到 D 的展开角度"""
        return (self.exit_d - self.entry_b) % 360.0


@dataclass
class PatchFeatures:
    """单圈的接地区网格: grid (n_points, 3)，angles 为编码器角度（已回绕到 [0, 360)）"""

    grid: np.ndarray
    angles: np.ndarray
    labels: RotationLabels
    rotation_id: int
    step: float
    half_span: float

    @property
    def n_points(self) -> int:
        return self.grid.shape[0]

    def flatten(self, axes: str = AXES) -> np.ndarray:
        """按轴优先顺序展开（先全部 Ac_x，再 Ac_y，再 Ac_z）"""
        return self.grid[:, list(parse_axes(axes))].T.reshape(-1)


@dataclass
class FeatureTable:
    """
    多圈特征集合

    grids (N, n_points, 3)，labels (N, 4) 列为 Fy, Fz, slip, speed
    """

    rotation_ids: np.ndarray
    grids: np.ndarray
    labels: np.ndarray
    step: float
    half_span: float

    def __post_init__(self):
        self.rotation_ids = np.asarray(self.rotation_ids, dtype=np.int64)
        self.grids = np.asarray(self.grids, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float).reshape(-1, 4)
        if self.grids.ndim != 3 or self.grids.shape[2] != 3:
            raise InvalidInputError(f"特征网格形状错误: {self.grids.shape}")
        if not (len(self.rotation_ids) == len(self.grids) == len(self.labels)):
            raise InvalidInputError("特征表各字段行数不一致")

    def __len__(self) -> int:
        return len(self.rotation_ids)

    @property
    def n_points(self) -> int:
        return self.grids.shape[1]

    @property
    def fy(self) -> np.ndarray:
        return self.labels[:, 0]

    @property
    def fz(self) -> np.ndarray:
        return self.labels[:, 1]

    @property
    def slip(self) -> np.ndarray:
        return self.labels[:, 2]

    @property
    def speed(self) -> np.ndarray:
        return self.labels[:, 3]

    @property
    def relative_angles(self) -> np.ndarray:
        """相对接地区中心的网格角度"""
        return -self.half_span + self.step * np.arange(self.n_points)

    @classmethod
    def from_features(cls, features: Sequence[PatchFeatures]) -> "FeatureTable":
        """由单圈特征列表构造"""
        if not features:
            raise InvalidInputError("特征列表为空")
        first = features[0]
        return cls(
            rotation_ids=[f.rotation_id for f in features],
            grids=np.stack([f.grid for f in features]),
            labels=[f.labels.as_tuple() for f in features],
            step=first.step,
            half_span=first.half_span,
        )

    @classmethod
    def empty(cls, n_points: int, step: float, half_span: float) -> "FeatureTable":
        return cls(
            rotation_ids=np.empty(0, dtype=np.int64),
            grids=np.empty((0, n_points, 3)),
            labels=np.empty((0, 4)),
            step=step,
            half_span=half_span,
        )

    def design_matrix(self, axes: str = AXES) -> np.ndarray:
        """
        构造回归输入矩阵

        Args:
            axes: 使用的轴

        Returns:
            (N, len(axes) * n_points)，轴优先排列
        """
        index = list(parse_axes(axes))
        selected = self.grids[:, :, index]
        return selected.transpose(0, 2, 1).reshape(len(self), len(index) * self.n_points)

    def subset(self, index: np.ndarray) -> "FeatureTable":
        return FeatureTable(
            rotation_ids=self.rotation_ids[index],
            grids=self.grids[index],
            labels=self.labels[index],
            step=self.step,
            half_span=self.half_span,
        )

    @classmethod
    def concat(cls, tables: Sequence["FeatureTable"]) -> "FeatureTable":
        """按行拼接网格一致的特征表，rotation_id 顺延编号"""
        if not tables:
            raise InvalidInputError("特征表列表为空")
        first = tables[0]
        ids, offset = [], 0
        for table in tables:
            if table.n_points != first.n_points or not np.isclose(table.step, first.step):
                raise InvalidInputError("拼接的特征表网格不一致")
            ids.append(table.rotation_ids - (table.rotation_ids.min() if len(table) else 0) + offset)
            offset = int(ids[-1].max()) + 1 if len(table) else offset
        return cls(
            rotation_ids=np.concatenate(ids),
            grids=np.concatenate([t.grids for t in tables]),
            labels=np.concatenate([t.labels for t in tables]),
            step=first.step,
            half_span=first.half_span,
        )
