"""
Stream Model - 原始加速度流与单圈数据
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from utils.errors import InvalidDataError

DEFAULT_SAMPLE_RATE = 10000.0

# 每个样本携带的标签列顺序
LABEL_COLUMNS = ("Fy_N", "Fz_N", "slip_deg", "speed_kmh")


@dataclass(frozen=True)
class RotationLabels:
    """单圈标签: 侧向力、垂向载荷、侧偏角、速度"""

    fy: float
    fz: float
    slip: float
    speed: float

    def as_tuple(self) -> tuple:
        return (self.fy, self.fz, self.slip, self.speed)


@dataclass
class RawStream:
    """
    原始三轴加速度流（单位 g）

    所有数组按样本对齐: time (n,), encoder (n,), acc (n, 3),
    rotation_id (n,), labels (n, 4) 列顺序见 LABEL_COLUMNS
    """

    time: np.ndarray
    encoder: np.ndarray
    acc: np.ndarray
    rotation_id: np.ndarray
    labels: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.encoder = np.asarray(self.encoder, dtype=float)
        self.acc = np.asarray(self.acc, dtype=float).reshape(-1, 3)
        self.rotation_id = np.asarray(self.rotation_id, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=float).reshape(-1, 4)

        if self.sample_rate <= 0:
            raise InvalidDataError(f"采样率必须为正: {self.sample_rate}")
        n = len(self.time)
        lengths = {len(self.encoder), len(self.acc), len(self.rotation_id), len(self.labels)}
        if lengths != {n}:
            raise InvalidDataError(f"通道长度不一致: time={n}, 其他={sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.time)

    @classmethod
    def empty(cls, sample_rate: float = DEFAULT_SAMPLE_RATE) -> "RawStream":
        return cls(
            time=np.empty(0),
            encoder=np.empty(0),
            acc=np.empty((0, 3)),
            rotation_id=np.empty(0, dtype=np.int64),
            labels=np.empty((0, 4)),
            sample_rate=sample_rate,
        )

    @classmethod
    def concat(cls, streams: Sequence["RawStream"]) -> "RawStream":
        """
        首尾拼接多段流，时间连续平移，rotation_id 顺延编号

        Args:
            streams: 采样率相同的流

        Returns:
            拼接后的流
        """
        if not streams:
            return cls.empty()

        sample_rate = streams[0].sample_rate
        times, rotation_ids = [], []
        t_offset = 0.0
        id_offset = 0
        for stream in streams:
            if stream.sample_rate != sample_rate:
                raise InvalidDataError("拼接的流采样率不一致")
            if len(stream) == 0:
                continue
            times.append(stream.time - stream.time[0] + t_offset)
            t_offset = times[-1][-1] + 1.0 / sample_rate
            rotation_ids.append(stream.rotation_id - stream.rotation_id.min() + id_offset)
            id_offset = rotation_ids[-1].max() + 1

        non_empty = [s for s in streams if len(s)]
        if not non_empty:
            return cls.empty(sample_rate)
        return cls(
            time=np.concatenate(times),
            encoder=np.concatenate([s.encoder for s in non_empty]),
            acc=np.concatenate([s.acc for s in non_empty]),
            rotation_id=np.concatenate(rotation_ids),
            labels=np.concatenate([s.labels for s in non_empty]),
            sample_rate=sample_rate,
        )

    def with_acc(self, acc: np.ndarray) -> "RawStream":
        """返回替换加速度通道后的新流"""
        return RawStream(
            time=self.time,
            encoder=self.encoder,
            acc=acc,
            rotation_id=self.rotation_id,
            labels=self.labels,
            sample_rate=self.sample_rate,
        )


@dataclass
class RawRevolution:
    """一个编码器整圈内的数据"""

    time: np.ndarray
    encoder: np.ndarray
    acc: np.ndarray
    labels: RotationLabels
    rotation_index: int
    sample_rate: float = DEFAULT_SAMPLE_RATE
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.encoder)

    def to_stream(self) -> RawStream:
        n = len(self)
        return RawStream(
            time=self.time,
            encoder=self.encoder,
            acc=self.acc,
            rotation_id=np.full(n, self.rotation_index, dtype=np.int64),
            labels=np.tile(np.asarray(self.labels.as_tuple(), dtype=float), (n, 1)),
            sample_rate=self.sample_rate,
        )
