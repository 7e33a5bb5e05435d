"""
Signal Processor - 加速度信号预处理
低通滤波、按编码器分圈、接地区检测、角度域重采样
"""

from typing import Callable, List, Optional

import numpy as np
from scipy.signal import butter, sosfilt, sosfilt_zi

from models.features import FeatureTable, PatchFeatures, PatchWindow
from models.settings import FilterSettings, PatchSettings
from models.stream import RawRevolution, RawStream, RotationLabels
from utils.errors import (
    InvalidConfigError,
    InvalidDataError,
    InvalidWindowError,
    PatchDetectionError,
)
from utils.logger import Logger

logger = Logger.get_logger("SignalProcessor")

# 窗口内相邻样本的最大间隔，以编码器中位步长计
MAX_GAP_FACTOR = 4.0


def butterworth_lowpass(
    channel: np.ndarray, sample_rate: float, cutoff: float, order: int
) -> np.ndarray:
    """
    因果 Butterworth 低通滤波（二阶节级联，双线性变换含频率预畸变）

    滤波器状态以首个样本的稳态初始化

    Args:
        channel: 单通道信号（g）
        sample_rate: 采样率（Hz）
        cutoff: 截止频率（Hz）
        order: 阶数

    Returns:
        等长的滤波结果
    """
    if sample_rate <= 0 or not 0 < cutoff < sample_rate / 2:
        raise InvalidConfigError(
            f"截止频率 {cutoff} Hz 必须位于 (0, {sample_rate / 2}) Hz（奈奎斯特频率）"
        )
    if int(order) != order or order < 1:
        raise InvalidConfigError(f"滤波器阶数必须为正整数: {order}")
    channel = np.asarray(channel, dtype=float)
    if channel.ndim != 1 or channel.size == 0:
        raise InvalidDataError("通道必须是非空一维序列")
    if not np.all(np.isfinite(channel)):
        raise InvalidDataError("通道包含非有限值")

    sos = butter(int(order), cutoff, btype="low", output="sos", fs=sample_rate)
    filtered, _ = sosfilt(sos, channel, zi=sosfilt_zi(sos) * channel[0])
    return filtered


def segment_revolutions(stream: RawStream) -> List[RawRevolution]:
    """
    按编码器回绕切分整圈，首尾不完整的圈被丢弃

    Args:
        stream: 原始流

    Returns:
        完整圈列表
    """
    n = len(stream)
    if n < 2:
        return []
    encoder = stream.encoder
    if np.any(encoder < 0) or np.any(encoder >= 360.0):
        raise InvalidDataError("编码器角度必须位于 [0, 360)")

    diffs = np.diff(encoder)
    wraps = diffs < -180.0
    backwards = np.flatnonzero((diffs < 0) & ~wraps)
    if backwards.size:
        raise InvalidDataError(f"编码器在样本 {int(backwards[0]) + 1} 处非单调")

    boundaries = list(np.flatnonzero(wraps) + 1)
    if encoder[0] == 0.0:
        boundaries.insert(0, 0)
    # 末圈: 下一个样本将回绕时视为完整
    step = float(np.median(diffs[~wraps])) if np.any(~wraps) else 0.0
    if boundaries and encoder[-1] + step >= 360.0:
        boundaries.append(n)

    revolutions = []
    for start, stop in zip(boundaries[:-1], boundaries[1:]):
        revolutions.append(
            RawRevolution(
                time=stream.time[start:stop],
                encoder=encoder[start:stop],
                acc=stream.acc[start:stop],
                labels=RotationLabels(*stream.labels[start]),
                rotation_index=int(stream.rotation_id[start]),
                sample_rate=stream.sample_rate,
            )
        )
    logger.debug(f"切分出 {len(revolutions)} 个完整圈（共 {n} 个样本）")
    return revolutions


def detect_contact_patch(rev: RawRevolution, max_width: float = 70.0) -> PatchWindow:
    """
    由纵向加速度定位接地区: 入口 B 为全局最小值，出口 D 为 B 之后 max_width 内的最大值

    Args:
        rev: 已滤波的单圈
        max_width: 最大接地区宽度（度）

    Returns:
        接地区窗口
    """
    acc_x = rev.acc[:, 0]
    if acc_x.size == 0 or np.ptp(acc_x) == 0:
        raise PatchDetectionError("纵向加速度为常数，无法定位峰值", rev.rotation_index)

    i_min = int(np.argmin(acc_x))
    entry = float(rev.encoder[i_min])
    ahead = np.mod(rev.encoder - entry, 360.0)
    candidates = np.flatnonzero((ahead > 0) & (ahead <= max_width))
    if candidates.size == 0:
        raise PatchDetectionError(f"最小值之后 {max_width}° 内没有样本", rev.rotation_index)

    i_max = int(candidates[np.argmax(acc_x[candidates])])
    if acc_x[i_max] <= acc_x[i_min]:
        raise PatchDetectionError(f"最小值之后 {max_width}° 内没有峰值", rev.rotation_index)

    width = float(ahead[i_max])
    return PatchWindow(
        entry_b=entry,
        center_c=float(np.mod(entry + width / 2.0, 360.0)),
        exit_d=float(rev.encoder[i_max]),
    )


def resample_patch(
    rev: RawRevolution, window: PatchWindow, half_span: float = 35.0, step: float = 0.5
) -> PatchFeatures:
    """
    以接地区中心为基准，在角度域线性插值得到固定网格

    Args:
        rev: 单圈数据
        window: 接地区窗口
        half_span: 半跨度（度）
        step: 网格间距（度）

    Returns:
        2·half_span/step 个点的特征网格
    """
    n_points = int(round(2.0 * half_span / step))
    if step <= 0 or half_span <= 0 or not np.isclose(n_points * step, 2.0 * half_span):
        raise InvalidConfigError(f"步长 {step}° 不能整除跨度 {2 * half_span}°")

    # 相对中心展开到 [-180, 180)
    relative = np.mod(rev.encoder - window.center_c + 180.0, 360.0) - 180.0
    order = np.argsort(relative, kind="stable")
    relative = relative[order]
    grid_rel = -half_span + step * np.arange(n_points)
    if relative.size < 2 or relative[0] > grid_rel[0] or relative[-1] < grid_rel[-1]:
        raise InvalidWindowError(
            f"转圈 {rev.rotation_index}: 请求的 ±{half_span}° 超出数据覆盖范围"
        )
    # 网格两端各带一个相邻样本，中间不能有缺口
    lo = np.searchsorted(relative, grid_rel[0], side="right") - 1
    hi = np.searchsorted(relative, grid_rel[-1], side="left")
    gap = float(np.max(np.diff(relative[lo : hi + 1]), initial=0.0))
    spacing = np.diff(relative)
    if gap > MAX_GAP_FACTOR * float(np.median(spacing[spacing > 0])):
        raise InvalidWindowError(
            f"转圈 {rev.rotation_index}: ±{half_span}° 窗口内有 {gap:.3g}° 的数据缺口"
        )

    acc = rev.acc[order]
    grid = np.column_stack([np.interp(grid_rel, relative, acc[:, axis]) for axis in range(3)])
    return PatchFeatures(
        grid=grid,
        angles=np.mod(window.center_c + grid_rel, 360.0),
        labels=rev.labels,
        rotation_id=rev.rotation_index,
        step=step,
        half_span=half_span,
    )


def _resolution_ratio(base_step: float, n_points: int, step: float) -> int:
    ratio = int(round(step / base_step))
    if step <= 0 or ratio < 1 or not np.isclose(ratio * base_step, step) or n_points % ratio:
        raise InvalidConfigError(
            f"分辨率 {step}° 必须是 {base_step}° 的整数倍且能整除 {n_points * base_step}°"
        )
    return ratio


def downsample_resolution(features: PatchFeatures, step: float) -> PatchFeatures:
    """
    降低接地区分辨率，每 step/0.5 个点保留一个

    Args:
        features: 原始分辨率特征
        step: 目标分辨率（度）

    Returns:
        降采样后的特征
    """
    ratio = _resolution_ratio(features.step, features.n_points, step)
    return PatchFeatures(
        grid=features.grid[::ratio],
        angles=features.angles[::ratio],
        labels=features.labels,
        rotation_id=features.rotation_id,
        step=features.step * ratio,
        half_span=features.half_span,
    )


def downsample_table(table: FeatureTable, step: float) -> FeatureTable:
    """对整张特征表降采样"""
    ratio = _resolution_ratio(table.step, table.n_points, step)
    return FeatureTable(
        rotation_ids=table.rotation_ids,
        grids=table.grids[:, ::ratio, :],
        labels=table.labels,
        step=table.step * ratio,
        half_span=table.half_span,
    )


class FeatureExtractor:
    """原始流 -> 特征表的完整预处理链"""

    def __init__(
        self,
        filter_settings: FilterSettings = FilterSettings(),
        patch_settings: PatchSettings = PatchSettings(),
        progress_callback: Optional[Callable[[int, int], None]] = None,
    ) -> None:
        """
        初始化预处理器

        Args:
            filter_settings: 低通滤波参数
            patch_settings: 接地区参数
            progress_callback: 进度回调函数 (当前圈, 总圈数)
        """
        self.filter_settings = filter_settings
        self.patch_settings = patch_settings
        self.progress_callback = progress_callback

    def filter_stream(self, stream: RawStream) -> RawStream:
        """三个通道分别低通滤波"""
        if len(stream) == 0:
            return stream
        acc = np.column_stack(
            [
                butterworth_lowpass(
                    stream.acc[:, axis],
                    stream.sample_rate,
                    self.filter_settings.cutoff_hz,
                    self.filter_settings.order,
                )
                for axis in range(3)
            ]
        )
        return stream.with_acc(acc)

    def extract(self, stream: RawStream) -> FeatureTable:
        """
        滤波 -> 分圈 -> 检测接地区 -> 重采样

        Args:
            stream: 原始流

        Returns:
            特征表（原始 0.5° 分辨率）
        """
        patch = self.patch_settings
        n_points = int(round(2.0 * patch.half_span_deg / patch.step_deg))
        revolutions = segment_revolutions(self.filter_stream(stream))
        logger.info(f"开始提取特征: {len(revolutions)} 圈")
        if not revolutions:
            return FeatureTable.empty(n_points, patch.step_deg, patch.half_span_deg)

        features = []
        total = len(revolutions)
        for i, rev in enumerate(revolutions):
            window = detect_contact_patch(rev, patch.max_width_deg)
            features.append(resample_patch(rev, window, patch.half_span_deg, patch.step_deg))
            if self.progress_callback and i % max(1, total // 20) == 0:
                self.progress_callback(i + 1, total)

        if self.progress_callback:
            self.progress_callback(total, total)
        logger.info(f"特征提取完成: {total} 圈 × {n_points} 点 × 3 轴")
        return FeatureTable.from_features(features)

