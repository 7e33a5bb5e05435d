"""
Settings - 各流程的类型化参数
由 utils.config.PipelineConfig 生成，也可在代码中直接构造
"""

from dataclasses import dataclass
from typing import Tuple


@dataclass(frozen=True)
class FilterSettings:
    """低通滤波参数"""

    cutoff_hz: float = 400.0
    order: int = 5


@dataclass(frozen=True)
class PatchSettings:
    """接地区提取与重采样参数"""

    half_span_deg: float = 35.0
    step_deg: float = 0.5
    max_width_deg: float = 70.0


@dataclass(frozen=True)
class GprSettings:
    """高斯过程超参数优化参数"""

    restarts: int = 5
    init_signal_variance: float = 1.0
    init_length_scale: float = 1.0
    init_noise_variance: float = 0.1
    ard: bool = True
    max_iterations: int = 200
    tolerance: float = 1e-6
    jitter_ladder: Tuple[float, ...] = (1e-10, 1e-8, 1e-6)
    log_bound: float = 12.0
    restart_spread: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class EvalSettings:
    """交叉验证与研究参数"""

    repetitions: int = 20
    train_fraction: float = 0.7
    folds: int = 5
    slip_filter_deg: float = 6.0
    bin_width_deg: float = 1.0
    slip_range_deg: float = 8.0
    level: float = 0.95
    resolution_deg: float = 5.0
    axes: str = "xyz"
    workers: int = 1
