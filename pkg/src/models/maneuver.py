"""
Maneuver Model - 合成试验工况与轮胎参数
"""

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from utils.errors import InvalidConfigError

# 试验工况表
TEST_LOADS_N = (2080.0, 4160.0, 6240.0)
TEST_SPEEDS_KMH = (30.0, 60.0)
TEST_PRESSURE_KPA = 220.0
MAX_SLIP_DEG = 8.0


@dataclass(frozen=True)
class TireParams:
    """合成信号发生器常数（全部为固定的人工取值）"""

    radius_m: float = 0.3
    gravity: float = 9.81
    # Magic Formula
    mf_b: float = 0.25
    mf_c: float = 1.3
    mf_mu: float = 0.9
    mf_e: float = -0.1
    # 加速度特征
    half_width_deg: float = 12.0
    reference_load_n: float = 4160.0
    width_exponent: float = 1.0 / 3.0
    lateral_gain_g: float = 10.0
    lateral_skew: float = 0.3
    longitudinal_amplitude_g: float = 18.0
    longitudinal_reference_load_n: float = 2080.0
    longitudinal_reference_speed_kmh: float = 60.0
    rolling_offset_g: float = 1.0
    radial_dip_g: float = 20.0
    # 噪声模型
    noise_sigma_g: float = 0.5
    noise_slip_factor: float = 2.0
    noise_load_factor: float = 1.0
    noise_reference_load_n: float = 6240.0
    sample_rate_hz: float = 10000.0
    patch_center_deg: float = 180.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if name in ("mf_e", "patch_center_deg"):
                continue
            if not np.isfinite(value) or value <= 0:
                raise InvalidConfigError(f"轮胎参数 {name} 必须为正: {value}")
        if not 0.0 <= self.patch_center_deg < 360.0:
            raise InvalidConfigError(f"patch_center_deg 必须位于 [0, 360): {self.patch_center_deg}")


@dataclass(frozen=True)
class TriangularSlip:
    """三角波侧偏角: 0 -> +A -> 0 -> -A -> 0，周期以转圈计"""

    amplitude_deg: float = MAX_SLIP_DEG
    period_rotations: int = 76

    def slip_at(self, k: np.ndarray) -> np.ndarray:
        phase = np.asarray(k, dtype=float) / self.period_rotations
        return self.amplitude_deg * (1.0 - 4.0 * np.abs(np.mod(phase + 0.25, 1.0) - 0.5))


@dataclass(frozen=True)
class StepSlip:
    """阶梯侧偏角: (slip°, 保持圈数) 序列，循环使用"""

    schedule: Tuple[Tuple[float, int], ...] = ()

    def slip_at(self, k: np.ndarray) -> np.ndarray:
        levels = np.concatenate([np.full(int(hold), float(slip)) for slip, hold in self.schedule])
        return levels[np.asarray(k, dtype=np.int64) % levels.size]


SlipProfile = Union[TriangularSlip, StepSlip]


@dataclass(frozen=True)
class ManeuverSpec:
    """单个 (载荷, 速度) 工况下的试验段"""

    vertical_load: float
    speed: float
    n_rotations: int
    slip_profile: SlipProfile = field(default_factory=TriangularSlip)
    pressure: float = TEST_PRESSURE_KPA
    seed: int = 0

    def __post_init__(self):
        if self.vertical_load <= 0 or self.speed <= 0:
            raise InvalidConfigError("载荷与速度必须为正")
        if self.n_rotations < 1:
            raise InvalidConfigError(f"n_rotations 必须 >= 1: {self.n_rotations}")
        if isinstance(self.slip_profile, StepSlip):
            if not self.slip_profile.schedule or any(
                hold < 1 for _, hold in self.slip_profile.schedule
            ):
                raise InvalidConfigError("阶梯侧偏角表为空或保持圈数非法")
        elif self.slip_profile.period_rotations < 1:
            raise InvalidConfigError("三角波周期必须 >= 1 圈")
        if np.max(np.abs(self.slip_angles())) > MAX_SLIP_DEG + 1e-12:
            raise InvalidConfigError(f"侧偏角超出 ±{MAX_SLIP_DEG}°")

    def slip_angles(self) -> np.ndarray:
        """每一圈的侧偏角"""
        return self.slip_profile.slip_at(np.arange(self.n_rotations))
