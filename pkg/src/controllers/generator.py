"""
Synthetic Generator - 平板试验台的确定性替代
Magic Formula 侧向力 + 参数化的内衬加速度特征
"""

from typing import List, Optional, Tuple

import numpy as np

from models.maneuver import (
    MAX_SLIP_DEG,
    TEST_LOADS_N,
    TEST_SPEEDS_KMH,
    ManeuverSpec,
    StepSlip,
    TireParams,
    TriangularSlip,
)
from models.stream import RawRevolution, RawStream, RotationLabels
from utils.errors import InvalidConfigError
from utils.logger import Logger

logger = Logger.get_logger("Generator")

DATASET_ROTATIONS = {1: 912, 2: 3552}

# 数据集 2 的阶梯侧偏角（度），每个工况按此顺序各保持若干圈
STEP_LEVELS_DEG = (1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 6, -6, 7, -7, 8, -8)


def magic_formula_fy(slip, fz: float, params: TireParams = TireParams()):
    """
    Magic Formula 侧向力，正侧偏角产生负侧向力

    Args:
        slip: 侧偏角（度，标量或数组）
        fz: 垂向载荷（N）
        params: 轮胎参数

    Returns:
        侧向力（N）
    """
    if not fz > 0:
        raise InvalidConfigError(f"垂向载荷必须为正: {fz}")
    b_alpha = params.mf_b * np.asarray(slip, dtype=float)
    inner = b_alpha - params.mf_e * (b_alpha - np.arctan(b_alpha))
    fy = -params.mf_mu * fz * np.sin(params.mf_c * np.arctan(inner))
    return float(fy) if np.ndim(fy) == 0 else fy


def patch_half_width(fz: float, params: TireParams) -> float:
    """接地区半宽随载荷按 Fz^(1/3) 增长"""
    return params.half_width_deg * (fz / params.reference_load_n) ** params.width_exponent


def noise_sigma(slip: float, fz: float, params: TireParams) -> float:
    """噪声标准差随侧偏角与载荷增大"""
    return params.noise_sigma_g * (
        1.0
        + params.noise_slip_factor * abs(slip) / MAX_SLIP_DEG
        + params.noise_load_factor * fz / params.noise_reference_load_n
    )


def synth_revolution(
    state: Tuple[float, float, float],
    params: TireParams = TireParams(),
    rng: Optional[np.random.Generator] = None,
    rotation_index: int = 0,
) -> RawRevolution:
    """
    生成一圈加速度信号

    Args:
        state: (侧偏角°, 垂向载荷 N, 速度 km/h)
        params: 轮胎参数
        rng: 随机数发生器，为 None 时不加噪声
        rotation_index: 圈序号

    Returns:
        从编码器 0° 开始的完整一圈
    """
    slip, fz, speed = state
    if abs(slip) > MAX_SLIP_DEG or fz <= 0 or speed <= 0:
        raise InvalidConfigError(f"非法工况: slip={slip}, Fz={fz}, speed={speed}")

    v = speed / 3.6
    deg_per_sample = np.degrees(v / params.radius_m) / params.sample_rate_hz
    n = int(np.ceil(360.0 / deg_per_sample))
    encoder = deg_per_sample * np.arange(n)
    time = np.arange(n) / params.sample_rate_hz

    half_width = patch_half_width(fz, params)
    theta = np.mod(encoder - params.patch_center_deg + 180.0, 360.0) - 180.0
    inside = np.abs(theta) <= half_width
    phase = np.pi * theta / half_width
    w = np.where(inside, 0.5 * (1.0 + np.cos(phase)), 0.0)

    fy = magic_formula_fy(slip, fz, params)
    centripetal = v**2 / (params.gravity * params.radius_m)
    radial_dip = params.radial_dip_g * fz / params.reference_load_n
    amplitude_x = (
        params.longitudinal_amplitude_g
        * (fz / params.longitudinal_reference_load_n)
        * (speed / params.longitudinal_reference_speed_kmh) ** 2
    )

    acc_x = amplitude_x * np.sin(phase) * w + params.rolling_offset_g * w
    # 正侧偏角 -> 负侧向力 -> 负侧向加速度
    acc_y = (fy / fz) * params.lateral_gain_g * w * (1.0 + params.lateral_skew * theta / half_width)
    acc_z = centripetal - (centripetal + radial_dip) * w
    acc = np.column_stack([acc_x, acc_y, acc_z])

    if rng is not None:
        acc = acc + rng.normal(0.0, noise_sigma(slip, fz, params), size=acc.shape)

    return RawRevolution(
        time=time,
        encoder=encoder,
        acc=acc,
        labels=RotationLabels(fy=fy, fz=fz, slip=float(slip), speed=speed),
        rotation_index=rotation_index,
        sample_rate=params.sample_rate_hz,
        meta={"patch_center_deg": params.patch_center_deg, "half_width_deg": half_width},
    )


def generate_maneuver(
    spec: ManeuverSpec, params: TireParams = TireParams(), noise: bool = True
) -> RawStream:
    """
    生成单个工况的连续流，每圈使用由 spec.seed 派生的独立随机数

    Args:
        spec: 工况
        params: 轮胎参数
        noise: 是否加噪声

    Returns:
        连续原始流
    """
    slips = spec.slip_angles()
    children = np.random.SeedSequence(spec.seed).spawn(spec.n_rotations)
    revolutions: List[RawStream] = []
    for k, (slip, child) in enumerate(zip(slips, children)):
        rng = np.random.default_rng(child) if noise else None
        rev = synth_revolution((float(slip), spec.vertical_load, spec.speed), params, rng, k)
        revolutions.append(rev.to_stream())
    return RawStream.concat(revolutions)


def dataset_maneuvers(which: int, seed: int) -> List[ManeuverSpec]:
    """
    数据集的 6 个 (载荷, 速度) 工况，圈数均分

    Args:
        which: 1（三角波扫角）或 2（阶梯保持）
        seed: 顶层种子

    Returns:
        工况列表
    """
    if which not in DATASET_ROTATIONS:
        raise InvalidConfigError(f"数据集只能是 1 或 2: {which}")
    combos = [(load, speed) for load in TEST_LOADS_N for speed in TEST_SPEEDS_KMH]
    per_combo = DATASET_ROTATIONS[which] // len(combos)
    seeds = np.random.SeedSequence(seed).generate_state(len(combos))

    if which == 1:
        # 每个工况两个完整三角波周期
        profile = TriangularSlip(amplitude_deg=MAX_SLIP_DEG, period_rotations=per_combo // 2)
    else:
        hold = per_combo // len(STEP_LEVELS_DEG)
        profile = StepSlip(schedule=tuple((float(s), hold) for s in STEP_LEVELS_DEG))

    return [
        ManeuverSpec(
            vertical_load=load,
            speed=speed,
            n_rotations=per_combo,
            slip_profile=profile,
            seed=int(s),
        )
        for (load, speed), s in zip(combos, seeds)
    ]


def generate_dataset(
    which: int, params: TireParams = TireParams(), seed: int = 0, noise: bool = True
) -> RawStream:
    """
    生成数据集 1（912 圈）或数据集 2（3552 圈）

    Args:
        which: 数据集编号
        params: 轮胎参数
        seed: 顶层种子
        noise: 是否加噪声

    Returns:
        全部工况首尾相接的原始流
    """
    maneuvers = dataset_maneuvers(which, seed)
    logger.info(f"生成数据集 {which}: {len(maneuvers)} 个工况, 共 {DATASET_ROTATIONS[which]} 圈")
    streams = []
    for spec in maneuvers:
        logger.debug(f"工况 Fz={spec.vertical_load:g} N, v={spec.speed:g} km/h")
        streams.append(generate_maneuver(spec, params, noise))
    return RawStream.concat(streams)
