"""
测试配置
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加 src 目录到 Python 路径
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from models.features import FeatureTable  # noqa: E402
from models.maneuver import ManeuverSpec, TireParams, TriangularSlip  # noqa: E402
from models.settings import GprSettings  # noqa: E402

# 单元测试用的快速优化参数
FAST_GPR = GprSettings(restarts=1, max_iterations=40)


@pytest.fixture
def fast_gpr() -> GprSettings:
    return FAST_GPR


@pytest.fixture(scope="session")
def tire_params() -> TireParams:
    return TireParams()


@pytest.fixture(scope="session")
def small_maneuver() -> ManeuverSpec:
    """40 圈、一个完整三角波周期的小工况"""
    return ManeuverSpec(
        vertical_load=4160.0,
        speed=60.0,
        n_rotations=40,
        slip_profile=TriangularSlip(amplitude_deg=8.0, period_rotations=40),
        seed=11,
    )


@pytest.fixture(scope="session")
def small_stream(small_maneuver, tire_params):
    from controllers.generator import generate_maneuver

    return generate_maneuver(small_maneuver, tire_params, noise=True)


@pytest.fixture(scope="session")
def small_table(small_stream) -> FeatureTable:
    """由小工况提取的 0.5° 特征表"""
    from controllers.signal_processor import FeatureExtractor

    return FeatureExtractor().extract(small_stream)


def make_random_table(
    n: int = 30, n_points: int = 4, step: float = 0.5, seed: int = 0, noise: float = 0.05
) -> FeatureTable:
    """
    构造随机特征表，侧向力与 Ac_y 网格线性相关

    Args:
        n: 转圈数
        n_points: 每轴测点数
        step: 网格间距
        seed: 随机种子
        noise: 目标噪声（相对）

    Returns:
        特征表
    """
    rng = np.random.default_rng(seed)
    grids = rng.normal(size=(n, n_points, 3))
    slip = rng.uniform(-8.0, 8.0, size=n)
    grids[:, :, 1] += -slip[:, None] * 0.5
    fy = -400.0 * slip + noise * 400.0 * rng.normal(size=n)
    labels = np.column_stack([fy, np.full(n, 4160.0), slip, np.full(n, 60.0)])
    return FeatureTable(
        rotation_ids=np.arange(n),
        grids=grids,
        labels=labels,
        step=step,
        half_span=n_points * step / 2.0,
    )


@pytest.fixture
def random_table() -> FeatureTable:
    return make_random_table()
