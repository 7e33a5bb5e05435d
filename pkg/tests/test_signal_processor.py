"""
信号预处理测试
"""
from dataclasses import replace

import numpy as np
import pytest

from controllers.generator import generate_maneuver, synth_revolution
from controllers.signal_processor import (
    FeatureExtractor,
    butterworth_lowpass,
    detect_contact_patch,
    downsample_resolution,
    downsample_table,
    resample_patch,
    segment_revolutions,
)
from models.features import PatchWindow
from models.maneuver import TEST_LOADS_N, TEST_SPEEDS_KMH, ManeuverSpec, StepSlip
from models.stream import RawStream
from utils.errors import (
    InvalidConfigError,
    InvalidDataError,
    InvalidWindowError,
    PatchDetectionError,
)

FS = 10000.0


def _slice(stream: RawStream, start: int = 0, stop: int = None) -> RawStream:
    index = slice(start, stop)
    return RawStream(
        time=stream.time[index],
        encoder=stream.encoder[index],
        acc=stream.acc[index],
        rotation_id=stream.rotation_id[index],
        labels=stream.labels[index],
        sample_rate=stream.sample_rate,
    )


def _steady_gain_db(frequency: float) -> float:
    """稳态幅值比（dB），取整数个周期的均方根"""
    n = 10000
    t = np.arange(n) / FS
    signal = np.sin(2 * np.pi * frequency * t)
    filtered = butterworth_lowpass(signal, FS, 400.0, 5)
    tail = slice(n // 2, n)
    return 20 * np.log10(np.sqrt(np.mean(filtered[tail] ** 2)) / np.sqrt(np.mean(signal[tail] ** 2)))


def _constant_slip(speed: float, n_rotations: int, slip: float = 3.0) -> ManeuverSpec:
    return ManeuverSpec(
        vertical_load=4160.0,
        speed=speed,
        n_rotations=n_rotations,
        slip_profile=StepSlip(schedule=((slip, 1),)),
    )


class TestButterworth:
    """测试低通滤波"""

    def test_dc_gain(self):
        """常数通道输出不变"""
        filtered = butterworth_lowpass(np.full(3000, 5.0), FS, 400.0, 5)
        assert np.max(np.abs(filtered - 5.0)) <= 1e-6

    def test_cutoff_attenuation(self):
        """截止频率处 −3.01 dB"""
        assert _steady_gain_db(400.0) == pytest.approx(-3.01, abs=0.1)

    def test_stopband_attenuation(self):
        """2 kHz 处衰减至少 60 dB"""
        assert _steady_gain_db(2000.0) <= -60.0

    def test_linearity(self):
        """对零初值信号满足线性叠加"""
        rng = np.random.default_rng(0)
        u, w = rng.normal(size=2000), rng.normal(size=2000)
        u[0] = w[0] = 0.0
        combined = butterworth_lowpass(2.0 * u - 3.0 * w, FS, 400.0, 5)
        separate = 2.0 * butterworth_lowpass(u, FS, 400.0, 5) - 3.0 * butterworth_lowpass(
            w, FS, 400.0, 5
        )
        assert np.max(np.abs(combined - separate)) <= 1e-9

    def test_same_length(self):
        assert butterworth_lowpass(np.arange(17.0), FS, 400.0, 5).shape == (17,)

    def test_cutoff_above_nyquist(self):
        with pytest.raises(InvalidConfigError):
            butterworth_lowpass(np.ones(10), FS, 5000.0, 5)

    def test_invalid_order(self):
        with pytest.raises(InvalidConfigError):
            butterworth_lowpass(np.ones(10), FS, 400.0, 0)

    def test_non_finite_sample(self):
        signal = np.ones(10)
        signal[3] = np.nan
        with pytest.raises(InvalidDataError):
            butterworth_lowpass(signal, FS, 400.0, 5)


class TestSegmentation:
    """测试分圈"""

    def test_partial_revolution_dropped(self):
        """3.5 圈只返回 3 个完整圈"""
        stream = generate_maneuver(_constant_slip(60.0, 4), noise=False)
        per_rev = len(stream) // 4
        revolutions = segment_revolutions(_slice(stream, stop=len(stream) - per_rev // 2))
        assert len(revolutions) == 3
        assert [rev.rotation_index for rev in revolutions] == [0, 1, 2]

    def test_leading_partial_dropped(self):
        """流从圈中开始时丢弃第一段"""
        stream = generate_maneuver(_constant_slip(60.0, 3), noise=False)
        assert len(segment_revolutions(_slice(stream, start=100))) == 2

    def test_less_than_one_revolution(self):
        stream = generate_maneuver(_constant_slip(60.0, 1), noise=False)
        per_rev = len(stream)
        assert segment_revolutions(_slice(stream, stop=int(0.9 * per_rev))) == []

    def test_empty_stream(self):
        assert segment_revolutions(RawStream.empty()) == []

    def test_speed_doubles_revolutions(self):
        """相同时长下 60 km/h 的圈数是 30 km/h 的两倍"""
        fast = generate_maneuver(_constant_slip(60.0, 4), noise=False)
        slow = _slice(generate_maneuver(_constant_slip(30.0, 3), noise=False), stop=len(fast))
        n_fast, n_slow = len(segment_revolutions(fast)), len(segment_revolutions(slow))
        assert abs(n_fast - 2 * n_slow) <= 1

    def test_non_monotonic_encoder(self):
        stream = generate_maneuver(_constant_slip(60.0, 1), noise=False)
        encoder = stream.encoder.copy()
        encoder[50] = encoder[48]
        broken = RawStream(
            time=stream.time,
            encoder=encoder,
            acc=stream.acc,
            rotation_id=stream.rotation_id,
            labels=stream.labels,
        )
        with pytest.raises(InvalidDataError):
            segment_revolutions(broken)


class TestContactPatch:
    """测试接地区检测"""

    @pytest.mark.parametrize("load", TEST_LOADS_N)
    @pytest.mark.parametrize("speed", TEST_SPEEDS_KMH)
    @pytest.mark.parametrize("slip", [-8.0, 0.0, 5.0])
    def test_center_recovered(self, load, speed, slip):
        """无噪声单圈的中心在 180° ± 1° 内"""
        rev = synth_revolution((slip, load, speed))
        window = detect_contact_patch(rev)
        assert window.center_c == pytest.approx(180.0, abs=1.0)
        assert window.entry_b < window.center_c < window.exit_d
        assert 0 < window.width < 70.0

    def test_constant_channel(self):
        rev = synth_revolution((2.0, 4160.0, 60.0), rotation_index=7)
        rev.acc[:, 0] = 0.0
        with pytest.raises(PatchDetectionError) as exc_info:
            detect_contact_patch(rev)
        assert exc_info.value.rotation_index == 7

    def test_offset_invariance(self):
        """纵向通道加常数不改变窗口"""
        rev = synth_revolution((2.0, 4160.0, 60.0))
        shifted = replace(rev, acc=rev.acc + np.array([3.0, 0.0, 0.0]))
        assert detect_contact_patch(shifted) == detect_contact_patch(rev)

    @pytest.mark.parametrize("scale", [0.25, 2.5, 40.0])
    def test_scale_invariance(self, scale):
        """纵向通道乘正数不改变窗口"""
        rev = synth_revolution((-3.0, 5500.0, 30.0), rng=np.random.default_rng(2))
        scaled = replace(rev, acc=rev.acc * np.array([scale, 1.0, 1.0]))
        assert detect_contact_patch(scaled) == detect_contact_patch(rev)


class TestResample:
    """测试角度域重采样"""

    def test_grid_shape(self):
        """±35°、0.5° 网格为 140 点"""
        rev = synth_revolution((4.0, 4160.0, 60.0))
        features = resample_patch(rev, detect_contact_patch(rev))
        assert features.n_points == 140
        assert features.grid.shape == (140, 3)
        assert features.flatten().shape == (420,)
        assert features.flatten("yz").shape == (280,)

    def test_constant_channels(self):
        """常数通道插值为常数"""
        rev = synth_revolution((4.0, 4160.0, 60.0))
        window = detect_contact_patch(rev)
        constant = replace(rev, acc=np.tile([1.5, -2.0, 80.0], (len(rev), 1)))
        grid = resample_patch(constant, window).grid
        np.testing.assert_allclose(grid, np.tile([1.5, -2.0, 80.0], (140, 1)), atol=1e-12)

    def test_axis_major_flatten(self):
        rev = synth_revolution((4.0, 4160.0, 60.0))
        features = resample_patch(rev, detect_contact_patch(rev))
        flat = features.flatten()
        assert np.array_equal(flat[:140], features.grid[:, 0])
        assert np.array_equal(flat[140:280], features.grid[:, 1])

    def test_speed_independent_grid(self):
        """30 与 60 km/h 的无噪声网格点数、角度一致，数值接近"""
        grids, angles = [], []
        for speed in (30.0, 60.0):
            rev = synth_revolution((4.0, 4160.0, speed))
            features = resample_patch(rev, detect_contact_patch(rev))
            grids.append(features.grid)
            angles.append(features.angles - features.angles[0])
        assert grids[0].shape == grids[1].shape
        np.testing.assert_allclose(angles[0], angles[1], atol=1e-9)
        lateral = grids[1][:, 1]
        assert np.max(np.abs(grids[0][:, 1] - lateral)) <= 0.05 * np.max(np.abs(lateral))

    def test_window_exceeds_coverage(self):
        rev = synth_revolution((4.0, 4160.0, 60.0))
        window = detect_contact_patch(rev)
        keep = rev.encoder < 200.0
        truncated = replace(rev, time=rev.time[keep], encoder=rev.encoder[keep], acc=rev.acc[keep])
        with pytest.raises(InvalidWindowError):
            resample_patch(truncated, window)

    def test_gap_inside_window(self):
        """窗口中部缺失的样本不能被直线补齐"""
        rev = synth_revolution((4.0, 4160.0, 60.0))
        window = detect_contact_patch(rev)
        keep = np.abs(rev.encoder - 190.0) > 3.0
        holed = replace(rev, time=rev.time[keep], encoder=rev.encoder[keep], acc=rev.acc[keep])
        with pytest.raises(InvalidWindowError):
            resample_patch(holed, window)

    def test_window_across_encoder_zero(self):
        """中心靠近 0° 时窗口跨越编码器回绕"""
        rev = synth_revolution((4.0, 4160.0, 60.0))
        window = PatchWindow(entry_b=350.0, center_c=5.0, exit_d=20.0)
        assert resample_patch(rev, window).n_points == 140

    def test_idempotent_on_grid(self):
        """对已在网格角度上的数据重采样，结果不变"""
        rev = synth_revolution((4.0, 4160.0, 60.0))
        features = resample_patch(rev, detect_contact_patch(rev))
        relative = -35.0 + 0.5 * np.arange(features.n_points)
        on_grid = replace(
            rev,
            time=np.arange(features.n_points) / FS,
            encoder=180.0 + relative,
            acc=features.grid,
        )
        again = resample_patch(on_grid, PatchWindow(entry_b=170.0, center_c=180.0, exit_d=190.0))
        assert np.array_equal(again.grid, features.grid)
        np.testing.assert_array_equal(again.angles, 180.0 + relative)

    def test_step_must_divide_span(self):
        rev = synth_revolution((4.0, 4160.0, 60.0))
        with pytest.raises(InvalidConfigError):
            resample_patch(rev, detect_contact_patch(rev), half_span=35.0, step=0.3)


class TestDownsample:
    """测试分辨率降采样"""

    @pytest.fixture
    def features(self):
        rev = synth_revolution((4.0, 4160.0, 60.0))
        return resample_patch(rev, detect_contact_patch(rev))

    @pytest.mark.parametrize("step,points", [(0.5, 140), (1.0, 70), (2.5, 28), (5.0, 14), (10.0, 7)])
    def test_point_counts(self, features, step, points):
        reduced = downsample_resolution(features, step)
        assert reduced.n_points == points
        assert reduced.flatten().size == 3 * points

    def test_five_degrees_gives_42_inputs(self, features):
        reduced = downsample_resolution(features, 5.0)
        assert reduced.flatten().size == 42
        assert np.array_equal(reduced.grid, features.grid[::10])

    @pytest.mark.parametrize("step", [0.3, 0.75, 3.0])
    def test_non_divisible_step(self, features, step):
        with pytest.raises(InvalidConfigError):
            downsample_resolution(features, step)

    def test_table(self, random_table):
        reduced = downsample_table(random_table, 1.0)
        assert reduced.n_points == 2
        assert reduced.step == 1.0
        assert reduced.design_matrix().shape == (len(random_table), 6)


class TestFeatureExtractor:
    """测试完整预处理链"""

    def test_extract(self, small_table, small_maneuver):
        assert len(small_table) == small_maneuver.n_rotations
        assert small_table.n_points == 140
        assert small_table.design_matrix().shape == (small_maneuver.n_rotations, 420)
        np.testing.assert_array_equal(small_table.rotation_ids, np.arange(40))
        np.testing.assert_allclose(small_table.slip, small_maneuver.slip_angles())
        assert np.all(small_table.fz == 4160.0)

    def test_lateral_sign(self, small_table):
        """正侧偏角对应负的侧向加速度"""
        center = small_table.grids[:, 70, 1]
        positive = small_table.slip > 2.0
        negative = small_table.slip < -2.0
        assert np.all(center[positive] < 0)
        assert np.all(center[negative] > 0)

    def test_progress_callback(self, small_stream):
        calls = []
        FeatureExtractor(progress_callback=lambda i, n: calls.append((i, n))).extract(small_stream)
        assert calls[-1] == (40, 40)

    def test_empty_stream(self):
        table = FeatureExtractor().extract(RawStream.empty())
        assert len(table) == 0
        assert table.n_points == 140
