"""
配置模块测试
"""
import os

import pytest

from models.maneuver import StepSlip, TriangularSlip
from utils.config import PipelineConfig, load_maneuver, parse_key_values, parse_value
from utils.errors import FormatError, InvalidConfigError
from utils.path_helper import get_default_config_path, resolve_path


def _write(tmp_path, text: str, name: str = "pipeline.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParsing:
    """测试 key-value 解析"""

    def test_values(self):
        assert parse_value("400") == 400
        assert parse_value("1e-6") == 1e-6
        assert parse_value("[1e-10, 1e-8]") == [1e-10, 1e-8]
        assert parse_value("true") is True
        assert parse_value("xyz") == "xyz"
        assert parse_value('"auto"') == "auto"

    def test_sections(self):
        text = "# 注释\nfilter.order = 4\n\npatch.step_deg = 1.0  # 行尾注释\n"
        assert parse_key_values(text) == {"filter": {"order": 4}, "patch": {"step_deg": 1.0}}

    def test_missing_equals(self):
        with pytest.raises(FormatError) as exc_info:
            parse_key_values("filter.order = 4\nfilter.cutoff_hz 400\n")
        assert exc_info.value.line == 2

    def test_unknown_key(self):
        known = PipelineConfig.DEFAULT_CONFIG
        with pytest.raises(FormatError) as exc_info:
            parse_key_values("filter.order = 4\n\nfilter.typo = 1\n", known)
        assert exc_info.value.line == 3

    def test_duplicate_key(self):
        with pytest.raises(FormatError) as exc_info:
            parse_key_values("seeds.global = 1\nseeds.global = 2\n")
        assert exc_info.value.line == 2

    def test_bad_key_shape(self):
        with pytest.raises(FormatError):
            parse_key_values("order = 4\n")


class TestPipelineConfig:
    """测试流程配置"""

    def test_defaults_valid(self):
        config = PipelineConfig()
        config.validate()
        assert config.seed == 0
        assert config.filter_settings().cutoff_hz == 400.0
        assert config.patch_settings().step_deg == 0.5
        assert config.gpr_settings().restarts == 5
        assert config.eval_settings().repetitions == 20

    def test_shipped_config_loads(self):
        path = get_default_config_path()
        assert path is not None
        config = PipelineConfig(str(path))
        assert config.get("features.resolution_deg") == 5
        assert config.tire_params().mf_b == 0.25

    def test_override_file(self, tmp_path):
        path = _write(tmp_path, "gpr.restarts = 2\nseeds.global = 7\nfeatures.axes = yz\n")
        config = PipelineConfig(str(path))
        assert config.gpr_settings().restarts == 2
        assert config.gpr_settings().seed == 7
        assert config.gpr_settings(seed=3).seed == 3
        assert config.eval_settings().axes == "yz"
        # 未覆盖的项保留默认值
        assert config.get("filter.order") == 5

    def test_unknown_key_reports_line(self, tmp_path):
        path = _write(tmp_path, "filter.order = 5\n# x\nfilter.bogus = 1\n")
        with pytest.raises(InvalidConfigError) as exc_info:
            PipelineConfig(str(path))
        assert "第 3 行" in str(exc_info.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            PipelineConfig(str(tmp_path / "missing.cfg"))

    @pytest.mark.parametrize(
        "text",
        [
            "filter.cutoff_hz = 5000",
            "filter.order = 0",
            "patch.step_deg = 0.3",
            "patch.step_deg = 0",
            "features.resolution_deg = 0.7",
            "features.resolution_deg = 0.25",
            "features.resolution_deg = 3",
            "features.axes = xw",
            "gpr.restarts = 0",
            "gpr.jitter_ladder = []",
            "eval.train_fraction = 1.0",
            "eval.folds = 1",
            "eval.level = 1.5",
            "generator.radius_m = -0.3",
            "filter.order = \"five\"",
        ],
    )
    def test_invalid_values(self, tmp_path, text):
        with pytest.raises(InvalidConfigError):
            PipelineConfig(str(_write(tmp_path, text + "\n")))

    def test_set_and_validate(self):
        config = PipelineConfig()
        config.set("features.resolution_deg", 10.0)
        config.validate()
        config.set("features.resolution_deg", 4.0)
        with pytest.raises(InvalidConfigError):
            config.validate()

    def test_get_default(self):
        config = PipelineConfig()
        assert config.get("nope.key", "fallback") == "fallback"

    def test_workers(self):
        config = PipelineConfig()
        cap = max(1, int((os.cpu_count() or 4) * 0.7))
        assert 1 <= config.get_workers() <= cap
        config.set("eval.workers", 1)
        assert config.get_workers() == 1
        config.set("eval.workers", 10000)
        assert config.get_workers() == cap


class TestManeuverFile:
    """测试工况描述文件"""

    def test_triangular(self, tmp_path):
        path = _write(
            tmp_path,
            "maneuver.vertical_load_n = 2080\nmaneuver.speed_kmh = 30\n"
            "maneuver.n_rotations = 20\nmaneuver.period_rotations = 10\nmaneuver.seed = 5\n",
            "m.cfg",
        )
        spec = load_maneuver(path)
        assert spec.vertical_load == 2080.0 and spec.speed == 30.0
        assert spec.n_rotations == 20 and spec.seed == 5
        assert isinstance(spec.slip_profile, TriangularSlip)
        assert spec.slip_profile.period_rotations == 10

    def test_step(self, tmp_path):
        path = _write(
            tmp_path,
            'maneuver.profile = step\nmaneuver.schedule = [[2, 3], [-2, 3]]\n'
            "maneuver.n_rotations = 6\n",
            "m.cfg",
        )
        spec = load_maneuver(path)
        assert isinstance(spec.slip_profile, StepSlip)
        assert spec.slip_angles().tolist() == [2.0, 2.0, 2.0, -2.0, -2.0, -2.0]

    @pytest.mark.parametrize(
        "text",
        [
            "maneuver.profile = sine\n",
            "maneuver.amplitude_deg = 12\n",
            "maneuver.n_rotations = 0\n",
            "maneuver.unknown = 1\n",
            "maneuver.profile = step\n",
        ],
    )
    def test_invalid(self, tmp_path, text):
        with pytest.raises(InvalidConfigError):
            load_maneuver(_write(tmp_path, text, "m.cfg"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_maneuver(tmp_path / "none.cfg")


class TestPathHelper:
    """测试路径工具"""

    def test_resolve_relative(self, tmp_path):
        assert resolve_path("logs", tmp_path) == tmp_path / "logs"

    def test_resolve_absolute(self, tmp_path):
        assert resolve_path(tmp_path) == tmp_path
