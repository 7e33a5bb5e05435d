"""
Configuration Manager - 配置管理
平面 key-value 文本格式: 每行 `section.key = value`，`#` 开头为注释
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

from models.features import parse_axes
from models.maneuver import ManeuverSpec, StepSlip, TireParams, TriangularSlip
from models.settings import EvalSettings, FilterSettings, GprSettings, PatchSettings
from utils.errors import FormatError, InvalidConfigError
from utils.logger import Logger

logger = Logger.get_logger("Config")


class PipelineConfig:
    """配置管理器"""

    # 默认配置
    DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
        "filter": {"cutoff_hz": 400.0, "order": 5},
        "patch": {"half_span_deg": 35.0, "step_deg": 0.5, "max_width_deg": 70.0},
        "features": {"axes": "xyz", "resolution_deg": 5.0},
        "gpr": {
            "restarts": 5,
            "init_signal_variance": 1.0,
            "init_length_scale": 1.0,
            "init_noise_variance": 0.1,
            "ard": True,
            "max_iterations": 200,
            "tolerance": 1e-6,
            "jitter_ladder": [1e-10, 1e-8, 1e-6],
            "log_bound": 12.0,
            "restart_spread": 1.0,
        },
        "eval": {
            "repetitions": 20,
            "train_fraction": 0.7,
            "folds": 5,
            "slip_filter_deg": 6.0,
            "bin_width_deg": 1.0,
            "slip_range_deg": 8.0,
            "level": 0.95,
            "workers": "auto",  # "auto" 或具体数字
            "auto_workers_ratio": 0.5,  # 自动模式下使用 CPU 线程数的比例
            "latency_repeats": 5,
        },
        "generator": {
            name: getattr(TireParams(), name) for name in TireParams.__dataclass_fields__
        },
        "seeds": {"global": 0},
        "logging": {"dir": "", "level": "INFO"},
    }

    def __init__(self, config_file: Optional[str] = None):
        """
        Args:
            config_file: 配置文件路径，为 None 时只使用默认配置
        """
        self._config_file = Path(config_file) if config_file else None
        self._config: Dict[str, Any] = copy.deepcopy(self.DEFAULT_CONFIG)
        if self._config_file is not None:
            self.load()

    @property
    def config_file(self) -> Optional[Path]:
        return self._config_file

    def load(self):
        """从文件加载配置并校验"""
        if not self._config_file.exists():
            raise FileNotFoundError(f"配置文件不存在: {self._config_file}")

        with open(self._config_file, "r", encoding="utf-8") as f:
            text = f.read()
        try:
            user = parse_key_values(text, known=self.DEFAULT_CONFIG)
        except FormatError as e:
            raise InvalidConfigError(f"{self._config_file}: {e}") from e
        # 合并默认配置（保留用户配置）
        self._config = self._merge_config(self.DEFAULT_CONFIG, user)
        logger.info(f"已加载配置: {self._config_file}")
        self.validate()

    def _merge_config(self, default: dict, user: dict) -> dict:
        """
        合并配置（保留用户配置，添加默认配置中的新项）

        Args:
            default: 默认配置
            user: 用户配置

        Returns:
            合并后的配置
        """
        result = copy.deepcopy(default)
        for key, value in user.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_config(result[key], value)
            else:
                result[key] = value
        return result

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取配置值

        Args:
            key: 配置键（点号分隔，如 "filter.cutoff_hz"）
            default: 默认值

        Returns:
            配置值
        """
        value = self._config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any):
        """
        设置配置值

        Args:
            key: 配置键（点号分隔）
            value: 配置值
        """
        keys = key.split(".")
        config = self._config
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

    @property
    def seed(self) -> int:
        return int(self.get("seeds.global", 0))

    def get_workers(self) -> int:
        """
        获取并行交叉验证的工作线程数

        Returns:
            工作线程数
        """
        cpu_count = os.cpu_count() or 4  # 默认 4 核
        max_allowed = max(1, int(cpu_count * 0.7))  # 最多70%

        max_workers = self.get("eval.workers", "auto")
        if max_workers == "auto":
            ratio = self.get("eval.auto_workers_ratio", 0.5)
            workers = max(1, int(cpu_count * ratio))
        else:
            workers = int(max_workers)

        return max(1, min(workers, max_allowed))

    def filter_settings(self) -> FilterSettings:
        return FilterSettings(
            cutoff_hz=float(self.get("filter.cutoff_hz")), order=int(self.get("filter.order"))
        )

    def patch_settings(self) -> PatchSettings:
        return PatchSettings(
            half_span_deg=float(self.get("patch.half_span_deg")),
            step_deg=float(self.get("patch.step_deg")),
            max_width_deg=float(self.get("patch.max_width_deg")),
        )

    def gpr_settings(self, seed: Optional[int] = None) -> GprSettings:
        gpr = self.get("gpr")
        return GprSettings(
            restarts=int(gpr["restarts"]),
            init_signal_variance=float(gpr["init_signal_variance"]),
            init_length_scale=float(gpr["init_length_scale"]),
            init_noise_variance=float(gpr["init_noise_variance"]),
            ard=bool(gpr["ard"]),
            max_iterations=int(gpr["max_iterations"]),
            tolerance=float(gpr["tolerance"]),
            jitter_ladder=tuple(float(j) for j in gpr["jitter_ladder"]),
            log_bound=float(gpr["log_bound"]),
            restart_spread=float(gpr["restart_spread"]),
            seed=self.seed if seed is None else seed,
        )

    def eval_settings(self) -> EvalSettings:
        ev = self.get("eval")
        return EvalSettings(
            repetitions=int(ev["repetitions"]),
            train_fraction=float(ev["train_fraction"]),
            folds=int(ev["folds"]),
            slip_filter_deg=float(ev["slip_filter_deg"]),
            bin_width_deg=float(ev["bin_width_deg"]),
            slip_range_deg=float(ev["slip_range_deg"]),
            level=float(ev["level"]),
            resolution_deg=float(self.get("features.resolution_deg")),
            axes=str(self.get("features.axes")),
            workers=self.get_workers(),
        )

    def tire_params(self) -> TireParams:
        return TireParams(**{k: float(v) for k, v in self.get("generator").items()})

    def validate(self):
        """按各模块前置条件校验配置"""

        def require(condition: bool, message: str):
            if not condition:
                raise InvalidConfigError(f"配置校验失败: {message}")

        try:
            fs = float(self.get("generator.sample_rate_hz"))
            filt = self.filter_settings()
            require(0 < filt.cutoff_hz < fs / 2, f"filter.cutoff_hz 必须位于 (0, {fs / 2})")
            require(filt.order >= 1, "filter.order 必须 >= 1")

            patch = self.patch_settings()
            require(patch.step_deg > 0 and patch.half_span_deg > 0, "patch 步长与半跨度必须为正")
            n_points = 2 * patch.half_span_deg / patch.step_deg
            require(abs(n_points - round(n_points)) < 1e-9, "patch.step_deg 必须整除跨度")
            require(patch.half_span_deg < 180, "patch.half_span_deg 必须小于 180")
            require(0 < patch.max_width_deg < 180, "patch.max_width_deg 必须位于 (0, 180)")

            resolution = float(self.get("features.resolution_deg"))
            ratio = resolution / patch.step_deg
            require(
                ratio > 0.5
                and abs(ratio - round(ratio)) < 1e-9
                and round(n_points) % round(ratio) == 0,
                "features.resolution_deg 必须是 patch.step_deg 的整数倍并整除跨度",
            )
            parse_axes(str(self.get("features.axes")))

            gpr = self.gpr_settings()
            require(gpr.restarts >= 1, "gpr.restarts 必须 >= 1")
            require(gpr.max_iterations >= 1, "gpr.max_iterations 必须 >= 1")
            require(len(gpr.jitter_ladder) >= 1, "gpr.jitter_ladder 不能为空")
            require(all(j > 0 for j in gpr.jitter_ladder), "gpr.jitter_ladder 必须全部为正")
            require(gpr.log_bound > 0, "gpr.log_bound 必须为正")
            require(
                min(gpr.init_signal_variance, gpr.init_length_scale, gpr.init_noise_variance) > 0,
                "gpr 初始超参数必须为正",
            )

            ev = self.eval_settings()
            require(ev.repetitions >= 1, "eval.repetitions 必须 >= 1")
            require(0 < ev.train_fraction < 1, "eval.train_fraction 必须位于 (0, 1)")
            require(ev.folds >= 2, "eval.folds 必须 >= 2")
            require(ev.bin_width_deg > 0, "eval.bin_width_deg 必须为正")
            require(0 < ev.level < 1, "eval.level 必须位于 (0, 1)")
            require(int(self.get("eval.latency_repeats")) >= 1, "eval.latency_repeats 必须 >= 1")

            self.tire_params()
        except (TypeError, ValueError, KeyError) as e:
            raise InvalidConfigError(f"配置校验失败: {e}") from e


def parse_value(raw: str) -> Any:
    """JSON 字面量优先，否则作为字符串"""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw.strip().strip('"')


def parse_key_values(text: str, known: Optional[Dict[str, Dict[str, Any]]] = None) -> dict:
    """
    解析 `section.key = value` 文本为嵌套字典

    Args:
        text: 文件内容
        known: 允许的 section/key，为 None 时不检查

    Returns:
        {section: {key: value}}
    """
    result: Dict[str, Dict[str, Any]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise FormatError(f"缺少 '=': {line.strip()!r}", line=line_no)
        key, raw = (part.strip() for part in stripped.split("=", 1))
        parts = key.split(".")
        if len(parts) != 2 or not all(parts):
            raise FormatError(f"键必须是 section.key 形式: {key!r}", line=line_no)
        section, name = parts
        if known is not None and (section not in known or name not in known[section]):
            raise FormatError(f"未知配置项: {key}", line=line_no)
        if name in result.get(section, {}):
            raise FormatError(f"重复的配置项: {key}", line=line_no)
        result.setdefault(section, {})[name] = parse_value(raw)
    return result


# 工况文件允许的键
MANEUVER_KEYS: Dict[str, Dict[str, Any]] = {
    "maneuver": {
        "vertical_load_n": 4160.0,
        "speed_kmh": 60.0,
        "n_rotations": 152,
        "profile": "triangular",  # "triangular" 或 "step"
        "amplitude_deg": 8.0,
        "period_rotations": 76,
        "schedule": [],  # step: [[slip°, 保持圈数], ...]
        "pressure_kpa": 220.0,
        "seed": 0,
    }
}


def load_maneuver(path: Path) -> ManeuverSpec:
    """
    读取单工况描述文件（与配置文件相同的 key-value 格式）

    Args:
        path: 文件路径

    Returns:
        工况
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"工况文件不存在: {path}")
    try:
        user = parse_key_values(path.read_text(encoding="utf-8"), known=MANEUVER_KEYS)
    except FormatError as e:
        raise InvalidConfigError(f"{path}: {e}") from e
    values = {**MANEUVER_KEYS["maneuver"], **user.get("maneuver", {})}

    try:
        if values["profile"] == "triangular":
            profile = TriangularSlip(
                amplitude_deg=float(values["amplitude_deg"]),
                period_rotations=int(values["period_rotations"]),
            )
        elif values["profile"] == "step":
            profile = StepSlip(
                schedule=tuple((float(slip), int(hold)) for slip, hold in values["schedule"])
            )
        else:
            raise InvalidConfigError(f"未知的侧偏角曲线: {values['profile']!r}")
        spec = ManeuverSpec(
            vertical_load=float(values["vertical_load_n"]),
            speed=float(values["speed_kmh"]),
            n_rotations=int(values["n_rotations"]),
            slip_profile=profile,
            pressure=float(values["pressure_kpa"]),
            seed=int(values["seed"]),
        )
    except (TypeError, ValueError) as e:
        raise InvalidConfigError(f"工况文件 {path} 非法: {e}") from e
    logger.info(
        f"已加载工况: Fz={spec.vertical_load:g} N, v={spec.speed:g} km/h, {spec.n_rotations} 圈"
    )
    return spec
