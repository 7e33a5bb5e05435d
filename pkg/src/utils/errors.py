"""
Errors - 统一异常定义
每个异常类携带 CLI 退出码: 2 配置/用法错误, 3 数据错误, 4 数值错误
"""

from typing import Optional


class TireGprError(Exception):
    """所有模块错误的基类"""

    exit_code = 1


class ConfigError(TireGprError):
    """配置或用法错误"""

    exit_code = 2


class DataError(TireGprError, ValueError):
    """数据错误"""

    exit_code = 3


class NumericalError(TireGprError, ArithmeticError):
    """数值计算错误"""

    exit_code = 4


class InvalidConfigError(ConfigError):
    """参数组合不满足前置条件"""


class InvalidDataError(DataError):
    """输入数据非法（非有限值、编码器非单调、目标方差为零等）"""


class InvalidInputError(DataError):
    """维度不匹配等调用参数错误"""


class InvalidWindowError(DataError):
    """重采样窗口超出转圈覆盖范围"""


class InsufficientDataError(DataError):
    """样本数量不足"""


class UndefinedMetricError(DataError):
    """指标无定义（全零目标、常数序列）"""


class PatchDetectionError(DataError):
    """接地区检测失败"""

    def __init__(self, message: str, rotation_index: int):
        super().__init__(f"转圈 {rotation_index}: {message}")
        self.rotation_index = rotation_index


class FormatError(DataError):
    """文件格式错误，尽可能带行号/列号"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        location = ""
        if line is not None:
            location = f"第 {line} 行"
            if column is not None:
                location += f", 列 {column}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.line = line
        self.column = column


class UnsupportedVersionError(FormatError):
    """模型文件版本不受支持"""


class InvalidHyperparameterError(NumericalError):
    """超参数非正"""


class IllConditionedError(NumericalError):
    """抖动升级后 Cholesky 分解仍失败"""


class OptimizationError(NumericalError):
    """超参数优化失败"""
