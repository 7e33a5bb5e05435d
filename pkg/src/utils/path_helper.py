"""
Path Helper - 路径解析工具
项目根目录、默认配置文件与产物目录
"""

from pathlib import Path
from typing import Optional, Union


def get_app_root() -> Path:
    """
    获取项目根目录

    Returns:
        项目根目录路径
    """
    # path_helper.py -> utils/ -> src/ -> project_root/
    return Path(__file__).parent.parent.parent


def get_default_config_path() -> Optional[Path]:
    """
    获取随项目提供的默认配置文件

    Returns:
        config/pipeline.cfg 的路径，不存在时为 None
    """
    path = get_app_root() / "config" / "pipeline.cfg"
    return path if path.exists() else None


def resolve_path(path: Union[str, Path], base: Optional[Path] = None) -> Path:
    """
    解析相对路径为绝对路径

    Args:
        path: 路径
        base: 相对路径的基准目录，缺省为当前工作目录

    Returns:
        绝对路径

    示例:
        resolve_path("logs", Path("/work")) -> /work/logs
    """
    path = Path(path).expanduser()
    if path.is_absolute():
        return path
    return (base or Path.cwd()) / path


def ensure_dir(path: Union[str, Path]) -> Path:
    """
    确保目录存在

    Args:
        path: 目录路径

    Returns:
        目录路径
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
