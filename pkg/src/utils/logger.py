"""
日志模块 - 统一日志管理
"""

import logging
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Dict, Optional, Union


class Logger:
    """日志管理器"""

    _loggers: Dict[str, logging.Logger] = {}

    @staticmethod
    def setup(log_dir: Optional[str] = None, level: Union[int, str] = logging.INFO):
        """
        配置日志系统

        Args:
            log_dir: 日志目录，为空时只输出到控制台
            level: 日志级别（整数或 "DEBUG"/"INFO" 等名称）
        """
        if isinstance(level, str):
            level = logging.getLevelName(level.upper())
            if not isinstance(level, int):
                level = logging.INFO

        root_logger = logging.getLogger()
        root_logger.setLevel(level)

        # 清除已有的处理器
        root_logger.handlers.clear()

        formatter = logging.Formatter(
            "[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
        )

        # 控制台处理器走 stderr，stdout 留给产物清单
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

        if log_dir:
            log_path = Path(log_dir)
            log_path.mkdir(parents=True, exist_ok=True)
            log_file = log_path / f"tire_gpr_{datetime.now().strftime('%Y%m%d')}.log"

            # 文件处理器（支持轮转，最大 10MB，保留 5 个备份）
            file_handler = RotatingFileHandler(
                log_file, maxBytes=10 * 1024 * 1024, backupCount=5, encoding="utf-8"
            )
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
            logging.info(f"日志文件: {log_file}")

    @staticmethod
    def get_logger(name: str) -> logging.Logger:
        """
        获取日志记录器

        Args:
            name: 模块名称

        Returns:
            日志记录器
        """
        if name not in Logger._loggers:
            Logger._loggers[name] = logging.getLogger(name)
        return Logger._loggers[name]
