"""
日志工具
"""
import sys
import os
from pathlib import Path
from typing import Optional
from loguru import logger
from config.settings import LOG_LEVEL, LOG_FILE

_CONSOLE_FORMAT = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
_FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"


def setup_logger(log_file: Optional[str] = None, level: Optional[str] = None):
    """配置日志系统"""
    log_file = log_file or LOG_FILE
    level = level or LOG_LEVEL

    # 移除默认处理器
    logger.remove()

    # 添加控制台处理器
    logger.add(sys.stdout, format=_CONSOLE_FORMAT, level=level)

    # 确保日志目录存在
    log_dir = os.path.dirname(log_file)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)

    # 添加文件处理器
    logger.add(
        log_file,
        rotation="5 MB",
        retention="14 days",
        compression="gz",
        format=_FILE_FORMAT,
        level="INFO",
        enqueue=True
    )

    return logger


def add_run_sink(run_dir: Path) -> int:
    """为单次运行目录追加 run.log，返回 handler id 以便结束时移除"""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    return logger.add(run_dir / "run.log", format=_FILE_FORMAT, level="DEBUG", enqueue=True)


def remove_run_sink(handler_id: int):
    """移除运行目录日志"""
    try:
        logger.remove(handler_id)
    except ValueError:
        logger.debug(f"日志 handler {handler_id} 已被移除")
