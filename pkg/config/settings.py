"""
应用配置设置

进程级配置（日志、运行目录、设备等），优先读取环境变量。
实验参数不在这里，见 config/schema.py 与 config/runs/*.json。
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# 获取项目根目录（config 目录的父目录）
_PROJECT_ROOT = Path(__file__).parent.parent

# 加载 .env 文件（存在才加载，不覆盖已有环境变量）
load_dotenv(_PROJECT_ROOT / '.env')


def get_env_bool(key: str, default: bool = False) -> bool:
    """获取布尔类型环境变量"""
    return os.getenv(key, str(default)).lower() in ('true', '1', 'yes', 'on')


def get_env_int(key: str, default: int) -> int:
    """获取整数类型环境变量"""
    try:
        return int(os.getenv(key, str(default)))
    except ValueError:
        return default


PROJECT_ROOT = _PROJECT_ROOT

# 日志配置
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('LOG_FILE', 'logs/app.log')

# 运行目录（train / sweep / ablate 的输出根目录）
RUNS_DIR = os.getenv('RUNS_DIR', 'runs')

# 计算设备: 'cpu' 或 'cuda'
DEVICE = os.getenv('DEVICE', 'cpu')

# 确定性模式：开启后 torch 只使用确定性算子，DataLoader 顺序与单线程一致
DETERMINISTIC = get_env_bool('DETERMINISTIC', True)

# DataLoader 预取进程数
NUM_WORKERS = get_env_int('NUM_WORKERS', 0)

# 运行配置的环境变量覆盖前缀，例如 VISSC_LOSS__OHEM__THRESH=0.6
ENV_PREFIX = os.getenv('ENV_PREFIX', 'VISSC_')

# LDPC 校验矩阵目录
LDPC_MATRIX_DIR = os.getenv('LDPC_MATRIX_DIR', str(_PROJECT_ROOT / 'config' / 'ldpc'))

# 光速 (m/s)
SPEED_OF_LIGHT = 3e8
