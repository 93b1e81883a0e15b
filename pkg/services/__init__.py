"""
Services 模块
训练、评测、实验编排、绘图与运行目录服务
"""

from .evaluation_service import evaluation_service
from .experiment_service import experiment_service
from .plot_service import plot_service
from .run_service import RunService
from .trainer_service import Trainer, create_trainer

__all__ = ['evaluation_service', 'experiment_service', 'plot_service', 'RunService', 'Trainer', 'create_trainer']
