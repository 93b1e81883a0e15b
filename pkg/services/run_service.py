"""
运行目录服务

每条命令在 <out>/<command>-<时间戳>-<配置哈希> 下输出，目录已存在时追加序号；
config.json 为规范化后的配置，可直接用 --config 回放。
"""
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional

from loguru import logger

from config.loader import dump_config
from config.schema import RunConfig
from config.settings import RUNS_DIR
from utils import short_hash
from utils.logger import add_run_sink, remove_run_sink


@dataclass
class RunContext:
    command: str
    path: Path
    config: RunConfig
    sink_id: Optional[int] = None

    def file(self, name: str) -> Path:
        return self.path / name


class RunService:
    """运行目录的创建与收尾"""

    def __init__(self, root: Optional[str] = None):
        self.root = Path(root or RUNS_DIR)

    def run_name(self, command: str, cfg: RunConfig) -> str:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        return f"{command}-{stamp}-{short_hash(dump_config(cfg))}"

    def create(self, command: str, cfg: RunConfig) -> RunContext:
        base = self.root / self.run_name(command, cfg)
        path = base
        suffix = 1
        while path.exists():
            path = base.with_name(f"{base.name}-{suffix}")
            suffix += 1
        path.mkdir(parents=True)
        (path / "config.json").write_text(dump_config(cfg), encoding="utf-8")
        ctx = RunContext(command=command, path=path, config=cfg, sink_id=add_run_sink(path))
        logger.info(f"🚀 {command} 运行目录: {path}")
        return ctx

    def finish(self, ctx: RunContext, ok: bool = True):
        if ok:
            logger.info(f"✅ {ctx.command} 完成: {ctx.path}")
        else:
            logger.error(f"❌ {ctx.command} 失败: {ctx.path}")
        if ctx.sink_id is not None:
            remove_run_sink(ctx.sink_id)
            ctx.sink_id = None
