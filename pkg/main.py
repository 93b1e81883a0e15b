#!/usr/bin/env python3
"""
VIS-SemCom 命令行入口

使用方法:
    python main.py train --config config/runs/toy.json
    python main.py train --config config/runs/toy.json --loss.ohem.enabled=false
    python main.py sweep-snr --checkpoint runs/train-.../checkpoint.pt --velocities 50,120 --plot
    python main.py sweep-compression --checkpoint 32=a.pt --checkpoint 8=b.pt --snr 19
    python main.py ablate --axis stb_combo
    python main.py plot --csv runs/.../results.csv --x R

配置中的任何键都可以用同名点号参数覆盖（--a.b=v 或 --a.b v），
环境变量 VISSC_A__B=v 的优先级低于命令行。
"""
from contextlib import contextmanager
from typing import Dict, List, Optional

import typer
from loguru import logger
from pydantic import ValidationError

from config.loader import parse_overrides, resolve_config
from config.schema import RunConfig
from core.data import build_dataset
from core.errors import ConfigurationError, VisSemComError
from services import RunService, create_trainer, experiment_service, plot_service
from utils import parse_float_list
from utils.logger import setup_logger

# 设置日志
setup_logger()

app = typer.Typer(help="VIS-SemCom 车联网语义通信实验工具", no_args_is_help=True)

# 允许把未声明的 --a.b=v 透传给配置覆盖
_EXTRA_ARGS = {"allow_extra_args": True, "ignore_unknown_options": True}

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="JSON 运行配置文件")
SEED_OPTION = typer.Option(None, "--seed", help="覆盖全局随机种子")
OUT_OPTION = typer.Option(None, "--out", help="运行目录根路径（默认 RUNS_DIR）")


@contextmanager
def _guard(command: str):
    """把项目异常与配置校验错误统一映射为退出码 1"""
    try:
        yield
    except (VisSemComError, ValidationError) as e:
        logger.error(f"❌ {command} 失败: {e}")
        raise typer.Exit(code=1)


def _resolve(ctx: typer.Context, config: Optional[str], seed: Optional[int]) -> RunConfig:
    glob = ctx.obj or {}
    config = config or glob.get("config")
    seed = seed if seed is not None else glob.get("seed")
    overrides = parse_overrides(ctx.args)
    if seed is not None:
        overrides.insert(0, ("seed", seed))
    return resolve_config(config, overrides)


@contextmanager
def _run(ctx: typer.Context, command: str, config: Optional[str], seed: Optional[int], out: Optional[str]):
    """解析配置并创建运行目录，结束时按成功与否收尾"""
    with _guard(command):
        cfg = _resolve(ctx, config, seed)
        runs = RunService(out or (ctx.obj or {}).get("out"))
        run = runs.create(command, cfg)
        try:
            yield cfg, run
        except BaseException:
            runs.finish(run, ok=False)
            raise
        runs.finish(run, ok=True)


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[str] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[str] = OUT_OPTION,
):
    """全局参数也可以写在子命令之后"""
    ctx.obj = {"config": config, "seed": seed, "out": out}


@app.command(context_settings=_EXTRA_ARGS)
def train(
    ctx: typer.Context,
    config: Optional[str] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[str] = OUT_OPTION,
):
    """信道在环端到端训练，输出 checkpoint.pt 与 train_log.csv"""
    with _run(ctx, "train", config, seed, out) as (cfg, run):
        dataset = build_dataset(cfg.data, train=True)
        trainer = create_trainer(cfg)
        summary = trainer.train(dataset, run.path)
        logger.info(f"💾 检查点: {summary.checkpoint} (sha256 {summary.digest[:12]})")


@app.command("eval", context_settings=_EXTRA_ARGS)
def evaluate(
    ctx: typer.Context,
    checkpoint: str = typer.Option(..., "--checkpoint", help="语义编解码器检查点"),
    plot: bool = typer.Option(False, "--plot", help="同时输出 mIoU-SNR 图"),
    config: Optional[str] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[str] = OUT_OPTION,
):
    """在 eval.snr_grid 上评测单个检查点"""
    with _run(ctx, "eval", config, seed, out) as (cfg, run):
        experiment_service.evaluate_checkpoint(cfg, checkpoint, run.path, plot=plot or cfg.eval.plot)


@app.command("sweep-snr", context_settings=_EXTRA_ARGS)
def sweep_snr(
    ctx: typer.Context,
    checkpoint: str = typer.Option(..., "--checkpoint", help="语义编解码器检查点"),
    velocities: Optional[str] = typer.Option(None, "--velocities", help="逗号分隔的车速 km/h，例如 50,120"),
    plot: bool = typer.Option(False, "--plot", help="同时输出 mIoU-SNR 图"),
    config: Optional[str] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[str] = OUT_OPTION,
):
    """语义链路与传统链路的 mIoU-SNR 扫描"""
    with _run(ctx, "sweep-snr", config, seed, out) as (cfg, run):
        speeds = parse_float_list(velocities) if velocities else None
        experiment_service.sweep_snr(cfg, checkpoint, run.path, speeds, plot=plot or cfg.eval.plot)


def _parse_k_checkpoints(items: List[str]) -> Dict[int, str]:
    parsed: Dict[int, str] = {}
    for item in items:
        k, sep, path = item.partition("=")
        if not sep or not k.strip().isdigit() or not path:
            raise ConfigurationError(f"--checkpoint 需要 K=路径 格式: {item}")
        parsed[int(k)] = path
    return parsed


@app.command("sweep-compression", context_settings=_EXTRA_ARGS)
def sweep_compression(
    ctx: typer.Context,
    checkpoint: List[str] = typer.Option(..., "--checkpoint", help="K=检查点路径，可重复"),
    snr: Optional[float] = typer.Option(None, "--snr", help="固定 SNR (dB)，默认 channel.snr_db"),
    plot: bool = typer.Option(False, "--plot", help="同时输出 mIoU-R 图"),
    config: Optional[str] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[str] = OUT_OPTION,
):
    """固定 SNR 下不同 K（压缩率 R = 768/K）的 mIoU"""
    with _run(ctx, "sweep-compression", config, seed, out) as (cfg, run):
        checkpoints = _parse_k_checkpoints(checkpoint)
        snr_db = cfg.channel.snr_db if snr is None else snr
        experiment_service.sweep_compression(cfg, checkpoints, snr_db, run.path, plot=plot or cfg.eval.plot)


@app.command(context_settings=_EXTRA_ARGS)
def baseline(
    ctx: typer.Context,
    checkpoint: Optional[str] = typer.Option(None, "--checkpoint", help="分割网络检查点，默认 baseline.segmenter_checkpoint"),
    plot: bool = typer.Option(False, "--plot", help="同时输出 mIoU-SNR 图"),
    config: Optional[str] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[str] = OUT_OPTION,
):
    """JPEG + LDPC + QAM 传统链路评测"""
    with _run(ctx, "baseline", config, seed, out) as (cfg, run):
        experiment_service.run_baseline(cfg, run.path, checkpoint, plot=plot or cfg.eval.plot)


@app.command(context_settings=_EXTRA_ARGS)
def ablate(
    ctx: typer.Context,
    axis: str = typer.Option(..., "--axis", help="消融轴: stb_combo / loss / ohem"),
    config: Optional[str] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[str] = OUT_OPTION,
):
    """训练并评测一个消融轴上的全部变体"""
    with _run(ctx, "ablate", config, seed, out) as (cfg, run):
        experiment_service.ablate(cfg, axis, run.path)


@app.command()
def plot(
    csv: str = typer.Option(..., "--csv", help="results.csv 路径"),
    x: str = typer.Option("snr_db", "--x", help="横轴: snr_db 或 R"),
    out_file: Optional[str] = typer.Option(None, "--out-file", help="输出图片路径，默认与 CSV 同名 .png"),
):
    """由结果 CSV 重新绘图"""
    with _guard("plot"):
        plot_service.plot(csv, out_file, x=x)


if __name__ == "__main__":
    app()
