"""
运行配置加载

优先级（后者覆盖前者）: 模型默认值 -> JSON 配置文件 -> VISSC_ 环境变量 -> 命令行点号参数
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, get_args, get_origin

from loguru import logger
from pydantic import BaseModel, ValidationError

from config import settings
from config.schema import RunConfig
from core.errors import ConfigurationError


def parse_value(raw: str) -> Any:
    """按 JSON 解析取值，失败则保留字符串"""
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, TypeError):
        return raw


def _model_class(annotation) -> Optional[type]:
    """从字段注解中取出 BaseModel 子类（支持 Optional）"""
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for arg in get_args(annotation):
        if isinstance(arg, type) and issubclass(arg, BaseModel):
            return arg
    return None


def check_key(dotted: str, model_cls: type = RunConfig):
    """校验点号键是否存在于配置结构中，不存在时报出完整键名"""
    parts = dotted.split(".")
    current = model_cls
    for i, part in enumerate(parts):
        fields = current.model_fields
        if part not in fields:
            raise ConfigurationError(f"未知配置键: {dotted}")
        annotation = fields[part].annotation
        nested = _model_class(annotation)
        if nested is not None:
            current = nested
            continue
        # dict 类型字段允许任意下一级键（例如 loss.weights.<class>）
        if get_origin(annotation) in (dict, Dict) and i == len(parts) - 2:
            return
        if i != len(parts) - 1:
            raise ConfigurationError(f"未知配置键: {dotted}")


def set_dotted(target: Dict[str, Any], dotted: str, value: Any):
    parts = dotted.split(".")
    node = target
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            child = {}
            node[part] = child
        node = child
    node[parts[-1]] = value


def parse_overrides(args: Iterable[str]) -> List[Tuple[str, Any]]:
    """
    解析命令行点号参数

    支持 --a.b=v 与 --a.b v 两种写法
    """
    args = list(args)
    overrides = []
    i = 0
    while i < len(args):
        token = args[i]
        if not token.startswith("--"):
            raise ConfigurationError(f"无法识别的参数: {token}")
        body = token[2:]
        if "=" in body:
            key, raw = body.split("=", 1)
        else:
            if i + 1 >= len(args):
                raise ConfigurationError(f"参数缺少取值: {token}")
            key, raw = body, args[i + 1]
            i += 1
        overrides.append((key, parse_value(raw)))
        i += 1
    return overrides


def env_overrides(environ: Mapping[str, str], prefix: Optional[str] = None) -> List[Tuple[str, Any]]:
    """从环境变量提取覆盖项: VISSC_LOSS__OHEM__THRESH=0.6 -> loss.ohem.thresh"""
    prefix = prefix or settings.ENV_PREFIX
    overrides = []
    for name in sorted(environ):
        if not name.startswith(prefix):
            continue
        key = name[len(prefix):].lower().replace("__", ".")
        overrides.append((key, parse_value(environ[name])))
    return overrides


def resolve_config(
    path: Optional[str] = None,
    overrides: Iterable[Tuple[str, Any]] = (),
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """读取配置文件并依次叠加环境变量与命令行覆盖，返回校验后的 RunConfig"""
    raw: Dict[str, Any] = {}
    if path:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigurationError(f"配置文件不存在: {config_path}")
        try:
            raw = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"配置文件 JSON 格式错误 {config_path}: {e}") from e
        logger.debug(f"读取配置文件: {config_path}")

    environ = os.environ if environ is None else environ
    for key, value in list(env_overrides(environ)) + list(overrides):
        check_key(key)
        set_dotted(raw, key, value)
        logger.debug(f"配置覆盖: {key}={value!r}")

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise ConfigurationError(f"配置无效 [{loc or '<root>'}]: {first['msg']}") from e


def dump_config(cfg: RunConfig) -> str:
    """规范化 JSON（键排序），用于回写到运行目录"""
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
