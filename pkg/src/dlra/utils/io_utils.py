"""
输出文件工具: CSV 写出与配置哈希
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Iterable, List, Union

import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def config_hash(*parts: Any) -> str:
    """对若干 pydantic 模型 / JSON 可序列化对象求 sha256"""
    payload = []
    for part in parts:
        if isinstance(part, BaseModel):
            payload.append(part.model_dump(mode="json"))
        else:
            payload.append(part)
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def ensure_dir(path: Union[str, Path]) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    """以固定格式写 CSV（无索引列，'\\n' 换行），相同数据得到相同字节"""
    path = Path(path)
    ensure_dir(path.parent)
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    logger.info("写出 %s (%d 行)", path, len(df))
    return path


def models_to_frame(models: Iterable[BaseModel], exclude: Iterable[str] = ()) -> pd.DataFrame:
    rows: List[dict] = [m.model_dump(mode="json", exclude=set(exclude)) for m in models]
    return pd.DataFrame(rows)
