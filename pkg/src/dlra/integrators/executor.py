"""
子步执行器

一个宏步内的 K/L/S 子步互不依赖，threads > 1 时在线程池中并发执行；
threads = 1 时按提交顺序串行执行。两种方式的结果逐位相同。
"""

import concurrent.futures
import logging
from typing import Callable, Dict, Optional, TypeVar

from dlra.exceptions import ConfigError

logger = logging.getLogger(__name__)

T = TypeVar("T")


class SubstepExecutor:
    """
    子步执行器，可作为上下文管理器使用

    Args:
        threads: 工作线程数，1 表示串行
    """

    def __init__(self, threads: int = 1):
        if threads < 1:
            raise ConfigError(f"线程数必须 >= 1，当前: {threads}")
        self.threads = threads
        self._pool: Optional[concurrent.futures.ThreadPoolExecutor] = None

    def _ensure_pool(self) -> concurrent.futures.ThreadPoolExecutor:
        if self._pool is None:
            self._pool = concurrent.futures.ThreadPoolExecutor(
                max_workers=self.threads, thread_name_prefix="dlra-substep"
            )
        return self._pool

    def run(self, tasks: Dict[str, Callable[[], T]]) -> Dict[str, T]:
        """
        执行一组互相独立的任务

        Args:
            tasks: 名称 -> 无参可调用对象；串行时按字典顺序执行

        Returns:
            Dict[str, T]: 名称 -> 结果，顺序与 tasks 相同
        """
        if self.threads == 1 or len(tasks) <= 1:
            return {name: fn() for name, fn in tasks.items()}

        pool = self._ensure_pool()
        futures = {name: pool.submit(fn) for name, fn in tasks.items()}
        # 等待全部完成后再按提交顺序取结果，第一个异常原样抛出
        concurrent.futures.wait(futures.values())
        return {name: f.result() for name, f in futures.items()}

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self) -> "SubstepExecutor":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()
