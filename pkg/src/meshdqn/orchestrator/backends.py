"""Worker backends: how worker loops are started and how messages reach them.

Both backends speak the same protocol (one shared report queue, one inbox per
worker), so the server does not know which one it runs on.
"""

from __future__ import annotations

import logging
import multiprocessing
import queue
import threading
from typing import Any, Callable, Dict, Protocol

logger = logging.getLogger(__name__)


class MessageQueue(Protocol):
    def put(self, item: Any) -> None: ...

    def get(self, block: bool = True, timeout: float | None = None) -> Any: ...


class WorkerHandle(Protocol):
    name: str

    def is_alive(self) -> bool: ...

    def join(self, timeout: float | None = None) -> None: ...


class WorkerBackend(Protocol):
    name: str

    def queue(self) -> MessageQueue: ...

    def start(self, target: Callable[..., None], args: tuple, name: str) -> WorkerHandle: ...

    def stop(self, handle: WorkerHandle, timeout: float) -> None: ...


class ThreadBackend:
    name = "thread"

    def queue(self) -> MessageQueue:
        return queue.Queue()

    def start(self, target: Callable[..., None], args: tuple, name: str) -> WorkerHandle:
        thread = threading.Thread(target=target, args=args, name=name, daemon=True)
        thread.start()
        return thread

    def stop(self, handle: WorkerHandle, timeout: float) -> None:
        # Threads cannot be killed; they leave their loop on the stop message.
        handle.join(timeout)
        if handle.is_alive():
            logger.warning("Worker thread %s did not stop within %.1fs", handle.name, timeout)


class ProcessBackend:
    name = "process"

    def __init__(self) -> None:
        self._ctx = multiprocessing.get_context("spawn")

    def queue(self) -> MessageQueue:
        return self._ctx.Queue()

    def start(self, target: Callable[..., None], args: tuple, name: str) -> WorkerHandle:
        process = self._ctx.Process(target=target, args=args, name=name, daemon=True)
        process.start()
        return process

    def stop(self, handle: WorkerHandle, timeout: float) -> None:
        handle.join(timeout)
        if handle.is_alive():
            logger.warning("Terminating worker process %s", handle.name)
            handle.terminate()  # type: ignore[attr-defined]
            handle.join(timeout)


_BACKENDS: Dict[str, Callable[[], WorkerBackend]] = {
    ThreadBackend.name: ThreadBackend,
    ProcessBackend.name: ProcessBackend,
}


def get_backend(name: str) -> WorkerBackend:
    try:
        return _BACKENDS[name]()
    except KeyError as e:
        raise ValueError(f"No worker backend registered for name={name}") from e
