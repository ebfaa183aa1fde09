import uuid
import time
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence
from dataclasses import dataclass, asdict
from concurrent.futures import Future, ThreadPoolExecutor
import threading
import logging

from magicsparse.core.config import settings

logger = logging.getLogger(__name__)


class TaskStatus(str, Enum):
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class Task:
    id: str
    status: TaskStatus
    created_at: float
    updated_at: float
    label: str = ""
    error: Optional[str] = None

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['status'] = self.status.value
        return data


class TaskQueue:
    """Thread-pool executor that tracks task status and keeps results in submission order."""

    def __init__(self, max_workers: int = 4):
        self.max_workers = max(1, int(max_workers))
        self._tasks: Dict[str, Task] = {}
        self._executor = ThreadPoolExecutor(max_workers=self.max_workers)
        self._lock = threading.Lock()
        logger.debug(f"TaskQueue initialized with {self.max_workers} workers")

    def submit(self, func: Callable, *args, label: str = "", **kwargs) -> "tuple[str, Future]":
        task_id = str(uuid.uuid4())
        now = time.time()
        task = Task(id=task_id, status=TaskStatus.PENDING, created_at=now, updated_at=now, label=label)

        with self._lock:
            self._tasks[task_id] = task

        future = self._executor.submit(self._execute_task, task_id, func, *args, **kwargs)
        return task_id, future

    def _set_status(self, task_id: str, status: TaskStatus, error: Optional[str] = None):
        with self._lock:
            self._tasks[task_id].status = status
            self._tasks[task_id].error = error
            self._tasks[task_id].updated_at = time.time()

    def _execute_task(self, task_id: str, func: Callable, *args, **kwargs) -> Any:
        self._set_status(task_id, TaskStatus.PROCESSING)
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            self._set_status(task_id, TaskStatus.FAILED, str(e))
            logger.error(f"Task failed: {task_id} - {e}")
            raise
        self._set_status(task_id, TaskStatus.COMPLETED)
        return result

    def get_task_status(self, task_id: str) -> Optional[Dict]:
        with self._lock:
            task = self._tasks.get(task_id)
            return task.to_dict() if task else None

    @property
    def tracked_count(self) -> int:
        with self._lock:
            return len(self._tasks)

    def forget(self, task_ids: Iterable[str]) -> None:
        with self._lock:
            for task_id in task_ids:
                self._tasks.pop(task_id, None)

    def cleanup_finished(self) -> int:
        """Drop COMPLETED and FAILED tasks submitted directly; returns how many went."""
        with self._lock:
            to_remove = [
                tid for tid, task in self._tasks.items()
                if task.status in (TaskStatus.COMPLETED, TaskStatus.FAILED)
            ]
            for tid in to_remove:
                del self._tasks[tid]
        logger.debug(f"Cleaned up {len(to_remove)} finished tasks")
        return len(to_remove)

    def map_ordered(self, func: Callable[[Any], Any], items: Iterable[Any], label: str = "") -> List[Any]:
        """
        Run func over items in parallel; results come back in input order.
        The first failure in index order is re-raised after all tasks settle.
        Tasks are forgotten once their results are collected.
        """
        submitted = [self.submit(func, item, label=f"{label}[{i}]") for i, item in enumerate(items)]
        futures: Sequence[Future] = [future for _, future in submitted]
        results = []
        first_error: Optional[BaseException] = None
        for future in futures:
            try:
                results.append(future.result())
            except Exception as e:
                if first_error is None:
                    first_error = e
                results.append(None)
        self.forget(task_id for task_id, _ in submitted)
        if first_error is not None:
            raise first_error
        return results

    def shutdown(self, wait: bool = True):
        self._executor.shutdown(wait=wait)


task_queue: Optional[TaskQueue] = None


def get_task_queue() -> TaskQueue:
    global task_queue
    if task_queue is None:
        task_queue = TaskQueue(settings.MAX_WORKERS)
    return task_queue


def initialize_task_queue(max_workers: int = 4) -> TaskQueue:
    global task_queue
    if task_queue is not None:
        # already-submitted work still completes
        task_queue.shutdown(wait=False)
    task_queue = TaskQueue(max_workers)
    return task_queue


def run_ordered(func: Callable[[Any], Any], items: Sequence[Any], workers: Optional[int] = None,
                label: str = "") -> List[Any]:
    """Sequential when workers <= 1, otherwise through the shared queue. Same results either way."""
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    queue = get_task_queue()
    if queue.max_workers < workers:
        queue = initialize_task_queue(workers)
    return queue.map_ordered(func, items, label=label)
