#!/usr/bin/env python3
"""
Worker threads that run the levels of an epsilon sweep
"""

# built-in dependencies
import queue
import threading
import time
from typing import Callable, List, Optional, Sequence, Tuple, Union

# project dependencies
from errors import SweepLevelError
from models import EpsilonRecord
from LabKit.logger import Logger

logger = Logger()

LevelTask = Callable[[float], EpsilonRecord]
LevelResult = Tuple[int, Union[EpsilonRecord, SweepLevelError]]


class SweepWorkerPool:
    """Runs one task per ladder level on up to `workers` threads"""

    def __init__(self, level_task: LevelTask, workers: int = 1):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        self.level_task = level_task
        self.workers = workers

        # Queues for inter-thread communication
        self.task_queue: "queue.Queue[Optional[Tuple[int, float]]]" = queue.Queue()
        self.result_queue: "queue.Queue[LevelResult]" = queue.Queue()

        # Thread control
        self.is_running = False
        self.threads: List[threading.Thread] = []

    def start(self) -> bool:
        """Start the worker threads"""
        if self.is_running:
            return False
        self.is_running = True
        self._clear_queues()
        self.threads = [
            threading.Thread(target=self._level_worker, name=f"sweep-worker-{i}", daemon=True)
            for i in range(self.workers)
        ]
        for thread in self.threads:
            thread.start()
        return True

    def stop(self):
        """Ask every worker to exit and wait for it"""
        if not self.is_running:
            return
        for _ in self.threads:
            self.task_queue.put(None)
        for thread in self.threads:
            thread.join()
        self.is_running = False
        self.threads = []

    def _clear_queues(self):
        for q in [self.task_queue, self.result_queue]:
            while not q.empty():
                try:
                    q.get_nowait()
                except queue.Empty:
                    break

    def _run_level(self, index: int, epsilon: float) -> LevelResult:
        started = time.perf_counter()
        try:
            record = self.level_task(epsilon)
        except SweepLevelError as err:
            return index, err
        except Exception as err:  # pylint: disable=broad-except
            wrapped = SweepLevelError(epsilon, f"{type(err).__name__}: {err}")
            wrapped.__cause__ = err
            return index, wrapped
        logger.info(f"level eps={epsilon:g} done in {time.perf_counter() - started:.1f}s")
        return index, record

    def _level_worker(self):
        while True:
            item = self.task_queue.get()
            if item is None:
                break
            self.result_queue.put(self._run_level(*item))

    def run(self, epsilons: Sequence[float]) -> List[EpsilonRecord]:
        """
        Run every level and return the records in ladder order
        Args:
            epsilons (list of float): the ladder
        Returns:
            records (list of EpsilonRecord)
        Raises:
            SweepLevelError: the failure of the first failing level in ladder order
        """
        if self.workers == 1:
            results = [self._run_level(i, eps) for i, eps in enumerate(epsilons)]
        else:
            self.start()
            try:
                for item in enumerate(epsilons):
                    self.task_queue.put(item)
                results = [self.result_queue.get() for _ in epsilons]
            finally:
                self.stop()
        results.sort(key=lambda pair: pair[0])
        for _, outcome in results:
            if isinstance(outcome, SweepLevelError):
                raise outcome
        return [outcome for _, outcome in results]
