import threading
from queue import Empty, Queue
from typing import Dict, List, Optional, Sequence

from loguru import logger

from .experiments import ExperimentReport, run_experiment
from .settings import settings

_results_lock = threading.Lock()


def _failed_report(name: str, exc: Exception) -> ExperimentReport:
    return ExperimentReport(name=name, inputs_digest="", error=f"{type(exc).__name__}: {exc}")


def _worker_loop(queue: "Queue[str]", seed: int, results: Dict[str, ExperimentReport]):
    while True:
        try:
            name = queue.get_nowait()
        except Empty:
            return
        try:
            report = run_experiment(name, seed)
        except Exception as exc:
            logger.exception(f"Experiment {name} raised: {exc}")
            report = _failed_report(name, exc)
        finally:
            queue.task_done()
        with _results_lock:
            results[name] = report


def run_batch(names: Sequence[str], seed: int = 0, workers: Optional[int] = None) -> List[ExperimentReport]:
    """Run independent experiments on a small thread pool; reports come back in input order."""
    workers = max(1, min(workers or settings.WORKER_THREADS, len(names) or 1))
    queue: "Queue[str]" = Queue()
    for name in names:
        queue.put_nowait(name)
    results: Dict[str, ExperimentReport] = {}
    logger.info(f"Running {len(names)} experiments on {workers} worker thread(s)")
    threads = [threading.Thread(target=_worker_loop, args=(queue, seed, results), daemon=True) for _ in range(workers)]
    for t in threads:
        t.start()
    queue.join()
    for t in threads:
        t.join()
    return [results[name] for name in names]
