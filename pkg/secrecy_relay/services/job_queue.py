"""In-memory job queue that runs grid-point tasks on a bounded thread pool."""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from secrecy_relay.config import Settings
from secrecy_relay.errors import GridPointError, InvalidParameterError

logger = logging.getLogger(__name__)


class JobStatus(Enum):
    """Job execution status."""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class Job:
    """One grid point (or Monte Carlo block) and its outcome."""

    index: int
    label: str
    status: JobStatus
    created_at: str
    started_at: Optional[str] = None
    completed_at: Optional[str] = None
    result: Any = None
    error: Optional[str] = None
    exception: Optional[BaseException] = None

    def to_dict(self) -> dict:
        """Convert to a dictionary for the JSON diagnostics block."""
        return {
            "index": self.index,
            "label": self.label,
            "status": self.status.value,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "completed_at": self.completed_at,
            "error": self.error,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class JobQueue:
    """Lock-protected job records plus an executor; results come back in index order."""

    def __init__(self, max_workers: int = 1) -> None:
        if max_workers < 1:
            raise InvalidParameterError(f"max_workers must be >= 1, got {max_workers}")
        self.max_workers = max_workers
        self.jobs: Dict[int, Job] = {}
        self._lock = threading.Lock()

    def create_job(self, index: int, label: str) -> Job:
        job = Job(index=index, label=label, status=JobStatus.PENDING, created_at=_now())
        with self._lock:
            if index in self.jobs:
                raise InvalidParameterError(f"duplicate job index {index}")
            self.jobs[index] = job
        logger.debug(f"Created job {index} ({label})")
        return job

    def get_job(self, index: int) -> Optional[Job]:
        with self._lock:
            return self.jobs.get(index)

    def start_job(self, index: int) -> bool:
        with self._lock:
            job = self.jobs.get(index)
            if job:
                job.status = JobStatus.RUNNING
                job.started_at = _now()
                return True
        return False

    def complete_job(self, index: int, result: Any) -> bool:
        with self._lock:
            job = self.jobs.get(index)
            if job:
                job.status = JobStatus.COMPLETED
                job.completed_at = _now()
                job.result = result
                return True
        return False

    def fail_job(self, index: int, error: BaseException) -> bool:
        with self._lock:
            job = self.jobs.get(index)
            if job:
                job.status = JobStatus.FAILED
                job.completed_at = _now()
                job.error = str(error)
                job.exception = error
                logger.error(f"Failed job {index} ({job.label}): {error}")
                return True
        return False

    def status_counts(self) -> Dict[str, int]:
        counts = {status.value: 0 for status in JobStatus}
        with self._lock:
            for job in self.jobs.values():
                counts[job.status.value] += 1
        return counts

    def _run_one(self, index: int, task: Callable[[], Any]) -> None:
        self.start_job(index)
        try:
            result = task()
        except Exception as error:
            self.fail_job(index, error)
        else:
            self.complete_job(index, result)

    def run_all(self, tasks: Sequence[Tuple[str, Callable[[], Any]]]) -> List[Any]:
        """Run labelled tasks and return their results ordered by position.

        Every task runs to completion or failure. If any failed, the failure
        with the lowest index is raised as a GridPointError.
        """
        start = len(self.jobs)
        indices = []
        for offset, (label, _) in enumerate(tasks):
            indices.append(self.create_job(start + offset, label).index)

        if self.max_workers == 1 or len(tasks) <= 1:
            for index, (_, task) in zip(indices, tasks):
                self._run_one(index, task)
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                futures = [pool.submit(self._run_one, index, task) for index, (_, task) in zip(indices, tasks)]
                for future in futures:
                    future.result()

        results = []
        for position, index in enumerate(indices):
            job = self.jobs[index]
            if job.status is JobStatus.FAILED:
                assert job.exception is not None
                raise GridPointError(position, job.label, job.exception) from job.exception
            results.append(job.result)
        logger.debug(f"Ran {len(tasks)} jobs on {self.max_workers} worker(s)")
        return results


def get_job_queue(settings: Settings) -> JobQueue:
    """A fresh queue sized by SECRECY_RELAY_THREADS; single-threaded under TEST_MODE."""
    workers = 1 if settings.test_mode else settings.threads
    return JobQueue(max_workers=workers)
