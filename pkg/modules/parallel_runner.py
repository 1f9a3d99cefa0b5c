"""
Parallel Runner - Multi-threaded Monte Carlo replication pool
Découpe les réplications en blocs et les répartit entre des workers
"""

import queue
import threading
import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


@dataclass
class ReplicationTask:
    """Un bloc contigu de réplications [start, stop)"""
    chunk_index: int
    start: int
    stop: int

    def __lt__(self, other):
        return self.chunk_index < other.chunk_index

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass
class ChunkResult:
    """Résultat d'un bloc"""
    chunk_index: int
    success: bool
    duration: float
    payload: Any = None
    error_message: Optional[str] = None


def split_replications(replications: int, chunk_size: int) -> List[ReplicationTask]:
    tasks = []
    for idx, start in enumerate(range(0, replications, chunk_size)):
        tasks.append(ReplicationTask(idx, start, min(start + chunk_size, replications)))
    return tasks


class ParallelRunner:
    """
    Pool de workers qui exécute une fonction pure sur chaque bloc.
    Les résultats sont rendus triés par chunk_index: l'agrégation ne dépend
    ni du nombre de workers ni de l'ordre de fin.
    """

    def __init__(self, work_fn: Callable[[ReplicationTask], Any], num_workers: int = 4):
        """
        Args:
            work_fn: Fonction appelée pour chaque ReplicationTask
            num_workers: Nombre de threads simultanés
        """
        self.work_fn = work_fn
        self.num_workers = max(1, num_workers)

        # Queues
        self.task_queue = queue.PriorityQueue()
        self.result_queue = queue.Queue()

        # Statistics
        self.stats = {
            'total_chunks': 0,
            'total_replications': 0,
            'completed': 0,
            'failed': 0,
            'replications_done': 0,
            'start_time': None,
            'workers_active': 0,
        }
        self.stats_lock = threading.Lock()

        # Control
        self.stop_flag = threading.Event()
        self.workers = []

    def _worker(self, worker_id: int):
        """Worker thread qui traite les blocs"""
        while not self.stop_flag.is_set():
            try:
                _, task = self.task_queue.get(timeout=0.2)
            except queue.Empty:
                continue

            with self.stats_lock:
                self.stats['workers_active'] += 1

            start_time = time.time()
            try:
                payload = self.work_fn(task)
                result = ChunkResult(task.chunk_index, True, time.time() - start_time, payload)
                with self.stats_lock:
                    self.stats['completed'] += 1
                    self.stats['replications_done'] += task.size
            except Exception as e:
                logger.warning(f"[Worker {worker_id}] chunk {task.chunk_index} failed: {e}")
                result = ChunkResult(task.chunk_index, False, time.time() - start_time,
                                     error_message=str(e))
                with self.stats_lock:
                    self.stats['failed'] += 1

            self.result_queue.put(result)
            with self.stats_lock:
                self.stats['workers_active'] -= 1
            self.task_queue.task_done()

    def add_tasks(self, tasks: List[ReplicationTask]):
        """Ajoute des blocs à la queue"""
        self.stats['total_chunks'] = len(tasks)
        self.stats['total_replications'] = sum(t.size for t in tasks)
        for task in tasks:
            self.task_queue.put((task.chunk_index, task))

    def start(self):
        """Démarre les workers"""
        self.stats['start_time'] = time.time()
        self.stop_flag.clear()
        for i in range(self.num_workers):
            worker = threading.Thread(
                target=self._worker,
                args=(i,),
                daemon=True,
                name=f"MCWorker-{i}"
            )
            worker.start()
            self.workers.append(worker)

    def stop(self):
        """Arrête les workers"""
        self.stop_flag.set()
        for worker in self.workers:
            worker.join(timeout=10)
        self.workers = []

    def wait_completion(self, progress_callback: Optional[Callable] = None):
        """
        Attend que tous les blocs soient terminés

        Args:
            progress_callback: Fonction appelée avec (done, total, stats)
        """
        while True:
            with self.stats_lock:
                done = self.stats['completed'] + self.stats['failed']
                total = self.stats['total_chunks']

            if progress_callback:
                progress_callback(done, total, self.get_statistics())

            if done >= total:
                break
            time.sleep(0.05)

    def get_statistics(self) -> Dict:
        """Récupère les statistiques actuelles"""
        with self.stats_lock:
            stats = self.stats.copy()

        if stats['start_time']:
            stats['elapsed_time'] = time.time() - stats['start_time']
            if stats['elapsed_time'] > 0:
                stats['replications_per_second'] = stats['replications_done'] / stats['elapsed_time']

        return stats

    def collect_results(self) -> List[ChunkResult]:
        """Collecte tous les résultats, triés par bloc"""
        results = []
        while not self.result_queue.empty():
            try:
                results.append(self.result_queue.get_nowait())
            except queue.Empty:
                break
        return sorted(results, key=lambda r: r.chunk_index)

    def run(self, tasks: List[ReplicationTask],
            progress_callback: Optional[Callable] = None) -> List[ChunkResult]:
        """start + wait_completion + stop + collect_results en un appel"""
        self.add_tasks(tasks)
        self.start()
        try:
            self.wait_completion(progress_callback)
        finally:
            self.stop()
        return self.collect_results()
