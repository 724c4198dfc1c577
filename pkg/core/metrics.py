"""
In-process metrics for srmkit runs.

Counters and histograms are kept in memory and summarized in the logs at the
end of a command. They never enter reports, which must stay reproducible.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List

logger = logging.getLogger(__name__)


@dataclass
class Counter:
    """Simple counter metric."""
    name: str
    help_text: str
    value: int = 0

    def inc(self, amount: int = 1):
        self.value += amount

    def get(self) -> int:
        return self.value


@dataclass
class Histogram:
    """Histogram metric for tracking distributions."""
    name: str
    help_text: str
    buckets: List[float] = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 60.0])
    observations: List[float] = field(default_factory=list)

    def observe(self, value: float):
        self.observations.append(value)

    def get_count(self) -> int:
        return len(self.observations)

    def get_sum(self) -> float:
        return sum(self.observations)

    def get_buckets(self) -> Dict[float, int]:
        """Cumulative bucket counts (le semantics)."""
        bucket_counts = {b: 0 for b in self.buckets}
        bucket_counts[float('inf')] = 0

        for obs in self.observations:
            for bucket in self.buckets:
                if obs <= bucket:
                    bucket_counts[bucket] += 1
            bucket_counts[float('inf')] += 1

        return bucket_counts


class MetricsCollector:
    """
    Centralized counters and histograms for solver, simulation and io work.

    Thread-safe: simulation runs executed by joblib's threading backend share
    one collector.
    """

    def __init__(self):
        self._counters: Dict[str, Counter] = {}
        self._histograms: Dict[str, Histogram] = {}
        self._lock = threading.Lock()

        self._init_standard_metrics()

        logger.debug("Metrics collector initialized")

    def _init_standard_metrics(self):
        # Solver
        self.register_counter("srm_fits_total", "Total SRM fits")
        self.register_counter("srm_iterations_total", "Total alternating-minimization iterations")
        self.register_histogram("srm_fit_duration_seconds", "SRM fit duration in seconds")

        # Simulation
        self.register_counter("simulation_runs_total", "Total simulation runs evaluated")
        self.register_histogram("simulation_run_duration_seconds", "Simulation run duration in seconds")

        # IO
        self.register_counter("matrix_files_written_total", "Matrix files written")
        self.register_counter("matrix_files_read_total", "Matrix files read")

    def register_counter(self, name: str, help_text: str) -> Counter:
        counter = Counter(name=name, help_text=help_text)
        self._counters[name] = counter
        return counter

    def register_histogram(self, name: str, help_text: str) -> Histogram:
        histogram = Histogram(name=name, help_text=help_text)
        self._histograms[name] = histogram
        return histogram

    def inc_counter(self, name: str, amount: int = 1):
        with self._lock:
            if name in self._counters:
                self._counters[name].inc(amount)

    def observe_histogram(self, name: str, value: float):
        with self._lock:
            if name in self._histograms:
                self._histograms[name].observe(value)

    def counter_value(self, name: str) -> int:
        counter = self._counters.get(name)
        return counter.get() if counter else 0

    def get_metrics(self) -> Dict[str, Any]:
        with self._lock:
            return {
                "counters": {
                    name: {"value": counter.get(), "help": counter.help_text}
                    for name, counter in self._counters.items()
                },
                "histograms": {
                    name: {
                        "count": hist.get_count(),
                        "sum": hist.get_sum(),
                        "buckets": hist.get_buckets(),
                        "help": hist.help_text
                    }
                    for name, hist in self._histograms.items()
                }
            }

    def log_summary(self):
        """Log non-zero counters and histogram totals."""
        snapshot = self.get_metrics()
        for name, data in snapshot["counters"].items():
            if data["value"]:
                logger.info(f"metric {name} = {data['value']}")
        for name, data in snapshot["histograms"].items():
            if data["count"]:
                logger.info(f"metric {name}: count={data['count']} sum={data['sum']:.3f}s")

