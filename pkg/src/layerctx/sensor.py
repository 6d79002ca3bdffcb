import threading

from .manager import MetricSample


class NetworkSensor:
    """Counts bytes served and turns them into bandwidth samples, one per window."""

    def __init__(self, metric: str = "bandwidth"):
        self.metric = metric
        self.total_bytes = 0
        self._window_bytes = 0
        self._window_start = None
        self._lock = threading.Lock()

    def record(self, nbytes: int) -> None:
        with self._lock:
            self._window_bytes += nbytes
            self.total_bytes += nbytes

    def sample(self, now: float) -> MetricSample:
        """
        Close the current window and report its bandwidth.

        Args:
            now (float): end of the window, seconds (virtual or wall clock)

        Returns:
            MetricSample: bytes in the window divided by its length
        """
        with self._lock:
            start = self._window_start
            nbytes, self._window_bytes = self._window_bytes, 0
            self._window_start = now
        elapsed = now - start if start is not None and now > start else None
        value = nbytes / elapsed if elapsed else float(nbytes)
        return MetricSample(timestamp=now, value=value, metric=self.metric)

    def start(self, now: float) -> None:
        with self._lock:
            self._window_start = now
            self._window_bytes = 0
