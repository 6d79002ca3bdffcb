from apscheduler.schedulers.background import BackgroundScheduler
from .manager import AutonomicManager
from .sensor import NetworkSensor
import logging
import time

logger = logging.getLogger(__name__)


class AutonomicLoop:
    """
    Periodic Monitor/Analyze/Plan step of the context manager on a background thread.

    Each tick closes the sensor window, moves the setpoint along its schedule and feeds
    the sample to the manager. Sessions pick up the result through the manager's
    snapshot reads, so the loop never blocks them.
    """

    def __init__(self, manager: AutonomicManager, sensor: NetworkSensor, interval: float = 1.0,
                 clock=time.monotonic, scheduler=None):
        self.manager = manager
        self.sensor = sensor
        self.interval = interval
        self.clock = clock
        self.scheduler = scheduler or BackgroundScheduler()
        self.ticks = 0
        self.failures = 0
        self._origin = None

    def start(self):
        """Initialize and start the sampling job."""
        self._origin = self.clock()
        self.sensor.start(0.0)
        self.scheduler.add_job(
            self.tick,
            'interval',
            seconds=self.interval,
            id='autonomic-loop',
            max_instances=1,
            coalesce=True
        )
        self.scheduler.start()
        logger.info("Autonomic loop started with sampling interval: %s seconds", self.interval)

    def tick(self):
        """Sample the sensor once and run the manager on the sample."""
        try:
            now = self.elapsed()
            self.manager.update_setpoint(now)
            sample = self.sensor.sample(now)
            self.manager.ingest_sample(sample)
            self.ticks += 1
            logger.debug("Tick %s: %.0f bytes/s, fraction %.3f", self.ticks, sample.value, self.manager.fraction)
        except Exception as e:
            self.failures += 1
            logger.error("Error in autonomic loop tick: %s", e)

    def elapsed(self) -> float:
        if self._origin is None:
            self._origin = self.clock()
        return self.clock() - self._origin

    def shutdown(self):
        if self.scheduler.running:
            self.scheduler.shutdown(wait=True)
        logger.info("Autonomic loop stopped after %s ticks", self.ticks)
