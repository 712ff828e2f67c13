import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator, List

_logger = logging.getLogger(__name__)


@dataclass
class StageTiming:
    identifier: str
    depth: int = 0
    runs: List[float] = field(default_factory=list)

    @property
    def total(self) -> float:
        return sum(self.runs)

    def format(self, mult: float, unit: str) -> str:
        indent = " >" * self.depth
        return f"[TIME]{indent}[{self.total * mult:010.3f}{unit}] x{len(self.runs)} {self.identifier}"


class TimeMeasure:
    """
    nested wall clock scopes for the pipeline stages
    timings go to the log only, never into result files
    """
    __TM_GLOBAL = None

    def __init__(self, mult: float = 1000.0, unit: str = 'ms'):
        self._mult = mult
        self._unit = unit
        self._open: List[str] = []
        self.sessions = dict()

    @contextmanager
    def measure(self, identifier: str) -> Iterator[StageTiming]:
        if identifier in self._open:
            raise RuntimeError("Identifier must be unique")
        timing = self.sessions.setdefault(identifier, StageTiming(identifier))
        timing.depth = len(self._open)
        self._open.append(identifier)
        start = time.perf_counter()
        try:
            yield timing
        finally:
            elapsed = time.perf_counter() - start
            self._open.pop()
            timing.runs.append(elapsed)
            _logger.debug("%s took %.3f%s", identifier, elapsed * self._mult, self._unit)

    def report(self) -> List[str]:
        return [t.format(self._mult, self._unit) for t in self.sessions.values()]

    @classmethod
    def default(cls) -> 'TimeMeasure':
        if cls.__TM_GLOBAL is None:
            cls.__TM_GLOBAL = TimeMeasure()
        return cls.__TM_GLOBAL
