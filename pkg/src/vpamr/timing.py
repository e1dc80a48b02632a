"""Wall-clock accumulation by named section."""
import time
from contextlib import contextmanager

BUCKETS = ("rhs", "constraints", "fill", "reduce", "regrid", "interp", "update")


class Timers:
    def __init__(self):
        self.reset()

    def reset(self):
        self.totals = {k: 0.0 for k in BUCKETS}
        self._depth = {}

    @contextmanager
    def section(self, name: str):
        # nested entries of the same bucket are only counted once
        depth = self._depth.get(name, 0)
        self._depth[name] = depth + 1
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self._depth[name] = depth
            if depth == 0:
                self.totals[name] = self.totals.get(name, 0.0) + time.perf_counter() - t0

    def as_row(self) -> dict:
        return dict(self.totals)


TIMERS = Timers()
