"""Time loop with diagnostics output."""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .. import integrator as itg
from ..timing import TIMERS
from .config import SimConfig, to_ini
from .output import (CSVLog, DiagnosticsRecord, diagnostics, timer_header, timer_row,
                     write_snapshot)
from .problem import init_bump_on_tail

log = logging.getLogger(__name__)

# steps ending this close to an output time are stretched onto it
_TIME_SLACK = 1e-9


@dataclass
class RunResult:
    status: int
    records: list = field(default_factory=list)
    state: itg.SimState | None = None
    message: str = ""

    @property
    def output_records(self) -> list:
        return [r for r in self.records if r is not None]

    def summary(self) -> dict:
        recs = self.records
        deep = [r.reduction for r in recs if r.num_levels >= 3]
        return {
            "status": self.status,
            "steps": len(recs) - 1,
            "t_final": recs[-1].t if recs else 0.0,
            "max_E_initial": recs[0].max_E if recs else math.nan,
            "max_E_peak": max(r.max_E for r in recs) if recs else math.nan,
            "mean_reduction_3plus_levels": float(np.mean(deep)) if deep else math.nan,
            "message": self.message,
        }


def output_times(cfg: SimConfig) -> list:
    n = int(math.floor(cfg.t_end / cfg.output_interval + 1e-9))
    ts = [k * cfg.output_interval for k in range(1, n + 1)]
    if not ts or ts[-1] < cfg.t_end - _TIME_SLACK:
        ts.append(cfg.t_end)
    return [t for t in ts if t > 0]


def run_simulation(cfg: SimConfig, write: bool = True, max_steps: int | None = None,
                   state: itg.SimState | None = None) -> RunResult:
    """Advance the bump-on-tail problem to cfg.t_end.

    Writes `diagnostics.csv` (one row per step, deterministic), `timers.csv`
    (cumulative wall-clock per bucket) and, when snapshot_interval > 0,
    `snapshot_XXXX.txt` files to cfg.output_dir.  Steps are shortened so
    that every output time is hit exactly; the shortened step does not feed
    the time-step growth limit.
    """
    TIMERS.reset()
    state = state or init_bump_on_tail(cfg)
    result = RunResult(0, state=state)
    diag = timers = None
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        with open(os.path.join(cfg.output_dir, "config.ini"), "w") as fh:
            fh.write(to_ini(cfg))
        diag = CSVLog(os.path.join(cfg.output_dir, "diagnostics.csv"), DiagnosticsRecord.header())
        timers = CSVLog(os.path.join(cfg.output_dir, "timers.csv"), timer_header())

    def record():
        rec = diagnostics(state)
        result.records.append(rec)
        if diag:
            diag.write(rec.row())
            timers.write(timer_row(state.step, state.t, TIMERS))
        return rec

    snaps = 0

    def snapshot():
        nonlocal snaps
        if write and cfg.snapshot_interval > 0:
            write_snapshot(os.path.join(cfg.output_dir, f"snapshot_{snaps:04d}.txt"), state.species[0].f, state.t)
            snaps += 1

    try:
        record()
        snapshot()
        next_snap = cfg.snapshot_interval
        for t_out in output_times(cfg):
            while state.t < t_out - _TIME_SLACK:
                if max_steps is not None and state.step >= max_steps:
                    result.message = f"stopped after {state.step} steps"
                    return result
                dt = state.dt
                clamp = state.t + dt > t_out - _TIME_SLACK
                itg.advance_step(state, t_out - state.t if clamp else None)
                if clamp:
                    state.t = t_out
                rec = record()
                if not (math.isfinite(rec.max_E) and math.isfinite(rec.mass)) or not state.species[0].f.all_finite():
                    raise FloatingPointError(f"non-finite solution at t = {state.t}")
            if cfg.snapshot_interval > 0 and state.t >= next_snap - _TIME_SLACK:
                snapshot()
                next_snap += cfg.snapshot_interval
            log.info("t = %.4f  step %d  max|E| = %.5e  levels %d", state.t, state.step,
                     result.records[-1].max_E, result.records[-1].num_levels)
    except (FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        result.status = 2
        result.message = str(exc)
        log.error("run aborted: %s", exc)
    finally:
        if diag:
            diag.close()
            timers.close()
    return result
