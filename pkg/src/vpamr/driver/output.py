"""Diagnostics records, CSV writers and plain-text level snapshots."""
from __future__ import annotations

import csv
import os
from dataclasses import astuple, dataclass, fields

import numpy as np

from ..data import CellField, build_masks
from ..timing import BUCKETS, Timers


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    max_E: float
    mass: float
    n_cells: int            # all cells of all levels
    n_composite: int        # cells of the composite grid
    n_uniform_equiv: int    # uniform mesh at the current finest resolution
    num_levels: int

    @classmethod
    def header(cls) -> list:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [repr(float(v)) if isinstance(v, float) else str(v) for v in astuple(self)]

    @property
    def reduction(self) -> float:
        """Fraction of cells saved relative to the equivalent uniform mesh."""
        return 1.0 - self.n_composite / self.n_uniform_equiv


def cell_counts(f: CellField) -> tuple:
    """(total, composite, equivalent-uniform) cell counts of a field's hierarchy."""
    h = f.hierarchy
    total = sum(p.box.size for lev in h.levels for p in lev.patches)
    masks = h.cached("masks", lambda: build_masks(h))
    composite = int(sum(int(np.sum(masks.array(l, p.patch_id))) for l, p, _ in f.items()))
    uniform = h.level_domain(h.num_levels - 1).size
    return total, composite, uniform


def diagnostics(state) -> DiagnosticsRecord:
    sp = state.species[0]
    total, comp, uni = cell_counts(sp.f)
    return DiagnosticsRecord(float(state.t), float(state.dt), state.max_E(), state.mass(sp),
                             total, comp, uni, sp.hierarchy.num_levels)


class CSVLog:
    """Append-as-you-go CSV file with a fixed header."""

    def __init__(self, path: str, header: list):
        self.path = path
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(header)

    def write(self, row: list) -> None:
        self._w.writerow(row)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def timer_header() -> list:
    return ["step", "t"] + list(BUCKETS)


def timer_row(step: int, t: float, timers: Timers) -> list:
    return [str(step), repr(float(t))] + [f"{timers.totals[b]:.6f}" for b in BUCKETS]


def read_diagnostics(path: str) -> dict:
    """Columns of a diagnostics CSV as numpy arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(head)}


SNAPSHOT_HEADER = "level patch_id lo0 lo1 hi0 hi1 ratio0 ratio1"


def write_snapshot(path: str, f: CellField, t: float) -> None:
    """One block per patch: a header line with its box and refinement
    ratio, then the interior cell averages one x-row per line."""
    h = f.hierarchy
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# t = {t!r}\n# {SNAPSHOT_HEADER}\n")
        for l, p, _ in f.items():
            r = h.ratio_to_coarsest(l)
            fh.write(f"{l} {p.patch_id} {p.box.lo[0]} {p.box.lo[1]} {p.box.hi[0]} {p.box.hi[1]} {r[0]} {r[1]}\n")
            np.savetxt(fh, f.interior(l, p.patch_id), fmt="%.17g")


def read_snapshot(path: str) -> tuple:
    """(t, [(level, patch_id, lo, hi, ratio, array), ...])."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    t = float(lines[0].split("=")[1])
    out = []
    k = 2
    while k < len(lines):
        l, pid, a0, a1, b0, b1, r0, r1 = map(int, lines[k].split())
        nrow = b0 - a0 + 1
        arr = np.array([[float(x) for x in ln.split()] for ln in lines[k + 1:k + 1 + nrow]])
        out.append((l, pid, (a0, a1), (b0, b1), (r0, r1), arr.reshape(nrow, b1 - a1 + 1)))
        k += 1 + nrow
    return t, out
