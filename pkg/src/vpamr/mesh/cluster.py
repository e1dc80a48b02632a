"""Grouping of tagged cells into rectangular patches.

Signature-based recursive bisection in the style of Berger and Rigoutsos:
shrink to the tags' bounding box, accept it when it is full enough, and
otherwise cut at a hole in the tag signature, then at the strongest
inflection of the signature, then at the midpoint.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .box import IndexBox, boxes_subtract

DEFAULT_EFFICIENCY = 0.70


@dataclass
class TagField:
    """Per-patch boolean tag arrays on one level (interior cells only)."""

    boxes: list
    tags: list = field(default_factory=list)

    def __post_init__(self):
        if not self.tags:
            self.tags = [np.zeros(b.shape, dtype=bool) for b in self.boxes]
        for b, t in zip(self.boxes, self.tags):
            if t.shape != b.shape:
                raise ValueError(f"tag array shape {t.shape} does not match box {b}")

    def to_array(self, domain: IndexBox) -> np.ndarray:
        out = np.zeros(domain.shape, dtype=bool)
        for b, t in zip(self.boxes, self.tags):
            out[b.slices(domain.lo)] |= t
        return out

    def count(self) -> int:
        return int(sum(t.sum() for t in self.tags))


def _bbox(mask: np.ndarray):
    idx = []
    for d in range(mask.ndim):
        other = tuple(a for a in range(mask.ndim) if a != d)
        prof = mask.any(axis=other) if other else mask
        nz = np.flatnonzero(prof)
        if nz.size == 0:
            return None
        idx.append((nz[0], nz[-1]))
    return idx


def _find_split(sig_list, shape, min_size):
    """Return (dim, k): split the box into [0, k-1] and [k, n-1] along dim."""
    # holes first: the longest zero run wins
    best = None
    for d, sig in enumerate(sig_list):
        n = shape[d]
        lo_k, hi_k = min_size[d], n - min_size[d]
        if hi_k < lo_k:
            continue
        zero = sig == 0
        k = 0
        while k < n:
            if zero[k]:
                start = k
                while k < n and zero[k]:
                    k += 1
                run = k - start
                cut = min(max(start, lo_k), hi_k)
                if start <= cut <= k and (best is None or run > best[0]):
                    best = (run, d, cut)
            else:
                k += 1
    if best is not None:
        return best[1], best[2]

    # strongest inflection of the signature
    best = None
    for d, sig in enumerate(sig_list):
        n = shape[d]
        lo_k, hi_k = max(min_size[d], 2), min(n - min_size[d], n - 2)
        if n < 4 or hi_k < lo_k:
            continue
        s = sig.astype(np.int64)
        lap = np.zeros(n, dtype=np.int64)
        lap[1:-1] = s[:-2] - 2 * s[1:-1] + s[2:]
        for k in range(lo_k, hi_k + 1):
            if lap[k - 1] * lap[k] < 0:
                jump = abs(int(lap[k]) - int(lap[k - 1]))
                if best is None or jump > best[0] or (jump == best[0] and abs(k - n / 2) < abs(best[2] - n / 2)):
                    best = (jump, d, k)
    if best is not None:
        return best[1], best[2]

    # midpoint of the longest splittable dimension
    cands = [d for d in range(len(shape)) if shape[d] >= 2 * min_size[d]]
    if not cands:
        return None
    d = max(cands, key=lambda a: (shape[a], -a))
    return d, shape[d] // 2


def cluster_tags(tags, min_size: Sequence[int], max_size: Sequence[int],
                 efficiency: float = DEFAULT_EFFICIENCY, domain: IndexBox | None = None) -> list:
    """Cover every tagged cell with disjoint boxes.

    `tags` is either a TagField (needs `domain`) or a boolean array whose
    [0, ..., 0] entry sits at `domain.lo` (index origin zero when `domain`
    is omitted).
    """
    if not 0.0 < efficiency <= 1.0:
        raise ValueError("efficiency must lie in (0, 1]")
    if isinstance(tags, TagField):
        if domain is None:
            raise ValueError("a TagField needs the level domain")
        arr = tags.to_array(domain)
    else:
        arr = np.asarray(tags, dtype=bool)
        if domain is None:
            domain = IndexBox.from_shape(arr.shape)
    ndim = arr.ndim
    min_size = tuple(max(1, int(m)) for m in min_size)
    max_size = tuple(max(int(M), m) for M, m in zip(max_size, min_size))

    accepted = []
    stack = [tuple((0, n - 1) for n in arr.shape)]
    while stack:
        region = stack.pop()
        sub = arr[tuple(slice(a, b + 1) for a, b in region)]
        bb = _bbox(sub)
        if bb is None:
            continue
        region = tuple((region[d][0] + bb[d][0], region[d][0] + bb[d][1]) for d in range(ndim))
        sub = arr[tuple(slice(a, b + 1) for a, b in region)]
        shape = sub.shape
        eff = sub.sum() / sub.size
        too_big = any(shape[d] > max_size[d] for d in range(ndim))
        if eff >= efficiency and not too_big:
            accepted.append(region)
            continue
        sigs = []
        for d in range(ndim):
            other = tuple(a for a in range(ndim) if a != d)
            sigs.append(sub.sum(axis=other) if other else sub.astype(np.int64))
        split = _find_split(sigs, shape, min_size)
        if split is None and too_big:
            d = max(range(ndim), key=lambda a: shape[a] - max_size[a])
            split = (d, max_size[d])
        if split is None:
            accepted.append(region)
            continue
        d, k = split
        a, b = region[d]
        left = tuple((a, a + k - 1) if e == d else region[e] for e in range(ndim))
        right = tuple((a + k, b) if e == d else region[e] for e in range(ndim))
        # right pushed first so the left half pops first: deterministic low-to-high order
        stack.append(right)
        stack.append(left)

    boxes = []
    for region in accepted:
        lo = [a for a, _ in region]
        hi = [b for _, b in region]
        for d in range(ndim):
            short = min_size[d] - (hi[d] - lo[d] + 1)
            if short > 0:
                lo[d] -= short // 2
                hi[d] += short - short // 2
                n = arr.shape[d]
                if lo[d] < 0:
                    hi[d] = min(n - 1, hi[d] - lo[d])
                    lo[d] = 0
                if hi[d] > n - 1:
                    lo[d] = max(0, lo[d] - (hi[d] - n + 1))
                    hi[d] = n - 1
        boxes.append(IndexBox(tuple(lo), tuple(hi)).shift(domain.lo))

    # growing to the minimum size may create overlaps; earlier boxes keep the cells
    disjoint = []
    for bx in boxes:
        frags = [bx]
        for prev in disjoint:
            frags = boxes_subtract(frags, prev)
        disjoint.extend(frags)
    return disjoint
