"""Exact regularisation path of the 1-D fused lasso.

Increasing lambda only ever fuses neighbouring segments; change points never
move and their jump signs never flip.  Between fusion events the levels are
affine in lambda (closed form for known change points), so every fusion
lambda is the root of a linear function.  All event arithmetic is done in
exact rationals so that ties and nesting are decided without tolerances.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction

import numpy as np

from .core import Segmentation, as_signal, compress
from .solver import segment_means

__all__ = ["PathEvent", "LambdaPath", "NestingResult", "trace_path", "validate_nesting"]


@dataclass(frozen=True, eq=False)
class PathEvent:
    """Change points and signs valid on ``[lam, next event's lam)``."""

    lam: float
    change_points: np.ndarray
    signs: np.ndarray
    y: np.ndarray = field(repr=False)
    lam_exact: Fraction | None = None

    @cached_property
    def segmentation(self) -> Segmentation:
        """Fit at the event's own lambda."""
        if self.lam == 0.0:
            return compress(self.y, 0.0)
        levels = segment_means(self.y, self.change_points, self.signs, self.lam)
        return Segmentation(self.y.size, self.change_points, levels, self.lam)


@dataclass(frozen=True)
class LambdaPath:
    y: np.ndarray
    events: tuple[PathEvent, ...]

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([e.lam for e in self.events])

    def event_index(self, lam: float) -> int:
        """Index of the event whose interval contains ``lam``."""
        return int(np.searchsorted(self.breakpoints, lam, side="right")) - 1

    def segmentation_at(self, lam: float) -> Segmentation:
        ev = self.events[max(self.event_index(lam), 0)]
        seg = ev.segmentation
        levels = segment_means(self.y, seg.change_points, seg.signs, lam)
        return Segmentation(seg.n, seg.change_points, levels, lam)

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class NestingResult:
    ok: bool
    violation: tuple[int, int, str] | None = None

    def __bool__(self) -> bool:
        return self.ok


def trace_path(y) -> LambdaPath:
    """All fusion events from lambda = 0 up to lambda_max."""
    v = as_signal(y).values
    start = compress(v, 0.0)
    if start.n_segments == 1:
        return LambdaPath(v, (PathEvent(0.0, start.change_points, start.signs, v, Fraction(0)),))

    b = start.bounds()
    k = start.n_segments
    fy = [Fraction(float(t)) for t in v]
    sums = [sum(fy[b[i]:b[i + 1]], Fraction(0)) for i in range(k)]
    length = [int(b[i + 1] - b[i]) for i in range(k)]
    first = [int(b[i]) for i in range(k)]
    sgn = [0] + [int(s) for s in start.signs] + [0]
    # sign into segment i is s_in[i]; out of it is s_in[next]
    s_in = [sgn[i] for i in range(k)]
    s_out = [sgn[i + 1] for i in range(k)]
    nxt = list(range(1, k)) + [-1]
    prv = [-1] + list(range(k - 1))
    alive = [True] * k
    version = [0] * k

    def fusion_lambda(i: int, lam_now: Fraction) -> Fraction | None:
        j = nxt[i]
        d0 = sums[j] / length[j] - sums[i] / length[i]
        dr = Fraction(s_out[j] - s_in[j], length[j]) - Fraction(s_out[i] - s_in[i], length[i])
        if dr == 0:
            return None
        lam = -d0 / dr
        return lam if lam > lam_now else None

    heap: list = []

    def push(i: int, lam_now: Fraction) -> None:
        if i < 0 or nxt[i] < 0:
            return
        lam = fusion_lambda(i, lam_now)
        if lam is not None:
            heapq.heappush(heap, (lam, first[i], i, version[i], version[nxt[i]]))

    zero = Fraction(0)
    for i in range(k):
        push(i, zero)

    cp0, sg0 = start.change_points, start.signs
    keep = np.ones(cp0.size, dtype=bool)
    slot = {int(p): q for q, p in enumerate(cp0)}
    events = [PathEvent(0.0, cp0, sg0, v, zero)]
    n_alive = k
    while n_alive > 1:
        lam, _, i, vi, vj = heapq.heappop(heap)
        if not alive[i] or version[i] != vi or nxt[i] < 0 or version[nxt[i]] != vj:
            continue
        batch = {i}
        while heap and heap[0][0] == lam:
            _, _, i2, vi2, vj2 = heapq.heappop(heap)
            if alive[i2] and version[i2] == vi2 and nxt[i2] >= 0 and version[nxt[i2]] == vj2:
                batch.add(i2)
        # fuse right-to-left so chains of simultaneous fusions collapse cleanly
        touched = set()
        for i in sorted(batch, key=lambda t: first[t], reverse=True):
            j = nxt[i]
            sums[i] += sums[j]
            length[i] += length[j]
            s_out[i] = s_out[j]
            alive[j] = False
            keep[slot[first[j]]] = False
            nxt[i] = nxt[j]
            if nxt[j] >= 0:
                prv[nxt[j]] = i
            version[i] += 1
            n_alive -= 1
            touched.add(i)
            touched.discard(j)
        for i in {t for i in touched for t in (i, prv[i]) if t >= 0}:
            push(i, lam)
        events.append(PathEvent(float(lam), cp0[keep], sg0[keep], v, lam))
    return LambdaPath(v, tuple(events))


def validate_nesting(path: LambdaPath) -> NestingResult:
    """Check that change points only disappear and never change sign."""
    ev = path.events
    for a in range(len(ev) - 1):
        lo, hi = ev[a], ev[a + 1]
        if not hi.lam > lo.lam:
            return NestingResult(False, (a, a + 1, "breakpoints not strictly increasing"))
        lo_sign = dict(zip(lo.change_points.tolist(), lo.signs.tolist()))
        for p, s in zip(hi.change_points.tolist(), hi.signs.tolist()):
            if p not in lo_sign:
                return NestingResult(False, (a, a + 1, f"change point {p} appears"))
            if lo_sign[p] != s:
                return NestingResult(False, (a, a + 1, f"sign flip at {p}"))
    return NestingResult(True)
