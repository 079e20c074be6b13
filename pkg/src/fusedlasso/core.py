"""Domain types, index conventions and segmentation metrics.

Index convention: a change point ``k`` (0-based) is the first sample of a new
segment, i.e. the level differs between samples ``k - 1`` and ``k``.  Valid
change points therefore lie in ``1 .. n - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

__all__ = [
    "Signal",
    "Segmentation",
    "SignChange",
    "StepModel",
    "as_signal",
    "expand",
    "compress",
    "set_distance",
    "eps_sign_consistent",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Signal:
    """A finite, non-empty sequence of real observations."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 1:
            raise InputError(f"signal must be one-dimensional, got shape {v.shape}")
        if v.size < 1:
            raise InputError("signal must contain at least one sample")
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            raise InputError(f"signal has non-finite value at index {int(bad[0])}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __eq__(self, other) -> bool:
        return isinstance(other, Signal) and np.array_equal(self.values, other.values)

    __hash__ = None


def as_signal(y) -> Signal:
    return y if isinstance(y, Signal) else Signal(y)


def _check_structure(n: int, change_points: np.ndarray, levels: np.ndarray) -> None:
    if n < 1:
        raise InputError("length must be >= 1")
    if levels.size != change_points.size + 1:
        raise InputError(
            f"{levels.size} levels given for {change_points.size} change points"
        )
    if change_points.size:
        if change_points[0] < 1 or change_points[-1] > n - 1:
            raise InputError(f"change points must lie in 1..{n - 1}")
        if np.any(np.diff(change_points) <= 0):
            raise InputError("change points must be strictly increasing")
    if not np.all(np.isfinite(levels)):
        raise InputError("levels must be finite")


def _expand(n: int, change_points: np.ndarray, levels: np.ndarray) -> np.ndarray:
    lengths = np.diff(np.concatenate(([0], change_points, [n])))
    return np.repeat(levels, lengths)


@dataclass(frozen=True)
class SignChange:
    position: int
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise InputError(f"sign must be -1 or +1, got {self.sign}")


@dataclass(frozen=True, eq=False)
class Segmentation:
    """Piecewise-constant fit: change points, per-segment levels and lambda."""

    n: int
    change_points: np.ndarray
    levels: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        cps = np.array(self.change_points, dtype=np.int64).reshape(-1)
        lv = np.array(self.levels, dtype=np.float64).reshape(-1)
        n = int(self.n)
        _check_structure(n, cps, lv)
        if np.any(np.diff(lv) == 0.0):
            k = int(np.flatnonzero(np.diff(lv) == 0.0)[0])
            raise InputError(f"zero jump stored at change point {int(cps[k])}")
        lam = float(self.lam)
        if not (lam >= 0.0 and math.isfinite(lam)):
            raise InputError(f"lambda must be finite and >= 0, got {self.lam!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "change_points", _frozen(cps))
        object.__setattr__(self, "levels", _frozen(lv))
        object.__setattr__(self, "lam", lam)

    @property
    def n_segments(self) -> int:
        return int(self.levels.size)

    @property
    def signs(self) -> np.ndarray:
        """Jump sign at each change point."""
        return np.sign(np.diff(self.levels)).astype(np.int64)

    def sign_changes(self) -> list[SignChange]:
        return [SignChange(int(p), int(s)) for p, s in zip(self.change_points, self.signs)]

    def bounds(self) -> np.ndarray:
        """Segment boundaries ``[0, cp_1, ..., cp_k, n]``."""
        return np.concatenate(([0], self.change_points, [self.n]))

    def lengths(self) -> np.ndarray:
        return np.diff(self.bounds())

    def expand(self) -> np.ndarray:
        return expand(self)

    def with_levels(self, levels, lam: float | None = None) -> "Segmentation":
        """Same change points, new levels; adjacent equal levels are fused."""
        return compress(
            _expand(self.n, self.change_points, np.asarray(levels, dtype=float)),
            lam=self.lam if lam is None else lam,
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Segmentation)
            and self.n == other.n
            and self.lam == other.lam
            and np.array_equal(self.change_points, other.change_points)
            and np.array_equal(self.levels, other.levels)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"Segmentation(n={self.n}, change_points={self.change_points.tolist()}, "
            f"levels={self.levels.tolist()}, lam={self.lam!r})"
        )


@dataclass(frozen=True, eq=False)
class StepModel:
    """Ground-truth piecewise-constant mean plus i.i.d. Gaussian noise level."""

    n: int
    change_points: np.ndarray
    levels: np.ndarray
    noise_sd: float = 1.0

    def __post_init__(self):
        cps = np.array(self.change_points, dtype=np.int64).reshape(-1)
        lv = np.array(self.levels, dtype=np.float64).reshape(-1)
        _check_structure(int(self.n), cps, lv)
        if np.any(np.diff(lv) == 0.0):
            raise InputError("adjacent true levels must differ")
        sd = float(self.noise_sd)
        if not (math.isfinite(sd) and sd >= 0.0):
            raise InputError(f"noise_sd must be finite and >= 0, got {self.noise_sd!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "change_points", _frozen(cps))
        object.__setattr__(self, "levels", _frozen(lv))
        object.__setattr__(self, "noise_sd", sd)

    @classmethod
    def from_lengths(cls, lengths: Sequence[int], levels: Sequence[float],
                     noise_sd: float = 1.0) -> "StepModel":
        cps = np.cumsum(lengths)[:-1]
        return cls(int(np.sum(lengths)), cps, levels, noise_sd)

    @property
    def signs(self) -> np.ndarray:
        return np.sign(np.diff(self.levels)).astype(np.int64)

    def mean(self) -> np.ndarray:
        return _expand(self.n, self.change_points, self.levels)

    def segmentation(self) -> Segmentation:
        return Segmentation(self.n, self.change_points, self.levels, 0.0)

    def min_segment_fraction(self) -> float:
        return float(np.min(np.diff(np.concatenate(([0], self.change_points, [self.n]))))) / self.n

    def has_staircase(self) -> bool:
        s = self.signs
        return bool(np.any(s[1:] == s[:-1]))


def expand(seg: Segmentation) -> np.ndarray:
    """Length-``n`` step sequence encoded by ``seg``."""
    return _expand(seg.n, seg.change_points, seg.levels)


def compress(m, lam: float = 0.0, atol: float = 0.0) -> Segmentation:
    """Inverse of :func:`expand`.

    With ``atol > 0`` neighbouring samples closer than ``atol`` are treated as
    one segment and that segment's level is the average of its samples.
    """
    m = np.asarray(m, dtype=np.float64).reshape(-1)
    if m.size < 1:
        raise InputError("cannot compress an empty sequence")
    if atol > 0.0:
        cps = np.flatnonzero(np.abs(np.diff(m)) > atol) + 1
        b = np.concatenate(([0], cps, [m.size]))
        levels = np.add.reduceat(m, b[:-1]) / np.diff(b)
        # averaging may collapse a jump that was just above atol
        keep = np.flatnonzero(np.diff(levels) != 0.0)
        if keep.size != cps.size:
            return compress(_expand(m.size, cps, levels), lam)
    else:
        cps = np.flatnonzero(np.diff(m) != 0.0) + 1
        levels = m[np.concatenate(([0], cps))]
    return Segmentation(m.size, cps, levels, lam)


def set_distance(a: Iterable[int], b: Iterable[int]) -> float:
    """Two-sided Hausdorff distance between finite index sets.

    Both empty gives 0; exactly one empty gives ``inf``.
    """
    a = np.unique(np.asarray(list(a), dtype=np.int64))
    b = np.unique(np.asarray(list(b), dtype=np.int64))
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def eps_sign_consistent(est: Segmentation, truth: StepModel | Segmentation,
                        eps: float) -> bool:
    """Approximate support and sign recovery within ``eps * n`` samples.

    True iff every estimated change point is within ``eps*n`` of a true one,
    and every true change point has an estimated change point with the same
    jump sign within ``eps*n``.
    """
    if est.n != truth.n:
        raise InputError(f"length mismatch: {est.n} vs {truth.n}")
    radius = eps * truth.n
    if not set_distance(est.change_points, truth.change_points) < radius:
        return False
    est_cp, est_sg = est.change_points, est.signs
    for p, s in zip(truth.change_points, truth.signs):
        near = np.abs(est_cp - p) < radius
        if not np.any(est_sg[near] == s):
            return False
    return True
