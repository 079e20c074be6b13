"""Lasso reformulation of the FLSA and irrepresentable-condition diagnostics.

Index convention: lasso coefficient ``x_t`` (1-based, ``t = 1 .. n-1``) is the
jump ``m_{t+1} - m_t``.  Its index equals the 0-based change-point position
used by :class:`~fusedlasso.core.Segmentation`, so a true support ``K`` can be
passed straight from ``StepModel.change_points``.

Caveat for reuse: the centred noise of the transformed problem is
``(I - 11'/n) eps``; its components are *not* independent even when ``eps``
has independent entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import StepModel, as_signal
from .errors import DomainError, InputError
from .path import trace_path

__all__ = [
    "LassoEquivalent",
    "IrrepProfile",
    "WitnessResult",
    "to_lasso",
    "lasso_solve",
    "normal_matrix",
    "irrep_profile",
    "dense_irrep_values",
    "strong_irrep_holds",
    "exact_recovery_failure_rate",
    "lemma10_witness",
]


@dataclass(frozen=True, eq=False)
class LassoEquivalent:
    y_tilde: np.ndarray
    design: np.ndarray
    mean: float

    @property
    def n(self) -> int:
        return int(self.y_tilde.size)

    def back_map(self, x) -> np.ndarray:
        """Recover the FLSA fit ``m`` from jump coefficients ``x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n - 1,):
            raise InputError(f"expected {self.n - 1} coefficients, got shape {x.shape}")
        partial = np.cumsum(x)
        m1 = self.mean - math.fsum(partial) / self.n
        return m1 + np.concatenate(([0.0], partial))

    @staticmethod
    def forward_map(m) -> np.ndarray:
        return np.diff(np.asarray(m, dtype=np.float64))


def _design(n: int) -> np.ndarray:
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, n)[None, :]
    return np.where(i <= j, (j - n) / n, j / n).astype(np.float64)


def to_lasso(y) -> LassoEquivalent:
    """Standard-lasso form ``min 0.5*||y~ - A x||^2 + lam*||x||_1``."""
    v = as_signal(y).values
    n = v.size
    if n < 2:
        raise InputError("the lasso form needs at least two samples")
    mean = math.fsum(v) / n
    return LassoEquivalent(v - mean, _design(n), mean)


def normal_matrix(n: int) -> np.ndarray:
    """Gram matrix of the lasso design: ``C[i,k] = i (n - k) / n`` for i <= k."""
    if n < 2:
        raise InputError("n must be >= 2")
    i = np.arange(1, n)
    lo = np.minimum.outer(i, i)
    hi = np.maximum.outer(i, i)
    return lo * (n - hi) / n


def lasso_solve(design: np.ndarray, target: np.ndarray, lam: float,
                tol: float = 1e-12, max_rounds: int = 5000) -> np.ndarray:
    """Small dense lasso solver: coordinate descent plus support refinement.

    After each round of sweeps the least-squares system on the current
    support (with fixed signs) is solved exactly and kept if it satisfies the
    optimality conditions to ``tol``.
    """
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    A = np.asarray(design, dtype=np.float64)
    C = A.T @ A
    c = A.T @ np.asarray(target, dtype=np.float64)
    p = C.shape[0]
    diag = np.diag(C)
    x = np.zeros(p)
    slack = tol * max(1.0, lam, float(np.max(np.abs(c))))

    def certified(xc: np.ndarray) -> bool:
        g = c - C @ xc
        on = xc != 0
        if np.any(np.abs(g[~on]) > lam + slack):
            return False
        return bool(np.all(np.abs(g[on] - lam * np.sign(xc[on])) <= slack))

    for _ in range(max_rounds):
        for _sweep in range(20):
            for j in range(p):
                r = c[j] - C[j] @ x + diag[j] * x[j]
                x[j] = np.sign(r) * max(abs(r) - lam, 0.0) / diag[j]
        support = np.flatnonzero(x)
        cand = np.zeros(p)
        if support.size:
            s = np.sign(x[support])
            sub = np.linalg.solve(C[np.ix_(support, support)], c[support] - lam * s)
            if np.all(np.sign(sub) == s):
                cand[support] = sub
        if certified(cand):
            return cand
        if certified(x):
            return x
    raise DomainError("lasso coordinate descent did not certify")


@dataclass(frozen=True, eq=False)
class IrrepProfile:
    """``C[t, K] C[K, K]^{-1} s`` evaluated at every ``t`` outside ``K``."""

    n: int
    K: np.ndarray
    s: np.ndarray
    positions: np.ndarray
    values: np.ndarray
    full: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def _check_support(n: int, K, s) -> tuple[np.ndarray, np.ndarray]:
    K = np.asarray(K, dtype=np.int64).reshape(-1)
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    if K.size == 0:
        raise InputError("support K must be non-empty")
    if K.size != s.size:
        raise InputError(f"{s.size} signs for {K.size} support indices")
    if np.any(np.diff(K) <= 0):
        raise InputError("K must be strictly increasing")
    if K[0] < 1 or K[-1] > n - 1:
        raise InputError(f"K must lie in 1..{n - 1}")
    if not np.all(np.abs(s) == 1):
        raise InputError("signs must be +1 or -1")
    return K, s


def irrep_profile(n: int, K, s) -> IrrepProfile:
    """Closed form: linear spline through (0, 0), (K_i, s_i), (n, 0)."""
    K, s = _check_support(n, K, s)
    t = np.arange(1, n)
    knots = np.concatenate(([0], K, [n]))
    vals = np.concatenate(([0.0], s, [0.0]))
    full = np.interp(t, knots, vals)
    off = np.ones(n - 1, dtype=bool)
    off[K - 1] = False
    return IrrepProfile(n, K, s, t[off], full[off], full)


def dense_irrep_values(n: int, K, s) -> np.ndarray:
    """Same quantity by dense linear algebra (cross-check only)."""
    K, s = _check_support(n, K, s)
    C = normal_matrix(n)
    idx = K - 1
    comp = np.setdiff1d(np.arange(n - 1), idx)
    return C[np.ix_(comp, idx)] @ np.linalg.solve(C[np.ix_(idx, idx)], s)


def strong_irrep_holds(profile: IrrepProfile, delta: float) -> bool:
    return profile.max_abs < delta


def _exact_recovery(path, cps: np.ndarray, signs: np.ndarray) -> bool:
    return any(
        np.array_equal(ev.change_points, cps) and np.array_equal(ev.signs, signs)
        for ev in path.events
    )


def exact_recovery_failure_rate(truth: StepModel, reps: int, seed: int) -> float:
    """Fraction of noisy replicates for which no lambda recovers the support.

    The whole solution path is scanned, so "no lambda" is exact rather than a
    grid approximation.
    """
    if truth.noise_sd <= 0:
        raise InputError("noise level must be positive")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    mean = truth.mean()
    fails = 0
    for _ in range(reps):
        y = mean + truth.noise_sd * rng.standard_normal(truth.n)
        if not _exact_recovery(trace_path(y), truth.change_points, truth.signs):
            fails += 1
    return fails / reps


@dataclass(frozen=True)
class WitnessResult:
    failure_fraction: float
    threshold: float
    reps: int

    @property
    def passed(self) -> bool:
        return self.failure_fraction >= self.threshold

    def __bool__(self) -> bool:
        return self.passed


def lemma10_witness(n: int, K, s, noise_seed: int, sigma: float = 0.01,
                    reps: int = 500, jump: float = 1.0, base: float = 1.0,
                    delta: float = 0.5, slack: float = 0.1) -> WitnessResult:
    """Monte-Carlo check that exact support recovery fails often.

    Requires that the irrepresentable profile reaches magnitude 1 off the
    support.  For symmetric continuous noise the failure probability is at
    least ``delta = 1/2``; ``slack`` absorbs sampling error.
    """
    profile = irrep_profile(n, K, s)
    if profile.max_abs < 1.0 - 1e-12:
        raise InputError(
            f"irrepresentable profile peaks at {profile.max_abs:.6f} < 1 off the support"
        )
    if not sigma > 0:
        raise InputError("sigma must be positive")
    levels = base + jump * np.concatenate(([0.0], np.cumsum(profile.s)))
    truth = StepModel(n, profile.K, levels, sigma)
    frac = exact_recovery_failure_rate(truth, reps, noise_seed)
    return WitnessResult(frac, delta - slack, reps)
