"""Variance-only filtering and l1 trend filtering.

Variance filtering: for zero-mean data with piecewise-constant variance, the
l1-penalised Gaussian likelihood in the natural parameter has the same
optimality conditions as the FLSA applied to ``y**2``, so it is solved with
the same kernel.

Trend filtering::

    minimise 0.5 * ||y - m||^2 + lam * sum_t |m_{t+1} - 2 m_t + m_{t-1}|

Its dual is the box-constrained QP ``min 0.5 * ||y - D' z||^2, |z| <= lam``
with ``D`` the second-difference operator and ``m = y - D' z``.  The dual
``z`` is the double cumulative sum of ``y - m`` (an integrated random walk)
and must return to zero at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import solveh_banded
from scipy.sparse.linalg import splu

from ._kernels import compensated_cumsum
from .core import Segmentation, as_signal
from .errors import ConvergenceError, DegenerateVarianceError, DomainError, InputError
from .solver import _check_lambda, solve

__all__ = [
    "VarianceSegmentation",
    "TrendFit",
    "TrendKktReport",
    "variance_solve",
    "trend_solve",
    "trend_admm",
    "trend_verify_kkt",
    "second_differences",
]


@dataclass(frozen=True, eq=False, repr=False)
class VarianceSegmentation(Segmentation):
    """Segmentation whose levels are variance estimates (all > 0)."""

    def __post_init__(self):
        super().__post_init__()
        bad = np.flatnonzero(self.levels <= 0.0)
        if bad.size:
            raise DegenerateVarianceError(int(bad[0]), float(self.levels[bad[0]]))


def variance_solve(y, lam: float) -> VarianceSegmentation:
    """Piecewise-constant variance estimate: the FLSA fit of ``y**2``."""
    v = as_signal(y).values
    seg = solve(v * v, lam)
    return VarianceSegmentation(seg.n, seg.change_points, seg.levels, seg.lam)


# -- trend filtering -----------------------------------------------------------

def second_differences(m) -> np.ndarray:
    """``m[t+1] - 2 m[t] + m[t-1]`` for interior t (length n - 2)."""
    m = np.asarray(m, dtype=np.float64)
    return m[2:] - 2.0 * m[1:-1] + m[:-2]


def _dt(z: np.ndarray, n: int) -> np.ndarray:
    """Adjoint of the second-difference operator."""
    out = np.zeros(n)
    out[:-2] += z
    out[1:-1] -= 2.0 * z
    out[2:] += z
    return out


@dataclass(frozen=True)
class TrendKktReport:
    feasible: bool
    lam: float
    tol: float
    box_residual: float
    end_residual: float
    sign_mismatch: list[int] = field(default_factory=list)
    affine_violation: float = 0.0

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "lambda": self.lam,
            "tol": self.tol,
            "box_residual": self.box_residual,
            "end_residual": self.end_residual,
            "sign_mismatch": list(self.sign_mismatch),
            "affine_violation": self.affine_violation,
        }


@dataclass(frozen=True, eq=False)
class TrendFit:
    """Piecewise-linear fit; ``dual[t-1]`` is the multiplier of the kink at sample t."""

    fitted: np.ndarray
    kink_points: np.ndarray
    lam: float
    dual: np.ndarray
    kkt: TrendKktReport | None = None


# upper banded storage of D D' (diagonals 6, -4, 1)
def _hess_band(size: int) -> np.ndarray:
    ab = np.zeros((3, size))
    ab[0, 2:] = 1.0
    ab[1, 1:] = -4.0
    ab[2, :] = 6.0
    return ab


def _restricted_band(idx: np.ndarray) -> np.ndarray:
    """Banded storage of the principal submatrix of D D' on sorted ``idx``."""
    vals = {0: 6.0, 1: -4.0, 2: 1.0}
    k = idx.size
    ab = np.zeros((3, k))
    ab[2, :] = 6.0
    if k > 1:
        d1 = idx[1:] - idx[:-1]
        ab[1, 1:] = [vals.get(int(d), 0.0) for d in d1]
    if k > 2:
        d2 = idx[2:] - idx[:-2]
        ab[0, 2:] = [vals.get(int(d), 0.0) for d in d2]
    return ab


def _dual_fit(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return y - _dt(z, y.size)


def _polish(y: np.ndarray, z: np.ndarray, lam: float, band: float,
            slack: float, max_iter: int = 50) -> np.ndarray | None:
    """Primal-dual active-set refinement started from the barrier point.

    Each round fixes the coordinates predicted to sit at a bound, solves the
    remaining ones exactly and re-predicts from the gradient.  Returns the
    exact dual once the prediction is stable and optimal, else None.
    """
    dy = second_differences(y)
    upper = z >= lam - band
    lower = z <= -lam + band
    for _ in range(max_iter):
        zf = np.where(upper, lam, np.where(lower, -lam, 0.0))
        free = np.flatnonzero(~(upper | lower))
        if free.size:
            # H_FF z_F = (D y)_F - H_FA z_A
            rhs = dy - _hess_apply(zf)
            zf[free] = solveh_banded(_restricted_band(free), rhs[free])
        grad = _hess_apply(zf) - dy
        trial = zf - grad / 6.0
        new_upper = trial > lam + slack * (~upper) - slack * upper
        new_lower = trial < -lam - slack * (~lower) + slack * lower
        if np.array_equal(new_upper, upper) and np.array_equal(new_lower, lower):
            ok = (
                np.all(np.abs(zf) <= lam + slack)
                and np.all(grad[upper] <= slack)
                and np.all(grad[lower] >= -slack)
            )
            return zf if ok else None
        upper, lower = new_upper, new_lower
    return None


def _hess_apply(z: np.ndarray) -> np.ndarray:
    return second_differences(_dt(z, z.size + 2))


def trend_solve(y, lam: float, tol: float = 1e-8, max_newton: int = 5000) -> TrendFit:
    """l1 trend filter via a log-barrier method on the dual, then exact polish."""
    v = np.array(as_signal(y).values)
    n = v.size
    if n < 3:
        raise InputError("trend filtering needs at least three samples")
    lam = _check_lambda(lam)
    if tol <= 0:
        raise DomainError("tol must be positive")
    p = n - 2
    scale = max(1.0, float(np.max(np.abs(v))))
    slack = 1e-9 * scale
    if lam == 0.0:
        z = np.zeros(p)
        return _finish(v, z, lam, tol)

    dy = second_differences(v)
    band = _hess_band(p)
    z = np.zeros(p)
    mu = lam * lam
    steps = 0
    while True:
        # Newton on q(z) - mu * sum(log(lam - z) + log(lam + z))
        for _ in range(100):
            a, b = lam - z, lam + z
            grad = _hess_apply(z) - dy + mu / a - mu / b
            curv = mu / a**2 + mu / b**2
            hb = band.copy()
            hb[2] += curv
            step = -solveh_banded(hb, grad)
            dec = -float(grad @ step)
            if dec < 1e-14 * max(1.0, lam * lam):
                break
            # stay strictly inside the box
            t = 1.0
            pos, neg = step > 0, step < 0
            if np.any(pos):
                t = min(t, 0.99 * float(np.min(a[pos] / step[pos])))
            if np.any(neg):
                t = min(t, 0.99 * float(np.min(-b[neg] / step[neg])))
            f0 = _barrier(v, z, lam, mu)
            while _barrier(v, z + t * step, lam, mu) > f0 - 0.25 * t * dec and t > 1e-12:
                t *= 0.5
            z = z + t * step
            steps += 1
            if steps > max_newton:
                raise ConvergenceError("trend barrier method did not converge", dec)
        polished = _polish(v, z, lam, band=max(10.0 * mu / lam, 1e-12 * lam), slack=slack)
        if polished is not None:
            return _finish(v, polished, lam, tol)
        if mu < 1e-16 * lam * lam:
            raise ConvergenceError("trend active set could not be identified", mu)
        mu *= 0.1


def _barrier(y: np.ndarray, z: np.ndarray, lam: float, mu: float) -> float:
    a, b = lam - z, lam + z
    if np.any(a <= 0) or np.any(b <= 0):
        return math.inf
    r = _dual_fit(y, z)
    return 0.5 * float(r @ r) - mu * float(np.sum(np.log(a)) + np.sum(np.log(b)))


def _finish(y: np.ndarray, z: np.ndarray, lam: float, tol: float) -> TrendFit:
    m = _dual_fit(y, z)
    w = second_differences(m)
    kinks = np.flatnonzero(np.abs(w) > 1e-9 * max(1.0, float(np.max(np.abs(y))))) + 1
    fit = TrendFit(m, kinks, lam, z)
    report = trend_verify_kkt(y, fit, lam, tol)
    if not report.feasible:
        raise ConvergenceError("trend fit failed its optimality check",
                               max(report.box_residual, report.end_residual,
                                   report.affine_violation))
    return TrendFit(m, kinks, lam, z, report)


def trend_admm(y, lam: float, rho: float | None = None, gap_tol: float = 1e-10,
               max_iter: int = 2_000_000) -> np.ndarray:
    """Reference l1 trend filter by ADMM on the split ``w = D m``.

    Stops when the duality gap, evaluated at the dual iterate clipped to the
    box and its induced primal point, is at most ``gap_tol``.
    """
    v = np.array(as_signal(y).values)
    n = v.size
    if n < 3:
        raise InputError("trend filtering needs at least three samples")
    lam = _check_lambda(lam)
    D = sparse.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(n - 2, n), format="csc")
    rho = lam if rho is None else rho
    rho = max(rho, 1e-3)
    lu = splu((sparse.identity(n, format="csc") + rho * (D.T @ D)).tocsc())
    w = np.zeros(n - 2)
    u = np.zeros(n - 2)
    half_yy = 0.5 * float(v @ v)
    for it in range(max_iter):
        m = lu.solve(v + rho * (D.T @ (w - u)))
        dm = D @ m
        x = dm + u
        w = np.sign(x) * np.maximum(np.abs(x) - lam / rho, 0.0)
        u += dm - w
        if it % 25 == 0:
            z = np.clip(rho * u, -lam, lam)
            mz = v - D.T @ z
            dual = half_yy - 0.5 * float(mz @ mz)
            primal = 0.5 * float((v - mz) @ (v - mz)) + lam * float(np.sum(np.abs(D @ mz)))
            if primal - dual <= gap_tol:
                return mz
    raise ConvergenceError("ADMM did not reach the requested duality gap", primal - dual)


def trend_verify_kkt(y, fit: TrendFit, lam: float | None = None,
                     tol: float = 1e-6) -> TrendKktReport:
    """Rebuild the trend dual from the residuals and test optimality.

    The dual is ``Z[t+1] = sum_{j<=t} sum_{i<=j} (y_i - m_i)`` (1-based), so
    that ``z_t = Z[t]`` for interior t; ``Z[n]`` and ``Z[n+1]`` must vanish.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    v = as_signal(y).values
    lam = fit.lam if lam is None else float(lam)
    m = np.asarray(fit.fitted, dtype=np.float64)
    if m.shape != v.shape:
        raise InputError("fit and data lengths differ")
    n = v.size
    c1 = compensated_cumsum(v - m)[1:]
    big = compensated_cumsum(c1)  # big[t] = Z[t+1]
    z = big[1:n - 1]  # interior duals for 1-based t = 2..n-1
    end_scale = n * (math.fsum(np.abs(v)) + 1.0)
    end = float(max(abs(big[n - 1]), abs(big[n]))) / end_scale
    slack = tol * max(lam, 1.0)
    box = float(max(np.max(np.abs(z), initial=0.0) - lam, 0.0))
    w = second_differences(m)
    wtol = tol * max(1.0, float(np.max(np.abs(v))))
    kink = np.abs(w) > wtol
    mismatch = [
        int(t) + 1
        for t in np.flatnonzero(kink)
        if abs(z[t]) < lam - slack or np.sign(z[t]) != np.sign(w[t])
    ]
    interior = np.abs(z) < lam - slack
    affine = float(np.max(np.abs(w[interior]), initial=0.0))
    feasible = box <= slack and end <= tol and not mismatch and affine <= wtol
    return TrendKktReport(bool(feasible), lam, tol, box, end, mismatch, affine)
