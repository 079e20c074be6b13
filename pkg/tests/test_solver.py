from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fusedlasso import (
    ConvergenceError,
    DomainError,
    Segmentation,
    dual_variables,
    expand,
    lambda_max,
    oracle_solve,
    polish,
    segment_means,
    solve,
    verify_kkt,
)


def objective(y, m, lam):
    y, m = np.asarray(y, float), np.asarray(m, float)
    return 0.5 * float(np.sum((y - m) ** 2)) + lam * float(np.sum(np.abs(np.diff(m))))


def brute_force(y, lam):
    """Minimum over every change-point set and sign pattern of the closed-form fit."""
    y = np.asarray(y, float)
    n = y.size
    best, best_m = math.inf, None
    for k in range(n):
        for cps in itertools.combinations(range(1, n), k):
            for signs in itertools.product((-1, 1), repeat=k):
                levels = segment_means(y, list(cps), list(signs), lam)
                if k and not np.all(np.sign(np.diff(levels)) == signs):
                    continue
                m = expand(Segmentation(n, list(cps), levels, lam)) if k else np.full(n, levels[0])
                f = objective(y, m, lam)
                if f < best:
                    best, best_m = f, m
    return best, best_m


# -- worked fixtures -------------------------------------------------------------

def test_two_step_fixture():
    # segment sums 0 and 2, lengths 2, jump +1: levels (0 + 0.25)/2 and (2 - 0.25)/2
    seg = solve([0, 0, 1, 1], 0.25)
    assert seg.change_points.tolist() == [2]
    np.testing.assert_allclose(seg.levels, [0.125, 0.875], rtol=0, atol=1e-15)


def test_lambda_max_fixtures():
    assert lambda_max([1, 2]) == 0.5
    # partial sums deviate from k * mean by 0.5, 1, 0.5
    assert lambda_max([0, 0, 1, 1]) == 1.0
    assert lambda_max([3.0]) == 0.0
    assert lambda_max([2, 2, 2]) == 0.0


def test_lambda_zero_returns_data():
    y = [1.0, 1.0, 3.0, 2.0]
    seg = solve(y, 0.0)
    np.testing.assert_array_equal(seg.expand(), y)
    assert seg.change_points.tolist() == [2, 3]


def test_constant_input_single_segment():
    for lam in (0.0, 0.3, 10.0):
        assert solve([4.0] * 7, lam).n_segments == 1


def test_above_lambda_max_collapses_to_mean():
    y = [0.0, 3.0, 1.0, 5.0]
    seg = solve(y, lambda_max(y) * 1.000001)
    assert seg.n_segments == 1
    assert seg.levels[0] == pytest.approx(2.25, abs=1e-15)


def test_negative_or_nan_lambda_rejected():
    with pytest.raises(DomainError):
        solve([1, 2], -1e-3)
    with pytest.raises(DomainError):
        solve([1, 2], math.nan)
    with pytest.raises(DomainError):
        solve([1, 2], math.inf)


@pytest.mark.parametrize("seed", range(40))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    y = np.round(rng.normal(size=n), 3)
    lam = float(rng.uniform(0, 1.2)) * max(lambda_max(y), 0.1)
    best, m = brute_force(y, lam)
    seg = solve(y, lam)
    assert objective(y, seg.expand(), lam) == pytest.approx(best, rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(seg.expand(), m, atol=1e-9)


# -- certificate -----------------------------------------------------------------

def test_dual_definition():
    y = np.array([0.0, 0.0, 1.0, 1.0])
    cert = dual_variables(y, solve(y, 0.25), 0.25)
    # z[i] = sum_{j<i} (m_j - y_j)
    np.testing.assert_allclose(cert.z, [0, 0.125, 0.25, 0.125, 0.0], atol=1e-15)
    assert cert.terminal_residual < 1e-15
    assert cert.max_abs_violation == 0.0


def test_verify_kkt_rejects_perturbed_levels():
    y = np.array([0.0, 0.2, 2.0, 2.1, 1.9, -1.0])
    seg = solve(y, 0.3)
    assert verify_kkt(y, seg).feasible
    bad = seg.with_levels(seg.levels + np.r_[0.05, np.zeros(seg.n_segments - 1)])
    assert not verify_kkt(y, bad).feasible


def test_verify_kkt_rejects_wrong_change_point():
    y = np.array([0.0, 0.0, 0.0, 5.0, 5.0, 5.0])
    shifted = Segmentation(6, [2], segment_means(y, [2], [1], 0.5), 0.5)
    report = verify_kkt(y, shifted)
    assert not report.feasible


def test_verify_kkt_rejects_polished_fit():
    y = np.array([0.0, 0.0, 1.0, 1.0])
    pol = polish(y, solve(y, 0.25))
    np.testing.assert_allclose(pol.levels, [0.0, 1.0])
    assert not verify_kkt(y, pol, 0.25).feasible


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=60),
    st.floats(0, 1.5),
)
def test_property_solution_is_certified(values, frac):
    y = np.asarray(values)
    lam = frac * lambda_max(y)
    seg = solve(y, lam)
    assert verify_kkt(y, seg, lam, 1e-8).feasible


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=25), st.floats(0.01, 1.0))
def test_property_agrees_with_oracle(values, frac):
    y = np.asarray(values, dtype=float)
    lam = frac * max(lambda_max(y), 1e-3)
    np.testing.assert_allclose(solve(y, lam).expand(), oracle_solve(y, lam).expand(), atol=1e-6)


def test_oracle_reports_nonconvergence():
    y = np.random.default_rng(1).normal(size=400)
    with pytest.raises(ConvergenceError):
        oracle_solve(y, 2.0, max_iter=0)


def test_solution_translation_equivariant(rng):
    y = rng.normal(size=80)
    a = solve(y, 1.3)
    b = solve(y + 7.5, 1.3)
    assert a.change_points.tolist() == b.change_points.tolist()
    np.testing.assert_allclose(b.levels, a.levels + 7.5, atol=1e-12)


def test_integer_ties_regression():
    # tied integer data once produced a rounding-level step whose arbitrary sign
    # corrupted the closed-form refit of its neighbours
    from pathlib import Path

    y = np.loadtxt(Path(__file__).parent / "data" / "ties_n199.txt")
    lam = lambda_max(y) / 3
    seg = solve(y, lam)
    assert verify_kkt(y, seg, lam, 1e-8).feasible
    np.testing.assert_allclose(seg.expand(), oracle_solve(y, lam).expand(), atol=1e-9)


@pytest.mark.parametrize("seed", range(30))
def test_integer_data_certified(seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(-3, 4, size=int(rng.integers(50, 3000))).astype(float)
    for frac in (0.05, 0.1, 1 / 3, 0.7):
        lam = frac * lambda_max(y)
        assert verify_kkt(y, solve(y, lam), lam, 1e-8).feasible
