from __future__ import annotations

import numpy as np
import pytest

from fusedlasso import (
    InputError,
    StepModel,
    exact_recovery_failure_rate,
    irrep_profile,
    lasso_solve,
    lemma10_witness,
    normal_matrix,
    solve,
    strong_irrep_holds,
    to_lasso,
)
from fusedlasso.lasso import dense_irrep_values


def test_design_small_case():
    eq = to_lasso([1.0, 2.0, 3.0, 4.0])
    expected = np.array([[-3, -2, -1], [1, -2, -1], [1, 2, -1], [1, 2, 3]]) / 4
    np.testing.assert_allclose(eq.design, expected, atol=1e-15)
    np.testing.assert_allclose(eq.y_tilde, [-1.5, -0.5, 0.5, 1.5])


def test_normal_matrix_is_gram(rng):
    for n in (2, 3, 7, 20):
        A = to_lasso(rng.normal(size=n)).design
        np.testing.assert_allclose(normal_matrix(n), A.T @ A, atol=1e-12)


def test_back_and_forward_maps(rng):
    y = rng.normal(size=12)
    eq = to_lasso(y)
    m = solve(y, 0.4).expand()
    np.testing.assert_allclose(eq.back_map(eq.forward_map(m)), m, atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_lasso_round_trip_matches_flsa(seed):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=int(rng.integers(3, 25)))
    lam = float(rng.uniform(0.05, 1.5))
    eq = to_lasso(y)
    x = lasso_solve(eq.design, eq.y_tilde, lam)
    np.testing.assert_allclose(eq.back_map(x), solve(y, lam).expand(), atol=1e-8)


def test_single_knot_tent():
    prof = irrep_profile(100, [50], [1])
    assert prof.full[49] == 1.0
    assert prof.full[0] == pytest.approx(1 / 50)
    assert prof.full[-1] == pytest.approx(1 / 50)
    assert prof.max_abs < 1.0


def test_staircase_profile_is_one_between_same_sign_knots():
    prof = irrep_profile(60, [20, 40], [1, 1])
    np.testing.assert_array_equal(prof.full[19:40], 1.0)
    assert not strong_irrep_holds(prof, 1.0)


def test_alternating_profile_is_strictly_inside():
    prof = irrep_profile(60, [20, 40], [1, -1])
    assert prof.max_abs < 1.0
    np.testing.assert_allclose(prof.full[29], 0.0, atol=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_closed_form_matches_dense(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 120))
    k = int(rng.integers(1, min(n - 1, 6) + 1))
    K = np.sort(rng.choice(np.arange(1, n), size=k, replace=False))
    s = rng.choice([-1, 1], size=k)
    np.testing.assert_allclose(irrep_profile(n, K, s).values, dense_irrep_values(n, K, s),
                               atol=1e-9)


def test_support_validation():
    with pytest.raises(InputError):
        irrep_profile(10, [], [])
    with pytest.raises(InputError):
        irrep_profile(10, [10], [1])
    with pytest.raises(InputError):
        irrep_profile(10, [3, 2], [1, 1])
    with pytest.raises(InputError):
        irrep_profile(10, [3], [0.5])


def test_lemma10_witness_on_staircase():
    res = lemma10_witness(60, [20, 40], [1, 1], noise_seed=1, reps=200)
    assert res.passed and res.failure_fraction >= 0.4


def test_witness_requires_violated_condition():
    with pytest.raises(InputError):
        lemma10_witness(60, [20, 40], [1, -1], noise_seed=1, reps=10)


def test_alternating_truth_recovers_more_often():
    stair = StepModel(60, [20, 40], [1.0, 2.0, 3.0], 0.01)
    alt = StepModel(60, [20, 40], [1.0, 2.0, 1.0], 0.01)
    assert exact_recovery_failure_rate(alt, 100, 3) < exact_recovery_failure_rate(stair, 100, 3)
