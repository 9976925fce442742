import numpy as np
import pytest

from comanifold.incomplete import (
    MaskSpec,
    ObservedMatrix,
    apply_mask,
    fill_with,
    observed_mean,
    project_observed,
)


def random_observed(m, n, frac, seed):
    rng = np.random.default_rng(seed)
    return apply_mask(rng.normal(size=(m, n)), MaskSpec(frac, seed))


def test_unobserved_slots_store_zero_and_are_read_only():
    X = ObservedMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[True, False], [False, True]]))
    assert X.values[0, 1] == 0.0 and X.values[1, 0] == 0.0
    with pytest.raises(ValueError):
        X.values[0, 0] = 5.0


def test_constructor_rejects_bad_input():
    with pytest.raises(ValueError):
        ObservedMatrix(np.ones((2, 2)), np.zeros((2, 2), dtype=bool))
    with pytest.raises(ValueError):
        ObservedMatrix(np.ones((1, 3)), np.ones((1, 3), dtype=bool))
    with pytest.raises(ValueError):
        ObservedMatrix(np.ones((2, 3)), np.ones((3, 2), dtype=bool))
    with pytest.raises(ValueError):
        ObservedMatrix(np.array([[np.inf, 1.0], [1.0, 1.0]]), np.ones((2, 2), dtype=bool))


def test_nan_round_trip():
    A = np.array([[1.0, np.nan, 3.0], [np.nan, 5.0, 6.0]])
    X = ObservedMatrix.from_nan(A)
    np.testing.assert_array_equal(X.mask, ~np.isnan(A))
    np.testing.assert_array_equal(X.to_nan(), A)
    np.testing.assert_array_equal(X.transpose().mask, X.mask.T)


def test_project_observed_identity_when_complete():
    A = np.array([[1.0, -2.0], [3.5, 4.0]])
    np.testing.assert_array_equal(project_observed(ObservedMatrix.complete(A)), A)


def test_project_observed_single_entry():
    A = np.arange(1.0, 7.0).reshape(2, 3)
    mask = np.zeros((2, 3), dtype=bool)
    mask[0, 0] = True
    expected = np.zeros((2, 3))
    expected[0, 0] = A[0, 0]
    np.testing.assert_array_equal(project_observed(ObservedMatrix(A, mask)), expected)


def test_project_observed_matches_loop():
    X = random_observed(5, 4, 0.4, 3)
    out = project_observed(X)
    for i in range(5):
        for j in range(4):
            assert out[i, j] == (X.values[i, j] if X.mask[i, j] else 0.0)


def test_fill_with_complete_ignores_u():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(fill_with(ObservedMatrix.complete(A), np.full((2, 2), 9.0)), A)


def test_fill_with_zero_gives_projection():
    A = np.arange(1.0, 7.0).reshape(2, 3)
    mask = np.zeros((2, 3), dtype=bool)
    mask[1, 2] = True
    X = ObservedMatrix(A, mask)
    np.testing.assert_array_equal(fill_with(X, np.zeros((2, 3))), project_observed(X))


def test_fill_with_mean_blend_matches_loop():
    X = random_observed(4, 3, 0.5, 11)
    mu = observed_mean(X)
    out = fill_with(X, np.full(X.shape, mu))
    for i in range(4):
        for j in range(3):
            assert out[i, j] == (X.values[i, j] if X.mask[i, j] else mu)


def test_fill_with_shape_mismatch():
    X = random_observed(4, 3, 0.2, 0)
    with pytest.raises(ValueError):
        fill_with(X, np.zeros((3, 4)))


def test_observed_mean_constant_matrix():
    X = apply_mask(np.full((6, 5), 2.25), MaskSpec(0.4, 8))
    assert observed_mean(X) == 2.25


def test_observed_mean_diagonal_example():
    X = ObservedMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]), np.eye(2, dtype=bool))
    assert observed_mean(X) == 2.5


def test_observed_mean_matches_sum_over_count():
    X = random_observed(7, 6, 0.3, 5)
    total, count = 0.0, 0
    for i in range(7):
        for j in range(6):
            if X.mask[i, j]:
                total += X.values[i, j]
                count += 1
    assert observed_mean(X) == pytest.approx(total / count, rel=1e-14)


def test_apply_mask_fraction_zero_is_complete():
    X = apply_mask(np.ones((4, 5)), MaskSpec(0.0, 1))
    assert X.mask.all()


def test_apply_mask_exact_count_and_coverage():
    X = apply_mask(np.ones((20, 20)), MaskSpec(0.5, 4))
    assert (~X.mask).sum() == 200
    assert X.mask.any(axis=1).all() and X.mask.any(axis=0).all()


def test_apply_mask_deterministic_and_seed_sensitive():
    A = np.random.default_rng(0).normal(size=(12, 9))
    a = apply_mask(A, MaskSpec(0.35, 7))
    b = apply_mask(A, MaskSpec(0.35, 7))
    c = apply_mask(A, MaskSpec(0.35, 8))
    np.testing.assert_array_equal(a.mask, b.mask)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.mask, c.mask)


def test_apply_mask_infeasible_fraction():
    with pytest.raises(ValueError):
        apply_mask(np.ones((4, 10)), MaskSpec(0.9, 0))


def test_mask_spec_validation():
    with pytest.raises(ValueError):
        MaskSpec(1.0, 0)
    with pytest.raises(ValueError):
        MaskSpec(-0.1, 0)
    with pytest.raises(ValueError):
        MaskSpec(0.5, -1)
