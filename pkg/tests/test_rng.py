import numpy as np
import pytest

from stoch_euler.rng import brownian_increments, brownian_path, coarsen, member_seed


def test_counter_based_streams_are_reproducible_and_distinct():
    a = brownian_increments(5, 0.01, 7, 2, 10)
    assert np.array_equal(a, brownian_increments(5, 0.01, 7, 2, 10))
    assert not np.array_equal(a, brownian_increments(5, 0.01, 7, 3, 10))
    assert not np.array_equal(a, brownian_increments(5, 0.01, 7, 2, 11))


def test_path_rows_match_single_steps():
    p = brownian_path(3, 0.1, 4, 1, 0)
    assert np.array_equal(p[2], brownian_increments(3, 0.1, 1, 0, 2))


def test_coarsen_sums_blocks():
    inc = np.arange(12.0).reshape(6, 2)
    np.testing.assert_array_equal(coarsen(inc, 3), [[6, 9], [24, 27]])
    with pytest.raises(ValueError):
        coarsen(inc, 4)


def test_member_seed_stable():
    assert member_seed(0, 1) == member_seed(0, 1) != member_seed(0, 2)
