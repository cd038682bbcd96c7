import numpy as np
import pytest

from catbranch.chain import (
    FiniteChain,
    LatticeWalk,
    bar_hit_lst,
    green_lst,
    hit_lst,
    is_recurrent,
    validate,
)
from catbranch.errors import NegativeOffDiagonal, NotIrreducible, RowSumNonzero


@pytest.fixture(scope="module")
def two_state():
    return FiniteChain([1, 2], [[-1.0, 1.0], [1.0, -1.0]])


@pytest.fixture(scope="module")
def srw1d():
    return LatticeWalk(1, {(-1,): 0.5, (1,): 0.5})


def test_validate_rejects_bad_generators():
    with pytest.raises(RowSumNonzero):
        validate({"states": [0, 1], "generator": [[-1.0, 2.0], [1.0, -1.0]]})
    with pytest.raises(NegativeOffDiagonal):
        validate({"states": [0, 1], "generator": [[1.0, -1.0], [1.0, -1.0]]})
    with pytest.raises(NotIrreducible):
        validate({"states": [0, 1, 2],
                  "generator": [[-1.0, 1.0, 0.0],
                                [1.0, -1.0, 0.0],
                                [0.0, 0.0, 0.0]]})


def test_validate_accepts_two_state(two_state):
    assert validate(two_state) is two_state
    np.testing.assert_allclose(two_state.Q.sum(axis=1), 0.0, atol=1e-14)


def test_hit_transform_closed_form(two_state):
    # single exponential sojourn: F*_{2,1}(lam) = 1/(1+lam)
    for lam in (0.0, 0.5, 1.0, 3.0):
        got = hit_lst(two_state, 2, 1, (), lam)
        assert got.value == pytest.approx(1.0 / (1.0 + lam), abs=1e-13)
    assert hit_lst(two_state, 2, 1, (), 1.0).value == pytest.approx(0.5)


def test_bar_return_closed_form(two_state):
    # after leaving 1 the walk sits at 2 for Exp(1): F-bar*_{1,1} = 1/(1+lam)
    for lam in (0.0, 0.7, 2.0):
        got = bar_hit_lst(two_state, 1, 1, (), lam)
        assert got.value == pytest.approx(1.0 / (1.0 + lam), abs=1e-13)
        assert got.atom0 == pytest.approx(0.0)
    # derivative of 1/(1+lam) is -1/(1+lam)^2
    got = bar_hit_lst(two_state, 1, 1, (), 1.0)
    assert got.dvalue == pytest.approx(-0.25, abs=1e-12)


def test_atom_at_zero_counts_direct_jumps():
    chain = FiniteChain(
        [0, 1, 2],
        [[-2.0, 1.0, 1.0], [1.0, -1.0, 0.0], [1.0, 0.0, -1.0]],
    )
    got = bar_hit_lst(chain, 0, 1, (2,), 0.0)
    assert got.atom0 == pytest.approx(0.5)


def test_green_function_closed_form(two_state):
    # G_lam(1,1) = (lam+1)/(lam^2+2lam)
    for lam in (0.5, 1.0, 2.0):
        expect = (lam + 1.0) / (lam * lam + 2.0 * lam)
        assert green_lst(two_state, 1, 1, lam) == pytest.approx(expect, rel=1e-12)
    assert green_lst(two_state, 1, 1, 1.0) == pytest.approx(2.0 / 3.0)


def test_total_mass_monotone_in_lambda(two_state):
    vals = [hit_lst(two_state, 2, 1, (), lam).value for lam in (0.0, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_srw1d_censored_taboo_values(srw1d):
    # from 0, reaching -1 while avoiding 1 succeeds only on a first jump
    # left, so the mass is 1/2; from 2, reaching 0 while avoiding 1 is
    # impossible since every leftward path passes through 1
    got = bar_hit_lst(srw1d, (0,), (-1,), ((1,),), 0.0)
    assert got.value == pytest.approx(0.5, abs=1e-10)
    got = bar_hit_lst(srw1d, (2,), (0,), ((1,),), 0.0)
    assert got.value == pytest.approx(0.0, abs=1e-10)


def test_srw1d_untabooed_return_is_certain(srw1d):
    got = bar_hit_lst(srw1d, (0,), (0,), (), 0.0)
    assert got.value == pytest.approx(1.0, abs=1e-9)


def test_recurrence_classification():
    assert is_recurrent(LatticeWalk(1, {(-1,): 0.5, (1,): 0.5}))
    assert is_recurrent(LatticeWalk(2, {(1, 0): 0.25, (-1, 0): 0.25,
                                        (0, 1): 0.25, (0, -1): 0.25}))
    walk3 = LatticeWalk(3, {(1, 0, 0): 1 / 6, (-1, 0, 0): 1 / 6,
                            (0, 1, 0): 1 / 6, (0, -1, 0): 1 / 6,
                            (0, 0, 1): 1 / 6, (0, 0, -1): 1 / 6})
    assert not is_recurrent(walk3)


def test_lattice_positive_lambda_matches_big_finite_truncation(srw1d):
    lam = 0.8
    got = bar_hit_lst(srw1d, (0,), (1,), (), lam).value
    # brute force: dense linear solve on [-60, 60] with killing at the edge;
    # u(x) = E_x[exp(-lam tau_1)] solves (lam - Q)u = 0 with u(1) = 1
    states = list(range(-60, 61))
    n = len(states)
    A = np.zeros((n, n))
    b = np.zeros(n)
    for i, x in enumerate(states):
        if x == 1:
            A[i, i] = 1.0
            b[i] = 1.0
            continue
        A[i, i] = lam + 1.0
        if i > 0:
            A[i, i - 1] = -0.5
        if i < n - 1:
            A[i, i + 1] = -0.5
    u = np.linalg.solve(A, b)
    # after leaving 0 the walk restarts at -1 or 1 with probability 1/2
    ref = 0.5 * u[states.index(-1)] + 0.5 * u[states.index(1)]
    assert got == pytest.approx(ref, abs=1e-10)
