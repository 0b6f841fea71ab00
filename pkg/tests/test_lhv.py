import itertools

import pytest

from qutrit_kcbs import _kernels
from qutrit_kcbs.errors import InvalidN
from qutrit_kcbs.lhv import (
    Assignment,
    cycle_min,
    eq1_certificate,
    eq1_min,
    eq1_value,
    eq2_certificate,
    eq2_min,
    eq2_value,
)

ALL5 = list(itertools.product((1, -1), repeat=5))
ALL6 = list(itertools.product((1, -1), repeat=6))


def test_eq1_values():
    assert eq1_value((1, 1, 1, 1, 1)) == 5
    assert eq1_value((1, -1, 1, -1, 1)) == -3
    assert eq1_value((-1, -1, -1, -1, -1)) == 5
    assert eq1_value(Assignment((1, -1, 1, -1, 1))) == -3


def test_eq2_values():
    assert eq2_value((1, 1, 1, 1, 1, 1)) == 4
    assert eq2_value((1, -1, 1, -1, 1, -1)) == -4
    assert eq2_value((1, 1, 1, 1, 1, -1)) == 4


def test_bad_assignments():
    with pytest.raises(ValueError):
        Assignment((1, 0, 1))
    with pytest.raises(ValueError):
        eq1_value((1, 1, 1))
    with pytest.raises(ValueError):
        eq2_value((1, 1, 1, 1, 1))


def test_eq1_certificate():
    cert = eq1_certificate()
    assert eq1_min() == -3
    assert cert.n_assignments == 32
    assert len(cert.minimizers) == 10
    assert cert.maximum == 5
    # an odd cycle always has an even number of disagreeing edges
    assert set(eq1_value(a) for a in ALL5) == {-3, 1, 5}


def test_eq2_certificate():
    cert = eq2_certificate()
    assert eq2_min() == -4
    assert cert.n_assignments == 64
    assert all(eq2_value(a) >= -4 for a in ALL6)
    assert all(eq2_value(a) != -6 for a in ALL6)
    # maximum is 4: a1' = a1 costs the final -1, a1' = -a1 breaks the chain
    assert cert.maximum == 4
    # twelve minimisers: the 2 fully alternating chains with a1' = -a1, plus
    # the 10 five-term minimisers extended with a1' = a1
    assert len(cert.minimizers) == 12
    flipped = [m for m in cert.minimizers if m[5] == -m[0]]
    same = [m for m in cert.minimizers if m[5] == m[0]]
    assert len(flipped) == 2 and len(same) == 10
    assert {m[:5] for m in same} == set(eq1_certificate().minimizers)


def test_sign_flip_symmetry():
    for a in ALL5:
        assert eq1_value(a) == eq1_value(tuple(-x for x in a))
    for a in ALL6:
        assert eq2_value(a) == eq2_value(tuple(-x for x in a))


@pytest.mark.parametrize("n", [3, 5, 7, 9, 11])
def test_cycle_min(n):
    assert cycle_min(n) == -(n - 2)


def test_cycle_min_brute_force_small():
    # plain-python oracle, independent of the kernels
    for n in (3, 5, 7):
        brute = min(
            sum(a[i] * a[(i + 1) % n] for i in range(n)) for a in itertools.product((1, -1), repeat=n)
        )
        assert cycle_min(n) == brute
    assert cycle_min(5) == eq1_min()


@pytest.mark.parametrize("n", [2, 4, 1, 27, 0, -3])
def test_cycle_min_invalid(n):
    with pytest.raises(InvalidN):
        cycle_min(n)


def test_cycle_min_largest():
    assert cycle_min(25) == -23


@pytest.mark.parametrize("n", [3, 5, 9, 13])
def test_cycle_minimiser_count(n):
    # n edges; minimum keeps exactly one agreeing edge: n choices x 2 global signs
    lo, hi, count = _kernels.cycle_extremes(n)
    assert (lo, hi, count) == (-(n - 2), n, 2 * n)
