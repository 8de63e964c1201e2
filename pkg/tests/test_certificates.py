from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from topdown.bits import mask_of, point_to_str, str_to_point, submasks
from topdown.certificates import (
    Certificate, bit_certificate_probability, certificate_probability, certified_members,
    contains_certificate, flip_block_reach, has_certificate, is_local_limit,
)
from topdown.errors import BudgetExceeded, NotAMember
from topdown.pointset import PointSet, parity_set
from topdown.testbeds import block_parity_set, random_density_set

import oracles


def P(*strings):
    return PointSet.from_strings(strings)


def small_instances():
    """(X, x, R, q) with n <= 7."""
    return st.integers(2, 7).flatmap(lambda n: st.tuples(
        st.just(n),
        st.lists(st.integers(0, (1 << n) - 1), min_size=1, max_size=40, unique=True),
        st.integers(0, 1000),
        st.lists(st.integers(1, n), min_size=1, max_size=2, unique=True),
        st.integers(0, 2),
    ))


def test_full_cube_has_no_certificates():
    X = PointSet.full(5)
    assert contains_certificate(0b10110, [1, 3], 3, X) is None


def test_block_parity_certificate():
    X = block_parity_set(6, 2, 2)
    cert = contains_certificate(0, [1], 1, X)
    assert cert == Certificate(block=(1,), query=(2,), answer="0", missing=("1",))
    assert cert.verify(X)


def test_parity_fiber_certificate():
    X = P("000", "011", "101", "110")
    cert = contains_certificate(0, [3], 2, X)
    assert cert.query == (1, 2) and cert.answer == "00" and cert.missing == ("1",)


def test_not_a_member():
    with pytest.raises(NotAMember):
        contains_certificate(1, [1], 1, P("000"))


def test_certificate_json_round_trip():
    cert = contains_certificate(0, [1], 1, block_parity_set(6, 2, 2))
    assert cert.to_json() == {"R": [1], "Q": [2], "a": "0", "missing": ["1"]}
    assert Certificate.from_json(cert.to_json()) == cert


def test_certificate_probability_examples():
    assert certificate_probability(PointSet.full(5), 2, 2).probability == 0
    assert certificate_probability(block_parity_set(6, 2, 2), 1, 1).probability == Fraction(2, 3)
    assert certificate_probability(P("0110"), 2, 0).probability == 1


def test_bit_certificate_probability_parity():
    E = parity_set(6, 0)
    assert bit_certificate_probability(PointSet.full(6), 3).probability == 0
    assert bit_certificate_probability(E, 5).probability == 1
    assert bit_certificate_probability(E, 4).probability == 0


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        certificate_probability(PointSet.full(12), 3, 3, budget=10)


def test_mc_mode_deterministic_and_close():
    X = block_parity_set(8, 2, 2)
    a = certificate_probability(X, 1, 1, mode="mc", samples=3000, seed=4)
    b = certificate_probability(X, 1, 1, mode="mc", samples=3000, seed=4)
    assert a == b
    assert abs(a.probability - 0.5) <= 3 * a.half_width


def test_local_limit_examples():
    X = parity_set(6, 0)
    assert is_local_limit(0b000011, X, 6) == (True, None)
    assert is_local_limit(0b000001, X, 5) == (True, None)
    assert is_local_limit(str_to_point("100000"), P("000000"), 1) == (False, (1,))


def test_flip_block_reach_examples():
    Y = P("110", "011")
    assert flip_block_reach(str_to_point("110"), [1], Y) == str_to_point("110")
    assert flip_block_reach(0, [1, 2], P("111")) is None
    assert point_to_str(flip_block_reach(0, [1, 2, 3], Y), 3) == "011"


@given(small_instances())
def test_soundness_and_oracle_agreement(inst):
    n, members, pick, R, q = inst
    X = PointSet.from_members(n, members)
    x = members[pick % len(members)]
    cert = contains_certificate(x, R, q, X)
    strs = X.strings()
    expect = oracles.has_certificate(point_to_str(x, n), tuple(sorted(R)), q, strs)
    assert (cert is not None) == expect
    if cert is not None:
        assert cert.verify(X)
        assert len(cert.query) <= q and not set(cert.query) & set(R)


@given(small_instances())
def test_q_monotone(inst):
    n, members, pick, R, q = inst
    X = PointSet.from_members(n, members)
    x = members[pick % len(members)]
    if not has_certificate(x, R, q, X):
        assert all(not has_certificate(x, R, qq, X) for qq in range(q))


@given(small_instances(), st.integers(1, 7))
def test_block_monotone_via_reduction(inst, extra):
    """A certificate (Q, a) for R yields one for R' ⊇ R with Q' = Q - R'."""
    n, members, pick, R, q = inst
    X = PointSet.from_members(n, members)
    x = members[pick % len(members)]
    Rp = sorted(set(R) | {min(extra, n)})
    cert = contains_certificate(x, R, q, X)
    if cert is None:
        return
    Qp = [c for c in cert.query if c not in Rp]
    assert has_certificate(x, Rp, len(Qp), X)


@given(small_instances())
def test_certified_members_matches_pointwise(inst):
    n, members, _, R, q = inst
    X = PointSet.from_members(n, members)
    got = certified_members(X, R, q)
    want = [has_certificate(int(x), R, q, X) for x in X.members()]
    assert got.tolist() == want


def test_certificate_probability_matches_oracle():
    rng = np.random.default_rng(2)
    for _ in range(6):
        n = int(rng.integers(3, 7))
        X = random_density_set(n, rng, max_log=3)
        r, q = int(rng.integers(1, 3)), int(rng.integers(0, 3))
        assert certificate_probability(X, r, q).probability == \
            oracles.certificate_probability(X.strings(), n, r, q)


@given(st.integers(0, 100_000))
def test_final_step_logic(seed):
    """No certificate for R at x => every flip of x inside R is a local limit."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 10))
    X = random_density_set(n, rng, max_log=3)
    x = int(X.members()[rng.integers(len(X))])
    q, r = int(rng.integers(0, 3)), int(rng.integers(1, 3))
    R = mask_of(sorted(int(c) + 1 for c in rng.choice(n, size=min(r, n), replace=False)))
    if has_certificate(x, R, q, X):
        return
    for s in submasks(R):
        assert is_local_limit(x ^ s, X, q)[0]
