import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from topdown.adversary import (
    WalkParams, depth3_walk, depth4_walk, flip_process, mirror_set, run_walk,
    sphere_counts, sphere_dense_centers, spreadify,
)
from topdown.bits import parity, point_to_str, popcount
from topdown.circuits import Circuit, const_shell, inject_fault, parity_circuit
from topdown.errors import DegenerateB, EmptySphere, ShapeError
from topdown.pointset import PointSet, parity_set
from topdown.testbeds import bernoulli_set, random_density_set

XOR2 = Circuit(2, "OR", (((1, 2), (-1, -2)), ((0, 1),), ((0,),)))


# depth 3 ----------------------------------------------------------------------

def test_depth3_xor2_is_stuck():
    t = depth3_walk(XOR2, 1)
    assert t.outcome.kind == "stuck" and t.outcome.stage == "final"
    assert "no uncertified pair" in t.outcome.reason


def test_depth3_constant_one_gives_counterexample():
    t = depth3_walk(const_shell(4, 3, 1), 2)
    o = t.outcome
    assert t.found and o.xor_value == 0 and o.circuit_value == 1
    assert parity(o.y) == 0


def test_depth3_empty_top():
    c = Circuit(4, "OR", (((1,),), ((0,),), ((),)))
    o = depth3_walk(c, 2).outcome
    assert (o.kind, o.stage, o.reason) == ("stuck", "first", "no subcircuit")


@pytest.mark.parametrize("n", [4, 9])
def test_depth3_parity_never_counterexample(n):
    assert not depth3_walk(parity_circuit(n, depth=3), 2).found


def test_depth3_shape_error():
    with pytest.raises(ShapeError):
        depth3_walk(parity_circuit(8), 2)


# sphere centers ---------------------------------------------------------------------

def test_sphere_full_cube():
    c = sphere_dense_centers(PointSet.full(6), 2)
    assert c.Z == PointSet.full(6)


@pytest.mark.parametrize("n", [3, 6, 9])
def test_sphere_even_parity_m1(n):
    assert sphere_dense_centers(parity_set(n, 0), 1).Z == parity_set(n, 1)


def test_sphere_random_density_eighth():
    rng = np.random.default_rng(12)
    for _ in range(5):
        Y = bernoulli_set(12, 1 / 8, rng)
        assert 2 * len(sphere_dense_centers(Y, 3).Z) >= len(Y)


@given(st.integers(0, 10 ** 6), st.integers(1, 7))
def test_sphere_counts_match_oracle(seed, n):
    rng = np.random.default_rng(seed)
    Y = random_density_set(n, rng, max_log=3)
    m = int(rng.integers(0, n + 1))
    counts = sphere_counts(Y, m)
    ys = Y.strings()
    for x in range(1 << n):
        assert counts[x] == oracles.sphere_count(point_to_str(x, n), ys, m)


@given(st.integers(0, 10 ** 6))
def test_sphere_claim_holds(seed):
    rng = np.random.default_rng(seed)
    Y = random_density_set(8, rng)
    m = int(rng.integers(1, 5))
    assert 2 * len(sphere_dense_centers(Y, m, check=False).Z) >= len(Y)


# spreadify ----------------------------------------------------------------------------

def test_spreadify_full_slice():
    res = spreadify(0, PointSet.full(6), 2, 0.15)
    assert res.I == () and res.i0 == 1 and res.x_prime == 1
    assert res.spread_ok


def test_spreadify_concentrated():
    n, m = 8, 3
    Y = PointSet.from_members(n, [a for a in range(1 << n) if popcount(a) == m and a & 1])
    res = spreadify(0, Y, m, 0.15)
    assert 1 in res.I and res.x_prime & 1


def test_spreadify_empty_sphere():
    with pytest.raises(EmptySphere):
        spreadify(0, PointSet.from_members(5, [0]), 2, 0.15)


@given(st.integers(0, 10 ** 6))
def test_spreadify_translation_equivariant(seed):
    # the violating set I is frame-free; the parity fix-up only matches the
    # 0^n frame when x itself is even
    rng = np.random.default_rng(seed)
    n, m = 8, 2
    Y = bernoulli_set(n, 0.5, rng)
    x = int(rng.integers(0, 1 << n))
    try:
        a = spreadify(x, Y, m, 0.15)
        b = spreadify(0, Y.translate(x), m, 0.15)
    except (EmptySphere, DegenerateB) as e:
        if isinstance(e, EmptySphere):
            with pytest.raises(EmptySphere):
                spreadify(0, Y.translate(x), m, 0.15)
        return
    assert a.I == b.I
    if parity(x) == 0:
        assert a.x_prime == b.x_prime ^ x
        assert (a.I_prime, a.i0) == (b.I_prime, b.i0)


@given(st.integers(0, 10 ** 6))
def test_spreadify_postconditions(seed):
    rng = np.random.default_rng(seed)
    n, m = 9, 3
    Y = bernoulli_set(n, rng.uniform(0.1, 0.9), rng)
    x = int(rng.integers(0, 1 << n))
    try:
        res = spreadify(x, Y, m, 0.15)
    except (EmptySphere, DegenerateB):
        return
    assert parity(res.x_prime) == 1
    assert len(res.I_prime) <= len(res.I) + 1
    assert res.spread_ok
    assert popcount(res.x ^ res.x_prime) == len(res.I_prime)


# mirror set ------------------------------------------------------------------------------

def test_mirror_even_parity():
    mir = mirror_set(parity_set(7, 0), 1, 0.15)
    assert mir.M.issubset(parity_set(7, 1))
    assert all(parity(x) == 1 for x in mir.provenance)


def test_mirror_empty():
    mir = mirror_set(PointSet.empty(6), 2, 0.15)
    assert len(mir.M) == 0 and mir.provenance == {}


def test_mirror_random_is_odd():
    rng = np.random.default_rng(9)
    Y = bernoulli_set(9, 1 / 4, rng)
    mir = mirror_set(Y, 2, 0.15)
    assert len(mir.M) > 0
    assert mir.M.issubset(parity_set(9, 1))
    acc = mir.accounting()
    assert acc["Z"] == len(mir.results) + acc["degenerate"]


# flip process ------------------------------------------------------------------------------

def test_flip_stays_put_inside_y():
    X = PointSet.full(6)
    for seed in range(5):
        out = flip_process(5, X, PointSet.from_members(6, [5]), 2, 2, seed)
        assert out.y == 5 and out.failed_at is None


def test_flip_reaches_even_from_odd():
    X, Y = PointSet.full(6), parity_set(6, 0)
    for seed in range(10):
        out = flip_process(1, X, Y, 2, 1, seed)
        assert out.y is not None and parity(out.y) == 0
        assert (out.y ^ 1) & ~out.R == 0


def test_flip_singleton_always_certified():
    X = PointSet.from_members(5, [3])
    for seed in range(5):
        assert flip_process(3, X, PointSet.full(5), 2, 0, seed).failed_at == "certificate"


def test_flip_deterministic():
    rng = np.random.default_rng(1)
    X, Y = bernoulli_set(8, 0.5, rng), bernoulli_set(8, 0.5, rng)
    x = int(X.members()[0])
    assert flip_process(x, X, Y, 3, 1, 17) == flip_process(x, X, Y, 3, 1, 17)


# depth 4 ------------------------------------------------------------------------------------

def test_walk_params_for_8():
    p = WalkParams.for_n(8)
    assert (p.m, p.r, p.q) == (2, 2, 2)
    assert p.p == 2 / 8 * 1 and str(p.p) == "1/4"
    with pytest.raises(ValueError):
        WalkParams(n=8, m=0, r=1, q=1, epsilon=0.2)
    with pytest.raises(ValueError):
        WalkParams(n=8, m=2, r=1, q=1, epsilon=0.5)


def test_depth4_parity_stuck():
    t = depth4_walk(parity_circuit(8), WalkParams.for_n(8))
    assert not t.found and t.outcome.kind == "stuck"


def test_depth4_constant_shell():
    t = depth4_walk(const_shell(8, 4, 1), WalkParams.for_n(8))
    assert t.found and t.outcome.xor_value == 0 and parity(t.outcome.y) == 0


def test_depth4_faults_are_sound():
    for seed in range(8):
        c, _ = inject_fault(parity_circuit(8), seed)
        t = depth4_walk(c, WalkParams.for_n(8), seed)
        if t.found:
            assert c.evaluate(t.outcome.y) != parity(t.outcome.y)


def test_depth4_determinism_and_json():
    c, _ = inject_fault(parity_circuit(8), 3)
    a = depth4_walk(c, WalkParams.for_n(8), 5).to_json()
    b = depth4_walk(c, WalkParams.for_n(8), 5).to_json()
    assert json.dumps(a) == json.dumps(b)
    assert a["schema_version"] == 1


def test_trace_densities_match_sets():
    t = depth4_walk(parity_circuit(8), WalkParams.for_n(8))
    for step in t.steps:
        js = step.to_json(8)
        for name, size in step.sizes.items():
            assert len(t.sets[name]) == size
            assert js["densities"][name] == str(t.sets[name].density())


def test_pigeonhole_sizes():
    pi = parity_circuit(8)
    t = depth4_walk(pi, WalkParams.for_n(8))
    first = next(s for s in t.steps if s.stage == "first")
    fanin = len(set(pi.gate(4, 0)))
    assert first.sizes["Y"] * fanin >= 128


def test_depth4_shape_checks():
    with pytest.raises(ShapeError):
        depth4_walk(parity_circuit(9), WalkParams.for_n(9))
    with pytest.raises(ValueError):
        depth4_walk(parity_circuit(8), WalkParams.for_n(9))
    with pytest.raises(ShapeError):
        run_walk(Circuit(2, "AND", (((1,),), ((0,),))))


def test_run_walk_dispatch():
    assert run_walk(XOR2, q=1).walk == "depth3"
    assert run_walk(parity_circuit(8)).walk == "depth4"
