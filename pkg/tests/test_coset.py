"""Symbolic signing backend: the closed-form walk state."""

import numpy as np
import pytest

from osslab.coset import (
    STEP_PHASE,
    CosetState,
    enumerate_support,
    generate_keypair_symbolic,
    grover_step,
    sample_prefix_member,
    sign_with_coset,
    to_statevector,
)
from osslab.gf2 import BitVec
from osslab.oracles import Params, build_oracles
from osslab.qsim import generate_keypair_state, phase_dual, phase_prefix

SEED = bytes(range(32))


def world(**kw):
    return build_oracles(Params(n=8, r=3, ell=2, **kw), SEED)


def test_step_phase_has_order_eight():
    assert abs(STEP_PHASE**8 - 1) < 1e-12
    assert all(abs(STEP_PHASE**k - 1) > 0.1 for k in range(1, 8))
    assert abs(abs(STEP_PHASE) - 1) < 1e-12


def test_keypair_support_size(rng):
    o = world()
    y, st = generate_keypair_symbolic(o, rng)
    assert st.support_size == 32  # 2^(n-r)
    assert st.matched == 0 and st.phase == 1


def test_grover_step_enforces_order_and_consistency(rng):
    o = world()
    _, st = generate_keypair_symbolic(o, rng)
    m = BitVec.from_str("10")
    with pytest.raises(ValueError):
        grover_step(st, 2, m)  # steps must be taken in order
    st1 = grover_step(st, 1, m)
    assert st1.matched == 1 and st1.support_size == 16
    assert abs(st1.phase - STEP_PHASE) < 1e-12
    with pytest.raises(ValueError):
        grover_step(st1, 2, BitVec.from_str("00"))  # contradicts pinned bit


def test_full_walk_accumulates_step_phases(rng):
    o = build_oracles(Params(n=10, r=2, ell=8), SEED)
    _, st = generate_keypair_symbolic(o, rng)
    m = BitVec(8, 0b10110100)
    for step in range(1, 9):
        st = grover_step(st, step, m)
    assert st.support_size == 1
    assert abs(st.phase - 1) < 1e-12  # STEP_PHASE ** 8


def test_enumerate_support_matches_brute_force(rng):
    o = world()
    y = BitVec(3, 5)
    gen, shift = o.coset_of(y)
    st = CosetState(y=y, gen=gen, shift=shift)
    m = BitVec.from_str("01")
    st = grover_step(st, 1, m)
    pts = [p.bits for p in enumerate_support(st)]
    brute = sorted(
        shift.bits ^ gen.matvec(BitVec(5, w)).bits
        for w in range(32)
        if ((shift.bits ^ gen.matvec(BitVec(5, w)).bits) >> 7) == 0
    )
    assert pts == brute
    assert len(pts) == 16


def test_enumerate_support_refuses_huge_states():
    o = build_oracles(Params(n=32, r=4, ell=2, perm_mode="feistel"), SEED)
    y = BitVec(4, 0)
    gen, shift = o.coset_of(y)
    st = CosetState(y=y, gen=gen, shift=shift)
    with pytest.raises(ValueError):
        enumerate_support(st)


def test_sample_prefix_member_hits_the_right_slice(rng):
    o = world()
    y = BitVec(3, 2)
    gen, shift = o.coset_of(y)
    prefix = BitVec.from_str("11")
    seen = set()
    for _ in range(200):
        u = sample_prefix_member(gen, shift, prefix, rng)
        assert u.prefix(2) == prefix
        assert gen.solve(u ^ shift) is not None
        seen.add(u.bits)
    assert len(seen) == 8  # all 2^(n-r-2) slice points show up


def test_to_statevector_tracks_dense_backend(rng):
    o = world()
    draw = np.random.default_rng(123)
    y, sv = generate_keypair_state(o, np.random.default_rng(99))
    gen, shift = o.coset_of(y)
    st = CosetState(y=y, gen=gen, shift=shift)
    m = BitVec(2, int(draw.integers(0, 4)))
    for step in (1, 2):
        phase_prefix(sv, step, m)
        phase_dual(sv, step, y, o)
        st = grover_step(st, step, m)
        assert np.max(np.abs(to_statevector(st).amp - sv.amp)) < 1e-12


def test_sign_with_coset_spends_l_dual_queries(rng):
    o = world()
    _, st = generate_keypair_symbolic(o, rng)
    before = o.query_counts()
    sigma = sign_with_coset(o, st.y, st, BitVec.from_str("01"), rng)
    delta = {k: v - before[k] for k, v in o.query_counts().items() if v != before[k]}
    assert delta == {"D": 2}
    assert sigma.prefix(2) == BitVec.from_str("01")
    assert o.decode(st.y, sigma) is not None


def test_sign_with_coset_on_wide_feistel_world(rng):
    o = build_oracles(Params(n=40, r=20, ell=8, perm_mode="feistel"), SEED)
    _, st = generate_keypair_symbolic(o, rng)
    m = BitVec(8, 0xA5)
    sigma = sign_with_coset(o, st.y, st, m, rng)
    assert sigma.prefix(8) == m
    assert o.decode(st.y, sigma) is not None
