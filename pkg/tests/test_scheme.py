"""Scheme layer: consumable keys, verification, collisions, wrappers."""

import json

import pytest

from osslab.gf2 import BitVec
from osslab.oracles import Params, build_oracles
from osslab.scheme import (
    OneShotViolation,
    PublicKey,
    Signature,
    allow_test_cloning,
    extract_collision,
    generate,
    hs_sign,
    hs_verify,
    rom_hash,
    sign,
    sign_incompressible,
    verify,
    verify_incompressible,
)

SEED = bytes(range(32))


def world(**kw):
    return build_oracles(Params(n=8, r=3, ell=2, **kw), SEED)


@pytest.mark.parametrize("backend", ["statevector", "symbolic"])
def test_sign_verify_round_trip(backend, rng):
    o = world()
    pk, sk = generate(o, backend, rng)
    m = BitVec.from_str("11")
    sig = sign(o, pk, sk, m, rng)
    assert verify(o, pk, m, sig)
    assert not verify(o, pk, BitVec.from_str("00"), sig)


@pytest.mark.parametrize("backend", ["statevector", "symbolic"])
def test_second_sign_raises(backend, rng):
    o = world()
    pk, sk = generate(o, backend, rng)
    sign(o, pk, sk, BitVec.from_str("01"), rng)
    assert sk.consumed
    with pytest.raises(OneShotViolation):
        sign(o, pk, sk, BitVec.from_str("10"), rng)


def test_clone_is_gated(rng):
    o = world()
    pk, sk = generate(o, "symbolic", rng)
    with pytest.raises(RuntimeError):
        sk.clone_for_tests()
    with allow_test_cloning():
        dup = sk.clone_for_tests()
    assert not dup.consumed
    # consuming the original does not touch the clone
    sign(o, pk, sk, BitVec.from_str("00"), rng)
    with allow_test_cloning(), pytest.raises(OneShotViolation):
        sk.clone_for_tests()
    sign(o, pk, dup, BitVec.from_str("00"), rng)


def test_two_signatures_give_a_hash_collision(rng):
    o = world()
    pk, sk = generate(o, "symbolic", rng)
    with allow_test_cloning():
        dup = sk.clone_for_tests()
    m0, m1 = BitVec.from_str("00"), BitVec.from_str("11")
    s0 = sign(o, pk, sk, m0, rng)
    s1 = sign(o, pk, dup, m1, rng)
    x0, x1 = extract_collision(o, pk, (m0, s0), (m1, s1))
    assert x0 != x1
    assert o.hash_bits(x0) == o.hash_bits(x1) == pk.y


def test_extract_collision_validates_inputs(rng):
    o = world()
    pk, sk = generate(o, "symbolic", rng)
    m = BitVec.from_str("10")
    sig = sign(o, pk, sk, m, rng)
    with pytest.raises(ValueError):
        extract_collision(o, pk, (m, sig), (m, sig))  # identical pairs
    bogus = Signature(sigma=sig.sigma ^ BitVec(8, 1))
    with pytest.raises(ValueError):
        extract_collision(o, pk, (m, sig), (m, bogus))  # second does not verify


def test_verify_always_costs_one_decode(rng):
    o = world()
    pk, sk = generate(o, "symbolic", rng)
    m = BitVec.from_str("10")
    sig = sign(o, pk, sk, m, rng)
    for probe, msg in [(sig, m), (sig, BitVec.from_str("01")), (Signature(BitVec(8, 0)), m)]:
        before = o.query_counts()["Pinv"]
        verify(o, pk, msg, probe)
        assert o.query_counts()["Pinv"] == before + 1


def test_generate_query_free(rng):
    o = world()
    for backend in ("statevector", "symbolic"):
        before = o.query_counts()
        generate(o, backend, rng)
        assert o.query_counts() == before


def test_sign_spends_exactly_l_dual_queries(rng):
    o = world()
    pk, sk = generate(o, "symbolic", rng)
    before = o.query_counts()
    sign(o, pk, sk, BitVec.from_str("11"), rng)
    after = o.query_counts()
    assert {k: after[k] - before[k] for k in after if after[k] != before[k]} == {"D": 2}


def test_wrong_world_is_rejected(rng):
    o = world()
    other = build_oracles(Params(n=8, r=3, ell=2), bytes(32))
    pk, sk = generate(o, "symbolic", rng)
    with pytest.raises(ValueError):
        verify(other, pk, BitVec.from_str("00"), Signature(BitVec(8, 0)))
    with pytest.raises(ValueError):
        sign(other, pk, sk, BitVec.from_str("00"), rng)


def test_variant_dispatch_guards(rng):
    inc = world(variant="incompressible")
    pk, sk = generate(inc, "symbolic", rng)
    with pytest.raises(ValueError):
        sign(inc, pk, sk, BitVec.from_str("11"), rng)  # must use the variant entry
    orig = build_oracles(Params(n=8, r=3, ell=0, variant="original"), SEED)
    with pytest.raises(ValueError):
        generate(orig, "symbolic", rng)


def test_statevector_needs_table_worlds(rng):
    o = build_oracles(Params(n=8, r=3, ell=2, perm_mode="feistel"), SEED)
    with pytest.raises(ValueError):
        generate(o, "statevector", rng)
    pk, sk = generate(o, "symbolic", rng)  # symbolic is fine
    assert verify(o, pk, BitVec.from_str("10"), sign(o, pk, sk, BitVec.from_str("10"), rng))


# -- serialization ------------------------------------------------------


def test_public_key_json_round_trip(rng):
    o = world()
    pk, _ = generate(o, "symbolic", rng)
    clone = PublicKey.from_json(json.loads(json.dumps(pk.to_json())))
    assert clone == pk and clone.matches(o)


def test_signature_json_round_trip():
    sig = Signature(sigma=BitVec.from_str("10110011"))
    assert Signature.from_json(json.loads(json.dumps(sig.to_json()))) == sig


# -- incompressible variant ---------------------------------------------


def test_incompressible_round_trip_and_structure(rng):
    o = world(variant="incompressible")
    for backend in ("statevector", "symbolic"):
        pk, sk = generate(o, backend, rng)
        m = BitVec(1, 1)
        sig = sign_incompressible(o, pk, sk, m, rng)
        before = o.query_counts()
        assert verify_incompressible(o, pk, m, sig)
        delta = {k: v - before[k] for k, v in o.query_counts().items() if v != before[k]}
        assert delta == {"D0": 1}  # membership only, no decode
        gen, shift = o.coset_of(pk.y)
        diff = sig.sigma ^ shift
        assert diff.bits != 0 and gen.solve(diff) is not None
        assert sig.sigma.bit(2) == 0  # message is extended with a forced 0


def test_incompressible_message_width(rng):
    o = world(variant="incompressible")
    pk, sk = generate(o, "symbolic", rng)
    with pytest.raises(ValueError):
        sign_incompressible(o, pk, sk, BitVec.from_str("11"), rng)  # l - 1 = 1 bit
    with pytest.raises(ValueError):
        verify_incompressible(o, pk, BitVec.from_str("11"), Signature(BitVec(8, 0)))
    with pytest.raises(ValueError):
        verify_incompressible(world(), pk, BitVec(1, 0), Signature(BitVec(8, 0)))


# -- hash-and-sign ------------------------------------------------------


def test_rom_hash_behaviour():
    a = rom_hash(SEED, b"alpha", 13)
    assert a.n == 13
    assert rom_hash(SEED, b"alpha", 13) == a  # deterministic
    assert rom_hash(SEED, b"beta", 13) != a
    assert rom_hash(bytes(32), b"alpha", 13) != a  # keyed by the seed
    assert rom_hash(SEED, b"alpha", 0) == BitVec(0, 0)
    # truncation really is a prefix
    wide = rom_hash(SEED, b"alpha", 64)
    assert wide.prefix(13) == a


def test_hash_and_sign_round_trip(rng):
    o = world()
    pk, sk = generate(o, "symbolic", rng)
    msg = b"arbitrary bytes of any length \x00\xff" * 9
    sig = hs_sign(o, pk, sk, msg, rng)
    assert hs_verify(o, pk, msg, sig)
    assert not hs_verify(o, pk, msg + b"?", sig)
