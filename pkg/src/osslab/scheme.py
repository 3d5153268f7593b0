"""Signature scheme layer: keys, one-shot signing, verification.

A secret key is consumable.  Signing atomically claims it before doing
any work; a second sign attempt on the same key object raises
OneShotViolation.  There is deliberately no way to copy a live key
outside of tests (see allow_test_cloning).

Verification needs one decode query and nothing else.  The membership
variant (sign_incompressible / verify_incompressible) verifies with a
single coset-membership query instead and never calls decode.
"""

from __future__ import annotations

import hashlib
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Union

from . import coset as _coset
from . import qsim as _qsim
from .gf2 import BitVec
from .oracles import OracleSet, Params

__all__ = [
    "BACKENDS",
    "OneShotViolation",
    "PublicKey",
    "SecretKey",
    "Signature",
    "allow_test_cloning",
    "generate",
    "sign",
    "verify",
    "extract_collision",
    "sign_incompressible",
    "verify_incompressible",
    "rom_hash",
    "hs_sign",
    "hs_verify",
]

BACKENDS = ("statevector", "symbolic")

_clone_flag = threading.local()


class OneShotViolation(RuntimeError):
    """Raised when a consumed secret key is used again."""


@dataclass(frozen=True)
class PublicKey:
    y: BitVec
    params: Params
    seed: bytes

    def to_json(self) -> dict:
        return {
            "y": self.y.to_hex(),
            "world": {"params": self.params.to_json(), "seed": self.seed.hex()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PublicKey":
        params = Params.from_json(obj["world"]["params"])
        return cls(
            y=BitVec.from_hex(obj["y"], params.r),
            params=params,
            seed=bytes.fromhex(obj["world"]["seed"]),
        )

    def matches(self, o: OracleSet) -> bool:
        return self.params == o.params and self.seed == o.seed


@dataclass(frozen=True)
class Signature:
    sigma: BitVec

    def to_json(self) -> dict:
        return {"sigma": self.sigma.to_hex(), "n": self.sigma.n}

    @classmethod
    def from_json(cls, obj: dict) -> "Signature":
        return cls(sigma=BitVec.from_hex(obj["sigma"], obj["n"]))


class SecretKey:
    """One-shot handle on a key state for one of the two backends."""

    def __init__(self, backend: str, state: Union[_qsim.StateVector, _coset.CosetState]) -> None:
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self._state = state
        self._consumed = False
        self._lock = threading.Lock()

    @property
    def consumed(self) -> bool:
        return self._consumed

    def _claim(self) -> Union[_qsim.StateVector, _coset.CosetState]:
        with self._lock:
            if self._consumed:
                raise OneShotViolation("secret key already consumed")
            self._consumed = True
            state, self._state = self._state, None
        return state

    def clone_for_tests(self) -> "SecretKey":
        """Copy a live key.  Physically impossible for the real object;
        only allowed inside an allow_test_cloning() block so that tests
        can compare backends or forge honest collisions."""
        if not getattr(_clone_flag, "on", False):
            raise RuntimeError("secret keys cannot be cloned outside allow_test_cloning()")
        with self._lock:
            if self._consumed:
                raise OneShotViolation("secret key already consumed")
            state = self._state
        dup = state.copy() if self.backend == "statevector" else state
        return SecretKey(self.backend, dup)


@contextmanager
def allow_test_cloning():
    _clone_flag.on = True
    try:
        yield
    finally:
        _clone_flag.on = False


def _check_world(o: OracleSet, pk: PublicKey) -> None:
    if not pk.matches(o):
        raise ValueError("public key belongs to a different world")


def generate(o: OracleSet, backend: str, rng) -> tuple[PublicKey, SecretKey]:
    """Generate a keypair.  The measurement short-circuit means no oracle
    queries are spent here on either backend."""
    if o.params.variant == "original":
        raise ValueError("unstructured worlds cannot generate signing keys")
    if backend == "statevector":
        y, state = _qsim.generate_keypair_state(o, rng)
    elif backend == "symbolic":
        y, state = _coset.generate_keypair_symbolic(o, rng)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return PublicKey(y=y, params=o.params, seed=o.seed), SecretKey(backend, state)


def _run_sign(o: OracleSet, pk: PublicKey, sk: SecretKey, m: BitVec, rng) -> Signature:
    _check_world(o, pk)
    if m.n != o.params.ell:
        raise ValueError(f"message must have {o.params.ell} bits")
    state = sk._claim()
    if sk.backend == "statevector":
        sigma = _qsim.sign_with_state(o, pk.y, state, m, rng)
    else:
        sigma = _coset.sign_with_coset(o, pk.y, state, m, rng)
    return Signature(sigma=sigma)


def sign(o: OracleSet, pk: PublicKey, sk: SecretKey, m: BitVec, rng) -> Signature:
    """Consume sk and sign the l-bit message m.  Exactly l dual queries."""
    if o.params.variant == "incompressible":
        raise ValueError("use sign_incompressible on incompressible worlds")
    if o.params.variant == "original":
        raise ValueError("unstructured worlds cannot sign")
    return _run_sign(o, pk, sk, m, rng)


def verify(o: OracleSet, pk: PublicKey, m: BitVec, sig: Signature) -> bool:
    """Accept iff the signature starts with m and decodes to a preimage.

    Both clauses are always evaluated, so every call costs exactly one
    decode query regardless of the outcome.
    """
    _check_world(o, pk)
    if m.n != o.params.ell:
        raise ValueError(f"message must have {o.params.ell} bits")
    if sig.sigma.n != o.params.n:
        raise ValueError("signature must have n bits")
    preimage = o.decode(pk.y, sig.sigma)
    prefix_ok = sig.sigma.prefix(o.params.ell) == m
    return prefix_ok and preimage is not None


def extract_collision(
    o: OracleSet,
    pk: PublicKey,
    first: tuple[BitVec, Signature],
    second: tuple[BitVec, Signature],
) -> tuple[BitVec, BitVec]:
    """Turn two distinct valid message/signature pairs under one public
    key into a hash collision.

    Distinct valid pairs force distinct signatures (equal signatures pin
    equal message prefixes), and decoding two distinct coset points gives
    two distinct permutation preimages with the same hash value y.
    """
    m0, s0 = first
    m1, s1 = second
    if (m0, s0.sigma) == (m1, s1.sigma):
        raise ValueError("pairs must be distinct")
    if not verify(o, pk, m0, s0):
        raise ValueError("first pair does not verify")
    if not verify(o, pk, m1, s1):
        raise ValueError("second pair does not verify")
    x0 = o.decode(pk.y, s0.sigma)
    x1 = o.decode(pk.y, s1.sigma)
    assert x0 is not None and x1 is not None  # both pairs just verified
    return x0, x1


# -- incompressible variant --------------------------------------------


def sign_incompressible(o: OracleSet, pk: PublicKey, sk: SecretKey, m: BitVec, rng) -> Signature:
    """Sign an (l-1)-bit message by signing m || 0 with the standard walk."""
    if o.params.variant != "incompressible":
        raise ValueError("world is not incompressible")
    if m.n != o.params.ell - 1:
        raise ValueError(f"message must have {o.params.ell - 1} bits")
    return _run_sign(o, pk, sk, m.concat(BitVec.zeros(1)), rng)


def verify_incompressible(o: OracleSet, pk: PublicKey, m: BitVec, sig: Signature) -> bool:
    """Membership-only verification: prefix must read m || 0 and the
    signature must pass the coset membership oracle.  Zero decode queries;
    valid signatures are exactly shift + (nonzero column-span point),
    because the forced shift bit rules the all-zero combination out."""
    _check_world(o, pk)
    if o.params.variant != "incompressible":
        raise ValueError("world is not incompressible")
    if m.n != o.params.ell - 1:
        raise ValueError(f"message must have {o.params.ell - 1} bits")
    if sig.sigma.n != o.params.n:
        raise ValueError("signature must have n bits")
    member = o.coset_check(pk.y, sig.sigma)
    prefix_ok = sig.sigma.prefix(o.params.ell) == m.concat(BitVec.zeros(1))
    return prefix_ok and member == 1


# -- hash-and-sign wrapper ---------------------------------------------


def rom_hash(seed: bytes, msg: bytes, out_bits: int) -> BitVec:
    """Keyed random-oracle stand-in: SHAKE-256 over (seed, "rom", msg),
    truncated to the first out_bits bits."""
    h = hashlib.shake_256()
    h.update(len(seed).to_bytes(2, "big") + seed + b"rom" + msg)
    data = h.digest((out_bits + 7) // 8)
    value = int.from_bytes(data, "big") >> (8 * len(data) - out_bits) if out_bits else 0
    return BitVec(out_bits, value)


def hs_sign(o: OracleSet, pk: PublicKey, sk: SecretKey, msg: bytes, rng) -> Signature:
    """Sign an arbitrary byte string by signing its l-bit oracle digest."""
    return sign(o, pk, sk, rom_hash(o.seed, msg, o.params.ell), rng)


def hs_verify(o: OracleSet, pk: PublicKey, msg: bytes, sig: Signature) -> bool:
    return verify(o, pk, rom_hash(o.seed, msg, o.params.ell), sig)
