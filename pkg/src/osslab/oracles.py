"""Seeded oracle worlds.

A world is fully determined by (params, 32-byte seed).  It bundles a
pseudorandom permutation of {0,1}^n together with a family of affine
cosets, one per r-bit hash value y: a generator matrix with an identity
block on top, [[I_l, 0], [B_y, C_y]], and a shift vector b_y.  All query
interfaces (encode/decode/dual checks/membership) are derived from those
two ingredients and count their invocations.

Randomness is expanded with BLAKE2b in counter mode, so rebuilding a
world from the same seed reproduces it bit for bit on any platform.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .gf2 import BitMatrix, BitVec, Subspace, sample_full_column_rank

__all__ = [
    "Params",
    "SeededStream",
    "PermutationEngine",
    "CosetFamily",
    "OracleSet",
    "build_oracles",
    "VARIANTS",
    "PERM_MODES",
    "QUERY_KEYS",
]

VARIANTS = ("standard", "incompressible", "bloated", "original")
PERM_MODES = ("table", "feistel")
QUERY_KEYS = ("P", "Pinv", "D", "D0", "Dprime")

_TABLE_MAX_N = 24
_FEISTEL_MAX_N = 64
_FEISTEL_ROUNDS = 16


class SeededStream:
    """Deterministic byte/bit stream: BLAKE2b in counter mode.

    The key is hashed from length-prefixed label parts, so distinct
    labels give independent-looking streams and no label is a prefix of
    another.
    """

    def __init__(self, *parts: bytes) -> None:
        material = b"".join(len(p).to_bytes(2, "big") + p for p in parts)
        self._key = hashlib.blake2b(material, digest_size=32, person=b"osslab.stream").digest()
        self._counter = 0
        self._buf = b""
        self._pos = 0

    def read(self, nbytes: int) -> bytes:
        out = bytearray()
        while len(out) < nbytes:
            if self._pos >= len(self._buf):
                block = self._counter.to_bytes(8, "big")
                self._buf = hashlib.blake2b(block, key=self._key, digest_size=64).digest()
                self._pos = 0
                self._counter += 1
            take = min(nbytes - len(out), len(self._buf) - self._pos)
            out += self._buf[self._pos : self._pos + take]
            self._pos += take
        return bytes(out)

    def bits(self, k: int) -> int:
        """Next k bits as an int, MSB first."""
        if k == 0:
            return 0
        data = self.read((k + 7) // 8)
        return int.from_bytes(data, "big") >> (8 * len(data) - k)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        k = (bound - 1).bit_length()
        if k == 0:
            return 0
        while True:
            x = self.bits(k)
            if x < bound:
                return x

    def bitvec(self, n: int) -> BitVec:
        return BitVec(n, self.bits(n))

    def matrix(self, rows: int, cols: int) -> BitMatrix:
        return BitMatrix(rows, cols, tuple(self.bits(cols) for _ in range(rows)))


@dataclass(frozen=True)
class Params:
    """Shape of a world: vector length n, hash width r, message length l,
    bloat width s, sampling variant, and permutation backend."""

    n: int
    r: int
    ell: int
    s: int = 0
    variant: str = "standard"
    perm_mode: str = "table"
    lam: Optional[int] = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.perm_mode not in PERM_MODES:
            raise ValueError(f"unknown perm_mode {self.perm_mode!r}")
        if self.n < 1 or self.r < 1 or self.ell < 0 or self.s < 0:
            raise ValueError("n, r must be >= 1 and ell, s >= 0")
        if self.r + self.ell > self.n:
            raise ValueError(f"need r + ell <= n, got {self.r} + {self.ell} > {self.n}")
        if self.variant == "original":
            if self.ell != 0:
                raise ValueError("variant 'original' fixes ell = 0 (unstructured cosets)")
        elif self.ell < 1:
            raise ValueError(f"variant {self.variant!r} needs ell >= 1")

    @classmethod
    def from_lambda(cls, lam: int, variant: str = "standard", perm_mode: str = "feistel") -> "Params":
        """Scale parameters from a single security knob.

        Standard rule: s = 16*lam, r = s*(lam - 1), l = lam.
        Incompressible rule: s = 16*(lam + 1), r = s*lam, l = lam + 1.
        Either way n = r + l + (3/2)*s.
        """
        if lam < 2:
            raise ValueError("lambda-derived parameters need lam >= 2 (lam = 1 degenerates)")
        if variant == "incompressible":
            s = 16 * (lam + 1)
            r = s * lam
            ell = lam + 1
        else:
            s = 16 * lam
            r = s * (lam - 1)
            ell = lam
        n = r + ell + (3 * s) // 2
        return cls(n=n, r=r, ell=ell, s=s, variant=variant, perm_mode=perm_mode, lam=lam)

    def check_buildable(self) -> None:
        limit = _TABLE_MAX_N if self.perm_mode == "table" else _FEISTEL_MAX_N
        if self.n > limit:
            raise ValueError(
                f"n = {self.n} exceeds the {self.perm_mode!r} permutation limit of {limit}"
            )

    def to_json(self) -> dict:
        out = {
            "n": self.n,
            "r": self.r,
            "l": self.ell,
            "s": self.s,
            "variant": self.variant,
            "perm_mode": self.perm_mode,
        }
        if self.lam is not None:
            out["lambda"] = self.lam
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Params":
        return cls(
            n=obj["n"],
            r=obj["r"],
            ell=obj["l"],
            s=obj.get("s", 0),
            variant=obj.get("variant", "standard"),
            perm_mode=obj.get("perm_mode", "table"),
            lam=obj.get("lambda"),
        )


class PermutationEngine:
    """Bijection on {0,1}^n, either a stored table or a keyed Feistel network.

    Table mode runs a Fisher-Yates shuffle off the seeded stream (n <= 24).
    Feistel mode uses an alternating unbalanced network with BLAKE2b round
    functions (n <= 64), which inverts by replaying rounds backwards.
    """

    def __init__(self, n: int, mode: str, seed: bytes) -> None:
        self.n = n
        self.mode = mode
        self._size = 1 << n
        if mode == "table":
            stream = SeededStream(seed, b"perm-table", n.to_bytes(1, "big"))
            fwd = list(range(self._size))
            for i in range(self._size - 1, 0, -1):
                j = stream.below(i + 1)
                fwd[i], fwd[j] = fwd[j], fwd[i]
            self._fwd = np.array(fwd, dtype=np.int64)
            self._inv = np.empty_like(self._fwd)
            self._inv[self._fwd] = np.arange(self._size, dtype=np.int64)
        elif mode == "feistel":
            self._key = hashlib.blake2b(
                seed + b"perm-feistel" + n.to_bytes(1, "big"), digest_size=32
            ).digest()
            self._left = n // 2
            self._right = n - self._left
        else:
            raise ValueError(f"unknown permutation mode {mode!r}")

    def _round(self, idx: int, value: int, width: int) -> int:
        data = idx.to_bytes(2, "big") + value.to_bytes(8, "big")
        digest = hashlib.blake2b(data, key=self._key, digest_size=8).digest()
        return int.from_bytes(digest, "big") >> (64 - width) if width else 0

    def forward(self, x: int) -> int:
        if not 0 <= x < self._size:
            raise ValueError("input outside domain")
        if self.mode == "table":
            return int(self._fwd[x])
        left, right = x >> self._right, x & ((1 << self._right) - 1)
        for i in range(_FEISTEL_ROUNDS):
            if i % 2 == 0:
                right ^= self._round(i, left, self._right)
            else:
                left ^= self._round(i, right, self._left)
        return (left << self._right) | right

    def inverse(self, u: int) -> int:
        if not 0 <= u < self._size:
            raise ValueError("input outside domain")
        if self.mode == "table":
            return int(self._inv[u])
        left, right = u >> self._right, u & ((1 << self._right) - 1)
        for i in reversed(range(_FEISTEL_ROUNDS)):
            if i % 2 == 0:
                right ^= self._round(i, left, self._right)
            else:
                left ^= self._round(i, right, self._left)
        return (left << self._right) | right


class CosetFamily:
    """Lazy, seed-derived map y -> (generator matrix, shift vector).

    For each y the stream labelled by y yields, in order: the B block
    ((n - l) x l), the full-column-rank C block ((n - l) x (n - r - l),
    by per-column rejection), and the shift b (n bits).  The
    incompressible variant then forces bit l of the shift to 1.  With
    l = 0 the identity block vanishes and the generator is just C, a
    uniform full-column-rank matrix (the unstructured flavor).
    """

    def __init__(self, params: Params, seed: bytes) -> None:
        self.params = params
        self.seed = seed
        self._cache: dict[int, tuple[BitMatrix, BitVec]] = {}
        self._lock = threading.Lock()

    def derive(self, y: int) -> tuple[BitMatrix, BitVec]:
        with self._lock:
            hit = self._cache.get(y)
        if hit is not None:
            return hit
        p = self.params
        stream = SeededStream(
            self.seed, b"coset", p.variant.encode(), y.to_bytes((p.r + 7) // 8, "big")
        )
        d = p.n - p.r - p.ell
        b_block = stream.matrix(p.n - p.ell, p.ell)
        c_block = sample_full_column_rank(stream, p.n - p.ell, d)
        shift = stream.bitvec(p.n)
        if p.variant == "incompressible":
            shift = shift.with_bit(p.ell, 1)
        if p.ell:
            top = BitMatrix.identity(p.ell).hstack(BitMatrix.zeros(p.ell, d))
            gen = top.vstack(b_block.hstack(c_block))
        else:
            gen = c_block
        with self._lock:
            self._cache.setdefault(y, (gen, shift))
        return gen, shift


class OracleSet:
    """Query interface over one world, with thread-safe query counters.

    decode/encode speak BitVec on the outside; y is r bits, coset points
    are n bits.  The counters are monotone and shared across all users of
    the instance; snapshot with query_counts() and diff around an
    operation to profile it.
    """

    def __init__(self, params: Params, seed: bytes) -> None:
        if len(seed) != 32:
            raise ValueError("seed must be exactly 32 bytes")
        params.check_buildable()
        self.params = params
        self.seed = seed
        self.perm = PermutationEngine(params.n, params.perm_mode, seed)
        self.cosets = CosetFamily(params, seed)
        self._counts = {k: 0 for k in QUERY_KEYS}
        self._lock = threading.Lock()
        self._bloat_seed: Optional[bytes] = None
        self._bloat_mode: Optional[str] = None
        self._bloat_cache: dict[int, object] = {}

    # -- bookkeeping ----------------------------------------------------

    def _count(self, key: str) -> None:
        with self._lock:
            self._counts[key] += 1

    def query_counts(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def coset_of(self, y: BitVec) -> tuple[BitMatrix, BitVec]:
        """Seed-derived (generator, shift) for y.  Not a counted query:
        protocol parties only ever see the cosets through the oracles."""
        if y.n != self.params.r:
            raise ValueError("y must have r bits")
        return self.cosets.derive(y.bits)

    # -- primary oracles ------------------------------------------------

    def encode(self, x: BitVec) -> tuple[BitVec, BitVec]:
        """Forward oracle: permute x, split into (y, w), return (y, Aw + b)."""
        p = self.params
        if x.n != p.n:
            raise ValueError("x must have n bits")
        self._count("P")
        image = self.perm.forward(x.bits)
        y = BitVec(p.r, image >> (p.n - p.r))
        w = BitVec(p.n - p.r, image & ((1 << (p.n - p.r)) - 1))
        gen, shift = self.cosets.derive(y.bits)
        return y, gen.matvec(w) ^ shift

    def decode(self, y: BitVec, u: BitVec) -> Optional[BitVec]:
        """Inverse oracle: recover x with encode(x) = (y, u), or None."""
        p = self.params
        if y.n != p.r or u.n != p.n:
            raise ValueError("decode expects r-bit y and n-bit u")
        self._count("Pinv")
        gen, shift = self.cosets.derive(y.bits)
        w = gen.solve(u ^ shift)
        if w is None:
            return None
        return BitVec(p.n, self.perm.inverse((y.bits << (p.n - p.r)) | w.bits))

    def hash_bits(self, x: BitVec) -> BitVec:
        """First r bits of the permuted input.  Derived view of encode;
        kept un-counted so tests can use it as ground truth."""
        if x.n != self.params.n:
            raise ValueError("x must have n bits")
        image = self.perm.forward(x.bits)
        return BitVec(self.params.r, image >> (self.params.n - self.params.r))

    def dual_check(self, j: int, y: BitVec, v: BitVec) -> int:
        """1 iff v is orthogonal to columns j..n-r of the generator for y
        and 1 <= j <= l + 1; otherwise 0."""
        p = self.params
        if y.n != p.r or v.n != p.n:
            raise ValueError("dual_check expects r-bit y and n-bit v")
        self._count("D")
        if not 1 <= j <= p.ell + 1:
            return 0
        gen, _ = self.cosets.derive(y.bits)
        tail = gen.rmatvec(v).bits & ((1 << max(p.n - p.r - j + 1, 0)) - 1)
        return 1 if tail == 0 else 0

    def dual_support(self, j: int, y: BitVec) -> Subspace:
        """Accepted set of dual_check(j, y, .) as a subspace.

        This is the superposition form of the dual oracle: callers that
        apply the check across a whole register use it once per logical
        query, and it counts as one D query.
        """
        p = self.params
        if not 1 <= j <= p.ell + 1:
            raise ValueError("dual_support needs 1 <= j <= l + 1")
        if y.n != p.r:
            raise ValueError("y must have r bits")
        self._count("D")
        gen, _ = self.cosets.derive(y.bits)
        if j > p.n - p.r:
            return Subspace.full(p.n)
        return gen.col_range(j, p.n - p.r).left_kernel()

    def coset_check(self, y: BitVec, u: BitVec) -> int:
        """Membership oracle: 1 iff u lands in the shifted column span for y."""
        p = self.params
        if y.n != p.r or u.n != p.n:
            raise ValueError("coset_check expects r-bit y and n-bit u")
        self._count("D0")
        gen, shift = self.cosets.derive(y.bits)
        return 1 if gen.solve(u ^ shift) is not None else 0

    # -- bloated dual ---------------------------------------------------

    def sample_bloat(self, rng, mode: str = "matrix") -> None:
        """Install the widened dual oracle.

        Draws a 32-byte sub-seed from rng once; per-y bloat data then
        derives lazily and deterministically from it.  "matrix" mode
        multiplies the generator by [[I_l, 0], [M', M]] with M uniform
        invertible; "vectors" mode extends each dual level by s extra
        independent vectors sampled clear of the top level.  The two
        recipes induce the same distribution on accepted sets.
        """
        p = self.params
        if p.s < 1:
            raise ValueError("bloat needs s >= 1")
        if p.n - p.r - p.ell < p.s:
            raise ValueError("bloat needs n - r - l >= s")
        if mode not in ("matrix", "vectors"):
            raise ValueError(f"unknown bloat mode {mode!r}")
        if hasattr(rng, "bytes"):
            sub = rng.bytes(32)
        else:
            sub = rng.read(32)
        with self._lock:
            self._bloat_seed = sub
            self._bloat_mode = mode
            self._bloat_cache = {}

    def _bloat_for(self, y: int):
        with self._lock:
            if self._bloat_seed is None:
                raise RuntimeError("bloat not sampled; call sample_bloat first")
            hit = self._bloat_cache.get(y)
            seed, mode = self._bloat_seed, self._bloat_mode
        if hit is not None:
            return hit
        p = self.params
        d = p.n - p.r - p.ell
        gen, _ = self.cosets.derive(y)
        stream = SeededStream(seed, b"bloat", y.to_bytes((p.r + 7) // 8, "big"))
        if mode == "matrix":
            m_prime = stream.matrix(d, p.ell)
            while True:
                m_full = stream.matrix(d, d)
                if m_full.rank() == d:
                    break
            if p.ell:
                top = BitMatrix.identity(p.ell).hstack(BitMatrix.zeros(p.ell, d))
                factor = top.vstack(m_prime.hstack(m_full))
            else:
                factor = m_full
            data = gen @ factor
        else:
            top_level = gen.col_range(p.ell + 1, p.n - p.r).left_kernel()
            extras: list[BitVec] = []
            grown = top_level
            while len(extras) < p.s:
                cand = stream.bitvec(p.n)
                if grown.contains(cand):
                    continue
                extras.append(cand)
                grown = grown.extend([cand])
            levels = []
            for j in range(1, p.ell + 2):
                level = gen.col_range(j, p.n - p.r).left_kernel()
                levels.append(level.extend(extras))
            data = tuple(levels)
        with self._lock:
            self._bloat_cache.setdefault(y, data)
        return data

    def dual_check_bloated(self, j: int, y: BitVec, v: BitVec) -> int:
        """Widened dual check: like dual_check but with s middle columns
        of the (bloated) generator dropped, so the accepted set at level j
        is a 2^(r+s+j-1)-point superspace of the plain one."""
        p = self.params
        if y.n != p.r or v.n != p.n:
            raise ValueError("dual_check_bloated expects r-bit y and n-bit v")
        self._count("Dprime")
        if not 1 <= j <= p.ell + 1:
            return 0
        data = self._bloat_for(y.bits)
        if isinstance(data, tuple):
            return 1 if data[j - 1].contains(v) else 0
        width = p.n - p.r
        g = data.rmatvec(v).bits
        head_mask = _range_mask(width, j, p.ell)
        tail_mask = _range_mask(width, p.ell + p.s + 1, width)
        return 1 if g & (head_mask | tail_mask) == 0 else 0

    def bloated_support(self, j: int, y: BitVec) -> Subspace:
        """Accepted set of dual_check_bloated at level j (one Dprime query)."""
        p = self.params
        if not 1 <= j <= p.ell + 1:
            raise ValueError("bloated_support needs 1 <= j <= l + 1")
        self._count("Dprime")
        data = self._bloat_for(y.bits)
        if isinstance(data, tuple):
            return data[j - 1]
        width = p.n - p.r
        head = data.col_range(j, p.ell) if j <= p.ell else None
        tail = data.col_range(p.ell + p.s + 1, width)
        kept = head.hstack(tail) if head is not None else tail
        if kept.cols == 0:
            return Subspace.full(p.n)
        return kept.left_kernel()


def _range_mask(width: int, j: int, k: int) -> int:
    """Mask of column positions j..k inclusive in a width-bit packed row."""
    if j > k:
        return 0
    return ((1 << (k - j + 1)) - 1) << (width - k)


def build_oracles(params: Params, seed: bytes) -> OracleSet:
    """Materialize the world for (params, seed)."""
    return OracleSet(params, seed)
