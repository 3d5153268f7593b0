"""Bit-packed linear algebra over Z2.

Vectors and matrix rows are stored one Python int per row, so a row of up
to 64 columns fits a single machine word.  Public indices are 1-based and
bit 1 is the most significant bit of the packed word: the bit string
"10110" packs to 0b10110 and serializes to hex "16".  All containers are
immutable; operations return fresh objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

__all__ = [
    "BitVec",
    "BitMatrix",
    "Subspace",
    "sample_full_column_rank",
    "xor_span_ints",
]


def _mask(width: int) -> int:
    return (1 << width) - 1


def _parity(x: int) -> int:
    return x.bit_count() & 1


def _rand_bits(rng, k: int) -> int:
    """Draw k bits, MSB-first, from a byte-stream object or numpy Generator."""
    if k == 0:
        return 0
    if hasattr(rng, "bits"):
        return rng.bits(k)
    data = rng.bytes((k + 7) // 8)
    return int.from_bytes(data, "big") >> (8 * len(data) - k)


@dataclass(frozen=True, slots=True)
class BitVec:
    """Immutable bit vector of fixed length ``n`` with 1-based indexing."""

    n: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("negative length")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"value 0x{self.bits:x} does not fit in {self.n} bits")

    # -- constructors ---------------------------------------------------

    @classmethod
    def zeros(cls, n: int) -> "BitVec":
        return cls(n, 0)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVec":
        """Build from an iterable of 0/1 values, index 1 first."""
        value = 0
        count = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            value = (value << 1) | b
            count += 1
        return cls(count, value)

    @classmethod
    def from_str(cls, s: str) -> "BitVec":
        return cls.from_bits(int(c) for c in s)

    @classmethod
    def from_hex(cls, s: str, n: int) -> "BitVec":
        digits = (n + 3) // 4
        if len(s) != digits:
            raise ValueError(f"expected {digits} hex digits for {n} bits, got {len(s)!r}")
        value = int(s, 16) if digits else 0
        return cls(n, value)

    @classmethod
    def random(cls, rng, n: int) -> "BitVec":
        return cls(n, _rand_bits(rng, n))

    # -- access ---------------------------------------------------------

    def bit(self, i: int) -> int:
        """Bit at 1-based index ``i`` (bit 1 is the most significant)."""
        if not 1 <= i <= self.n:
            raise IndexError(f"bit index {i} out of range [1, {self.n}]")
        return (self.bits >> (self.n - i)) & 1

    def with_bit(self, i: int, value: int) -> "BitVec":
        if not 1 <= i <= self.n:
            raise IndexError(f"bit index {i} out of range [1, {self.n}]")
        pos = self.n - i
        cleared = self.bits & ~(1 << pos)
        return BitVec(self.n, cleared | ((value & 1) << pos))

    def sub(self, j: int, k: int) -> "BitVec":
        """Bits ``j..k`` inclusive (1-based).  ``k = j - 1`` gives the empty vector."""
        if not (1 <= j <= self.n + 1 and j - 1 <= k <= self.n):
            raise IndexError(f"range [{j}, {k}] invalid for length {self.n}")
        width = k - j + 1
        return BitVec(width, (self.bits >> (self.n - k)) & _mask(width)) if width else BitVec(0, 0)

    def prefix(self, k: int) -> "BitVec":
        return self.sub(1, k)

    def concat(self, other: "BitVec") -> "BitVec":
        return BitVec(self.n + other.n, (self.bits << other.n) | other.bits)

    def __xor__(self, other: "BitVec") -> "BitVec":
        if self.n != other.n:
            raise ValueError("length mismatch in xor")
        return BitVec(self.n, self.bits ^ other.bits)

    def dot(self, other: "BitVec") -> int:
        if self.n != other.n:
            raise ValueError("length mismatch in dot")
        return _parity(self.bits & other.bits)

    def weight(self) -> int:
        return self.bits.bit_count()

    def bit_list(self) -> list[int]:
        return [self.bit(i) for i in range(1, self.n + 1)]

    def to_hex(self) -> str:
        digits = (self.n + 3) // 4
        return format(self.bits, f"0{digits}x") if digits else ""

    def __len__(self) -> int:
        return self.n

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bit_list())


@dataclass(frozen=True, slots=True)
class BitMatrix:
    """Immutable matrix over Z2, stored as one packed int per row."""

    rows: int
    cols: int
    row_words: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative shape")
        if len(self.row_words) != self.rows:
            raise ValueError("row count mismatch")
        limit = 1 << self.cols
        for w in self.row_words:
            if not 0 <= w < limit:
                raise ValueError("row does not fit column count")

    # -- constructors ---------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, k: int) -> "BitMatrix":
        return cls(k, k, tuple(1 << (k - 1 - i) for i in range(k)))

    @classmethod
    def from_rows(cls, rows: Sequence[BitVec]) -> "BitMatrix":
        if not rows:
            raise ValueError("from_rows needs at least one row; use zeros for empty")
        cols = rows[0].n
        if any(r.n != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(r.bits for r in rows))

    @classmethod
    def from_cols(cls, cols: Sequence[BitVec]) -> "BitMatrix":
        if not cols:
            raise ValueError("from_cols needs at least one column")
        n_rows = cols[0].n
        if any(c.n != n_rows for c in cols):
            raise ValueError("ragged columns")
        words = []
        for i in range(1, n_rows + 1):
            w = 0
            for c in cols:
                w = (w << 1) | c.bit(i)
            words.append(w)
        return cls(n_rows, len(cols), tuple(words))

    @classmethod
    def random(cls, rng, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, tuple(_rand_bits(rng, cols) for _ in range(rows)))

    # -- access ---------------------------------------------------------

    def row(self, i: int) -> BitVec:
        if not 1 <= i <= self.rows:
            raise IndexError(f"row {i} out of range [1, {self.rows}]")
        return BitVec(self.cols, self.row_words[i - 1])

    def column(self, j: int) -> BitVec:
        if not 1 <= j <= self.cols:
            raise IndexError(f"column {j} out of range [1, {self.cols}]")
        shift = self.cols - j
        value = 0
        for w in self.row_words:
            value = (value << 1) | ((w >> shift) & 1)
        return BitVec(self.rows, value)

    def columns(self) -> list[BitVec]:
        return [self.column(j) for j in range(1, self.cols + 1)]

    def entry(self, i: int, j: int) -> int:
        return self.row(i).bit(j)

    def col_range(self, j: int, k: int) -> "BitMatrix":
        """Columns ``j..k`` inclusive (1-based); ``k = j - 1`` is the empty slice."""
        if not (1 <= j <= self.cols + 1 and j - 1 <= k <= self.cols):
            raise IndexError(f"column range [{j}, {k}] invalid for {self.cols} columns")
        width = k - j + 1
        shift = self.cols - k
        return BitMatrix(self.rows, width, tuple((w >> shift) & _mask(width) for w in self.row_words))

    # -- algebra --------------------------------------------------------

    def matvec(self, v: BitVec) -> BitVec:
        """M @ v for a length-``cols`` vector, giving length ``rows``."""
        if v.n != self.cols:
            raise ValueError(f"matvec length mismatch: {v.n} != {self.cols}")
        out = 0
        for w in self.row_words:
            out = (out << 1) | _parity(w & v.bits)
        return BitVec(self.rows, out)

    def rmatvec(self, v: BitVec) -> BitVec:
        """v^T @ M for a length-``rows`` vector, giving length ``cols``."""
        if v.n != self.rows:
            raise ValueError(f"rmatvec length mismatch: {v.n} != {self.rows}")
        acc = 0
        sel = v.bits
        for w in reversed(self.row_words):
            if sel & 1:
                acc ^= w
            sel >>= 1
        return BitVec(self.cols, acc)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError("matmul shape mismatch")
        out = []
        for w in self.row_words:
            acc = 0
            sel = w
            for o in reversed(other.row_words):
                if sel & 1:
                    acc ^= o
                sel >>= 1
            out.append(acc)
        return BitMatrix(self.rows, other.cols, tuple(out))

    def transpose(self) -> "BitMatrix":
        words = []
        for j in range(1, self.cols + 1):
            words.append(self.column(j).bits)
        return BitMatrix(self.cols, self.rows, tuple(words))

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.rows != other.rows:
            raise ValueError("hstack row mismatch")
        return BitMatrix(
            self.rows,
            self.cols + other.cols,
            tuple((a << other.cols) | b for a, b in zip(self.row_words, other.row_words)),
        )

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise ValueError("vstack column mismatch")
        return BitMatrix(self.rows + other.rows, self.cols, self.row_words + other.row_words)

    def rank(self) -> int:
        basis: dict[int, int] = {}
        for w in self.row_words:
            w = _reduce_word(w, basis)
            if w:
                basis[w.bit_length() - 1] = w
        return len(basis)

    def rref(self) -> "BitMatrix":
        """Reduced row echelon form with zero rows dropped (canonical)."""
        reduced = _rref_words(self.row_words)
        return BitMatrix(len(reduced), self.cols, tuple(reduced))

    def solve(self, target: BitVec) -> Optional[BitVec]:
        """A solution x of ``M @ x = target`` with free variables set to zero.

        Returns None when the system is inconsistent.  The solution is a
        canonical function of (M, target).
        """
        if target.n != self.rows:
            raise ValueError("solve target length mismatch")
        # Augment each row with the target bit in the least significant slot.
        aug = [(w << 1) | target.bit(i + 1) for i, w in enumerate(self.row_words)]
        reduced = _rref_words(aug)
        x = 0
        for w in reduced:
            if w == 1:
                return None  # zero coefficients, nonzero right-hand side
            if w & 1:
                pivot = w.bit_length() - 2  # column position within cols bits
                x |= 1 << pivot
        return BitVec(self.cols, x)

    def null_space(self) -> "Subspace":
        """Kernel {x : M @ x = 0} as a canonical subspace of Z2^cols."""
        reduced = _rref_words(self.row_words)
        pivots = [self.cols - w.bit_length() for w in reduced]  # 0-based column indices
        pivot_set = set(pivots)
        basis = []
        for f in range(self.cols):
            if f in pivot_set:
                continue
            vec = 1 << (self.cols - 1 - f)
            for p, w in zip(pivots, reduced):
                if (w >> (self.cols - 1 - f)) & 1:
                    vec |= 1 << (self.cols - 1 - p)
            basis.append(vec)
        return Subspace.from_words(self.cols, basis)

    def left_kernel(self) -> "Subspace":
        """The space {v : v^T M = 0} as a canonical subspace of Z2^rows."""
        return self.transpose().null_space()

    def column_space(self) -> "Subspace":
        return Subspace.from_words(self.rows, [c.bits for c in self.columns()])

    # -- serialization --------------------------------------------------

    def to_hex_rows(self) -> list[str]:
        return [self.row(i).to_hex() for i in range(1, self.rows + 1)]

    @classmethod
    def from_hex_rows(cls, rows: Sequence[str], cols: int) -> "BitMatrix":
        return cls(len(rows), cols, tuple(BitVec.from_hex(s, cols).bits for s in rows))

    def __str__(self) -> str:
        return "\n".join(str(self.row(i)) for i in range(1, self.rows + 1))


def _reduce_word(w: int, basis: dict[int, int]) -> int:
    while w:
        p = w.bit_length() - 1
        if p not in basis:
            break
        w ^= basis[p]
    return w


def _rref_words(words: Iterable[int]) -> list[int]:
    """Reduced row echelon form of packed rows; zero rows dropped.

    Rows come back sorted so pivot columns ascend, which makes the result
    a canonical representative of the row space.
    """
    basis: dict[int, int] = {}
    for w in words:
        w = _reduce_word(w, basis)
        if w:
            basis[w.bit_length() - 1] = w
    # Back-substitute so every pivot column appears in exactly one row.
    for p in sorted(basis):
        for q in basis:
            if q > p and (basis[q] >> p) & 1:
                basis[q] ^= basis[p]
    return [basis[p] for p in sorted(basis, reverse=True)]


@dataclass(frozen=True, slots=True)
class Subspace:
    """Linear subspace of Z2^ambient in canonical (RREF) basis form.

    Two subspaces are equal as sets iff their dataclass fields compare
    equal, because the constructor always reduces the generating set to
    the unique RREF basis.
    """

    ambient: int
    basis: tuple[int, ...]

    def __post_init__(self) -> None:
        if tuple(_rref_words(self.basis)) != self.basis:
            raise ValueError("basis is not in canonical form; use from_words")

    @classmethod
    def from_words(cls, ambient: int, words: Iterable[int]) -> "Subspace":
        return cls(ambient, tuple(_rref_words(words)))

    @classmethod
    def from_vectors(cls, vectors: Sequence[BitVec]) -> "Subspace":
        if not vectors:
            raise ValueError("need at least one vector; use trivial() instead")
        ambient = vectors[0].n
        if any(v.n != ambient for v in vectors):
            raise ValueError("ragged vectors")
        return cls.from_words(ambient, [v.bits for v in vectors])

    @classmethod
    def trivial(cls, ambient: int) -> "Subspace":
        return cls(ambient, ())

    @classmethod
    def full(cls, ambient: int) -> "Subspace":
        return cls.from_words(ambient, [1 << i for i in range(ambient)])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def canonical(self) -> "Subspace":
        return self

    def contains_word(self, w: int) -> bool:
        basis = {b.bit_length() - 1: b for b in self.basis}
        return _reduce_word(w, basis) == 0

    def contains(self, v: BitVec) -> bool:
        if v.n != self.ambient:
            raise ValueError("ambient mismatch")
        return self.contains_word(v.bits)

    def is_subspace_of(self, other: "Subspace") -> bool:
        if self.ambient != other.ambient:
            raise ValueError("ambient mismatch")
        return all(other.contains_word(b) for b in self.basis)

    def extend(self, vectors: Iterable[BitVec]) -> "Subspace":
        words = list(self.basis) + [v.bits for v in vectors]
        return Subspace.from_words(self.ambient, words)

    def element_ints(self) -> list[int]:
        """All 2^dim elements as packed ints (Gray-code order)."""
        return xor_span_ints(self.basis)

    def vectors(self) -> list[BitVec]:
        return [BitVec(self.ambient, w) for w in self.element_ints()]

    def orthogonal(self) -> "Subspace":
        """The dual {v : v . b = 0 for every basis vector b}."""
        if not self.basis:
            return Subspace.full(self.ambient)
        mat = BitMatrix(len(self.basis), self.ambient, self.basis)
        # v is orthogonal to the row space iff (rows as matrix) @ v = 0.
        return mat.null_space()

    def intersect_hyperplane(self, normal: BitVec) -> "Subspace":
        """Intersection with {v : v . normal = 0}."""
        if normal.n != self.ambient:
            raise ValueError("ambient mismatch")
        odd = [b for b in self.basis if _parity(b & normal.bits)]
        even = [b for b in self.basis if not _parity(b & normal.bits)]
        if odd:
            lead = odd[0]
            even.extend(b ^ lead for b in odd[1:])
        return Subspace.from_words(self.ambient, even)


def xor_span_ints(generators: Sequence[int], shift: int = 0) -> list[int]:
    """All XOR combinations of ``generators`` offset by ``shift``.

    Enumerates in Gray-code order, so each step XORs a single generator.
    With k linearly independent generators the result has 2^k distinct
    entries; dependent generators produce repeats.
    """
    out = [shift]
    current = shift
    for i in range(1, 1 << len(generators)):
        current ^= generators[(i & -i).bit_length() - 1]
        out.append(current)
    return out


def sample_full_column_rank(rng, rows: int, cols: int) -> BitMatrix:
    """Uniform matrix with linearly independent columns.

    Columns are drawn one at a time and redrawn whenever the candidate
    falls inside the span of the columns already kept, which induces the
    uniform distribution on full-column-rank matrices.
    """
    if cols > rows:
        raise ValueError("cannot have more independent columns than rows")
    basis: dict[int, int] = {}
    kept: list[BitVec] = []
    while len(kept) < cols:
        cand = _rand_bits(rng, rows)
        residue = _reduce_word(cand, basis)
        if residue == 0:
            continue
        basis[residue.bit_length() - 1] = residue
        kept.append(BitVec(rows, cand))
    if not kept:
        return BitMatrix.zeros(rows, 0)
    return BitMatrix.from_cols(kept)
