"""Distribution experiments over dual-level chains and the collapse
distinguisher.

The chain samplers all emit tuples (T_1, ..., T_{l+1}) of subspaces of
Z2^n built over a fixed full-column-rank matrix A with levels
S_j = {v : v orthogonal to columns j..n-r of A}.  Five recipes exist:

* by_vector      - extend every level by one vector drawn outside S_{l+1}
* by_syndrome    - same law phrased through the image y = v^T A only
* by_shear       - shear A's tail columns and pick a nonzero tail target
* by_basis       - extend every level by s independent vectors clear of
                   the top level
* by_matrix      - widen the dual of a column-multiplied matrix with s
                   middle columns dropped

The first three induce one distribution, the last two another; checking
those equalities exactly (by enumerating the finite randomness domains)
is the point of this module.  Subspaces canonicalize to RREF bases, so
distributions are plain dictionaries keyed by tuples of subspaces.

The collapse distinguisher estimates the acceptance probability of the
dual-check test applied after a decode round trip, either with the full
coset superposition intact ("hash-only") or with the first input bit
measured away ("hash-first-bit"); the gap between the two cases is what
separates the hash from a compressing one.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .gf2 import BitMatrix, BitVec, Subspace, xor_span_ints
from .oracles import OracleSet, Params, SeededStream, build_oracles
from .qsim import StateVector, walsh_hadamard

__all__ = [
    "ChainSampler",
    "chain_by_vector",
    "chain_by_syndrome",
    "chain_by_shear",
    "chain_by_basis",
    "chain_by_matrix",
    "validate_chain",
    "exact_distribution",
    "empirical_distribution",
    "tv_distance",
    "tv_threshold",
    "collapse_acceptance_exact",
    "run_collapse_distinguisher",
    "validate_collapse_shortcut",
    "coset_points",
    "signature_set_census",
    "Metric",
    "ExperimentReport",
]

_EXACT_LIMIT = 1 << 24
_CENSUS_LIMIT = 20

SubspaceTuple = tuple[Subspace, ...]


def _dual_levels(mat: BitMatrix, ell: int) -> list[Subspace]:
    """S_1 .. S_{l+1} for the given full-column-rank matrix."""
    width = mat.cols
    return [mat.col_range(j, width).left_kernel() for j in range(1, ell + 2)]


class ChainSampler:
    """Base for tuple samplers with an enumerable randomness domain.

    Subclasses define domain_size and tuple_at(index); sample(rng) draws
    uniformly by index, so exact enumeration and Monte Carlo share one
    code path.
    """

    domain_size: int

    def __init__(self, mat: BitMatrix, n: int, r: int, ell: int) -> None:
        if mat.rows != n or mat.cols != n - r:
            raise ValueError("matrix shape must be n x (n - r)")
        if mat.rank() != n - r:
            raise ValueError("chain samplers need a full-column-rank matrix")
        if r + ell > n:
            raise ValueError("need r + ell <= n")
        self.mat = mat
        self.n = n
        self.r = r
        self.ell = ell
        self.levels = _dual_levels(mat, ell)

    def tuple_at(self, index: int) -> SubspaceTuple:
        raise NotImplementedError

    def sample(self, rng) -> SubspaceTuple:
        return self.tuple_at(int(rng.integers(0, self.domain_size)))


class chain_by_vector(ChainSampler):
    """T_j = span(S_j, v) for one uniform v outside the top level."""

    def __init__(self, mat: BitMatrix, n: int, r: int, ell: int) -> None:
        super().__init__(mat, n, r, ell)
        top = self.levels[-1]
        inside = set(top.element_ints())
        self._outside = [w for w in range(1 << n) if w not in inside]
        self.domain_size = len(self._outside)

    def tuple_at(self, index: int) -> SubspaceTuple:
        v = BitVec(self.n, self._outside[index])
        return tuple(level.extend([v]) for level in self.levels)


class chain_by_syndrome(ChainSampler):
    """Same v domain, but each level is rebuilt from the image y = v^T A:
    T_j collects the w with w^T A^{(j..)} equal to zero or to y's suffix.

    The construction deliberately forgets v and recovers a witness by
    solving, so agreement with chain_by_vector is a real check rather
    than shared code.
    """

    def __init__(self, mat: BitMatrix, n: int, r: int, ell: int) -> None:
        super().__init__(mat, n, r, ell)
        top = self.levels[-1]
        inside = set(top.element_ints())
        self._outside = [w for w in range(1 << n) if w not in inside]
        self.domain_size = len(self._outside)

    def tuple_at(self, index: int) -> SubspaceTuple:
        v = BitVec(self.n, self._outside[index])
        y = self.mat.rmatvec(v)
        width = self.mat.cols
        out = []
        for j in range(1, self.ell + 2):
            sub = self.mat.col_range(j, width)
            witness = sub.transpose().solve(y.sub(j, width))
            if witness is None:
                raise AssertionError("syndrome suffix must be attainable")
            out.append(self.levels[j - 1].extend([witness]))
        return tuple(out)


class chain_by_shear(ChainSampler):
    """Shear the tail columns by a random block and aim at a nonzero tail
    target: C = A [[I, 0], [B, I]], T_j = {w : w^T C^{(j..)} in {0, 0..0||z}}."""

    def __init__(self, mat: BitMatrix, n: int, r: int, ell: int) -> None:
        super().__init__(mat, n, r, ell)
        d = n - r - ell
        if d < 1:
            raise ValueError("shear sampler needs n - r - l >= 1")
        self._d = d
        self.domain_size = (1 << (d * ell)) * ((1 << d) - 1)

    def tuple_at(self, index: int) -> SubspaceTuple:
        d, ell = self._d, self.ell
        z_count = (1 << d) - 1
        b_bits, z_index = divmod(index, z_count)
        z = BitVec(d, z_index + 1)
        rows = [(b_bits >> (ell * (d - 1 - i))) & ((1 << ell) - 1) for i in range(d)]
        shear_block = BitMatrix(d, ell, tuple(rows))
        top = BitMatrix.identity(ell).hstack(BitMatrix.zeros(ell, d))
        factor = top.vstack(shear_block.hstack(BitMatrix.identity(d)))
        sheared = self.mat @ factor
        width = sheared.cols
        out = []
        for j in range(1, ell + 2):
            sub = sheared.col_range(j, width)
            kernel = sub.left_kernel()
            target = BitVec.zeros(ell - j + 1).concat(z) if j <= ell else z
            witness = sub.transpose().solve(target)
            if witness is None:
                raise AssertionError("tail target must be attainable")
            out.append(kernel.extend([witness]))
        return tuple(out)


class chain_by_basis(ChainSampler):
    """T_j = span(S_j, v_1..v_s) with the v ordered, independent, and
    jointly clear of the top level."""

    def __init__(self, mat: BitMatrix, n: int, r: int, ell: int, s: int) -> None:
        super().__init__(mat, n, r, ell)
        if s < 1 or n - r - ell < s:
            raise ValueError("need 1 <= s <= n - r - l")
        self.s = s
        self._radix = [(1 << n) - (1 << (r + ell + k)) for k in range(s)]
        size = 1
        for c in self._radix:
            size *= c
        self.domain_size = size

    def _pick(self, span: Subspace, position: int) -> BitVec:
        seen = 0
        for cand in range(1 << self.n):
            if span.contains_word(cand):
                continue
            if seen == position:
                return BitVec(self.n, cand)
            seen += 1
        raise AssertionError("position out of range")

    def tuple_at(self, index: int) -> SubspaceTuple:
        digits = []
        for c in reversed(self._radix):
            index, digit = divmod(index, c)
            digits.append(digit)
        digits.reverse()
        span = self.levels[-1]
        chosen: list[BitVec] = []
        for digit in digits:
            v = self._pick(span, digit)
            chosen.append(v)
            span = span.extend([v])
        return tuple(level.extend(chosen) for level in self.levels)

    def sample(self, rng) -> SubspaceTuple:
        span = self.levels[-1]
        chosen: list[BitVec] = []
        while len(chosen) < self.s:
            v = BitVec(self.n, int(rng.integers(0, 1 << self.n)))
            if span.contains(v):
                continue
            chosen.append(v)
            span = span.extend([v])
        return tuple(level.extend(chosen) for level in self.levels)


class chain_by_matrix(ChainSampler):
    """Widened duals of A [[I, 0], [M', M]] with s middle columns dropped:
    T_j is the dual of the span of columns j..l and l+s+1..n-r."""

    def __init__(self, mat: BitMatrix, n: int, r: int, ell: int, s: int) -> None:
        super().__init__(mat, n, r, ell)
        if s < 1 or n - r - ell < s:
            raise ValueError("need 1 <= s <= n - r - l")
        self.s = s
        d = n - r - ell
        self._d = d
        if d * d > 24:
            raise ValueError("matrix-chain enumeration capped at d^2 <= 24")
        self._tail_cols = [mat.column(ell + 1 + t) for t in range(d)]
        full_rank = []
        for bits in range(1 << (d * d)):
            rows = tuple((bits >> (d * (d - 1 - i))) & ((1 << d) - 1) for i in range(d))
            cand = BitMatrix(d, d, rows)
            if cand.rank() == d:
                full_rank.append(cand)
        self._square = full_rank
        self._mp_count = 1 << (d * ell)
        self.domain_size = len(full_rank) * self._mp_count
        self._top_cache: dict[int, Subspace] = {}

    def _top_for(self, m_index: int) -> Subspace:
        hit = self._top_cache.get(m_index)
        if hit is not None:
            return hit
        d, s = self._d, self.s
        square = self._square[m_index]
        kept = square.col_range(s + 1, d)
        if kept.cols == 0:
            top = Subspace.full(self.n)
        else:
            cols = []
            for t in range(1, kept.cols + 1):
                sel = kept.column(t)
                acc = 0
                for i in range(d):
                    if sel.bit(i + 1):
                        acc ^= self._tail_cols[i].bits
                cols.append(BitVec(self.n, acc))
            top = BitMatrix.from_cols(cols).left_kernel()
        self._top_cache[m_index] = top
        return top

    def tuple_at(self, index: int) -> SubspaceTuple:
        d, ell = self._d, self.ell
        m_index, mp_bits = divmod(index, self._mp_count)
        chain = self._top_for(m_index)
        out = [chain]
        for j in range(ell, 0, -1):
            # Column j of the widened matrix: A's column j plus the tail
            # block times column j of M'.
            normal = self.mat.column(j).bits
            for t in range(d):
                if (mp_bits >> (ell * (d - 1 - t) + (ell - j))) & 1:
                    normal ^= self._tail_cols[t].bits
            chain = chain.intersect_hyperplane(BitVec(self.n, normal))
            out.append(chain)
        out.reverse()
        return tuple(out)


def validate_chain(tpl: SubspaceTuple, n: int, r: int, extra: int) -> None:
    """Assert the shape every sampler must produce: ascending subspaces
    of Z2^n with dim T_j = r + extra + j - 1."""
    for j, sub in enumerate(tpl, start=1):
        if sub.ambient != n:
            raise AssertionError("wrong ambient dimension")
        if sub.dim != r + extra + j - 1:
            raise AssertionError(f"level {j} has dim {sub.dim}, expected {r + extra + j - 1}")
        if j > 1 and not tpl[j - 2].is_subspace_of(sub):
            raise AssertionError("levels must be nested")


Distribution = dict[SubspaceTuple, Fraction]


def exact_distribution(sampler: ChainSampler) -> Distribution:
    """Exhaust the randomness domain and return exact probabilities."""
    size = sampler.domain_size
    if size > _EXACT_LIMIT:
        raise ValueError(f"domain of {size} points exceeds exact-mode cap {_EXACT_LIMIT}")
    counts: dict[SubspaceTuple, int] = {}
    for idx in range(size):
        key = sampler.tuple_at(idx)
        counts[key] = counts.get(key, 0) + 1
    return {k: Fraction(c, size) for k, c in counts.items()}


def empirical_distribution(sampler: ChainSampler, trials: int, rng) -> Distribution:
    counts: dict[SubspaceTuple, int] = {}
    for _ in range(trials):
        key = sampler.sample(rng)
        counts[key] = counts.get(key, 0) + 1
    return {k: Fraction(c, trials) for k, c in counts.items()}


def tv_distance(p: Distribution, q: Distribution) -> Fraction:
    total = Fraction(0)
    for key in set(p) | set(q):
        total += abs(p.get(key, Fraction(0)) - q.get(key, Fraction(0)))
    return total / 2


def tv_threshold(support: int, trials_a: int, trials_b: int, alpha: float = 0.01) -> float:
    """Concentration bound for comparing two empirical distributions of a
    common law with the given support size: with probability >= 1 - alpha
    their tv distance stays below this value."""

    def eps(n: int) -> float:
        return math.sqrt((support * math.log(2.0) + math.log(2.0 / alpha)) / (2.0 * n))

    return eps(trials_a) + eps(trials_b)


# -- collapse distinguisher --------------------------------------------


def collapse_acceptance_exact(n: int, r: int) -> Fraction:
    """Closed-form acceptance of the hash-first-bit case:
    1/2 + 2^-(n-r+1) (2^n - 2^(n-r)) / (2^n - 1)."""
    return Fraction(1, 2) + Fraction((1 << n) - (1 << (n - r)), (1 << (n - r + 1)) * ((1 << n) - 1))


def _trial_seed(seed: bytes, index: int) -> bytes:
    return hashlib.blake2b(index.to_bytes(8, "big"), key=seed, digest_size=32).digest()


def _hash_only_acceptance(o: OracleSet, y: BitVec) -> Fraction:
    """Acceptance with the coset register intact: the transformed state
    is uniform over the dual of the generator, so average the dual check
    over that support."""
    gen, _ = o.coset_of(y)
    dual = gen.left_kernel()
    hits = sum(o.dual_check(1, y, BitVec(o.params.n, w)) for w in dual.element_ints())
    return Fraction(hits, 1 << dual.dim)


def run_collapse_distinguisher(
    n: int,
    r: int,
    case: str,
    trials: int,
    seed: bytes,
    batch: int = 4096,
) -> "ExperimentReport":
    """Monte Carlo over fresh worlds; acceptance computed per world from
    the support census rather than a dense simulation.

    hash-only: every world accepts with probability exactly 1 (checked by
    averaging the dual check over the dual support).

    hash-first-bit: measuring the first input bit splits the 2^(n-r)
    preimages of y into classes of sizes k and 2^(n-r) - k, and the
    acceptance given the split is (k^2 + (K - k)^2) / K^2.  Worlds are
    drawn as uniform permutations (rank keys per trial), matching the
    table construction's distribution.
    """
    if case not in ("hash-only", "hash-first-bit"):
        raise ValueError(f"unknown case {case!r}")
    report_params = {"n": n, "r": r, "case": case}
    expected_exact = collapse_acceptance_exact(n, r)
    metrics: list[Metric] = []
    if case == "hash-only":
        params = Params(n=n, r=r, ell=0, variant="original", perm_mode="table")
        exact_ones = 0
        for t in range(trials):
            o = build_oracles(params, _trial_seed(seed, t))
            stream = SeededStream(_trial_seed(seed, t), b"pick-y")
            y = stream.bitvec(r)
            if _hash_only_acceptance(o, y) == 1:
                exact_ones += 1
        metrics.append(
            Metric(
                id="acceptance_always_one",
                estimate=exact_ones / trials,
                expected=1.0,
                source="theory",
                passed=exact_ones == trials,
                detail=f"{exact_ones}/{trials} worlds accepted with probability exactly 1",
            )
        )
    else:
        size = 1 << n
        k_coset = 1 << (n - r)
        half = 1 << (n - 1)
        rng = np.random.default_rng(int.from_bytes(_trial_seed(seed, 0), "big") % (1 << 63))
        accs = np.empty(trials, dtype=np.float64)
        done = 0
        while done < trials:
            take = min(batch, trials - done)
            keys = rng.random((take, size))
            perms = np.argsort(keys, axis=1)  # row t maps x -> perms[t, x]
            ys = rng.integers(0, 1 << r, size=take)
            in_fiber = (perms >> (n - r)) == ys[:, None]
            first_zero = np.zeros((take, size), dtype=bool)
            first_zero[:, :half] = True
            k = np.sum(in_fiber & first_zero, axis=1)
            accs[done : done + take] = (k**2 + (k_coset - k) ** 2) / float(k_coset**2)
            done += take
        mean = float(np.mean(accs))
        se = float(np.std(accs, ddof=1) / math.sqrt(trials))
        expected = float(expected_exact)
        metrics.append(
            Metric(
                id="acceptance_mean",
                estimate=mean,
                expected=expected,
                source="theory",
                passed=abs(mean - expected) <= 3 * se,
                ci_low=mean - 3 * se,
                ci_high=mean + 3 * se,
                detail="within 3 standard errors of the closed form",
            )
        )
        adv = 1.0 - mean
        z99 = 2.3263478740408408  # one-sided 99% normal quantile
        metrics.append(
            Metric(
                id="advantage_over_quarter",
                estimate=adv,
                expected=0.25,
                source="theory",
                passed=(adv - z99 * se) >= 0.25,
                ci_low=adv - z99 * se,
                ci_high=adv + z99 * se,
                detail="distinguishing advantage exceeds 1/4 at 99% confidence",
            )
        )
    return ExperimentReport(
        name=f"collapse-distinguisher-{case}",
        params=report_params,
        metrics=metrics,
        seed=seed.hex(),
        trials=trials,
    )


def validate_collapse_shortcut(n: int, r: int, seed: bytes, worlds: int = 5) -> float:
    """Check the census shortcut against dense simulation on real worlds.

    For each world and a few y: simulate transform-then-check acceptance
    for the intact coset state (must be 1) and for both first-bit slices
    (must equal the slice weight), and compare the per-world acceptance
    against the census formula.  Returns the max absolute error.
    """
    if n > 10:
        raise ValueError("dense validation is for n <= 10")
    params = Params(n=n, r=r, ell=0, variant="original", perm_mode="table")
    worst = 0.0
    k_coset = 1 << (n - r)
    for t in range(worlds):
        o = build_oracles(params, _trial_seed(seed, 1000 + t))
        stream = SeededStream(_trial_seed(seed, 1000 + t), b"pick-y")
        y = stream.bitvec(r)
        accept_idx = [
            w for w in range(1 << n) if o.dual_check(1, y, BitVec(n, w))
        ]
        # intact coset state
        gen, shift = o.coset_of(y)
        support = xor_span_ints([c.bits for c in gen.columns()], shift.bits)
        state = StateVector.from_support(n, support)
        walsh_hadamard(state)
        acc = float(np.sum(np.abs(state.amp[accept_idx]) ** 2))
        worst = max(worst, abs(acc - 1.0))
        # first-bit slices
        preimages = [x for x in range(1 << n) if o.hash_bits(BitVec(n, x)).bits == y.bits]
        census_total = 0.0
        for bit in (0, 1):
            xs = [x for x in preimages if (x >> (n - 1)) == bit]
            if not xs:
                continue
            points = []
            for x in xs:
                _, u = o.encode(BitVec(n, x))
                points.append(u.bits)
            slice_state = StateVector.from_support(n, points)
            walsh_hadamard(slice_state)
            acc_b = float(np.sum(np.abs(slice_state.amp[accept_idx]) ** 2))
            weight = len(xs) / k_coset
            worst = max(worst, abs(acc_b - weight))
            census_total += weight * (len(xs) / k_coset)
        k = sum(1 for x in preimages if (x >> (n - 1)) == 0)
        formula = (k**2 + (k_coset - k) ** 2) / k_coset**2
        worst = max(worst, abs(census_total - formula))
    return worst


# -- signature-set census ----------------------------------------------


def coset_points(o: OracleSet, y: BitVec) -> np.ndarray:
    """All 2^(n-r) points of the shifted coset for y, as a sorted int array."""
    p = o.params
    if p.n - p.r > _CENSUS_LIMIT:
        raise ValueError("coset enumeration capped at 2^20 points")
    gen, shift = o.coset_of(y)
    pts = np.array(xor_span_ints([c.bits for c in gen.columns()], shift.bits), dtype=np.int64)
    pts.sort()
    return pts


def signature_set_census(o: OracleSet, y: BitVec, m: BitVec) -> list[int]:
    """Count coset points agreeing with m on the first j bits, for
    j = 0..len(m).  Healthy worlds give 2^(n - r - j) at every level."""
    p = o.params
    if m.n > p.n:
        raise ValueError("prefix longer than signatures")
    points = coset_points(o, y)
    counts = []
    for j in range(m.n + 1):
        cut = p.n - j
        want = m.prefix(j).bits
        counts.append(int(np.count_nonzero((points >> cut) == want)))
    return counts


# -- reporting ----------------------------------------------------------


@dataclass
class Metric:
    """One checked quantity: what was measured, what was expected, where
    the expectation comes from ("theory" for closed-form analysis,
    "oracle" for an independent computation), and whether the check
    passed."""

    id: str
    estimate: float
    expected: float
    source: str
    passed: bool
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "estimate": self.estimate,
            "expected": self.expected,
            "source": self.source,
            "pass": self.passed,
        }
        if self.ci_low is not None:
            out["ci_low"] = self.ci_low
            out["ci_high"] = self.ci_high
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class ExperimentReport:
    name: str
    params: dict
    metrics: list[Metric]
    seed: str
    trials: int

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "metrics": [m.to_json() for m in self.metrics],
            "seed": self.seed,
            "trials": self.trials,
            "pass": self.passed,
        }

    def render(self) -> str:
        lines = [f"{self.name}  (trials={self.trials}, seed={self.seed[:16]}...)"]
        for m in self.metrics:
            verdict = "PASS" if m.passed else "FAIL"
            ci = ""
            if m.ci_low is not None:
                ci = f"  ci=[{m.ci_low:.6g}, {m.ci_high:.6g}]"
            lines.append(
                f"  [{verdict}] {m.id}: got {m.estimate:.6g}, expected {m.expected:.6g}"
                f" ({m.source}){ci}"
            )
            if m.detail:
                lines.append(f"         {m.detail}")
        return "\n".join(lines)
