"""Random affine encoders ``k -> k A + b`` and the minimum-entropy joint decoder.

Text form of a code (one line)::

    p n m <A digits, row-major> <b digits>

e.g. ``2 3 2 101101 01`` is the 3x2 binary matrix [[1,0],[1,1],[0,1]] with
offset (0,1).  A code pair is two such lines, code 1 first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError, DimensionError, InvalidRateError
from .finite_field import (
    FieldMatrix,
    FieldSpec,
    coset,
    solve_affine_system,
    vec_mat_mul,
)
from .method_of_types import entropy_rank_table, entropy_ranks, type_codes

DEFAULT_DECODE_CAP = 2**24
DEFAULT_TABLE_CAP = 2**22


@dataclass(frozen=True, eq=False)
class AffineCode:
    A: FieldMatrix
    b: np.ndarray

    def __post_init__(self):
        b = self.A.spec.vector(self.b).copy()
        if b.shape != (self.A.cols,):
            raise DimensionError(f"offset length {b.shape} != matrix columns {self.A.cols}")
        if self.A.cols < 1:
            raise DimensionError("code must have m >= 1 output symbols")
        if self.A.cols > self.A.rows:
            raise DimensionError(f"m={self.A.cols} exceeds n={self.A.rows}")
        b.flags.writeable = False
        object.__setattr__(self, "b", b)

    @property
    def spec(self) -> FieldSpec:
        return self.A.spec

    @property
    def n(self) -> int:
        return self.A.rows

    @property
    def m(self) -> int:
        return self.A.cols

    def with_offset(self, b) -> "AffineCode":
        return AffineCode(self.A, b)

    def to_text(self) -> str:
        digits = "".join(str(v) for v in self.A.entries)
        offset = "".join(str(int(v)) for v in self.b)
        return f"{self.spec.p} {self.n} {self.m} {digits} {offset}"

    @classmethod
    def from_text(cls, line: str) -> "AffineCode":
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"malformed code line: {line!r}")
        p, n, m = (int(v) for v in parts[:3])
        spec = FieldSpec(p)
        a_digits, b_digits = parts[3], parts[4]
        if len(a_digits) != n * m or len(b_digits) != m:
            raise ValueError(f"digit counts do not match n={n}, m={m}")
        A = FieldMatrix(spec, np.array([int(c) for c in a_digits]).reshape(n, m))
        return cls(A, np.array([int(c) for c in b_digits]))

    def __eq__(self, other):
        if not isinstance(other, AffineCode):
            return NotImplemented
        return self.A == other.A and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash(self.to_text())

    def __repr__(self):
        return f"AffineCode({self.to_text()!r})"


@dataclass(frozen=True)
class CodePair:
    code1: AffineCode
    code2: AffineCode

    def __post_init__(self):
        if self.code1.n != self.code2.n:
            raise DimensionError(f"codes have different block lengths {self.code1.n}, {self.code2.n}")

    @property
    def n(self) -> int:
        return self.code1.n

    @property
    def dims(self) -> tuple[int, int]:
        return self.code1.spec.p, self.code2.spec.p

    @property
    def ms(self) -> tuple[int, int]:
        return self.code1.m, self.code2.m

    def to_text(self) -> str:
        return f"{self.code1.to_text()}\n{self.code2.to_text()}\n"

    @classmethod
    def from_text(cls, text: str) -> "CodePair":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if len(lines) != 2:
            raise ValueError(f"expected two code lines, found {len(lines)}")
        return cls(AffineCode.from_text(lines[0]), AffineCode.from_text(lines[1]))


@dataclass(frozen=True)
class RatePoint:
    R1: float
    R2: float

    def __post_init__(self):
        if not (self.R1 > 0 and self.R2 > 0):
            raise InvalidRateError(f"rates must be positive, got ({self.R1}, {self.R2})")

    @property
    def R3(self) -> float:
        return self.R1 + self.R2


def rate_to_dims(n: int, rates: RatePoint, specs) -> tuple[int, int]:
    """``m_i = floor(n R_i / log2 |X_i|)``, capped at ``n``.

    A rate at or above ``log2 |X_i|`` needs no compression, so the cap keeps
    the code a map from ``X^n``.  ``m_i = 0`` is rejected.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    for i, (R, spec) in enumerate(zip((rates.R1, rates.R2), specs), start=1):
        # small slack so that e.g. 0.29 * 100 does not floor to 28
        m = math.floor(n * R / math.log2(spec.p) + 1e-9)
        if m < 1:
            raise InvalidRateError(f"rate R{i}={R} gives m{i}=0 at n={n}")
        out.append(min(m, n))
    return out[0], out[1]


def random_affine(n: int, m: int, spec: FieldSpec, rng: np.random.Generator) -> AffineCode:
    """Uniform i.i.d. entries for ``A`` (drawn first) and then ``b``."""
    if not 1 <= m <= n:
        raise DimensionError(f"need 1 <= m <= n, got m={m}, n={n}")
    A = rng.integers(0, spec.p, size=(n, m))
    b = rng.integers(0, spec.p, size=m)
    return AffineCode(FieldMatrix(spec, A), b)


def random_code_pair(n: int, m1: int, m2: int, specs, rng: np.random.Generator) -> CodePair:
    return CodePair(random_affine(n, m1, specs[0], rng), random_affine(n, m2, specs[1], rng))


def identity_code(spec: FieldSpec, n: int) -> AffineCode:
    return AffineCode(FieldMatrix.identity(spec, n), np.zeros(n, dtype=np.int64))


def encode_linear(code: AffineCode, x) -> np.ndarray:
    return vec_mat_mul(x, code.A)


def encode_affine(code: AffineCode, k) -> np.ndarray:
    return (vec_mat_mul(k, code.A) + code.b) % code.spec.p


def affine_structure_check(code: AffineCode, x, k) -> bool:
    x, k = np.asarray(x), np.asarray(k)
    if x.shape != k.shape:
        raise DimensionError("x and k must have equal length")
    p = code.spec.p
    lhs = encode_affine(code, (x + k) % p)
    rhs = (encode_linear(code, x) + encode_affine(code, k)) % p
    return bool(np.array_equal(lhs, rhs))


# --- decoding ------------------------------------------------------------

UNIQUE, TIE, EMPTY = "unique", "tie", "empty"


@dataclass(frozen=True, eq=False)
class DecodeResult:
    x1: np.ndarray | None
    x2: np.ndarray | None
    status: str

    def matches(self, x1, x2) -> bool:
        if self.x1 is None:
            return False
        return bool(np.array_equal(self.x1, x1) and np.array_equal(self.x2, x2))


def min_entropy_decode(y1, y2, codes: CodePair, cap: int = DEFAULT_DECODE_CAP) -> DecodeResult:
    """Minimum joint-type-entropy pair among the preimages of ``(y1, y2)``.

    Ties go to the lexicographically smallest pair (x1 compared first) and are
    reported with status ``"tie"``; an empty preimage gives ``(None, None, "empty")``.
    """
    c1, c2 = codes.code1, codes.code2
    sol1 = solve_affine_system(c1.A, np.asarray(y1, dtype=np.int64))
    sol2 = solve_affine_system(c2.A, np.asarray(y2, dtype=np.int64))
    if sol1.particular is None or sol2.particular is None:
        return DecodeResult(None, None, EMPTY)
    n1 = c1.spec.p ** sol1.kernel.shape[0]
    n2 = c2.spec.p ** sol2.kernel.shape[0]
    if n1 * n2 > cap:
        raise CapacityError(f"{n1 * n2} candidate pairs exceed the decode cap of {cap}")
    P1 = coset(sol1, c1.spec.p)
    P2 = coset(sol2, c2.spec.p)
    i1 = np.repeat(np.arange(n1), n2)
    i2 = np.tile(np.arange(n2), n1)
    ranks = entropy_ranks(P1[i1], P2[i2], codes.dims)
    lex1 = c1.spec.index_of(P1)[i1]
    lex2 = c2.spec.index_of(P2)[i2]
    order = np.lexsort((lex2, lex1, ranks))
    best = order[0]
    tied = np.count_nonzero(ranks == ranks[best]) > 1
    return DecodeResult(P1[i1[best]].copy(), P2[i2[best]].copy(), TIE if tied else UNIQUE)


@dataclass(frozen=True, eq=False)
class DecodeTable:
    """Decoder outcome for every source pair of a linear code pair.

    Pair ``(i1, i2)`` (lexicographic indices into ``X1^n`` and ``X2^n``) sits
    at flat position ``i1 * N2 + i2``.  ``correct`` marks the pairs that the
    minimum-entropy decoder reproduces exactly.
    """

    codes: CodePair
    counts: np.ndarray  # (N, q1*q2) joint-type counts
    type_code: np.ndarray  # (N,)
    correct: np.ndarray  # (N,) bool

    def pair_probabilities(self, pmf) -> np.ndarray:
        """``P^n(x1, x2)`` for every pair, from the joint-type counts."""
        flat = np.asarray(pmf.probs, dtype=float).ravel()
        out = np.ones(self.counts.shape[0])
        for j, pj in enumerate(flat):
            out *= pj ** self.counts[:, j].astype(float)
        return out


def _cell_counts(X1: np.ndarray, X2: np.ndarray, dims) -> np.ndarray:
    """Joint-type counts of every (x1, x2) in X1 x X2 via indicator products."""
    q1, q2 = dims
    N1, N2 = X1.shape[0], X2.shape[0]
    counts = np.empty((N1 * N2, q1 * q2), dtype=np.int16)
    for a in range(q1):
        ind1 = (X1 == a).astype(np.int16)
        for b in range(q2):
            ind2 = (X2 == b).astype(np.int16)
            counts[:, a * q2 + b] = (ind1 @ ind2.T).ravel()
    return counts


def decode_table(codes: CodePair, cap: int = DEFAULT_TABLE_CAP) -> DecodeTable:
    """Decode every source pair at once by grouping pairs by syndrome."""
    c1, c2 = codes.code1, codes.code2
    n = codes.n
    N1, N2 = c1.spec.p**n, c2.spec.p**n
    if N1 * N2 > cap:
        raise CapacityError(f"{N1 * N2} source pairs exceed the table cap of {cap}")
    X1, X2 = c1.spec.all_vectors(n), c2.spec.all_vectors(n)
    s1 = c1.spec.index_of(encode_linear(c1, X1))
    s2 = c2.spec.index_of(encode_linear(c2, X2))
    M2 = c2.spec.p**c2.m
    syndrome = (s1[:, None] * M2 + s2[None, :]).ravel()

    counts = _cell_counts(X1, X2, codes.dims)
    tcode = type_codes(counts, n)
    table_codes, table_ranks = entropy_rank_table(n, codes.dims)
    rank = table_ranks[np.searchsorted(table_codes, tcode)]

    pair_index = np.arange(N1 * N2)
    order = np.lexsort((pair_index, rank, syndrome))
    first = np.ones(order.size, dtype=bool)
    first[1:] = syndrome[order[1:]] != syndrome[order[:-1]]
    correct = np.zeros(N1 * N2, dtype=bool)
    correct[order[first]] = True
    return DecodeTable(codes, counts, tcode, correct)
