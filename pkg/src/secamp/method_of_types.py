"""Joint types of sequence pairs: enumeration, class sizes and probability bounds.

Types are kept as integer count grids.  For batch work a type is also
identified by its *code*, the mixed-radix integer
``sum_j counts_j * (n+1)**j`` over the flattened grid.

Entropy comparisons between types of the same length use the exact integer
``prod_j c_j ** c_j``: since ``n H = n log n - log prod c**c``, a larger
product means a strictly smaller entropy, with no floating-point ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import CapacityError, DimensionError
from .prob_core import JointPmf, SequencePair, conditional_entropy, entropy, kl_divergence

DEFAULT_TYPE_CAP = 10**7


@dataclass(frozen=True, eq=False)
class JointType:
    n: int
    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64, copy=True)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if np.any(c < 0):
            raise ValueError("type counts must be non-negative")
        if int(c.sum()) != self.n:
            raise ValueError(f"type counts sum to {int(c.sum())}, expected n={self.n}")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def dims(self) -> tuple[int, int]:
        return self.counts.shape

    def key(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.counts.ravel())

    def as_pmf(self) -> JointPmf:
        return JointPmf(self.counts / self.n)

    @property
    def code(self) -> int:
        return int(sum(c * (self.n + 1) ** j for j, c in enumerate(self.key())))

    def __eq__(self, other):
        if not isinstance(other, JointType):
            return NotImplemented
        return self.n == other.n and self.dims == other.dims and self.key() == other.key()

    def __hash__(self):
        return hash((self.n, self.dims, self.key()))

    def __repr__(self):
        return f"JointType(n={self.n}, counts={self.counts.tolist()})"


def joint_type_of(s: SequencePair) -> JointType:
    q1, q2 = s.spec1.p, s.spec2.p
    counts = np.zeros((q1, q2), dtype=np.int64)
    np.add.at(counts, (s.seq1, s.seq2), 1)
    return JointType(s.n, counts)


def count_joint_types(n: int, dims) -> int:
    k = int(np.prod(dims))
    return math.comb(n + k - 1, k - 1)


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def enumerate_joint_types(n: int, dims, cap: int = DEFAULT_TYPE_CAP) -> list[JointType]:
    """All joint types of length ``n``, lexicographic in the flattened counts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dims = tuple(dims)
    total = count_joint_types(n, dims)
    if total > cap:
        raise CapacityError(f"{total} joint types exceed the cap of {cap}")
    k = int(np.prod(dims))
    return [JointType(n, np.reshape(c, dims)) for c in _compositions(n, k)]


def type_class_size(t: JointType) -> int:
    size = math.factorial(t.n)
    for c in t.key():
        size //= math.factorial(c)
    return size


def entropy_of_type(t: JointType) -> float:
    return entropy(t.counts / t.n)


def conditional_entropy_of_type(t: JointType, given: int) -> float:
    return conditional_entropy(t.as_pmf(), given)


def entropy_key(counts) -> int:
    """``prod c**c``; larger key <=> smaller empirical entropy (same n)."""
    key = 1
    for c in np.ravel(counts):
        c = int(c)
        if c > 1:
            key *= c**c
    return key


def type_class_probability_bound(t: JointType, p: JointPmf, exact: bool = False):
    """``2^{-n D(t/n || p)}``, optionally paired with the exact ``P^n(T)``."""
    if t.dims != p.dims:
        raise DimensionError(f"type dims {t.dims} != pmf dims {p.dims}")
    d = kl_divergence(t.counts / t.n, p)
    bound = 0.0 if math.isinf(d) else 2.0 ** (-t.n * d)
    if not exact:
        return bound
    return bound, type_class_probability(t, p)


def type_class_probability(t: JointType, p: JointPmf) -> float:
    """Exact ``P^n(T) = |T| prod p^count``."""
    mask = t.counts > 0
    if np.any(p.probs[mask] == 0):
        return 0.0
    log_p = math.log(type_class_size(t)) + float(
        (t.counts[mask] * np.log(p.probs[mask])).sum()
    )
    return math.exp(log_p)


def type_class_members(t: JointType) -> np.ndarray:
    """Every sequence pair of type ``t`` as rows of flattened cell indices.

    Rows are distinct permutations of the cell multiset, in lexicographic
    order; cell ``c`` stands for the symbol pair ``(c // q2, c % q2)``.
    """
    cells = sorted(c for c, cnt in enumerate(t.key()) for _ in range(cnt))
    out = [tuple(cells)]
    a = cells[:]
    n = len(a)
    while True:
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            break
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1:] = reversed(a[i + 1:])
        out.append(tuple(a))
    return np.array(out, dtype=np.int64)


def type_class_pairs(t: JointType) -> tuple[np.ndarray, np.ndarray]:
    cells = type_class_members(t)
    q2 = t.dims[1]
    return cells // q2, cells % q2


# --- batch helpers -------------------------------------------------------


def counts_of(x1: np.ndarray, x2: np.ndarray, dims) -> np.ndarray:
    """Joint-type counts for stacks of sequence pairs, shape (N, q1*q2)."""
    q1, q2 = dims
    cells = np.asarray(x1) * q2 + np.asarray(x2)
    N, n = cells.shape
    dtype = np.int16 if n < 2**15 else np.int64
    counts = np.zeros((N, q1 * q2), dtype=dtype)
    rows = np.arange(N)
    for t in range(n):
        # one increment per row, so the fancy-index update has no collisions
        counts[rows, cells[:, t]] += 1
    return counts


def type_codes(counts: np.ndarray, n: int) -> np.ndarray:
    k = counts.shape[1]
    if (n + 1) ** k >= 2**62:
        raise CapacityError(f"type codes overflow for n={n} with {k} cells")
    weights = (n + 1) ** np.arange(k, dtype=np.int64)
    return counts.astype(np.int64) @ weights


@lru_cache(maxsize=64)
def entropy_rank_table(n: int, dims: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Sorted type codes and their entropy ranks (0 = smallest entropy)."""
    types = enumerate_joint_types(n, dims)
    codes = np.array([t.code for t in types], dtype=np.int64)
    keys = [entropy_key(t.counts) for t in types]
    distinct = sorted(set(keys), reverse=True)
    rank_of = {k: r for r, k in enumerate(distinct)}
    ranks = np.array([rank_of[k] for k in keys], dtype=np.int64)
    order = np.argsort(codes)
    codes, ranks = codes[order], ranks[order]
    codes.flags.writeable = False
    ranks.flags.writeable = False
    return codes, ranks


def entropy_ranks(x1: np.ndarray, x2: np.ndarray, dims) -> np.ndarray:
    """Exact entropy rank of each pair's joint type (ties share a rank)."""
    x1 = np.atleast_2d(x1)
    n = x1.shape[1]
    codes, ranks = entropy_rank_table(n, tuple(dims))
    c = type_codes(counts_of(x1, np.atleast_2d(x2), dims), n)
    return ranks[np.searchsorted(codes, c)]
