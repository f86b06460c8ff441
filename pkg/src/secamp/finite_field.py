"""Prime-field arithmetic and dense linear algebra over GF(p).

Scalars are wrapped in :class:`FieldElement`; vectors are plain integer
``numpy`` arrays whose entries lie in ``[0, p)``, and matrices are
:class:`FieldMatrix` instances.  Vectors of length ``n`` are indexed
lexicographically (first coordinate most significant), so that
``all_vectors(n)[index_of(v)] == v``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionError, FieldDivisionByZero, SpecMismatchError


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The prime field GF(p)."""

    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or isinstance(self.p, bool):
            raise TypeError(f"field order must be an integer, got {self.p!r}")
        if not _is_prime(int(self.p)):
            raise ValueError(f"field order {self.p} is not prime")
        object.__setattr__(self, "p", int(self.p))

    def __repr__(self):
        return f"GF({self.p})"

    def element(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.p, self)

    def vector(self, values) -> np.ndarray:
        """Validate ``values`` as a vector over this field (no reduction)."""
        arr = np.asarray(values, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.p):
            raise ValueError(f"entries outside [0, {self.p})")
        return arr

    def all_vectors(self, n: int) -> np.ndarray:
        """Every vector of length ``n`` as rows, in lexicographic order."""
        if n == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grid = np.indices((self.p,) * n, dtype=np.int64).reshape(n, -1)
        return grid.T.copy()

    def index_of(self, vectors) -> np.ndarray | int:
        """Lexicographic index of one vector (int) or a stack of them (array)."""
        arr = np.asarray(vectors, dtype=np.int64)
        n = arr.shape[-1]
        weights = self.p ** np.arange(n - 1, -1, -1, dtype=np.int64)
        idx = arr @ weights
        return int(idx) if arr.ndim == 1 else idx

    def vector_at(self, index: int, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=np.int64)
        for pos in range(n - 1, -1, -1):
            index, out[pos] = divmod(index, self.p)
        return out


@dataclass(frozen=True)
class FieldElement:
    value: int
    spec: FieldSpec

    def __post_init__(self):
        if not 0 <= self.value < self.spec.p:
            raise ValueError(f"{self.value} is not an element of {self.spec}")

    def _check(self, other: "FieldElement"):
        if not isinstance(other, FieldElement):
            return NotImplemented
        if other.spec != self.spec:
            raise SpecMismatchError(f"{self.spec} vs {other.spec}")
        return None

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return FieldElement((-self.value) % self.spec.p, self.spec)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.spec.p})"


def _same_spec(a: FieldElement, b: FieldElement) -> FieldSpec:
    if a.spec != b.spec:
        raise SpecMismatchError(f"cannot combine elements of {a.spec} and {b.spec}")
    return a.spec


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    spec = _same_spec(a, b)
    return FieldElement((a.value + b.value) % spec.p, spec)


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    spec = _same_spec(a, b)
    return FieldElement((a.value - b.value) % spec.p, spec)


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    spec = _same_spec(a, b)
    return FieldElement((a.value * b.value) % spec.p, spec)


def mul_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise FieldDivisionByZero(f"0 has no inverse in {a.spec}")
    return FieldElement(pow(a.value, a.spec.p - 2, a.spec.p), a.spec)


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Dense matrix over GF(p); the backing array is read-only."""

    spec: FieldSpec
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"matrix must be 2-D, got shape {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.spec.p):
            raise ValueError(f"matrix entries outside [0, {self.spec.p})")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_rows(cls, spec: FieldSpec, rows) -> "FieldMatrix":
        return cls(spec, np.asarray(rows, dtype=np.int64))

    @classmethod
    def identity(cls, spec: FieldSpec, n: int) -> "FieldMatrix":
        return cls(spec, np.eye(n, dtype=np.int64))

    @classmethod
    def zeros(cls, spec: FieldSpec, rows: int, cols: int) -> "FieldMatrix":
        return cls(spec, np.zeros((rows, cols), dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def entries(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.data.ravel())

    def __eq__(self, other):
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.spec, self.data.shape, self.entries))

    def __repr__(self):
        return f"FieldMatrix({self.spec}, {self.data.tolist()})"


def vec_mat_mul(x, A: FieldMatrix) -> np.ndarray:
    """Row vector (or stack of row vectors) times ``A`` over GF(p)."""
    x = np.asarray(x, dtype=np.int64)
    if x.shape[-1] != A.rows:
        raise DimensionError(f"vector length {x.shape[-1]} != matrix rows {A.rows}")
    return (x @ A.data) % A.spec.p


class AffineSolution(NamedTuple):
    """Solution set ``particular + span(kernel)`` of ``x A = y``.

    ``particular`` is ``None`` when the system is inconsistent; ``kernel``
    has one basis vector of the left kernel per row.
    """

    particular: np.ndarray | None
    kernel: np.ndarray
    rank: int


def _rref(M: np.ndarray, p: int, ncols: int):
    """Reduce the first ``ncols`` columns of ``M`` (in place) to RREF.

    Pivot is the first nonzero entry at or below the current row.
    """
    rows = M.shape[0]
    pivots = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        M[r] = (M[r] * pow(int(M[r, c]), p - 2, p)) % p
        for rr in range(rows):
            if rr != r and M[rr, c]:
                M[rr] = (M[rr] - M[rr, c] * M[r]) % p
        pivots.append(c)
        r += 1
    return pivots


def solve_affine_system(A: FieldMatrix, y) -> AffineSolution:
    """All ``x`` with ``x A = y``, as a particular solution plus kernel basis."""
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (A.cols,):
        raise DimensionError(f"right-hand side shape {y.shape} != ({A.cols},)")
    p, n = A.spec.p, A.rows
    # x A = y  <=>  A^T x^T = y^T
    aug = np.concatenate([A.data.T, y.reshape(-1, 1)], axis=1) % p
    pivots = _rref(aug, p, n)
    rank = len(pivots)
    free = [c for c in range(n) if c not in pivots]

    kernel = np.zeros((len(free), n), dtype=np.int64)
    for k, f in enumerate(free):
        kernel[k, f] = 1
        for r, c in enumerate(pivots):
            kernel[k, c] = (-aug[r, f]) % p

    if np.any(aug[rank:, n] != 0):
        return AffineSolution(None, kernel, rank)
    particular = np.zeros(n, dtype=np.int64)
    for r, c in enumerate(pivots):
        particular[c] = aug[r, n]
    return AffineSolution(particular, kernel, rank)


def rank(A: FieldMatrix) -> int:
    return solve_affine_system(A, np.zeros(A.cols, dtype=np.int64)).rank


def span(kernel: np.ndarray, p: int) -> np.ndarray:
    """Every linear combination of the rows of ``kernel`` (p**d rows)."""
    d, n = kernel.shape
    if d == 0:
        return np.zeros((1, n), dtype=np.int64)
    coeffs = np.array(list(itertools.product(range(p), repeat=d)), dtype=np.int64)
    return (coeffs @ kernel) % p


def coset(solution: AffineSolution, p: int) -> np.ndarray:
    """Enumerate the full solution set; empty (0, n) array if inconsistent."""
    n = solution.kernel.shape[1]
    if solution.particular is None:
        return np.zeros((0, n), dtype=np.int64)
    return (solution.particular + span(solution.kernel, p)) % p
