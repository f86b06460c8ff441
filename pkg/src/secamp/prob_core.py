"""Joint pmfs on product alphabets, Shannon quantities (bits) and i.i.d. sampling.

Random streams
--------------
Every random draw goes through :func:`stream`, which builds a Philox
(counter-based) generator from ``SeedSequence(master_seed, spawn_key=key)``.
The key is a tuple of non-negative integers naming the consumer, e.g.
``(STREAM_TRIAL, t)`` for Monte Carlo trial ``t`` or ``(STREAM_CODE, j)`` for
the ``j``-th sampled code.  Distinct keys give statistically independent
streams, so work can be reordered or split across processes without changing
any result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError
from .finite_field import FieldSpec

STREAM_TRIAL = 1
STREAM_CODE = 2
STREAM_INSTANCE = 3

PMF_TOL = 1e-12


def stream(master_seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Probability grid over X1 x X2 (rows index X1, columns index X2)."""

    probs: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise DimensionError(f"pmf grid must be 1-D or 2-D, got shape {arr.shape}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("pmf entries must be finite and non-negative")
        if abs(arr.sum() - 1.0) > PMF_TOL:
            raise ValueError(f"pmf sums to {arr.sum():.15g}, not 1")
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def dims(self) -> tuple[int, int]:
        return self.probs.shape

    def marginal(self, axis: int) -> "JointPmf":
        """Distribution of X1 (``axis=0``) or X2 (``axis=1``) as a column pmf."""
        m = self.probs.sum(axis=1 - axis)
        return JointPmf(m / m.sum(), label=f"{self.label}[X{axis + 1}]")

    def flat(self) -> np.ndarray:
        return self.probs.ravel()

    @property
    def p_max(self) -> float:
        return float(self.probs.max())

    def __eq__(self, other):
        if not isinstance(other, JointPmf):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return f"JointPmf({self.probs.tolist()}, label={self.label!r})"


def dsbs(crossover: float) -> JointPmf:
    """Doubly symmetric binary source: uniform bits that differ w.p. ``crossover``."""
    c = float(crossover)
    return JointPmf([[(1 - c) / 2, c / 2], [c / 2, (1 - c) / 2]], label=f"DSBS({c:g})")


def correlated_uniform(q: int, rho: float) -> JointPmf:
    """Uniform marginals on q symbols; mixes independence (rho=0) with a copy (rho=1)."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    grid = np.full((q, q), (1 - rho) / q**2) + np.eye(q) * rho / q
    return JointPmf(grid, label=f"CorrUniform(q={q}, rho={rho:g})")


def uniform(q1: int, q2: int = 1) -> JointPmf:
    return JointPmf(np.full((q1, q2), 1.0 / (q1 * q2)), label=f"Uniform({q1}x{q2})")


def _as_array(p) -> np.ndarray:
    return p.probs if isinstance(p, JointPmf) else np.asarray(p, dtype=float)


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    a = _as_array(p).ravel()
    a = a[a > 0]
    return float(-(a * np.log2(a)).sum()) + 0.0


def conditional_entropy(p: JointPmf, given: int) -> float:
    """H(other | X_{given+1}); ``given=1`` is H(X1|X2), ``given=0`` is H(X2|X1)."""
    return entropy(p) - entropy(p.marginal(given))


def mutual_information(p: JointPmf) -> float:
    val = entropy(p.marginal(0)) + entropy(p.marginal(1)) - entropy(p)
    return max(val, 0.0)


def kl_divergence(p, q) -> float:
    """D(p||q) in bits; ``math.inf`` when p is not absolutely continuous w.r.t. q."""
    a, b = _as_array(p), _as_array(q)
    if a.shape != b.shape:
        raise DimensionError(f"pmf shapes differ: {a.shape} vs {b.shape}")
    a, b = a.ravel(), b.ravel()
    mask = a > 0
    if np.any(b[mask] == 0):
        return math.inf
    return max(float((a[mask] * np.log2(a[mask] / b[mask])).sum()), 0.0)


@dataclass(frozen=True, eq=False)
class SequencePair:
    seq1: np.ndarray
    seq2: np.ndarray
    spec1: FieldSpec = field(default=FieldSpec(2))
    spec2: FieldSpec = field(default=FieldSpec(2))

    def __post_init__(self):
        s1 = self.spec1.vector(self.seq1).copy()
        s2 = self.spec2.vector(self.seq2).copy()
        if s1.ndim != 1 or s1.shape != s2.shape or s1.size == 0:
            raise DimensionError("sequence pair needs two equal-length 1-D sequences, n >= 1")
        s1.flags.writeable = False
        s2.flags.writeable = False
        object.__setattr__(self, "seq1", s1)
        object.__setattr__(self, "seq2", s2)

    @property
    def n(self) -> int:
        return self.seq1.size

    def __eq__(self, other):
        if not isinstance(other, SequencePair):
            return NotImplemented
        return np.array_equal(self.seq1, other.seq1) and np.array_equal(self.seq2, other.seq2)

    def __repr__(self):
        return f"SequencePair({self.seq1.tolist()}, {self.seq2.tolist()})"


def specs_for(p: JointPmf) -> tuple[FieldSpec, FieldSpec]:
    q1, q2 = p.dims
    return FieldSpec(q1), FieldSpec(q2)


def sample_iid(p: JointPmf, n: int, rng: np.random.Generator) -> SequencePair:
    """``n`` i.i.d. symbol pairs from ``p``; deterministic given the generator state."""
    if n < 1:
        raise ValueError("n must be >= 1")
    q1, q2 = p.dims
    cells = rng.choice(q1 * q2, size=n, p=p.flat())
    s1, s2 = specs_for(p)
    return SequencePair(cells // q2, cells % q2, s1, s2)


def sequence_probability(p: JointPmf, s: SequencePair) -> float:
    return float(np.prod(p.probs[s.seq1, s.seq2]))
