"""Exact secrecy and reliability analysis by enumeration.

Outputs of a code pair are indexed jointly as ``idx(y1) * M2 + idx(y2)`` with
``M_i = p_i ** m_i``.  Key pairs and source pairs use the flat indexing of
:class:`secamp.affine_coding.DecodeTable`.  Every quantity is in bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .affine_coding import (
    AffineCode,
    CodePair,
    DecodeTable,
    _cell_counts,
    decode_table,
    encode_affine,
    encode_linear,
)
from .exceptions import CapacityError, ContractViolation, DimensionError
from .finite_field import FieldMatrix, FieldSpec
from .method_of_types import (
    JointType,
    conditional_entropy_of_type,
    entropy_of_type,
    enumerate_joint_types,
    type_class_pairs,
    type_class_size,
    type_codes,
)
from .pipeline import SystemInstance
from .prob_core import JointPmf, entropy, kl_divergence

LOG2E = math.log2(math.e)
DEFAULT_STATE_CAP = 2**24
DEFAULT_CLASS_CAP = 2**20
DEFAULT_ENSEMBLE_CAP = 2**20
SLACK = 1e-9


def _output_sizes(codes: CodePair) -> tuple[int, int]:
    return codes.code1.spec.p ** codes.code1.m, codes.code2.spec.p ** codes.code2.m


def _check_pairs(codes: CodePair, cap: int):
    q1, q2 = codes.dims
    N = q1**codes.n * q2**codes.n
    if N > cap:
        raise CapacityError(f"{N} sequence pairs exceed the cap of {cap}")
    return N


# --- key-side distributions ----------------------------------------------


@dataclass(frozen=True, eq=False)
class KeyEnumeration:
    """Every key pair with its probability, joint type code and compressed output."""

    prob: np.ndarray
    type_code: np.ndarray
    output: np.ndarray


def enumerate_keys(codes: CodePair, key_pmf: JointPmf, cap: int = DEFAULT_STATE_CAP) -> KeyEnumeration:
    _check_pairs(codes, cap)
    c1, c2 = codes.code1, codes.code2
    n = codes.n
    K1, K2 = c1.spec.all_vectors(n), c2.spec.all_vectors(n)
    counts = _cell_counts(K1, K2, codes.dims)
    prob = np.ones(counts.shape[0])
    for j, pj in enumerate(key_pmf.flat()):
        prob *= pj ** counts[:, j].astype(float)
    _, M2 = _output_sizes(codes)
    y1 = c1.spec.index_of(encode_affine(c1, K1))
    y2 = c2.spec.index_of(encode_affine(c2, K2))
    output = (y1[:, None] * M2 + y2[None, :]).ravel()
    return KeyEnumeration(prob, type_codes(counts, n), output)


def compressed_key_distribution(codes: CodePair, key_pmf: JointPmf) -> np.ndarray:
    M1, M2 = _output_sizes(codes)
    keys = enumerate_keys(codes, key_pmf)
    return np.bincount(keys.output, weights=keys.prob, minlength=M1 * M2)


def key_divergence(codes: CodePair, key_pmf: JointPmf) -> float:
    """D(P_{K~1 K~2} || uniform on X1^m1 x X2^m2)."""
    M1, M2 = _output_sizes(codes)
    return kl_divergence(compressed_key_distribution(codes, key_pmf), np.full(M1 * M2, 1.0 / (M1 * M2)))


# --- Omega / Delta statistics --------------------------------------------


def omega_distribution(t: JointType, codes: CodePair, cap: int = DEFAULT_CLASS_CAP) -> np.ndarray:
    """Distribution of the compressed key pair when keys are uniform on the type class."""
    if t.dims != codes.dims or t.n != codes.n:
        raise DimensionError("type does not match the code pair")
    size = type_class_size(t)
    if size > cap:
        raise CapacityError(f"type class of size {size} exceeds the cap of {cap}")
    M1, M2 = _output_sizes(codes)
    k1, k2 = type_class_pairs(t)
    y1 = codes.code1.spec.index_of(encode_affine(codes.code1, k1))
    y2 = codes.code2.spec.index_of(encode_affine(codes.code2, k2))
    hist = np.bincount(y1 * M2 + y2, minlength=M1 * M2)
    return hist / size


def chi_square_to_uniform(omega: np.ndarray) -> float:
    M = omega.size
    return float(M * ((omega - 1.0 / M) ** 2).sum())


def delta_statistic(t: JointType, codes: CodePair, starred: bool = False) -> float:
    d = chi_square_to_uniform(omega_distribution(t, codes))
    return min(1.0, d) if starred else d


def _omega_by_type(codes: CodePair, keys: KeyEnumeration, n: int):
    """Omega rows for every type present among the key pairs."""
    M1, M2 = _output_sizes(codes)
    M = M1 * M2
    uniq, inv = np.unique(keys.type_code, return_inverse=True)
    hist = np.bincount(inv * M + keys.output, minlength=uniq.size * M).reshape(uniq.size, M)
    sizes = hist.sum(axis=1, keepdims=True)
    return uniq, hist / sizes


def _types_by_code(n: int, dims) -> dict[int, JointType]:
    return {t.code: t for t in enumerate_joint_types(n, dims)}


# --- source-side statistics ----------------------------------------------


def xi_statistic(t: JointType, codes: CodePair, table: DecodeTable | None = None) -> float:
    """Fraction of the type class that the minimum-entropy decoder gets wrong."""
    if t.dims != codes.dims or t.n != codes.n:
        raise DimensionError("type does not match the code pair")
    table = table if table is not None else decode_table(codes)
    x1, x2 = type_class_pairs(t)
    N2 = codes.code2.spec.p ** codes.n
    idx = codes.code1.spec.index_of(x1) * N2 + codes.code2.spec.index_of(x2)
    return float(1.0 - table.correct[idx].mean())


def error_bound_by_types(codes: CodePair, source_pmf: JointPmf) -> tuple[float, float]:
    """Exact p_e and the type-class bound  sum_T Xi_T 2^{-n D(T||P)}."""
    table = decode_table(codes)
    n = codes.n
    probs = table.pair_probabilities(source_pmf)
    exact = float(probs[~table.correct].sum())
    uniq, inv = np.unique(table.type_code, return_inverse=True)
    wrong = np.bincount(inv, weights=(~table.correct).astype(float), minlength=uniq.size)
    size = np.bincount(inv, minlength=uniq.size)
    types = _types_by_code(n, codes.dims)
    bound = 0.0
    for code, w, s in zip(uniq, wrong, size):
        if w == 0:
            continue
        d = kl_divergence(types[int(code)].counts / n, source_pmf)
        if not math.isinf(d):
            bound += (w / s) * 2.0 ** (-n * d)
    return exact, float(bound)


# --- leakage and adversary -----------------------------------------------


@dataclass(frozen=True)
class ObservationStats:
    mutual_information: float
    map_success: float


def observation_stats(instance: SystemInstance, cap: int = DEFAULT_STATE_CAP) -> ObservationStats:
    """I(C~; X) and the Bayes-optimal guessing probability, by enumerating all (x, k).

    The public tuple is computed as phi_aff(x + k) side by side, without using
    the affine decomposition.
    """
    codes = instance.codes
    n = instance.n
    c1, c2 = codes.code1, codes.code2
    N1, N2 = c1.spec.p**n, c2.spec.p**n
    states = (N1 * N2) ** 2
    if states > cap:
        raise CapacityError(f"{states} (source, key) states exceed the cap of {cap}")
    M1, M2 = _output_sizes(codes)
    M = M1 * M2

    V1, V2 = c1.spec.all_vectors(n), c2.spec.all_vectors(n)
    # side tables: out_i[x, k] = idx(phi_aff_i(x + k))
    out1 = c1.spec.index_of(encode_affine(c1, (V1[:, None, :] + V1[None, :, :]) % c1.spec.p))
    out2 = c2.spec.index_of(encode_affine(c2, (V2[:, None, :] + V2[None, :, :]) % c2.spec.p))

    counts = _cell_counts(V1, V2, codes.dims)

    def pair_probs(pmf):
        pr = np.ones(counts.shape[0])
        for j, pj in enumerate(pmf.flat()):
            pr *= pj ** counts[:, j].astype(float)
        return pr

    px, pk = pair_probs(instance.source_pmf), pair_probs(instance.key_pmf)
    k1 = np.repeat(np.arange(N1), N2)
    k2 = np.tile(np.arange(N2), N1)

    marginal = np.zeros(M)
    best = np.zeros(M)
    cond_entropy = 0.0
    chunk = max(1, 2**20 // (N1 * N2))
    xs = np.nonzero(px > 0)[0]
    for start in range(0, xs.size, chunk):
        rows = xs[start:start + chunk]
        x1, x2 = rows // N2, rows % N2
        obs = out1[x1[:, None], k1[None, :]] * M2 + out2[x2[:, None], k2[None, :]]
        flat = (np.arange(rows.size)[:, None] * M + obs).ravel()
        cond = np.bincount(flat, weights=np.tile(pk, rows.size), minlength=rows.size * M)
        cond = cond.reshape(rows.size, M)
        joint = px[rows, None] * cond
        marginal += joint.sum(axis=0)
        best = np.maximum(best, joint.max(axis=0))
        nz = cond > 0
        cond_entropy -= float((np.broadcast_to(px[rows, None], cond.shape)[nz] * cond[nz] * np.log2(cond[nz])).sum())
    mi = max(entropy(marginal) - cond_entropy, 0.0)
    return ObservationStats(mi, float(best.sum()))


def exact_leakage(instance: SystemInstance) -> float:
    return observation_stats(instance).mutual_information


def map_adversary_success(instance: SystemInstance) -> float:
    return observation_stats(instance).map_success


def source_uniformity(source_pmf: JointPmf, n: int) -> float:
    return source_pmf.p_max**n


def correct_probability_bound(source_pmf: JointPmf, n: int, leakage: float, nu: float = 1.0) -> float:
    """2^nu * P_max^n + leakage / nu."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return 2.0**nu * source_uniformity(source_pmf, n) + leakage / nu


# --- divergence bound chain ----------------------------------------------


@dataclass(frozen=True)
class DivergenceChain:
    """Successive upper bounds on the compressed-key divergence.

    ``typewise``: sum_T P^n(T) D(Omega_T || U)        (convexity of D)
    ``type_bound``: sum_T D(Omega_T || U) 2^{-n D(T||P)}  (type-class probability bound)
    ``bound_rhs``: (log e) log(|X1||X2|) n sum_T min(1, Delta_T) 2^{-n D(T||P)}
    """

    key_divergence: float
    typewise: float
    type_bound: float
    bound_rhs: float


def divergence_chain(codes: CodePair, key_pmf: JointPmf) -> DivergenceChain:
    n = codes.n
    M1, M2 = _output_sizes(codes)
    M = M1 * M2
    uniform = np.full(M, 1.0 / M)
    keys = enumerate_keys(codes, key_pmf)
    p_tilde = np.bincount(keys.output, weights=keys.prob, minlength=M)
    kd = kl_divergence(p_tilde, uniform)

    codes_present, omega = _omega_by_type(codes, keys, n)
    types = _types_by_code(n, codes.dims)
    class_prob = np.bincount(
        np.searchsorted(codes_present, keys.type_code), weights=keys.prob, minlength=codes_present.size
    )
    q1, q2 = codes.dims
    scale = LOG2E * math.log2(q1 * q2) * n
    typewise = type_bound = rhs_sum = 0.0
    for row, code, ptype in zip(omega, codes_present, class_prob):
        d_omega = kl_divergence(row, uniform)
        typewise += ptype * d_omega
        d_type = kl_divergence(types[int(code)].counts / n, key_pmf)
        if math.isinf(d_type):
            continue
        weight = 2.0 ** (-n * d_type)
        type_bound += d_omega * weight
        rhs_sum += min(1.0, chi_square_to_uniform(row)) * weight
    return DivergenceChain(kd, typewise, type_bound, scale * rhs_sum)


def leakage_bound_rhs(codes: CodePair, key_pmf: JointPmf) -> float:
    return divergence_chain(codes, key_pmf).bound_rhs


@dataclass(frozen=True)
class LeakageReport:
    exact_mi: float
    key_divergence: float
    typewise: float
    type_bound: float
    bound_rhs: float
    map_success: float
    map_bound: float
    n: int
    m1: int
    m2: int
    code_id: str

    def chain_holds(self, slack: float = SLACK) -> bool:
        seq = (self.exact_mi, self.key_divergence, self.typewise, self.type_bound, self.bound_rhs)
        return all(a <= b + slack for a, b in zip(seq, seq[1:]))

    def map_bound_holds(self, slack: float = SLACK) -> bool:
        return self.map_success <= self.map_bound + slack

    def check(self, slack: float = SLACK) -> None:
        if not self.chain_holds(slack):
            raise ContractViolation(f"leakage chain violated: {self}")
        if not self.map_bound_holds(slack):
            raise ContractViolation(f"adversary bound violated: {self}")

    def row(self) -> dict:
        return asdict(self)


LEAKAGE_COLUMNS = tuple(LeakageReport.__dataclass_fields__)


def code_id(codes: CodePair) -> str:
    return "|".join((codes.code1.to_text(), codes.code2.to_text()))


def leakage_report(instance: SystemInstance, nu: float = 1.0) -> LeakageReport:
    obs = observation_stats(instance)
    chain = divergence_chain(instance.codes, instance.key_pmf)
    m1, m2 = instance.codes.ms
    return LeakageReport(
        exact_mi=obs.mutual_information,
        key_divergence=chain.key_divergence,
        typewise=chain.typewise,
        type_bound=chain.type_bound,
        bound_rhs=chain.bound_rhs,
        map_success=obs.map_success,
        map_bound=correct_probability_bound(instance.source_pmf, instance.n, obs.mutual_information, nu),
        n=instance.n,
        m1=m1,
        m2=m2,
        code_id=code_id(instance.codes),
    )


# --- random-coding audits --------------------------------------------------


def psi_function(t: JointType, R1: float, R2: float) -> float:
    """Sum of 2^{-n[R - H]^+} over the three Slepian-Wolf constraints of type t."""
    n = t.n
    terms = (
        (R1, conditional_entropy_of_type(t, 1)),
        (R2, conditional_entropy_of_type(t, 0)),
        (R1 + R2, entropy_of_type(t)),
    )
    return sum(2.0 ** (-n * max(R - h, 0.0)) for R, h in terms)


def theta_function(t: JointType, R1: float, R2: float) -> float:
    """Sum of 2^{-n[H - R]} over the marginal and joint key entropies of type t."""
    n = t.n
    pmf = t.as_pmf()
    terms = (
        (entropy(pmf.marginal(0)), R1),
        (entropy(pmf.marginal(1)), R2),
        (entropy(pmf), R1 + R2),
    )
    return sum(2.0 ** (-n * (h - R)) for h, R in terms)


def code_rates(n: int, m1: int, m2: int, specs) -> tuple[float, float]:
    """The rates that make M_i = 2^{n R_i} exactly."""
    return m1 * math.log2(specs[0].p) / n, m2 * math.log2(specs[1].p) / n


def all_linear_maps(n: int, m: int, spec: FieldSpec, cap: int = DEFAULT_ENSEMBLE_CAP):
    total = spec.p ** (n * m)
    if total > cap:
        raise CapacityError(f"{total} matrices exceed the ensemble cap of {cap}")
    for entries in itertools.product(range(spec.p), repeat=n * m):
        yield FieldMatrix(spec, np.array(entries, dtype=np.int64).reshape(n, m))


def all_affine_codes(n: int, m: int, spec: FieldSpec, cap: int = DEFAULT_ENSEMBLE_CAP):
    total = spec.p ** ((n + 1) * m)
    if total > cap:
        raise CapacityError(f"{total} affine codes exceed the ensemble cap of {cap}")
    offsets = spec.all_vectors(m)
    for A in all_linear_maps(n, m, spec, cap):
        for b in offsets:
            yield AffineCode(A, b)


@dataclass(frozen=True)
class EncoderPropertyAudit:
    """Exact ensemble probabilities for the three encoder properties.

    Each entry holds the set of distinct values observed over all admissible
    arguments; a property holds when that set is exactly ``{expected}``.
    """

    collision: frozenset
    single_point: frozenset
    pair_point: frozenset
    expected_collision: Fraction
    expected_single: Fraction
    expected_pair: Fraction

    @property
    def passed(self) -> bool:
        return (
            self.collision == {self.expected_collision}
            and self.single_point == {self.expected_single}
            and self.pair_point == {self.expected_pair}
        )


def encoder_property_audit(n: int, m: int, spec: FieldSpec) -> EncoderPropertyAudit:
    """Enumerate every (A, b) and tabulate the collision and uniformity probabilities."""
    p = spec.p
    codes = list(all_affine_codes(n, m, spec))
    mats = list(all_linear_maps(n, m, spec))
    V = spec.all_vectors(n)
    Y = spec.all_vectors(m)
    lin = np.stack([spec.index_of((V @ A.data) % p) for A in mats])  # (|A|, p^n)
    aff = np.stack([spec.index_of(encode_affine(c, V)) for c in codes])  # (|A||b|, p^n)
    n_lin, n_aff = len(mats), len(codes)

    collision = set()
    for i, j in itertools.combinations(range(V.shape[0]), 2):
        collision.add(Fraction(int(np.count_nonzero(lin[:, i] == lin[:, j])), n_lin))
    single = set()
    for s in range(V.shape[0]):
        hits = np.bincount(aff[:, s], minlength=Y.shape[0])
        single.update(Fraction(int(h), n_aff) for h in hits)
    pair = set()
    for s, t in itertools.permutations(range(V.shape[0]), 2):
        both = aff[:, s] == aff[:, t]
        hits = np.bincount(aff[both, s], minlength=Y.shape[0])
        pair.update(Fraction(int(h), n_aff) for h in hits)
    return EncoderPropertyAudit(
        frozenset(collision),
        frozenset(single),
        frozenset(pair),
        Fraction(1, p**m),
        Fraction(1, p**m),
        Fraction(1, p ** (2 * m)),
    )


@dataclass(frozen=True)
class OmegaMomentAudit:
    """Ensemble mean and variance of Omega_T(y) for one key type."""

    key_type: JointType
    means: tuple  # Fraction per output y
    variances: tuple  # Fraction per output y
    target_mean: Fraction
    variance_bound: float
    mean_delta: Fraction
    delta_bound: float

    @property
    def mean_exact(self) -> bool:
        return all(m == self.target_mean for m in self.means)

    @property
    def variance_ok(self) -> bool:
        return all(float(v) <= self.variance_bound * (1 + 1e-12) for v in self.variances)

    @property
    def delta_ok(self) -> bool:
        return float(self.mean_delta) <= self.delta_bound * (1 + 1e-12)

    @property
    def passed(self) -> bool:
        return self.mean_exact and self.variance_ok and self.delta_ok


def _side_outputs(t_members: np.ndarray, n: int, m: int, spec: FieldSpec) -> np.ndarray:
    return np.stack([spec.index_of(encode_affine(c, t_members)) for c in all_affine_codes(n, m, spec)])


def encoder_expectation_audit(n: int, m1: int, m2: int, specs, key_type: JointType) -> OmegaMomentAudit:
    """Average Omega_T over every (A1, b1, A2, b2), in exact rationals.

    Checks the mean against 1/(M1 M2), the per-output variance against
    (n+1)^{|X1||X2|} Theta_T / (M1 M2)^2, and the mean chi-square statistic
    against (n+1)^{|X1||X2|} Theta_T, with rates chosen so that M_i = 2^{n R_i}.
    """
    s1, s2 = specs
    if key_type.n != n or key_type.dims != (s1.p, s2.p):
        raise DimensionError("key type does not match (n, alphabets)")
    M1, M2 = s1.p**m1, s2.p**m2
    M = M1 * M2
    k1, k2 = type_class_pairs(key_type)
    size = k1.shape[0]
    y1 = _side_outputs(k1, n, m1, s1)  # (C1, |T|)
    y2 = _side_outputs(k2, n, m2, s2)  # (C2, |T|)
    C1, C2 = y1.shape[0], y2.shape[0]
    joint = (y1[:, None, :] * M2 + y2[None, :, :]).reshape(C1 * C2, size)
    rows = np.arange(C1 * C2)[:, None]
    hist = np.bincount((rows * M + joint).ravel(), minlength=C1 * C2 * M).reshape(C1 * C2, M)
    ncodes = C1 * C2

    # Omega = hist / size; sums kept as exact integers
    s = hist.sum(axis=0).astype(object)
    ss = (hist.astype(object) ** 2).sum(axis=0)
    means = tuple(Fraction(int(v), size * ncodes) for v in s)
    variances = tuple(Fraction(int(q), size * size * ncodes) - mu * mu for q, mu in zip(ss, means))
    # Delta = M * sum_y (Omega - 1/M)^2 = M * sum Omega^2 - 1
    total_sq = sum(int(v) for v in ss)
    mean_delta = Fraction(M * total_sq, size * size * ncodes) - 1

    R1, R2 = code_rates(n, m1, m2, specs)
    poly = (n + 1) ** (s1.p * s2.p)
    theta = theta_function(key_type, R1, R2)
    return OmegaMomentAudit(
        key_type=key_type,
        means=means,
        variances=variances,
        target_mean=Fraction(1, M),
        variance_bound=poly * theta / M**2,
        mean_delta=mean_delta,
        delta_bound=poly * theta,
    )


@dataclass(frozen=True)
class XiExpectationAudit:
    source_type: JointType
    mean_xi: Fraction
    bound: float

    @property
    def passed(self) -> bool:
        return float(self.mean_xi) <= self.bound * (1 + 1e-12)


def xi_expectation_audit(n: int, m1: int, m2: int, specs) -> list[XiExpectationAudit]:
    """Average Xi_T over every linear pair (A1, A2) against 4 (n+1)^{|X1||X2|} Psi_T."""
    s1, s2 = specs
    dims = (s1.p, s2.p)
    zero1, zero2 = np.zeros(m1, dtype=np.int64), np.zeros(m2, dtype=np.int64)
    wrong_total = None
    tcode = None
    ncodes = 0
    for A1 in all_linear_maps(n, m1, s1):
        for A2 in all_linear_maps(n, m2, s2):
            table = decode_table(CodePair(AffineCode(A1, zero1), AffineCode(A2, zero2)))
            wrong = (~table.correct).astype(np.int64)
            wrong_total = wrong if wrong_total is None else wrong_total + wrong
            tcode = table.type_code
            ncodes += 1
    R1, R2 = code_rates(n, m1, m2, specs)
    poly = (n + 1) ** (s1.p * s2.p)
    out = []
    for t in enumerate_joint_types(n, dims):
        members = tcode == t.code
        mean = Fraction(int(wrong_total[members].sum()), int(members.sum()) * ncodes)
        out.append(XiExpectationAudit(t, mean, 4 * poly * psi_function(t, R1, R2)))
    return out
