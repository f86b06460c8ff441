import itertools
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest

from secamp.affine_coding import AffineCode, CodePair, identity_code, min_entropy_decode, encode_linear, random_code_pair
from secamp.exceptions import CapacityError
from secamp.finite_field import FieldMatrix, FieldSpec
from secamp.leakage import (
    all_affine_codes,
    chi_square_to_uniform,
    compressed_key_distribution,
    correct_probability_bound,
    delta_statistic,
    divergence_chain,
    encoder_expectation_audit,
    encoder_property_audit,
    error_bound_by_types,
    exact_leakage,
    key_divergence,
    leakage_bound_rhs,
    leakage_report,
    map_adversary_success,
    omega_distribution,
    observation_stats,
    source_uniformity,
    xi_expectation_audit,
    xi_statistic,
)
from secamp.method_of_types import JointType, enumerate_joint_types, type_class_pairs, type_class_size
from secamp.pipeline import SystemInstance, exact_error_probability
from secamp.prob_core import JointPmf, dsbs, entropy, uniform

GF2 = FieldSpec(2)
COPY = JointPmf([[0.5, 0], [0, 0.5]])


def naive_affine(code, v):
    p = code.spec.p
    return tuple((sum(int(v[i]) * int(code.A.data[i, j]) for i in range(code.n)) + int(code.b[j])) % p
                 for j in range(code.m))


def brute_observation(inst):
    """Joint law of (x, c~) by nested loops, then I(C~;X) and the MAP success."""
    n = inst.n
    seqs = list(itertools.product(range(2), repeat=n))
    joint = defaultdict(float)
    for x1, x2, k1, k2 in itertools.product(seqs, repeat=4):
        w = np.prod(inst.source_pmf.probs[list(x1), list(x2)]) * np.prod(inst.key_pmf.probs[list(k1), list(k2)])
        if w == 0:
            continue
        c1 = naive_affine(inst.codes.code1, [(a + b) % 2 for a, b in zip(x1, k1)])
        c2 = naive_affine(inst.codes.code2, [(a + b) % 2 for a, b in zip(x2, k2)])
        joint[(x1, x2), (c1, c2)] += w
    px, pc = defaultdict(float), defaultdict(float)
    best = defaultdict(float)
    for (x, c), w in joint.items():
        px[x] += w
        pc[c] += w
        best[c] = max(best[c], w)
    mi = sum(w * math.log2(w / (px[x] * pc[c])) for (x, c), w in joint.items())
    return mi, sum(best.values())


def random_instance(seed, n):
    rng = np.random.default_rng(seed)
    m1, m2 = (int(v) for v in rng.integers(1, n + 1, size=2))
    codes = random_code_pair(n, m1, m2, (GF2, GF2), rng)
    src = JointPmf(rng.dirichlet(np.ones(4)).reshape(2, 2))
    key = JointPmf(rng.dirichlet(np.ones(4)).reshape(2, 2))
    return SystemInstance(src, key, codes)


def identity_pair(n):
    return CodePair(identity_code(GF2, n), identity_code(GF2, n))


def full_rank_pair(n, m):
    A = FieldMatrix(GF2, np.eye(n, m, dtype=np.int64))
    code = AffineCode(A, np.ones(m, dtype=np.int64))
    return CodePair(code, code)


# --- exact leakage ----------------------------------------------------------


def test_perfect_secrecy_gives_zero_leakage():
    inst = SystemInstance(dsbs(0.1), uniform(2, 2), full_rank_pair(3, 2))
    assert exact_leakage(inst) == pytest.approx(0.0, abs=1e-12)


def test_copy_keys_leak_the_xor_of_independent_sources():
    # C1 + C2 = X1 + X2 when K1 = K2, so one bit of independent uniform sources leaks
    inst = SystemInstance(uniform(2, 2), COPY, identity_pair(1))
    assert exact_leakage(inst) == pytest.approx(1.0, abs=1e-12)
    assert brute_observation(inst)[0] == pytest.approx(1.0, abs=1e-12)


def test_copy_keys_with_copied_sources_leak_nothing():
    # with X1 = X2 as well, C1 = C2 = X1 + K1 is a one-time pad of X1
    inst = SystemInstance(COPY, COPY, identity_pair(1))
    assert exact_leakage(inst) == pytest.approx(0.0, abs=1e-12)
    assert brute_observation(inst)[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_leakage_and_map_success_match_brute_force(seed):
    inst = random_instance(seed, 2)
    stats = observation_stats(inst)
    mi, pc = brute_observation(inst)
    assert stats.mutual_information == pytest.approx(mi, abs=1e-10)
    assert stats.map_success == pytest.approx(pc, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_leakage_within_trivial_bounds(seed):
    inst = random_instance(seed, 3)
    mi = exact_leakage(inst)
    m1, m2 = inst.codes.ms
    assert mi >= -1e-12
    assert mi <= min(inst.n * entropy(inst.source_pmf), m1 + m2) + 1e-9


def test_leakage_state_cap():
    inst = SystemInstance(dsbs(0.1), uniform(2, 2), identity_pair(7))
    with pytest.raises(CapacityError):
        exact_leakage(inst)


# --- key divergence and Omega ------------------------------------------------


def test_key_divergence_examples():
    assert key_divergence(full_rank_pair(3, 2), uniform(2, 2)) == pytest.approx(0.0, abs=1e-12)
    assert key_divergence(identity_pair(1), COPY) == pytest.approx(1.0, abs=1e-12)


def test_compressed_key_distribution_sums_to_one():
    inst = random_instance(4, 4)
    dist = compressed_key_distribution(inst.codes, inst.key_pmf)
    assert dist.sum() == pytest.approx(1.0, abs=1e-12)


def test_omega_identity_codes():
    t = JointType(3, [[1, 1], [0, 1]])
    omega = omega_distribution(t, identity_pair(3))
    size = type_class_size(t)
    assert sorted(set(omega.tolist())) == [0.0, 1 / size]
    assert np.count_nonzero(omega) == size


def test_omega_two_member_class():
    A1 = AffineCode(FieldMatrix.from_rows(GF2, [[1], [0]]), [0])
    A2 = AffineCode(FieldMatrix.from_rows(GF2, [[1], [1]]), [1])
    t = JointType(2, [[1, 0], [0, 1]])
    # members ((0,1),(0,1)) -> (0, 0) and ((1,0),(1,0)) -> (1, 0)
    assert omega_distribution(t, CodePair(A1, A2)).tolist() == [0.5, 0.0, 0.5, 0.0]


def test_omega_sums_to_one():
    for seed in range(5):
        codes = random_instance(seed, 4).codes
        for t in enumerate_joint_types(4, (2, 2))[::5]:
            assert omega_distribution(t, codes).sum() == pytest.approx(1.0)


def test_delta_examples():
    assert chi_square_to_uniform(np.full(4, 0.25)) == pytest.approx(0.0)
    assert chi_square_to_uniform(np.array([1.0, 0, 0, 0])) == pytest.approx(3.0)
    zero = AffineCode(FieldMatrix.zeros(GF2, 2, 1), [0])
    t = JointType(2, [[1, 0], [0, 1]])
    assert delta_statistic(t, CodePair(zero, zero)) == pytest.approx(3.0)
    assert delta_statistic(t, CodePair(zero, zero), starred=True) == 1.0


# --- Xi and the error bound -------------------------------------------------------


def test_xi_identity_is_zero():
    for t in enumerate_joint_types(3, (2, 2)):
        assert xi_statistic(t, identity_pair(3)) == 0.0


def test_xi_zero_matrices_pigeonhole():
    zero = AffineCode(FieldMatrix.zeros(GF2, 4, 1), [0])
    codes = CodePair(zero, zero)
    for t in enumerate_joint_types(4, (2, 2)):
        assert xi_statistic(t, codes) >= 1 - 1 / type_class_size(t) - 1e-12


def test_xi_matches_pointwise_decoding():
    codes = random_code_pair(4, 2, 2, (GF2, GF2), np.random.default_rng(21))
    t = JointType(4, [[2, 0], [0, 2]])
    x1s, x2s = type_class_pairs(t)
    wrong = 0
    for x1, x2 in zip(x1s, x2s):
        res = min_entropy_decode(encode_linear(codes.code1, x1), encode_linear(codes.code2, x2), codes)
        wrong += not res.matches(x1, x2)
    assert xi_statistic(t, codes) == pytest.approx(wrong / len(x1s))


def test_error_bound_identity():
    assert error_bound_by_types(identity_pair(4), dsbs(0.1)) == (0.0, 0.0)


def test_error_bound_uniform_source():
    codes = random_code_pair(4, 2, 3, (GF2, GF2), np.random.default_rng(5))
    exact, bound = error_bound_by_types(codes, uniform(2, 2))
    assert exact == pytest.approx(exact_error_probability(codes, uniform(2, 2)))
    assert exact <= bound + 1e-9


@pytest.mark.parametrize("seed", range(100))
def test_error_bound_holds(seed):
    inst = random_instance(1000 + seed, 4)
    exact, bound = error_bound_by_types(inst.codes, inst.source_pmf)
    assert exact == pytest.approx(exact_error_probability(inst.codes, inst.source_pmf), abs=1e-15)
    assert exact <= bound + 1e-9


# --- divergence chain ------------------------------------------------------------


def test_chain_perfect_secrecy():
    chain = divergence_chain(full_rank_pair(3, 2), uniform(2, 2))
    assert chain.key_divergence == pytest.approx(0.0, abs=1e-12)
    assert leakage_bound_rhs(full_rank_pair(3, 2), uniform(2, 2)) >= 0


def test_chain_copy_keys_identity_codes():
    inst = SystemInstance(uniform(2, 2), COPY, identity_pair(2))
    rep = leakage_report(inst)
    assert rep.key_divergence == pytest.approx(2.0)
    assert rep.chain_holds()
    assert rep.bound_rhs >= rep.type_bound >= rep.typewise >= rep.key_divergence - 1e-12


@pytest.mark.parametrize("seed", range(25))
def test_chain_on_random_instances(seed):
    inst = random_instance(seed, 2 + seed % 3)
    rep = leakage_report(inst)
    rep.check()
    assert rep.bound_rhs >= 0


# --- adversary ---------------------------------------------------------------


def test_source_uniformity_examples():
    assert source_uniformity(uniform(2, 2), 3) == pytest.approx(1 / 64)
    assert source_uniformity(JointPmf([[1, 0], [0, 0]]), 5) == 1.0
    assert source_uniformity(dsbs(0.1), 4) == pytest.approx(0.04100625)


def test_map_success_under_perfect_secrecy_equals_prior_mode():
    for src in (uniform(2, 2), dsbs(0.1)):
        inst = SystemInstance(src, uniform(2, 2), full_rank_pair(3, 3))
        assert map_adversary_success(inst) == pytest.approx(src.p_max**3, abs=1e-15)


def test_map_success_copy_keys():
    inst = SystemInstance(uniform(2, 2), COPY, identity_pair(2))
    pc = map_adversary_success(inst)
    mi = exact_leakage(inst)
    assert pc == pytest.approx(brute_observation(inst)[1])
    assert uniform(2, 2).p_max ** 2 <= pc <= correct_probability_bound(uniform(2, 2), 2, mi)


@pytest.mark.parametrize("seed", range(10))
def test_map_success_is_sandwiched(seed):
    inst = random_instance(300 + seed, 3)
    stats = observation_stats(inst)
    prior = source_uniformity(inst.source_pmf, 3)
    assert prior - 1e-15 <= stats.map_success
    assert stats.map_success <= correct_probability_bound(inst.source_pmf, 3, stats.mutual_information) + 1e-9


def test_nu_must_be_positive():
    with pytest.raises(ValueError):
        correct_probability_bound(dsbs(0.1), 2, 0.1, nu=0)


# --- ensemble audits --------------------------------------------------------


@pytest.mark.parametrize("p", [2, 3])
def test_encoder_properties(p):
    audit = encoder_property_audit(2, 1, FieldSpec(p))
    assert audit.passed
    assert audit.collision == {Fraction(1, p)}


def test_encoder_properties_larger_m():
    assert encoder_property_audit(3, 2, GF2).passed


@pytest.mark.parametrize("t", enumerate_joint_types(2, (2, 2)), ids=lambda t: str(t.key()))
def test_omega_moments_over_full_ensemble(t):
    audit = encoder_expectation_audit(2, 1, 1, (GF2, GF2), t)
    assert all(m == Fraction(1, 4) for m in audit.means)
    assert all(v >= 0 for v in audit.variances)
    assert audit.passed


def test_omega_moments_match_direct_average():
    t = JointType(2, [[1, 0], [0, 1]])
    audit = encoder_expectation_audit(2, 1, 1, (GF2, GF2), t)
    total = np.zeros(4)
    sq = np.zeros(4)
    count = 0
    for c1 in all_affine_codes(2, 1, GF2):
        for c2 in all_affine_codes(2, 1, GF2):
            om = omega_distribution(t, CodePair(c1, c2))
            total += om
            sq += om**2
            count += 1
    assert np.allclose([float(m) for m in audit.means], total / count)
    assert np.allclose([float(v) for v in audit.variances], sq / count - (total / count) ** 2)


def test_omega_moments_n3():
    for t in enumerate_joint_types(3, (2, 2))[::4]:
        assert encoder_expectation_audit(3, 2, 1, (GF2, GF2), t).passed


@pytest.mark.parametrize("n,m", [(2, 1), (3, 2)])
def test_xi_expectation_bound(n, m):
    assert all(a.passed for a in xi_expectation_audit(n, m, m, (GF2, GF2)))
