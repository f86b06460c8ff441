import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from secamp.affine_coding import (
    EMPTY,
    TIE,
    UNIQUE,
    AffineCode,
    CodePair,
    RatePoint,
    affine_structure_check,
    decode_table,
    encode_affine,
    encode_linear,
    identity_code,
    min_entropy_decode,
    random_affine,
    random_code_pair,
    rate_to_dims,
)
from secamp.exceptions import CapacityError, DimensionError, InvalidRateError
from secamp.finite_field import FieldMatrix, FieldSpec
from secamp.prob_core import entropy, stream

from conftest import PRIMES

GF2, GF3 = FieldSpec(2), FieldSpec(3)


def naive_encode(code, k):
    p, n, m = code.spec.p, code.n, code.m
    return [(sum(int(k[i]) * int(code.A.data[i, j]) for i in range(n)) + int(code.b[j])) % p for j in range(m)]


def oracle_decode(y1, y2, codes):
    """Scan every source pair; keep preimages; smallest type entropy, then lexicographic."""
    n = codes.n
    p1, p2 = codes.dims
    best = None
    for x1 in itertools.product(range(p1), repeat=n):
        if list(encode_linear(codes.code1, x1)) != list(y1):
            continue
        for x2 in itertools.product(range(p2), repeat=n):
            if list(encode_linear(codes.code2, x2)) != list(y2):
                continue
            counts = Counter(zip(x1, x2))
            h = round(entropy(np.array(list(counts.values())) / n), 9)
            key = (h, x1, x2)
            if best is None or key < best:
                best = key
    return None if best is None else (best[1], best[2])


def test_rate_to_dims_examples():
    assert rate_to_dims(10, RatePoint(0.5, 0.5), (GF2, GF2)) == (5, 5)
    assert rate_to_dims(10, RatePoint(1.0, 1.0), (GF2, GF2)) == (10, 10)
    assert rate_to_dims(7, RatePoint(0.6, 0.6), (GF3, GF3)) == (2, 2)


def test_rate_to_dims_rejects_zero_width():
    with pytest.raises(InvalidRateError):
        rate_to_dims(4, RatePoint(0.1, 0.5), (GF2, GF2))
    with pytest.raises(InvalidRateError):
        RatePoint(0.0, 1.0)


@given(st.integers(1, 60), st.floats(0.01, 1.0), st.sampled_from(PRIMES))
def test_rate_to_dims_brackets_the_rate(n, R, p):
    spec = FieldSpec(p)
    try:
        m, _ = rate_to_dims(n, RatePoint(R, R), (spec, spec))
    except InvalidRateError:
        assert n * R / math.log2(p) < 1 + 1e-9
        return
    achieved = m / n * math.log2(p)
    assert achieved <= R + 1e-9
    assert achieved >= R - math.log2(p) / n - 1e-9


def test_code_validation():
    with pytest.raises(DimensionError):
        AffineCode(FieldMatrix.zeros(GF2, 2, 3), [0, 0, 0])
    with pytest.raises(DimensionError):
        AffineCode(FieldMatrix.zeros(GF2, 3, 2), [0])
    with pytest.raises(DimensionError):
        CodePair(identity_code(GF2, 3), identity_code(GF2, 4))


def test_random_affine_is_deterministic_under_seed():
    a = random_affine(6, 3, GF3, stream(5, 2, 0))
    b = random_affine(6, 3, GF3, stream(5, 2, 0))
    assert a == b
    assert a != random_affine(6, 3, GF3, stream(5, 2, 1))


def test_random_affine_outcomes_are_uniform():
    rng = np.random.default_rng(2024)
    counts = Counter(random_affine(2, 1, GF2, rng).to_text() for _ in range(100_000))
    assert len(counts) == 8
    for c in counts.values():
        assert abs(c / 100_000 - 1 / 8) < 0.01


def test_random_affine_output_is_uniform_at_a_fixed_input():
    rng = np.random.default_rng(77)
    s, target = np.array([1, 0, 2, 1]), np.array([2, 0])
    draws = 20_000
    hits = sum(np.array_equal(encode_affine(random_affine(4, 2, GF3, rng), s), target) for _ in range(draws))
    prob = 1 / 9
    sigma = math.sqrt(prob * (1 - prob) / draws)
    assert abs(hits / draws - prob) <= 3 * sigma


def test_encoding_examples():
    rng = np.random.default_rng(1)
    code = random_affine(5, 3, GF3, rng)
    zero_b = code.with_offset([0, 0, 0])
    k = rng.integers(0, 3, size=5)
    assert np.array_equal(encode_affine(zero_b, k), encode_linear(code, k))
    assert np.array_equal(encode_affine(code, np.zeros(5, dtype=int)), code.b)
    for _ in range(20):
        k = rng.integers(0, 3, size=5)
        assert encode_affine(code, k).tolist() == naive_encode(code, k)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_affine_structure_identity(p):
    spec = FieldSpec(p)
    rng = np.random.default_rng(p)
    for _ in range(300):
        n = int(rng.integers(1, 9))
        code = random_affine(n, int(rng.integers(1, n + 1)), spec, rng)
        x, k = rng.integers(0, p, size=(2, n))
        assert affine_structure_check(code, x, k)
    code = random_affine(4, 2, spec, rng)
    k = rng.integers(0, p, size=4)
    assert affine_structure_check(code, np.zeros(4, dtype=int), k)


def test_text_round_trip():
    rng = np.random.default_rng(3)
    pair = random_code_pair(5, 3, 2, (GF3, GF3), rng)
    assert CodePair.from_text(pair.to_text()) == pair
    assert CodePair.from_text("# saved winner\n" + pair.to_text()) == pair
    assert AffineCode.from_text("2 3 2 101101 01").A.data.tolist() == [[1, 0], [1, 1], [0, 1]]


def test_identity_codes_always_decode():
    codes = CodePair(identity_code(GF2, 4), identity_code(GF2, 4))
    for x1, x2 in itertools.product(itertools.product(range(2), repeat=4), repeat=2):
        res = min_entropy_decode(x1, x2, codes)
        assert res.status == UNIQUE and res.matches(x1, x2)


def test_zero_sequence_pair_is_recovered():
    rng = np.random.default_rng(9)
    for _ in range(20):
        codes = random_code_pair(5, 2, 3, (GF2, GF2), rng)
        res = min_entropy_decode([0, 0], [0, 0, 0], codes)
        assert res.matches([0] * 5, [0] * 5)


def test_empty_preimage():
    A = FieldMatrix.from_rows(GF2, [[1, 0], [1, 0]])
    codes = CodePair(AffineCode(A, [0, 0]), identity_code(GF2, 2))
    res = min_entropy_decode([0, 1], [0, 0], codes)
    assert res.status == EMPTY and res.x1 is None and not res.matches([0, 0], [0, 0])


def test_ties_resolve_lexicographically():
    zero = AffineCode(FieldMatrix.zeros(GF2, 2, 1), [0])
    codes = CodePair(zero, zero)
    res = min_entropy_decode([0], [0], codes)
    # entropy-0 pairs: all four constant-cell pairs; the smallest is (00, 00)
    assert res.status == TIE
    assert res.x1.tolist() == [0, 0] and res.x2.tolist() == [0, 0]


def test_decoder_cap():
    zero = AffineCode(FieldMatrix.zeros(GF2, 8, 1), [0])
    with pytest.raises(CapacityError):
        min_entropy_decode([0], [0], CodePair(zero, zero), cap=1000)


@pytest.mark.parametrize("seed", range(4))
def test_decoder_matches_brute_force_oracle(seed):
    rng = np.random.default_rng(seed)
    codes = random_code_pair(4, 3, 3, (GF2, GF2), rng)
    for x1, x2 in itertools.product(itertools.product(range(2), repeat=4), repeat=2):
        y1, y2 = encode_linear(codes.code1, x1), encode_linear(codes.code2, x2)
        res = min_entropy_decode(y1, y2, codes)
        want = oracle_decode(y1, y2, codes)
        assert (tuple(res.x1), tuple(res.x2)) == want


def test_decoder_matches_oracle_over_gf3():
    rng = np.random.default_rng(11)
    codes = random_code_pair(3, 2, 1, (GF3, GF3), rng)
    for x1, x2 in itertools.product(itertools.product(range(3), repeat=3), repeat=2):
        y1, y2 = encode_linear(codes.code1, x1), encode_linear(codes.code2, x2)
        res = min_entropy_decode(y1, y2, codes)
        assert (tuple(res.x1), tuple(res.x2)) == oracle_decode(y1, y2, codes)


@pytest.mark.parametrize("seed", range(3))
def test_decode_table_agrees_with_pointwise_decoder(seed):
    rng = np.random.default_rng(100 + seed)
    codes = random_code_pair(5, 3, 2, (GF2, GF2), rng)
    table = decode_table(codes)
    X = GF2.all_vectors(5)
    for idx in range(0, 1024, 7):
        x1, x2 = X[idx // 32], X[idx % 32]
        res = min_entropy_decode(encode_linear(codes.code1, x1), encode_linear(codes.code2, x2), codes)
        assert res.matches(x1, x2) == bool(table.correct[idx])
