"""End-to-end system: one-time pads at two nodes, affine compression, joint sink decoding."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from .affine_coding import (
    AffineCode,
    CodePair,
    DecodeResult,
    decode_table,
    encode_affine,
    encode_linear,
    min_entropy_decode,
)
from .exceptions import ContractViolation, DimensionError
from .finite_field import FieldSpec
from .prob_core import STREAM_TRIAL, JointPmf, SequencePair, sample_iid, stream

EXACT_PAIR_LIMIT = 2**16


@dataclass(frozen=True)
class SystemInstance:
    source_pmf: JointPmf
    key_pmf: JointPmf
    codes: CodePair

    def __post_init__(self):
        if self.source_pmf.dims != self.key_pmf.dims:
            raise DimensionError("source and key pmfs must share the alphabet X1 x X2")
        if tuple(self.source_pmf.dims) != self.codes.dims:
            raise DimensionError(
                f"pmf alphabet {self.source_pmf.dims} does not match code fields {self.codes.dims}"
            )

    @property
    def n(self) -> int:
        return self.codes.n

    @property
    def specs(self) -> tuple[FieldSpec, FieldSpec]:
        return self.codes.code1.spec, self.codes.code2.spec


def encrypt(x, k, spec: FieldSpec) -> np.ndarray:
    x, k = np.asarray(x), np.asarray(k)
    if x.shape != k.shape:
        raise DimensionError("plaintext and key lengths differ")
    return (x + k) % spec.p


def decrypt(c, k, spec: FieldSpec) -> np.ndarray:
    c, k = np.asarray(c), np.asarray(k)
    if c.shape != k.shape:
        raise DimensionError("ciphertext and key lengths differ")
    return (c - k) % spec.p


def compress_ciphertext(code: AffineCode, c) -> np.ndarray:
    return encode_affine(code, c)


def sink_decode(instance: SystemInstance, c_tilde, k: SequencePair) -> DecodeResult:
    """Strip the compressed keys from the public tuple and run the joint decoder."""
    c1, c2 = instance.codes.code1, instance.codes.code2
    x1_tilde = (np.asarray(c_tilde[0]) - encode_affine(c1, k.seq1)) % c1.spec.p
    x2_tilde = (np.asarray(c_tilde[1]) - encode_affine(c2, k.seq2)) % c2.spec.p
    return min_entropy_decode(x1_tilde, x2_tilde, instance.codes)


@dataclass(frozen=True, eq=False)
class TrialRecord:
    x: SequencePair
    k: SequencePair
    c_tilde: tuple[np.ndarray, np.ndarray]
    x_hat: DecodeResult
    success: bool
    decode_status: str

    def public_view(self) -> tuple[np.ndarray, np.ndarray]:
        """What an eavesdropper on the public channels sees."""
        return self.c_tilde


def run_trial(instance: SystemInstance, rng: np.random.Generator) -> TrialRecord:
    """Sources are drawn before keys from the same generator."""
    n = instance.n
    c1, c2 = instance.codes.code1, instance.codes.code2
    x = sample_iid(instance.source_pmf, n, rng)
    k = sample_iid(instance.key_pmf, n, rng)
    c_tilde = (
        compress_ciphertext(c1, encrypt(x.seq1, k.seq1, c1.spec)),
        compress_ciphertext(c2, encrypt(x.seq2, k.seq2, c2.spec)),
    )
    for code, ct, xs, ks in ((c1, c_tilde[0], x.seq1, k.seq1), (c2, c_tilde[1], x.seq2, k.seq2)):
        if not np.array_equal((ct - encode_affine(code, ks)) % code.spec.p, encode_linear(code, xs)):
            raise ContractViolation("compressed ciphertext minus compressed key != compressed source")
    x_hat = sink_decode(instance, c_tilde, k)
    success = x_hat.matches(x.seq1, x.seq2)
    return TrialRecord(x, k, c_tilde, x_hat, success, x_hat.status)


@dataclass(frozen=True)
class BatchResult:
    trials: int
    errors: int
    ci_low: float
    ci_high: float
    records: tuple[TrialRecord, ...] = ()

    @property
    def p_hat(self) -> float:
        return self.errors / self.trials


def wilson_interval(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _run_range(instance: SystemInstance, seed: int, start: int, stop: int, keep: bool):
    errors = 0
    records = []
    for t in range(start, stop):
        rec = run_trial(instance, stream(seed, STREAM_TRIAL, t))
        errors += not rec.success
        if keep:
            records.append(rec)
    return errors, records


def run_batch(
    instance: SystemInstance,
    trials: int,
    seed: int = 0,
    workers: int = 1,
    keep_records: bool = False,
) -> BatchResult:
    """Monte Carlo estimate of the decoding error probability with a Wilson 95% interval.

    Trial ``t`` always uses stream ``(seed, STREAM_TRIAL, t)``, so the result
    does not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers <= 1:
        errors, records = _run_range(instance, seed, 0, trials, keep_records)
    else:
        bounds = np.linspace(0, trials, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _run_range,
                    [instance] * workers,
                    [seed] * workers,
                    bounds[:-1].tolist(),
                    bounds[1:].tolist(),
                    [keep_records] * workers,
                )
            )
        errors = sum(e for e, _ in parts)
        records = [r for _, rs in parts for r in rs]
    lo, hi = wilson_interval(errors, trials)
    return BatchResult(trials, errors, lo, hi, tuple(records))


def exact_error_probability(codes: CodePair, source_pmf: JointPmf) -> float:
    """``p_e`` by decoding every source pair and weighting by ``P^n``."""
    table = decode_table(codes)
    probs = table.pair_probabilities(source_pmf)
    return float(probs[~table.correct].sum())


@dataclass(frozen=True)
class ErrorEstimate:
    p_e: float
    ci_low: float
    ci_high: float
    method: str  # "exact" or "monte_carlo"
    trials: int = 0


def estimate_error_probability(instance: SystemInstance, trials: int, seed: int = 0) -> ErrorEstimate:
    """Exact enumeration when ``p^(2n)`` is at most 2**16 pairs, Monte Carlo otherwise."""
    q1, q2 = instance.codes.dims
    if q1**instance.n * q2**instance.n <= EXACT_PAIR_LIMIT:
        pe = exact_error_probability(instance.codes, instance.source_pmf)
        return ErrorEstimate(pe, pe, pe, "exact")
    res = run_batch(instance, trials, seed)
    return ErrorEstimate(res.p_hat, res.ci_low, res.ci_high, "monte_carlo", trials)


TRIAL_COLUMNS = ("trial", "n", "m1", "m2", "success", "decode_status")


def trials_to_csv(records, instance: SystemInstance) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    m1, m2 = instance.codes.ms
    for t, rec in enumerate(records):
        w.writerow((t, instance.n, m1, m2, int(rec.success), rec.decode_status))
    return buf.getvalue()
