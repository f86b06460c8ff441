"""Secure distributed compression of correlated sources under correlated one-time-pad keys."""

from .affine_coding import AffineCode, CodePair, RatePoint, min_entropy_decode
from .finite_field import FieldMatrix, FieldSpec
from .pipeline import SystemInstance, run_batch
from .prob_core import JointPmf, correlated_uniform, dsbs, uniform

__all__ = [
    "AffineCode",
    "CodePair",
    "FieldMatrix",
    "FieldSpec",
    "JointPmf",
    "RatePoint",
    "SystemInstance",
    "correlated_uniform",
    "dsbs",
    "min_entropy_decode",
    "run_batch",
    "uniform",
]
