"""Experiment configuration: a YAML mapping validated into :class:`ExperimentConfig`.

Schema (every key optional unless the subcommand needs it)::

    mode: simulate            # simulate | exact | leakage | exponents | region | audit
    field: 2                  # prime p; both alphabets are GF(p)
    n: 6                      # block length
    rates: [0.8, 0.8]         # (R1, R2) in bits/symbol ...
    dims: [4, 4]              # ... or explicit (m1, m2); not both
    source_pmf: [[0.475, 0.025], [0.025, 0.475]]
    key_pmf: {correlated_uniform: 0.3}
    trials: 1000
    seed: 0
    code_samples: 1           # best-of-k code selection
    code_file: winner.txt     # reuse a saved code pair instead of sampling
    workers: 1
    grid: {lo: 0.05, hi: 2.5, resolution: 41}
    audit: {instances: 50, n_values: [2, 3, 4], m: 1}

A pmf is either a p x p grid of numbers or one of the named families
``{dsbs: c}`` (p = 2), ``{correlated_uniform: rho}`` or ``{uniform: true}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .affine_coding import RatePoint, rate_to_dims
from .exceptions import ConfigError, InvalidRateError
from .finite_field import FieldSpec
from .prob_core import JointPmf, correlated_uniform, dsbs, uniform

MODES = ("simulate", "exact", "leakage", "exponents", "region", "audit")
PMF_SUM_TOL = 1e-9
_CONSTRUCTOR = yaml.constructor.SafeConstructor()


@dataclass(frozen=True)
class GridSpec:
    lo: float = 0.05
    hi: float = 2.5
    resolution: int = 41


@dataclass(frozen=True)
class AuditSpec:
    instances: int = 50
    n_values: tuple[int, ...] = (2, 3, 4)
    m: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    field_order: int = 2
    n: int | None = None
    rates: RatePoint | None = None
    dims: tuple[int, int] | None = None
    source_pmf: JointPmf | None = None
    key_pmf: JointPmf | None = None
    trials: int = 1000
    seed: int = 0
    code_samples: int = 1
    code_file: str | None = None
    workers: int = 1
    mode: str | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    audit: AuditSpec = field(default_factory=AuditSpec)

    @property
    def spec(self) -> FieldSpec:
        return FieldSpec(self.field_order)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def code_dims(self) -> tuple[int, int]:
        """(m1, m2) from explicit dims or from the rates via ``rate_to_dims``."""
        if self.n is None:
            raise ConfigError("block length is required", field="n")
        if self.dims is not None:
            return self.dims
        if self.rates is None:
            raise ConfigError("either 'rates' or 'dims' is required", field="rates")
        return rate_to_dims(self.n, self.rates, (self.spec, self.spec))

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"'{name}' is required for this subcommand", field=name)


# --- parsing ---------------------------------------------------------------


def _line(node) -> int:
    return node.start_mark.line + 1


def _scalar(node, name: str):
    if not isinstance(node, yaml.ScalarNode):
        raise ConfigError("expected a scalar value", line=_line(node), field=name)
    return _CONSTRUCTOR.construct_object(node)


def _int(node, name: str, minimum: int | None = None) -> int:
    v = _scalar(node, name)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", line=_line(node), field=name)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}, got {v}", line=_line(node), field=name)
    return v


def _float(node, name: str) -> float:
    v = _scalar(node, name)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", line=_line(node), field=name)
    return float(v)


def _seq(node, name: str, length: int | None = None) -> list:
    if not isinstance(node, yaml.SequenceNode):
        raise ConfigError("expected a list", line=_line(node), field=name)
    if length is not None and len(node.value) != length:
        raise ConfigError(f"expected {length} entries, got {len(node.value)}", line=_line(node), field=name)
    return node.value


def _mapping(node, name: str) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("expected a mapping", line=_line(node), field=name)
    out = {}
    for k, v in node.value:
        key = k.value
        if key in out:
            raise ConfigError("duplicate key", line=_line(k), field=f"{name}.{key}" if name else key)
        out[key] = v
    return out


def _pmf(node, name: str, p: int) -> JointPmf:
    if isinstance(node, yaml.MappingNode):
        items = _mapping(node, name)
        if len(items) != 1:
            raise ConfigError("a named pmf family takes exactly one key", line=_line(node), field=name)
        (family, arg), = items.items()
        if family == "dsbs" and p != 2:
            raise ConfigError("dsbs needs field 2", line=_line(node), field=name)
        try:
            if family == "dsbs":
                return dsbs(_float(arg, f"{name}.dsbs"))
            if family == "correlated_uniform":
                return correlated_uniform(p, _float(arg, f"{name}.correlated_uniform"))
            if family == "uniform":
                return uniform(p, p)
        except ValueError as exc:
            raise ConfigError(str(exc), line=_line(arg), field=name) from None
        raise ConfigError(f"unknown pmf family {family!r}", line=_line(node), field=name)
    rows = _seq(node, name, p)
    grid = np.array([[_float(c, name) for c in _seq(r, name, p)] for r in rows])
    if np.any(grid < 0):
        raise ConfigError("pmf entries must be non-negative", line=_line(node), field=name)
    total = float(grid.sum())
    if abs(total - 1.0) > PMF_SUM_TOL:
        raise ConfigError(f"pmf entries sum to {total:.12g}, expected 1", line=_line(node), field=name)
    return JointPmf(grid / total, label=name)


def _pair_of(node, name: str, conv) -> tuple:
    a, b = _seq(node, name, 2)
    return conv(a, name), conv(b, name)


KNOWN_KEYS = {
    "mode", "field", "n", "rates", "dims", "source_pmf", "key_pmf", "trials", "seed",
    "code_samples", "code_file", "workers", "grid", "audit",
}


def parse_config(text: str) -> ExperimentConfig:
    """Validate a YAML document; every error carries the offending field and line."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None) from None
    if root is None:
        raise ConfigError("empty configuration")
    top = _mapping(root, "")
    for key, node in top.items():
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", line=_line(node), field=key)

    kw: dict = {}
    if "mode" in top:
        mode = _scalar(top["mode"], "mode")
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}", line=_line(top["mode"]), field="mode")
        kw["mode"] = mode
    p = 2
    if "field" in top:
        p = _int(top["field"], "field", 2)
        try:
            FieldSpec(p)
        except ValueError as exc:
            raise ConfigError(str(exc), line=_line(top["field"]), field="field") from None
    kw["field_order"] = p
    if "n" in top:
        kw["n"] = _int(top["n"], "n", 1)
    if "rates" in top and "dims" in top:
        raise ConfigError("give either 'rates' or 'dims', not both", line=_line(top["dims"]), field="dims")
    if "rates" in top:
        r1, r2 = _pair_of(top["rates"], "rates", _float)
        try:
            kw["rates"] = RatePoint(r1, r2)
        except InvalidRateError as exc:
            raise ConfigError(str(exc), line=_line(top["rates"]), field="rates") from None
    if "dims" in top:
        kw["dims"] = _pair_of(top["dims"], "dims", lambda nd, nm: _int(nd, nm, 1))
    for name in ("source_pmf", "key_pmf"):
        if name in top:
            kw[name] = _pmf(top[name], name, p)
    for name, minimum in (("trials", 1), ("seed", 0), ("code_samples", 1), ("workers", 1)):
        if name in top:
            kw[name] = _int(top[name], name, minimum)
    if "code_file" in top:
        kw["code_file"] = str(_scalar(top["code_file"], "code_file"))
    if "grid" in top:
        g = _mapping(top["grid"], "grid")
        unknown = set(g) - {"lo", "hi", "resolution"}
        if unknown:
            k = sorted(unknown)[0]
            raise ConfigError("unknown key", line=_line(g[k]), field=f"grid.{k}")
        spec = GridSpec(
            lo=_float(g["lo"], "grid.lo") if "lo" in g else GridSpec.lo,
            hi=_float(g["hi"], "grid.hi") if "hi" in g else GridSpec.hi,
            resolution=_int(g["resolution"], "grid.resolution", 2) if "resolution" in g else GridSpec.resolution,
        )
        if not 0 < spec.lo < spec.hi:
            raise ConfigError("need 0 < lo < hi", line=_line(top["grid"]), field="grid")
        kw["grid"] = spec
    if "audit" in top:
        a = _mapping(top["audit"], "audit")
        unknown = set(a) - {"instances", "n_values", "m"}
        if unknown:
            k = sorted(unknown)[0]
            raise ConfigError("unknown key", line=_line(a[k]), field=f"audit.{k}")
        kw["audit"] = AuditSpec(
            instances=_int(a["instances"], "audit.instances", 1) if "instances" in a else AuditSpec.instances,
            n_values=tuple(_int(v, "audit.n_values", 1) for v in _seq(a["n_values"], "audit.n_values"))
            if "n_values" in a
            else AuditSpec.n_values,
            m=_int(a["m"], "audit.m", 1) if "m" in a else AuditSpec.m,
        )

    cfg = ExperimentConfig(**kw)
    if cfg.n is not None and (cfg.rates is not None or cfg.dims is not None):
        try:
            m1, m2 = cfg.code_dims()
        except InvalidRateError as exc:
            raise ConfigError(str(exc), line=_line(top["rates"]), field="rates") from None
        if max(m1, m2) > cfg.n:
            raise ConfigError(f"dims ({m1}, {m2}) exceed n={cfg.n}", line=_line(top["dims"]), field="dims")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", field="--config") from None
    return parse_config(text)
