"""Error and secrecy exponents, rate regions and finite-length bounds (all in bits).

Both exponent families are computed through a one-dimensional concave dual.

* ``F_i(R) = min_Q [R - H_i(Q)]^+ + D(Q||P)``.  Writing ``[a]^+ = max_{0<=l<=1} l a``
  and swapping min and max (the objective is convex in ``Q``) gives
  ``max_l  l R - E_i(l)`` with a closed-form inner minimum ``E_i`` and an
  explicit tilted minimiser ``Q_l``.
* ``G(R|P) = min_Q [H(Q) - R]^+ + D(Q||P)`` is zero when ``H(P) <= R``.
  Otherwise the minimiser sits on ``H(Q) = R``, where the objective equals the
  cross-entropy ``-sum Q log P`` minus ``R``; minimising that linear function
  over the convex set ``{H(Q) >= R}`` is a convex program whose dual is
  ``max_{s > 0} (R - log sum P^s) / s - R``, attained on the escort family
  ``P^s / sum P^s``.

``certificate_gap`` is primal value minus dual value, so a small gap
certifies global optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .exceptions import DimensionError, InvalidRateError
from .prob_core import JointPmf, conditional_entropy, entropy, kl_divergence
from .affine_coding import RatePoint

LOG2E = math.log2(math.e)
MAX_CELLS = 16
GAP_TOL = 1e-7
ITERATION_CAP = 10_000

CLOSED_FORM, CONVEX_DESCENT, GRID_MULTISTART = "closed_form", "convex_descent", "grid_multistart"


@dataclass(frozen=True)
class ExponentResult:
    value: float
    argmin_pmf: JointPmf
    method: str
    certificate_gap: float
    converged: bool = True


def _check_pmf(p: JointPmf):
    if p.probs.size > MAX_CELLS:
        raise DimensionError(f"exponent solver supports at most {MAX_CELLS} cells, got {p.probs.size}")


def _check_rate(R: float):
    if not R > 0:
        raise InvalidRateError(f"rate must be positive, got {R}")


# --- F family --------------------------------------------------------------


def _h_i(i: int, q: JointPmf) -> float:
    if i == 1:
        return conditional_entropy(q, 1)
    if i == 2:
        return conditional_entropy(q, 0)
    if i == 3:
        return entropy(q)
    raise ValueError(f"index must be 1, 2 or 3, got {i}")


def f_objective(i: int, R: float, p: JointPmf, q) -> float:
    """``[R - H_i(Q)]^+ + D(Q||P)``."""
    q = q if isinstance(q, JointPmf) else JointPmf(np.reshape(q, p.dims))
    return max(R - _h_i(i, q), 0.0) + kl_divergence(q, p)


def _oriented(i: int, grid: np.ndarray) -> np.ndarray:
    """Grid with the conditioned-on variable along columns (``F_2`` transposes)."""
    return grid.T if i == 2 else grid


def _inner_value(i: int, lam: float, P: np.ndarray) -> float:
    """``min_Q D(Q||P) - lam H_i(Q)``, in closed form."""
    a = P ** (1.0 / (1.0 + lam))
    if i == 3:
        return -(1.0 + lam) * math.log2(a.sum())
    cols = _oriented(i, a).sum(axis=0)
    return -math.log2((cols ** (1.0 + lam)).sum())


def _tilted(i: int, lam: float, P: np.ndarray) -> np.ndarray:
    a = P ** (1.0 / (1.0 + lam))
    if i == 3:
        return a / a.sum()
    g = _oriented(i, a)
    cols = g.sum(axis=0)
    safe = np.where(cols > 0, cols, 1.0)
    w = cols ** (1.0 + lam)
    q = (g / safe) * (w / w.sum())
    return _oriented(i, q)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u - css / np.arange(1, v.size + 1) > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def _f_subgradient(i: int, R: float, P: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Subgradient of the F_i objective in bits, on the support of ``P``."""
    safe = np.where(q > 0, q, 1e-300)
    grad = np.log2(safe / P) + LOG2E
    if R > _h_i(i, JointPmf(q)):
        # -H_i(Q) gradient: log Q + log e for H_3; minus the column marginal term for H_1/H_2
        g = np.log2(safe) + LOG2E
        if i != 3:
            oq = _oriented(i, q)
            col = np.log2(np.maximum(oq.sum(axis=0), 1e-300)) + LOG2E
            g = g - _oriented(i, np.broadcast_to(col, oq.shape))
        grad = grad + g
    return grad


def _polish(i: int, R: float, P: np.ndarray, q: np.ndarray, target: float, cap: int):
    """Projected subgradient on the support of ``P``, started from ``q``."""
    support = P > 0
    best_q, best_val = q, f_objective(i, R, JointPmf(P), q)
    x = q[support]
    for t in range(1, cap + 1):
        full = np.zeros_like(P)
        full[support] = x
        g = _f_subgradient(i, R, P, full)[support]
        x = project_to_simplex(x - 0.05 / math.sqrt(t) * g)
        full = np.zeros_like(P)
        full[support] = x
        val = f_objective(i, R, JointPmf(P), full)
        if val < best_val:
            best_q, best_val = full, val
            if best_val - target <= GAP_TOL:
                break
    return best_q, best_val


def exponent_F_i(i: int, R: float, p: JointPmf, iteration_cap: int = ITERATION_CAP) -> ExponentResult:
    """Global minimum of ``[R - H_i(Q)]^+ + D(Q||P)`` with a duality certificate."""
    _check_rate(R)
    _check_pmf(p)
    if i not in (1, 2, 3):
        raise ValueError(f"index must be 1, 2 or 3, got {i}")
    P = p.probs

    def neg_dual(lam):
        return -(lam * R + _inner_value(i, lam, P))

    opt = minimize_scalar(neg_dual, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    candidates = [(float(opt.x), -opt.fun), (0.0, -neg_dual(0.0)), (1.0, -neg_dual(1.0))]
    lam, dual = max(candidates, key=lambda c: c[1])
    dual = max(dual, 0.0)

    best_q, best_val = P, f_objective(i, R, p, P)
    q = _tilted(i, lam, P)
    val = f_objective(i, R, p, q)
    if val < best_val:
        best_q, best_val = q, val
    converged = True
    if best_val - dual > GAP_TOL:
        best_q, best_val = _polish(i, R, P, best_q, dual, iteration_cap)
        converged = best_val - dual <= 1e-4
    return ExponentResult(
        value=max(best_val, 0.0),
        argmin_pmf=JointPmf(best_q / best_q.sum()),
        method=CONVEX_DESCENT,
        certificate_gap=max(best_val - dual, 0.0),
        converged=converged,
    )


def exponent_F(rates: RatePoint, p: JointPmf) -> float:
    return min(exponent_F_i(i, R, p).value for i, R in ((1, rates.R1), (2, rates.R2), (3, rates.R3)))


# --- G family --------------------------------------------------------------


def g_objective(R: float, pz, q) -> float:
    """``[H(Q) - R]^+ + D(Q||P_Z)`` over a flattened alphabet."""
    P = np.ravel(pz.probs if isinstance(pz, JointPmf) else pz)
    q = np.ravel(q.probs if isinstance(q, JointPmf) else q)
    return max(entropy(q) - R, 0.0) + kl_divergence(q, P)


def _escort(P: np.ndarray, s: float) -> np.ndarray:
    """``P^s / sum P^s``, scaled by the largest cell so large ``s`` cannot underflow."""
    out = np.zeros_like(P)
    pos = P > 0
    logs = np.log2(P[pos])
    w = np.exp2(s * (logs - logs.max()))
    out[pos] = w / w.sum()
    return out


def exponent_G_single(R: float, pz: JointPmf) -> ExponentResult:
    """``min_Q [H(Q) - R]^+ + D(Q||P_Z)``, solved on the escort family with a dual bound."""
    _check_rate(R)
    _check_pmf(pz)
    shape = pz.dims
    P = pz.flat()
    if entropy(P) <= R:
        return ExponentResult(0.0, pz, CLOSED_FORM, 0.0)
    logs = np.log2(P[P > 0])
    top_log = logs.max()

    def dual(s):
        log_sum = s * top_log + math.log2(np.exp2(s * (logs - top_log)).sum())
        return (R - log_sum) / s - R

    # the escort entropy H(P^s / sum P^s) falls from H(P) at s=1 towards
    # log2(#argmax cells) as s grows, so H(Q) = R has a root s >= 1 unless R
    # is at or below that limit, where the uniform law on the argmax cells wins
    top = np.isclose(P, P.max(), rtol=0, atol=1e-15)
    if R <= math.log2(top.sum()) + 1e-12:
        q = top / top.sum()
        primal = g_objective(R, P, q)
        dual_val = primal
    else:
        s_hi = 2.0
        while entropy(_escort(P, s_hi)) > R:
            s_hi *= 2.0
        s_star = brentq(lambda s: entropy(_escort(P, s)) - R, 1.0, s_hi, xtol=1e-14, rtol=1e-14)
        q = _escort(P, s_star)
        primal = g_objective(R, P, q)
        dual_val = dual(s_star)
    return ExponentResult(
        value=max(primal, 0.0),
        argmin_pmf=JointPmf(q.reshape(shape)),
        method=CONVEX_DESCENT,
        certificate_gap=max(primal - dual_val, 0.0),
    )


def exponent_G_parts(rates: RatePoint, key_pmf: JointPmf) -> tuple[float, float, float]:
    return (
        exponent_G_single(rates.R1, key_pmf.marginal(0)).value,
        exponent_G_single(rates.R2, key_pmf.marginal(1)).value,
        exponent_G_single(rates.R3, key_pmf).value,
    )


def exponent_G(rates: RatePoint, key_pmf: JointPmf) -> float:
    return min(exponent_G_parts(rates, key_pmf))


def g_star(rates: RatePoint, source_pmf: JointPmf, key_pmf: JointPmf) -> float:
    """``min{log2(1/P_max), G}``: the exponent of the adversary's success probability."""
    return min(-math.log2(source_pmf.p_max) + 0.0, exponent_G(rates, key_pmf))


# --- regions -------------------------------------------------------------

SLEPIAN_WOLF, KEY = "slepian_wolf", "key"


@dataclass(frozen=True)
class RegionSpec:
    """Three half-plane thresholds on (R1, R2, R1 + R2).

    Slepian-Wolf regions need every rate strictly above its threshold; key
    regions need every rate strictly below.
    """

    kind: str
    pmf: JointPmf
    thresholds: tuple[float, float, float]

    @classmethod
    def slepian_wolf(cls, p: JointPmf) -> "RegionSpec":
        return cls(SLEPIAN_WOLF, p, (conditional_entropy(p, 1), conditional_entropy(p, 0), entropy(p)))

    @classmethod
    def key(cls, p: JointPmf) -> "RegionSpec":
        return cls(KEY, p, (entropy(p.marginal(0)), entropy(p.marginal(1)), entropy(p)))

    def contains(self, rates: RatePoint) -> bool:
        values = (rates.R1, rates.R2, rates.R3)
        if self.kind == SLEPIAN_WOLF:
            return all(r > t for r, t in zip(values, self.thresholds))
        if self.kind == KEY:
            return all(r < t for r, t in zip(values, self.thresholds))
        raise ValueError(f"unknown region kind {self.kind!r}")

    def margin(self, rates: RatePoint) -> float:
        """Signed distance to the nearest face along the rate coordinates (positive inside)."""
        values = (rates.R1, rates.R2, rates.R3)
        sign = 1.0 if self.kind == SLEPIAN_WOLF else -1.0
        return min(sign * (r - t) for r, t in zip(values, self.thresholds))


def region_membership(rates: RatePoint, region: RegionSpec) -> bool:
    return region.contains(rates)


@dataclass(frozen=True)
class GridPoint:
    rates: RatePoint
    in_rsw: bool
    in_rkey: bool

    @property
    def in_both(self) -> bool:
        return self.in_rsw and self.in_rkey


@dataclass(frozen=True)
class RegionGrid:
    points: tuple[GridPoint, ...]
    sw_thresholds: tuple[float, float, float]
    key_thresholds: tuple[float, float, float]


def rate_axis(resolution: int, lo: float = 0.05, hi: float = 2.5) -> np.ndarray:
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    return np.linspace(lo, hi, resolution)


def region_intersection_grid(
    source_pmf: JointPmf, key_pmf: JointPmf, resolution: int, lo: float = 0.05, hi: float = 2.5
) -> RegionGrid:
    sw, key = RegionSpec.slepian_wolf(source_pmf), RegionSpec.key(key_pmf)
    axis = rate_axis(resolution, lo, hi)
    points = []
    for r1 in axis:
        for r2 in axis:
            rp = RatePoint(float(r1), float(r2))
            points.append(GridPoint(rp, sw.contains(rp), key.contains(rp)))
    return RegionGrid(tuple(points), sw.thresholds, key.thresholds)


# --- finite-length bounds --------------------------------------------------


def delta_terms(n: int, dims) -> tuple[float, float]:
    """Finite-length penalties (delta_1, delta_2), computed in log space."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cells = int(dims[0]) * int(dims[1])
    poly = 3 * cells * math.log2(n + 1)
    d1 = (math.log2(24) + poly) / n
    d2 = (math.log2(6 * LOG2E * math.log2(cells) * n) + poly) / n
    return d1, d2


def _clamped_power(n: int, exponent: float) -> float:
    e = -n * exponent
    return 1.0 if e >= 0 else 2.0**e


@dataclass(frozen=True)
class FiniteLengthBounds:
    pe_bound: float
    leak_bound: float
    F: float
    G: float
    delta1: float
    delta2: float
    in_region: bool

    @property
    def vacuous(self) -> bool:
        return self.pe_bound >= 1.0 and self.leak_bound >= 1.0


def bounds_from_exponents(n: int, F: float, G: float, dims, in_region: bool = True) -> FiniteLengthBounds:
    d1, d2 = delta_terms(n, dims)
    return FiniteLengthBounds(_clamped_power(n, F - d1), _clamped_power(n, G - d2), F, G, d1, d2, in_region)


def finite_length_bounds(n: int, rates: RatePoint, source_pmf: JointPmf, key_pmf: JointPmf) -> FiniteLengthBounds:
    """``min(1, 2^{-n(F - delta_1)})`` and ``min(1, 2^{-n(G - delta_2)})``.

    Rates outside the intersection region still get numbers; ``in_region`` is
    False and the bounds are then 1.
    """
    inside = RegionSpec.slepian_wolf(source_pmf).contains(rates) and RegionSpec.key(key_pmf).contains(rates)
    F = exponent_F(rates, source_pmf)
    G = exponent_G(rates, key_pmf)
    return bounds_from_exponents(n, F, G, source_pmf.dims, inside)


# --- tabulation --------------------------------------------------------------

EXPONENT_COLUMNS = ("R1", "R2", "F1", "F2", "F3", "F", "G1", "G2", "G3", "G", "Gstar", "in_Rsw", "in_Rkey")


def exponent_row(rates: RatePoint, source_pmf: JointPmf, key_pmf: JointPmf) -> dict:
    F1, F2, F3 = (exponent_F_i(i, R, source_pmf).value for i, R in ((1, rates.R1), (2, rates.R2), (3, rates.R3)))
    G1, G2, G3 = exponent_G_parts(rates, key_pmf)
    G = min(G1, G2, G3)
    return {
        "R1": rates.R1,
        "R2": rates.R2,
        "F1": F1,
        "F2": F2,
        "F3": F3,
        "F": min(F1, F2, F3),
        "G1": G1,
        "G2": G2,
        "G3": G3,
        "G": G,
        "Gstar": min(-math.log2(source_pmf.p_max) + 0.0, G),
        "in_Rsw": RegionSpec.slepian_wolf(source_pmf).contains(rates),
        "in_Rkey": RegionSpec.key(key_pmf).contains(rates),
    }
