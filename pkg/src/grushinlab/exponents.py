"""Closed-form exponent calculus.

Homogeneous dimensions, Sobolev and Nash exponents, the anisotropy
multipliers ``gamma_j``, the L^q-L^infinity decay exponents of the p-Laplace
semigroup, and the continuity/separation classification of ``|x_1|^alpha``
weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

__all__ = [
    "GrusinDims",
    "DecayExponents",
    "MonomialCase",
    "MonomialRegime",
    "RegularityClass",
    "grusin_dimension",
    "monomial_dimension",
    "structure_dimension",
    "sobolev_exponent",
    "nash_exponents",
    "gamma_multiplier",
    "decay_exponents",
    "l1_decay_rate",
    "lq_decay_rate",
    "monomial_case",
    "monomial_decay_case",
    "separation_threshold",
    "classify_regularity",
    "exponent_record",
]


@dataclass(frozen=True)
class GrusinDims:
    n: int
    m: int
    alpha: float = 0.0
    betas: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.n < 0 or self.m < 0 or self.n + self.m < 1:
            raise ValueError("need n, m >= 0 with n + m >= 1")
        if len(self.betas) != self.m:
            raise ValueError(f"expected {self.m} betas, got {len(self.betas)}")
        if any(b < 0 for b in self.betas):
            raise ValueError("betas must be >= 0")


@dataclass(frozen=True)
class DecayExponents:
    """Time exponent ``delta_q`` and data exponent ``gamma_q`` of
    ``||T_t f - T_t g||_inf <~ t^-delta_q ||f - g||_q^gamma_q``."""

    delta_star: float
    gamma_star: float
    delta_q: float
    gamma_q: float
    q: float


class MonomialCase(str, Enum):
    SMALL_P = "SmallP"
    MID_P = "MidP"
    LARGE_P = "LargeP"
    P_GEQ_2 = "PGeq2"


@dataclass(frozen=True)
class MonomialRegime:
    """Which of the four monomial-weight decay statements applies.

    ``q_range`` is ``(q_min, q_max)``; the lower end is strict when
    ``q_min_strict`` is set. For the small-p case the upper end depends on
    ``q0`` and is ``None`` until one is given. ``overlaps_case3`` flags
    exponents that the ``2d/(d+1) < p < 2`` statement (written with the
    Euclidean ``d``) also claims.
    """

    case: MonomialCase
    q_range: tuple
    q_min_strict: bool = False
    q0: Optional[float] = None
    overlaps_case3: bool = False


@dataclass(frozen=True)
class RegularityClass:
    label: str  # "continuous" | "separated"
    threshold: float
    muckenhoupt_interval: tuple


def grusin_dimension(dims: GrusinDims) -> float:
    """Homogeneous dimension ``(n + m(1 - a/2) + sum(b)/2) / (1 - a/2)``."""
    if dims.alpha >= 2:
        raise ValueError(f"alpha must be < 2, got {dims.alpha}")
    if dims.alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {dims.alpha}")
    e = 1.0 - dims.alpha / 2.0
    return (dims.n + dims.m * e + 0.5 * math.fsum(dims.betas)) / e


def monomial_dimension(alphas: Sequence[float]) -> float:
    """``d + sum(a_i / (2 - a_i))``."""
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("need at least one exponent")
    for a in alphas:
        if not 0.0 <= a < 2.0:
            raise ValueError(f"monomial exponents must lie in [0, 2), got {a}")
    return len(alphas) + math.fsum(a / (2.0 - a) for a in alphas)


def structure_dimension(spec) -> float:
    """Homogeneous dimension of a catalogue structure."""
    from .structures import GeneralizedGrusin, Identity, Monomial

    if isinstance(spec, Identity):
        return float(spec.d)
    if isinstance(spec, GeneralizedGrusin):
        return grusin_dimension(GrusinDims(spec.n, spec.m, spec.alpha, spec.betas))
    if isinstance(spec, Monomial):
        return monomial_dimension(spec.alphas)
    raise ValueError(f"no homogeneous dimension known for {type(spec).__name__}")


def sobolev_exponent(p: float, D: float) -> float:
    """``pD / (D - p)`` for ``1 <= p < D``."""
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    if p >= D:
        raise ValueError(f"Sobolev exponent needs p < D (p={p}, D={D})")
    return p * D / (D - p)


def nash_exponents(D: float) -> tuple:
    """``(theta, 1 - theta)`` with ``theta = D / (D + 2)``."""
    if D <= 0:
        raise ValueError(f"need D > 0, got {D}")
    theta = D / (D + 2.0)
    return theta, 2.0 / (D + 2.0)


def gamma_multiplier(alpha: float, beta: float) -> float:
    """``(1 - alpha/2) / (1 + (beta - alpha)/2)``."""
    if not 0.0 <= alpha < 2.0:
        raise ValueError(f"alpha must lie in [0, 2), got {alpha}")
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return (1.0 - alpha / 2.0) / (1.0 + (beta - alpha) / 2.0)


def _star(p, D, base):
    # base = q0 for the small-p statement, base = p otherwise
    den = p * base + (D - p) * (p - 2.0)
    if den <= 0:
        raise ValueError(f"exponent denominator p*q0 + (D-p)(p-2) = {den} is not positive")
    return (D - p) / den, p * base / den


def _extrapolate(delta_s, gamma_s, p, D, q, base):
    r = q * (D - p) / (D * base)
    den = 1.0 - gamma_s * (1.0 - r)
    if den <= 0:
        raise ValueError(f"decay exponents are undefined for q={q} (denominator {den})")
    return delta_s / den, gamma_s * r / den


def decay_exponents(p: float, D: float, q: float) -> DecayExponents:
    """Decay exponents for ``2 <= p < D`` and ``1 <= q <= Dp/(D-p)``."""
    if p < 2:
        raise ValueError(f"need p >= 2, got {p}")
    if p >= D:
        raise ValueError(f"need p < D (p={p}, D={D})")
    q_max = D * p / (D - p)
    if not 1.0 <= q <= q_max:
        raise ValueError(f"q={q} outside [1, {q_max}]")
    ds, gs = _star(p, D, p)
    if q == q_max:
        return DecayExponents(ds, gs, ds, gs, q)
    dq, gq = _extrapolate(ds, gs, p, D, q, p)
    return DecayExponents(ds, gs, dq, gq, q)


def lq_decay_rate(p: float, D: float, q: float = 1.0) -> float:
    """``D / (D(p - 2) + pq)``, the L^q to L^infinity time exponent.

    Agrees with ``decay_exponents(p, D, q).delta_q`` inside that function's
    range and stays meaningful for ``p >= D`` (Barenblatt scaling), where
    the general formula degenerates.
    """
    if p <= 1 or D <= 0:
        raise ValueError("need p > 1 and D > 0")
    if q < 1:
        raise ValueError(f"need q >= 1, got {q}")
    den = D * (p - 2.0) + p * q
    if den <= 0:
        raise ValueError(f"D(p-2) + pq = {den} is not positive")
    return D / den


def l1_decay_rate(p: float, D: float) -> float:
    """``D / (D(p - 2) + p)``, the q = 1 case of :func:`lq_decay_rate`."""
    return lq_decay_rate(p, D, 1.0)


def monomial_case(p: float, D: float, d: Optional[int] = None) -> MonomialRegime:
    """Classify ``p in (1, D)`` into the four monomial-weight statements."""
    if not 1.0 < p < D:
        raise ValueError(f"need 1 < p < D (p={p}, D={D})")
    q_hi = D * p / (D - p)
    q_lo = D * (2.0 - p) / p
    if p <= 2 * D / (D + 2):
        return MonomialRegime(MonomialCase.SMALL_P, (max(1.0, q_lo), None), q_lo >= 1.0)
    if p <= 2 * D / (D + 1):
        overlap = d is not None and p > 2 * d / (d + 1)
        return MonomialRegime(MonomialCase.MID_P, (max(1.0, q_lo), q_hi), q_lo >= 1.0,
                              overlaps_case3=overlap)
    if p < 2:
        return MonomialRegime(MonomialCase.LARGE_P, (1.0, q_hi))
    return MonomialRegime(MonomialCase.P_GEQ_2, (1.0, q_hi))


def monomial_decay_case(p: float, D: float, q: float, q0: Optional[float] = None,
                        d: Optional[int] = None):
    """Regime plus decay exponents for monomial weights.

    Returns ``(MonomialRegime, DecayExponents)``; in the small-p case the
    ``*_star`` fields hold the ``q0``-dependent base exponents.
    """
    regime = monomial_case(p, D, d)
    lo, hi = regime.q_range
    if regime.case is MonomialCase.SMALL_P:
        if q0 is None:
            raise ValueError("the small-p case needs q0")
        if q0 < p:
            raise ValueError(f"need q0 >= p (q0={q0}, p={p})")
        if (D / (D - p) - 1.0) * q0 + p - 2.0 <= 0:
            raise ValueError(f"q0={q0} violates (D/(D-p) - 1) q0 + p - 2 > 0")
        hi = D * q0 / (D - p)
        regime = MonomialRegime(regime.case, (lo, hi), regime.q_min_strict, q0)
        base = q0
    else:
        base = p
    if q > hi or q < lo or (regime.q_min_strict and q == lo):
        bracket = "(" if regime.q_min_strict else "["
        raise ValueError(f"q={q} outside {bracket}{lo}, {hi}]")
    ds, gs = _star(p, D, base)
    r_max = D * base / (D - p)
    if q == r_max:
        return regime, DecayExponents(ds, gs, ds, gs, q)
    dq, gq = _extrapolate(ds, gs, p, D, q, base)
    return regime, DecayExponents(ds, gs, dq, gq, q)


def separation_threshold(p: float) -> float:
    """``2 / p' = 2 (p - 1) / p``."""
    if p <= 1:
        raise ValueError(f"need p > 1, got {p}")
    return 2.0 * (p - 1.0) / p


def classify_regularity(alpha: float, p: float) -> RegularityClass:
    """Continuous below ``2/p'``, separated from the threshold on."""
    if not 0.0 <= alpha < 2.0:
        raise ValueError(f"alpha must lie in [0, 2), got {alpha}")
    t = separation_threshold(p)
    label = "continuous" if alpha < t else "separated"
    return RegularityClass(label, t, (-1.0 / p, t))


def exponent_record(spec, p: float, q: float = 1.0, alpha: Optional[float] = None) -> dict:
    """Flat record of every exponent attached to ``(spec, p, q)``.

    Entries that are undefined for the given parameters are ``None``; the
    regularity class uses ``alpha`` (default: the structure's first-block
    exponent).
    """
    from .structures import GeneralizedGrusin, Monomial

    D = structure_dimension(spec)
    if alpha is None:
        if isinstance(spec, GeneralizedGrusin):
            alpha = spec.alpha
        elif isinstance(spec, Monomial):
            alpha = spec.alphas[0]
        else:
            alpha = 0.0
    theta, one_minus = nash_exponents(D)
    rec = {"D": D, "p_star": None, "nash": [theta, one_minus], "delta_star": None,
           "gamma_star": None, "delta_q": None, "gamma_q": None, "q": q,
           "delta_1": None}
    if p < D:
        rec["p_star"] = sobolev_exponent(p, D)
    if 2 <= p < D:
        ex = decay_exponents(p, D, q)
        rec.update(delta_star=ex.delta_star, gamma_star=ex.gamma_star,
                   delta_q=ex.delta_q, gamma_q=ex.gamma_q)
    elif 1 < p < D and isinstance(spec, Monomial):
        regime = monomial_case(p, D, spec.dim)
        if regime.case is not MonomialCase.SMALL_P:
            _, ex = monomial_decay_case(p, D, q, d=spec.dim)
            rec.update(delta_star=ex.delta_star, gamma_star=ex.gamma_star,
                       delta_q=ex.delta_q, gamma_q=ex.gamma_q)
    if D * (p - 2.0) + p > 0:
        rec["delta_1"] = l1_decay_rate(p, D)
    cls = classify_regularity(alpha, p)
    rec["threshold"] = cls.threshold
    rec["class"] = cls.label
    return rec
