"""Numerical checks of the functional inequalities and the interface calculus.

* Nash and Sobolev quotients of anisotropically rescaled bumps: the
  quotient is scale invariant exactly when the exponent ``D`` used to form
  it is the homogeneous dimension of the weights.
* The log-truncator integral whose limit decides whether the two halves
  ``{x_1 > 0}`` and ``{x_1 < 0}`` decouple.
* The energy additivity defect across the interface on refining grids.
* The change of variables turning monomial weights into a power-weighted
  Euclidean energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .discretization import (DiscreteEnergy, GridFunction, TensorGrid, build_grid,
                             gradient_lp_norm, lq_norm, power_cell_average,
                             trapezoid_weights)
from .elliptic import ladder_grid
from .exponents import separation_threshold, sobolev_exponent, structure_dimension
from .structures import GeneralizedGrusin, Identity, Monomial

__all__ = [
    "CheckReport",
    "ScalingRule",
    "BumpFamily",
    "scaling_rule",
    "nash_ratio",
    "sobolev_ratio",
    "scale_invariance_check",
    "truncator_integral",
    "truncator_turning_point",
    "log_truncator",
    "indicator_interface_energy",
    "energy_additivity_check",
    "monomial_substitution_check",
]

INVARIANCE_TOL = 1e-2
SUBSTITUTION_TOL = 1e-3


@dataclass
class CheckReport:
    check: str
    params: dict
    values: list
    passed: bool
    measured_exponent: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"check": self.check, "params": self.params, "values": self.values,
               "pass": bool(self.passed)}
        if self.measured_exponent is not None:
            out["measured_exponent"] = float(self.measured_exponent)
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class ScalingRule:
    """Axis ``k`` is stretched by ``lambda ** sigmas[k]``."""

    sigmas: tuple

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("scaling exponents must be positive")

    def factors(self, lam: float) -> np.ndarray:
        return np.asarray(lam, dtype=float) ** np.array(self.sigmas)


def scaling_rule(spec) -> ScalingRule:
    """Anisotropic dilation under which ``|grad_A f|_A`` is homogeneous."""
    if isinstance(spec, Identity):
        return ScalingRule((1.0,) * spec.d)
    if isinstance(spec, GeneralizedGrusin):
        return ScalingRule((1.0,) * spec.n + tuple(1.0 + (b - spec.alpha) / 2.0
                                                  for b in spec.betas))
    if isinstance(spec, Monomial):
        return ScalingRule(tuple(2.0 / (2.0 - a) for a in spec.alphas))
    raise ValueError(f"no scaling rule for {type(spec).__name__}")


@dataclass(frozen=True)
class BumpFamily:
    """Quartic bumps ``prod max(0, 1 - (x_k / r_k)^2)^2`` centred at 0, dilated by a rule."""

    radii: tuple
    rule: ScalingRule

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if len(self.radii) != len(self.rule.sigmas):
            raise ValueError("one radius per axis")
        if any(r <= 0 for r in self.radii):
            raise ValueError("radii must be positive")

    @classmethod
    def for_spec(cls, spec, radius: float = 1.0) -> "BumpFamily":
        rule = scaling_rule(spec)
        return cls((radius,) * len(rule.sigmas), rule)

    def support(self, lam: float) -> np.ndarray:
        return np.array(self.radii) * self.rule.factors(lam)

    def sample(self, grid: TensorGrid, lam: float) -> GridFunction:
        r = self.support(lam)
        vals = np.ones(grid.counts)
        for x, rk in zip(grid.mesh(), r):
            vals = vals * np.maximum(0.0, 1.0 - (x / rk) ** 2) ** 2
        return GridFunction(grid, vals)


def _dimension(spec, D):
    return structure_dimension(spec) if D is None else float(D)


def nash_ratio(spec, f: GridFunction, D: Optional[float] = None) -> float:
    """``||f||_2 / (||grad_A f||_2^(D/(D+2)) ||f||_1^(2/(D+2)))`` by grid quadrature."""
    D = _dimension(spec, D)
    l1, l2 = lq_norm(f, 1), lq_norm(f, 2)
    grad = gradient_lp_norm(f, 2, spec)
    if l1 == 0 or grad == 0:
        raise ValueError("Nash quotient of a vanishing function")
    return l2 / (grad ** (D / (D + 2.0)) * l1 ** (2.0 / (D + 2.0)))


def sobolev_ratio(spec, f: GridFunction, p: float, D: Optional[float] = None) -> float:
    """``||f||_{pD/(D-p)} / ||grad_A f||_p`` by grid quadrature."""
    D = _dimension(spec, D)
    q = sobolev_exponent(p, D)
    grad = gradient_lp_norm(f, p, spec)
    if grad == 0:
        raise ValueError("Sobolev quotient of a vanishing function")
    return lq_norm(f, q) / grad


def _default_counts(dim):
    return {1: 4097, 2: 257}.get(dim, 33)


def scale_invariance_check(spec, family: Optional[BumpFamily] = None, p: float = 2.0,
                           lambdas: Sequence[float] = (1.0, 2.0, 4.0), kind: str = "nash",
                           D: Optional[float] = None, counts=None, box=None) -> CheckReport:
    """Spread ``(max - min) / min`` of the Nash (``kind="nash"``, p = 2) or
    Sobolev quotient over the dilations ``lambdas``; PASS if at most ``1e-2``.

    Without ``box`` each dilation gets its own grid, stretched with the
    support so every bump is resolved by the same number of nodes. A given
    ``box`` is shared and must contain every support.
    """
    if kind not in ("nash", "sobolev"):
        raise ValueError(f"unknown quotient {kind!r}")
    family = family or BumpFamily.for_spec(spec)
    dim = spec.dim
    if len(family.radii) != dim:
        raise ValueError("family and structure dimensions differ")
    counts = tuple(counts) if counts is not None else (_default_counts(dim),) * dim
    D_used = _dimension(spec, D)
    values = []
    for lam in lambdas:
        r = family.support(lam)
        if box is None:
            grid = build_grid([(-1.05 * rk, 1.05 * rk) for rk in r], counts)
        else:
            if any(not (a < -rk and rk < b) for (a, b), rk in zip(box, r)):
                raise ValueError(f"support of the lambda={lam} bump escapes the box")
            grid = build_grid(box, counts)
        f = family.sample(grid, lam)
        if kind == "nash":
            values.append(nash_ratio(spec, f, D_used))
        else:
            values.append(sobolev_ratio(spec, f, p, D_used))
    spread = (max(values) - min(values)) / min(values)
    slope = None
    if len(lambdas) > 1:
        slope = float(np.polyfit(np.log(lambdas), np.log(values), 1)[0])
    params = {"kind": kind, "p": float(p), "D": D_used, "lambdas": [float(x) for x in lambdas],
              "counts": list(counts)}
    return CheckReport("scale_invariance", params, [float(v) for v in values],
                       spread <= INVARIANCE_TOL, slope, {"spread": float(spread)})


def truncator_integral(n: float, p: float, alpha: float) -> float:
    """``(log n)^-p * integral_{1/n}^1 r^(p(alpha/2 - 1)) dr`` in closed form."""
    if n <= 1:
        raise ValueError(f"need n > 1, got {n}")
    if p <= 1:
        raise ValueError(f"need p > 1, got {p}")
    if not 0.0 <= alpha < 2.0:
        raise ValueError(f"alpha must lie in [0, 2), got {alpha}")
    e = p * (alpha / 2.0 - 1.0)
    ln = math.log(n)
    if abs(1.0 + e) < 1e-14:
        return ln ** (1.0 - p)
    # -expm1 keeps accuracy when 1 + e is tiny
    return -math.expm1(-(1.0 + e) * ln) / ((1.0 + e) * ln ** p)


def truncator_turning_point(p: float, alpha: float) -> float:
    """Smallest ``n`` beyond which :func:`truncator_integral` increases.

    Below the threshold ``alpha < 2/p'`` the integral first decreases and
    then blows up; with ``c = -(1 + p(alpha/2 - 1)) > 0`` the minimum sits
    at ``n = exp(x/c)`` where ``x = p(1 - e^-x)``. From the threshold on the
    integral decreases for every ``n > 1`` and the result is ``inf``.
    """
    if p <= 1:
        raise ValueError(f"need p > 1, got {p}")
    c = -(1.0 + p * (alpha / 2.0 - 1.0))
    if alpha >= separation_threshold(p) or c <= 0:
        return math.inf
    from scipy.optimize import brentq

    x = brentq(lambda x: x - p * (1.0 - math.exp(-x)), 1e-12, p)
    return math.exp(x / c)


def log_truncator(x, n: float):
    """``clip((log x + log n) / log n, 0, 1)`` for ``x > 0``, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.clip((np.log(x[pos]) + math.log(n)) / math.log(n), 0.0, 1.0)
    return out


def indicator_interface_energy(p: float, alpha: float, h: float) -> float:
    """Energy of a unit jump across one cell ``[-h/2, h/2]`` under ``|x|^alpha``.

    Scales as ``h^(1 + p alpha/2 - p)``; the exponent changes sign at
    ``alpha = 2/p'``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    w0 = power_cell_average(alpha, -h / 2.0, h / 2.0)
    return h / p * w0 ** (p / 2.0) * h ** (-p)


def _default_profile(x):
    return np.maximum(0.0, 1.0 - (x / 0.5) ** 2) ** 2


def energy_additivity_check(p: float, alpha: float,
                            ladder: Sequence[float] = tuple(2.0 ** -k for k in range(6, 11)),
                            profile: Optional[Callable] = None,
                            n_values: Sequence[float] = (4.0, 16.0, 64.0, 256.0)
                            ) -> CheckReport:
    """Interface defect ``|E_h(f) - E_h(f 1+) - E_h(f 1-)|`` on ``[-1, 1]`` across ``ladder``.

    The node at the origin belongs to neither half. PASS means the defect
    decays under refinement with a positive log-log exponent (expected
    ``1 + p alpha/2 - p``). On the finest grid the split is also
    approximated with the log truncators ``chi_n(x_1)`` and ``chi_n(-x_1)``.
    """
    profile = profile or _default_profile
    ladder = sorted((float(h) for h in ladder), reverse=True)
    if len(ladder) < 2:
        raise ValueError("need at least two spacings")
    spec = GeneralizedGrusin(1, 0, alpha)
    rows = []
    E = grid = f = x = None
    for h in ladder:
        grid = ladder_grid(h)
        x = grid.axes[0]
        E = DiscreteEnergy(spec, p, grid)
        f = profile(x)
        plus = np.where(x > 0, f, 0.0)
        minus = np.where(x < 0, f, 0.0)
        whole, e_plus, e_minus = E.value(f), E.value(plus), E.value(minus)
        rows.append({"h": h, "energy": whole, "split": e_plus + e_minus,
                     "defect": abs(whole - e_plus - e_minus)})
    hs = np.array([r["h"] for r in rows])
    defects = np.array([r["defect"] for r in rows])
    if np.any(defects <= 0):
        slope = None
        passed = bool(np.all(defects == 0))
    else:
        slope = float(np.polyfit(np.log(hs), np.log(defects), 1)[0])
        passed = slope > 0 and bool(np.all(np.diff(defects) < 0))
    h_min = ladder[-1]
    truncated = []
    split = rows[-1]["split"]
    for n in n_values:
        if not h_min < 1.0 / n:
            raise ValueError(f"truncator with n={n} is unresolved at h={h_min} (need h < 1/n)")
        chi, chi_hat = log_truncator(x, n), log_truncator(-x, n)
        total = E.value(f * chi) + E.value(f * chi_hat)
        truncated.append({"n": float(n), "truncated_sum": total,
                          "gap_to_split": abs(total - split)})
    params = {"p": float(p), "alpha": float(alpha), "ladder": ladder,
              "expected_exponent": 1.0 + p * alpha / 2.0 - p,
              "threshold": separation_threshold(p)}
    return CheckReport("energy_additivity", params, rows, passed, slope,
                       {"truncators": truncated})


def monomial_substitution_check(alphas: Sequence[float], p: float = 2.0,
                                center: Optional[Sequence[float]] = None,
                                radius: Optional[Sequence[float]] = None,
                                nodes: Optional[int] = None) -> CheckReport:
    """Compare the monomial energy with its power-weighted Euclidean form.

    With ``n_i = 1/(1 - alpha_i/2)`` and ``y_i = x_i^(1/n_i)``,
    ``g(y) = f(y^n)`` satisfies

        integral |grad g|_{l^p}^p prod y_i^(n_i - 1) dy
          = (prod n_i)^-1 integral (sum_i n_i^2 |x_i|^alpha_i |d_i f|^2)^(p/2) dx

    exactly for ``p = 2`` or one variable, and up to the ``l^p``/``l^2``
    norm-equivalence constants otherwise. ``f`` is the quartic bump with the
    given centre and radius; both sides use the trapezoid rule on
    ``nodes`` points per axis over the respective supports.
    """
    alphas = tuple(float(a) for a in alphas)
    d = len(alphas)
    if d == 0:
        raise ValueError("need at least one exponent")
    if any(not 0.0 <= a < 2.0 for a in alphas):
        raise ValueError("monomial exponents must lie in [0, 2)")
    center = np.broadcast_to(np.asarray(1.0 if center is None else center, float), (d,))
    radius = np.broadcast_to(np.asarray(0.5 if radius is None else radius, float), (d,))
    nodes = nodes or _default_counts(d)
    n = np.array([1.0 / (1.0 - a / 2.0) for a in alphas])
    lo, hi = center - radius, center + radius
    for k in range(d):
        # x^(1/n) is only a smooth chart of the positive half-axis unless n = 1
        if lo[k] <= 0 and n[k] != 1.0:
            raise ValueError("support must stay in the positive orthant when alpha_i > 0")

    def factors(x, k):
        u = (x - center[k]) / radius[k]
        inside = np.abs(u) < 1
        val = np.where(inside, (1 - u * u) ** 2, 0.0)
        der = np.where(inside, -4 * u * (1 - u * u) / radius[k], 0.0)
        return val, der

    # x side
    gx = build_grid(list(zip(lo, hi)), (nodes,) * d)
    X = gx.mesh()
    vals, ders = zip(*(factors(X[k], k) for k in range(d)))
    dens = np.zeros(gx.counts)
    for i in range(d):
        di = ders[i] * np.prod([vals[j] for j in range(d) if j != i], axis=0)
        dens = dens + n[i] ** 2 * np.abs(X[i]) ** alphas[i] * di * di
    rhs = float(np.sum(trapezoid_weights(gx) * dens ** (p / 2.0))) / float(np.prod(n))

    # y side
    gy = build_grid([(lo[k] ** (1 / n[k]), hi[k] ** (1 / n[k])) for k in range(d)], (nodes,) * d)
    Y = gy.mesh()
    Xy = [Y[k] ** n[k] for k in range(d)]
    vals, ders = zip(*(factors(Xy[k], k) for k in range(d)))
    omega = np.prod([Y[k] ** (n[k] - 1.0) for k in range(d)], axis=0)
    lp = np.zeros(gy.counts)
    for i in range(d):
        di = n[i] * Y[i] ** (n[i] - 1.0) * ders[i] * np.prod(
            [vals[j] for j in range(d) if j != i], axis=0)
        lp = lp + np.abs(di) ** p
    lhs = float(np.sum(trapezoid_weights(gy) * lp * omega))

    discrepancy = abs(lhs - rhs) / abs(rhs)
    exact = p == 2 or d == 1
    if exact:
        passed = discrepancy <= SUBSTITUTION_TOL
        bound = SUBSTITUTION_TOL
    else:
        # ||v||_p^p / ||v||_2^p lies between 1 and d^(1 - p/2)
        c = float(d) ** (1.0 - p / 2.0)
        lo_b, hi_b = min(1.0, c), max(1.0, c)
        passed = lo_b * (1 - SUBSTITUTION_TOL) <= lhs / rhs <= hi_b * (1 + SUBSTITUTION_TOL)
        bound = abs(hi_b - lo_b) / lo_b
    params = {"alphas": list(alphas), "p": float(p), "center": center.tolist(),
              "radius": radius.tolist(), "nodes": int(nodes)}
    return CheckReport("monomial_substitution", params, [lhs, rhs], bool(passed), None,
                       {"discrepancy": float(discrepancy), "bound": float(bound)})
