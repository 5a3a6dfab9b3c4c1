"""Catalogue of weighted Riemannian structures ``(R^d, A)``.

Every structure is a small frozen dataclass. The diagonal ones (identity,
generalized Grushin, monomial, hyperplane distance, Poincare half-plane) can
be discretized; the Heisenberg matrix is provided for evaluation only since
it does not degenerate in the controlled way the solvers assume.

Point-wise operations take a single point ``x`` of length ``d``; the
vectorized :func:`diagonal_weights` is what the grid code uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "Identity",
    "GeneralizedGrusin",
    "Monomial",
    "HyperplaneDistance",
    "PoincareHalfPlane",
    "Heisenberg",
    "StructureSpec",
    "UnsupportedStructureError",
    "AssumptionReport",
    "spec_from_dict",
    "spec_to_dict",
    "eval_matrix",
    "eval_sqrt",
    "horizontal_gradient",
    "gradient_norm",
    "carre_du_champ",
    "degeneracy_bound",
    "verify_assumption1",
    "diagonal_weights",
    "product_exponents",
    "grusin_distance_1d",
]

PSD_TOL = 1e-12


class UnsupportedStructureError(ValueError):
    """Raised when an operation is not defined for the given structure."""


@dataclass(frozen=True)
class Identity:
    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("Identity needs d >= 1")

    @property
    def dim(self) -> int:
        return self.d


@dataclass(frozen=True)
class GeneralizedGrusin:
    """``diag(|x|_n^alpha I_n, |x|_n^beta_1, ..., |x|_n^beta_m)``.

    ``|x|_n`` is the Euclidean norm of the first ``n`` coordinates.
    """

    n: int
    m: int
    alpha: float = 0.0
    betas: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.n < 0 or self.m < 0 or self.n + self.m < 1:
            raise ValueError("GeneralizedGrusin needs n, m >= 0 and n + m >= 1")
        if not 0.0 <= self.alpha < 2.0:
            raise ValueError(f"alpha must lie in [0, 2), got {self.alpha}")
        if len(self.betas) != self.m:
            raise ValueError(f"expected {self.m} betas, got {len(self.betas)}")
        if any(b < 0 for b in self.betas):
            raise ValueError("betas must be >= 0")

    @property
    def dim(self) -> int:
        return self.n + self.m


@dataclass(frozen=True)
class Monomial:
    """``diag(|x_1|^alpha_1, ..., |x_d|^alpha_d)``."""

    alphas: tuple

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not self.alphas:
            raise ValueError("Monomial needs at least one exponent")
        if any(not 0.0 <= a < 2.0 for a in self.alphas):
            raise ValueError(f"monomial exponents must lie in [0, 2), got {self.alphas}")

    @property
    def dim(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class HyperplaneDistance:
    """``diag(d_K^e_1, ..., d_K^e_d)`` with ``K = {x_axis = 0}``."""

    exponents: tuple
    axis: int = 0

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(float(e) for e in self.exponents))
        if not self.exponents:
            raise ValueError("HyperplaneDistance needs at least one exponent")
        if any(e < 0 for e in self.exponents):
            raise ValueError("exponents must be >= 0")
        if not 0 <= self.axis < len(self.exponents):
            raise ValueError(f"axis {self.axis} out of range")

    @property
    def dim(self) -> int:
        return len(self.exponents)


@dataclass(frozen=True)
class PoincareHalfPlane:
    """``A = x_1^2 I_2``."""

    @property
    def dim(self) -> int:
        return 2


@dataclass(frozen=True)
class Heisenberg:
    """Horizontal structure of the Heisenberg group; evaluation only."""

    @property
    def dim(self) -> int:
        return 3


StructureSpec = Union[Identity, GeneralizedGrusin, Monomial, HyperplaneDistance,
                      PoincareHalfPlane, Heisenberg]

DIAGONAL_KINDS = (Identity, GeneralizedGrusin, Monomial, HyperplaneDistance, PoincareHalfPlane)

_KINDS = {
    "identity": Identity,
    "grusin": GeneralizedGrusin,
    "monomial": Monomial,
    "hyperplane": HyperplaneDistance,
    "poincare": PoincareHalfPlane,
    "heisenberg": Heisenberg,
}


def spec_from_dict(data: dict) -> StructureSpec:
    """Decode the canonical JSON form, e.g. ``{"kind": "grusin", "n": 1, ...}``."""
    data = dict(data)
    try:
        kind = data.pop("kind")
    except KeyError:
        raise ValueError("structure record needs a 'kind' field") from None
    if kind not in _KINDS:
        raise ValueError(f"unknown structure kind {kind!r}")
    if kind == "identity":
        allowed = {"d"}
    elif kind == "grusin":
        allowed = {"n", "m", "alpha", "betas"}
    elif kind == "monomial":
        allowed = {"alphas"}
    elif kind == "hyperplane":
        allowed = {"exponents", "axis"}
    else:
        allowed = set()
    extra = set(data) - allowed
    if extra:
        raise ValueError(f"unexpected fields for {kind!r}: {sorted(extra)}")
    if kind == "grusin":
        data.setdefault("betas", ())
        data["betas"] = tuple(data["betas"])
        data.setdefault("m", len(data["betas"]))
    return _KINDS[kind](**data)


def spec_to_dict(spec: StructureSpec) -> dict:
    if isinstance(spec, Identity):
        return {"kind": "identity", "d": spec.d}
    if isinstance(spec, GeneralizedGrusin):
        return {"kind": "grusin", "n": spec.n, "m": spec.m, "alpha": spec.alpha,
                "betas": list(spec.betas)}
    if isinstance(spec, Monomial):
        return {"kind": "monomial", "alphas": list(spec.alphas)}
    if isinstance(spec, HyperplaneDistance):
        return {"kind": "hyperplane", "exponents": list(spec.exponents), "axis": spec.axis}
    if isinstance(spec, PoincareHalfPlane):
        return {"kind": "poincare"}
    if isinstance(spec, Heisenberg):
        return {"kind": "heisenberg"}
    raise TypeError(f"not a structure spec: {spec!r}")


def _point(spec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,):
        raise ValueError(f"point has shape {x.shape}, structure needs ({spec.dim},)")
    return x


def _block_norm(x, n) -> float:
    # compensated summation keeps |x|_n reproducible
    return math.sqrt(math.fsum(float(v) * float(v) for v in x[:n]))


def _diag_point(spec, x) -> np.ndarray:
    if isinstance(spec, Identity):
        return np.ones(spec.d)
    if isinstance(spec, GeneralizedGrusin):
        r = _block_norm(x, spec.n)
        return np.array([r ** spec.alpha] * spec.n + [r ** b for b in spec.betas])
    if isinstance(spec, Monomial):
        return np.array([abs(xi) ** a for xi, a in zip(x, spec.alphas)])
    if isinstance(spec, HyperplaneDistance):
        dist = abs(x[spec.axis])
        return np.array([dist ** e for e in spec.exponents])
    if isinstance(spec, PoincareHalfPlane):
        return np.full(2, x[0] ** 2)
    raise UnsupportedStructureError(f"{type(spec).__name__} is not diagonal")


def eval_matrix(spec: StructureSpec, x) -> np.ndarray:
    """Return ``A(x)`` as a symmetric ``d x d`` array."""
    x = _point(spec, x)
    if isinstance(spec, Heisenberg):
        a, b, _ = x
        return np.array([[1.0, 0.0, b / 2],
                         [0.0, 1.0, -a / 2],
                         [b / 2, -a / 2, (a * a + b * b) / 2]])
    return np.diag(_diag_point(spec, x))


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(a)
    radius = max(np.max(np.abs(lam)), 0.0)
    if lam.min() < -PSD_TOL * radius:
        raise ValueError(f"matrix is not positive semi-definite (eigenvalue {lam.min():.3e})")
    lam = np.clip(lam, 0.0, None)
    return (vec * np.sqrt(lam)) @ vec.T


def eval_sqrt(spec: StructureSpec, x) -> np.ndarray:
    """Return the PSD square root ``B(x)`` with ``B(x)^2 = A(x)``."""
    x = _point(spec, x)
    if isinstance(spec, DIAGONAL_KINDS):
        return np.diag(np.sqrt(_diag_point(spec, x)))
    return _psd_sqrt(eval_matrix(spec, x))


def _vector(spec, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (spec.dim,):
        raise ValueError(f"gradient has shape {g.shape}, structure needs ({spec.dim},)")
    return g


def horizontal_gradient(spec: StructureSpec, x, grad_euc) -> np.ndarray:
    """``A(x) grad_euc``."""
    return eval_matrix(spec, x) @ _vector(spec, grad_euc)


def carre_du_champ(spec: StructureSpec, x, grad_euc) -> float:
    """``sum_ij a_ij(x) g_i g_j``."""
    g = _vector(spec, grad_euc)
    a = eval_matrix(spec, x)
    return float(max(g @ a @ g, 0.0))


def gradient_norm(spec: StructureSpec, x, grad_euc) -> float:
    """Length ``sqrt(<g, A(x) g>)`` of the horizontal gradient."""
    return math.sqrt(carre_du_champ(spec, x, grad_euc))


def _degeneracy_data(spec):
    """Distances-to-K functions and exponents ``(d_K, gamma)`` per degeneracy set."""
    if isinstance(spec, Heisenberg):
        raise UnsupportedStructureError("the Heisenberg structure has no degeneracy bound")
    if isinstance(spec, Identity):
        return []
    if isinstance(spec, GeneralizedGrusin):
        gamma = max((spec.alpha,) + spec.betas) if spec.n else max(spec.betas, default=0.0)
        n = spec.n
        return [(lambda x: _block_norm(x, n), gamma)]
    if isinstance(spec, Monomial):
        return [((lambda x, i=i: abs(x[i])), a) for i, a in enumerate(spec.alphas)]
    if isinstance(spec, HyperplaneDistance):
        # the largest exponent dominates near K
        axis = spec.axis
        return [(lambda x: abs(x[axis]), max(spec.exponents))]
    if isinstance(spec, PoincareHalfPlane):
        return [(lambda x: abs(x[0]), 2.0)]
    raise TypeError(f"not a structure spec: {spec!r}")


def degeneracy_bound(spec: StructureSpec, x) -> float:
    """``omega(x) = min{d_K1(x)^gamma_1, ..., 1}``."""
    x = _point(spec, x)
    values = [dist(x) ** gamma for dist, gamma in _degeneracy_data(spec)]
    return float(min(values + [1.0]))


@dataclass
class AssumptionReport:
    passed: bool
    worst_margin: float
    n_checked: int = 0
    worst_point: np.ndarray = field(default=None, repr=False)


def verify_assumption1(spec: StructureSpec, sample_points, directions, slack: float = 1e-10
                       ) -> AssumptionReport:
    """Check ``xi^T A(x) xi >= omega(x) |xi|^2`` on every sample/direction pair."""
    points = [np.asarray(p, dtype=float) for p in sample_points]
    dirs = [np.asarray(v, dtype=float) for v in directions]
    if not points or not dirs:
        raise ValueError("need at least one sample point and one direction")
    worst, worst_x = math.inf, None
    for x in points:
        a = eval_matrix(spec, x)
        omega = degeneracy_bound(spec, x)
        for xi in dirs:
            margin = float(xi @ a @ xi - omega * (xi @ xi))
            if margin < worst:
                worst, worst_x = margin, x
    return AssumptionReport(worst >= -slack, worst, len(points) * len(dirs), worst_x)


def diagonal_weights(spec: StructureSpec, points: np.ndarray) -> np.ndarray:
    """Diagonal of ``A`` at many points; ``points`` has shape ``(..., d)``."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != spec.dim:
        raise ValueError(f"points have trailing dimension {pts.shape[-1]}, need {spec.dim}")
    if isinstance(spec, Identity):
        return np.ones_like(pts)
    if isinstance(spec, GeneralizedGrusin):
        r = np.sqrt(np.sum(pts[..., :spec.n] ** 2, axis=-1))
        cols = [r ** spec.alpha] * spec.n + [r ** b for b in spec.betas]
        return np.stack(cols, axis=-1)
    if isinstance(spec, Monomial):
        return np.abs(pts) ** np.array(spec.alphas)
    if isinstance(spec, HyperplaneDistance):
        dist = np.abs(pts[..., spec.axis])[..., None]
        return dist ** np.array(spec.exponents)
    if isinstance(spec, PoincareHalfPlane):
        return np.repeat(pts[..., :1] ** 2, 2, axis=-1)
    raise UnsupportedStructureError(f"{type(spec).__name__} has no diagonal weights")


def product_exponents(spec: StructureSpec):
    """Exponent table ``S`` with ``A_kk(x) = prod_j |x_j|^S[k, j]``.

    Returns ``None`` when the weights are not of this product form (Grushin
    with a multi-dimensional first block).
    """
    d = spec.dim
    if isinstance(spec, Identity):
        return np.zeros((d, d))
    if isinstance(spec, GeneralizedGrusin):
        exps = (spec.alpha,) * spec.n + spec.betas
        if spec.n == 1:
            s = np.zeros((d, d))
            s[:, 0] = exps
            return s
        if all(e == 0 for e in exps):
            return np.zeros((d, d))
        return None
    if isinstance(spec, Monomial):
        return np.diag(spec.alphas)
    if isinstance(spec, HyperplaneDistance):
        s = np.zeros((d, d))
        s[:, spec.axis] = spec.exponents
        return s
    if isinstance(spec, PoincareHalfPlane):
        return np.array([[2.0, 0.0], [2.0, 0.0]])
    raise UnsupportedStructureError(f"{type(spec).__name__} has no diagonal weights")


def grusin_distance_1d(alpha: float, a: float, b: float) -> float:
    """Length ``int_a^b |x|^(-alpha/2) dx`` of the segment ``[a, b]``.

    Infinite when ``alpha >= 2`` and the segment touches the origin.
    """
    if a > b:
        raise ValueError("need a <= b")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if a == b:
        return 0.0
    e = 1.0 - alpha / 2.0
    crosses = a <= 0.0 <= b
    if e <= 0.0:
        if crosses:
            return math.inf
        lo, hi = sorted((abs(a), abs(b)))
        if e == 0.0:
            return math.log(hi / lo)
        return (lo ** e - hi ** e) / (-e)
    if crosses:
        return (abs(a) ** e + abs(b) ** e) / e
    return abs(abs(b) ** e - abs(a) ** e) / e
