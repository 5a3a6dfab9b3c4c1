"""Uniform tensor grids and the discrete p-energy.

The energy of a nodal field ``f`` is a one-point quadrature over primal
cells::

    E_h(f) = sum_c vol(c) / p * (sum_k w_k(c) g_k(c)^2 + eps^2)^(p/2)

where ``g(c)`` is the cell gradient (edge differences averaged over the
cell) and ``w_k(c)`` is the exact cell average of the k-th diagonal entry
of ``A``. Cell averages rather than point values keep every coupling
across a degeneracy hyperplane strictly positive, so any decoupling only
appears in the limit ``h -> 0``.

Nodes are stored row-major (C order) with the first axis slowest.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .structures import (DIAGONAL_KINDS, GeneralizedGrusin, UnsupportedStructureError,
                         diagonal_weights, product_exponents)

__all__ = [
    "TensorGrid",
    "GridFunction",
    "DirichletBC",
    "DiscreteEnergy",
    "build_grid",
    "power_cell_average",
    "assemble_cell_weights",
    "discrete_gradient",
    "discrete_energy",
    "discrete_energy_gradient",
    "gradient_lp_norm",
    "lq_norm",
    "trapezoid_weights",
]


@dataclass(frozen=True, eq=False)
class TensorGrid:
    box: tuple
    counts: tuple

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.box)
        counts = tuple(int(c) for c in self.counts)
        if len(box) != len(counts) or not box:
            raise ValueError("box and counts must have the same positive length")
        for (a, b), c in zip(box, counts):
            if not b > a:
                raise ValueError(f"degenerate box interval [{a}, {b}]")
            if c < 2:
                raise ValueError("each axis needs at least two nodes")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "counts", counts)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def cell_shape(self) -> tuple:
        return tuple(c - 1 for c in self.counts)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_shape))

    @cached_property
    def spacing(self) -> tuple:
        return tuple((b - a) / (c - 1) for (a, b), c in zip(self.box, self.counts))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> tuple:
        """Node coordinates ``a_k + i h_k`` per axis."""
        out = []
        for (a, _), c, h in zip(self.box, self.counts, self.spacing):
            out.append(a + np.arange(c) * h)
        return tuple(out)

    def node(self, index) -> np.ndarray:
        index = np.atleast_1d(index)
        return np.array([a + i * h for (a, _), i, h in zip(self.box, index, self.spacing)])

    def mesh(self) -> tuple:
        return np.meshgrid(*self.axes, indexing="ij")

    def points(self) -> np.ndarray:
        """All node coordinates, shape ``(*counts, d)``."""
        return np.stack(self.mesh(), axis=-1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.counts, dtype=bool)
        for k in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[k] = 0
            mask[tuple(sl)] = True
            sl[k] = -1
            mask[tuple(sl)] = True
        return mask

    @cached_property
    def gradient_operators(self) -> tuple:
        """Sparse ``G_k`` mapping nodal values to the k-th cell gradient."""
        diffs, avgs = [], []
        for c, h in zip(self.counts, self.spacing):
            e = np.ones(c - 1)
            diffs.append(sp.diags([-e / h, e / h], [0, 1], shape=(c - 1, c), format="csr"))
            avgs.append(sp.diags([0.5 * e, 0.5 * e], [0, 1], shape=(c - 1, c), format="csr"))
        ops = []
        for k in range(self.dim):
            factors = [diffs[j] if j == k else avgs[j] for j in range(self.dim)]
            op = factors[0]
            for fac in factors[1:]:
                op = sp.kron(op, fac, format="csr")
            ops.append(op.tocsr())
        return tuple(ops)

    def __repr__(self):
        return f"TensorGrid(box={self.box}, counts={self.counts})"


def build_grid(box: Sequence, counts) -> TensorGrid:
    """Uniform grid on ``box`` (a sequence of ``(a, b)``) with ``counts`` nodes per axis."""
    if np.ndim(counts) == 0:
        counts = (int(counts),)
    if len(box) == 2 and np.ndim(box[0]) == 0:
        box = (tuple(box),)
    return TensorGrid(tuple(box), tuple(counts))


@dataclass(eq=False)
class GridFunction:
    grid: TensorGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.size != self.grid.size:
            raise ValueError(f"{vals.size} values for a grid of {self.grid.size} nodes")
        vals = vals.reshape(self.grid.counts)
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function has non-finite values")
        self.values = vals

    @classmethod
    def from_function(cls, grid: TensorGrid, func) -> "GridFunction":
        """Sample ``func(*coords)`` at the nodes (coordinates broadcast as a mesh)."""
        return cls(grid, np.broadcast_to(func(*grid.mesh()), grid.counts))

    @classmethod
    def zeros(cls, grid: TensorGrid) -> "GridFunction":
        return cls(grid, np.zeros(grid.counts))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x{k}" for k in range(self.grid.dim)] + ["value"])
        pts = self.grid.points().reshape(-1, self.grid.dim)
        for x, v in zip(pts, self.flat):
            writer.writerow([repr(float(c)) for c in x] + [repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, grid: TensorGrid, text: str) -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if header[-1] != "value" or len(header) != grid.dim + 1:
            raise ValueError(f"unexpected header {header}")
        return cls(grid, np.array([float(r[-1]) for r in body]))


@dataclass(eq=False)
class DirichletBC:
    """Prescribed values on the boundary nodes of ``grid``."""

    grid: TensorGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        n_bnd = int(self.grid.boundary_mask.sum())
        if vals.size == self.grid.size:
            vals = vals.reshape(self.grid.counts)[self.grid.boundary_mask]
        if vals.size != n_bnd:
            raise ValueError(f"need {n_bnd} boundary values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("boundary data must be finite")
        self.values = vals

    @property
    def mask(self) -> np.ndarray:
        return self.grid.boundary_mask

    @classmethod
    def from_function(cls, grid: TensorGrid, func) -> "DirichletBC":
        full = np.broadcast_to(func(*grid.mesh()), grid.counts)
        return cls(grid, full[grid.boundary_mask])

    @classmethod
    def homogeneous(cls, grid: TensorGrid) -> "DirichletBC":
        return cls(grid, np.zeros(int(grid.boundary_mask.sum())))

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = np.array(values, dtype=float).reshape(self.grid.counts)
        out[self.mask] = self.values
        return out


def power_cell_average(s, a, b):
    """Mean of ``|x|^s`` over ``[a, b]`` from the odd antiderivative ``sign(x)|x|^(s+1)/(s+1)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(s <= -1):
        raise ValueError(f"power average needs s > -1, got {s}")
    if np.any(b <= a):
        raise ValueError("need b > a")
    if np.all(s == 0):
        out = np.ones(np.broadcast(a, b).shape)
        return out if out.ndim else float(out)

    def prim(x):
        return np.sign(x) * np.abs(x) ** (s + 1.0) / (s + 1.0)

    out = (prim(b) - prim(a)) / (b - a)
    return out if np.ndim(out) else float(out)


_GAUSS_POINTS = 8


def _quadrature_cell_average(spec, grid: TensorGrid) -> np.ndarray:
    # x-block norm weights |x|_n^s are not separable: tensor Gauss-Legendre per cell
    t, wts = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    t, wts = 0.5 * (t + 1.0), 0.5 * wts
    d = grid.dim
    left = [ax[:-1] for ax in grid.axes]
    h = grid.spacing
    out = np.zeros((d,) + grid.cell_shape)
    n = spec.n
    sub_shape = grid.cell_shape[:n]
    lows = np.meshgrid(*left[:n], indexing="ij")
    acc = np.zeros((d,) + sub_shape)
    for idx in np.ndindex(*(_GAUSS_POINTS,) * n):
        w = np.prod([wts[i] for i in idx])
        pts = [lows[j] + t[idx[j]] * h[j] for j in range(n)]
        r = np.sqrt(sum(p * p for p in pts))
        exps = (spec.alpha,) * n + spec.betas
        for k, e in enumerate(exps):
            acc[k] += w * r ** e
    expand = (Ellipsis,) + (None,) * (d - n)
    for k in range(d):
        out[k] = np.broadcast_to(acc[k][expand], grid.cell_shape)
    return out


def assemble_cell_weights(spec, grid: TensorGrid) -> np.ndarray:
    """Cell-averaged diagonal weights, shape ``(d, *cell_shape)``.

    Exact for product-type weights; the Grushin weights with a
    multi-dimensional first block use tensor Gauss quadrature.
    """
    if not isinstance(spec, DIAGONAL_KINDS):
        raise UnsupportedStructureError(f"{type(spec).__name__} cannot be discretized")
    if spec.dim != grid.dim:
        raise ValueError(f"structure has dimension {spec.dim}, grid has {grid.dim}")
    table = product_exponents(spec)
    if table is None:
        assert isinstance(spec, GeneralizedGrusin)
        return _quadrature_cell_average(spec, grid)
    d = grid.dim
    out = np.ones((d,) + grid.cell_shape)
    for j in range(d):
        ax = grid.axes[j]
        shape = [1] * d
        shape[j] = len(ax) - 1
        for k in range(d):
            s = table[k, j]
            if s == 0:
                continue
            avg = power_cell_average(s, ax[:-1], ax[1:])
            out[k] = out[k] * avg.reshape(shape)
    return out


def discrete_gradient(f: GridFunction, cell=None) -> np.ndarray:
    """Cell gradients, shape ``(d, *cell_shape)``, or the d-vector of one cell."""
    grid = f.grid
    g = np.stack([op @ f.flat for op in grid.gradient_operators])
    g = g.reshape((grid.dim,) + grid.cell_shape)
    if cell is None:
        return g
    return g[(slice(None),) + tuple(np.atleast_1d(cell))]


class DiscreteEnergy:
    """Discrete p-energy of ``spec`` on ``grid``.

    ``epsilon`` regularizes the integrand as ``(|g|_w^2 + eps^2)^(p/2)``.
    It defaults to 0 for ``p >= 2`` and to ``1e-8`` below, where it is
    mandatory.
    """

    def __init__(self, spec, p: float, grid: TensorGrid, epsilon: Optional[float] = None,
                 weights: Optional[np.ndarray] = None):
        if p <= 1:
            raise ValueError(f"need p > 1, got {p}")
        if epsilon is None:
            epsilon = 0.0 if p >= 2 else 1e-8
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if epsilon == 0 and p < 2:
            raise ValueError("p < 2 needs epsilon > 0")
        self.spec = spec
        self.p = float(p)
        self.grid = grid
        self.epsilon = float(epsilon)
        if weights is None:
            weights = assemble_cell_weights(spec, grid)
        self.weights = np.asarray(weights, dtype=float).reshape(grid.dim, -1)
        if np.any(self.weights < 0):
            raise ValueError("cell weights must be nonnegative")

    def __repr__(self):
        return (f"DiscreteEnergy(spec={self.spec!r}, p={self.p}, grid={self.grid!r}, "
                f"epsilon={self.epsilon})")

    def _values(self, f) -> np.ndarray:
        if isinstance(f, GridFunction):
            if f.grid is not self.grid and f.grid.counts != self.grid.counts:
                raise ValueError("grid function lives on a different grid")
            return f.flat
        x = np.asarray(f, dtype=float).reshape(-1)
        if x.size != self.grid.size:
            raise ValueError(f"{x.size} values for a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite values")
        return x

    def _cell_terms(self, x):
        g = np.stack([op @ x for op in self.grid.gradient_operators])
        s = np.sum(self.weights * g * g, axis=0) + self.epsilon ** 2
        return g, s

    def value(self, f) -> float:
        _, s = self._cell_terms(self._values(f))
        return float(self.grid.cell_volume / self.p * np.sum(s ** (self.p / 2.0)))

    def _power(self, s, e):
        # s^e with 0^e := 0 for e != 0 (only reached for eps = 0, p > 2, where the
        # factor multiplies a vanishing gradient)
        if e == 0:
            return np.ones_like(s)
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = s[pos] ** e
        return out

    def gradient(self, f) -> np.ndarray:
        """Exact partial derivatives ``dE_h/df_i`` as a flat array."""
        x = self._values(f)
        g, s = self._cell_terms(x)
        coef = self.grid.cell_volume * self._power(s, (self.p - 2.0) / 2.0)
        out = np.zeros_like(x)
        for k, op in enumerate(self.grid.gradient_operators):
            out += op.T @ (coef * self.weights[k] * g[k])
        return out

    def hessian(self, f) -> sp.csr_matrix:
        """Sparse Hessian of ``E_h`` (positive semi-definite)."""
        x = self._values(f)
        g, s = self._cell_terms(x)
        vol, p = self.grid.cell_volume, self.p
        base = vol * self._power(s, (p - 2.0) / 2.0)
        # rank-one part (p-2) s^((p-4)/2) (w g)(w g)^T, written with the bounded
        # unit vector w g / sqrt(s) to avoid inf * 0 at tiny s
        root = np.sqrt(s)
        safe = np.where(root > 0, root, 1.0)
        wg = np.where(root > 0, self.weights * g / safe, 0.0)
        ops = self.grid.gradient_operators
        h = None
        for k in range(self.grid.dim):
            for l in range(self.grid.dim):
                diag = (p - 2.0) * base * wg[k] * wg[l]
                if k == l:
                    diag = diag + base * self.weights[k]
                term = ops[k].T @ sp.diags(diag) @ ops[l]
                h = term if h is None else h + term
        return h.tocsr()

    def gradient_function(self, f) -> GridFunction:
        return GridFunction(self.grid, self.gradient(f))


def discrete_energy(E: DiscreteEnergy, f: GridFunction) -> float:
    return E.value(f)


def discrete_energy_gradient(E: DiscreteEnergy, f: GridFunction) -> GridFunction:
    return E.gradient_function(f)


def gradient_lp_norm(f: GridFunction, p: float, spec=None, weights=None) -> float:
    """``|| |grad_A f|_A ||_p`` by the same one-point cell quadrature as ``E_h``."""
    grid = f.grid
    if weights is None:
        weights = assemble_cell_weights(spec, grid)
    weights = np.asarray(weights).reshape(grid.dim, -1)
    g = np.stack([op @ f.flat for op in grid.gradient_operators])
    s = np.sum(weights * g * g, axis=0)
    if np.isinf(p):
        return float(np.sqrt(s.max()))
    return float((grid.cell_volume * np.sum(s ** (p / 2.0))) ** (1.0 / p))


def trapezoid_weights(grid: TensorGrid) -> np.ndarray:
    """Tensor trapezoidal quadrature weights, shape ``counts``."""
    w = np.ones(())
    for c, h in zip(grid.counts, grid.spacing):
        w1 = np.full(c, h)
        w1[0] = w1[-1] = h / 2
        w = np.multiply.outer(w, w1)
    return w


def lq_norm(f: GridFunction, q: float) -> float:
    """Trapezoidal ``L^q`` norm; ``q = inf`` gives the nodal maximum."""
    if q < 1:
        raise ValueError(f"need q >= 1, got {q}")
    a = np.abs(f.values)
    if np.isinf(q):
        return float(a.max())
    w = trapezoid_weights(f.grid)
    return float(np.sum(w * a ** q) ** (1.0 / q))
