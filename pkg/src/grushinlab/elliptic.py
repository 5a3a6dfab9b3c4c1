"""Discrete (A, p)-harmonic functions and the continuity dichotomy.

A Dirichlet problem is solved by minimizing ``E_h`` over the interior node
values; the stationarity condition is the discrete weak formulation tested
against nodal hat functions. For the 1D weight ``|x|^alpha`` on ``[-1, 1]``
with data ``-1, +1`` the continuum solution is ``sign(x)|x|^(1 - alpha p'/2)``
below the threshold ``alpha < 2/p'``; from the threshold on every bit of
variation collapses into the interface.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .descent import ConvergenceError, minimize
from .discretization import DirichletBC, DiscreteEnergy, GridFunction, TensorGrid, build_grid
from .exponents import separation_threshold
from .structures import GeneralizedGrusin

__all__ = [
    "SolveOptions",
    "EllipticSolution",
    "ConvergenceError",
    "solve_dirichlet",
    "analytic_profile_1d",
    "weak_residual",
    "JumpRow",
    "jump_experiment",
    "jump_table_csv",
    "ladder_grid",
]


@dataclass
class SolveOptions:
    """``tol=None`` means ``1e-8`` times the largest boundary value (at least 1)."""

    tol: Optional[float] = None
    max_iters: int = 10 ** 6
    method: str = "bb"

    def __post_init__(self):
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.method not in ("bb", "newton"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class EllipticSolution:
    f: GridFunction
    iterations: int
    final_residual: float
    energy: float
    converged: bool
    tol: float
    energy_history: list = field(default_factory=list, repr=False)


def _interior_problem(E: DiscreteEnergy, full: np.ndarray, free: np.ndarray):
    def expand(z):
        x = full.copy()
        x[free] = z
        return x

    def value(z):
        return E.value(expand(z))

    def grad(z):
        return E.gradient(expand(z))[free]

    def hess(z):
        h = E.hessian(expand(z))
        return h[free][:, free]

    return expand, value, grad, hess


def _quadratic_start(E: DiscreteEnergy, bc: DirichletBC) -> np.ndarray:
    # weighted p = 2 solution with the same boundary data
    lin = DiscreteEnergy(E.spec, 2.0, E.grid, epsilon=0.0, weights=E.weights)
    full = bc.apply(np.zeros(E.grid.counts)).reshape(-1)
    free = ~E.grid.boundary_mask.reshape(-1)
    _, _, grad, hess = _interior_problem(lin, full, free)
    z0 = np.zeros(int(free.sum()))
    full[free] = spla.spsolve(hess(z0).tocsc(), -grad(z0))
    return full


def solve_dirichlet(E: DiscreteEnergy, bc: DirichletBC, opts: Optional[SolveOptions] = None,
                    initial: Optional[GridFunction] = None, record: bool = False
                    ) -> EllipticSolution:
    """Minimize ``E_h`` subject to the boundary values in ``bc``.

    Raises :class:`ConvergenceError` (carrying the best iterate) when the
    interior gradient does not fall below the tolerance.
    """
    opts = opts or SolveOptions()
    if bc.grid.counts != E.grid.counts:
        raise ValueError("boundary data lives on a different grid")
    if E.p < 2 and E.epsilon <= 0:
        raise ValueError("p < 2 needs a regularized energy")
    scale = max(1.0, float(np.max(np.abs(bc.values))) if bc.values.size else 1.0)
    tol = opts.tol if opts.tol is not None else 1e-8 * scale
    free = ~E.grid.boundary_mask.reshape(-1)
    if initial is not None:
        full = bc.apply(initial.values).reshape(-1)
    elif opts.method == "newton":
        full = _quadratic_start(E, bc)
    else:
        full = bc.apply(np.zeros(E.grid.counts)).reshape(-1)
    expand, value, grad, hess = _interior_problem(E, full, free)
    res = minimize(value, grad, full[free], tol=tol, hess=hess, method=opts.method,
                   max_iters=opts.max_iters, record=record)
    sol = EllipticSolution(GridFunction(E.grid, expand(res.x)), res.iterations, res.residual,
                           res.value, res.converged, tol, res.history)
    if not res.converged:
        raise ConvergenceError(
            f"Dirichlet solve stopped after {res.iterations} iterations with residual "
            f"{res.residual:.3e} > {tol:.3e}", sol)
    return sol


def analytic_profile_1d(alpha: float, p: float, x):
    """``sign(x)|x|^(1 - alpha p'/2)``: the (A, p)-harmonic function on ``[-1, 1]``
    for the weight ``|x|^alpha`` with boundary values ``-1, +1``."""
    if p <= 1:
        raise ValueError(f"need p > 1, got {p}")
    t = separation_threshold(p)
    if not 0.0 <= alpha < t:
        raise ValueError(f"no continuous profile for alpha={alpha} >= 2/p' = {t}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1):
        raise ValueError("profile is defined on [-1, 1]")
    pp = p / (p - 1.0)
    out = np.sign(x) * np.abs(x) ** (1.0 - alpha * pp / 2.0)
    return out if out.ndim else float(out)


def weak_residual(E: DiscreteEnergy, f: GridFunction) -> float:
    """Sup over interior nodes of ``|dE_h/df_i|``."""
    g = E.gradient(f).reshape(E.grid.counts)
    interior = g[~E.grid.boundary_mask]
    return float(np.max(np.abs(interior))) if interior.size else 0.0


def ladder_grid(h: float, box=(-1.0, 1.0)) -> TensorGrid:
    """1D grid on ``box`` with spacing ``h`` (the box length must be a multiple of h)."""
    a, b = box
    cells = (b - a) / h
    n = int(round(cells))
    if n < 2 or abs(cells - n) > 1e-9 * n:
        raise ValueError(f"spacing {h} does not divide [{a}, {b}] into >= 2 cells")
    return build_grid([(a, b)], (n + 1,))


@dataclass
class JumpRow:
    h: float
    u_at_half: float
    central_gap: float
    residual_of_jump: float
    converged: bool = True
    solver_residual: float = float("nan")


def _grid_value(grid: TensorGrid, values: np.ndarray, x: float) -> float:
    ax = grid.axes[0]
    i = int(round((x - grid.box[0][0]) / grid.spacing[0]))
    if abs(ax[i] - x) <= 1e-9 * grid.spacing[0]:
        return float(values[i])
    return float(np.interp(x, ax, values))


def jump_experiment(p: float, alpha: float, ladder: Sequence[float],
                    opts: Optional[SolveOptions] = None, epsilon: Optional[float] = None,
                    jobs: int = 1) -> list:
    """Solve the ``-1 / +1`` problem on ``[-1, 1]`` for each spacing in ``ladder``.

    Each row records ``u_h(0.5)``, the gap ``u_h(h) - u_h(-h)`` across the
    two cells touching the origin, and the weak residual of ``sign(x)``.
    """
    ladder = [float(h) for h in ladder]
    if not ladder:
        raise ValueError("empty ladder")
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_jump_rung, [(p, alpha, h, opts, epsilon) for h in ladder]))
    else:
        rows = [_jump_rung((p, alpha, h, opts, epsilon)) for h in ladder]
    return rows


def _jump_rung(args) -> JumpRow:
    p, alpha, h, opts, epsilon = args
    grid = ladder_grid(h)
    if grid.counts[0] % 2 == 0:
        raise ValueError("ladder spacing must put a node at the origin")
    spec = GeneralizedGrusin(1, 0, alpha)
    E = DiscreteEnergy(spec, p, grid, epsilon=epsilon)
    bc = DirichletBC.from_function(grid, lambda x: np.sign(x))
    try:
        sol = solve_dirichlet(E, bc, opts)
        converged = True
    except ConvergenceError as err:
        sol, converged = err.result, False
    u = sol.f.values
    mid = grid.counts[0] // 2
    jump = GridFunction.from_function(grid, np.sign)
    return JumpRow(h, _grid_value(grid, u, 0.5), float(u[mid + 1] - u[mid - 1]),
                   weak_residual(E, jump), converged, sol.final_residual)


def jump_table_csv(rows: Sequence[JumpRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "u_at_half", "central_gap", "residual_of_jump"])
    for r in rows:
        w.writerow([repr(r.h), repr(r.u_at_half), repr(r.central_gap), repr(r.residual_of_jump)])
    return buf.getvalue()
