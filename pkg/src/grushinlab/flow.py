"""Proximal implicit-Euler realization of the Dirichlet p-Laplace semigroup.

One step maps ``u`` to the minimizer of

    1/2 ||v - u||_M^2 + tau * E_h(v),      v = 0 on the boundary,

where ``M`` is the lumped (trapezoidal) mass. With this mass the
stationarity condition reads ``v - u + tau M^-1 grad E_h(v) = 0``, and for
``p = 2`` it is the backward Euler step ``(I + tau L_h) v = u`` of the
weighted second-difference operator. Convexity of ``E_h`` makes every step
a contraction, so the discrete flow inherits the semigroup contracts
without a CFL restriction.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .descent import ConvergenceError, minimize
from .discretization import (DiscreteEnergy, GridFunction, TensorGrid, lq_norm,
                             trapezoid_weights)
from .elliptic import ladder_grid
from .discretization import build_grid
from .exponents import lq_decay_rate, structure_dimension
from .structures import GeneralizedGrusin

__all__ = [
    "FlowOptions",
    "FlowTrace",
    "ConvergenceError",
    "ProximalStepper",
    "proximal_step",
    "prox_residual",
    "flow_states",
    "evolve",
    "decay_slope",
    "decay_report",
    "decay_experiment",
    "bump",
    "ConfinementRow",
    "support_confinement",
    "confinement_table_csv",
]


@dataclass
class FlowOptions:
    """Time stepping and inner-solver settings.

    ``record_times`` are rounded to the nearest step; ``None`` records
    every step (including ``t = 0``).
    """

    tau: float
    t_end: float
    record_times: Optional[Sequence[float]] = None
    inner_tol: float = 1e-10
    inner_max_iters: int = 200
    method: str = "newton"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")
        if self.record_times is not None:
            rt = [float(t) for t in self.record_times]
            if any(b <= a for a, b in zip(rt, rt[1:])):
                raise ValueError("record_times must be strictly increasing")
            if rt and (rt[0] < 0 or rt[-1] > self.t_end + 0.5 * self.tau):
                raise ValueError("record_times must lie in [0, t_end]")
            self.record_times = rt

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.tau))


@dataclass
class FlowTrace:
    times: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    mass_plus: list = field(default_factory=list)
    mass_minus: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    final: Optional[GridFunction] = field(default=None, repr=False)
    complete: bool = True

    COLUMNS = ("t", "l1", "l2", "linf", "mass_plus", "mass_minus", "energy")

    def append(self, t: float, u: GridFunction, E: DiscreteEnergy):
        plus, minus = half_masses(u)
        self.times.append(float(t))
        self.l1.append(lq_norm(u, 1))
        self.l2.append(lq_norm(u, 2))
        self.linf.append(lq_norm(u, math.inf))
        self.mass_plus.append(plus)
        self.mass_minus.append(minus)
        self.energy.append(E.value(u))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        cols = [self.times, self.l1, self.l2, self.linf, self.mass_plus, self.mass_minus,
                self.energy]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def half_masses(u: GridFunction) -> tuple:
    """L1 mass of ``u`` on ``{x_1 > 0}`` and on ``{x_1 < 0}`` (trapezoid weights).

    Nodes on ``x_1 = 0`` belong to neither half.
    """
    w = trapezoid_weights(u.grid) * np.abs(u.values)
    x1 = u.grid.axes[0].reshape((-1,) + (1,) * (u.grid.dim - 1))
    x1 = np.broadcast_to(x1, u.grid.counts)
    return float(np.sum(w[x1 > 0])), float(np.sum(w[x1 < 0]))


def _interior_mass(grid: TensorGrid, free: np.ndarray) -> np.ndarray:
    return trapezoid_weights(grid).reshape(-1)[free]


def prox_residual(E: DiscreteEnergy, u: GridFunction, v: GridFunction, tau: float) -> float:
    """Sup over interior nodes of ``|v - u + tau M^-1 grad E_h(v)|``."""
    free = ~E.grid.boundary_mask.reshape(-1)
    m = _interior_mass(E.grid, free)
    r = (v.flat - u.flat)[free] + tau * E.gradient(v)[free] / m
    return float(np.max(np.abs(r))) if r.size else 0.0


class ProximalStepper:
    """Resolvent of ``tau * grad E_h`` under the lumped mass, reusable across steps.

    For ``p = 2`` without regularization the step is linear and a sparse LU
    factorization of ``M + tau K`` is computed once; every other case runs
    damped Newton (or BB) from the previous state. Either way the result is
    accepted only when :func:`prox_residual` is below ``tol``.
    """

    def __init__(self, E: DiscreteEnergy, tau: float, tol: float = 1e-10,
                 max_iters: int = 200, method: str = "newton"):
        if not tau > 0:
            raise ValueError("tau must be positive")
        if not tol > 0:
            raise ValueError("tol must be positive")
        self.E, self.tau, self.tol = E, float(tau), float(tol)
        self.max_iters, self.method = max_iters, method
        grid = E.grid
        self.free = ~grid.boundary_mask.reshape(-1)
        self.m = _interior_mass(grid, self.free)
        self._lu = None
        if E.p == 2.0 and E.epsilon == 0.0:
            K = E.hessian(np.zeros(grid.size))[self.free][:, self.free]
            self._lu = spla.splu((sp.diags(self.m) + self.tau * K).tocsc())

    def _expand(self, z):
        x = np.zeros(self.E.grid.size)
        x[self.free] = z
        return x

    def __call__(self, u: GridFunction) -> GridFunction:
        E, grid, free, m, tau = self.E, self.E.grid, self.free, self.m, self.tau
        if u.grid.counts != grid.counts:
            raise ValueError("state lives on a different grid")
        bnd = np.abs(u.values[grid.boundary_mask])
        # boundary values at roundoff level (e.g. cos(pi/2)) count as zero
        if bnd.size and bnd.max() > 1e-12 * max(1.0, float(np.abs(u.values).max())):
            raise ValueError("proximal steps need homogeneous Dirichlet data")
        u_in = u.flat[free]
        z0 = u_in
        if self._lu is not None:
            z0 = self._lu.solve(m * u_in)

        def value(z):
            dz = z - u_in
            return 0.5 * float(np.sum(m * dz * dz)) + tau * E.value(self._expand(z))

        def grad(z):
            return m * (z - u_in) + tau * E.gradient(self._expand(z))[free]

        def hess(z):
            return sp.diags(m) + tau * E.hessian(self._expand(z))[free][:, free]

        def residual(_, g):
            return float(np.max(np.abs(g / m))) if g.size else 0.0

        res = minimize(value, grad, np.array(z0), tol=self.tol, residual=residual,
                       hess=hess, method=self.method, max_iters=self.max_iters)
        v = GridFunction(grid, self._expand(res.x))
        if not res.converged:
            raise ConvergenceError(
                f"proximal step stopped after {res.iterations} iterations with residual "
                f"{res.residual:.3e} > {self.tol:.3e}", v)
        return v


def proximal_step(E: DiscreteEnergy, u: GridFunction, tau: float, tol: float = 1e-10,
                  max_iters: int = 200, method: str = "newton") -> GridFunction:
    """Resolvent step ``argmin_v 1/2 ||v - u||_M^2 + tau E_h(v)`` with ``v = 0`` on the boundary.

    Raises :class:`ConvergenceError` (carrying the last iterate) when
    :func:`prox_residual` stays above ``tol``.
    """
    return ProximalStepper(E, tau, tol, max_iters, method)(u)


def flow_states(E: DiscreteEnergy, u0: GridFunction, opts: FlowOptions
                ) -> Iterator[tuple]:
    """Yield ``(t_k, u_k)`` for ``k = 0 .. n_steps``."""
    step = ProximalStepper(E, opts.tau, opts.inner_tol, opts.inner_max_iters, opts.method)
    u = GridFunction(E.grid, u0.values)
    yield 0.0, u
    for k in range(1, opts.n_steps + 1):
        u = step(u)
        yield k * opts.tau, u


def evolve(E: DiscreteEnergy, u0: GridFunction, opts: FlowOptions) -> FlowTrace:
    """Run the flow to ``t_end`` and record norms, half masses and energy.

    An inner-solver failure re-raises as :class:`ConvergenceError` whose
    ``result`` is the partial trace (``complete=False``).
    """
    if opts.record_times is None:
        wanted = None
    else:
        wanted = {int(round(t / opts.tau)) for t in opts.record_times}
    trace = FlowTrace()
    k = 0
    try:
        for k, (t, u) in enumerate(flow_states(E, u0, opts)):
            if wanted is None or k in wanted:
                trace.append(t, u, E)
            trace.final = u
    except ConvergenceError as err:
        trace.complete = False
        raise ConvergenceError(f"flow stopped at step {k + 1}: {err}", trace) from err
    return trace


def decay_slope(trace: FlowTrace, q: float = 1.0, window=(0.01, 0.1)) -> float:
    """Least-squares slope of ``log ||u(t)||_inf`` against ``log t`` inside ``window``.

    ``q`` names the data norm the slope is compared against; the fit itself
    only uses the sup norm.
    """
    lo, hi = window
    t = np.asarray(trace.times, dtype=float)
    y = np.asarray(trace.linf, dtype=float)
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12)) & (t > 0) & (y > 0)
    if int(sel.sum()) < 5:
        raise ValueError(f"need at least 5 samples in the window {list(window)}, "
                         f"got {int(sel.sum())}")
    slope, _ = np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)
    return float(slope)


def decay_report(trace: FlowTrace, p: float, D: float, q: float = 1.0,
                 window=(0.01, 0.1)) -> dict:
    return {"q": float(q), "window": [float(window[0]), float(window[1])],
            "slope": decay_slope(trace, q, window),
            "predicted_delta": lq_decay_rate(p, D, q)}


def decay_experiment(p: float, alpha: float, h: float, radius: float, height: float = 1.0,
                     tau: float = 1e-4, box=(-20.0, 20.0), window=(0.01, 0.1),
                     n_records: int = 11, q: float = 1.0, inner_tol: float = 1e-10) -> tuple:
    """Evolve a centred bump under the 1D weight ``|x|^alpha`` and fit the sup-norm decay.

    Records ``n_records`` log-spaced times across ``window``; returns
    ``(trace, report)`` with the report from :func:`decay_report`.
    """
    a, b = box
    n = int(round((b - a) / h))
    grid = build_grid([(a, b)], (n + 1,))
    spec = GeneralizedGrusin(1, 0, alpha)
    E = DiscreteEnergy(spec, p, grid)
    u0 = bump(grid, [0.5 * (a + b)], [radius], height)
    steps = np.unique(np.round(np.geomspace(window[0], window[1], n_records) / tau))
    times = [float(k * tau) for k in steps]
    opts = FlowOptions(tau=tau, t_end=times[-1], record_times=times, inner_tol=inner_tol)
    trace = evolve(E, u0, opts)
    return trace, decay_report(trace, p, structure_dimension(spec), q, window)


def bump(grid: TensorGrid, center: Sequence[float], radius: Sequence[float],
         height: float = 1.0) -> GridFunction:
    """Quartic bump ``height * prod max(0, 1 - ((x_k - c_k)/r_k)^2)^2``."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (grid.dim,))
    vals = np.full(grid.counts, float(height))
    for x, c, r in zip(grid.mesh(), center, radius):
        vals = vals * np.maximum(0.0, 1.0 - ((x - c) / r) ** 2) ** 2
    return GridFunction(grid, vals)


@dataclass
class ConfinementRow:
    h: float
    mass_minus: float
    mass_plus: float
    converged: bool = True


def _confinement_rung(args) -> ConfinementRow:
    p, spec, h, t_end, tau, center, radius, box = args
    grid = ladder_grid(h, box)
    E = DiscreteEnergy(spec, p, grid)
    u0 = bump(grid, [center], [radius])
    opts = FlowOptions(tau=tau, t_end=t_end, record_times=[t_end])
    try:
        trace = evolve(E, u0, opts)
        converged = True
        final = trace.final
    except ConvergenceError as err:
        final, converged = err.result.final, False
    plus, minus = half_masses(final)
    return ConfinementRow(h, minus, plus, converged)


def support_confinement(p: float, alpha: float, ladder: Sequence[float], t_end: float = 0.1,
                        tau: float = 1e-3, center: float = 0.5, radius: float = 0.25,
                        box=(-1.0, 1.0), spec=None, jobs: int = 1) -> list:
    """Mass reaching ``{x_1 < 0}`` by ``t_end`` from a bump inside ``{x_1 > 0}``.

    One flow per spacing in ``ladder``; ``spec`` overrides the default 1D
    weight ``|x|^alpha``.
    """
    if center - radius < 0:
        raise ValueError("initial bump must vanish on x_1 <= 0")
    if spec is None:
        spec = GeneralizedGrusin(1, 0, alpha)
    ladder = [float(h) for h in ladder]
    if not ladder:
        raise ValueError("empty ladder")
    tasks = [(p, spec, h, t_end, tau, center, radius, tuple(box)) for h in ladder]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_confinement_rung, tasks))
    return [_confinement_rung(t) for t in tasks]


def confinement_table_csv(rows: Sequence[ConfinementRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "mass_minus", "mass_plus"])
    for r in rows:
        w.writerow([repr(r.h), repr(r.mass_minus), repr(r.mass_plus)])
    return buf.getvalue()
