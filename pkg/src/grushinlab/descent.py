"""Minimization of smooth convex objectives on the free nodes of a grid.

Two methods share one driver:

``"bb"``
    gradient descent with Barzilai-Borwein step lengths, safeguarded by
    Armijo backtracking on the objective (monotone).
``"newton"``
    damped Newton with the exact sparse Hessian and the same backtracking.

Both stop when ``residual(x, grad) <= tol``. Near convergence the objective
decrease can drop below floating-point resolution; a step is then accepted
if the objective has not increased beyond roundoff and the residual fell.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["DescentResult", "minimize", "ConvergenceError"]

_ARMIJO = 1e-4
_MAX_HALVINGS = 60
_STEP_MIN, _STEP_MAX = 1e-20, 1e20


class ConvergenceError(RuntimeError):
    """Raised when the tolerance is not met; ``result`` holds the best iterate."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


def _roundoff(a: float, b: float) -> float:
    return 64 * np.finfo(float).eps * max(abs(a), abs(b), 1e-300)


def minimize(value: Callable, grad: Callable, x0: np.ndarray, *, tol: float,
             residual: Optional[Callable] = None, hess: Optional[Callable] = None,
             method: str = "bb", max_iters: int = 10 ** 6, record: bool = False,
             raise_on_failure: bool = False) -> DescentResult:
    """Minimize ``value`` from ``x0`` until ``residual(x, g) <= tol``.

    ``residual`` defaults to the sup-norm of the gradient.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method not in ("bb", "newton"):
        raise ValueError(f"unknown method {method!r}")
    if method == "newton" and hess is None:
        raise ValueError("newton needs a Hessian")
    if residual is None:
        def residual(_, g):
            return float(np.max(np.abs(g))) if g.size else 0.0

    x = np.array(x0, dtype=float)
    f, g = value(x), grad(x)
    res = residual(x, g)
    history = [f] if record else []
    step = None
    it = 0
    converged = res <= tol
    while not converged and it < max_iters:
        if method == "bb":
            d = -g
            if step is None:
                gn = math.sqrt(float(g @ g))
                step = 1.0 / gn if gn > 0 else 1.0
            t = step
        else:
            d = _newton_direction(hess(x), g)
            t = 1.0
        slope = float(g @ d)
        if slope >= 0:
            d, slope = -g, -float(g @ g)
        accepted = False
        for _ in range(_MAX_HALVINGS):
            x_new = x + t * d
            f_new = value(x_new)
            if f_new <= f + _ARMIJO * t * slope:
                g_new = grad(x_new)
                accepted = True
                break
            if f_new - f <= _roundoff(f, f_new):
                g_new = grad(x_new)
                if residual(x_new, g_new) < res:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        it += 1
        if method == "bb":
            s, y = x_new - x, g_new - g
            sy = float(s @ y)
            if sy > 0:
                # alternate the two BB step lengths
                step = float(s @ s) / sy if it % 2 else sy / float(y @ y)
                step = min(max(step, _STEP_MIN), _STEP_MAX)
            else:
                step = min(2 * t, _STEP_MAX)
        x, f, g = x_new, f_new, g_new
        res = residual(x, g)
        if record:
            history.append(f)
        converged = res <= tol
    result = DescentResult(x, f, res, it, converged, history)
    if raise_on_failure and not converged:
        raise ConvergenceError(f"no convergence after {it} iterations (residual {res:.3e})",
                               result)
    return result


def _newton_direction(h, g: np.ndarray) -> np.ndarray:
    h = sp.csc_matrix(h)
    diag = h.diagonal()
    scale = float(np.max(np.abs(diag))) if diag.size else 1.0
    mu = 1e-14 * (scale if scale > 0 else 1.0)
    for _ in range(8):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.MatrixRankWarning)
            try:
                d = spla.spsolve(h + mu * sp.identity(h.shape[0], format="csc"), -g)
            except RuntimeError:
                d = None
        if d is not None and np.all(np.isfinite(d)) and float(g @ d) < 0:
            return d
        mu *= 1e4
    return -g
