import math

import numpy as np
import pytest

from grushinlab.discretization import DirichletBC, DiscreteEnergy, GridFunction, build_grid
from grushinlab.elliptic import (ConvergenceError, SolveOptions, analytic_profile_1d,
                                 jump_experiment, jump_table_csv, ladder_grid, solve_dirichlet,
                                 weak_residual)
from grushinlab.structures import GeneralizedGrusin, Identity, Monomial


def _unit_interval(n=33):
    g = build_grid([(0, 1)], n)
    return g, DirichletBC.from_function(g, lambda x: x)


@pytest.mark.parametrize("method", ["bb", "newton"])
@pytest.mark.parametrize("p", [2, 4])
def test_linear_solution_in_1d(method, p):
    g, bc = _unit_interval()
    sol = solve_dirichlet(DiscreteEnergy(Identity(1), p, g), bc, SolveOptions(method=method))
    np.testing.assert_allclose(sol.f.values, g.axes[0], atol=1e-8)
    assert sol.final_residual <= sol.tol
    np.testing.assert_array_equal(sol.f.values[[0, -1]], [0.0, 1.0])


def test_small_p_regularized_solve():
    g, bc = _unit_interval(17)
    E = DiscreteEnergy(Identity(1), 1.5, g, epsilon=1e-6)
    sol = solve_dirichlet(E, bc, SolveOptions(method="newton"))
    np.testing.assert_allclose(sol.f.values, g.axes[0], atol=1e-7)


def test_profile_oracles():
    assert analytic_profile_1d(0, 2, 0.5) == pytest.approx(0.5)
    assert analytic_profile_1d(0.5, 2, 0.5) == pytest.approx(2 ** -0.5)
    assert analytic_profile_1d(0.5, 2, -0.5) == pytest.approx(-(2 ** -0.5))
    with pytest.raises(ValueError):
        analytic_profile_1d(1, 2, 0.3)
    with pytest.raises(ValueError):
        analytic_profile_1d(0.2, 2, 1.5)


def test_continuous_regime_matches_profile():
    g = build_grid([(-1, 1)], 2049)
    E = DiscreteEnergy(GeneralizedGrusin(1, 0, 0.5), 2, g)
    sol = solve_dirichlet(E, DirichletBC.from_function(g, np.sign), SolveOptions(method="newton"))
    assert abs(sol.f.values[1536] - 2 ** -0.5) <= 1e-2
    assert weak_residual(E, sol.f) <= sol.tol


def test_p3_profile_below_threshold():
    # threshold 4/3; exponent 1 - alpha p'/2 = 1 - 0.75 * 0.5 = 0.625
    g = ladder_grid(2 ** -9)
    E = DiscreteEnergy(GeneralizedGrusin(1, 0, 0.5), 3, g)
    sol = solve_dirichlet(E, DirichletBC.from_function(g, np.sign), SolveOptions(method="newton"))
    x = g.axes[0]
    err = np.max(np.abs(sol.f.values - analytic_profile_1d(0.5, 3, x)))
    assert err <= 3e-2


def test_energy_descends_with_bb():
    g = build_grid([(-1, 1)], 65)
    E = DiscreteEnergy(GeneralizedGrusin(1, 0, 0.5), 3, g)
    sol = solve_dirichlet(E, DirichletBC.from_function(g, np.sign), record=True)
    hist = sol.energy_history
    assert len(hist) == sol.iterations + 1
    assert all(b <= a + 1e-14 * abs(a) for a, b in zip(hist, hist[1:]))


def test_nonconvergence_reports_best_iterate():
    g = build_grid([(-1, 1)], 129)
    E = DiscreteEnergy(GeneralizedGrusin(1, 0, 0.5), 2, g)
    with pytest.raises(ConvergenceError) as info:
        solve_dirichlet(E, DirichletBC.from_function(g, np.sign), SolveOptions(max_iters=5))
    sol = info.value.result
    assert sol.iterations == 5 and sol.final_residual > sol.tol and not sol.converged


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(tol=0)
    with pytest.raises(ValueError):
        SolveOptions(method="lbfgs")
    g, _ = _unit_interval()
    other = build_grid([(0, 1)], 9)
    with pytest.raises(ValueError):
        solve_dirichlet(DiscreteEnergy(Identity(1), 2, g), DirichletBC.homogeneous(other))


@pytest.mark.parametrize("p", [2, 3])
def test_comparison_principle(p):
    g = build_grid([(-1, 1), (0, 1)], (13, 9))
    E = DiscreteEnergy(GeneralizedGrusin(1, 1, 0.5, (1.0,)), p, g)
    low = DirichletBC.from_function(g, lambda x, y: np.sin(3 * x) + y)
    high = DirichletBC.from_function(g, lambda x, y: np.sin(3 * x) + y + 0.2 * (1 + x * x))
    opts = SolveOptions(method="newton")
    f1, f2 = solve_dirichlet(E, low, opts).f, solve_dirichlet(E, high, opts).f
    assert np.all(f1.values <= f2.values + 1e-8)


def test_odd_data_gives_odd_solution():
    g = build_grid([(-1, 1)], 101)
    for p in (2, 3):
        E = DiscreteEnergy(GeneralizedGrusin(1, 0, 0.8), p, g)
        sol = solve_dirichlet(E, DirichletBC.from_function(g, np.sign), SolveOptions(method="newton"))
        np.testing.assert_allclose(sol.f.values, -sol.f.values[::-1], atol=sol.tol)


def test_flux_constant_in_1d():
    g = build_grid([(-1, 1)], 129)
    for p in (2, 3):
        E = DiscreteEnergy(GeneralizedGrusin(1, 0, 1.2), p, g)
        sol = solve_dirichlet(E, DirichletBC.from_function(g, np.sign), SolveOptions(method="newton"))
        slope = np.diff(sol.f.values) / g.spacing[0]
        # d/dg of (w g^2)^(p/2) / p
        flux = E.weights[0] ** (p / 2) * np.abs(slope) ** (p - 2) * slope
        assert np.ptp(flux) <= 10 * sol.tol


def test_two_dimensional_weighted_solve_residual():
    g = build_grid([(-1, 1), (-1, 1)], (17, 17))
    E = DiscreteEnergy(Monomial((1.0, 0.5)), 3, g)
    bc = DirichletBC.from_function(g, lambda x, y: x * y + x)
    sol = solve_dirichlet(E, bc, SolveOptions(method="newton"))
    assert weak_residual(E, sol.f) <= sol.tol
    bb = solve_dirichlet(E, bc, SolveOptions(method="bb"))
    np.testing.assert_allclose(bb.f.values, sol.f.values, atol=1e-5)


def test_jump_residual_scaling():
    for alpha, expo in ((1.5, 0.5), (0.5, -0.5)):
        res = []
        for k in (6, 7, 8, 9):
            g = ladder_grid(2.0 ** -k)
            E = DiscreteEnergy(GeneralizedGrusin(1, 0, alpha), 2, g)
            res.append(weak_residual(E, GridFunction.from_function(g, np.sign)))
        ratios = np.array(res[1:]) / np.array(res[:-1])
        np.testing.assert_allclose(ratios, 2.0 ** -expo, rtol=1e-9)


def test_jump_experiment_trends():
    ladder = [2.0 ** -k for k in range(5, 9)]
    opts = SolveOptions(method="newton")
    cont = jump_experiment(2, 0.5, ladder, opts)
    assert abs(cont[-1].u_at_half - 2 ** -0.5) <= 1e-2
    sep = jump_experiment(2, 1.5, ladder, opts)
    vals = [r.u_at_half for r in sep]
    assert all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] > 0.97
    thr = [r.u_at_half for r in jump_experiment(2, 1.0, ladder, opts)]
    assert all(b > a for a, b in zip(thr, thr[1:]))
    # logarithmic approach: the threshold case trails the separated one
    assert thr[-1] < vals[-1]


def test_jump_experiment_parallel_matches_serial():
    ladder = [2.0 ** -k for k in range(4, 7)]
    opts = SolveOptions(method="newton")
    assert jump_table_csv(jump_experiment(2, 1.5, ladder, opts, jobs=2)) == \
        jump_table_csv(jump_experiment(2, 1.5, ladder, opts))


def test_jump_table_format():
    rows = jump_experiment(2, 1.5, [0.25, 0.125], SolveOptions(method="newton"))
    lines = jump_table_csv(rows).splitlines()
    assert lines[0] == "h,u_at_half,central_gap,residual_of_jump"
    assert len(lines) == 3 and float(lines[1].split(",")[0]) == 0.25


def test_ladder_grid_requires_divisor():
    assert ladder_grid(0.25).counts == (9,)
    with pytest.raises(ValueError):
        ladder_grid(0.3)
    with pytest.raises(ValueError):
        jump_experiment(2, 1.5, [])
