import math

import numpy as np
import pytest

from grushinlab.discretization import build_grid
from grushinlab.exponents import separation_threshold, structure_dimension
from grushinlab.inequalities import (BumpFamily, ScalingRule, energy_additivity_check,
                                     indicator_interface_energy, log_truncator,
                                     monomial_substitution_check, nash_ratio,
                                     scale_invariance_check, scaling_rule, sobolev_ratio,
                                     truncator_integral, truncator_turning_point)
from grushinlab.structures import GeneralizedGrusin, Identity, Monomial


def test_scaling_rules():
    assert scaling_rule(Identity(2)).sigmas == (1.0, 1.0)
    assert scaling_rule(GeneralizedGrusin(1, 1, 1.0, (2.0,))).sigmas == (1.0, 1.5)
    assert scaling_rule(Monomial((1.0,))).sigmas == (2.0,)
    with pytest.raises(ValueError):
        ScalingRule((1.0, 0.0))


def test_bump_family_support_and_sample():
    fam = BumpFamily.for_spec(GeneralizedGrusin(1, 1, 1.0, (2.0,)), radius=0.5)
    np.testing.assert_allclose(fam.support(4.0), [2.0, 0.5 * 4 ** 1.5])
    g = build_grid([(-3, 3), (-5, 5)], (31, 31))
    f = fam.sample(g, 4.0)
    assert f.values.max() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BumpFamily((1.0,), ScalingRule((1.0, 1.0)))


@pytest.mark.parametrize("structure", [Identity(2), GeneralizedGrusin(1, 1, 1.0, (2.0,)),
                                       Monomial((1.0, 0.5))], ids=lambda s: type(s).__name__)
def test_nash_quotient_is_dilation_invariant_at_true_dimension(structure):
    rep = scale_invariance_check(structure, counts=(129, 129))
    assert rep.passed
    assert rep.extra["spread"] < 1e-8
    assert abs(rep.measured_exponent) < 1e-8


@pytest.mark.parametrize("shift", [-0.5, 0.5])
def test_nash_quotient_drifts_at_wrong_dimension(shift):
    spec = GeneralizedGrusin(1, 1, 1.0, (2.0,))
    rep = scale_invariance_check(spec, D=structure_dimension(spec) + shift, counts=(129, 129))
    assert not rep.passed
    assert rep.extra["spread"] > 0.02


def test_sobolev_quotient_is_dilation_invariant():
    spec = Monomial((1.0, 0.5))
    rep = scale_invariance_check(spec, p=2, kind="sobolev", counts=(129, 129))
    assert rep.passed


def test_shared_box_must_hold_every_support():
    with pytest.raises(ValueError):
        scale_invariance_check(Identity(1), box=[(-1.5, 1.5)])
    rep = scale_invariance_check(Identity(1), box=[(-4.5, 4.5)], counts=(8193,))
    assert rep.passed


def test_quotients_reject_zero():
    g = build_grid([(-1, 1)], 11)
    from grushinlab.discretization import GridFunction

    with pytest.raises(ValueError):
        nash_ratio(Identity(1), GridFunction.zeros(g))
    with pytest.raises(ValueError):
        sobolev_ratio(Identity(3), GridFunction.zeros(build_grid([(-1, 1)] * 3, 5)), 2)


def test_truncator_reference_value():
    assert truncator_integral(1e6, 2, 1.5) == pytest.approx(0.0104679, rel=1e-5)


def test_truncator_matches_quadrature():
    from scipy.integrate import quad

    for p, a, n in [(2, 0.5, 50), (3, 1.2, 1e3), (2, 1.0, 1e4)]:
        e = p * (a / 2 - 1)
        val, _ = quad(lambda r: r ** e, 1 / n, 1, limit=200)
        assert truncator_integral(n, p, a) == pytest.approx(val / math.log(n) ** p, rel=1e-8)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_truncator_decreases_from_threshold_on(p):
    t = separation_threshold(p)
    ns = np.logspace(0.5, 8, 40)
    for a in (t, 0.5 * (t + 2), min(1.99, t + 0.3)):
        vals = [truncator_integral(n, p, a) for n in ns]
        assert np.all(np.diff(vals) < 0)
        assert truncator_turning_point(p, a) == math.inf


@pytest.mark.parametrize("p,alpha", [(2, 0.0), (2, 0.5), (3, 0.8)])
def test_truncator_turns_below_threshold(p, alpha):
    n_star = truncator_turning_point(p, alpha)
    assert math.isfinite(n_star)
    eps = 1e-3
    left = truncator_integral(n_star * (1 - eps), p, alpha)
    mid = truncator_integral(n_star, p, alpha)
    right = truncator_integral(n_star * (1 + eps), p, alpha)
    assert mid <= left and mid <= right


def test_truncator_blows_up_far_below_threshold():
    assert truncator_integral(1e6, 2, 0.0) > 1e3
    assert truncator_integral(1e6, 3, 0.0) > 1e3


def test_log_truncator_shape():
    x = np.array([-1.0, 0.0, 1e-4, 0.01, 0.1, 1.0, 2.0])
    chi = log_truncator(x, 100)
    np.testing.assert_allclose(chi, [0, 0, 0, 0, 0.5, 1, 1], atol=1e-14)


def test_indicator_energy_exponent():
    hs = 2.0 ** -np.arange(4, 12)
    for p, a in [(2, 0.5), (2, 1.5), (3, 1.6)]:
        vals = [indicator_interface_energy(p, a, h) for h in hs]
        slope = np.polyfit(np.log(hs), np.log(vals), 1)[0]
        assert slope == pytest.approx(1 + p * a / 2 - p, abs=1e-10)


@pytest.mark.parametrize("p,alpha", [(2, 1.25), (2, 1.5), (3, 1.6)])
def test_additivity_defect_vanishes_above_threshold(p, alpha):
    rep = energy_additivity_check(p, alpha)
    assert rep.passed
    assert rep.measured_exponent == pytest.approx(rep.params["expected_exponent"], abs=0.01)


def test_additivity_defect_grows_below_threshold():
    rep = energy_additivity_check(2, 0.5)
    assert not rep.passed
    assert rep.measured_exponent < 0


def test_additivity_truncators_need_resolution():
    with pytest.raises(ValueError):
        energy_additivity_check(2, 1.5, ladder=(2 ** -4, 2 ** -5), n_values=(64,))


def test_additivity_truncated_sums_reported():
    rep = energy_additivity_check(2, 1.5)
    gaps = [t["gap_to_split"] for t in rep.extra["truncators"]]
    assert len(gaps) == 4 and all(g >= 0 for g in gaps)


@pytest.mark.parametrize("alphas", [(1.0,), (0.5,), (1.0, 0.5), (0.0, 1.2)])
def test_monomial_substitution_exact_cases(alphas):
    rep = monomial_substitution_check(alphas, p=2, nodes=1025 if len(alphas) == 1 else 257)
    assert rep.passed
    assert rep.extra["discrepancy"] < 1e-4


def test_monomial_substitution_one_variable_any_p():
    rep = monomial_substitution_check((1.0,), p=3, nodes=2049)
    assert rep.passed


def test_monomial_substitution_within_norm_constants():
    rep = monomial_substitution_check((1.0, 0.5), p=3, nodes=257)
    assert rep.passed


def test_monomial_substitution_rejects_bad_support():
    with pytest.raises(ValueError):
        monomial_substitution_check((1.0,), center=0.2, radius=0.5)
    with pytest.raises(ValueError):
        monomial_substitution_check((2.0,))
    monomial_substitution_check((0.0,), center=0.0, radius=0.5, nodes=257)
