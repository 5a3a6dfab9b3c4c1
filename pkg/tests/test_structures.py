import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grushinlab.structures import (GeneralizedGrusin, Heisenberg, HyperplaneDistance, Identity,
                                   Monomial, PoincareHalfPlane, UnsupportedStructureError,
                                   carre_du_champ, degeneracy_bound, eval_matrix, eval_sqrt,
                                   grusin_distance_1d, gradient_norm, horizontal_gradient,
                                   spec_from_dict, spec_to_dict, verify_assumption1)

G112 = GeneralizedGrusin(1, 1, 0.0, (2.0,))


def test_eval_matrix_oracles():
    np.testing.assert_array_equal(eval_matrix(Identity(2), (5, -3)), np.eye(2))
    np.testing.assert_array_equal(eval_matrix(G112, (3, 7)), np.diag([1.0, 9.0]))
    np.testing.assert_array_equal(eval_matrix(Heisenberg(), (0, 0, 0)),
                                  np.diag([1.0, 1.0, 0.0]))


def test_eval_sqrt_oracles():
    np.testing.assert_array_equal(eval_sqrt(Identity(3), (1, 2, 3)), np.eye(3))
    np.testing.assert_allclose(eval_sqrt(G112, (3, 7)), np.diag([1.0, 3.0]))
    np.testing.assert_allclose(eval_sqrt(PoincareHalfPlane(), (2, 1)), np.diag([2.0, 2.0]))


def test_heisenberg_sqrt_squares_back():
    x = (0.3, -1.2, 4.0)
    b = eval_sqrt(Heisenberg(), x)
    np.testing.assert_allclose(b @ b, eval_matrix(Heisenberg(), x), atol=1e-12)


def test_gradient_oracles():
    np.testing.assert_array_equal(horizontal_gradient(Identity(2), (0, 0), (1, 2)), [1, 2])
    np.testing.assert_allclose(horizontal_gradient(G112, (3, 0.5), (1, 1)), [1, 9])
    np.testing.assert_allclose(horizontal_gradient(Monomial((1, 0)), (4, 1), (1, 2)), [4, 2])
    assert gradient_norm(Identity(2), (0, 0), (3, 4)) == pytest.approx(5)
    assert gradient_norm(G112, (2, -1), (1, 1)) == pytest.approx(math.sqrt(5))
    assert gradient_norm(Monomial((1, 0)), (4, 1), (1, 2)) == pytest.approx(math.sqrt(8))


def test_carre_du_champ_oracles():
    assert carre_du_champ(Identity(2), (0, 0), (1, 0)) == 1
    assert carre_du_champ(GeneralizedGrusin(1, 0, 1.0), (3,), (2,)) == pytest.approx(12)
    assert carre_du_champ(G112, (2, 5), (1, 1)) == pytest.approx(5)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_matrix(G112, (1, 2, 3))
    with pytest.raises(ValueError):
        gradient_norm(G112, (1, 2), (1,))


def test_degeneracy_bound_oracles():
    assert degeneracy_bound(Identity(2), (7, 7)) == 1
    assert degeneracy_bound(Monomial((1, 0.5)), (0.25, 4)) == pytest.approx(0.25)
    assert degeneracy_bound(Monomial((1, 0.5)), (0, 1)) == 0
    with pytest.raises(UnsupportedStructureError):
        degeneracy_bound(Heisenberg(), (0, 0, 0))


def test_assumption_check():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-3, 3, size=(100, 2))
    dirs = rng.normal(size=(100, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for spec in (Identity(2), Monomial((1, 0.5)), G112, HyperplaneDistance((1.0, 0.5), 0)):
        rep = verify_assumption1(spec, pts, dirs)
        assert rep.passed and rep.worst_margin >= -1e-10
    with pytest.raises(UnsupportedStructureError):
        verify_assumption1(Heisenberg(), pts[:, :1].repeat(3, 1), np.eye(3))


def test_distance_oracles():
    assert grusin_distance_1d(0, -1, 1) == pytest.approx(2)
    assert grusin_distance_1d(1, 0, 1) == pytest.approx(2)
    assert grusin_distance_1d(2, 0, 1) == math.inf
    with pytest.raises(ValueError):
        grusin_distance_1d(1, 1, 0)


def test_distance_additive_and_monotone():
    for a in (0.0, 0.5, 1.3, 1.9):
        d1 = grusin_distance_1d(a, -0.7, 0.2)
        d2 = grusin_distance_1d(a, 0.2, 1.5)
        assert grusin_distance_1d(a, -0.7, 1.5) == pytest.approx(d1 + d2, rel=1e-12)
        assert grusin_distance_1d(a, -0.7, 1.6) > grusin_distance_1d(a, -0.7, 1.5)
    across = [grusin_distance_1d(a, -1, 1) for a in (1.0, 1.5, 1.9, 1.99)]
    assert all(b > a for a, b in zip(across, across[1:]))


def test_invariants_rejected():
    with pytest.raises(ValueError):
        GeneralizedGrusin(1, 1, 2.0, (0,))
    with pytest.raises(ValueError):
        GeneralizedGrusin(1, 1, 0.0, (-1,))
    with pytest.raises(ValueError):
        Monomial((2.0,))


@pytest.mark.parametrize("structure", [Identity(2), G112, Monomial((1.0, 0.5)),
                                       GeneralizedGrusin(2, 1, 0.5, (1.5,)),
                                       HyperplaneDistance((0.5, 1.0, 2.0), 1),
                                       PoincareHalfPlane(), Heisenberg()],
                         ids=lambda s: type(s).__name__)
def test_json_round_trip(structure):
    assert spec_from_dict(spec_to_dict(structure)) == structure


def test_json_rejects_unknown_fields():
    with pytest.raises(ValueError):
        spec_from_dict({"kind": "monomial", "alphas": [1], "beta": 2})
    with pytest.raises(ValueError):
        spec_from_dict({"kind": "torus"})


_coord = st.floats(-5, 5, allow_nan=False)
_specs = st.sampled_from([Identity(3), GeneralizedGrusin(1, 2, 0.7, (0.3, 1.9)),
                          GeneralizedGrusin(2, 1, 1.2, (0.5,)), Monomial((1.0, 0.0, 1.5)),
                          HyperplaneDistance((0.5, 1.0, 2.0), 2), Heisenberg()])


@settings(max_examples=200, deadline=None)
@given(_specs, st.lists(_coord, min_size=3, max_size=3), st.lists(_coord, min_size=3, max_size=3))
def test_pointwise_identities(spec, x, g):
    a = eval_matrix(spec, x)
    b = eval_sqrt(spec, x)
    scale = max(1.0, np.abs(a).max())
    np.testing.assert_allclose(b @ b, a, rtol=1e-10, atol=1e-10 * scale)
    n2 = gradient_norm(spec, x, g) ** 2
    gam = carre_du_champ(spec, x, g)
    assert n2 == pytest.approx(gam, rel=1e-12, abs=1e-300)
    assert gradient_norm(spec, x, g) == pytest.approx(np.linalg.norm(b @ np.asarray(g)),
                                                      rel=1e-10, abs=1e-12)
