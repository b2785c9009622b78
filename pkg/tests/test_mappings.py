import math

import numpy as np
import pytest

from bestprox.mappings import (
    AffineMap, DomainError, ExpNegMap, GammaStatus, GapInconsistency, GeraghtyFunction,
    TableMap, apply_S, apply_T, d_star, make_beta,
)
from bestprox.metric import Point
from bestprox.scenarios import kannan_degenerate_model, necessity_counterexample, registration_model

REG = registration_model(0.5, 0.5)
SCENARIOS = {
    "registration": REG,
    "kannan-degenerate": kannan_degenerate_model(0.5),
    "counterexample": necessity_counterexample(100.0),
}


def test_d_star_registration():
    assert d_star(Point(0, 0), REG.maps, REG.gap) == 0
    # sqrt(delta^2 + (1 - kappa)^2 t^2) - delta at t = 1
    expected = math.sqrt(0.25 + 0.25) - 0.5
    assert d_star(Point(0, 1), REG.maps, REG.gap) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.2071, abs=1e-4)


def test_d_star_fixed_point_with_zero_gap():
    from bestprox.mappings import AuxiliaryMap, IdentityMap, MappingBundle, NonSelfMap
    from bestprox.metric import FiniteSet
    P = FiniteSet([(2, 3)])
    bundle = MappingBundle(NonSelfMap(IdentityMap(), P, P), AuxiliaryMap(IdentityMap()))
    assert d_star(Point(2, 3), bundle, 0.0) == 0


def test_d_star_clamps_small_negative_and_rejects_large():
    assert d_star(Point(0, 0), REG.maps, 0.5 + 5e-10) == 0.0
    with pytest.raises(GapInconsistency, match="gap inconsistency"):
        d_star(Point(0, 0), REG.maps, 0.6)


def test_make_beta_examples():
    b = make_beta("constant", k=0.5)
    assert b(0.0) == b(3.0) == b(1e6) == 0.5
    assert b.gamma_status is GammaStatus.GUARANTEED
    assert make_beta("reciprocal_linear")(7.0) == 0.125
    assert make_beta("constant", k=0.999)(0.0) < 1
    assert make_beta("scaled_exp", k=0.8)(1.0) == pytest.approx(0.8 / math.e)


@pytest.mark.parametrize("k", [0.0, 1.0, -0.3, 1.5])
def test_make_beta_rejects_k_outside_unit_interval(k):
    with pytest.raises(ValueError):
        make_beta("constant", k=k)
    with pytest.raises(ValueError):
        make_beta("scaled_exp", k=k)


def test_make_beta_unknown_kind():
    with pytest.raises(ValueError):
        make_beta("quadratic")


@pytest.mark.parametrize("beta", [make_beta("constant", k=0.9), make_beta("reciprocal_linear"),
                                  make_beta("scaled_exp", k=0.99)],
                         ids=["constant", "reciprocal_linear", "scaled_exp"])
def test_beta_range_on_log_grid(beta):
    ts = np.concatenate([[0.0], np.logspace(-12, 6, 400)])
    vals = [beta(float(t)) for t in ts]
    assert all(0.0 <= v < 1.0 for v in vals)


def test_user_beta_is_unverified():
    assert GeraghtyFunction(lambda t: 0.3).gamma_status is GammaStatus.UNVERIFIED


def test_apply_T_and_S_examples():
    assert apply_T(Point(0, 0.4), REG.maps) == Point(0.5, 0.2)
    ce = SCENARIOS["counterexample"]
    assert apply_S(Point(0, 2), ce.maps) == Point(0, math.exp(-2))
    assert apply_S(Point(0, 2), ce.maps)[1] == pytest.approx(0.1353, abs=1e-4)
    assert apply_S(Point(0, 0.3), REG.maps) == Point(0, 0.3)


def test_apply_T_domain_violation():
    with pytest.raises(DomainError, match="domain set A"):
        apply_T(Point(0.5, 0.5), REG.maps)
    with pytest.raises(DomainError):
        apply_S(Point(3, 3), REG.maps)


@pytest.mark.parametrize("name", list(SCENARIOS))
def test_maps_respect_sides_on_samples(name):
    inst = SCENARIOS[name]
    A = inst.search_set(inst.A)
    B = inst.search_set(inst.B)
    rng = np.random.default_rng(3)
    tol = 1e-9
    for t in rng.uniform(A.lo, A.hi, 1000):
        x = A.member(float(t))
        assert inst.B.contains(apply_T(x, inst.maps), tol)
        assert inst.A.contains(apply_S(x, inst.maps), tol)
        assert d_star(x, inst.maps, inst.gap) >= 0
    for t in rng.uniform(B.lo, B.hi, 1000):
        y = B.member(float(t))
        assert inst.B.contains(apply_S(y, inst.maps), tol)


def test_affine_and_table_maps():
    f = AffineMap([[0, 0], [0, 2]], [1, 1])
    assert f(Point(0, 3)) == Point(1, 7)
    g = TableMap([((0, 0), (1, 5)), ((0, 1), (1, 6))])
    assert g(Point(0, 1)) == Point(1, 6)
    assert g(Point(0, 1 + 1e-12)) == Point(1, 6)
    with pytest.raises(DomainError):
        g(Point(0, 2))
    assert ExpNegMap(1)(Point(1, 0)) == Point(1, 1)
