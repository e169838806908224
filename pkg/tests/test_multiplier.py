import math

import numpy as np
import pytest

from convolab.multiplier import (
    Multiplier,
    OrderProbeResult,
    RationalScheme,
    SingularStepError,
    contractivity_check,
    eta_order,
    order_probe,
    predicted_probe_order,
    scheme_step,
    semigroup_apply,
    stepping_factors,
)
from convolab.spectral import ModeGrid, SobolevWeight, StateVector, sobolev_norm


@pytest.fixture
def grid():
    return ModeGrid(8)


def test_model_symbols(grid):
    heat = Multiplier.heat(grid)
    assert np.all(heat.symbol.real <= 0)
    assert heat.symbol[grid.zero_index()] == 0
    tr = Multiplier.transport(grid)
    sc = Multiplier.schroedinger(grid)
    assert np.all(tr.symbol.real == 0)
    assert np.all(sc.symbol.real == 0)
    k1 = grid.zero_index() + 1
    assert tr.symbol[k1] == 1j
    assert sc.symbol[k1] == -1j


def test_transport_needs_one_dimension():
    with pytest.raises(ValueError):
        Multiplier.transport(ModeGrid(2, 2))


def test_semigroup_identity_and_scalar(grid):
    heat = Multiplier.heat(grid)
    s = StateVector.single_mode(grid, [1])
    assert np.array_equal(semigroup_apply(heat, 0.0, s).coefficients, s.coefficients)
    out = semigroup_apply(heat, 1.0, s)
    idx = np.argmax(np.abs(s.coefficients))
    assert out.coefficients[idx] == pytest.approx(math.exp(-1.0), rel=1e-14)
    with pytest.raises(ValueError):
        semigroup_apply(heat, -0.1, s)


def test_transport_semigroup_is_isometric(grid):
    tr = Multiplier.transport(grid)
    gen = np.random.default_rng(0)
    s = StateVector(grid, gen.normal(size=grid.size) + 1j * gen.normal(size=grid.size))
    for lam in (0.0, 1.5):
        w = SobolevWeight(lam)
        before = sobolev_norm(s, w)
        after = sobolev_norm(semigroup_apply(tr, 2.7, s), w)
        assert after == pytest.approx(before, rel=1e-12)


def test_scheme_step_examples(grid):
    ie = RationalScheme.implicit_euler()
    assert ie(np.array([-1.0 + 0j]))[0] == pytest.approx(0.5)
    cn = RationalScheme.crank_nicolson()
    val = cn(np.array([2j]))[0]
    assert val == pytest.approx(1j)
    assert abs(val) == pytest.approx(1.0)


def test_splitting_step_equals_semigroup(grid):
    heat = Multiplier.heat(grid)
    gen = np.random.default_rng(1)
    s = StateVector(grid, gen.normal(size=grid.size) + 0j)
    a = scheme_step(RationalScheme.splitting(), heat, 0.37, s)
    b = semigroup_apply(heat, 0.37, s)
    assert np.array_equal(a.coefficients, b.coefficients)


def test_scheme_pole_detection(grid):
    bad = Multiplier.custom(grid, np.full(grid.size, 1.0 + 0j), 1)
    with pytest.raises(SingularStepError):
        stepping_factors(RationalScheme.implicit_euler(), bad, 1.0)
    with pytest.raises(SingularStepError):
        stepping_factors(RationalScheme.crank_nicolson(), Multiplier.custom(grid, np.full(grid.size, 2.0 + 0j), 1), 1.0)


def test_custom_rational_scheme(grid):
    # r(z) = (1 + z/2)/(1 - z/2) written as coefficient lists
    cn_like = RationalScheme.custom_rational([1.0, 0.5], [1.0, -0.5], 2)
    z = np.array([0.3 + 0.4j])
    want = (1 + z / 2) / (1 - z / 2)
    assert cn_like(z)[0] == pytest.approx(want[0])


@pytest.mark.parametrize("model", ["heat", "transport", "schroedinger"])
@pytest.mark.parametrize("scheme", ["splitting", "implicit_euler", "crank_nicolson"])
@pytest.mark.parametrize("h", [0.01, 0.5, 4.0])
def test_contractivity_catalogue(model, scheme, h, grid):
    mult = Multiplier.from_name(model, grid)
    ok, worst = contractivity_check(RationalScheme.from_name(scheme), mult, h)
    assert ok
    assert worst <= 1.0 + 1e-12


def test_cn_unitary_on_skew(grid):
    sc = Multiplier.schroedinger(grid)
    ok, worst = contractivity_check(RationalScheme.crank_nicolson(), sc, 1.7)
    assert ok
    assert worst == pytest.approx(1.0, abs=1e-13)


def test_contractivity_flags_expanding_symbol(grid):
    bad = Multiplier.custom(grid, np.full(grid.size, 0.25 + 0j), 1)
    ok, worst = contractivity_check(RationalScheme.splitting(), bad, 1.0)
    assert not ok
    assert worst > 1.0


def test_repeated_composition_matches_power(grid):
    heat = Multiplier.heat(grid)
    gen = np.random.default_rng(2)
    coeffs = gen.normal(size=grid.size) + 1j * gen.normal(size=grid.size)
    s = StateVector(grid, coeffs)
    ie = RationalScheme.implicit_euler()
    h, n = 0.05, 40
    out = s
    for _ in range(n):
        out = scheme_step(ie, heat, h, out)
    factors = stepping_factors(ie, heat, h)
    direct = np.exp(n * np.log(factors)) * coeffs
    assert np.allclose(out.coefficients, direct, rtol=1e-10, atol=1e-13)


def test_eta_order_catalog():
    assert eta_order(1, 2) == pytest.approx(1.0)  # k l/(l+1), l=1, k=2
    assert eta_order(2, 2) == pytest.approx(4.0 / 3.0)
    assert eta_order(2, 1) == pytest.approx(0.5)  # k - 1/2 below threshold
    assert eta_order(1, 1) is None  # excluded threshold k = (l+1)/2
    with pytest.raises(ValueError):
        eta_order(1, 3)


def test_probe_prediction_threshold_reports_none():
    g = ModeGrid(16)
    tr = Multiplier.transport(g)
    entry = predicted_probe_order(RationalScheme.implicit_euler(), tr, 1.0)
    assert entry.predicted_order is None


def test_order_probe_splitting_exact():
    g = ModeGrid(16)
    heat = Multiplier.heat(g)
    probe = order_probe(
        RationalScheme.splitting(), heat, SobolevWeight(2.0), SobolevWeight(0.0),
        1.0, [8, 16, 32, 64],
    )
    assert probe.exact
    assert np.all(probe.sup_errors < 1e-13)


def test_order_probe_refuses_short_lists():
    g = ModeGrid(4)
    with pytest.raises(ValueError):
        order_probe(
            RationalScheme.implicit_euler(), Multiplier.heat(g),
            SobolevWeight(2.0), SobolevWeight(0.0), 1.0, [8, 16],
        )


def test_order_probe_heat_ie_analytic_rate():
    g = ModeGrid(64)
    probe = order_probe(
        RationalScheme.implicit_euler(), Multiplier.heat(g),
        SobolevWeight(2.0), SobolevWeight(0.0), 1.0,
        [8, 16, 32, 64, 128, 256, 512, 1024],
    )
    assert probe.slope == pytest.approx(-1.0, abs=0.1)


def test_order_probe_transport_cn_eta_rate():
    g = ModeGrid(512)
    probe = order_probe(
        RationalScheme.crank_nicolson(), Multiplier.transport(g),
        SobolevWeight(2.0), SobolevWeight(0.0), 1.0,
        [8, 16, 32, 64, 128, 256, 512, 1024],
    )
    assert probe.slope == pytest.approx(-4.0 / 3.0, abs=0.15)
