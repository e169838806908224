import math

import numpy as np
import pytest

from convolab.multiplier import Multiplier, RationalScheme
from convolab.noise import ForcingSpec, aggregate_increments, generate_bundle
from convolab.simulate import (
    CovarianceError,
    GridMismatchError,
    error_sup,
    ou_step_cov,
    reference_at,
    reference_run,
    scheme_run,
)
from convolab.spectral import ModeGrid, SobolevWeight

from oracles import (
    gauss_legendre_cov_oracle,
    scalar_reference_replay,
    scalar_scheme_replay,
)


def test_ou_cov_zero_mu():
    law = ou_step_cov(0.0, 1.0, 1.0)
    want = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]])
    assert np.allclose(law.cov, want, atol=1e-15)
    assert law.rank == 1  # I_conv coincides with dW


def test_ou_cov_real_negative_mu():
    law = ou_step_cov(-1.0, 1.0, 1.0)
    assert law.cov[0, 0] == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-13)
    assert law.cov[0, 2] == pytest.approx(1 - math.exp(-1), rel=1e-13)
    assert law.cov[1, 1] == pytest.approx(0.0, abs=1e-15)
    assert law.cov[2, 2] == 1.0


def test_ou_cov_unitary_total_variance():
    law = ou_step_cov(1j, 1.0, math.pi)
    assert law.cov[0, 0] + law.cov[1, 1] == pytest.approx(math.pi, rel=1e-13)


@pytest.mark.parametrize(
    "mu,h",
    [
        (0.0, 0.5),
        (-1.0, 1.0),
        (-1e-9 + 0j, 1.0),
        (1j, 0.25),
        (-2.0 + 3.0j, 0.7),
        (-1e-7 + 1e-7j, 0.01),
        (-40.0, 0.25),
    ],
)
def test_ou_cov_matches_quadrature_oracle(mu, h):
    for g in (1.0, 0.3 - 1.1j):
        law = ou_step_cov(mu, g, h)
        want = gauss_legendre_cov_oracle(mu, g, h)
        assert np.allclose(law.cov, want, atol=1e-12)


def test_ou_cov_factor_reconstructs():
    for mu, g in [(-3.0 + 2j, 1.2 - 0.5j), (0.0, 1.0), (-1e-8, 2.0)]:
        law = ou_step_cov(mu, g, 0.8)
        recon = law.factor @ law.factor.T
        assert np.linalg.norm(recon - law.cov) <= 1e-12 * max(np.linalg.norm(law.cov), 1e-30)
        evals = np.linalg.eigvalsh(law.cov)
        assert evals.min() >= -1e-12 * np.linalg.norm(law.cov)


def test_ou_cov_rejects_bad_h():
    with pytest.raises(ValueError):
        ou_step_cov(-1.0, 1.0, 0.0)


@pytest.fixture
def setup():
    grid = ModeGrid(4)
    forcing = ForcingSpec.from_decay(grid, 0.6)
    return grid, forcing


def test_reference_zero_forcing_profile(setup):
    grid, _ = setup
    profile = np.zeros(4)
    profile[:] = 0.0
    # all-zero profile is rejected at the forcing level; emulate with zero amps on g != 0
    amps = np.zeros(grid.size, dtype=complex)
    amps[0] = 1.0
    forcing = ForcingSpec(grid, amps)
    mult = Multiplier.heat(grid)
    b = generate_bundle(3, grid, mult, forcing, 16, 1.0)
    run = reference_run(b)
    assert np.all(run.values[:, 1:] == 0)  # unforced modes stay zero


def test_reference_brownian_for_zero_mu(setup):
    grid, forcing = setup
    mult = Multiplier.zero(grid)
    b = generate_bundle(4, grid, mult, forcing, 64, 1.0)
    run = reference_run(b)
    sums = np.cumsum(forcing.amplitudes[:, None] * b.dw, axis=1)
    assert np.allclose(run.values[1:].T, sums, rtol=1e-13, atol=1e-13)


def test_reference_matches_scalar_replay(setup):
    grid, forcing = setup
    mult = Multiplier.heat(grid)
    b = generate_bundle(5, grid, mult, forcing, 32, 1.0)
    run = reference_run(b)
    efac = np.exp(b.h_ref * mult.symbol)
    for k in (0, 2, grid.size - 1):
        want = scalar_reference_replay(b.conv[k], efac[k])
        assert np.allclose(run.values[:, k], want, rtol=1e-12, atol=1e-14)


def test_reference_at_equals_subsampled_run(setup):
    grid, forcing = setup
    for model in ("heat", "transport", "schroedinger"):
        mult = Multiplier.from_name(model, grid)
        b = generate_bundle(6, grid, mult, forcing, 64, 1.0)
        fine = reference_run(b).values
        for n in (4, 16, 64):
            coarse = reference_at(b, n)
            assert np.allclose(coarse, fine[:: 64 // n], rtol=1e-10, atol=1e-12)


def test_ou_marginal_variance(setup):
    # one mode, mu = -1: Var u_T = g^2 (1 - e^{-2T}) / 2 within 4 stderr
    grid = ModeGrid(1)
    amps = np.zeros(grid.size, dtype=complex)
    amps[grid.zero_index()] = 1.0
    forcing = ForcingSpec(grid, amps)
    mult = Multiplier.custom(grid, np.full(grid.size, -1.0 + 0j), 2)
    T, n_ref, M = 1.0, 16, 20000
    vals = np.empty(M)
    for m in range(M):
        b = generate_bundle(8, grid, mult, forcing, n_ref, T, sample=m)
        vals[m] = reference_run(b).values[-1, grid.zero_index()].real
    want = (1 - math.exp(-2 * T)) / 2
    got = vals.var()
    stderr = want * math.sqrt(2.0 / M)
    assert abs(got - want) <= 4 * stderr


def test_scheme_runs_exact_for_zero_generator(setup):
    grid, forcing = setup
    mult = Multiplier.zero(grid)
    b = generate_bundle(9, grid, mult, forcing, 64, 1.0)
    ref = reference_run(b)
    for name in ("splitting", "implicit_euler", "crank_nicolson"):
        run = scheme_run(b, RationalScheme.from_name(name), 16)
        assert error_sup(ref, run, SobolevWeight(0.0)) <= 1e-13


def test_splitting_n_ref_coincides_when_mu_zero(setup):
    grid, forcing = setup
    mult = Multiplier.zero(grid)
    b = generate_bundle(10, grid, mult, forcing, 32, 1.0)
    ref = reference_run(b)
    run = scheme_run(b, RationalScheme.splitting(), 32)
    assert error_sup(ref, run, SobolevWeight(0.0)) <= 1e-13


def test_ie_two_step_hand_oracle():
    grid = ModeGrid(1)
    amps = np.zeros(grid.size, dtype=complex)
    amps[grid.zero_index()] = 1.0
    forcing = ForcingSpec(grid, amps)
    mult = Multiplier.custom(grid, np.full(grid.size, -1.0 + 0j), 2)
    b = generate_bundle(11, grid, mult, forcing, 8, 1.0)
    run = scheme_run(b, RationalScheme.implicit_euler(), 2)
    d_m = aggregate_increments(b, 2)[grid.zero_index()]
    factor = 1.0 / (1.0 + 0.5)  # (1 - h mu)^{-1}, h = 1/2, mu = -1
    want = scalar_scheme_replay(d_m, factor)
    assert np.allclose(run.values[:, grid.zero_index()], want, rtol=1e-14, atol=1e-16)


def test_error_sup_zero_and_monotone(setup):
    grid, forcing = setup
    mult = Multiplier.heat(grid)
    b = generate_bundle(12, grid, mult, forcing, 64, 1.0)
    ref = reference_run(b)
    run = scheme_run(b, RationalScheme.implicit_euler(), 16)
    e_low = error_sup(ref, run, SobolevWeight(-1.0))
    e_high = error_sup(ref, run, SobolevWeight(1.0))
    assert e_low <= e_high
    clone = scheme_run(b, RationalScheme.splitting(), 64)
    for lam in (-1.0, 0.0):
        # splitting at n = n_ref is not exact for mu != 0, but subsampling is
        sub = reference_run(b)
        assert error_sup(sub, scheme_run(b, RationalScheme.splitting(), 64), SobolevWeight(lam)) >= 0


def test_error_sup_scalar_replay(setup):
    grid = ModeGrid(1)
    amps = np.zeros(grid.size, dtype=complex)
    amps[grid.zero_index()] = 1.0
    forcing = ForcingSpec(grid, amps)
    mult = Multiplier.custom(grid, np.full(grid.size, -1.0 + 0j), 2)
    b = generate_bundle(13, grid, mult, forcing, 16, 1.0)
    ref = reference_run(b)
    run = scheme_run(b, RationalScheme.crank_nicolson(), 4)
    idx = grid.zero_index()
    diffs = np.abs(ref.values[::4, idx] - run.values[:, idx])
    assert error_sup(ref, run, SobolevWeight(0.0)) == pytest.approx(diffs.max(), rel=1e-13)


def test_error_sup_grid_mismatch(setup):
    grid, forcing = setup
    mult = Multiplier.heat(grid)
    b = generate_bundle(14, grid, mult, forcing, 16, 1.0)
    ref = reference_run(b)
    run = scheme_run(b, RationalScheme.splitting(), 8)
    other = ModeGrid(2)
    bad = scheme_run(
        generate_bundle(14, other, Multiplier.heat(other), ForcingSpec.from_decay(other, 0.6), 16, 1.0),
        RationalScheme.splitting(),
        8,
    )
    with pytest.raises(GridMismatchError):
        error_sup(ref, bad, SobolevWeight(0.0))


def test_splitting_error_shrinks_toward_fine_grid(setup):
    # mu = 0: splitting at n = n_ref is exact, so the n_ref value is minimal
    grid, forcing = setup
    mult = Multiplier.zero(grid)
    b = generate_bundle(15, grid, mult, forcing, 64, 1.0)
    ref = reference_run(b)
    errs = [
        error_sup(ref, scheme_run(b, RationalScheme.splitting(), n), SobolevWeight(0.0))
        for n in (4, 16, 64)
    ]
    assert errs[-1] == min(errs)
    assert errs[-1] <= 1e-13


def test_splitting_consistency_heat(setup):
    # E sup errors decrease toward the fine grid through divisors (averaged)
    grid, forcing = setup
    mult = Multiplier.heat(grid)
    M = 200
    tot = np.zeros(3)
    for m in range(M):
        b = generate_bundle(16, grid, mult, forcing, 64, 1.0, sample=m)
        ref = reference_run(b)
        for i, n in enumerate((4, 16, 64)):
            tot[i] += error_sup(ref, scheme_run(b, RationalScheme.splitting(), n), SobolevWeight(0.0)) ** 2
    means = np.sqrt(tot / M)
    assert means[0] > means[1] > means[2]


def test_pathwise_rate_boundedness():
    # splitting on heat, beta = 1: 95th percentile of n^0.8 * sup varies < 2x
    grid = ModeGrid(16)
    forcing = ForcingSpec.from_decay(grid, 0.6)
    mult = Multiplier.heat(grid)
    M = 400
    n_list = (16, 64, 256)
    stats = {n: np.empty(M) for n in n_list}
    w = SobolevWeight(-2.0)
    for m in range(M):
        b = generate_bundle(17, grid, mult, forcing, 1024, 1.0, sample=m)
        ref = reference_at(b, 256)
        for n in n_list:
            run = scheme_run(b, RationalScheme.splitting(), n)
            stride = 256 // n
            diff = ref[::stride] - run.values
            wv = w.values(grid)
            sup = float(np.max(np.sqrt(np.sum(wv * np.abs(diff) ** 2, axis=1))))
            stats[n][m] = n**0.8 * sup
    q95 = {n: np.quantile(stats[n], 0.95) for n in n_list}
    assert max(q95.values()) / min(q95.values()) < 2.0


def test_transport_energy_sanity():
    # unitary group: mean square of ||u_n|| matches the reference distribution
    grid = ModeGrid(8)
    forcing = ForcingSpec.from_decay(grid, 0.6)
    mult = Multiplier.transport(grid)
    M = 10_000
    n = 8
    w = SobolevWeight(0.0).values(grid)
    a = np.empty(M)
    b_vals = np.empty(M)
    for m in range(M):
        b = generate_bundle(18, grid, mult, forcing, 32, 1.0, sample=m)
        run = scheme_run(b, RationalScheme.splitting(), n)
        a[m] = np.sum(w * np.abs(run.values[-1]) ** 2)
        b_vals[m] = np.sum(w * np.abs(reference_at(b, n)[-1]) ** 2)
    diff = a.mean() - b_vals.mean()
    stderr = math.sqrt(a.var() / M + b_vals.var() / M)
    assert abs(diff) <= 4 * stderr
