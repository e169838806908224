import math

import numpy as np
import pytest

from convolab.multiplier import Multiplier
from convolab.noise import (
    ConfigError,
    ForcingSpec,
    MeshError,
    PathBundle,
    aggregate_increments,
    forcing_gamma_norm,
    generate_bundle,
    philox_generator,
    read_bundle_payload,
)
from convolab.spectral import ModeGrid, SobolevWeight

from oracles import prefix_sum_aggregation_oracle


@pytest.fixture
def setup():
    grid = ModeGrid(4)
    mult = Multiplier.heat(grid)
    forcing = ForcingSpec.from_decay(grid, 0.6)
    return grid, mult, forcing


def test_bundle_determinism(setup):
    grid, mult, forcing = setup
    a = generate_bundle(99, grid, mult, forcing, 64, 1.0, sample=3)
    b = generate_bundle(99, grid, mult, forcing, 64, 1.0, sample=3)
    assert np.array_equal(a.conv, b.conv)
    assert np.array_equal(a.dw, b.dw)
    c = generate_bundle(99, grid, mult, forcing, 64, 1.0, sample=4)
    assert not np.array_equal(a.dw, c.dw)


def test_bundle_rejects_bad_n_ref(setup):
    grid, mult, forcing = setup
    with pytest.raises(ConfigError):
        generate_bundle(1, grid, mult, forcing, 63, 1.0)


def test_zero_amplitude_mode_has_zero_convolution(setup):
    grid, mult, _ = setup
    amps = np.ones(grid.size, dtype=complex)
    amps[2] = 0.0
    forcing = ForcingSpec(grid, amps)
    b = generate_bundle(5, grid, mult, forcing, 32, 1.0)
    assert np.all(b.conv[2] == 0)
    assert np.any(b.dw[2] != 0)


def test_dw_variance_chi_square(setup):
    # sample variance of 2^16 draws within 4 standard errors of h_ref
    grid, mult, forcing = setup
    n_ref = 256
    T = 1.0
    h = T / n_ref
    draws = []
    for m in range(2**16 // (grid.size * n_ref) + 1):
        draws.append(generate_bundle(7, grid, mult, forcing, n_ref, T, sample=m).dw.ravel())
    x = np.concatenate(draws)[: 2**16]
    var = x.var(ddof=1)
    stderr = h * math.sqrt(2.0 / (x.size - 1))
    assert abs(var - h) <= 4 * stderr
    assert abs(x.mean()) <= 5 * math.sqrt(h / x.size)


def test_mode_independence(setup):
    grid, mult, forcing = setup
    n_ref = 1024
    rows = []
    for m in range(32):
        rows.append(generate_bundle(13, grid, mult, forcing, n_ref, 1.0, sample=m).dw)
    dw = np.concatenate(rows, axis=1)  # (modes, 32 * n_ref)
    n = dw.shape[1]
    corr = np.corrcoef(dw)
    off = corr[np.triu_indices_from(corr, k=1)]
    assert np.max(np.abs(off)) <= 5.0 / math.sqrt(n)


def test_aggregation_identity_and_telescoping(setup):
    grid, mult, forcing = setup
    b = generate_bundle(21, grid, mult, forcing, 64, 1.0)
    fine = aggregate_increments(b, 64)
    assert np.allclose(fine, forcing.amplitudes[:, None] * b.dw, atol=0, rtol=0)
    single = aggregate_increments(b, 1)
    assert np.allclose(
        single[:, 0], forcing.amplitudes * b.dw.sum(axis=1), rtol=1e-14, atol=1e-16
    )


def test_aggregation_against_prefix_sum_oracle(setup):
    grid, mult, forcing = setup
    b = generate_bundle(22, grid, mult, forcing, 64, 1.0)
    for n in (2, 4, 8):
        got = aggregate_increments(b, n)
        for k in (0, 3, grid.size - 1):
            want = prefix_sum_aggregation_oracle(b.dw[k], forcing.amplitudes[k], n, 64)
            assert np.allclose(got[k], want, rtol=1e-14, atol=1e-14)


def test_aggregation_nesting(setup):
    grid, mult, forcing = setup
    b = generate_bundle(23, grid, mult, forcing, 128, 1.0)
    via16 = aggregate_increments(b, 16).reshape(grid.size, 4, 4).sum(axis=2)
    direct4 = aggregate_increments(b, 4)
    assert np.allclose(via16, direct4, rtol=1e-14, atol=1e-14)
    with pytest.raises(MeshError):
        aggregate_increments(b, 3)


def test_mass_conservation_across_n(setup):
    grid, mult, forcing = setup
    b = generate_bundle(24, grid, mult, forcing, 64, 1.0)
    totals = [aggregate_increments(b, n).sum(axis=1) for n in (1, 2, 8, 64)]
    for t in totals[1:]:
        assert np.allclose(t, totals[0], rtol=1e-13, atol=1e-15)


def test_gamma_norm_closed_form(setup):
    grid, _, _ = setup
    single = ForcingSpec.single_mode(grid, [0])
    assert forcing_gamma_norm(single, SobolevWeight(4.2), 1.0) == pytest.approx(1.0)
    decay = ForcingSpec.from_decay(grid, 0.6)
    w = SobolevWeight(0.3).values(grid)
    want = math.sqrt(2.0 * float(np.sum(w * np.abs(decay.amplitudes) ** 2)))
    assert forcing_gamma_norm(decay, SobolevWeight(0.3), 2.0) == pytest.approx(want, rel=1e-13)


def test_gamma_norm_piecewise_profile_matches_step_sum(setup):
    grid, _, _ = setup
    profile = np.array([1.0, 0.5, 2.0, 0.0])
    forcing = ForcingSpec.from_decay(grid, 0.6, profile=profile)
    T = 2.0
    w = SobolevWeight(1.0).values(grid)
    spatial = float(np.sum(w * np.abs(forcing.amplitudes) ** 2))
    step = T / 4
    want = math.sqrt(spatial * step * float(np.sum(profile**2)))
    got = forcing_gamma_norm(forcing, SobolevWeight(1.0), T)
    assert got == pytest.approx(want, rel=1e-12)


def test_profile_scales_convolution_increments(setup):
    grid, mult, _ = setup
    profile = np.array([0.0, 1.0])
    forcing = ForcingSpec.from_decay(grid, 0.6, profile=profile)
    b = generate_bundle(31, grid, mult, forcing, 8, 1.0)
    assert np.all(b.conv[:, :4] == 0)
    assert np.any(b.conv[:, 4:] != 0)
    d_m = aggregate_increments(b, 2)
    plain = ForcingSpec.from_decay(grid, 0.6)
    b2 = generate_bundle(31, grid, mult, plain, 8, 1.0)
    assert np.allclose(
        d_m[:, 0], np.zeros(grid.size), atol=0
    )
    assert np.allclose(
        d_m[:, 1], plain.amplitudes * b2.dw[:, 4:].sum(axis=1), rtol=1e-14
    )


def test_forcing_validation(setup):
    grid, _, _ = setup
    with pytest.raises(ConfigError):
        ForcingSpec(grid, np.zeros(grid.size, dtype=complex))
    with pytest.raises(ConfigError):
        ForcingSpec(grid, np.ones(3, dtype=complex))
    assert ForcingSpec.from_decay(grid, 0.8).regularity_target == pytest.approx(0.3)


def test_sidecar_roundtrip(tmp_path, setup):
    grid, mult, forcing = setup
    b = generate_bundle(77, grid, mult, forcing, 32, 1.5, sample=2)
    path = tmp_path / "bundle.bin"
    b.dump(path)
    header, conv, dw = read_bundle_payload(path)
    assert header["seed"] == 77 and header["sample"] == 2
    assert header["K"] == grid.cutoff and header["d"] == grid.dimension
    assert header["T"] == 1.5
    assert np.array_equal(conv, b.conv)
    assert np.array_equal(dw, b.dw)


def test_truncation_calibration():
    # gamma norm at cutoff K vs 2K differs by < 5% for the borderline decay
    lam, d = 0.0, 1
    decay = lam + d / 2.0 + 0.1
    norms = {}
    for k in (128, 256):
        g = ModeGrid(k, d)
        norms[k] = forcing_gamma_norm(ForcingSpec.from_decay(g, decay), SobolevWeight(lam), 1.0)
    assert abs(norms[256] - norms[128]) / norms[128] < 0.05


def test_philox_streams_are_order_free():
    a = philox_generator(1, 5).standard_normal(4)
    philox_generator(1, 6).standard_normal(1000)
    b = philox_generator(1, 5).standard_normal(4)
    assert np.array_equal(a, b)


def test_bundle_moments_within_5_sigma(setup):
    grid, mult, forcing = setup
    n_ref = 512
    b = generate_bundle(41, grid, mult, forcing, n_ref, 1.0)
    h = b.h_ref
    n = b.dw.size
    assert abs(b.dw.mean()) <= 5 * math.sqrt(h / n)
    assert abs(b.dw.var() - h) <= 5 * h * math.sqrt(2.0 / n)
