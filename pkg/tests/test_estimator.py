import math

import numpy as np
import pytest

from convolab.estimator import (
    ExperimentConfig,
    FitRefusedError,
    RateRow,
    RateTable,
    bootstrap_ci,
    bound_check,
    collect_sup_samples,
    estimate_E,
    estimate_E_sweep,
    fit_rate,
    predicted_slope,
)


def make_config(**kw):
    base = dict(
        model="heat", scheme="splitting", lam=0.0, beta=1.0, p=2.0,
        n_list=(4, 8, 16, 32), n_ref=256, K=8, T=1.0, M=128, seed=3,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def synthetic_table(e_values, n_values=None, config=None):
    n_values = n_values or [8 * 2**i for i in range(len(e_values))]
    rows = tuple(RateRow(n, e, e * 0.95, e * 1.05) for n, e in zip(n_values, e_values))
    cfg = config or make_config(n_list=tuple(n_values), n_ref=max(n_values) * 4)
    return RateTable(cfg, rows, -1.0, np.zeros((1, len(e_values))))


class TestConfigValidation:
    def test_rejects_non_divisor(self):
        with pytest.raises(ValueError, match="n_ref"):
            make_config(n_list=(3, 6), n_ref=256)

    def test_rejects_large_n(self):
        with pytest.raises(ValueError, match="n_ref/4"):
            make_config(n_list=(8, 128), n_ref=256)

    def test_rejects_beta_out_of_range(self):
        with pytest.raises(ValueError, match="beta"):
            make_config(model="heat", scheme="splitting", beta=1.5)
        with pytest.raises(ValueError, match="beta"):
            make_config(model="transport", scheme="crank_nicolson", beta=1.7)
        make_config(model="transport", scheme="implicit_euler", beta=2.0)  # fine

    def test_rejects_bad_p_and_m(self):
        with pytest.raises(ValueError, match="p"):
            make_config(p=1.0)
        with pytest.raises(ValueError, match="p"):
            make_config(p=9.0)
        with pytest.raises(ValueError, match="samples"):
            make_config(M=50)

    def test_scheme_aliases(self):
        assert make_config(scheme="ie").scheme == "implicit_euler"
        assert make_config(scheme="cn", beta=1.0).scheme == "crank_nicolson"

    def test_default_decay_is_borderline(self):
        cfg = make_config(lam=0.5)
        assert cfg.decay == pytest.approx(0.5 + 0.5 + 0.1)
        assert cfg.error_lambda == pytest.approx(0.5 - 2.0)


def test_predicted_slopes():
    assert predicted_slope("heat", "splitting", 0.5) == -0.5
    assert predicted_slope("heat", "ie", 1.0) == -1.0
    assert predicted_slope("transport", "ie", 2.0) == -1.0
    assert predicted_slope("transport", "cn", 1.5) == -1.0
    assert predicted_slope("schroedinger", "cn", 1.5) == -1.0
    assert predicted_slope("schroedinger", "splitting", 1.0) == -1.0


class TestFitRate:
    def test_exact_power_law(self):
        n = [8, 16, 32, 64, 128]
        table = synthetic_table([3.0 * x**-0.75 for x in n], n)
        fit = fit_rate(table)
        assert fit.slope == pytest.approx(-0.75, abs=1e-10)
        assert fit.stderr == pytest.approx(0.0, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0)

    def test_log_corrected_fit(self):
        n = [8, 16, 32, 64, 128]
        table = synthetic_table([2.0 * math.sqrt(math.log(x + 1)) / x for x in n], n)
        fit = fit_rate(table, log_correction=True)
        assert fit.slope == pytest.approx(-1.0, abs=1e-10)

    def test_zero_rows_excluded_then_refused(self):
        n = [8, 16, 32, 64, 128]
        vals = [1.0, 0.5, 0.25, 0.0, 0.0]
        table = synthetic_table(vals, n)
        with pytest.raises(FitRefusedError):
            fit_rate(table)

    def test_noise_floor_rows_excluded(self):
        n = [8, 16, 32, 64, 128]
        vals = [1.0, 0.5, 0.25, 0.125, 1e-16]
        fit = fit_rate(synthetic_table(vals, n))
        assert 128 not in fit.n_used
        assert any("noise floor" in w for w in fit.warnings)

    def test_saturated_head_dropped(self):
        n = [8, 16, 32, 64, 128, 256, 512]
        sat = [1.0, 0.99, 0.97, 0.5, 0.25, 0.125, 0.0625]
        fit = fit_rate(synthetic_table(sat, n))
        assert 8 not in fit.n_used
        assert fit.slope == pytest.approx(-1.0, abs=0.15)

    def test_clean_power_law_keeps_all_rows(self):
        n = [8, 16, 32, 64, 128, 256]
        fit = fit_rate(synthetic_table([x**-0.5 for x in n], n))
        assert fit.n_used == tuple(n)


def test_zero_generator_gives_zero_errors_and_refusal():
    # A = 0 (mu identically zero) cannot happen via model names; emulate by the
    # only zero-symbol mode: heat grid K=1 keeps mode 0 with mu = 0 and modes
    # +-1 with mu = -1, so instead verify the fit refusal contract directly.
    table = synthetic_table([0.0, 0.0, 0.0, 0.0])
    with pytest.raises(FitRefusedError):
        fit_rate(table)


def test_estimate_deterministic_and_coherent():
    cfg = make_config(M=128)
    t1 = estimate_E(cfg, workers=1)
    t2 = estimate_E(cfg, workers=2)
    assert [r.e_hat for r in t1.rows] == [r.e_hat for r in t2.rows]
    assert [r.ci_lo for r in t1.rows] == [r.ci_lo for r in t2.rows]


def test_sample_sharing_coherence():
    # E at a given n identical alone or inside a sweep: keyed by (seed, m)
    cfg_single = make_config(n_list=(16,), M=128)
    cfg_sweep = make_config(n_list=(4, 8, 16, 32), M=128)
    alone = estimate_E(cfg_single).rows[0]
    swept = [r for r in estimate_E(cfg_sweep).rows if r.n == 16][0]
    assert alone.e_hat == pytest.approx(swept.e_hat, rel=1e-13)


def test_beta_sweep_shares_samples():
    c1 = make_config(beta=0.5, M=128)
    c2 = make_config(beta=1.0, M=128)
    tables = estimate_E_sweep((c1, c2))
    solo = estimate_E(c2)
    for a, b in zip(tables[1].rows, solo.rows):
        assert a.e_hat == pytest.approx(b.e_hat, rel=1e-13)


def test_reference_resolution_invariance():
    # refining the fine grid changes the coupling, not the law: differences
    # stay within the bootstrap CI
    cfg_a = make_config(M=512, n_ref=256)
    cfg_b = make_config(M=512, n_ref=512)
    ta, tb = estimate_E(cfg_a), estimate_E(cfg_b)
    for ra, rb in zip(ta.rows, tb.rows):
        width = (ra.ci_hi - ra.ci_lo) + (rb.ci_hi - rb.ci_lo)
        assert abs(ra.e_hat - rb.e_hat) <= width


def test_bootstrap_width_scales_with_m():
    cfg_small = make_config(M=128)
    cfg_big = make_config(M=512)
    ts, tb = estimate_E(cfg_small), estimate_E(cfg_big)
    widths_s = np.array([r.ci_hi - r.ci_lo for r in ts.rows])
    widths_b = np.array([r.ci_hi - r.ci_lo for r in tb.rows])
    shrink = widths_b / widths_s
    # 4x the samples should halve the width (allow slack for bootstrap noise)
    assert np.all(shrink < 0.75)
    assert np.all(shrink > 0.3)


def test_bound_check_splitting_passes_and_scales():
    cfg = make_config(M=256, beta=1.0)
    table = estimate_E(cfg)
    rows = bound_check(table)
    assert all(r.passed for r in rows)
    assert all(r.ratio < 0.2 for r in rows)
    # homogeneity: scaling g scales both sides, ratios unchanged
    cfg2 = make_config(M=256, beta=1.0, forcing_decay=cfg.decay)
    assert [r.ratio for r in bound_check(estimate_E(cfg2))] == pytest.approx(
        [r.ratio for r in rows], rel=1e-12
    )


def test_bound_check_rational_rows_are_informational():
    cfg = make_config(scheme="ie", M=128)
    rows = bound_check(estimate_E(cfg))
    assert all(r.passed for r in rows)  # no hard verdict for rational schemes
    assert all(np.isfinite(r.bound) for r in rows)


def test_collect_shapes():
    cfg = make_config(M=128)
    sups = collect_sup_samples((cfg,))
    assert sups.shape == (128, len(cfg.n_list), 1)
    assert np.all(sups >= 0)
