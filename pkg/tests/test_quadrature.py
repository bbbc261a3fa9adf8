"""Decay-rate quadrature: limits, invariances, oracle equivalence, budgets."""

import math
import os

import numpy as np
import pytest

from fgr.errors import ConvergenceError
from fgr.quadrature import (
    IntegrationResult,
    QuadratureConfig,
    decay_rate_numeric,
    decay_rate_numeric_oracle,
    rate_curve,
    truncation_frequency,
)
from fgr.reservoir import (
    BroadbandReservoir,
    EmitterSpec,
    NarrowbandReservoir,
    PowerLorentzCutoff,
    evaluate_rsc,
    golden_rule_rate,
    zeno_slope,
)

EM = EmitterSpec(1.0)
CFG = QuadratureConfig()


def bb(eta, omega_x=250.0, coupling=1e-3, cutoff=None):
    if cutoff is None:
        return BroadbandReservoir(coupling=coupling, eta=eta, omega_x=omega_x)
    return BroadbandReservoir(coupling=coupling, eta=eta, omega_x=omega_x, cutoff=cutoff)


def nb_resonant(q, kappa=1.0, g=1.0):
    omega_c = 2.0 * q * kappa
    return NarrowbandReservoir(g=g, kappa=kappa, omega_c=omega_c), EmitterSpec(omega_c)


class TestConfigValidation:
    def test_defaults_valid(self):
        cfg = QuadratureConfig()
        assert cfg.rel_tol == 1e-8 and cfg.max_panels == 200_000

    def test_rejects_no_tolerance(self):
        with pytest.raises(ValueError):
            QuadratureConfig(rel_tol=0.0, abs_tol=0.0)

    def test_rejects_bad_panel_counts(self):
        with pytest.raises(ValueError):
            QuadratureConfig(nodes_per_panel=1)
        with pytest.raises(ValueError):
            QuadratureConfig(max_panels=0)

    def test_result_invariants(self):
        with pytest.raises(ValueError):
            IntegrationResult(value=-1.0, error_estimate=0.0, panels_used=1, truncation_frequency=1.0)


class TestZenoLimit:
    @pytest.mark.parametrize("eta", [0.5, 1.0, 2.0])
    def test_broadband_short_time_slope(self, eta):
        r = bb(eta)
        t = 1e-3 / r.omega_x
        res = decay_rate_numeric(r, EM, t, CFG)
        assert abs(res.value / (zeno_slope(r) * t) - 1.0) < 1e-2

    def test_narrowband_short_time_slope(self):
        model, em = nb_resonant(q=10.0)
        t = 1e-3 / model.kappa
        res = decay_rate_numeric(model, em, t, CFG)
        assert abs(res.value / (zeno_slope(model) * t) - 1.0) < 1e-2


class TestGoldenRuleLimit:
    def test_broadband_sub_ohmic_long_time(self):
        r = bb(0.5)
        res = decay_rate_numeric(r, EM, 1e3, CFG)
        assert abs(res.value / golden_rule_rate(r, EM) - 1.0) < 0.02

    def test_narrowband_inverse_e_anchor(self):
        model, em = nb_resonant(q=1000.0)
        res = decay_rate_numeric(model, em, 1.0 / model.kappa, CFG)
        ratio = res.value / golden_rule_rate(model, em)
        assert abs(ratio - math.exp(-1.0)) / math.exp(-1.0) < 5e-3


class TestOracleEquivalence:
    @pytest.mark.parametrize(
        "eta,t",
        [(0.5, 4e-6), (0.5, 10.0), (1.0, 0.1), (2.0, 1.0), (3.0, 10.0)],
    )
    def test_broadband(self, eta, t):
        r = bb(eta)
        a = decay_rate_numeric(r, EM, t, CFG)
        b = decay_rate_numeric_oracle(r, EM, t, CFG)
        assert abs(a.value - b.value) / a.value < 1e-8

    @pytest.mark.parametrize("q,kt,d", [(10.0, 1.0, 0.0), (10.0, 1.0, 5.0), (1000.0, 1e-3, 0.0)])
    def test_narrowband(self, q, kt, d):
        model, em = nb_resonant(q=q)
        em = EmitterSpec(em.omega0 + d * model.kappa)
        a = decay_rate_numeric(model, em, kt / model.kappa, CFG)
        b = decay_rate_numeric_oracle(model, em, kt / model.kappa, CFG)
        assert abs(a.value - b.value) / a.value < 1e-8

    def test_power_lorentz_cutoff(self):
        r = bb(1.5, cutoff=PowerLorentzCutoff(mu=4.0))
        a = decay_rate_numeric(r, EM, 5.0, CFG)
        b = decay_rate_numeric_oracle(r, EM, 5.0, CFG)
        assert abs(a.value - b.value) / a.value < 1e-8


class TestInvariances:
    @pytest.mark.parametrize("t", [1e-3, 1.0, 1e3])
    def test_broadband_coupling_scale(self, t):
        a = decay_rate_numeric(bb(2.0, coupling=1e-3), EM, t, CFG)
        b = decay_rate_numeric(bb(2.0, coupling=1e-2), EM, t, CFG)
        ra = a.value / golden_rule_rate(bb(2.0, coupling=1e-3), EM)
        rb = b.value / golden_rule_rate(bb(2.0, coupling=1e-2), EM)
        assert abs(ra - rb) <= 1e-12 * abs(ra)

    def test_narrowband_coupling_scale(self):
        m1, em = nb_resonant(q=10.0, g=1.0)
        m2, _ = nb_resonant(q=10.0, g=10.0)
        a = decay_rate_numeric(m1, em, 1.0, CFG).value / golden_rule_rate(m1, em)
        b = decay_rate_numeric(m2, em, 1.0, CFG).value / golden_rule_rate(m2, em)
        assert abs(a - b) <= 1e-12 * abs(a)

    @pytest.mark.parametrize(
        "model,em,t",
        [
            (bb(0.5), EM, 0.3),
            (bb(3.0), EM, 20.0),
            (NarrowbandReservoir(g=1.0, kappa=1.0, omega_c=20.0), EmitterSpec(25.0), 2.0),
        ],
    )
    def test_nonnegative(self, model, em, t):
        assert decay_rate_numeric(model, em, t, CFG).value >= 0.0

    @pytest.mark.parametrize(
        "model,em,t",
        [
            (bb(2.0), EM, 0.1),
            (bb(0.5), EM, 30.0),
            (NarrowbandReservoir(g=1.0, kappa=1.0, omega_c=20.0), EmitterSpec(20.0), 1.0),
        ],
    )
    def test_node_doubling_within_error_estimate(self, model, em, t):
        base = decay_rate_numeric(model, em, t, CFG)
        fine = decay_rate_numeric(
            model, em, t, QuadratureConfig(nodes_per_panel=32)
        )
        assert abs(fine.value - base.value) <= base.error_estimate


class TestErrors:
    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            decay_rate_numeric(bb(1.0), EM, 0.0, CFG)
        with pytest.raises(ValueError):
            decay_rate_numeric_oracle(bb(1.0), EM, -1.0, CFG)

    def test_divergent_integral_rejected(self):
        with pytest.warns(UserWarning):
            cutoff = PowerLorentzCutoff(mu=0.6)
        r = bb(2.5, cutoff=cutoff)
        with pytest.raises(ValueError, match="diverges"):
            decay_rate_numeric(r, EM, 1.0, CFG)

    def test_convergence_error_carries_best_result(self):
        cfg = QuadratureConfig(rel_tol=1e-16, max_panels=64)
        with pytest.raises(ConvergenceError) as excinfo:
            decay_rate_numeric(bb(2.0), EM, 1.0, cfg)
        best = excinfo.value.result
        assert isinstance(best, IntegrationResult)
        reference = decay_rate_numeric(bb(2.0), EM, 1.0, CFG).value
        assert best.value == pytest.approx(reference, rel=1e-6)


class TestTruncation:
    def test_exponential_cutoff_formula(self):
        r = bb(1.0)
        w = truncation_frequency(r, EM, 1.0, CFG)
        expected = 250.0 * math.log(1.0 / CFG.tail_epsilon) + 10.0 * 250.0
        assert w == pytest.approx(expected, rel=1e-12)

    def test_power_lorentz_capped(self):
        r = bb(1.0, cutoff=PowerLorentzCutoff(mu=4.0))
        w = truncation_frequency(r, EM, 1.0, CFG)
        assert w <= 1e3 * r.omega_x + 1e-9

    def test_tail_is_negligible(self):
        # the neglected contribution above the cut (RSC mass times the
        # profile envelope there) is far below the tolerance budget
        r = bb(3.0)
        t = 1.0
        w = truncation_frequency(r, EM, t, CFG)
        grid = np.geomspace(w, 10.0 * w, 20001)
        tail_mass = float(np.trapezoid(evaluate_rsc(r, grid), grid))
        bound = tail_mass * min(t, 4.0 / (t * (w - EM.omega0) ** 2))
        assert bound < 1e-10 * decay_rate_numeric(r, EM, t, CFG).value


class TestRateCurve:
    def test_single_point_matches_direct_call(self):
        r = bb(1.0)
        curve = rate_curve(r, EM, [2.0], CFG)
        direct = decay_rate_numeric(r, EM, 2.0, CFG)
        assert curve.ratios[0] == direct.value / golden_rule_rate(r, EM)
        assert len(curve) == 1

    def test_threaded_matches_serial_bitwise(self):
        r = bb(2.0)
        grid = np.geomspace(0.01, 100.0, 13)
        serial = rate_curve(r, EM, grid, CFG, max_workers=1)
        threaded = rate_curve(r, EM, grid, CFG, max_workers=4)
        assert np.array_equal(serial.ratios, threaded.ratios)
        assert np.array_equal(serial.error_estimates, threaded.error_estimates)

    def test_regime_labels_and_metadata(self):
        r = bb(2.0)
        curve = rate_curve(r, EM, [4e-6, 0.1, 1e3], CFG)
        assert curve.regime_labels == ("cutoff", "intermediate", "resonant")
        assert curve.model_metadata["t_scale"] == 1.0
        assert curve.model_metadata["model"]["type"] == "broadband"

    def test_narrowband_labels(self):
        model, em = nb_resonant(q=10.0)
        curve = rate_curve(model, em, [1e-3, 1.0, 1e3], CFG)
        assert curve.regime_labels == ("zeno", "crossover", "fermi")

    def test_flagged_points_kept(self):
        cfg = QuadratureConfig(rel_tol=1e-16, max_panels=64)
        r = bb(2.0)
        curve = rate_curve(r, EM, [0.5, 1.0], cfg)
        assert bool(np.all(curve.flagged))
        assert np.all(curve.ratios > 0.0)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            rate_curve(bb(1.0), EM, [2.0, 1.0], CFG)
        with pytest.raises(ValueError):
            rate_curve(bb(1.0), EM, [], CFG)

    def test_fast_growing_spectrum_curve_shape(self):
        # rise from zero, a large transient overshoot above the long-time
        # value, then 1/t relaxation back to it
        r = bb(2.0)
        grid = np.geomspace(1e-8, 1e4, 37)
        curve = rate_curve(r, EM, grid, CFG)
        peak = int(np.argmax(curve.ratios))
        assert 0 < peak < len(curve) - 1
        assert curve.ratios[0] < 1.0
        assert curve.ratios[peak] > 10.0
        assert abs(curve.ratios[-1] - 1.0) < 0.05
        assert np.all(np.diff(curve.ratios[: peak + 1]) > 0.0)
        tail = curve.ratios[peak:]
        assert np.all(np.diff(tail) < 0.0)
        assert np.all(tail > 1.0)
