import math

import numpy as np
import pytest

from specwell import reconstruct
from specwell.forward import forward_spectrum, well_period
from specwell.ingest import fit_continuum
from specwell.inverse import (
    EstimationError,
    InvalidSpectrumError,
    SpectrumModel,
    WellWidthModel,
    energy_grid,
    estimate_emax,
    estimate_emin,
    invert_spectrum,
    reconstruct_L1,
    reconstruct_L2,
    transmission_from_spectrum,
    well_period_from_width,
)
from specwell.numerics import EnergyInterval, SampledFunction, integrate_abel
from specwell.spectra import (
    AnalyticSpectrumParams,
    make_model,
    oracle_emax,
    oracle_L2,
    oracle_transmission,
)

P1 = AnalyticSpectrumParams(family="I", a=1.0, b=1.0, c=1.0)
P2 = AnalyticSpectrumParams(family="II", a=1.0, b=1.0, c=1.0)
P3 = AnalyticSpectrumParams(family="III", a=1.0, b=1.0, N=4.0)
P4 = AnalyticSpectrumParams(family="IV", a=1.0, b=1.0, N=4.0)


def shifted_linear_model(a: float, shift: float) -> SpectrumModel:
    """n(E) = (E - shift)/a - 1/2 with a family-I imaginary part."""
    return SpectrumModel(
        n_of_e=lambda e: (e - shift) / a - 0.5,
        dn_de=lambda e: (np.full_like(np.asarray(e, dtype=float), 1.0 / a)
                         if np.ndim(e) else 1.0 / a),
        d2n_de2=lambda e: (np.zeros_like(np.asarray(e, dtype=float))
                           if np.ndim(e) else 0.0),
        log_neg_e1=lambda e: -a * 1.0 / np.maximum(
            np.asarray(e, dtype=float) - shift, 1e-12) if np.ndim(e)
            else -a / max(e - shift, 1e-12),
        dlog_neg_e1_de=lambda e: a / np.maximum(
            np.asarray(e, dtype=float) - shift, 1e-12) ** 2 if np.ndim(e)
            else a / max(e - shift, 1e-12) ** 2,
        domain=EnergyInterval(shift + 0.05, shift + 2.0),
    )


class TestEstimateEmin:
    def test_family_I(self):
        assert estimate_emin(make_model(P1)) == pytest.approx(0.0, abs=1e-12)

    def test_sqrt_counting_function(self):
        # n(E) = sqrt(E) - 1/2 crosses -1/2 at the origin (odd-extended
        # below zero so the bracket search sees a sign change)
        sgn_sqrt = lambda e: np.sign(e) * np.sqrt(np.abs(e))
        model = SpectrumModel(
            n_of_e=lambda e: sgn_sqrt(e) - 0.5,
            dn_de=lambda e: 0.5 / np.sqrt(np.abs(e) + 1e-300),
            d2n_de2=lambda e: -0.25 * np.abs(e) ** -1.5,
            log_neg_e1=lambda e: -1.0 / np.asarray(e, dtype=float),
            dlog_neg_e1_de=lambda e: np.asarray(e, dtype=float) ** -2.0,
            domain=EnergyInterval(0.3, 2.0),
        )
        assert estimate_emin(model) == pytest.approx(0.0, abs=1e-10)

    def test_shift_invariance(self):
        model = shifted_linear_model(1.0, 2.0)
        assert estimate_emin(model) == pytest.approx(2.0, rel=1e-9)

    def test_no_root_within_budget(self):
        model = SpectrumModel(
            n_of_e=lambda e: np.asarray(e, dtype=float) * 0.001 + 5.0,
            dn_de=lambda e: 0.001,
            d2n_de2=lambda e: 0.0,
            log_neg_e1=lambda e: -1.0,
            dlog_neg_e1_de=lambda e: 1.0,
            domain=EnergyInterval(0.0, 1.0),
        )
        with pytest.raises(EstimationError):
            estimate_emin(model)


class TestReconstructL1:
    def test_family_I_closed_form(self):
        model = make_model(P1)
        grid = energy_grid(0.0, 0.35, 64)
        l1 = reconstruct_L1(model, grid)
        assert np.allclose(l1.values, 4.0 * np.sqrt(grid), rtol=1e-10)

    def test_family_II_same_width(self):
        # identical real parts give identical well widths
        m1 = reconstruct_L1(make_model(P1), energy_grid(0.0, 0.15, 32))
        m2 = reconstruct_L1(make_model(P2), energy_grid(0.0, 0.15, 32))
        assert np.allclose(m1.values, m2.values, rtol=1e-12)

    def test_vanishes_at_bottom(self):
        model = make_model(P1)
        grid = energy_grid(0.0, 0.3, 32)
        l1 = reconstruct_L1(model, grid)
        assert l1.values[0] < 1e-2
        assert np.all(np.diff(l1.values) > 0.0)

    def test_differentiated_abel_consistency(self):
        # quadratic counting function: compare against d/dE of the direct
        # inclusion integral, evaluated by central differences
        model = SpectrumModel(
            n_of_e=lambda e: 0.8 * np.asarray(e, dtype=float)
            + 0.3 * np.asarray(e, dtype=float) ** 2 - 0.5,
            dn_de=lambda e: 0.8 + 0.6 * np.asarray(e, dtype=float)
            if np.ndim(e) else 0.8 + 0.6 * e,
            d2n_de2=lambda e: (np.full_like(np.asarray(e, dtype=float), 0.6)
                               if np.ndim(e) else 0.6),
            log_neg_e1=lambda e: -1.0 / np.asarray(e, dtype=float),
            dlog_neg_e1_de=lambda e: np.asarray(e, dtype=float) ** -2.0,
            domain=EnergyInterval(0.0, 2.0),
        )

        def inclusion(e):
            integrand = lambda ep: float(model.n_of_e(ep)) + 0.5
            return 2.0 * integrate_abel(integrand, 0.0, e, "upper",
                                        rel_tol=1e-13)

        grid = np.array([0.4, 0.9, 1.5])
        l1 = reconstruct_L1(model, grid, e_min=0.0)
        h = 1e-4
        for e, val in zip(grid, l1.values):
            fd = (inclusion(e + h) - inclusion(e - h)) / (2.0 * h)
            assert val == pytest.approx(fd, rel=1e-8)

    def test_boundary_term_for_supplied_emin(self):
        # cutting the well at e_min = 0.1 adds the boundary contribution
        model = make_model(P1)
        grid = np.array([0.2, 0.3])
        l1 = reconstruct_L1(model, grid, e_min=0.1)
        for e, val in zip(grid, l1.values):
            expected = (4.0 * (math.sqrt(e - 0.1))
                        + 2.0 * 0.1 / math.sqrt(e - 0.1))
            assert val == pytest.approx(expected, rel=1e-9)


class TestWellPeriod:
    def test_family_I_constant_period(self):
        w = WellWidthModel.from_spectrum_model(make_model(P1), 0.0)
        for e in np.linspace(0.02, 0.39, 20):
            assert well_period_from_width(w, 0.0, float(e)) == pytest.approx(
                2.0 * math.pi, rel=1e-10)

    def test_scaling_with_a(self):
        p = AnalyticSpectrumParams(family="I", a=2.0, b=1.0, c=1.0)
        w = WellWidthModel.from_spectrum_model(make_model(p), 0.0)
        assert well_period_from_width(w, 0.0, 0.3) == pytest.approx(
            math.pi, rel=1e-10)

    def test_from_samples_route(self):
        grid = energy_grid(0.0, 0.35, 256)
        l1 = SampledFunction(grid=grid, values=4.0 * np.sqrt(grid))
        period = well_period_from_width(l1, 0.0, 0.3)
        assert period == pytest.approx(2.0 * math.pi, rel=2e-3)

    def test_position_space_invariance(self):
        # same well width, three tilts: the period integral cannot tell
        # them apart, and matches the width-only route
        res = invert_spectrum(make_model(P1), n_grid=512)
        m = res.diagnostics.e_max
        pots = {}
        for chi in (0.1, 0.5, 0.9):
            tmap = reconstruct.chi_turning_points(res.widths, chi)
            pots[chi] = reconstruct.build_potential(tmap).as_potential()
        for e in np.linspace(0.15 * m, 0.85 * m, 5):
            periods = [well_period(pots[chi], float(e)) for chi in pots]
            for p_a in periods:
                for p_b in periods:
                    assert abs(p_a - p_b) <= 1e-6 * abs(p_b)
                # absolute agreement is limited by the linear sampling of V
                assert p_a == pytest.approx(2.0 * math.pi, rel=2e-4)


class TestTransmission:
    @pytest.mark.parametrize("params,oracle", [
        (P1, oracle_transmission), (P2, oracle_transmission),
        (P3, oracle_transmission), (P4, oracle_transmission),
    ], ids=["I", "II", "III", "IV"])
    def test_matches_closed_form(self, params, oracle):
        model = make_model(params)
        w = WellWidthModel.from_spectrum_model(model, 0.0)
        grid = energy_grid(0.0, model.domain.e_max, 96)
        curve = transmission_from_spectrum(model, w, 0.0, grid)
        m = oracle_emax(params)
        for e in np.linspace(0.05 * m, 0.95 * m, 20):
            assert curve.transmission(float(e)) == pytest.approx(
                oracle(params, float(e)), rel=1e-10)

    def test_linearity_in_e1(self):
        # halving e1 exactly halves the transmission
        model = make_model(P1)
        half = SpectrumModel(
            n_of_e=model.n_of_e, dn_de=model.dn_de, d2n_de2=model.d2n_de2,
            log_neg_e1=lambda e: model.log_neg_e1(e) - math.log(2.0),
            dlog_neg_e1_de=model.dlog_neg_e1_de, domain=model.domain)
        w = WellWidthModel.from_spectrum_model(model, 0.0)
        grid = energy_grid(0.0, model.domain.e_max, 64)
        c_full = transmission_from_spectrum(model, w, 0.0, grid)
        c_half = transmission_from_spectrum(half, w, 0.0, grid)
        for e in [0.1, 0.2, 0.3]:
            assert c_half.transmission(e) == pytest.approx(
                0.5 * c_full.transmission(e), rel=1e-12)

    def test_emax_estimates(self):
        for params in (P1, P2, P3):
            model = make_model(params)
            w = WellWidthModel.from_spectrum_model(model, 0.0)
            grid = energy_grid(0.0, model.domain.e_max, 96)
            curve = transmission_from_spectrum(model, w, 0.0, grid)
            assert estimate_emax(curve) == pytest.approx(
                oracle_emax(params), rel=1e-10)
            assert curve.log_T(curve.e_max) == pytest.approx(0.0, abs=1e-9)

    def test_emax_by_extrapolation(self):
        # trusted domain ends below the barrier top: linear ln T extension
        params = P3
        model = make_model(params)
        m = oracle_emax(params)
        short = SpectrumModel(
            n_of_e=model.n_of_e, dn_de=model.dn_de, d2n_de2=model.d2n_de2,
            log_neg_e1=model.log_neg_e1,
            dlog_neg_e1_de=model.dlog_neg_e1_de,
            domain=EnergyInterval(0.0, 0.7 * m))
        w = WellWidthModel.from_spectrum_model(short, 0.0)
        grid = energy_grid(0.0, 0.7 * m, 96)
        curve = transmission_from_spectrum(short, w, 0.0, grid)
        # family III has exactly linear ln T, so the extension is exact
        assert curve.e_max == pytest.approx(m, rel=1e-8)
        assert curve.extrapolation > 0.0


class TestReconstructL2:
    @pytest.mark.parametrize("params", [P1, P2, P3, P4],
                             ids=["I", "II", "III", "IV"])
    def test_matches_closed_form(self, params):
        model = make_model(params)
        w = WellWidthModel.from_spectrum_model(model, 0.0)
        curve = transmission_from_spectrum(
            model, w, 0.0, energy_grid(0.0, model.domain.e_max, 128,
                                       lo_rel=1e-9))
        m = curve.e_max
        grid = np.linspace(0.05 * m, 0.95 * m, 24)
        l2 = reconstruct_L2(curve, grid)
        expected = np.array([oracle_L2(params, float(e)) for e in grid])
        assert np.allclose(l2.values, expected, rtol=1e-8)

    def test_vanishes_at_top(self):
        model = make_model(P3)
        w = WellWidthModel.from_spectrum_model(model, 0.0)
        curve = transmission_from_spectrum(
            model, w, 0.0, energy_grid(0.0, model.domain.e_max, 96))
        m = curve.e_max
        l2 = reconstruct_L2(curve, np.array([0.99 * m, m * (1.0 - 1e-7)]))
        assert l2.values[-1] == pytest.approx(0.0, abs=1e-3)

    def test_grid_above_emax_rejected(self):
        model = make_model(P3)
        w = WellWidthModel.from_spectrum_model(model, 0.0)
        curve = transmission_from_spectrum(
            model, w, 0.0, energy_grid(0.0, model.domain.e_max, 96))
        with pytest.raises(ValueError):
            reconstruct_L2(curve, np.array([curve.e_max * 1.01]))


class TestInvertSpectrum:
    def test_family_I_end_to_end(self):
        res = invert_spectrum(make_model(P1), n_grid=256)
        d = res.diagnostics
        assert d.spectrum_valid
        assert d.e_min == pytest.approx(0.0, abs=1e-12)
        assert d.e_max == pytest.approx(oracle_emax(P1), rel=1e-10)
        assert d.n_at_emax == pytest.approx(
            1.0 / math.log(4.0 * math.pi) - 0.5, rel=1e-9)
        grid = res.widths.L1.grid
        assert np.allclose(res.widths.L1.values, 4.0 * np.sqrt(grid),
                           rtol=1e-9)
        expected = np.array([oracle_L2(P1, float(e)) for e in grid])
        assert np.allclose(res.widths.L2.values, expected, rtol=1e-6)

    def test_family_II_valid(self):
        res = invert_spectrum(make_model(P2), n_grid=128)
        assert res.diagnostics.spectrum_valid
        assert res.diagnostics.l2_decreasing

    def test_family_IV_flagged(self):
        res = invert_spectrum(make_model(P4), n_grid=256)
        d = res.diagnostics
        assert not d.spectrum_valid
        assert d.l2_decreasing is False
        lo, hi = d.l2_violation
        m = oracle_emax(P4)
        assert lo < 0.5 * m
        assert hi == pytest.approx(0.5 * m, rel=5e-3)
        assert any("no valid potential" in note for note in d.notes)
        # partial results are retained
        assert res.widths is not None

    def test_hard_failure_keeps_diagnostics(self):
        model = SpectrumModel(
            n_of_e=lambda e: np.asarray(e, dtype=float) * 0.01 + 9.0,
            dn_de=lambda e: 0.01,
            d2n_de2=lambda e: 0.0,
            log_neg_e1=lambda e: -1.0,
            dlog_neg_e1_de=lambda e: 0.1,
            domain=EnergyInterval(0.0, 1.0),
        )
        res = invert_spectrum(model, n_grid=64)
        assert res.widths is None
        assert res.diagnostics.failure is not None

    def test_diagnostics_serialize(self):
        import json

        res = invert_spectrum(make_model(P3), n_grid=128)
        text = json.dumps(res.diagnostics.to_dict())
        assert "spectrum_valid" in text


class TestAbelRoundTrip:
    def test_harmonic_width_recovered(self):
        # forward levels of a reconstructed family-I potential, refitted and
        # inverted again, give back the same well width
        params = AnalyticSpectrumParams(family="I", a=1.0, b=1000.0, c=90.0)
        res = invert_spectrum(make_model(params), n_grid=256)
        tmap = reconstruct.chi_turning_points(res.widths, 0.5)
        pot = reconstruct.build_potential(tmap).as_potential()
        spec = forward_spectrum(pot, 8)
        model = fit_continuum(spec)
        e_min = estimate_emin(model)
        assert e_min == pytest.approx(0.0, abs=2e-3)
        m = res.diagnostics.e_max
        grid = np.linspace(0.1 * m, 0.9 * m, 9)
        l1 = reconstruct_L1(model, grid, e_min=e_min)
        true_width = 4.0 * np.sqrt(grid)
        assert np.allclose(l1.values, true_width, rtol=1e-3)
