import math

import numpy as np
import pytest

from specwell.numerics import integrate_abel
from specwell.spectra import (
    AnalyticSpectrumParams,
    ParameterError,
    closed_form_widths,
    critical_chi_energy,
    eval_level,
    make_model,
    oracle_diagnostics,
    oracle_emax,
    oracle_L2,
    oracle_L2_derivative,
    oracle_transmission,
)

FOUR_PI = 4.0 * math.pi


def fam(family, **kw):
    return AnalyticSpectrumParams(family=family, **kw)


P1 = fam("I", a=1.0, b=1.0, c=1.0)
P2 = fam("II", a=1.0, b=1.0, c=1.0)
P3 = fam("III", a=1.0, b=1.0, N=4.0)
P4 = fam("IV", a=1.0, b=1.0, N=4.0)


class TestEvalLevel:
    def test_family_I_ground(self):
        lv = eval_level(P1, 0)
        assert lv.e0 == pytest.approx(0.5)
        assert lv.e1 == pytest.approx(-math.exp(-2.0))  # -0.135335...

    def test_family_II_ground(self):
        lv = eval_level(P2, 0)
        assert lv.e0 == pytest.approx(0.5)
        assert lv.e1 == pytest.approx(-math.exp(-1.0 / math.sqrt(0.5)))

    def test_family_III_flat_width(self):
        lv = eval_level(fam("III", a=1.0, b=0.0, N=1.0), 0)
        assert lv.e0 == pytest.approx(0.5)
        assert lv.e1 == pytest.approx(-math.exp(-1.0))

    def test_family_IV(self):
        lv = eval_level(P4, 2)
        assert lv.e0 == pytest.approx(2.5)
        assert lv.e1 == pytest.approx(-math.exp(-(4.0 - 2.5**2)))

    def test_negative_index(self):
        with pytest.raises(ValueError):
            eval_level(P1, -1)


class TestTransmission:
    def test_family_I_above_barrier(self):
        # above the barrier top the closed form exceeds 1
        assert oracle_transmission(P1, 1.0) == pytest.approx(
            FOUR_PI * math.exp(-1.0), rel=1e-14)

    def test_unity_at_emax(self):
        for p in (P1, P2, P3, P4):
            m = oracle_emax(p)
            assert oracle_transmission(p, m) == pytest.approx(1.0, rel=1e-12)

    def test_family_II_value(self):
        assert oracle_transmission(P2, 0.04) == pytest.approx(
            FOUR_PI * math.exp(-5.0), rel=1e-14)

    def test_increasing_in_energy(self):
        for p in (P1, P2, P3):
            m = oracle_emax(p)
            es = np.linspace(0.05 * m, m, 40)
            ts = [oracle_transmission(p, e) for e in es]
            assert np.all(np.diff(ts) > 0.0)


class TestEmax:
    def test_family_I(self):
        assert oracle_emax(P1) == pytest.approx(1.0 / math.log(FOUR_PI), rel=1e-14)

    def test_family_II(self):
        assert oracle_emax(P2) == pytest.approx(
            1.0 / math.log(FOUR_PI) ** 2, rel=1e-14)

    def test_family_III(self):
        assert oracle_emax(P3) == pytest.approx(
            4.0 + math.log(1.0 / FOUR_PI), rel=1e-14)  # 1.46897...

    def test_parameter_gate(self):
        with pytest.raises(ParameterError):
            fam("I", a=13.0, b=1.0, c=1.0)  # a >= 4 pi b

    def test_gate_boundary(self):
        b = 1.0
        edge = FOUR_PI * b
        fam("I", a=edge * (1.0 - 1e-9), b=b, c=1.0)
        with pytest.raises(ParameterError):
            fam("I", a=edge * (1.0 + 1e-9), b=b, c=1.0)

    def test_flat_width_has_no_top(self):
        p = fam("III", a=1.0, b=0.0, N=1.0)
        with pytest.raises(ParameterError):
            oracle_emax(p)


class TestBarrierWidth:
    def test_zero_at_top(self):
        for p in (P1, P2, P3, P4):
            m = oracle_emax(p)
            assert oracle_L2(p, m) == pytest.approx(0.0, abs=1e-12)

    def test_family_III_value(self):
        # (2b/pi a) sqrt(E_max - E) with sqrt(1)
        m = oracle_emax(P3)
        assert oracle_L2(P3, m - 1.0) == pytest.approx(2.0 / math.pi, rel=1e-14)

    def test_family_I_against_quadrature(self):
        # closed form versus the defining integral of d(ln T)/dE
        m = oracle_emax(P1)
        u = lambda ep: 1.0 / ep**2  # a c / E^2 with a = c = 1
        for e in [0.05 * m, 0.3 * m, 0.8 * m]:
            direct = integrate_abel(u, e, m, "lower") / math.pi
            assert oracle_L2(P1, e) == pytest.approx(direct, rel=1e-9)

    def test_derivatives_match_finite_differences(self):
        for p in (P1, P2, P3, P4):
            m = oracle_emax(p)
            h = 1e-7 * m
            for frac in [0.2, 0.45, 0.8]:  # family IV slope is exactly 0 at 0.5
                e = frac * m
                fd = (oracle_L2(p, e + h) - oracle_L2(p, e - h)) / (2.0 * h)
                assert oracle_L2_derivative(p, e) == pytest.approx(
                    fd, rel=1e-5, abs=1e-8)

    def test_family_II_always_decreasing(self):
        m = oracle_emax(P2)
        es = np.linspace(0.005 * m, 0.995 * m, 100)
        assert all(oracle_L2_derivative(P2, e) < 0.0 for e in es)

    def test_family_IV_increasing_below_half(self):
        m = oracle_emax(P4)
        es = np.linspace(0.01 * m, 0.49 * m, 100)
        ds = [oracle_L2_derivative(P4, e) for e in es]
        assert max(ds) > 0.0
        assert all(d > 0.0 for d in ds)  # increasing on the whole half

    def test_domain_error(self):
        with pytest.raises(ValueError):
            oracle_L2(P1, 2.0 * oracle_emax(P1))


class TestDiagnostics:
    def test_family_I_state_count(self):
        d = oracle_diagnostics(P1)
        assert d.n_at_emax == pytest.approx(
            1.0 / math.log(FOUR_PI) - 0.5, rel=1e-12)  # about -0.1049
        assert d.n_at_emax < 0.0  # fewer than one trapped state

    def test_family_IV_invalid(self):
        d = oracle_diagnostics(P4)
        assert not d.barrier_width_decreasing
        assert "invalid" in d.verdict
        lo, hi = d.invalid_interval
        assert lo == 0.0 and hi == pytest.approx(0.5 * oracle_emax(P4))

    def test_family_III_critical_energy(self):
        m = oracle_emax(P3)
        assert critical_chi_energy(P3, 1.0) is None
        for chi in (0.25, 0.5, 0.75):
            ec = critical_chi_energy(P3, chi)
            assert 0.0 < ec < m
            # x2 = L2 + (1 - chi) L1 overhangs below ec: dx2/dE flips + -> -
            dx2 = lambda e: (oracle_L2_derivative(P3, e)
                             + (1.0 - chi) * 2.0 / math.sqrt(e))
            assert dx2(ec * (1.0 - 1e-6)) > 0.0 > dx2(ec * (1.0 + 1e-6))

    def test_family_II_always_valid(self):
        d = oracle_diagnostics(P2)
        assert d.barrier_width_decreasing
        assert d.verdict.startswith("valid")


class TestSpectrumShape:
    @pytest.mark.parametrize("p", [P1, P2, P3, P4], ids=["I", "II", "III", "IV"])
    def test_levels_monotone(self, p):
        n_top = max(2, int(oracle_diagnostics(p).n_at_emax))
        levels = [eval_level(p, n) for n in range(n_top + 1)]
        e0s = [lv.e0 for lv in levels]
        e1s = [lv.e1 for lv in levels]
        assert np.all(np.diff(e0s) > 0.0)
        assert np.all(np.diff(e1s) < 0.0)  # more negative with n

    def test_model_consistency(self):
        model = make_model(P1)
        for n in range(5):
            lv = eval_level(P1, n)
            assert float(model.n_of_e(lv.e0)) == pytest.approx(n, abs=1e-12)
            assert model.e1_of_e(lv.e0) == pytest.approx(lv.e1, rel=1e-12)


def test_closed_form_widths_consistency():
    w = closed_form_widths(P3, n_grid=128)
    e = float(w.L1.grid[64])  # sampled values are exact at the nodes
    h = 1e-7
    fd = (oracle_L2(P3, e + h) - oracle_L2(P3, e - h)) / (2.0 * h)
    assert w.l2_derivative(e) == pytest.approx(fd, rel=1e-6)
    assert w.L1(e) == pytest.approx(4.0 * math.sqrt(e), rel=1e-12)
    assert w.L2(e) == pytest.approx(oracle_L2(P3, e), rel=1e-12)
