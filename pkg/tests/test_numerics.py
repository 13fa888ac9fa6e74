import math

import numpy as np
import pytest

from specwell.numerics import (
    BracketError,
    EnergyInterval,
    MonotonicityError,
    QuadratureError,
    SampledFunction,
    Tolerances,
    find_root,
    integrate_singular_lower,
    integrate_singular_upper,
    invert_monotone,
)


def brute_force_sqrt_endpoints(f, a, b, panels=1_000_000):
    """Midpoint sum on the substituted variable, split at the interval
    midpoint exactly like the integrators; independent of the adaptive path."""
    m = 0.5 * (a + b)
    total = 0.0
    for endpoint, sign, width in ((a, +1.0, math.sqrt(m - a)),
                                  (b, -1.0, math.sqrt(b - m))):
        t = (np.arange(panels // 2) + 0.5) * (width / (panels // 2))
        vals = 2.0 * t * np.array([f(endpoint + sign * ti * ti) for ti in t])
        total += float(np.sum(vals)) * (width / (panels // 2))
    return total


class TestSingularLower:
    def test_inverse_sqrt(self):
        # int_0^1 E'^{-1/2} dE' = 2
        val = integrate_singular_lower(lambda e: 1.0 / math.sqrt(e), 0.0, 1.0)
        assert val == pytest.approx(2.0, rel=1e-10)

    def test_arcsine(self):
        # int_0^1 dE'/sqrt(E'(1-E')) = pi, singular at both endpoints
        f = lambda e: 1.0 / math.sqrt(e * (1.0 - e))
        val = integrate_singular_lower(f, 0.0, 1.0)
        assert val == pytest.approx(math.pi, rel=1e-10)

    def test_sqrt_moment(self):
        # int_0^1 E'/sqrt(E') dE' = 2/3
        val = integrate_singular_lower(lambda e: e / math.sqrt(e), 0.0, 1.0)
        assert val == pytest.approx(2.0 / 3.0, rel=1e-10)

    def test_against_brute_force(self):
        cases = [
            (lambda e: 1.0 / math.sqrt(e), 0.0, 1.0),
            (lambda e: 1.0 / math.sqrt(e * (1.0 - e)), 0.0, 1.0),
            (lambda e: e / math.sqrt(e), 0.0, 1.0),
        ]
        for f, a, b in cases:
            ref = brute_force_sqrt_endpoints(f, a, b, panels=200_000)
            val = integrate_singular_lower(f, a, b)
            assert val == pytest.approx(ref, rel=1e-8)

    def test_shifted_interval(self):
        # int_2^3 dE'/sqrt(E'-2) = 2, nonzero lower endpoint
        val = integrate_singular_lower(lambda e: 1.0 / math.sqrt(e - 2.0), 2.0, 3.0)
        assert val == pytest.approx(2.0, rel=1e-10)

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            integrate_singular_lower(lambda e: 1.0, 1.0, 0.0)


class TestSingularUpper:
    def test_inverse_sqrt(self):
        val = integrate_singular_upper(lambda e: 1.0 / math.sqrt(1.0 - e), 0.0, 1.0)
        assert val == pytest.approx(2.0, rel=1e-10)

    def test_arcsine(self):
        f = lambda e: 1.0 / math.sqrt(e * (1.0 - e))
        val = integrate_singular_upper(f, 0.0, 1.0)
        assert val == pytest.approx(math.pi, rel=1e-10)

    def test_constant_after_cancellation(self):
        # sqrt(1-E') / sqrt(1-E') == 1
        f = lambda e: math.sqrt(1.0 - e) / math.sqrt(1.0 - e)
        val = integrate_singular_upper(f, 0.0, 1.0)
        assert val == pytest.approx(1.0, rel=1e-10)

    def test_against_brute_force(self):
        cases = [
            (lambda e: 1.0 / math.sqrt(1.0 - e), 0.0, 1.0),
            (lambda e: 1.0 / math.sqrt(e * (1.0 - e)), 0.0, 1.0),
            (lambda e: math.sqrt(1.0 - e) / math.sqrt(1.0 - e), 0.0, 1.0),
        ]
        for f, a, b in cases:
            ref = brute_force_sqrt_endpoints(f, a, b, panels=200_000)
            val = integrate_singular_upper(f, a, b)
            assert val == pytest.approx(ref, rel=1e-8)


def test_linearity():
    f = lambda e: 1.0 / math.sqrt(e)
    g = lambda e: math.cos(e)
    alpha, beta = 2.5, -0.75
    combo = lambda e: alpha * f(e) + beta * g(e)
    lhs = integrate_singular_lower(combo, 0.0, 1.0)
    rhs = (alpha * integrate_singular_lower(f, 0.0, 1.0)
           + beta * integrate_singular_lower(g, 0.0, 1.0))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_quadrature_error_carries_estimate():
    # a genuinely rough integrand at tiny depth budget
    rough = lambda e: 1.0 / math.sqrt(abs(math.sin(50.0 / (e + 0.01))) + 1e-6)
    with pytest.raises(QuadratureError) as exc:
        integrate_singular_lower(rough, 0.0, 1.0,
                                 tol=Tolerances(quad_rel=1e-14, quad_max_depth=3))
    assert math.isfinite(exc.value.estimate)
    assert exc.value.achieved > 1e-14


class TestFindRoot:
    def test_linear(self):
        assert find_root(lambda x: x - 0.5, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_sqrt2(self):
        root = find_root(lambda x: x * x - 2.0, 1.0, 2.0)
        assert root == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_transmission_unity_crossing(self):
        # (4 pi b / a) exp(-a c / E) = 1 with a=b=c=1 crosses at 1/ln(4 pi)
        f = lambda e: 4.0 * math.pi * math.exp(-1.0 / e) - 1.0
        root = find_root(f, 0.01, 10.0)
        assert root == pytest.approx(1.0 / math.log(4.0 * math.pi), rel=1e-10)

    def test_no_bracket(self):
        with pytest.raises(BracketError):
            find_root(lambda x: x * x + 1.0, -1.0, 1.0)

    def test_endpoint_root(self):
        assert find_root(lambda x: x, 0.0, 1.0) == 0.0

    def test_residual_or_bracket_tolerance(self):
        calls = []

        def f(x):
            calls.append(x)
            return math.tanh(3.0 * (x - 0.3))

        root = find_root(f, -1.0, 2.0)
        assert (abs(f(root)) <= 1e-9
                or abs(root - 0.3) <= 1e-12 * 3.0 + 1e-12)


class TestInvertMonotone:
    def test_increasing(self):
        f = SampledFunction(grid=[0.0, 1.0, 2.0], values=[0.0, 2.0, 4.0])
        inv = invert_monotone(f)
        assert np.allclose(inv.grid, [0.0, 2.0, 4.0])
        assert np.allclose(inv.values, [0.0, 1.0, 2.0])

    def test_harmonic_branch(self):
        # x1(E) = 2 sqrt(E) inverts to V(x) = x^2/4; grid dense where x is
        e = (np.linspace(0.0, 4.0, 400) / 2.0) ** 2
        e[1:] += 1e-12  # keep strictly increasing at the origin
        x1 = SampledFunction(grid=e, values=2.0 * np.sqrt(e))
        v = invert_monotone(x1)
        xs = np.linspace(0.0, 4.0, 50)
        assert np.allclose(v(xs), xs**2 / 4.0, atol=2e-5)
        # exact at sample points
        assert np.allclose(v(x1.values), e, atol=1e-12)

    def test_decreasing(self):
        f = SampledFunction(grid=[0.0, 1.0, 2.0], values=[4.0, 2.0, 0.0])
        inv = invert_monotone(f)
        assert np.allclose(inv.grid, [0.0, 2.0, 4.0])
        assert np.allclose(inv.values, [2.0, 1.0, 0.0])

    def test_violation_index(self):
        f = SampledFunction(grid=[0.0, 1.0, 2.0], values=[0.0, 2.0, 1.0])
        with pytest.raises(MonotonicityError) as exc:
            invert_monotone(f)
        assert exc.value.index == 2

    def test_involution(self):
        rng = np.random.default_rng(7)
        grid = np.sort(rng.uniform(0.0, 5.0, 30))
        grid += np.arange(30) * 1e-6  # guard strictness
        values = np.cumsum(rng.uniform(0.1, 1.0, 30))
        f = SampledFunction(grid=grid, values=values)
        back = invert_monotone(invert_monotone(f))
        assert np.array_equal(back.grid, f.grid)
        assert np.array_equal(back.values, f.values)

    def test_round_trip_identity_on_grid(self):
        f = SampledFunction(grid=[0.0, 0.3, 1.1, 2.0],
                            values=[-1.0, 0.2, 0.9, 3.0])
        inv = invert_monotone(f)
        assert np.allclose(inv(f.values), f.grid, atol=1e-12)


class TestTypes:
    def test_interval_validation(self):
        with pytest.raises(ValueError):
            EnergyInterval(1.0, 1.0)
        with pytest.raises(ValueError):
            EnergyInterval(0.0, math.inf)
        assert EnergyInterval(0.0, 2.0).span == 2.0

    def test_sampled_function_validation(self):
        with pytest.raises(ValueError):
            SampledFunction(grid=[0.0, 0.0, 1.0], values=[1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            SampledFunction(grid=[0.0, 1.0], values=[1.0])
        with pytest.raises(ValueError):
            SampledFunction(grid=[0.0], values=[1.0])

    def test_sampled_function_query_bounds(self):
        f = SampledFunction(grid=[0.0, 1.0], values=[0.0, 1.0])
        assert f(0.5) == 0.5
        with pytest.raises(ValueError):
            f(1.5)
