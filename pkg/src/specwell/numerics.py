"""Reusable numerical kernels.

Endpoint-singular quadrature for Abel-type integrals, adaptive Simpson
refinement, bracketed (Brent) root finding, and inversion of monotone
sampled functions.  Everything here is pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "EnergyInterval",
    "SampledFunction",
    "QuadratureError",
    "BracketError",
    "MonotonicityError",
    "integrate_singular_lower",
    "integrate_singular_upper",
    "integrate_abel",
    "find_root",
    "invert_monotone",
]

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class Tolerances:
    """Shared accuracy knobs for the quadrature and root-finding kernels."""

    quad_rel: float = 1e-10
    quad_max_depth: int = 40
    root_rel: float = 1e-12


DEFAULT_TOL = Tolerances()


class QuadratureError(RuntimeError):
    """Adaptive refinement hit the depth limit before reaching tolerance.

    Carries the best estimate obtained so far and the relative tolerance
    actually achieved.
    """

    def __init__(self, message: str, estimate: float, achieved: float):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


class MonotonicityError(ValueError):
    """Samples are not strictly monotone; ``index`` is the first offender."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class EnergyInterval:
    """A finite, ordered energy interval (hbar = 2m = 1 units)."""

    e_min: float
    e_max: float

    def __post_init__(self):
        if not (math.isfinite(self.e_min) and math.isfinite(self.e_max)):
            raise ValueError("interval endpoints must be finite")
        if not self.e_min < self.e_max:
            raise ValueError(f"need e_min < e_max, got [{self.e_min}, {self.e_max}]")

    @property
    def span(self) -> float:
        return self.e_max - self.e_min

    def contains(self, e: float) -> bool:
        return self.e_min <= e <= self.e_max


@dataclass(frozen=True)
class SampledFunction:
    """Real samples on a strictly increasing grid, linearly interpolated."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or values.ndim != 1:
            raise ValueError("grid and values must be one-dimensional")
        if grid.size != values.size:
            raise ValueError("grid and values must have equal length")
        if grid.size < 2:
            raise ValueError("need at least two samples")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
            raise ValueError("samples must be finite")
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")

    @property
    def x_min(self) -> float:
        return float(self.grid[0])

    @property
    def x_max(self) -> float:
        return float(self.grid[-1])

    def __call__(self, x):
        """Linear interpolation; raises outside the grid (tiny fuzz allowed)."""
        g = self.grid
        lo = g[0]
        hi = g[-1]
        fuzz = 1e-12 * (hi - lo)
        if np.ndim(x) == 0:
            x = float(x)
            if x < lo - fuzz or x > hi + fuzz:
                raise ValueError(
                    f"query outside sampled range [{lo}, {hi}]")
            if x <= lo:
                return float(self.values[0])
            if x >= hi:
                return float(self.values[-1])
            i = int(np.searchsorted(g, x)) - 1
            w = (x - g[i]) / (g[i + 1] - g[i])
            v = self.values
            return float(v[i] + w * (v[i + 1] - v[i]))
        xa = np.asarray(x, dtype=float)
        if np.any(xa < lo - fuzz) or np.any(xa > hi + fuzz):
            raise ValueError(
                f"query outside sampled range [{lo}, {hi}]")
        return np.interp(np.clip(xa, lo, hi), g, self.values)


def _simpson_scale(g: Callable[[float], float], lo: float, hi: float, n_panels: int = 16):
    """Coarse composite Simpson estimate plus an L1-style magnitude scale."""
    xs = np.linspace(lo, hi, 2 * n_panels + 1)
    vals = np.array([g(float(x)) for x in xs])
    h = (hi - lo) / n_panels
    fa, fm, fb = vals[0:-1:2], vals[1::2], vals[2::2]
    estimate = float(np.sum(h * (fa + 4.0 * fm + fb) / 6.0))
    scale = float(np.sum(h * (np.abs(fa) + 4.0 * np.abs(fm) + np.abs(fb)) / 6.0))
    return estimate, scale


def _adaptive_simpson(g: Callable[[float], float], lo: float, hi: float,
                      rel_tol: float, max_depth: int,
                      noise_floor: Callable[..., float] | None = None) -> float:
    """Adaptive Simpson with Richardson control; raises QuadratureError on
    hitting the depth limit before the requested tolerance.

    ``noise_floor(a, b, *panel_values)`` estimates the discrepancy level a
    panel cannot resolve because of floating-point evaluation noise; panels
    whose Richardson discrepancy is below that floor are accepted, since
    further bisection would only chase rounding error.
    """
    if hi <= lo:
        return 0.0
    _, scale = _simpson_scale(g, lo, hi)
    abs_tol = rel_tol * max(scale, 1e-300)
    leftover = [0.0]  # error surrendered by depth-limited panels

    def recurse(a: float, b: float, fa: float, fm: float, fb: float,
                whole: float, tol: float, depth: int) -> float:
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = g(lm)
        frm = g(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - whole
        floor = 0.0
        if noise_floor is not None:
            floor = noise_floor(a, b, fa, flm, fm, frm, fb)
        if (abs(delta) <= 15.0 * tol or abs(delta) <= floor
                or (b - a) <= _EPS * (hi - lo)):
            return left + right + delta / 15.0
        if depth <= 0:
            leftover[0] += abs(delta) / 15.0
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1))

    fa = g(lo)
    fb = g(hi)
    fm = g(0.5 * (lo + hi))
    whole = (hi - lo) * (fa + 4.0 * fm + fb) / 6.0
    result = recurse(lo, hi, fa, fm, fb, whole, abs_tol, max_depth)
    if leftover[0] > abs_tol:
        achieved = leftover[0] / max(abs(result), 1e-300)
        raise QuadratureError(
            f"adaptive Simpson did not converge to rel_tol={rel_tol:g} "
            f"within depth {max_depth} (achieved ~{achieved:g})",
            estimate=result,
            achieved=achieved,
        )
    return result


def _sqrt_substituted(f: Callable[[float], float], endpoint: float, sign: float):
    """Map t -> 2 t f(endpoint + sign t^2), guarding the t=0 evaluation.

    The substitution turns an inverse-square-root endpoint singularity of f
    into a smooth integrand.  Below the smallest t whose square still moves
    the argument off the endpoint in floating point, g is linearly
    extrapolated from the two nearest representable nodes; this reproduces
    both the bounded-f limit (0) and the inverse-square-root limit exactly.
    """
    t_floor = math.sqrt(max(2.0 * _EPS * abs(endpoint), 1e-300))

    def g(t: float) -> float:
        if t < t_floor:
            g1 = 2.0 * t_floor * f(endpoint + sign * t_floor * t_floor)
            g2 = 4.0 * t_floor * f(endpoint + sign * 4.0 * t_floor * t_floor)
            return g1 + (g2 - g1) * (t - t_floor) / t_floor
        return 2.0 * t * f(endpoint + sign * t * t)

    return g


def _cancellation_noise(endpoint: float):
    """Noise-floor model for integrands that recompute |E' - endpoint|.

    Under E' = endpoint +- t^2 the offset is resolved only to one ulp of the
    endpoint, so an integrand carrying inverse powers of that difference has
    relative evaluation noise up to ~ eps |endpoint| / t^2.  The floor uses
    the panel's far edge, which cannot over-accept wide panels; refinement
    therefore proceeds normally until a panel sits inside the noisy zone.
    """
    t_floor = math.sqrt(max(2.0 * _EPS * abs(endpoint), 1e-300))
    arg_noise = _EPS * abs(endpoint)

    def floor(a: float, b: float, *vals: float) -> float:
        if arg_noise == 0.0:
            return 0.0
        t_eff = max(b, t_floor)
        mass = (b - a) * max(abs(v) for v in vals)
        return 2.0 * mass * arg_noise / (t_eff * t_eff)

    return floor


def _integrate_sqrt_endpoints(f, a: float, b: float, rel_tol: float,
                              max_depth: int) -> float:
    """Integrate f over [a, b] with sqrt-type behavior allowed at both ends.

    The interval is split at the midpoint; each half is mapped with
    E' = a + t^2 (left) or E' = b - t^2 (right) so that endpoint factors of
    the form (E' - a)^{-1/2} or (b - E')^{-1/2} become smooth.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    m = 0.5 * (a + b)
    left = _adaptive_simpson(_sqrt_substituted(f, a, +1.0), 0.0,
                             math.sqrt(m - a), rel_tol, max_depth,
                             noise_floor=_cancellation_noise(a))
    right = _adaptive_simpson(_sqrt_substituted(f, b, -1.0), 0.0,
                              math.sqrt(b - m), rel_tol, max_depth,
                              noise_floor=_cancellation_noise(b))
    return left + right


def integrate_abel(smooth: Callable[[float], float], a: float, b: float,
                   singular: str, rel_tol: float | None = None,
                   tol: Tolerances = DEFAULT_TOL) -> float:
    """Abel-kernel integral with the inverse-square-root factor implicit.

    Computes int_a^b smooth(E') / sqrt(E' - a) dE' (``singular="lower"``)
    or int_a^b smooth(E') / sqrt(b - E') dE' (``singular="upper"``).
    Because the kernel is cancelled analytically inside the substitution,
    the integrand is never evaluated against a catastrophically rounded
    endpoint difference; accuracy is limited only by smooth(E').
    """
    if singular not in ("lower", "upper"):
        raise ValueError("singular must be 'lower' or 'upper'")
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    rel = tol.quad_rel if rel_tol is None else rel_tol
    m = 0.5 * (a + b)
    width = b - a

    if singular == "lower":
        # near side: E' = a + t^2, kernel 1/t cancels the Jacobian 2t
        def g_near(t: float) -> float:
            return 2.0 * smooth(a + t * t)

        def g_far(t: float) -> float:
            return 2.0 * t * smooth(b - t * t) / math.sqrt(width - t * t)

        near = _adaptive_simpson(g_near, 0.0, math.sqrt(m - a), rel,
                                 tol.quad_max_depth)
        far = _adaptive_simpson(g_far, 0.0, math.sqrt(b - m), rel,
                                tol.quad_max_depth)
    else:
        def g_near(t: float) -> float:
            return 2.0 * smooth(b - t * t)

        def g_far(t: float) -> float:
            return 2.0 * t * smooth(a + t * t) / math.sqrt(width - t * t)

        near = _adaptive_simpson(g_near, 0.0, math.sqrt(b - m), rel,
                                 tol.quad_max_depth)
        far = _adaptive_simpson(g_far, 0.0, math.sqrt(m - a), rel,
                                tol.quad_max_depth)
    return near + far


def integrate_singular_lower(f: Callable[[float], float], a: float, b: float,
                             rel_tol: float | None = None,
                             tol: Tolerances = DEFAULT_TOL) -> float:
    """Integrate f over (a, b) where f may blow up like 1/sqrt(E' - a).

    Requires f(E') * sqrt(E' - a) bounded near a.  The substitution
    E' = a + t^2 removes the singularity exactly; the integral is then
    evaluated by adaptive Simpson refinement to the relative tolerance.
    A matching substitution is applied at b, so an integrable
    1/sqrt(b - E') factor there is tolerated as well.
    """
    rel = tol.quad_rel if rel_tol is None else rel_tol
    return _integrate_sqrt_endpoints(f, a, b, rel, tol.quad_max_depth)


def integrate_singular_upper(f: Callable[[float], float], a: float, b: float,
                             rel_tol: float | None = None,
                             tol: Tolerances = DEFAULT_TOL) -> float:
    """Mirror of integrate_singular_lower for a 1/sqrt(b - E') endpoint.

    Uses the substitution E' = b - t^2 at the upper end (and the mirrored
    one at a), so integrands singular at either or both ends are handled.
    """
    rel = tol.quad_rel if rel_tol is None else rel_tol
    return _integrate_sqrt_endpoints(f, a, b, rel, tol.quad_max_depth)


def find_root(f: Callable[[float], float], lo: float, hi: float,
              f_tol: float = 0.0, x_rel: float | None = None,
              tol: Tolerances = DEFAULT_TOL) -> float:
    """Brent-style bracketed root of a continuous scalar function.

    Terminates when |f| <= f_tol or the bracket shrinks below
    x_rel * (hi - lo).  f(lo) and f(hi) must not have the same strict sign.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    x_rel = tol.root_rel if x_rel is None else x_rel
    a, b = lo, hi
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={fa:g}, f(hi)={fb:g}"
        )
    x_tol = x_rel * (hi - lo)
    c, fc = a, fa
    d = e = b - a
    while True:
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * x_tol
        m = 0.5 * (c - b)
        if abs(m) <= tol1 or fb == 0.0 or abs(fb) <= f_tol:
            return b
        if abs(e) < tol1 or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol1 * q), abs(0.5 * e * q)):
                e = d
                d = p / q
            else:
                d = e = m
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += tol1 if m > 0.0 else -tol1
        fb = f(b)
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            d = e = b - a


def invert_monotone(f: SampledFunction) -> SampledFunction:
    """Invert strictly monotone samples, swapping grid and values.

    The result interpolates linearly, so f(f^{-1}(y)) = y holds exactly at
    the sample points.  Raises MonotonicityError naming the first index at
    which strict monotonicity fails.
    """
    v = f.values
    d = np.diff(v)
    if d[0] == 0.0:
        raise MonotonicityError("values not strictly monotone at index 1", 1)
    increasing = d[0] > 0.0
    bad = np.flatnonzero(d <= 0.0 if increasing else d >= 0.0)
    if bad.size:
        idx = int(bad[0]) + 1
        raise MonotonicityError(
            f"values not strictly monotone at index {idx}", idx
        )
    if increasing:
        return SampledFunction(grid=v.copy(), values=f.grid.copy())
    return SampledFunction(grid=v[::-1].copy(), values=f.grid[::-1].copy())
