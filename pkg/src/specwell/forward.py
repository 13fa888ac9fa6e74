"""Direct semi-classical problem for a well-plus-barrier potential.

Turning points, action and period integrals, real quantization levels, the
exponentially small imaginary parts from barrier penetration, the barrier
transmission, and the Gamma-function phase correction of the generalized
quantization rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from scipy.special import loggamma

from .ingest import DiscreteSpectrum
from .numerics import (
    DEFAULT_TOL,
    Tolerances,
    find_root,
    integrate_singular_lower,
)
from .spectra import ComplexLevel

__all__ = [
    "PotentialFunction",
    "TurningPoints",
    "TurningPointError",
    "LevelNotFoundError",
    "turning_points",
    "well_action",
    "barrier_action",
    "well_period",
    "bs_level",
    "gamow_imag",
    "transmission_forward",
    "phi_of_a",
    "generalized_bs_residual",
    "forward_spectrum",
    "harmonic_barrier_demo",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class TurningPointError(ValueError):
    """The requested energy has no classical turning point in the window."""


class LevelNotFoundError(ValueError):
    """No quantized level with the requested index fits below the barrier."""

    def __init__(self, message: str, action_at_top: float):
        super().__init__(message)
        self.action_at_top = action_at_top


@dataclass
class PotentialFunction:
    """A well-then-barrier potential on a finite search window.

    ``evaluator`` must be reentrant (it is called concurrently from
    quadrature).  ``extrema_hint`` short-circuits the extremum search when
    the well bottom and barrier top positions are already known.
    """

    evaluator: Callable[[float], float]
    search_window: tuple[float, float]
    extrema_hint: Optional[tuple[float, float]] = None
    _extrema: Optional[tuple[float, float, float, float]] = field(
        default=None, repr=False)

    def v(self, x: float) -> float:
        return float(self.evaluator(x))

    def extrema(self) -> tuple[float, float, float, float]:
        """(x_min, v_min, x_top, v_top), located once and cached."""
        if self._extrema is None:
            if self.extrema_hint is not None:
                x_min, x_top = self.extrema_hint
            else:
                x_min, x_top = _locate_extrema(self.v, *self.search_window)
            self._extrema = (x_min, self.v(x_min), x_top, self.v(x_top))
        return self._extrema


@dataclass(frozen=True)
class TurningPoints:
    """The three classical crossings V(x) = E, ordered left to right."""

    x0: float
    x1: float
    x2: float
    energy: float


def _golden_section(f: Callable[[float], float], lo: float, hi: float,
                    minimize: bool, iters: int = 200) -> float:
    """Golden-section extremum of a unimodal function on [lo, hi]."""
    sign = 1.0 if minimize else -1.0
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = sign * f(c)
    fd = sign * f(d)
    for _ in range(iters):
        if b - a <= 1e-13 * (hi - lo):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = sign * f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = sign * f(d)
    return 0.5 * (a + b)


def _locate_extrema(v: Callable[[float], float], lo: float, hi: float):
    """Coarse scan for the barrier top, then the well bottom to its left.

    The confining wall may rise above the barrier, so the barrier top is
    the last interior local maximum, not the global one; the well bottom is
    the lowest point left of it.
    """
    n_scan = 513
    xs = [lo + (hi - lo) * i / (n_scan - 1) for i in range(n_scan)]
    vals = [v(x) for x in xs]
    i_top = None
    for i in range(n_scan - 2, 0, -1):
        if vals[i] > vals[i - 1] and vals[i] >= vals[i + 1]:
            i_top = i
            break
    if i_top is None:
        raise TurningPointError(
            "potential has no interior local maximum inside the search "
            "window")
    i_min = min(range(i_top + 1), key=lambda i: vals[i])
    if i_min == 0 or i_min >= i_top:
        raise TurningPointError(
            "potential has no interior minimum left of its maximum inside "
            "the search window")
    x_min = _golden_section(v, xs[i_min - 1], xs[i_min + 1], minimize=True)
    x_top = _golden_section(v, xs[i_top - 1], xs[i_top + 1], minimize=False)
    return x_min, x_top


# machine-tight roots: the period integrand diverges at the crossings, so
# endpoint error must stay at rounding level
_ROOT_X_REL = 1e-15


def _well_pair(pot: PotentialFunction, e: float,
               tol: Tolerances) -> tuple[float, float]:
    x_min, v_min, x_top, v_top = pot.extrema()
    if not v_min < e < v_top:
        raise TurningPointError(
            f"energy {e:g} outside the open well range ({v_min:g}, {v_top:g})")
    lo, _ = pot.search_window
    g = lambda x: pot.v(x) - e
    if g(lo) < 0.0:
        raise TurningPointError(
            f"left window edge lies below E={e:g}; no inner turning point")
    x0 = find_root(g, lo, x_min, x_rel=_ROOT_X_REL, tol=tol)
    x1 = find_root(g, x_min, x_top, x_rel=_ROOT_X_REL, tol=tol)
    return x0, x1


def _outer_point(pot: PotentialFunction, e: float, tol: Tolerances) -> float:
    _, _, x_top, _ = pot.extrema()
    _, hi = pot.search_window
    g = lambda x: pot.v(x) - e
    if g(hi) > 0.0:
        raise TurningPointError(
            f"right window edge lies above E={e:g}; no outer turning point")
    return find_root(g, x_top, hi, x_rel=_ROOT_X_REL, tol=tol)


def turning_points(pot: PotentialFunction, e: float,
                   tol: Tolerances = DEFAULT_TOL) -> TurningPoints:
    """The three roots of V(x) = E, bracketed via the potential's extrema.

    The located minimum and maximum split the window into three monotone
    branches, so each root bracket is guaranteed for any well-then-barrier
    shape.
    """
    x0, x1 = _well_pair(pot, e, tol)
    x2 = _outer_point(pot, e, tol)
    return TurningPoints(x0=x0, x1=x1, x2=x2, energy=e)


def well_action(pot: PotentialFunction, e: float,
                tol: Tolerances = DEFAULT_TOL) -> float:
    """Action integral of sqrt(E - V) across the well at energy E."""
    x0, x1 = _well_pair(pot, e, tol)
    f = lambda x: math.sqrt(max(e - pot.v(x), 0.0))
    return integrate_singular_lower(f, x0, x1, tol=tol)


def barrier_action(pot: PotentialFunction, e: float,
                   tol: Tolerances = DEFAULT_TOL) -> float:
    """Action integral of sqrt(V - E) across the barrier at energy E."""
    _, x1 = _well_pair(pot, e, tol)
    x2 = _outer_point(pot, e, tol)
    f = lambda x: math.sqrt(max(pot.v(x) - e, 0.0))
    return integrate_singular_lower(f, x1, x2, tol=tol)


def well_period(pot: PotentialFunction, e: float,
                tol: Tolerances = DEFAULT_TOL) -> float:
    """Period integral of 1/sqrt(E - V) across the well at energy E.

    The floor keeps evaluations bounded where rounding puts V a hair above
    E just past a turning point; that zone is rounding-sized, so its
    contribution is negligible.
    """
    x0, x1 = _well_pair(pot, e, tol)
    _, v_min, _, v_top = pot.extrema()
    floor = 16.0 * 2.220446049250313e-16 * max(abs(e), abs(v_top), abs(v_min))
    f = lambda x: 1.0 / math.sqrt(max(e - pot.v(x), floor))
    return integrate_singular_lower(f, x0, x1, tol=tol)


def bs_level(pot: PotentialFunction, n: int,
             tol: Tolerances = DEFAULT_TOL) -> float:
    """Real part of level n: the energy whose well action is pi (n + 1/2)."""
    if n < 0:
        raise ValueError("level index must be non-negative")
    _, v_min, _, v_top = pot.extrema()
    span = v_top - v_min
    target = math.pi * (n + 0.5)
    e_lo = v_min + 1e-9 * span
    e_hi = v_top - 1e-9 * span
    top_action = well_action(pot, e_hi, tol=tol)
    if target > top_action:
        raise LevelNotFoundError(
            f"level n={n} needs well action {target:g} but the well only "
            f"reaches {top_action:g} at the barrier top", top_action)
    g = lambda e: well_action(pot, e, tol=tol) - target
    return find_root(g, e_lo, e_hi, tol=tol)


def gamow_imag(pot: PotentialFunction, e0: float,
               tol: Tolerances = DEFAULT_TOL) -> float:
    """Imaginary part of a level: barrier penetration over twice the period.

    E1 = -exp(-2 * barrier_action) / (2 * well_period), evaluated at the
    real level energy; always negative and exponentially small for opaque
    barriers.
    """
    s2 = barrier_action(pot, e0, tol=tol)
    period = well_period(pot, e0, tol=tol)
    return -math.exp(-2.0 * s2) / (2.0 * period)


def transmission_forward(pot: PotentialFunction, e: float,
                         tol: Tolerances = DEFAULT_TOL) -> float:
    """Barrier transmission exp(-2 * barrier_action); equals 1 at the top."""
    _, _, _, v_top = pot.extrema()
    if not e < v_top:
        raise TurningPointError(f"need E < barrier top {v_top:g}")
    return math.exp(-2.0 * barrier_action(pot, e, tol=tol))


def phi_of_a(a: float) -> complex:
    """Gamma-function phase correction of the generalized quantization rule.

    phi(a) = a (1 - ln a) + (1/2i) ln[ G(1/2 + ia) /
             (G(1/2 - ia) (1 + e^{-2 pi a})) ].

    The two Gamma factors are conjugate, so the ratio has unit modulus and
    the imaginary part reduces exactly to (1/2) ln(1 + e^{-2 pi a}); the
    real part is the continuous phase of loggamma plus a (1 - ln a), which
    decays like 1/(24 a) for opaque barriers.
    """
    if a < 0.0:
        raise ValueError(f"need a >= 0, got {a}")
    im = 0.5 * math.log1p(math.exp(-2.0 * math.pi * a))
    if a == 0.0:
        return complex(0.0, im)
    re = a * (1.0 - math.log(a)) + loggamma(complex(0.5, a)).imag
    return complex(re, im)


def generalized_bs_residual(pot: PotentialFunction, e: complex, n: int,
                            tol: Tolerances = DEFAULT_TOL) -> complex:
    """Residual of the generalized quantization rule at a complex energy.

    Both integrals are evaluated at Re(E); the imaginary part enters
    linearly through the period integral (first-order treatment).  A zero
    residual reproduces the expanded level pair in the opaque-barrier
    limit.
    """
    e0 = float(e.real)
    s1 = well_action(pot, e0, tol=tol)
    period = well_period(pot, e0, tol=tol)
    a = barrier_action(pot, e0, tol=tol) / math.pi
    return (s1 + 0.5j * e.imag * period
            - math.pi * (n + 0.5) + 0.5 * phi_of_a(a))


def forward_spectrum(pot: PotentialFunction, n_max: int,
                     tol: Tolerances = DEFAULT_TOL) -> DiscreteSpectrum:
    """Levels n = 0 .. n_max, truncated at the barrier top.

    Each level pairs the quantized real part with its barrier-penetration
    imaginary part; the list may be shorter than requested when the well
    holds fewer states.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    levels = []
    for n in range(n_max + 1):
        try:
            e0 = bs_level(pot, n, tol=tol)
        except LevelNotFoundError:
            break
        levels.append(ComplexLevel(n=n, e0=e0, e1=gamow_imag(pot, e0, tol=tol)))
    return DiscreteSpectrum(levels=tuple(levels))


def harmonic_barrier_demo(a: float = 1.0) -> PotentialFunction:
    """Built-in demo: harmonic well joined to an inverted-parabola barrier.

    V = (a^2/4) x^2 up to V = 9, then a parabola peaking at V = 10.  The
    well region is exactly harmonic below the junction, so the low levels
    are a (n + 1/2) to root tolerance.
    """
    if a <= 0.0:
        raise ValueError("need a > 0")
    x_join = 6.0 / a
    x_peak = 8.0 / a
    k = (10.0 - 9.0) / (x_peak - x_join) ** 2

    def v(x: float) -> float:
        if x <= x_join:
            return 0.25 * a * a * x * x
        return 10.0 - k * (x - x_peak) ** 2

    window = (-8.0 / a, 15.5 / a)
    return PotentialFunction(evaluator=v, search_window=window,
                             extrema_hint=(0.0, x_peak))
