"""From reconstructed widths to concrete potentials.

The well and barrier widths fix two of the three turning-point functions;
the third is chosen either through the one-parameter tilt family
x0 = -chi L1, x1 = (1 - chi) L1, or supplied by the caller.  Monotone
turning points are then inverted branch by branch into a piecewise,
single-valued potential; non-monotone ones mean an overhanging cliff and
are reported with the energy where the slope changes sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .inverse import WidthFunctions
from .numerics import (
    DEFAULT_TOL,
    SampledFunction,
    Tolerances,
    find_root,
    invert_monotone,
)

__all__ = [
    "TurningPointMap",
    "TurningPointVerdict",
    "PiecewisePotential",
    "InvalidTurningPointsError",
    "chi_turning_points",
    "custom_turning_points",
    "validate_turning_points",
    "build_potential",
    "eval_potential",
]

# a turning-point branch narrower than this fraction of the x scale is a
# vertical wall (chi = 0 or 1)
_WALL_FRACTION = 1e-12


class InvalidTurningPointsError(ValueError):
    """Turning points describe an overhanging (multi-valued) potential."""

    def __init__(self, verdict: "TurningPointVerdict"):
        super().__init__(verdict.message)
        self.verdict = verdict


@dataclass(frozen=True)
class TurningPointMap:
    """The three turning-point functions sampled on a shared energy grid."""

    x0: SampledFunction
    x1: SampledFunction
    x2: SampledFunction
    e_min: float
    e_max: float
    chi: Optional[float] = None  # None marks a caller-supplied third branch
    x0_prime: Optional[Callable[[float], float]] = None
    x1_prime: Optional[Callable[[float], float]] = None
    x2_prime: Optional[Callable[[float], float]] = None

    @property
    def grid(self) -> np.ndarray:
        return self.x0.grid


@dataclass(frozen=True)
class TurningPointVerdict:
    valid: bool
    message: str
    component: Optional[str] = None
    e_critical: Optional[float] = None


@dataclass(frozen=True)
class PiecewisePotential:
    """A single-valued potential assembled from inverted turning points.

    ``branches`` are contiguous monotone pieces of V(x), left to right;
    ``walls`` lists vertical-wall positions from degenerate (chi = 0 or 1)
    branches.  Evaluation interpolates linearly inside the owning branch
    and is undefined outside the covered range.
    """

    branches: tuple[SampledFunction, ...]
    e_min: float
    e_max: float
    x_bottom: float
    x_apex: float
    walls: tuple[float, ...] = ()

    @property
    def coverage(self) -> tuple[float, float]:
        return self.branches[0].x_min, self.branches[-1].x_max

    def __call__(self, x: float) -> float:
        lo, hi = self.coverage
        fuzz = 1e-12 * (hi - lo)
        if x < lo - fuzz or x > hi + fuzz:
            raise ValueError(
                f"position {x:g} outside the reconstructed range "
                f"[{lo:g}, {hi:g}]; the potential is undefined there")
        for branch in self.branches[:-1]:
            if x < branch.x_max:
                return branch(x)
        return self.branches[-1](x)

    def as_potential(self):
        """Adapter for the forward solver (no vertical walls supported)."""
        from .forward import PotentialFunction

        return PotentialFunction(
            evaluator=self,
            search_window=self.coverage,
            extrema_hint=(self.x_bottom, self.x_apex),
        )


def chi_turning_points(widths: WidthFunctions, chi: float) -> TurningPointMap:
    """Tilt-parameterized turning points from the reconstructed widths.

    x0 = -chi L1 and x1 = (1 - chi) L1 share the well minimum at x = 0;
    x2 = L2 + x1.  chi = 0.5 is the symmetric well; 0 and 1 degenerate one
    well wall into a vertical wall.
    """
    if not 0.0 <= chi <= 1.0:
        raise ValueError(f"chi must lie in [0, 1], got {chi}")
    grid = widths.L1.grid
    if not np.array_equal(grid, widths.L2.grid):
        raise ValueError("width functions must share one energy grid")
    l1 = widths.L1.values
    l2 = widths.L2.values
    x0 = SampledFunction(grid=grid, values=-chi * l1)
    x1 = SampledFunction(grid=grid, values=(1.0 - chi) * l1)
    x2 = SampledFunction(grid=grid, values=l2 + (1.0 - chi) * l1)

    x0p = x1p = x2p = None
    d1, d2 = widths.l1_derivative, widths.l2_derivative
    if d1 is not None:
        x0p = lambda e: -chi * d1(e)
        x1p = lambda e: (1.0 - chi) * d1(e)
        if d2 is not None:
            x2p = lambda e: d2(e) + (1.0 - chi) * d1(e)
    return TurningPointMap(x0=x0, x1=x1, x2=x2, e_min=widths.e_min,
                           e_max=widths.e_max, chi=chi,
                           x0_prime=x0p, x1_prime=x1p, x2_prime=x2p)


def custom_turning_points(widths: WidthFunctions, which: str,
                          provided) -> TurningPointMap:
    """Turning points with one branch supplied by the caller.

    ``which`` names the provided branch ("x0", "x1" or "x2"); the other two
    follow from the width identities.  The provided branch must not move in
    the wrong direction (x0 and x2 never increase with E, x1 never
    decreases); weaker monotonicity defects are left to
    validate_turning_points.
    """
    if which not in ("x0", "x1", "x2"):
        raise ValueError("which must be one of 'x0', 'x1', 'x2'")
    grid = widths.L1.grid
    vals = (np.array([float(provided(e)) for e in grid])
            if callable(provided) else np.asarray(provided.values, dtype=float))
    if vals.shape != grid.shape:
        raise ValueError("provided branch must be sampled on the width grid")
    d = np.diff(vals)
    if which in ("x0", "x2") and np.any(d > 0.0):
        raise ValueError(f"{which}(E) must not increase with E")
    if which == "x1" and np.any(d < 0.0):
        raise ValueError("x1(E) must not decrease with E")
    l1 = widths.L1.values
    l2 = widths.L2.values
    if which == "x0":
        x0 = vals
        x1 = x0 + l1
    elif which == "x1":
        x1 = vals
        x0 = x1 - l1
    else:
        x1 = vals - l2
        x0 = x1 - l1
    x2 = x1 + l2
    return TurningPointMap(
        x0=SampledFunction(grid=grid, values=x0),
        x1=SampledFunction(grid=grid, values=x1),
        x2=SampledFunction(grid=grid, values=x2),
        e_min=widths.e_min, e_max=widths.e_max, chi=None)


def _is_wall(values: np.ndarray) -> bool:
    """A degenerate branch (chi = 0 or 1) stays at one position."""
    span = float(np.max(values) - np.min(values))
    return span <= _WALL_FRACTION * max(1.0, float(np.max(np.abs(values))))


def _slope_flip(grid: np.ndarray, values: np.ndarray, expect_sign: float,
                prime: Optional[Callable[[float], float]],
                tol: Tolerances) -> tuple[bool, Optional[float]]:
    """Check d(values)/dE keeps the expected sign; locate the first flip.

    Returns (ok, e_critical).  The flip energy is refined with the exact
    branch derivative when available, else with the derivative of a
    monotone-cubic fit of the samples.
    """
    slopes = np.diff(values) / np.diff(grid)
    wrong = slopes * expect_sign <= 0.0
    if not np.any(wrong):
        return True, None
    if np.all(wrong):
        return False, None  # wrong direction throughout, no flip energy
    flips = np.flatnonzero(wrong[:-1] != wrong[1:])
    i = int(flips[0]) + 1  # first cell where the slope sign changes
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])
    if prime is None:
        fit = PchipInterpolator(grid, values).derivative()
        prime = lambda e: float(fit(e))
    try:
        e_c = find_root(prime, lo, hi, tol=tol)
    except ValueError:
        e_c = 0.5 * (lo + hi)
    return False, e_c


def validate_turning_points(tmap: TurningPointMap,
                            tol: Tolerances = DEFAULT_TOL) -> TurningPointVerdict:
    """Overhang check: all three turning points must move monotonically.

    The outer branch x2 must strictly decrease with energy; the well walls
    must tilt outward monotonically unless degenerate into vertical walls.
    On failure the verdict carries the first energy where the offending
    slope changes sign (the empirical critical energy).
    """
    if tmap.grid.size < 64:
        raise ValueError("validation needs a grid of at least 64 points")
    checks = (
        ("x2", tmap.x2, -1.0, tmap.x2_prime, False),
        ("x0", tmap.x0, -1.0, tmap.x0_prime, True),
        ("x1", tmap.x1, +1.0, tmap.x1_prime, True),
    )
    for name, branch, sign, prime, wall_ok in checks:
        if wall_ok and _is_wall(branch.values):
            continue
        ok, e_c = _slope_flip(branch.grid, branch.values, sign, prime, tol)
        if not ok:
            direction = "decrease" if sign < 0 else "increase"
            where = (f"; slope changes sign at E = {e_c:.9g}"
                     if e_c is not None else " anywhere")
            return TurningPointVerdict(
                valid=False,
                component=name,
                e_critical=e_c,
                message=(f"{name}(E) must strictly {direction} with E: the "
                         f"potential would overhang{where}"),
            )
    return TurningPointVerdict(valid=True, message="turning points monotone")


def _linear_extrapolate(grid: np.ndarray, values: np.ndarray, e: float,
                        end: str) -> float:
    if end == "lo":
        slope = (values[1] - values[0]) / (grid[1] - grid[0])
        return float(values[0] + slope * (e - grid[0]))
    slope = (values[-1] - values[-2]) / (grid[-1] - grid[-2])
    return float(values[-1] + slope * (e - grid[-1]))


def build_potential(tmap: TurningPointMap, validate: bool = True,
                    tol: Tolerances = DEFAULT_TOL) -> PiecewisePotential:
    """Invert the turning-point branches into a piecewise potential.

    The well minimum sits at the common limit of x0 and x1 at the bottom
    energy; the barrier top at the common limit of x1 and x2.  Degenerate
    branches from chi = 0 or 1 become vertical walls instead of failing
    inversion.
    """
    if validate:
        verdict = validate_turning_points(tmap, tol=tol)
        if not verdict.valid:
            raise InvalidTurningPointsError(verdict)
    grid = tmap.grid
    x0_wall = _is_wall(tmap.x0.values)
    x1_wall = _is_wall(tmap.x1.values)
    if x0_wall and x1_wall:
        raise InvalidTurningPointsError(TurningPointVerdict(
            valid=False, message="both well walls are degenerate"))

    # limit points: well bottom from x0/x1 at e_min, apex from x1/x2 at e_max
    if x0_wall:
        x_bot = float(tmap.x0.values[0])
    elif x1_wall:
        x_bot = float(tmap.x1.values[0])
    else:
        b0 = _linear_extrapolate(grid, tmap.x0.values, tmap.e_min, "lo")
        b1 = _linear_extrapolate(grid, tmap.x1.values, tmap.e_min, "lo")
        x_bot = 0.5 * (b0 + b1)
        gap = float(tmap.x1.values[0] - tmap.x0.values[0])
        x_bot = min(max(x_bot, tmap.x0.values[0] + 1e-6 * gap),
                    tmap.x1.values[0] - 1e-6 * gap)
    if x1_wall:
        x_apex = float(tmap.x1.values[-1])
    else:
        a1 = _linear_extrapolate(grid, tmap.x1.values, tmap.e_max, "hi")
        a2 = _linear_extrapolate(grid, tmap.x2.values, tmap.e_max, "hi")
        x_apex = 0.5 * (a1 + a2)
        gap = float(tmap.x2.values[-1] - tmap.x1.values[-1])
        x_apex = min(max(x_apex, tmap.x1.values[-1] + 1e-6 * gap),
                     tmap.x2.values[-1] - 1e-6 * gap)

    branches: list[SampledFunction] = []
    walls: list[float] = []

    if x0_wall:
        walls.append(x_bot)
    else:
        # extend the left wall to its barrier-top limit so the well spans
        # the full energy range of the map; keep strictly past the last
        # sample by a fraction of the local step
        last_step = abs(float(tmap.x0.values[-1] - tmap.x0.values[-2]))
        x0_top = _linear_extrapolate(grid, tmap.x0.values, tmap.e_max, "hi")
        x0_top = min(x0_top, float(tmap.x0.values[-1]) - 1e-3 * last_step)
        left_branch = _with_endpoint(tmap.x0, tmap.e_min, x_bot, "lo")
        left_branch = _with_endpoint(left_branch, tmap.e_max, x0_top, "hi")
        branches.append(invert_monotone(left_branch))

    if x1_wall:
        walls.append(x_apex)
    else:
        mid_samples = _with_endpoint(tmap.x1, tmap.e_min, x_bot, "lo")
        mid_samples = _with_endpoint(mid_samples, tmap.e_max, x_apex, "hi")
        branches.append(invert_monotone(mid_samples))

    right = _with_endpoint(tmap.x2, tmap.e_max, x_apex, "hi")
    branches.append(invert_monotone(right))

    branches.sort(key=lambda b: b.x_min)
    return PiecewisePotential(
        branches=tuple(branches),
        e_min=tmap.e_min,
        e_max=tmap.e_max,
        x_bottom=x_bot,
        x_apex=x_apex,
        walls=tuple(walls),
    )


def _with_endpoint(branch: SampledFunction, e: float, x: float,
                   end: str) -> SampledFunction:
    """Append the extrapolated limit point to a turning-point branch."""
    if end == "lo":
        grid = np.concatenate([[e], branch.grid])
        values = np.concatenate([[x], branch.values])
    else:
        grid = np.concatenate([branch.grid, [e]])
        values = np.concatenate([branch.values, [x]])
    return SampledFunction(grid=grid, values=values)


def eval_potential(pot: PiecewisePotential, x: float) -> float:
    """Potential value at x; raises outside the reconstructed coverage."""
    return pot(x)
