"""Inverse pipeline: complex spectrum -> well and barrier widths.

Stages, in data-dependence order: estimate the well bottom from the level
density, reconstruct the well width L1(E) by Abel inversion of the counting
function, convert the imaginary parts into a transmission curve using the
potential-independent well period, locate the barrier top from T = 1, and
reconstruct the barrier width L2(E) by Abel inversion of d(ln T)/dE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .numerics import (
    DEFAULT_TOL,
    EnergyInterval,
    SampledFunction,
    Tolerances,
    find_root,
    integrate_abel,
)

__all__ = [
    "SpectrumModel",
    "TransmissionCurve",
    "WidthFunctions",
    "WellWidthModel",
    "InvalidSpectrumError",
    "EstimationError",
    "InversionDiagnostics",
    "InversionResult",
    "estimate_emin",
    "reconstruct_L1",
    "well_period_from_width",
    "transmission_from_spectrum",
    "estimate_emax",
    "reconstruct_L2",
    "invert_spectrum",
    "energy_grid",
]


class InvalidSpectrumError(ValueError):
    """The spectrum model cannot describe a well-plus-barrier potential."""


class EstimationError(ValueError):
    """An endpoint energy could not be bracketed within the search budget."""


@dataclass(frozen=True)
class SpectrumModel:
    """Continuous complex spectrum: level index and width versus real energy.

    ``n_of_e`` must be strictly increasing on ``domain``; the imaginary part
    is carried in log space as ln(-e1) because it varies exponentially.
    Callables accept scalars or arrays.
    """

    n_of_e: Callable
    dn_de: Callable
    d2n_de2: Callable
    log_neg_e1: Callable
    dlog_neg_e1_de: Callable
    domain: EnergyInterval
    fit_notes: tuple = field(default=())

    def e1_of_e(self, e):
        return -np.exp(self.log_neg_e1(e))


@dataclass(frozen=True)
class WellWidthModel:
    """Well width as a differentiable function of energy.

    ``value`` is the Abel-reconstructed L1(E); ``derivative`` is its energy
    derivative.  For the well-period integral the derivative is carried in
    split form, L1'(E) = period_core(E) + period_sqrt_coeff / sqrt(E - e_min),
    so the inverse-square-root part can be integrated against the Abel
    kernel in closed form (the arcsine integral equals pi).
    """

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    e_min: float
    period_core: Optional[Callable[[float], float]] = None
    period_sqrt_coeff: float = 0.0

    @classmethod
    def from_spectrum_model(cls, model: SpectrumModel, e_min: float,
                            boundary_offset: float = 0.0,
                            tol: Tolerances = DEFAULT_TOL,
                            n_cache: int = 256) -> "WellWidthModel":
        """Build L1 and dL1/dE from the counting function.

        L1(E)  = 2 int n'(E') / sqrt(E - E') dE' + 2 D / sqrt(E - E_min)
        L1'(E) = 2 int n''(E') / sqrt(E - E') dE' + 2 n'(E_min) / sqrt(E - E_min)
                 - D / (E - E_min)^{3/2}
        with D = n(E_min) + 1/2 (zero when E_min is estimated from the
        spectrum).  The curvature integral is cached on a dense grid so the
        period quadrature does not nest adaptive refinements.
        """
        top = model.domain.e_max
        dn0 = float(model.dn_de(e_min))
        cache_grid = energy_grid(e_min, top, n_cache)

        def d2n(ep: float) -> float:
            return float(model.d2n_de2(ep))

        def curvature_integral(e: float) -> float:
            return 2.0 * integrate_abel(d2n, e_min, e, "upper",
                                        rel_tol=1e-9, tol=tol)

        cache_vals = np.array([curvature_integral(e) for e in cache_grid])
        if np.max(np.abs(cache_vals)) == 0.0:
            q_hat = lambda e: 0.0
        else:
            q_interp = PchipInterpolator(cache_grid, cache_vals, extrapolate=True)
            q_hat = lambda e: float(q_interp(e))

        def dn(ep: float) -> float:
            return float(model.dn_de(ep))

        def value(e: float) -> float:
            core = 2.0 * integrate_abel(dn, e_min, e, "upper", tol=tol)
            if boundary_offset != 0.0:
                core += 2.0 * boundary_offset / math.sqrt(e - e_min)
            return core

        def derivative(e: float) -> float:
            out = q_hat(e) + 2.0 * dn0 / math.sqrt(e - e_min)
            if boundary_offset != 0.0:
                out -= boundary_offset / (e - e_min) ** 1.5
            return out

        period_core = None if abs(boundary_offset) > 1e-6 else q_hat
        return cls(value=value, derivative=derivative, e_min=e_min,
                   period_core=period_core, period_sqrt_coeff=2.0 * dn0)

    @classmethod
    def from_samples(cls, l1: SampledFunction, e_min: float) -> "WellWidthModel":
        """Monotone-cubic fit of sampled L1; derivative from the interpolant.

        The interpolated derivative is bounded, so the whole of it goes into
        the smooth period part.
        """
        interp = PchipInterpolator(l1.grid, l1.values, extrapolate=True)
        deriv = interp.derivative()
        fn = lambda e: float(deriv(e))
        return cls(value=lambda e: float(interp(e)), derivative=fn,
                   e_min=e_min, period_core=fn, period_sqrt_coeff=0.0)


@dataclass(frozen=True)
class TransmissionCurve:
    """Barrier transmission stored as ln T with its energy derivative.

    ``log_T`` is strictly increasing and crosses zero at ``e_max``; logs keep
    opaque barriers (T ~ e^{-2 pi a}) well inside double precision.
    """

    log_T: Callable[[float], float]
    dlogT_dE: Callable[[float], float]
    e_max: float
    grid: np.ndarray
    log_t_samples: np.ndarray
    extrapolation: float  # distance above the trusted domain used for e_max

    def transmission(self, e: float) -> float:
        return math.exp(self.log_T(e))


@dataclass(frozen=True)
class WidthFunctions:
    """Reconstructed well and barrier widths on a shared energy grid."""

    L1: SampledFunction
    L2: SampledFunction
    e_min: float
    e_max: float
    l1_derivative: Optional[Callable[[float], float]] = None
    l2_derivative: Optional[Callable[[float], float]] = None


def energy_grid(e_lo: float, e_hi: float, n: int,
                lo_rel: float = 1e-6, hi_rel: float = 1e-6) -> np.ndarray:
    """Deterministic grid, geometric near both endpoints, uniform inside.

    The inverse-problem integrands carry inverse-square-root behavior at the
    interval ends, so resolution is concentrated there.  ``lo_rel`` and
    ``hi_rel`` set the first-point offsets from the endpoints as fractions
    of the span.
    """
    if n < 16:
        raise ValueError("grid needs at least 16 points")
    span = e_hi - e_lo
    edge = 0.05 * span
    n_edge = max(8, n // 8)
    n_mid = n - 2 * n_edge
    left = e_lo + edge * np.geomspace(lo_rel / 0.05, 1.0, n_edge)
    right = e_hi - edge * np.geomspace(1.0, hi_rel / 0.05, n_edge)
    mid = np.linspace(e_lo + edge, e_hi - edge, n_mid + 2)[1:-1]
    grid = np.unique(np.concatenate([left, mid, right]))
    return grid


def estimate_emin(model: SpectrumModel, tol: Tolerances = DEFAULT_TOL) -> float:
    """Well bottom: the energy where the continuous level index hits -1/2.

    Searches below the trusted domain with a budget of one domain span; past
    that the caller must supply the well bottom explicitly.
    """
    g = lambda e: float(model.n_of_e(e)) + 0.5
    d0, d1 = model.domain.e_min, model.domain.e_max
    span = d1 - d0
    g0 = g(d0)
    if g0 == 0.0:
        return d0
    if g0 < 0.0:
        # root sits inside the domain
        hi = d0
        step = span / 8.0
        while g(hi) < 0.0:
            hi += step
            if hi > d1:
                raise EstimationError(
                    "n(E) + 1/2 never becomes positive inside the domain; "
                    "supply e_min explicitly")
        return find_root(g, hi - step, hi, tol=tol)
    lo = d0
    step = span / 8.0
    budget_floor = d0 - 1.0 * span
    while g(lo) > 0.0:
        if lo <= budget_floor:
            raise EstimationError(
                "no root of n(E) + 1/2 within one domain span below the "
                "data; supply e_min explicitly")
        lo = max(lo - step, budget_floor)
        step *= 1.6
    return find_root(g, lo, d0, tol=tol)


def reconstruct_L1(model: SpectrumModel, e_grid: np.ndarray,
                   e_min: Optional[float] = None,
                   tol: Tolerances = DEFAULT_TOL) -> SampledFunction:
    """Well width on a grid by Abel inversion of the counting function.

    Uses the differentiated form of the inclusion integral, which avoids
    numerically differentiating through a singular quadrature.  The boundary
    term is retained for a caller-supplied well bottom; it vanishes when the
    bottom comes from estimate_emin.
    """
    e_grid = np.asarray(e_grid, dtype=float)
    if e_min is None:
        e_min = estimate_emin(model, tol=tol)
        offset = 0.0
    else:
        offset = float(model.n_of_e(e_min)) + 0.5
    if np.any(e_grid <= e_min):
        raise ValueError("grid must lie strictly above e_min")
    width = WellWidthModel.from_spectrum_model(model, e_min, offset, tol=tol,
                                               n_cache=32)
    values = np.array([width.value(e) for e in e_grid])
    if np.any(values <= 0.0):
        idx = int(np.argmax(values <= 0.0))
        raise InvalidSpectrumError(
            f"reconstructed well width is non-positive at E={e_grid[idx]:g}")
    if np.any(np.diff(values) <= 0.0):
        idx = int(np.argmax(np.diff(values) <= 0.0)) + 1
        raise InvalidSpectrumError(
            f"reconstructed well width stops increasing at E={e_grid[idx]:g}")
    return SampledFunction(grid=e_grid, values=values)


def well_period_from_width(l1, e_min: float, e: float,
                           tol: Tolerances = DEFAULT_TOL) -> float:
    """Period integral of the well at energy e, from the width alone.

    Computes int_{e_min}^{e} L1'(E') / sqrt(e - E') dE'.  Within the
    semi-classical picture this equals the position-space integral
    int dx / sqrt(e - V(x)) for every potential sharing the same L1.
    The inverse-square-root part of L1' integrates against the kernel to
    exactly pi, so only the smooth remainder needs quadrature.
    """
    if isinstance(l1, SampledFunction):
        l1 = WellWidthModel.from_samples(l1, e_min)
    if l1.period_core is None:
        raise InvalidSpectrumError(
            "well width has a non-vanishing boundary term (the supplied "
            "e_min is inconsistent with n(e_min) + 1/2 = 0); its period "
            "integral diverges")
    core = l1.period_core
    out = math.pi * l1.period_sqrt_coeff
    out += integrate_abel(core, e_min, e, "upper", tol=tol)
    return out


def transmission_from_spectrum(model: SpectrumModel, l1, e_min: float,
                               e_grid: np.ndarray,
                               tol: Tolerances = DEFAULT_TOL) -> TransmissionCurve:
    """Transmission curve T(E) = -2 e1(E) * (well period at E).

    ln T is the stored quantity; its derivative combines the analytic
    d ln(-e1)/dE supplied by the model with the period's logarithmic
    derivative n''/n' (the period equals 2 pi n'(E) for any potential built
    from the same well width, so no numerical differentiation is needed).
    Beyond the sampled grid the curve extends linearly in (ln T, E).
    """
    if isinstance(l1, SampledFunction):
        l1 = WellWidthModel.from_samples(l1, e_min)
    e_grid = np.asarray(e_grid, dtype=float)
    periods = np.array([well_period_from_width(l1, e_min, e, tol=tol)
                        for e in e_grid])
    if np.any(periods <= 0.0):
        raise InvalidSpectrumError("well period must be positive")
    log_neg = np.asarray(model.log_neg_e1(e_grid), dtype=float)
    if not np.all(np.isfinite(log_neg)):
        raise InvalidSpectrumError(
            "transmission is non-positive: the imaginary parts must be "
            "strictly negative")
    log_t = math.log(2.0) + log_neg + np.log(periods)
    period_interp = PchipInterpolator(e_grid, np.log(periods), extrapolate=False)

    lo, hi = float(e_grid[0]), float(e_grid[-1])
    log_lo, log_hi = float(log_t[0]), float(log_t[-1])

    def _dlog_scalar(e: float) -> float:
        return (float(model.dlog_neg_e1_de(e))
                + float(model.d2n_de2(e)) / float(model.dn_de(e)))

    slope_lo = _dlog_scalar(lo)
    slope_hi = _dlog_scalar(hi)

    def log_T(e):
        if np.ndim(e) == 0:
            e = float(e)
            if e < lo:
                return log_lo + slope_lo * (e - lo)
            if e > hi:
                return log_hi + slope_hi * (e - hi)
            return (math.log(2.0) + float(model.log_neg_e1(e))
                    + float(period_interp(e)))
        ea = np.asarray(e, dtype=float)
        inner = np.clip(ea, lo, hi)
        vals = (math.log(2.0)
                + np.asarray(model.log_neg_e1(inner), dtype=float)
                + period_interp(inner))
        vals = np.where(ea < lo, log_lo + slope_lo * (ea - lo), vals)
        vals = np.where(ea > hi, log_hi + slope_hi * (ea - hi), vals)
        return vals

    def dlogT(e):
        if np.ndim(e) == 0:
            e = float(e)
            if e < lo:
                return slope_lo
            if e > hi:
                return slope_hi
            return _dlog_scalar(e)
        ea = np.asarray(e, dtype=float)
        clipped = np.clip(ea, lo, hi)
        dn = np.asarray(model.dn_de(clipped), dtype=float)
        d2n = np.asarray(model.d2n_de2(clipped), dtype=float)
        vals = np.asarray(model.dlog_neg_e1_de(clipped), dtype=float) + d2n / dn
        vals = np.where(ea < lo, slope_lo, vals)
        vals = np.where(ea > hi, slope_hi, vals)
        return vals

    e_max, extrap = _emax_root(log_T, dlogT, e_grid, log_t, tol)
    return TransmissionCurve(log_T=log_T, dlogT_dE=dlogT, e_max=e_max,
                             grid=e_grid, log_t_samples=log_t,
                             extrapolation=extrap)


def _emax_root(log_T, dlogT, grid, log_t, tol: Tolerances):
    if log_t[0] >= 0.0:
        raise InvalidSpectrumError(
            "transmission already exceeds 1 at the bottom of the grid")
    above = np.flatnonzero(log_t >= 0.0)
    if above.size:
        i = int(above[0])
        root = find_root(log_T, float(grid[i - 1]), float(grid[i]), tol=tol)
        return root, 0.0
    top = float(grid[-1])
    slope = float(dlogT(top))
    if slope <= 0.0:
        raise EstimationError(
            "ln T is not increasing at the top of the grid; cannot "
            "extrapolate to T = 1, supply e_max explicitly")
    guess = top - float(log_T(top)) / slope
    hi = top + 2.0 * (guess - top) + 1e-12 * (top - float(grid[0]))
    budget = 2.0 * (top - float(grid[0]))
    if hi - top > budget:
        raise EstimationError(
            f"T = 1 crossing lies more than {budget:g} above the observed "
            "levels; supply e_max explicitly")
    root = find_root(log_T, top, hi, tol=tol)
    return root, root - top


def estimate_emax(curve: TransmissionCurve, tol: Tolerances = DEFAULT_TOL) -> float:
    """Barrier top: the unit-transmission crossing of the stored curve."""
    root, _ = _emax_root(curve.log_T, curve.dlogT_dE, curve.grid,
                         curve.log_t_samples, tol)
    return root


def reconstruct_L2(curve: TransmissionCurve, e_grid: np.ndarray,
                   tol: Tolerances = DEFAULT_TOL) -> SampledFunction:
    """Barrier width by Abel inversion of the transmission derivative.

    L2(E) = (1/pi) int_E^{e_max} d(ln T)/dE' / sqrt(E' - E) dE'; the
    d(ln T)/dE form is the numerically stable equivalent of (dT/dE)/T.
    """
    e_grid = np.asarray(e_grid, dtype=float)
    m = curve.e_max
    if np.any(e_grid >= m):
        raise ValueError("grid must lie strictly below e_max")
    u = lambda ep: float(curve.dlogT_dE(ep))
    values = np.array([
        integrate_abel(u, e, m, "lower", tol=tol) / math.pi
        for e in e_grid
    ])
    return SampledFunction(grid=e_grid, values=values)


def _l2_derivative_factory(curve: TransmissionCurve,
                           tol: Tolerances) -> Callable[[float], float]:
    """dL2/dE from the curve: Abel integral of u' minus the endpoint term."""
    u_interp = PchipInterpolator(curve.grid, curve.dlogT_dE(curve.grid),
                                 extrapolate=True)
    u_prime = u_interp.derivative()
    m = curve.e_max
    u_top = float(curve.dlogT_dE(m))

    def deriv(e: float) -> float:
        if not e < m:
            raise ValueError(f"need E < e_max={m}")
        core = integrate_abel(lambda ep: float(u_prime(ep)), e, m, "lower",
                              rel_tol=1e-9, tol=tol)
        return (core - u_top / math.sqrt(m - e)) / math.pi

    return deriv


def _monotone_verdict(grid: np.ndarray, values: np.ndarray, increasing: bool):
    d = np.diff(values)
    bad = np.flatnonzero(d <= 0.0 if increasing else d >= 0.0)
    if bad.size == 0:
        return True, None
    i0, i1 = int(bad[0]), int(bad[-1]) + 1
    return False, (float(grid[i0]), float(grid[i1]))


@dataclass
class InversionDiagnostics:
    """Validity report of one inverse run; always serializable to JSON."""

    e_min: Optional[float] = None
    e_max: Optional[float] = None
    n_at_emax: Optional[float] = None
    n_monotone: Optional[bool] = None
    transmission_monotone: Optional[bool] = None
    l1_increasing: Optional[bool] = None
    l1_violation: Optional[tuple] = None
    l2_decreasing: Optional[bool] = None
    l2_violation: Optional[tuple] = None
    emax_extrapolation: float = 0.0
    emin_extrapolation: float = 0.0
    notes: list = field(default_factory=list)
    failure: Optional[str] = None

    @property
    def spectrum_valid(self) -> bool:
        checks = (self.n_monotone, self.transmission_monotone,
                  self.l1_increasing, self.l2_decreasing)
        return self.failure is None and all(c is True for c in checks)

    def to_dict(self) -> dict:
        return {
            "e_min": self.e_min,
            "e_max": self.e_max,
            "n_at_emax": self.n_at_emax,
            "monotonicity": {
                "n_of_e": self.n_monotone,
                "transmission": self.transmission_monotone,
                "l1_increasing": self.l1_increasing,
                "l2_decreasing": self.l2_decreasing,
            },
            "l1_violation": list(self.l1_violation) if self.l1_violation else None,
            "l2_violation": list(self.l2_violation) if self.l2_violation else None,
            "extrapolation": {
                "below_domain": self.emin_extrapolation,
                "above_domain": self.emax_extrapolation,
            },
            "spectrum_valid": self.spectrum_valid,
            "notes": list(self.notes),
            "failure": self.failure,
        }


@dataclass
class InversionResult:
    widths: Optional[WidthFunctions]
    transmission: Optional[TransmissionCurve]
    diagnostics: InversionDiagnostics


def invert_spectrum(model: SpectrumModel, n_grid: int = 512,
                    e_min: Optional[float] = None,
                    e_max: Optional[float] = None,
                    tol: Tolerances = DEFAULT_TOL) -> InversionResult:
    """Full inverse pipeline with validity diagnostics.

    Stages run in data-dependence order and stop at the first hard failure,
    retaining partial results.  Non-monotone widths (a spectrum with no
    valid potential in this class) are reported as diagnostics, not raised.
    """
    diag = InversionDiagnostics()
    try:
        if e_min is None:
            e_min_val = estimate_emin(model, tol=tol)
            offset = 0.0
        else:
            e_min_val = float(e_min)
            offset = float(model.n_of_e(e_min_val)) + 0.5
        diag.e_min = e_min_val
        diag.emin_extrapolation = max(0.0, model.domain.e_min - e_min_val)

        l1_model = WellWidthModel.from_spectrum_model(model, e_min_val, offset,
                                                      tol=tol)
        # lower pad far below the width grid's, so the curve covers it
        curve_grid = energy_grid(e_min_val, model.domain.e_max,
                                 max(64, n_grid // 2), lo_rel=1e-9)
        curve = transmission_from_spectrum(model, l1_model, e_min_val,
                                           curve_grid, tol=tol)
        e_max_val = float(e_max) if e_max is not None else curve.e_max
        diag.e_max = e_max_val
        diag.emax_extrapolation = curve.extrapolation
        diag.n_at_emax = float(model.n_of_e(e_max_val))

        grid = energy_grid(e_min_val, e_max_val, n_grid)
        dn = np.asarray(model.dn_de(grid), dtype=float)
        diag.n_monotone = bool(np.all(dn > 0.0))
        dlogt = np.asarray(curve.dlogT_dE(grid), dtype=float)
        diag.transmission_monotone = bool(np.all(dlogt > 0.0))

        l1_vals = np.array([l1_model.value(e) for e in grid])
        l1 = SampledFunction(grid=grid, values=l1_vals)
        ok, viol = _monotone_verdict(grid, l1_vals, increasing=True)
        diag.l1_increasing = ok and bool(np.all(l1_vals > 0.0))
        diag.l1_violation = viol

        l2 = reconstruct_L2(curve, grid, tol=tol)
        ok, viol = _monotone_verdict(grid, l2.values, increasing=False)
        diag.l2_decreasing = ok
        diag.l2_violation = viol
        if not ok:
            diag.notes.append(
                "barrier width increases on part of the range: no valid "
                "potential in this class has the supplied spectrum")

        widths = WidthFunctions(
            L1=l1, L2=l2, e_min=e_min_val, e_max=e_max_val,
            l1_derivative=l1_model.derivative,
            l2_derivative=_l2_derivative_factory(curve, tol),
        )
        return InversionResult(widths=widths, transmission=curve,
                               diagnostics=diag)
    except (InvalidSpectrumError, EstimationError, ValueError) as exc:
        diag.failure = f"{type(exc).__name__}: {exc}"
        return InversionResult(widths=None, transmission=None, diagnostics=diag)
