"""Analytic spectrum families for quasi-stationary states.

Four closed-form complex spectra E_n = e0(n) + i e1(n), each with exact
expressions for the transmission, the barrier top energy, the barrier width
and its derivative.  These serve both as user-selectable inputs to the
inverse pipeline and as ground truth in tests.

All families share the real part e0 = a (n + 1/2); they differ in how the
exponentially small imaginary part decays with n:

    I   : e1 = -b exp(-c / (n + 1/2))
    II  : e1 = -b exp(-c / sqrt(n + 1/2))
    III : e1 = -exp(-(N - b (n + 1/2)))
    IV  : e1 = -exp(-(N - b (n + 1/2)^2))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numerics import EnergyInterval, SampledFunction

__all__ = [
    "Family",
    "AnalyticSpectrumParams",
    "ComplexLevel",
    "ParameterError",
    "eval_level",
    "oracle_transmission",
    "oracle_emax",
    "oracle_L2",
    "oracle_L2_derivative",
    "oracle_L1",
    "oracle_L1_derivative",
    "critical_chi_energy",
    "oracle_diagnostics",
    "SpectrumDiagnostics",
    "make_model",
    "closed_form_widths",
]

FOUR_PI = 4.0 * math.pi

Family = str  # one of "I", "II", "III", "IV"
_FAMILIES = ("I", "II", "III", "IV")


class ParameterError(ValueError):
    """Spectrum parameters violate a family's existence condition."""


@dataclass(frozen=True)
class ComplexLevel:
    """One quasi-stationary level: index n, real energy e0, width part e1 < 0."""

    n: int
    e0: float
    e1: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("level index must be non-negative")
        if not self.e1 < 0.0:
            raise ValueError(f"imaginary part must be negative, got {self.e1}")


@dataclass(frozen=True)
class AnalyticSpectrumParams:
    """Parameters of one analytic family.

    Families I and II use (a, b, c); families III and IV use (a, b, N) where
    b is the slope parameter of the exponent (b = 0 degenerates to an
    n-independent width and has no finite barrier top).
    """

    family: Family
    a: float
    b: float
    c: Optional[float] = None
    N: Optional[float] = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if not self.a > 0.0:
            raise ParameterError(f"need a > 0, got a={self.a}")
        if self.family in ("I", "II"):
            if self.c is None:
                raise ParameterError(f"family {self.family} requires c")
            if not self.b > 0.0 or not self.c > 0.0:
                raise ParameterError(
                    f"family {self.family} needs b > 0 and c > 0"
                )
            # barrier top must sit above the well bottom
            if not self.a < FOUR_PI * self.b:
                raise ParameterError(
                    f"family {self.family} requires a < 4*pi*b "
                    f"(got a={self.a}, 4*pi*b={FOUR_PI * self.b})"
                )
        else:
            if self.N is None:
                raise ParameterError(f"family {self.family} requires N")
            if self.b < 0.0:
                raise ParameterError("slope parameter b must be >= 0")
            if self.b > 0.0 and not self.N + math.log(self.a / FOUR_PI) > 0.0:
                raise ParameterError(
                    f"family {self.family} requires N + ln(a/4pi) > 0 for a "
                    f"positive barrier top (got {self.N + math.log(self.a / FOUR_PI)})"
                )

    def n_of_e(self, e):
        """Continuous level index, shared by all four families."""
        return e / self.a - 0.5

    def log_neg_e1_of_e(self, e):
        """ln(-e1) as a function of the real energy."""
        scalar = np.ndim(e) == 0
        nph = (float(e) if scalar else np.asarray(e, dtype=float)) / self.a
        sqrt = math.sqrt if scalar else np.sqrt
        if self.family == "I":
            out = math.log(self.b) - self.c / nph
        elif self.family == "II":
            out = math.log(self.b) - self.c / sqrt(nph)
        elif self.family == "III":
            out = -(self.N - self.b * nph)
        else:
            out = -(self.N - self.b * nph**2)
        return out

    def dlog_neg_e1_de(self, e):
        """d/dE of ln(-e1)."""
        scalar = np.ndim(e) == 0
        ea = float(e) if scalar else np.asarray(e, dtype=float)
        if self.family == "I":
            return self.a * self.c / ea**2
        if self.family == "II":
            return 0.5 * self.c * math.sqrt(self.a) * ea**-1.5
        if self.family == "III":
            return self.b / self.a if scalar else np.full_like(ea, self.b / self.a)
        return 2.0 * self.b * ea / self.a**2


def eval_level(params: AnalyticSpectrumParams, n: int) -> ComplexLevel:
    """Exact evaluation of the family formula at integer index n >= 0."""
    if n < 0:
        raise ValueError("n must be non-negative")
    nph = n + 0.5
    e0 = params.a * nph
    if params.family == "I":
        e1 = -params.b * math.exp(-params.c / nph)
    elif params.family == "II":
        e1 = -params.b * math.exp(-params.c / math.sqrt(nph))
    elif params.family == "III":
        e1 = -math.exp(-(params.N - params.b * nph))
    else:
        e1 = -math.exp(-(params.N - params.b * nph**2))
    return ComplexLevel(n=n, e0=e0, e1=e1)


def oracle_transmission(params: AnalyticSpectrumParams, e: float) -> float:
    """Closed-form transmission T(E); exceeds 1 above the barrier top."""
    if not e > 0.0:
        raise ValueError(f"need E > 0, got {e}")
    a = params.a
    if params.family == "I":
        return FOUR_PI * params.b / a * math.exp(-a * params.c / e)
    if params.family == "II":
        return FOUR_PI * params.b / a * math.exp(-params.c * math.sqrt(a / e))
    if params.family == "III":
        return FOUR_PI / a * math.exp(-params.N + params.b * e / a)
    return FOUR_PI / a * math.exp(-params.N + params.b * e**2 / a**2)


def oracle_emax(params: AnalyticSpectrumParams) -> float:
    """Barrier top energy, the root of T(E) = 1."""
    a, b = params.a, params.b
    if params.family == "I":
        return a * params.c / math.log(FOUR_PI * b / a)
    if params.family == "II":
        return a * params.c**2 / math.log(FOUR_PI * b / a) ** 2
    if b == 0.0:
        raise ParameterError(
            f"family {params.family} with b = 0 has no finite barrier top"
        )
    top = params.N + math.log(a / FOUR_PI)
    if params.family == "III":
        return a / b * top
    return math.sqrt(a**2 / b * top)


def oracle_L1(params: AnalyticSpectrumParams, e) -> float:
    """Well width, identical for all families: (4/a) sqrt(E)."""
    return 4.0 / params.a * np.sqrt(e)


def oracle_L1_derivative(params: AnalyticSpectrumParams, e) -> float:
    return 2.0 / (params.a * np.sqrt(e))


def oracle_L2(params: AnalyticSpectrumParams, e: float) -> float:
    """Closed-form barrier width on (0, E_max]."""
    m = oracle_emax(params)
    if not 0.0 < e <= m * (1.0 + 1e-12):
        raise ValueError(f"need 0 < E <= E_max={m}, got E={e}")
    e = min(e, m)
    a, b = params.a, params.b
    if params.family == "I":
        c = params.c
        return (a * c / (math.pi * m * e**1.5)
                * (math.sqrt(m - e) * math.sqrt(e)
                   + m * math.atan(math.sqrt((m - e) / e))))
    if params.family == "II":
        return params.c * math.sqrt(a) / math.pi * math.sqrt(1.0 - e / m) / e
    if params.family == "III":
        return 2.0 * b / (math.pi * a) * math.sqrt(m - e)
    return 4.0 * b / (3.0 * math.pi * a**2) * math.sqrt(m - e) * (m + 2.0 * e)


def oracle_L2_derivative(params: AnalyticSpectrumParams, e: float) -> float:
    """Exact dL2/dE on (0, E_max)."""
    m = oracle_emax(params)
    if not 0.0 < e < m:
        raise ValueError(f"need 0 < E < E_max={m}, got E={e}")
    a, b = params.a, params.b
    if params.family == "I":
        c = params.c
        r = math.sqrt((m - e) / e)
        return (a * c / math.pi) * (
            -1.0 / (2.0 * m * e * math.sqrt(m - e))
            - math.sqrt(m - e) / (m * e**2)
            - 1.5 * e**-2.5 * math.atan(r)
            - 1.0 / (2.0 * e**2 * math.sqrt(m - e))
        )
    if params.family == "II":
        return (params.c * math.sqrt(a) / (2.0 * math.pi)
                * (e - 2.0 * m) / (e**2 * m * math.sqrt(1.0 - e / m)))
    if params.family == "III":
        return -b / (math.pi * a * math.sqrt(m - e))
    return (4.0 * b / (3.0 * math.pi * a**2)
            * (2.0 * math.sqrt(m - e) - (m + 2.0 * e) / (2.0 * math.sqrt(m - e))))


def critical_chi_energy(params: AnalyticSpectrumParams, chi: float) -> Optional[float]:
    """Family III: energy where the outer turning point stops decreasing.

    For chi < 1 the tilted reconstruction always develops an overhanging
    cliff at E_c = E_max / (1 + [b / (2 pi (1 - chi))]^2); chi = 1 is the
    only valid choice.  Returns None when no critical energy exists.
    """
    if params.family != "III":
        raise ValueError("critical energy formula applies to family III only")
    if not 0.0 <= chi <= 1.0:
        raise ValueError("chi must lie in [0, 1]")
    if chi == 1.0:
        return None
    m = oracle_emax(params)
    return m / (1.0 + (params.b / (2.0 * math.pi * (1.0 - chi))) ** 2)


@dataclass(frozen=True)
class SpectrumDiagnostics:
    """Validity report for one analytic family."""

    family: Family
    e_max: float
    n_at_emax: float
    barrier_width_decreasing: bool
    verdict: str
    invalid_interval: Optional[tuple[float, float]] = None


def oracle_diagnostics(params: AnalyticSpectrumParams) -> SpectrumDiagnostics:
    """Approximate trapped-state count and family-specific validity verdict."""
    m = oracle_emax(params)
    n_top = params.n_of_e(m)
    if params.family == "IV":
        return SpectrumDiagnostics(
            family=params.family,
            e_max=m,
            n_at_emax=n_top,
            barrier_width_decreasing=False,
            verdict="invalid: dL2/dE > 0 on (E_min, E_max/2)",
            invalid_interval=(0.0, 0.5 * m),
        )
    if params.family == "III":
        return SpectrumDiagnostics(
            family=params.family,
            e_max=m,
            n_at_emax=n_top,
            barrier_width_decreasing=True,
            verdict="valid only at chi = 1 (tilted wells overhang below E_c)",
        )
    if params.family == "II":
        verdict = "valid: dL2/dE < 0 everywhere"
    else:
        verdict = "valid barrier width; turning-point monotonicity is chi-dependent"
    return SpectrumDiagnostics(
        family=params.family,
        e_max=m,
        n_at_emax=n_top,
        barrier_width_decreasing=True,
        verdict=verdict,
    )


def make_model(params: AnalyticSpectrumParams):
    """Continuous spectrum model backing the inverse pipeline.

    Imported lazily to keep this module importable without the pipeline.
    """
    from .inverse import SpectrumModel

    try:
        e_top = 4.0 * oracle_emax(params)
    except ParameterError:
        e_top = 100.0 * params.a
    return SpectrumModel(
        n_of_e=params.n_of_e,
        dn_de=lambda e: (np.full_like(np.asarray(e, dtype=float), 1.0 / params.a)
                         if np.ndim(e) else 1.0 / params.a),
        d2n_de2=lambda e: (np.zeros_like(np.asarray(e, dtype=float))
                           if np.ndim(e) else 0.0),
        log_neg_e1=params.log_neg_e1_of_e,
        dlog_neg_e1_de=params.dlog_neg_e1_de,
        domain=EnergyInterval(0.0, e_top),
    )


def closed_form_widths(params: AnalyticSpectrumParams, n_grid: int = 256):
    """WidthFunctions built from the closed forms, with exact derivatives.

    Useful as an oracle-grade input to the reconstruction stage, bypassing
    the Abel quadrature entirely.
    """
    from .inverse import WidthFunctions

    m = oracle_emax(params)
    pad = 1e-6 * m
    grid = np.linspace(pad, m - pad, n_grid)
    l1 = np.array([oracle_L1(params, e) for e in grid])
    l2 = np.array([oracle_L2(params, e) for e in grid])
    return WidthFunctions(
        L1=SampledFunction(grid=grid, values=l1),
        L2=SampledFunction(grid=grid, values=l2),
        e_min=0.0,
        e_max=m,
        l1_derivative=lambda e: oracle_L1_derivative(params, e),
        l2_derivative=lambda e: oracle_L2_derivative(params, e),
    )
