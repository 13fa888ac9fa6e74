"""specwell: semi-classical spectra of well-plus-barrier potentials and the
inverse reconstruction of such potentials from a complex spectrum."""

from .numerics import (
    EnergyInterval,
    SampledFunction,
    Tolerances,
    find_root,
    integrate_abel,
    integrate_singular_lower,
    integrate_singular_upper,
    invert_monotone,
)
from .spectra import AnalyticSpectrumParams, ComplexLevel, eval_level
from .ingest import DiscreteSpectrum, fit_continuum, parse_spectrum
from .inverse import SpectrumModel, WidthFunctions, invert_spectrum
from .forward import PotentialFunction, forward_spectrum, phi_of_a
from .reconstruct import (
    PiecewisePotential,
    TurningPointMap,
    build_potential,
    chi_turning_points,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticSpectrumParams",
    "ComplexLevel",
    "DiscreteSpectrum",
    "EnergyInterval",
    "PiecewisePotential",
    "PotentialFunction",
    "SampledFunction",
    "SpectrumModel",
    "Tolerances",
    "TurningPointMap",
    "WidthFunctions",
    "build_potential",
    "chi_turning_points",
    "eval_level",
    "find_root",
    "fit_continuum",
    "forward_spectrum",
    "integrate_abel",
    "integrate_singular_lower",
    "integrate_singular_upper",
    "invert_monotone",
    "invert_spectrum",
    "parse_spectrum",
    "phi_of_a",
]
