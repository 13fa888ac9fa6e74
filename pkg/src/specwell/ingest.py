"""Discrete complex spectra: parsing, validation, and continuum fitting.

A finite list of complex levels becomes a continuous spectrum model via
monotone shape-preserving cubic interpolation of the counting function and
of ln(-e1); widths vary exponentially, so the imaginary part is always
fitted in log space.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .inverse import EstimationError, SpectrumModel, estimate_emin
from .numerics import EnergyInterval
from .spectra import ComplexLevel

__all__ = [
    "DiscreteSpectrum",
    "SpectrumParseError",
    "FitPolicy",
    "ModelReport",
    "parse_spectrum",
    "serialize_spectrum",
    "fit_continuum",
    "validate_model",
]


class SpectrumParseError(ValueError):
    """Malformed or invariant-violating spectrum input; carries the row."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class DiscreteSpectrum:
    """Ordered complex levels (n, e0, e1).

    Hard invariants: consecutive integer indices, strictly increasing real
    parts, strictly negative imaginary parts.  Growth of |e1| with n is a
    physical expectation but only a diagnostic, checked at fit time.
    """

    levels: tuple[ComplexLevel, ...]

    def __post_init__(self):
        if not self.levels:
            raise ValueError("spectrum has no levels")
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        for i, lv in enumerate(levels[1:], start=1):
            prev = levels[i - 1]
            if lv.n != prev.n + 1:
                raise SpectrumParseError(
                    f"level indices must increase by 1 ({prev.n} -> {lv.n})",
                    row=i)
            if not lv.e0 > prev.e0:
                raise SpectrumParseError(
                    f"real parts must strictly increase "
                    f"({prev.e0:g} -> {lv.e0:g})", row=i)

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def n_values(self) -> np.ndarray:
        return np.array([lv.n for lv in self.levels], dtype=float)

    @property
    def e0_values(self) -> np.ndarray:
        return np.array([lv.e0 for lv in self.levels])

    @property
    def e1_values(self) -> np.ndarray:
        return np.array([lv.e1 for lv in self.levels])


def _parse_csv(text: str) -> DiscreteSpectrum:
    levels = []
    for row, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise SpectrumParseError(
                f"expected 3 columns (n, re_e, im_e), got {len(parts)}", row)
        if levels == [] and not _is_number(parts[0]):
            continue  # optional header
        try:
            n = int(parts[0])
            e0 = float(parts[1])
            e1 = float(parts[2])
        except ValueError as exc:
            raise SpectrumParseError(str(exc), row) from exc
        try:
            levels.append(ComplexLevel(n=n, e0=e0, e1=e1))
        except ValueError as exc:
            raise SpectrumParseError(str(exc), row) from exc
    if not levels:
        raise SpectrumParseError("no data rows found")
    return DiscreteSpectrum(levels=tuple(levels))


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _parse_json(text: str) -> DiscreteSpectrum:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpectrumParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise SpectrumParseError("expected a JSON array of level objects")
    levels = []
    for row, item in enumerate(data):
        try:
            levels.append(ComplexLevel(n=int(item["n"]), e0=float(item["re"]),
                                       e1=float(item["im"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpectrumParseError(str(exc), row) from exc
    if not levels:
        raise SpectrumParseError("no levels in JSON array")
    return DiscreteSpectrum(levels=tuple(levels))


def parse_spectrum(source, fmt: str = "csv") -> DiscreteSpectrum:
    """Read a discrete spectrum from text, bytes, or a file-like object.

    CSV columns are ``n,re_e,im_e`` with an optional header and ``#``
    comments; JSON is an array of {"n", "re", "im"} objects.  Invariant
    violations are rejected with the offending row number.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if fmt == "csv":
        return _parse_csv(source)
    if fmt == "json":
        return _parse_json(source)
    raise ValueError(f"unknown format {fmt!r}")


def serialize_spectrum(spec: DiscreteSpectrum, fmt: str = "csv") -> str:
    """Render a spectrum so that parse(serialize(s)) == s bit-exactly."""
    if fmt == "csv":
        lines = ["n,re_e,im_e"]
        lines += [f"{lv.n},{lv.e0:.17g},{lv.e1:.17g}" for lv in spec.levels]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps(
            [{"n": lv.n, "re": lv.e0, "im": lv.e1} for lv in spec.levels],
            indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


@dataclass(frozen=True)
class FitPolicy:
    """How the discrete levels become continuous functions.

    ``kind`` is "pchip" (monotone shape-preserving cubic, the default; high
    order splines amplify alternating errors) or "linear".  ``repair``
    pools non-monotone ln(-e1) data instead of rejecting it, recording a
    prominent note on the model.
    """

    kind: str = "pchip"
    repair: bool = False

    def __post_init__(self):
        if self.kind not in ("pchip", "linear"):
            raise ValueError(f"unknown interpolation kind {self.kind!r}")


class _ExtendedCurve:
    """Interpolant on the data span, linear continuation outside it."""

    def __init__(self, x: np.ndarray, y: np.ndarray, kind: str):
        self._x0 = float(x[0])
        self._x1 = float(x[-1])
        if kind == "linear" or len(x) == 2:
            self._interp = None
            self._slope = (y[-1] - y[0]) / (x[-1] - x[0])
            self._y = (float(y[0]), float(y[-1]))
            self._x = np.asarray(x, dtype=float)
            self._yv = np.asarray(y, dtype=float)
            self._d0 = self._d1 = float(self._slope)
        else:
            self._interp = PchipInterpolator(x, y, extrapolate=False)
            self._deriv = self._interp.derivative()
            self._deriv2 = self._interp.derivative(2)
            self._y = (float(y[0]), float(y[-1]))
            self._d0 = float(self._deriv(x[0]))
            self._d1 = float(self._deriv(x[-1]))

    def value(self, e):
        scalar = np.ndim(e) == 0
        ea = np.atleast_1d(np.asarray(e, dtype=float))
        if self._interp is None:
            out = self._y[0] + self._slope * (ea - self._x0)
        else:
            out = np.where(
                ea < self._x0, self._y[0] + self._d0 * (ea - self._x0),
                np.where(ea > self._x1,
                         self._y[1] + self._d1 * (ea - self._x1),
                         np.nan_to_num(self._interp(np.clip(ea, self._x0,
                                                            self._x1)))))
        return float(out[0]) if scalar else out

    def derivative(self, e):
        scalar = np.ndim(e) == 0
        ea = np.atleast_1d(np.asarray(e, dtype=float))
        if self._interp is None:
            out = np.full_like(ea, self._slope)
        else:
            out = np.where(
                ea < self._x0, self._d0,
                np.where(ea > self._x1, self._d1,
                         np.nan_to_num(
                             self._deriv(np.clip(ea, self._x0, self._x1)))))
        return float(out[0]) if scalar else out

    def second_derivative(self, e):
        scalar = np.ndim(e) == 0
        ea = np.atleast_1d(np.asarray(e, dtype=float))
        if self._interp is None:
            out = np.zeros_like(ea)
        else:
            inside = (ea >= self._x0) & (ea <= self._x1)
            out = np.where(
                inside,
                np.nan_to_num(self._deriv2(np.clip(ea, self._x0, self._x1))),
                0.0)
        return float(out[0]) if scalar else out


def _pool_monotone(y: np.ndarray) -> np.ndarray:
    """Pool adjacent violators until the sequence increases (PAVA-style)."""
    vals = list(map(float, y))
    weights = [1.0] * len(vals)
    i = 0
    while i < len(vals) - 1:
        if vals[i + 1] <= vals[i]:
            pooled = ((vals[i] * weights[i] + vals[i + 1] * weights[i + 1])
                      / (weights[i] + weights[i + 1]))
            vals[i] = pooled
            weights[i] += weights[i + 1]
            del vals[i + 1], weights[i + 1]
            i = max(i - 1, 0)
        else:
            i += 1
    out = []
    for v, w in zip(vals, weights):
        out.extend([v] * int(w))
    # pooled blocks are flat; nudge to keep strict monotonicity
    arr = np.array(out)
    for i in range(1, len(arr)):
        if arr[i] <= arr[i - 1]:
            arr[i] = arr[i - 1] + 1e-12 * max(1.0, abs(arr[i - 1]))
    return arr


def fit_continuum(spec: DiscreteSpectrum,
                  policy: FitPolicy = FitPolicy()) -> SpectrumModel:
    """Interpolate a discrete spectrum into a continuous model.

    The counting function passes exactly through (e0_n, n); ln(-e1) is
    interpolated against e0.  Extrapolation beyond the data is linear in
    the interpolated coordinates.  Non-monotone ln(-e1) data is rejected
    unless the policy asks for pooling repair, which is recorded in the
    model's fit notes.
    """
    if len(spec) < 2:
        raise ValueError("need at least two levels to fit a continuum")
    notes: list[str] = []
    if len(spec) == 2:
        notes.append("only two levels: linear model")
    e0 = spec.e0_values
    n_curve = _ExtendedCurve(e0, spec.n_values, policy.kind)

    log_neg = np.log(-spec.e1_values)
    bad = np.flatnonzero(np.diff(log_neg) <= 0.0)
    if bad.size:
        if not policy.repair:
            raise SpectrumParseError(
                "|e1| must grow strictly with n for a well-plus-barrier "
                f"spectrum; violated between rows {int(bad[0])} and "
                f"{int(bad[0]) + 1} (pass repair=True to pool)",
                row=int(bad[0]) + 1)
        log_neg = _pool_monotone(log_neg)
        notes.append(
            f"repaired non-monotone |e1| at {bad.size} position(s) by "
            "pooling; treat reconstructed widths with caution")
    e1_curve = _ExtendedCurve(e0, log_neg, policy.kind)

    return SpectrumModel(
        n_of_e=n_curve.value,
        dn_de=n_curve.derivative,
        d2n_de2=n_curve.second_derivative,
        log_neg_e1=e1_curve.value,
        dlog_neg_e1_de=e1_curve.derivative,
        domain=EnergyInterval(float(e0[0]), float(e0[-1])),
        fit_notes=tuple(notes),
    )


@dataclass(frozen=True)
class ModelReport:
    """Validity summary of a fitted spectrum model."""

    n_monotone: bool
    log_e1_monotone: bool
    e_min_estimate: Optional[float]
    emin_extrapolation_fraction: Optional[float]
    observed_levels_span: float
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.n_monotone and self.log_e1_monotone and not self.warnings


def validate_model(model: SpectrumModel, n_samples: int = 257) -> ModelReport:
    """Check the semi-classical consistency conditions of a fitted model.

    Both the counting function and the width proxy ln(-e1) must increase
    strictly with energy; the well-bottom extrapolation distance is
    reported against the observed span, warning when it exceeds half of it.
    """
    lo, hi = model.domain.e_min, model.domain.e_max
    es = np.linspace(lo, hi, n_samples)
    dn = np.asarray(model.dn_de(es), dtype=float)
    n_monotone = bool(np.all(dn > 0.0))
    dlog = np.asarray(model.dlog_neg_e1_de(es), dtype=float)
    log_e1_monotone = bool(np.all(dlog > 0.0))

    warnings = list(model.fit_notes)
    if not n_monotone:
        warnings.append("counting function n(E) is not strictly increasing")
    if not log_e1_monotone:
        warnings.append(
            "ln(-e1) is not strictly increasing: the implied transmission "
            "would not grow with energy (non-physical barrier)")

    span = hi - lo
    e_min_est: Optional[float] = None
    frac: Optional[float] = None
    try:
        e_min_est = estimate_emin(model)
        frac = max(0.0, lo - e_min_est) / span
        if frac > 0.5:
            warnings.append(
                f"well-bottom extrapolation reaches {frac:.0%} of the "
                "observed span below the data; estimate is unreliable")
    except EstimationError as exc:
        warnings.append(str(exc))

    return ModelReport(
        n_monotone=n_monotone,
        log_e1_monotone=log_e1_monotone,
        e_min_estimate=e_min_est,
        emin_extrapolation_fraction=frac,
        observed_levels_span=float(span),
        warnings=tuple(warnings),
    )
