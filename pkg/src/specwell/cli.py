"""Command-line front end.

Four commands: ``forward`` solves a potential for its complex levels,
``invert`` reconstructs well and barrier widths from a spectrum,
``reconstruct`` turns the widths into potentials for chosen tilts, and
``roundtrip`` chains invert -> reconstruct -> forward and compares the
recovered levels with the input formula.  Outputs are plain CSV/JSON plot
data with fixed 17-significant-digit formatting, so identical
configurations produce byte-identical files.

Exit codes: 0 success, 2 invalid spectrum (diagnostics written), 1 hard
error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import forward, ingest, inverse, reconstruct, spectra
from .numerics import SampledFunction

__all__ = ["RunConfig", "main", "cmd_forward", "cmd_invert",
           "cmd_reconstruct", "cmd_roundtrip"]

EXIT_OK = 0
EXIT_HARD = 1
EXIT_INVALID = 2


@dataclass
class RunConfig:
    """Validated run options shared by all commands."""

    command: str
    out: Path
    fmt: str = "csv"
    grid: int = 512
    family: Optional[str] = None
    a: float = 1.0
    b: float = 1.0
    c: Optional[float] = None
    N: Optional[float] = None
    chi: tuple[float, ...] = (0.5,)
    spectrum_file: Optional[Path] = None
    potential: str = "demo"
    n_max: Optional[int] = None
    e_min: Optional[float] = None
    e_max: Optional[float] = None

    def __post_init__(self):
        if self.grid < 64:
            raise ValueError("--grid must be at least 64")
        if self.fmt not in ("csv", "json"):
            raise ValueError("--format must be csv or json")
        for chi in self.chi:
            if not 0.0 <= chi <= 1.0:
                raise ValueError(f"--chi must lie in [0, 1], got {chi}")
        if self.command in ("invert", "reconstruct", "roundtrip"):
            has_family = self.family is not None
            has_file = self.spectrum_file is not None
            if self.command == "roundtrip":
                if not has_family:
                    raise ValueError("roundtrip needs an analytic --family")
            elif has_family == has_file:
                raise ValueError(
                    "give exactly one spectrum source: --family or "
                    "--spectrum-file")

    def params(self) -> spectra.AnalyticSpectrumParams:
        kwargs = dict(family=self.family, a=self.a, b=self.b)
        if self.family in ("I", "II"):
            kwargs["c"] = 1.0 if self.c is None else self.c
        else:
            kwargs["N"] = 1.0 if self.N is None else self.N
        return spectra.AnalyticSpectrumParams(**kwargs)


def _fmt_float(x: float) -> str:
    return f"{x:.17g}"


def _write_table(cfg: RunConfig, name: str, columns: Sequence[str],
                 rows) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    if cfg.fmt == "csv":
        path = cfg.out / f"{name}.csv"
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(
                str(v) if isinstance(v, int) else _fmt_float(v) for v in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        path = cfg.out / f"{name}.json"
        payload = {"columns": list(columns),
                   "rows": [list(row) for row in rows]}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    return path


def _write_json(cfg: RunConfig, name: str, payload: dict) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _load_potential(cfg: RunConfig) -> forward.PotentialFunction:
    if cfg.potential == "demo":
        return forward.harmonic_barrier_demo(a=cfg.a)
    path = Path(cfg.potential)
    xs, vs = [], []
    for row, raw in enumerate(path.read_text(encoding="utf-8").splitlines(),
                              start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}:{row}: expected two columns x,V")
        try:
            xs.append(float(parts[0]))
            vs.append(float(parts[1]))
        except ValueError:
            if row == 1:
                continue  # header
            raise
    samples = SampledFunction(grid=np.asarray(xs), values=np.asarray(vs))
    return forward.PotentialFunction(
        evaluator=samples, search_window=(samples.x_min, samples.x_max))


def _spectrum_model(cfg: RunConfig) -> inverse.SpectrumModel:
    if cfg.family is not None:
        return spectra.make_model(cfg.params())
    fmt = "json" if cfg.spectrum_file.suffix.lower() == ".json" else "csv"
    spec = ingest.parse_spectrum(cfg.spectrum_file.read_text(encoding="utf-8"),
                                 fmt=fmt)
    return ingest.fit_continuum(spec)


def cmd_forward(cfg: RunConfig) -> int:
    pot = _load_potential(cfg)
    n_max = 10 if cfg.n_max is None else cfg.n_max
    spec = forward.forward_spectrum(pot, n_max)
    if len(spec.levels) < n_max + 1:
        print(f"warning: only {len(spec.levels)} level(s) fit below the "
              f"barrier top; requested n_max={n_max}", file=sys.stderr)
    _write_table(cfg, "spectrum", ("n", "re_e", "im_e"),
                 [(lv.n, lv.e0, lv.e1) for lv in spec.levels])
    _, v_min, _, v_top = pot.extrema()
    pad = 1e-6 * (v_top - v_min)
    es = np.linspace(v_min + pad, v_top - pad, cfg.grid)
    _write_table(cfg, "transmission", ("E", "T"),
                 [(float(e), forward.transmission_forward(pot, float(e)))
                  for e in es])
    return EXIT_OK


def _run_inversion(cfg: RunConfig) -> inverse.InversionResult:
    model = _spectrum_model(cfg)
    return inverse.invert_spectrum(model, n_grid=cfg.grid,
                                   e_min=cfg.e_min, e_max=cfg.e_max)


def cmd_invert(cfg: RunConfig) -> int:
    result = _run_inversion(cfg)
    diag = result.diagnostics
    _write_json(cfg, "diagnostics", diag.to_dict())
    if result.widths is None:
        print(f"inversion failed: {diag.failure}", file=sys.stderr)
        return EXIT_HARD
    w = result.widths
    _write_table(cfg, "widths", ("E", "L1", "L2"),
                 zip(w.L1.grid, w.L1.values, w.L2.values))
    curve = result.transmission
    _write_table(cfg, "transmission", ("E", "T"),
                 [(float(e), math.exp(curve.log_T(float(e))))
                  for e in w.L1.grid])
    if not diag.spectrum_valid:
        print("spectrum admits no valid potential in this class; see "
              "diagnostics.json", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def _chi_label(chi: float) -> str:
    return f"{chi:g}"


def cmd_reconstruct(cfg: RunConfig) -> int:
    result = _run_inversion(cfg)
    diag = result.diagnostics
    if result.widths is None:
        _write_json(cfg, "validity", {"failure": diag.failure, "tilts": []})
        print(f"inversion failed: {diag.failure}", file=sys.stderr)
        return EXIT_HARD
    entries = []
    any_valid = False
    for chi in cfg.chi:
        tmap = reconstruct.chi_turning_points(result.widths, chi)
        verdict = reconstruct.validate_turning_points(tmap)
        entry = {
            "chi": chi,
            "valid": verdict.valid,
            "message": verdict.message,
            "component": verdict.component,
            "e_critical": verdict.e_critical,
        }
        entries.append(entry)
        if not verdict.valid:
            continue
        any_valid = True
        pot = reconstruct.build_potential(tmap, validate=False)
        rows = []
        for branch in pot.branches:
            rows.extend(zip(branch.grid, branch.values))
        _write_table(cfg, f"potential_chi_{_chi_label(chi)}", ("x", "V"), rows)
    _write_json(cfg, "validity", {
        "spectrum_valid": diag.spectrum_valid,
        "tilts": entries,
    })
    if not any_valid:
        print("no requested tilt yields a single-valued potential; see "
              "validity.json", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_roundtrip(cfg: RunConfig) -> int:
    params = cfg.params()
    result = _run_inversion(cfg)
    diag = result.diagnostics
    if result.widths is None:
        _write_json(cfg, "roundtrip", {"failure": diag.failure, "tilts": []})
        return EXIT_HARD
    n_top = diag.n_at_emax
    report: dict = {"e_max": diag.e_max, "n_at_emax": n_top, "tilts": []}
    compared_any = False
    for chi in cfg.chi:
        tmap = reconstruct.chi_turning_points(result.widths, chi)
        verdict = reconstruct.validate_turning_points(tmap)
        entry: dict = {"chi": chi, "valid": verdict.valid,
                       "message": verdict.message}
        report["tilts"].append(entry)
        if not verdict.valid:
            continue
        if n_top < 0.0:
            entry["levels"] = []
            entry["note"] = "no comparable levels: the well traps no state"
            continue
        n_max = int(n_top) if cfg.n_max is None else cfg.n_max
        pot = reconstruct.build_potential(tmap, validate=False).as_potential()
        spec = forward.forward_spectrum(pot, n_max)
        levels = []
        for lv in spec.levels:
            ref = spectra.eval_level(params, lv.n)
            levels.append({
                "n": lv.n,
                "re_ref": ref.e0, "re_rec": lv.e0,
                "re_rel_err": abs(lv.e0 - ref.e0) / abs(ref.e0),
                "im_ref": ref.e1, "im_rec": lv.e1,
                "im_rel_err": abs(lv.e1 - ref.e1) / abs(ref.e1),
            })
        entry["levels"] = levels
        if levels:
            entry["max_re_rel_err"] = max(l["re_rel_err"] for l in levels)
            entry["max_im_rel_err"] = max(l["im_rel_err"] for l in levels)
            compared_any = True
        else:
            entry["note"] = "no comparable levels: the well traps no state"
    _write_json(cfg, "roundtrip", report)
    if not compared_any and not diag.spectrum_valid:
        return EXIT_INVALID
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specwell",
        description="Semi-classical spectra of well-plus-barrier potentials "
                    "and their inverse reconstruction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, type=Path,
                       help="output directory")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       default="csv", help="tabular output format")
        p.add_argument("--grid", type=int, default=512,
                       help="energy grid size (>= 64)")

    def spectrum_source(p):
        p.add_argument("--family", choices=("I", "II", "III", "IV"))
        p.add_argument("--a", type=float, default=1.0)
        p.add_argument("--b", type=float, default=1.0)
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--N", type=float, default=None)
        p.add_argument("--spectrum-file", type=Path, default=None)
        p.add_argument("--emin", dest="e_min", type=float, default=None,
                       help="well bottom override")
        p.add_argument("--emax", dest="e_max", type=float, default=None,
                       help="barrier top override")

    p = sub.add_parser("forward", help="solve a potential for its spectrum")
    common(p)
    p.add_argument("--potential", default="demo",
                   help="'demo' or a CSV file with x,V samples")
    p.add_argument("--a", type=float, default=1.0,
                   help="demo well steepness")
    p.add_argument("--n-max", type=int, default=10)

    p = sub.add_parser("invert", help="reconstruct widths from a spectrum")
    common(p)
    spectrum_source(p)

    p = sub.add_parser("reconstruct",
                       help="build potentials for chosen tilts")
    common(p)
    spectrum_source(p)
    p.add_argument("--chi", type=float, nargs="+", default=[0.5])

    p = sub.add_parser("roundtrip",
                       help="invert, rebuild, re-solve, and compare levels")
    common(p)
    spectrum_source(p)
    p.add_argument("--chi", type=float, nargs="+", default=[0.5])
    p.add_argument("--n-max", type=int, default=None)

    return parser


_COMMANDS = {
    "forward": cmd_forward,
    "invert": cmd_invert,
    "reconstruct": cmd_reconstruct,
    "roundtrip": cmd_roundtrip,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if k != "command"}
    if "chi" in fields:
        fields["chi"] = tuple(fields["chi"])
    try:
        cfg = RunConfig(command=args.command, **fields)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HARD
    try:
        return _COMMANDS[args.command](cfg)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary maps errors
        print(f"error in {args.command}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_HARD


if __name__ == "__main__":
    raise SystemExit(main())
