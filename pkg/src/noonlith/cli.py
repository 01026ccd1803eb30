"""``noonlith`` command line: pattern, gaussian, expose and validate subcommands.

Exit codes: 0 ok, 1 usage or invalid parameters, 2 I/O failure,
3 validation failure, 4 numerical non-convergence or budget exhaustion.
Lengths take unit suffixes (``100um``, ``1mm``, ``10cm``, ``0.1m``); a bare
number is meters. Angles are given in degrees.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import biphoton, exposure, gaussian, io, patterns, validate
from .errors import ExposureBudgetError, MemoryBudgetError, NonConvergenceError
from .geometry import Normalization, SlitGeometry, count_maxima, grid_for_fringes, DetectorGrid

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3, 4

UNITS = {"nm": 1e-9, "um": 1e-6, "µm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}
FORMATS = ("csv", "json", "pgm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_length(text: str) -> float:
    """``'100um'`` -> ``1e-4``. Bare numbers are meters."""
    m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*([a-zµ]*)\s*", str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse length {text!r}")
    unit = m.group(2) or "m"
    if unit not in UNITS:
        raise argparse.ArgumentTypeError(f"unknown length unit {unit!r} (use {', '.join(UNITS)})")
    try:
        return float(m.group(1)) * UNITS[unit]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse length {text!r}") from None


def int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def format_set(text: str) -> tuple[str, ...]:
    vals = tuple(dict.fromkeys(v.strip().lower() for v in text.split(",") if v.strip()))
    bad = [v for v in vals if v not in FORMATS]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"formats must be a non-empty subset of {','.join(FORMATS)}")
    return vals


def _add_output(p, default_formats="csv,json,pgm"):
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    p.add_argument("--formats", type=format_set, default=format_set(default_formats),
                   help=f"comma-separated subset of {','.join(FORMATS)} (default {default_formats})")
    p.add_argument("--prefix", default=None, help="base name for output files")


def _out_dir(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


# --- pattern ----------------------------------------------------------------

def _geometry(args) -> SlitGeometry:
    lam = args.lambda_um * 1e-6 if args.lambda_um is not None else args.wavelength
    a = args.d / 50 if args.a is None else args.a
    return SlitGeometry.from_wavelength(args.d, args.R, lam, a=a)


def _grid(args, geom) -> DetectorGrid:
    if args.grid < 1 or args.grid % 2 == 0:
        raise UsageError("--grid must be an odd detector count (S = grid - 1 is even)")
    if args.b is not None:
        return DetectorGrid.with_detectors(args.grid, args.b)
    return grid_for_fringes(geom, args.grid, args.fringes)


def _map_payload(kind, cmap, geom, grid, extra=None):
    doc = {"kind": kind, "normalization": cmap.normalization.value,
           "geometry": {"d": geom.d, "a": geom.a, "R": geom.R, "k": geom.k, "wavelength": geom.wavelength},
           "grid": {"S": grid.S, "b": grid.b}, "phase_step": patterns.phase_step(geom, grid),
           "indices": grid.indices, "values": cmap.values,
           "meta": {k: v for k, v in cmap.meta.items()}}
    if extra:
        doc.update(extra)
    return doc


def _write_map(args, name, cmap, geom, grid, extra=None) -> list[Path]:
    out = _out_dir(args)
    files = []
    if "csv" in args.formats:
        files.append(io.write_map_csv(out / f"{name}.csv", cmap.values, grid.indices))
    if "pgm" in args.formats:
        files.append(io.write_pgm(out / f"{name}.pgm", cmap.values))
    if "json" in args.formats:
        files.append(io.write_json(out / f"{name}.json", _map_payload(name, cmap, geom, grid, extra)))
    return files


def cmd_pattern(args) -> int:
    geom = _geometry(args)
    grid = _grid(args, geom)
    norm = Normalization(args.norm)
    if geom.paraxial_warning:
        print(f"warning: R < 100 d; small-angle forms are questionable", file=sys.stderr)
    files = []
    if args.kind == "single":
        pat = patterns.single_photon_pattern(geom, grid, norm)
        name = args.prefix or "single"
        out = _out_dir(args)
        if "csv" in args.formats:
            files.append(io.write_pattern_csv(out / f"{name}.csv", pat.values, grid.indices))
        if "json" in args.formats:
            files.append(io.write_json(out / f"{name}.json", {
                "kind": "single", "normalization": norm.value, "indices": grid.indices,
                "values": pat.values, "phase_step": patterns.phase_step(geom, grid),
                "geometry": {"d": geom.d, "a": geom.a, "R": geom.R, "k": geom.k}, "grid": {"S": grid.S, "b": grid.b}}))
        print(f"single-photon maxima: {count_maxima(pat.values)}")
    elif args.kind in ("boto", "steuernagel"):
        fn = patterns.boto_coincidence if args.kind == "boto" else patterns.steuernagel_coincidence
        cmap = fn(geom, grid, norm)
        files += _write_map(args, args.prefix or args.kind, cmap, geom, grid)
        print(f"{args.kind} diagonal maxima: {count_maxima(cmap.diagonal)}")
    elif args.kind == "a1":
        panels = sorted(biphoton.FIGURE_A1_PARAMS) if args.panel == "all" else [args.panel]
        for p in panels:
            if args.envelope:
                alpha, phi = biphoton.FIGURE_A1_PARAMS[p]
                amp = biphoton.detection_amplitude(biphoton.BiphotonSlitState.from_params(alpha, phi),
                                                   geom, envelope=True)
                cmap = amp.coincidence_map(grid, norm)
                cmap.meta.update(panel=p, alpha=alpha, phi=phi, envelope=True)
            else:
                cmap = biphoton.figure_a1_panel(p, geom, grid, norm)
            name = f"{args.prefix or 'a1'}_{p}"
            files += _write_map(args, name, cmap, geom, grid)
            print(f"panel {p}: alpha={cmap.meta['alpha']:.4f} phi={cmap.meta['phi']:.4f} "
                  f"diagonal maxima {count_maxima(cmap.diagonal)}")
    elif args.kind == "oracle":
        if args.profiles in ("default", "sinc"):
            prof = biphoton.make_profiles("default", k=geom.k, pump_waist=args.pump_waist,
                                          crystal_length=args.crystal_length)
        elif args.profiles == "noon":
            prof = biphoton.gaussian_profiles(5 * geom.d, geom.d / 10)
        else:
            prof = biphoton.gaussian_profiles(geom.d, geom.d)
        cmap = biphoton.propagate_numeric(prof, geom, args.crystal_to_slit, geom.R, grid, norm=norm,
                                          rtol=args.rtol, threads=args.threads)
        files += _write_map(args, args.prefix or f"oracle_{args.profiles}", cmap, geom, grid)
        print(f"oracle converged: change {cmap.meta['oracle_error']:.2e} after {cmap.meta['levels']} refinements")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


# --- gaussian ---------------------------------------------------------------

def _setup(args) -> gaussian.GaussianNoonSetup:
    lam = args.lambda_um * 1e-6 if args.lambda_um is not None else args.wavelength
    L = args.L_cm * 1e-2 if args.L_cm is not None else args.L
    w = args.w_mm * 1e-3 if args.w_mm is not None else args.w
    return gaussian.GaussianNoonSetup(w=w, L=L, alpha_beam=math.radians(args.alpha_deg), wavelength=lam, N=args.N)


def _cubic_report(setup, x) -> dict:
    rep = gaussian.cubic_term_magnitude(setup, x)
    print(f"linear prefactor       {rep.linear_coeff:.6e}  (times x/lambda)")
    print(f"cubic prefactor        {rep.cubic_coeff:.6e}  (times (x/lambda)^3)")
    print(f"prefactor ratio        {rep.ratio:.6e}  (log10 = {math.log10(rep.ratio):.2f})")
    print(f"term ratio at x={x:.3e} m  {rep.term_ratio:.6e}")
    return {"x": x, "linear_coeff": rep.linear_coeff, "cubic_coeff": rep.cubic_coeff,
            "ratio": rep.ratio, "term_ratio": rep.term_ratio}


def _setup_doc(setup, envelope) -> dict:
    vis = gaussian.visibility_conditions(setup)
    return {"w": setup.w, "L": setup.L, "alpha_beam": setup.alpha_beam, "wavelength": setup.wavelength,
            "N": setup.N, "beta": setup.beta, "envelope_form": envelope,
            "fringe_period": gaussian.fringe_period(setup),
            "noon_envelope_coefficient": gaussian.noon_envelope_coefficient(setup, envelope),
            "delta_envelope_coefficient": gaussian.delta_envelope_coefficient(setup),
            "visibility": {"x_low": vis.x_low, "x_high": vis.x_high,
                           "always_satisfied": vis.always_satisfied, "angle_flag": vis.angle_flag}}


def cmd_gaussian(args) -> int:
    setup = _setup(args)
    x_eval = args.x_mm * 1e-3 if args.x_mm is not None else args.x
    if args.action == "check-cubic":
        doc = _cubic_report(setup, x_eval)
        if "json" in args.formats:
            f = io.write_json(_out_dir(args) / f"{args.prefix or 'cubic'}.json",
                              {"kind": "cubic_check", "setup": _setup_doc(setup, args.envelope), "report": doc})
            print(f"wrote {f}")
        return EXIT_OK
    x_max = args.x_max if args.x_max is not None else 20 * gaussian.fringe_period(setup.with_N(1))
    x = np.linspace(-x_max, x_max, args.points)
    name = args.prefix or f"{args.action}_{args.model}_N{setup.N}"
    files = []
    out = _out_dir(args)
    if args.action == "scan":
        sc = gaussian.scan(setup, x, model=args.model, include_cubic=not args.no_cubic, envelope=args.envelope)
        if "csv" in args.formats:
            files.append(io.write_scan_csv(out / f"{name}.csv", sc.positions, sc.values, sc.envelope))
        if "json" in args.formats:
            files.append(io.write_json(out / f"{name}.json", {
                "kind": "fringe_scan", "model": args.model, "include_cubic": not args.no_cubic,
                "setup": _setup_doc(setup, args.envelope), "x": sc.positions, "p": sc.values,
                "envelope": sc.envelope}))
        if args.check_cubic:
            _cubic_report(setup, x_eval)
    else:  # pair coincidence map on a square grid of positions
        if (args.points % 2) == 0:
            raise UsageError("--points must be odd for a pair map")
        grid = DetectorGrid.with_detectors(args.points, 2 * x_max / (args.points - 1))
        xs = grid.positions
        if args.model == "noon":
            raw = gaussian.noon_pair_coincidence(setup, xs[:, None], xs[None, :], envelope=args.envelope)
        else:
            raw = gaussian.delta_pair_coincidence(setup, xs[:, None], xs[None, :])
        vals = raw / raw.max()
        if "csv" in args.formats:
            files.append(io.write_map_csv(out / f"{name}.csv", vals, grid.indices))
        if "pgm" in args.formats:
            files.append(io.write_pgm(out / f"{name}.pgm", vals))
        if "json" in args.formats:
            files.append(io.write_json(out / f"{name}.json", {
                "kind": "pair_coincidence", "model": args.model, "setup": _setup_doc(setup, args.envelope),
                "grid": {"S": grid.S, "b": grid.b}, "indices": grid.indices, "values": vals}))
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


# --- expose -----------------------------------------------------------------

def cmd_expose(args) -> int:
    if args.weighting == "fringe" and args.fringes is None:
        raise UsageError("--weighting fringe needs --fringes")
    rows, results = [], []
    for S in args.pixels:
        prev = None
        for N in args.N:
            weighting = (exposure.UNIFORM if args.weighting == "uniform"
                         else exposure.Fringe(patterns.fringe_phase_step(args.fringes, S)))
            cfg = exposure.ExposureConfig(pixels=S, N=N, target_events=args.target_events, model=args.model,
                                          weighting=weighting, seed=args.seed, trials=args.trials,
                                          node_threshold=args.node_threshold, max_bunches=args.max_bunches)
            r = exposure.simulate_exposure(cfg, threads=args.threads)
            results.append((S, N, r))
            ratio = r.mean_bunches / prev.mean_bunches if prev is not None else None
            rows.append({"model": cfg.model.value, "pixels": S, "N": N, "trials": cfg.trials,
                         "mean_bunches": r.mean_bunches, "std_error": r.std_error,
                         "coupon_factor": r.coupon_factor, "per_pixel_time": r.per_pixel_time,
                         "ratio": ratio, "law": patterns.exposure_scaling_law(cfg.model, S, N),
                         "per_trial": r.per_trial, "required_pixels": r.required.size})
            prev = r
    try:
        fit = exposure.fit_scaling(results)
        fit_doc = {"exponent_S": fit.exponent_S, "exponent_N_base": fit.exponent_N_base,
                   "exponent_S_raw": fit.exponent_S_raw, "exponent_N_base_raw": fit.exponent_N_base_raw,
                   "r_squared": fit.r_squared, "fixed_N": fit.fixed_N, "fixed_S": fit.fixed_S}
    except ValueError as exc:
        fit_doc = {"skipped": str(exc)}

    print(f"{'pixels':>6} {'N':>3} {'mean_bunches':>14} {'std_err':>10} {'per_pixel':>12} {'ratio':>8}")
    for row in rows:
        ratio = f"{row['ratio']:.3f}" if row["ratio"] is not None else "-"
        print(f"{row['pixels']:>6} {row['N']:>3} {row['mean_bunches']:>14.3f} {row['std_error']:>10.3f} "
              f"{row['per_pixel_time']:>12.3f} {ratio:>8}")
    if "skipped" in fit_doc:
        print(f"fit: {fit_doc['skipped']}")
    else:
        for key in ("exponent_S", "exponent_N_base"):
            if fit_doc[key] is not None:
                print(f"{key} = {fit_doc[key]:.4f} (raw {fit_doc[key + '_raw']:.4f})")

    out = _out_dir(args)
    name = args.prefix or "expose"
    files = []
    if "json" in args.formats:
        files.append(io.write_json(out / f"{name}.json", {
            "kind": "exposure", "seed": args.seed, "weighting": args.weighting, "fringes": args.fringes,
            "target_events": args.target_events, "runs": rows, "fit": fit_doc}))
    if "csv" in args.formats:
        header = ("model", "pixels", "N", "trials", "mean_bunches", "std_error", "coupon_factor",
                  "per_pixel_time", "ratio")
        lines = [",".join(header)]
        for row in rows:
            cells = [row["model"], str(row["pixels"]), str(row["N"]), str(row["trials"])]
            cells += [repr(float(row[k])) for k in ("mean_bunches", "std_error", "coupon_factor", "per_pixel_time")]
            cells.append("" if row["ratio"] is None else repr(float(row["ratio"])))
            lines.append(",".join(cells))
        files.append(io.atomic_write(out / f"{name}_summary.csv", ("\n".join(lines) + "\n").encode("ascii")))
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


# --- validate ---------------------------------------------------------------

def cmd_validate(args) -> int:
    if args.list:
        for c in validate.REGISTRY.values():
            print(f"{c.id:<20} {'quick' if c.quick else 'full ':<5} {c.description}")
        return EXIT_OK
    outcomes = validate.run_checks(args.only, quick=args.quick, mutate=args.mutate)
    for o in outcomes:
        print(f"{'PASS' if o.ok else 'FAIL'} {o.id:<20} {o.seconds:7.2f}s  {o.detail}")
    failed = [o.id for o in outcomes if not o.ok]
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} checks passed")
    if args.report is not None:
        io.write_json(args.report, {"kind": "validation", "quick": args.quick, "mutation": args.mutate,
                                    "checks": [{"id": o.id, "ok": o.ok, "detail": o.detail} for o in outcomes]})
    if failed:
        print("failing: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="noonlith", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pat = sub.add_parser("pattern", help="double-slit patterns and coincidence maps")
    pat.add_argument("kind", choices=["single", "boto", "steuernagel", "a1", "oracle"])
    pat.add_argument("--grid", type=int, default=101, help="detector count S + 1 (odd; default 101)")
    pat.add_argument("--fringes", type=float, default=4.5, help="single-photon fringes spanned by the grid")
    pat.add_argument("--b", type=parse_length, default=None, help="detector width (overrides --fringes)")
    pat.add_argument("--d", type=parse_length, default=100e-6, help="slit separation (default 100um)")
    pat.add_argument("--a", type=parse_length, default=None, help="slit width (default d/50)")
    pat.add_argument("--R", type=parse_length, default=0.1, help="slit-to-screen distance (default 10cm)")
    pat.add_argument("--lambda", dest="wavelength", type=parse_length, default=1e-6, help="wavelength (default 1um)")
    pat.add_argument("--lambda-um", dest="lambda_um", type=float, default=None)
    pat.add_argument("--norm", choices=[n.value for n in Normalization], default="unit_max")
    pat.add_argument("--panel", choices=sorted(biphoton.FIGURE_A1_PARAMS) + ["all"], default="all")
    pat.add_argument("--envelope", action="store_true", help="a1: include the single-slit sinc envelope")
    pat.add_argument("--profiles", choices=["noon", "product", "default"], default="noon",
                     help="oracle: pump/phase-matching profile set")
    pat.add_argument("--pump-waist", type=parse_length, default=1e-3)
    pat.add_argument("--crystal-length", type=parse_length, default=1e-3)
    pat.add_argument("--crystal-to-slit", type=parse_length, default=0.0)
    pat.add_argument("--rtol", type=float, default=1e-6)
    pat.add_argument("--threads", type=int, default=None)
    _add_output(pat)
    pat.set_defaults(func=cmd_pattern)

    g = sub.add_parser("gaussian", help="NOON states in crossing Gaussian beams")
    g.add_argument("action", choices=["scan", "check-cubic", "pair"])
    g.add_argument("--N", type=int, default=2)
    g.add_argument("--alpha-deg", type=float, default=30.0, help="beam half-angle in degrees")
    g.add_argument("--lambda", dest="wavelength", type=parse_length, default=1e-6)
    g.add_argument("--lambda-um", dest="lambda_um", type=float, default=None)
    g.add_argument("--L", type=parse_length, default=0.1, help="waist-to-crossing distance")
    g.add_argument("--L-cm", dest="L_cm", type=float, default=None)
    g.add_argument("--w", type=parse_length, default=1e-3, help="beam waist")
    g.add_argument("--w-mm", dest="w_mm", type=float, default=None)
    g.add_argument("--model", choices=["noon", "delta"], default="noon")
    g.add_argument("--envelope", choices=[e.value for e in gaussian.EnvelopeForm], default="published")
    g.add_argument("--no-cubic", action="store_true", help="drop the x^3 phase term")
    g.add_argument("--x-max", type=parse_length, default=None, help="scan half-range (default 20 single fringes)")
    g.add_argument("--points", type=int, default=2001)
    g.add_argument("--x", type=parse_length, default=1e-4, help="evaluation point for the cubic check")
    g.add_argument("--x-mm", dest="x_mm", type=float, default=None)
    g.add_argument("--check-cubic", action="store_true", help="scan: also print the cubic-term report")
    _add_output(g, "csv,json")
    g.set_defaults(func=cmd_gaussian)

    e = sub.add_parser("expose", help="Monte Carlo exposure-time scaling")
    e.add_argument("--model", choices=[m.value for m in patterns.Model], default="steuernagel")
    e.add_argument("--pixels", type=int_list, default=[25])
    e.add_argument("--N", type=int_list, default=[2])
    e.add_argument("--trials", type=int, default=200)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--target-events", type=int, default=1)
    e.add_argument("--weighting", choices=["uniform", "fringe"], default="uniform")
    e.add_argument("--fringes", type=float, default=None, help="fringe weighting: fringes across the pixel row")
    e.add_argument("--node-threshold", type=float, default=1e-3)
    e.add_argument("--max-bunches", type=int, default=None)
    e.add_argument("--threads", type=int, default=None)
    _add_output(e, "json,csv")
    e.set_defaults(func=cmd_expose)

    v = sub.add_parser("validate", help="run the oracle and invariant suite")
    v.add_argument("--quick", action="store_true", help="fast subset")
    v.add_argument("--only", type=lambda s: [x for x in s.split(",") if x], default=None)
    v.add_argument("--mutate", choices=sorted(validate.MUTATIONS), default=None,
                   help="run against a deliberately broken model (should fail)")
    v.add_argument("--list", action="store_true")
    v.add_argument("--report", type=Path, default=None, help="also write a JSON report")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"noonlith: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergenceError, ExposureBudgetError, MemoryBudgetError) as exc:
        print(f"noonlith: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"noonlith: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"noonlith: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
