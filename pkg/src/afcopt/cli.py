"""Command-line interface: ``afcopt {eval,optimize,map,compare,verify,simulate}``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 verification counterexample.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .comb import (
    Gaussian,
    GaussianLine,
    Lorentzian,
    LorentzianLine,
    MemoryParams,
    Square,
    load_tabulated_csv,
)
from .efficiency import (
    ConvolutionMode,
    MapKind,
    ToothFamily,
    build_map,
    difference_maps,
    efficiency,
    efficiency_convolved,
    efficiency_with_background,
    optimal_square_width,
    optimize_width,
)
from .errors import (
    AfcError,
    GridTooCoarse,
    OptimizationFailure,
    QuadratureFailure,
    WindowError,
)
from .mbsolver import SimGrid, analytic_efficiency, solve_mb
from .optimality import (
    builtin_functional_specs,
    check_seed,
    generalized_optimality_check,
    lemma2_center_scan,
    write_jsonl,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_COUNTEREXAMPLE = 4

log = logging.getLogger("afcopt")


class ConfigError(ValueError):
    pass


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _add_params(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("memory parameters")
    g.add_argument("--od", type=float, help="optical depth alpha_max*L (sets T = 1 s, L = 1 m)")
    g.add_argument("--T", type=float, help="storage time T in s")
    g.add_argument("--L", type=float, help="medium length in m")
    g.add_argument("--alpha-max", type=float, help="maximum absorption in 1/m")
    g.add_argument("--alpha-bg", type=float, default=None, help="background absorption in 1/m")
    g.add_argument("--bg-od", type=float, default=None, help="background optical depth alpha_bg*L")
    g.add_argument("--gamma", type=float, default=0.0, help="homogeneous half-width in rad/s")


def _add_shape(sp: argparse.ArgumentParser, choices) -> None:
    g = sp.add_argument_group("tooth shape")
    g.add_argument("--shape", choices=choices, default="square")
    g.add_argument("--half-width-pT", type=float, help="square half-width times T")
    g.add_argument("--half-width", type=float, help="square half-width in rad/s")
    g.add_argument("--fwhm-pT", type=float, help="Lorentzian/Gaussian FWHM times T")
    g.add_argument("--fwhm", type=float, help="Lorentzian/Gaussian FWHM in rad/s")
    g.add_argument("--file", type=Path, help="tabulated shape CSV (omega_rad_per_s,absorption_per_m)")


def _resolve_params(args, period_from_file: float | None = None, alpha_default: float | None = None) -> MemoryParams:
    dimensional = [name for name in ("T", "L", "alpha_max") if getattr(args, name, None) is not None]
    if args.od is not None:
        if dimensional:
            log.warning("--od given; ignoring dimensional %s", ", ".join("--" + n.replace("_", "-") for n in dimensional))
        T = period_from_file if period_from_file is not None else 1.0
        L, alpha = 1.0, args.od
    else:
        T = args.T if args.T is not None else (period_from_file if period_from_file is not None else 1.0)
        if period_from_file is not None and not math.isclose(T, period_from_file, rel_tol=1e-9):
            raise ConfigError(f"--T {T} does not match the tabulated period {period_from_file}")
        L = args.L if args.L is not None else 1.0
        alpha = args.alpha_max if args.alpha_max is not None else alpha_default
        if alpha is None:
            raise ConfigError("give --od or --alpha-max")
    alpha_bg = 0.0
    if args.bg_od is not None:
        if args.alpha_bg is not None:
            log.warning("--bg-od given; ignoring --alpha-bg")
        alpha_bg = args.bg_od / L
    elif args.alpha_bg is not None:
        alpha_bg = args.alpha_bg
    return MemoryParams(T, L, alpha, alpha_bg, args.gamma)


def _pick_width(args, dimless: str, dimensional: str, T: float, default=None) -> float:
    pt, w = getattr(args, dimless), getattr(args, dimensional)
    if pt is not None:
        if w is not None:
            log.warning("--%s given; ignoring --%s", dimless.replace("_", "-"), dimensional.replace("_", "-"))
        return pt / T
    if w is not None:
        return w
    if default is not None:
        return default
    raise ConfigError(f"give --{dimless.replace('_', '-')} or --{dimensional.replace('_', '-')}")


def _build_shape(args):
    """Return ``(shape, params)``; analytic shapes sit on top of any background."""
    if args.shape == "tabulated":
        if args.file is None:
            raise ConfigError("--shape tabulated needs --file")
        table = load_tabulated_csv(args.file)
        params = _resolve_params(args, table.period_T, float(table.values.max()))
        return load_tabulated_csv(args.file, alpha_max=params.alpha_max - params.alpha_bg), params
    params = _resolve_params(args)
    T = params.period_T
    height = params.alpha_max - params.alpha_bg
    if args.shape == "square":
        default = optimal_square_width(height * params.length_L) / T
        return Square(_pick_width(args, "half_width_pT", "half_width", T, default), height, T), params
    if args.shape == "none":
        return Square(0.0, 0.0, T), params
    if args.shape == "flat":
        return Square(np.pi / T, height, T), params
    fwhm = _pick_width(args, "fwhm_pT", "fwhm", T)
    cls = Lorentzian if args.shape == "lorentzian" else Gaussian
    return cls(fwhm, height, T), params


def _kernel(args, T: float):
    if args.kernel == "none":
        return None
    fwhm = _pick_width(args, "kernel_fwhm_pT", "kernel_fwhm", T)
    return LorentzianLine(fwhm) if args.kernel == "lorentzian" else GaussianLine(fwhm)


def cmd_eval(args) -> int:
    shape, params = _build_shape(args)
    kernel = _kernel(args, params.period_T)
    if kernel is not None and params.alpha_bg > 0:
        raise ConfigError("background and line-shape kernel cannot be combined")
    if kernel is not None:
        res = efficiency_convolved(shape, kernel, params, ConvolutionMode(args.mode))
    elif params.alpha_bg > 0:
        res = efficiency_with_background(shape, params)
    else:
        res = efficiency(shape, params)
    out = {
        "eta": res.eta,
        "f0": res.fourier.f0,
        "f_minus1_modulus": res.fourier.modulus,
        "f_minus1_phase": res.fourier.phase,
    }
    if res.components is not None:
        out["eta_ideal"] = res.components.eta_ideal
        out["background_factor"] = res.components.background_factor
        out["linewidth_factor"] = res.components.linewidth_factor
    _emit(out)
    return EXIT_OK


def _od_value(args) -> tuple[float, float]:
    if args.od is not None:
        od = args.od
    elif args.alpha_max is not None and args.L is not None:
        od = args.alpha_max * args.L
    else:
        raise ConfigError("give --od or both --alpha-max and --L")
    bg = args.bg_od if args.bg_od is not None else 0.0
    if not 0.0 <= bg < od:
        raise ConfigError("background optical depth must lie in [0, od)")
    return od, bg


def cmd_optimize(args) -> int:
    od, bg = _od_value(args)
    p_opt, eta_opt = optimize_width(ToothFamily(args.family), od - bg)
    _emit({
        "family": args.family,
        "od": od,
        "effective_od": od - bg,
        "p_opt": p_opt,
        "eta_opt": eta_opt,
        "eta_with_background": eta_opt * math.exp(-bg),
    })
    return EXIT_OK


def cmd_compare(args) -> int:
    od, _ = _od_value(args)
    rows = {}
    for fam in ToothFamily:
        p_opt, eta_opt = optimize_width(fam, od)
        rows[fam.value] = {"p_opt": p_opt, "eta_opt": eta_opt}
    _emit({"od": od, "families": rows})
    return EXIT_OK


def cmd_map(args) -> int:
    if args.p_steps < 2 or args.od_steps < 2:
        raise ConfigError("--p-steps and --od-steps must be at least 2")
    formats = set(args.format)
    if "png" in formats and args.png is None and args.out_dir is None:
        raise ConfigError("png output needs --out-dir or --png")
    p_axis = np.linspace(0.0, args.p_max, args.p_steps)
    od_axis = np.linspace(0.0, args.od_max, args.od_steps)
    maps = [build_map(kind, p_axis, od_axis) for kind in (MapKind.ETA_SQUARE, MapKind.ETA_LORENTZIAN, MapKind.ETA_GAUSSIAN)]
    if args.diff:
        diffs = difference_maps(p_axis, od_axis)
        maps += [diffs[k] for k in (MapKind.DIFF_ABS_L, MapKind.DIFF_ABS_G, MapKind.DIFF_REL_L, MapKind.DIFF_REL_G)]
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for m in maps:
        stem = out_dir / m.kind.value
        if "csv" in formats:
            m.to_csv(stem.with_suffix(".csv"))
            written.append(str(stem.with_suffix(".csv")))
        if "json" in formats:
            m.to_json(stem.with_suffix(".json"))
            written.append(str(stem.with_suffix(".json")))
        if "png" in formats:
            m.to_png(stem.with_suffix(".png"), figure_norm=args.figure_norm, vmax=args.vmax)
            written.append(str(stem.with_suffix(".png")))
    if args.png is not None:
        maps[0].to_png(args.png, figure_norm=args.figure_norm, vmax=args.vmax)
        written.append(str(args.png))
    _emit({"files": written})
    return EXIT_OK


def cmd_verify(args) -> int:
    params = MemoryParams.dimensionless(1.0)
    records = []
    if args.seed is not None:
        if args.symmetric:
            records = [check_seed(args.seed, params, args.n_knots, True, hf) for hf in (True, False)]
        else:
            records = [check_seed(args.seed, params, args.n_knots)]
    else:
        seeds = range(args.seed_start, args.seed_start + args.n_seeds)
        records = [check_seed(s, params, args.n_knots, True if args.symmetric else None) for s in seeds]
    failures = sum(not r.passed for r in records)
    summary = {"shapes": len(records), "dominance_failures": failures}

    if args.lemma2:
        T = params.period_T
        widths = np.linspace(0.05, 0.95, 10) * np.pi / T
        argmaxes = [lemma2_center_scan(w, params, args.n_centers) for w in widths]
        bad = [float(w) for w, c in zip(widths, argmaxes) if abs(c) > 1e-12]
        summary["lemma2_nonzero_argmax"] = bad
        failures += len(bad)
    if args.general:
        general = {}
        for spec in builtin_functional_specs():
            rep = generalized_optimality_check(spec, args.n_samples, args.seed_start)
            general[spec.name] = {"best_c": rep.best_c, "f_best": rep.f_best, "counterexamples": rep.counterexamples}
            failures += len(rep.counterexamples)
        summary["general"] = general

    if args.out is not None:
        write_jsonl(records, args.out)
    else:
        for r in records:
            print(json.dumps(r.to_json_dict(), sort_keys=True))
    summary["pass"] = failures == 0
    print(json.dumps(summary, sort_keys=True), file=sys.stderr if args.out is None else sys.stdout)
    return EXIT_OK if failures == 0 else EXIT_COUNTEREXAMPLE


def cmd_simulate(args) -> int:
    shape, params = _build_shape(args)
    grid = SimGrid(
        n_z=args.n_z,
        n_omega=args.n_teeth * args.knots_per_period,
        n_teeth=args.n_teeth,
        n_t=args.n_t,
        pulse_tau_T=args.tau_T,
        field_points_per_period=args.field_points,
    )
    record = solve_mb(shape, params, grid, check_convergence=args.check_convergence)
    eta_analytic = analytic_efficiency(shape, params)
    if args.field_csv is not None:
        record.to_csv(args.field_csv)
    if args.summary_json is not None:
        record.write_summary(args.summary_json, eta_analytic)
    _emit(record.summary(eta_analytic))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afcopt", description="Frequency-comb memory efficiency toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval", help="efficiency of one tooth shape")
    _add_shape(sp, ["square", "lorentzian", "gaussian", "tabulated", "flat", "none"])
    _add_params(sp)
    sp.add_argument("--kernel", choices=["none", "lorentzian", "gaussian"], default="none")
    sp.add_argument("--kernel-fwhm", type=float, help="line-shape FWHM in rad/s")
    sp.add_argument("--kernel-fwhm-pT", type=float, help="line-shape FWHM times T")
    sp.add_argument("--mode", choices=[m.value for m in ConvolutionMode], default="exact")
    sp.set_defaults(func=cmd_eval)

    for name, func, helptext in (
        ("optimize", cmd_optimize, "optimal tooth width of one family"),
        ("compare", cmd_compare, "optimal widths and efficiencies of all families"),
    ):
        sp = sub.add_parser(name, help=helptext)
        if name == "optimize":
            sp.add_argument("--family", choices=[f.value for f in ToothFamily], default="square")
        _add_params(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("map", help="efficiency maps over (p, od)")
    sp.add_argument("--p-steps", type=int, default=200)
    sp.add_argument("--od-steps", type=int, default=200)
    sp.add_argument("--p-max", type=float, default=2.0 * np.pi)
    sp.add_argument("--od-max", type=float, default=20.0)
    sp.add_argument("--diff", action="store_true", help="also write the square-advantage maps")
    sp.add_argument("--format", choices=["csv", "json", "png"], action="append", default=None)
    sp.add_argument("--out-dir", type=Path)
    sp.add_argument("--png", type=Path, help="heatmap of the square-tooth map")
    sp.add_argument("--figure-norm", action="store_true", help="render negatives as 0")
    sp.add_argument("--vmax", type=float, help="color-bar maximum")
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("verify", help="numerical checks of square-tooth optimality")
    sp.add_argument("--n-seeds", type=int, default=1000)
    sp.add_argument("--seed-start", type=int, default=0)
    sp.add_argument("--seed", type=int, help="check a single seed")
    sp.add_argument("--symmetric", action="store_true", help="symmetric shapes only (both regimes for --seed)")
    sp.add_argument("--n-knots", type=int, default=64)
    sp.add_argument("--lemma2", action="store_true", help="also scan off-center squares")
    sp.add_argument("--n-centers", type=int, default=401)
    sp.add_argument("--general", action="store_true", help="also run the generalized functional checks")
    sp.add_argument("--n-samples", type=int, default=500)
    sp.add_argument("--out", type=Path, help="JSON-lines report path")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="Maxwell-Bloch echo simulation")
    _add_shape(sp, ["square", "lorentzian", "gaussian", "tabulated", "flat", "none"])
    _add_params(sp)
    defaults = SimGrid()
    sp.add_argument("--n-teeth", type=int, default=defaults.n_teeth)
    sp.add_argument("--knots-per-period", type=int, default=defaults.knots_per_period)
    sp.add_argument("--field-points", type=int, default=defaults.field_points_per_period)
    sp.add_argument("--n-t", type=int, default=defaults.n_t)
    sp.add_argument("--n-z", type=int, default=defaults.n_z)
    sp.add_argument("--tau-T", type=float, default=defaults.pulse_tau_T, help="pulse duration over T")
    sp.add_argument("--check-convergence", action="store_true")
    sp.add_argument("--field-csv", type=Path)
    sp.add_argument("--summary-json", type=Path)
    sp.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "format", "unset") is None:
        args.format = ["csv"]
    try:
        return args.func(args)
    except (QuadratureFailure, OptimizationFailure, GridTooCoarse, WindowError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigError, AfcError, ValueError, OSError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
