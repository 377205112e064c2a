"""Command-line driver.

Subcommands: ``solve`` (one run, solution CSV), ``converge`` (resolution
sweeps over the method variants), ``scalecheck`` (scattering-ratio scaling
identity), ``bench`` (timed repeats).  Every command writes a JSON manifest
next to its data files.  Parameter precedence: preset, then config file,
then command-line flags.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytic
from .analysis import OracleGateError, analysis_grid
from .dgcore import TransportSystem
from .presets import config_from_settings, preset_names, preset_settings
from .study import (
    VARIANTS,
    run_bench,
    run_convergence,
    run_scalecheck,
    split_variant,
)

# Config-file and flag spellings (left) against internal settings keys.
_KEY_MAP = {
    "kind": "kind",
    "c": "c",
    "x0": "x0",
    "t0": "t0",
    "sigma": "sigma",
    "N": "angles",
    "M": "order",
    "K": "cells",
    "mesh": "mesh_mode",
    "source_mode": "source_mode",
    "t_final": "t_final",
    "amplitude": "amplitude",
}
_STRING_KEYS = ("kind", "mesh_mode", "source_mode")
_INT_KEYS = ("angles", "order", "cells")


def _format_field(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_field(v) for v in row) + "\n")
    return path


def write_manifest(path, payload):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def parse_config_file(path):
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError("%s:%d: expected 'key = value'" % (path, lineno))
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_MAP:
            raise ValueError("%s:%d: unknown key %r" % (path, lineno, key))
        out[_KEY_MAP[key]] = value
    return out


def _coerce(settings):
    for key, value in list(settings.items()):
        if key in _STRING_KEYS:
            settings[key] = str(value)
        elif key in _INT_KEYS:
            settings[key] = int(value)
        else:
            settings[key] = float(value)
    return settings


def gather_settings(args):
    """Merge preset, config file, and flags (later sources win)."""
    if args.preset:
        settings = preset_settings(args.preset)
    else:
        settings = dict(
            c=1.0, x0=0.0, sigma=0.0, t0=0.0, amplitude=1.0,
            angles=8, order=4, cells=4,
            mesh_mode="moving", source_mode="uncollided", t_final=1.0,
        )
    if args.config:
        settings.update(parse_config_file(args.config))
    for flag, key in _KEY_MAP.items():
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    _coerce(settings)
    if "kind" not in settings:
        raise ValueError("no problem given: use --preset or --kind")
    return settings


def _uncollided_column(spec, grid, t):
    if spec.kind == "mms" or spec.kind not in analytic.KINDS:
        return np.zeros_like(grid)
    return analytic.uncollided_scalar_flux(spec, grid, t)


def _settings_echo(settings):
    return {key: settings[key] for key in sorted(settings)}


def _fit_payload(fit):
    if fit is None:
        return None
    return {
        "rate": fit.rate,
        "intercept": fit.intercept,
        "n_used": fit.n_used,
        "residual": fit.residual,
        "spans_factor_four": fit.spans_factor_four,
    }


def _gate_payload(ref):
    return {
        "gate": ref.gate,
        "gate_spatial": ref.gate_spatial,
        "gate_angular": ref.gate_angular,
        "label": ref.label,
    }


def _prepare_out_dir(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_solve(args):
    settings = gather_settings(args)
    out_dir = _prepare_out_dir(args)
    config = config_from_settings(settings)
    system = TransportSystem(config)
    result = system.solve()
    grid = analysis_grid(config.spec, config.t_final)
    phi = system.scalar_flux(result.state, grid)
    phi_u = _uncollided_column(config.spec, grid, result.state.t)
    csv_path = write_csv(
        out_dir / "solution.csv",
        ("x", "phi", "phi_u", "phi_collided"),
        zip(grid, phi, phi_u, phi - phi_u),
    )
    manifest = write_manifest(out_dir / "manifest.json", {
        "artifact": "snmesh",
        "version": __version__,
        "command": "solve",
        "config": _settings_echo(settings),
        "variant": config.variant,
        "wall_seconds": result.wall_seconds,
        "integrator": {
            "steps_accepted": result.stats.steps_accepted,
            "steps_rejected": result.stats.steps_rejected,
            "rhs_evaluations": result.stats.n_rhs,
        },
        "outputs": {"solution_csv": csv_path.name},
    })
    print("wrote %s and %s (%d rows, %.3fs solve)" % (
        csv_path, manifest, grid.size, result.wall_seconds))
    return 0


def _sweep_values(args, settings):
    if args.values is not None:
        return tuple(args.values)
    if args.sweep == "cells":
        return (2, 4, 8, 16)
    return (2, 4, 6, 8)


def cmd_converge(args):
    settings = gather_settings(args)
    out_dir = _prepare_out_dir(args)
    spec = config_from_settings(settings).spec
    values = _sweep_values(args, settings)
    fixed = settings["order"] if args.sweep == "cells" else settings["cells"]
    variants = tuple(args.variants.split(",")) if args.variants else VARIANTS
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(
                "unknown variant %r (choose from %s)"
                % (variant, ", ".join(VARIANTS))
            )
    study = run_convergence(
        spec,
        sweep=args.sweep,
        values=values,
        fixed=fixed,
        n_angles=settings["angles"],
        t_final=settings["t_final"],
        variants=variants,
        rtol=settings.get("rtol", 5e-13),
        atol=settings.get("atol", 1e-12),
    )
    rows = []
    for variant, record in study.records.items():
        fit = record.fit
        for point in record.points:
            rows.append((
                variant,
                args.sweep,
                point.value,
                point.rmse,
                fit.rate if fit else float("nan"),
                fit.intercept if fit else float("nan"),
            ))
    csv_path = write_csv(
        out_dir / "convergence.csv",
        ("variant", "sweep", "value", "rmse", "fit_A_or_c1", "fit_C"),
        rows,
    )
    per_variant = {}
    for variant, record in study.records.items():
        per_variant[variant] = {
            "fit": _fit_payload(record.fit),
            "skipped_values": list(record.skipped),
            "improvement_over_baseline": study.improvement_over_baseline(
                variant
            ),
        }
    manifest = write_manifest(out_dir / "manifest.json", {
        "artifact": "snmesh",
        "version": __version__,
        "command": "converge",
        "config": _settings_echo(settings),
        "sweep": args.sweep,
        "values": list(values),
        "fixed": fixed,
        "reference": _gate_payload(study.reference),
        "variants": per_variant,
        "outputs": {"convergence_csv": csv_path.name},
    })
    print("wrote %s and %s" % (csv_path, manifest))
    for variant, record in study.records.items():
        if record.fit:
            print("  %-20s rate %.3f  intercept %.3e" % (
                variant, record.fit.rate, record.fit.intercept))
    return 0


def cmd_scalecheck(args):
    settings = gather_settings(args)
    out_dir = _prepare_out_dir(args)
    spec = config_from_settings(settings).spec
    if spec.kind in analytic.SOURCE_KINDS:
        raise ValueError(
            "scalecheck covers initial-value pulses only; the scaling "
            "identity does not hold with a volumetric source"
        )
    variant = args.variant or "uncollided+moving"
    split_variant(variant)
    report = run_scalecheck(
        spec,
        t_benchmark=settings["t_final"],
        order=settings["order"],
        n_cells=settings["cells"],
        n_angles=settings["angles"],
        variant=variant,
        rtol=settings.get("rtol", 5e-13),
        atol=settings.get("atol", 1e-12),
    )
    csv_path = write_csv(
        out_dir / "scalecheck.csv",
        ("x", "phi_direct", "phi_scaled", "abs_diff"),
        zip(
            report.grid,
            report.phi_direct,
            report.phi_scaled,
            np.abs(report.phi_direct - report.phi_scaled),
        ),
    )
    manifest = write_manifest(out_dir / "manifest.json", {
        "artifact": "snmesh",
        "version": __version__,
        "command": "scalecheck",
        "config": _settings_echo(settings),
        "variant": variant,
        "t_benchmark": report.t_benchmark,
        "t_scaled": report.t_scaled,
        "max_abs_diff": report.max_abs_diff,
        "outputs": {"scalecheck_csv": csv_path.name},
    })
    print("wrote %s and %s" % (csv_path, manifest))
    print("max abs difference on the analysis grid: %.6e" % report.max_abs_diff)
    return 0


def cmd_bench(args):
    settings = gather_settings(args)
    out_dir = _prepare_out_dir(args)
    spec = config_from_settings(settings).spec
    values = _sweep_values(args, settings)
    fixed = settings["order"] if args.sweep == "cells" else settings["cells"]
    variant = args.variant or "uncollided+moving"
    split_variant(variant)
    rows = run_bench(
        spec,
        sweep=args.sweep,
        values=values,
        fixed=fixed,
        n_angles=settings["angles"],
        t_final=settings["t_final"],
        variant=variant,
        repeats=args.repeats,
        rtol=settings.get("rtol", 5e-13),
        atol=settings.get("atol", 1e-12),
    )
    csv_path = write_csv(
        out_dir / "timing.csv",
        ("variant", "M", "K", "mean_seconds", "rmse"),
        [(r.variant, r.order, r.n_cells, r.mean_seconds, r.rmse) for r in rows],
    )
    manifest = write_manifest(out_dir / "manifest.json", {
        "artifact": "snmesh",
        "version": __version__,
        "command": "bench",
        "config": _settings_echo(settings),
        "sweep": args.sweep,
        "values": list(values),
        "repeats": args.repeats,
        "outputs": {"timing_csv": csv_path.name},
    })
    print("wrote %s and %s" % (csv_path, manifest))
    return 0


# ---------------------------------------------------------------------------
# Argument plumbing.


def _add_parameter_flags(parser):
    parser.add_argument("--preset", choices=preset_names(),
                        help="named problem with study defaults")
    parser.add_argument("--config", type=Path,
                        help="'key = value' parameter file")
    parser.add_argument("--out-dir", type=Path, default=Path("snmesh-out"),
                        help="directory for CSV and manifest output")
    parser.add_argument("--kind", choices=analytic.KINDS, dest="kind")
    parser.add_argument("--c", type=float, dest="c",
                        help="scattering ratio")
    parser.add_argument("--x0", type=float, dest="x0",
                        help="half-width of square or plane sources")
    parser.add_argument("--sigma", type=float, dest="sigma",
                        help="Gaussian width")
    parser.add_argument("--t0", type=float, dest="t0",
                        help="source switch-off time")
    parser.add_argument("--N", type=int, dest="angles",
                        help="number of discrete directions")
    parser.add_argument("--M", type=int, dest="order",
                        help="basis order per cell (M+1 functions)")
    parser.add_argument("--K", type=int, dest="cells",
                        help="number of mesh cells")
    parser.add_argument("--mesh", choices=("static", "moving"),
                        dest="mesh_mode")
    parser.add_argument("--source-mode", choices=("standard", "uncollided"),
                        dest="source_mode")
    parser.add_argument("--t", "--t-final", type=float, dest="t_final",
                        help="final time")
    parser.add_argument("--amplitude", type=float, dest="amplitude",
                        help="source strength factor")


def _add_sweep_flags(parser):
    parser.add_argument("--sweep", choices=("cells", "order"),
                        default="cells", help="which resolution to sweep")
    parser.add_argument(
        "--values",
        type=lambda s: [int(tok) for tok in s.split(",") if tok],
        help="comma-separated sweep values",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="snmesh",
        description="Discrete-ordinates transport on a moving DG mesh",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one configuration")
    _add_parameter_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_conv = sub.add_parser("converge", help="resolution sweep per variant")
    _add_parameter_flags(p_conv)
    _add_sweep_flags(p_conv)
    p_conv.add_argument("--variants",
                        help="comma-separated subset of %s" % (",".join(VARIANTS)))
    p_conv.set_defaults(func=cmd_converge)

    p_scale = sub.add_parser(
        "scalecheck", help="scattering-ratio scaling identity check"
    )
    _add_parameter_flags(p_scale)
    p_scale.add_argument("--variant", help="method variant, default uncollided+moving")
    p_scale.set_defaults(func=cmd_scalecheck)

    p_bench = sub.add_parser("bench", help="timed repeats over a sweep")
    _add_parameter_flags(p_bench)
    _add_sweep_flags(p_bench)
    p_bench.add_argument("--variant", help="method variant, default uncollided+moving")
    p_bench.add_argument("--repeats", type=int, default=5,
                         help="timed runs per configuration")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OracleGateError as exc:
        print("oracle gate failure: %s" % exc, file=sys.stderr)
        return 1
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
