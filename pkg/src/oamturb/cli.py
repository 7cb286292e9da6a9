"""Command-line front end: scenario execution and CSV emission.

Commands map one-to-one onto the library surface: `spectrum` (plate mode
weights), `coupling` (analytic or Monte Carlo transfer table),
`coincidence` (fringe versus relative plate orientation),
`dimensionality` (channel capacity versus turbulence strength) and
`link` (horizontal-path distance budget). Output is CSV with a mandatory
header row, to stdout or `--out`.

Every command is deterministic given configuration plus seed; identical
invocations produce byte-identical CSV.
"""

import argparse
import sys

from .channel import (
    coincidence_curve,
    default_grid,
    dimensionality_scan,
    _widened_table,
)
from .config import (
    ScenarioConfig,
    load_config,
    parse_plate,
    parse_ratios,
)
from .errors import ConfigError, NumericalError
from .modes import plate_spectrum
from .scattering import QuadratureSpec, coupling_table
from .screens import mc_coupling
from .turbulence import (
    TurbulenceModel,
    link_distance_for_ratio,
    link_ratio_for_distance,
)

EPILOG = """\
CSV numbers carry 9 significant digits; integral values keep a trailing
".0". Exit codes: 0 success, 2 usage or configuration error, 3 numerical
convergence failure, 4 I/O error.
"""


def _fmt(value):
    """9-significant-digit policy; integral floats keep a trailing .0."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if value != value:  # NaN: column not computed
        return ""
    text = format(float(value), ".9g")
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def _write_csv(header, rows, out):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _effective_config(args):
    config = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    for name in ("plate", "l_max", "dl_max", "method", "seed", "mc",
                 "realizations", "out"):
        if hasattr(args, name):
            overrides[name] = getattr(args, name)
    if getattr(args, "points", None) is not None:
        overrides["curve_points"] = args.points
    ratio_values = []
    if getattr(args, "ratio", None):
        ratio_values.extend(args.ratio)
    if getattr(args, "ratios", None):
        ratio_values.extend(parse_ratios(args.ratios))
    if ratio_values:
        if any(r < 0 for r in ratio_values):
            raise ConfigError("ratios must be >= 0")
        overrides["ratios"] = tuple(sorted(set(ratio_values)))
    return config.with_overrides(**overrides)


def _quadrature(config):
    return QuadratureSpec(
        n_radial=config.radial_nodes,
        n_angular=config.angular_nodes,
        n_cusp=config.cusp_nodes,
        cusp_window=config.cusp_window,
    )


def _single_ratio(config):
    if len(config.ratios) != 1:
        raise ConfigError("this command takes exactly one ratio")
    return config.ratios[0]


def cmd_spectrum(args):
    config = _effective_config(args)
    plate, _ = parse_plate(config.plate)
    spectrum = plate_spectrum(plate, config.l_max)
    rows = [(int(l), w) for l, w in zip(spectrum.ls, spectrum.weights)]
    _write_csv(("l", "lambda_l"), rows, config.out)
    return 0


def cmd_coupling(args):
    config = _effective_config(args)
    model = TurbulenceModel(_single_ratio(config))
    if config.mc:
        table = mc_coupling(
            model, 0, config.dl_max, config.realizations, config.seed,
            n=config.grid_n, extent=config.extent,
            subharmonic_depth=config.subharmonics,
        )
        rows = [(d, table.values[d], table.stderr[d])
                for d in range(config.dl_max + 1)]
        _write_csv(("delta", "T", "stderr"), rows, config.out)
    else:
        table = coupling_table(model, config.dl_max, spec=_quadrature(config))
        rows = [(d, table.values[d]) for d in range(config.dl_max + 1)]
        _write_csv(("delta", "T"), rows, config.out)
    return 0


def cmd_coincidence(args):
    config = _effective_config(args)
    plate, label = parse_plate(config.plate)
    spectrum = plate_spectrum(plate, config.l_max)
    table = _widened_table(_single_ratio(config), config.dl_max,
                           _quadrature(config))
    curve = coincidence_curve(spectrum, table,
                              grid=default_grid(config.curve_points),
                              plate_label=label)
    rows = list(zip(curve.delta, curve.values))
    _write_csv(("delta_rad", "P"), rows, config.out)
    return 0


def cmd_dimensionality(args):
    config = _effective_config(args)
    plate, label = parse_plate(config.plate)
    spectrum = plate_spectrum(plate, config.l_max)
    reports = dimensionality_scan(
        spectrum, sorted(config.ratios), method=config.method,
        dl_max=config.dl_max, grid=default_grid(config.curve_points),
        spec=_quadrature(config), plate_label=label,
    )
    rows = [(r.ratio, r.d_operator, r.d_curve, r.purity) for r in reports]
    _write_csv(("ratio", "D_operator", "D_curve", "purity"), rows, config.out)
    return 0


def cmd_link(args):
    if (args.link_ratio is None) == (args.distance is None):
        raise ConfigError("give exactly one of --ratio or --distance")
    if args.link_ratio is not None:
        report = link_distance_for_ratio(args.wavelength, args.cn2, args.w0,
                                         args.link_ratio)
    else:
        report = link_ratio_for_distance(args.wavelength, args.cn2, args.w0,
                                         args.distance)
    row = (report.wavelength, report.cn2, report.waist, report.ratio,
           report.fried, report.distance, report.rayleigh_range,
           report.near_field)
    _write_csv(
        ("wavelength", "cn2", "w0", "ratio", "r0", "distance",
         "rayleigh_range", "near_field"),
        [row], args.out or "",
    )
    return 0


def _add_common(parser, *, plate=True, ratio=True):
    parser.add_argument("--config", help="scenario config file")
    parser.add_argument("--out", help="output CSV path (default stdout)")
    if plate:
        parser.add_argument(
            "--plate",
            help="quadrant|half|uniform or start:phase pairs in degrees",
        )
        parser.add_argument("--l-max", dest="l_max", type=int,
                            help="mode index window half-width")
    if ratio:
        parser.add_argument("--ratio", action="append", type=float,
                            help="turbulence strength w0/r0 (repeatable)")
        parser.add_argument("--ratios",
                            help="ratio list a,b,c or range a:b:step")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oamturb",
        description="OAM entanglement through Kolmogorov turbulence: "
                    "mode spectra, coupling tables, coincidence fringes, "
                    "channel dimensionality and link budgets.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="plate OAM weight spectrum",
                       epilog=EPILOG)
    _add_common(p, ratio=False)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("coupling", help="turbulence coupling table T_delta",
                       epilog=EPILOG)
    _add_common(p, plate=False)
    p.add_argument("--dl-max", dest="dl_max", type=int,
                   help="largest offset to tabulate")
    p.add_argument("--mc", action="store_true", default=None,
                   help="use the Monte Carlo phase-screen engine")
    p.add_argument("--realizations", type=int, help="Monte Carlo ensemble size")
    p.add_argument("--seed", type=int, help="master random seed")
    p.set_defaults(func=cmd_coupling)

    p = sub.add_parser("coincidence",
                       help="coincidence curve versus relative orientation",
                       epilog=EPILOG)
    _add_common(p)
    p.add_argument("--dl-max", dest="dl_max", type=int)
    p.add_argument("--points", type=int, help="grid points on [-pi, pi]")
    p.set_defaults(func=cmd_coincidence)

    p = sub.add_parser("dimensionality",
                       help="Shannon dimensionality versus turbulence",
                       epilog=EPILOG)
    _add_common(p)
    p.add_argument("--dl-max", dest="dl_max", type=int)
    p.add_argument("--method", choices=("operator", "curve", "both"))
    p.set_defaults(func=cmd_dimensionality)

    p = sub.add_parser("link", help="horizontal link-distance budget",
                       epilog=EPILOG)
    p.add_argument("--wavelength", type=float, required=True,
                   help="wavelength in meters")
    p.add_argument("--cn2", type=float, required=True,
                   help="structure constant in m^(-2/3)")
    p.add_argument("--w0", type=float, required=True,
                   help="beam waist in meters")
    p.add_argument("--ratio", dest="link_ratio", type=float,
                   help="target w0/r0 (solves for distance)")
    p.add_argument("--distance", type=float,
                   help="path length in meters (solves for w0/r0)")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_link)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
