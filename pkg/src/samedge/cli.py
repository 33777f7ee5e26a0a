"""Command line entry point: ``samedge {run,grid,verify,plot}``.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error, 3 a
verification check failed.  ``SAMEDGE_LOG_DIR`` sets the default directory
for logs when a config does not give ``log.path``.
"""

import argparse
import os
import sys

from samedge.errors import ConfigError, ContractViolation
from samedge.harness import config as cfg
from samedge.harness.data import IdxFormatError
from samedge.harness.logs import LogFormatError
from samedge.harness.runner import run_experiment, run_grid, run_name, summarize
from samedge import quadlab
from samedge.svgplot import PlotError, PlotSpec, plot

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3
LOG_DIR_ENV = "SAMEDGE_LOG_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(parser):
    group = parser.add_argument_group("config overrides", "override any key of the config file")
    for section in cfg.SECTIONS:
        for key in cfg.field_names(section):
            group.add_argument(f"--{section}.{key}", dest=f"{section}.{key}", metavar="VALUE",
                               default=None)


def _overrides(args):
    return {name: value for name, value in vars(args).items()
            if "." in name and value is not None}


def _float_list(text):
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser():
    parser = _Parser(prog="samedge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one experiment from a config file")
    p.add_argument("config", help="INI experiment config")
    _add_config_flags(p)

    p = sub.add_parser("grid", help="run every (eta, rho) combination")
    p.add_argument("config", help="INI experiment config used as the base")
    p.add_argument("--etas", type=_float_list, required=True, help="comma-separated step sizes")
    p.add_argument("--rhos", type=_float_list, required=True, help="comma-separated SAM radii")
    p.add_argument("--out", default=None, help="output directory (default: $%s or ./runs)"
                   % LOG_DIR_ENV)
    p.add_argument("--workers", type=_positive_int, default=1, help="parallel runs")
    _add_config_flags(p)

    p = sub.add_parser("verify", help="randomised checks of the one-step sign laws")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("plot", help="SVG line chart of one or more logs")
    p.add_argument("logs", nargs="+", help="CSV logs")
    p.add_argument("--series", required=True,
                   help="comma-separated columns, e.g. lambda1,sam_edge,gd_edge")
    p.add_argument("--yscale", choices=("linear", "log"), default="linear")
    p.add_argument("--out", required=True, help="output SVG path")
    return parser


def _default_log_path(config):
    if config.log.path:
        return config.log.path
    directory = os.environ.get(LOG_DIR_ENV, ".")
    return os.path.join(directory, run_name(config.optim.eta, config.optim.rho) + ".csv")


def cmd_run(args):
    config = cfg.load_config(args.config, _overrides(args))
    path = _default_log_path(config)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    records = run_experiment(config, log_path=path)
    status = "diverged" if records and records[-1].diverged else "completed"
    print(f"{status}: {len(records)} records -> {path}")
    if len(records) >= 10 and not records[-1].diverged:
        s = summarize(records)
        print(f"last-quartile median |lambda1|/sam_edge={s.edge_ratio:.4f} "
              f"|lambda1|/(2/eta)={s.gd_edge_ratio:.4f} final_loss={s.final_loss:.6g}")
    return EXIT_OK


def cmd_grid(args):
    config = cfg.load_config(args.config, _overrides(args))
    out = args.out or os.environ.get(LOG_DIR_ENV, "runs")
    entries = run_grid(config, args.etas, args.rhos, out, workers=args.workers)
    for e in entries:
        print(f"{e.name} {e.status} diverged={str(e.diverged).lower()} records={e.records}")
    return EXIT_IO if any(e.status != "ok" for e in entries) else EXIT_OK


def cmd_verify(args):
    reports = [
        quadlab.verify_gd_prop_sign(trials=args.trials, seed=args.seed),
        quadlab.verify_prop_sign(trials=args.trials, seed=args.seed),
        quadlab.verify_closed_form(trials=args.trials, seed=args.seed),
        quadlab.verify_edge_bisection(),
    ]
    for r in reports:
        print(r.summary())
    return EXIT_OK if all(r.ok for r in reports) else EXIT_VERIFY


def cmd_plot(args):
    series = tuple(s for s in args.series.replace(",", " ").split() if s)
    if not series:
        raise PlotError("no series selected")
    plot(PlotSpec(logs=tuple(args.logs), series=series, yscale=args.yscale, output=args.out))
    print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "grid": cmd_grid, "verify": cmd_verify, "plot": cmd_plot}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlotError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, IdxFormatError, LogFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
