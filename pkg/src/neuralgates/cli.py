"""Command-line entry point.

Exit codes: 0 success, 1 other error, 2 ConfigError (also bad flags), 3 Diverged,
4 MissingWeights, 5 CorruptWeights. On failure one line
``error: <Category>: <message>`` goes to stderr.
"""
import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import exact, experiments, sampler
from . import net as nn
from .errors import ConfigError, NeuralGatesError
from .experiments import ExperimentConfig

OUT_ENV = "NEURALGATES_OUT"
DEFAULT_OUT = "runs"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _add_common(p, training=True):
    g = p.add_argument_group("common")
    g.add_argument("--config", metavar="PATH", help="key = value config file; flags override it")
    g.add_argument("--out", metavar="DIR",
                   help=f"output root (default: ${OUT_ENV} or '{DEFAULT_OUT}')")
    g.add_argument("--run-id", help="run directory name (default: derived from the config hash)")
    g.add_argument("--seed", type=int, help="RNG seed for data, init and shuffling (default: 1)")
    g.add_argument("--full-scale", action="store_const", const=True,
                   help="full-scale sample/epoch/chain sizes instead of desk-scale")
    g.add_argument("--wall-time", action="store_const", const=True,
                   help="fill the wall_ms column (makes records.csv non-reproducible)")
    g.add_argument("--eval-batch", type=int, help="probe batch for chains (default: 1000)")
    if not training:
        return
    t = p.add_argument_group("training")
    t.add_argument("--samples", "-N", type=int,
                   help="dataset size incl. held-out (default: 10000; quantumness 100000)")
    t.add_argument("--epochs", type=int, help="epochs (default: 500; quantumness 200)")
    t.add_argument("--batch", type=int, help="batch size (default: 1000)")
    t.add_argument("--heldout", type=float, help="held-out fraction (default: 0.1)")
    t.add_argument("--optimizer", choices=["adagrad", "adadelta"],
                   help="optimizer (default: adagrad; quantumness adadelta)")
    t.add_argument("--lr", type=float, help="Adagrad learning rate (default: 0.08)")
    t.add_argument("--rho", type=float, help="AdaDelta decay (default: 0.95)")
    t.add_argument("--eps", type=float, help="optimizer epsilon (default: 1e-8 Adagrad, 1e-6 AdaDelta; quantumness 1e-9)")
    t.add_argument("--activation", choices=list(nn.ACTIVATIONS),
                   help="hidden activation (default: linear; quantumness relu)")


def build_parser():
    parser = _Parser(prog="neuralgates", description=__doc__.splitlines()[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter, epilog=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-quantumness", help="train the relu net emulating the quantumness map")
    _add_common(p)
    p.add_argument("--hidden", help="hidden widths, comma separated (default: 256,256)")
    p.add_argument("--batch-schedule", help="batch sizes in order (default: 32,64,128,256,512)")

    p = sub.add_parser("train-gate", help="train one 64-m-64 gate net and log its training curve")
    _add_common(p)
    p.add_argument("--gate", help="cnot, hr, h1 or r2 (default: cnot)")
    p.add_argument("--m", type=int, help="bottleneck width (default: 15)")

    p = sub.add_parser("sweep", help="bottleneck sweep over m")
    _add_common(p)
    p.add_argument("--gate", help="gate (default: cnot)")
    p.add_argument("--m-list", help="widths, e.g. 12..20 or 14,15,16 (default: 12..20)")
    p.add_argument("--checkpoints", help="epochs at which loss is logged (default: 500,1000,3000)")

    for name, text in (("chain", "chain HR then CNOT nets and compare with the exact chain"),
                       ("order-swap", "chains in both gate orders")):
        p = sub.add_parser(name, help=text)
        _add_common(p, training=False)
        p.add_argument("--oracle", action="store_const", const=True,
                       help="use the analytic exact nets instead of weight files")
        p.add_argument("--weights-hr", metavar="PATH", help="weight file of the HR net")
        p.add_argument("--weights-cnot", metavar="PATH", help="weight file of the CNOT net")
        p.add_argument("--n-max", type=int, help="largest layer count (default: 1024; 32768 with --oracle)")

    p = sub.add_parser("verify", help="constraint metrics of a saved gate net")
    p.add_argument("weights", nargs="?", help="weight file")
    p.add_argument("--exact", metavar="GATE", help="verify the analytic net of GATE instead")
    p.add_argument("--gate", help="also report density-input loss against this gate")
    p.add_argument("--seed", type=int, default=1, help="probe seed (default: 1)")
    p.add_argument("--probe", type=int, default=1000, help="probe batch size (default: 1000)")
    p.add_argument("--json", action="store_true", help="print the report as JSON")

    p = sub.add_parser("export-dataset", help="write a dataset as CSV")
    p.add_argument("path")
    p.add_argument("--kind", choices=["quantumness", "gate"], default="gate", help="(default: gate)")
    p.add_argument("--gate", default="cnot", help="(default: cnot)")
    p.add_argument("--samples", "-N", type=int, default=1000, help="(default: 1000)")
    p.add_argument("--seed", type=int, default=1, help="(default: 1)")
    p.add_argument("--heldout", type=float, default=sampler.DEFAULT_HELDOUT, help="(default: 0.1)")
    return parser


EXPERIMENT_OF = {
    "train-quantumness": "quantumness",
    "train-gate": "fig1",
    "sweep": "fig2",
    "chain": "fig3",
    "order-swap": "order_swap",
}
_NOT_CONFIG = {"command", "config", "out", "run_id", "json"}


def resolve_config(args):
    """Config file values, then explicit flags, then experiment defaults."""
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        values.update(experiments.parse_config_text(path.read_text()))
    for key, value in vars(args).items():
        if key in _NOT_CONFIG or value is None:
            continue
        values[key] = ExperimentConfig.coerce(key, value)
    values["experiment"] = EXPERIMENT_OF[args.command]
    return ExperimentConfig(**values).resolve()


def out_root(args):
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _print_tail(result, out):
    last = {}
    for row in result.rows:
        last[row["experiment"]] = row
    for name, row in last.items():
        print(f"{name}: index {row['index']} loss {row['loss']:.6g} "
              f"trace_residual_max {row['trace_residual_max']:.3g} "
              f"antiherm_max {row['antiherm_max']:.3g}", file=out)


def cmd_run(args, out=None):
    out = out or sys.stdout
    cfg = resolve_config(args)
    runner = {
        "quantumness": experiments.run_quantumness,
        "fig1": experiments.run_fig1,
        "fig2": experiments.run_fig2,
        "fig3": experiments.run_fig3,
        "order_swap": experiments.run_order_swap,
    }[cfg.experiment]
    result = runner(cfg)
    run_dir = experiments.write_run(result, out_root(args), args.run_id)
    print(f"run: {run_dir}", file=out)
    _print_tail(result, out)
    for m, msg in result.extra.get("diverged", {}).items():
        print(f"diverged: m={m}: {msg}", file=out)
    return 0


def cmd_verify(args, out=None):
    out = out or sys.stdout
    if args.exact:
        model = exact.exact_gate_network(args.exact)
        gate = args.gate or args.exact
    elif args.weights:
        model = nn.load_network(args.weights)
        gate = args.gate
    else:
        raise ConfigError("give a weight file or --exact GATE")
    report = experiments.verify_network(model, gate=gate, seed=args.seed, count=args.probe)
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True), file=out)
        return 0
    print(f"network {'-'.join(str(d) for d in report['dims'])}", file=out)
    if "density_loss" in report:
        print(f"density inputs: loss vs {report['gate']} {report['density_loss']:.6g}", file=out)
    for probe in ("density_inputs", "raw_inputs"):
        for name, stats in report[probe].items():
            text = " ".join(f"{k} {v:.6g}" for k, v in stats.items())
            print(f"{probe}: {name} {text}", file=out)
    flag = report["raw_inputs_hermitian_normalized"]
    print(f"raw inputs stay hermitian and normalized: {'yes' if flag else 'no'}", file=out)
    return 0


def cmd_export(args, out=None):
    out = out or sys.stdout
    spec = sampler.DatasetSpec(args.kind, args.samples, args.seed,
                               args.gate if args.kind == "gate" else None, args.heldout)
    sampler.make_dataset(spec).export_csv(args.path)
    print(f"wrote {args.path}", file=out)
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "export-dataset":
            return cmd_export(args)
        return cmd_run(args)
    except NeuralGatesError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError) as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
