"""Command-line front end.

Subcommands map one-to-one onto the library surface: ``summary`` and
``profile`` for analytical costing, ``compare-convs`` for the
convolution-swap study, ``schedule`` for the warm-restart rate table,
``probe-gridding`` for receptive-field coverage, ``train-toy`` for the
end-to-end demo, and ``verify`` for the built-in check suites.

Text output is for reading; ``--format json`` emits documents carrying
``schema_version`` for scripting. Exit status is 0 on success, 1 when a
verify suite fails or training diverges, 2 for bad arguments.
"""

import argparse
import json
import sys

from .analysis import (REFERENCE_BUDGETS, SCHEMA_VERSION, SWAP_ARMS,
                       conv_swap_summary, gridding_probe, profile)
from .errors import ConfigError, ShapeError, TrainingDiverged
from .network import PROFILES, build_network
from .training import (DEFAULT_MILESTONES, LrSchedule, TrainConfig,
                       history_to_csv, schedule_table, train_toy)
from .verify import SUITES, run_suites

FORMATS = ("text", "json", "csv")


def _add_format(p, formats=FORMATS):
    p.add_argument("--format", choices=formats, default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="espnetv2",
        description="Efficient grouped/dilated convolution networks: "
                    "costing, probes, schedules, and a toy training run.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summary", help="budget table for every profile")
    _add_format(p, ("text", "json"))

    p = sub.add_parser("profile", help="per-layer analytical cost report")
    p.add_argument("--profile", choices=sorted(PROFILES), default="c28")
    p.add_argument("--input-extent", type=int, default=224)
    p.add_argument("--full", action="store_true",
                   help="list every layer instead of stage totals")
    p.add_argument("--count-classifier", action="store_true")
    p.add_argument("--count-bias", action="store_true")
    _add_format(p)

    p = sub.add_parser("compare-convs",
                       help="swap the branch convolutions and compare cost")
    p.add_argument("--profile", choices=sorted(PROFILES), default="c28")
    p.add_argument("--input-extent", type=int, default=224)
    _add_format(p, ("text", "json"))

    p = sub.add_parser("schedule", help="print the learning-rate table")
    p.add_argument("--mode", choices=("cyclic", "fixed"), default="cyclic")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--eta-min", type=float, default=0.1)
    p.add_argument("--eta-max", type=float, default=0.5)
    p.add_argument("--period", type=int, default=5)
    p.add_argument("--milestones", type=str,
                   default=",".join(str(m) for m in DEFAULT_MILESTONES),
                   help="comma-separated halving epochs")
    _add_format(p)

    p = sub.add_parser("probe-gridding",
                       help="receptive-field coverage of dilated branches")
    p.add_argument("--rates", type=str, default="1,2,3,4",
                   help="comma-separated dilation rates")
    p.add_argument("--no-hff", action="store_true",
                   help="probe the largest-rate branch without fusion")
    p.add_argument("--kernel", type=int, default=3)
    _add_format(p, ("text", "json"))

    p = sub.add_parser("train-toy", help="train the desk-scale classifier")
    p.add_argument("--mode", choices=("cyclic", "fixed"), default="cyclic")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--train-size", type=int, default=192)
    p.add_argument("--eval-size", type=int, default=96)
    p.add_argument("--seed", type=int, default=0)
    _add_format(p)

    p = sub.add_parser("verify", help="run the built-in check suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES),
                   help="restrict to a suite (repeatable); default all")
    return parser


def _cmd_summary(args) -> int:
    rows = []
    for name in PROFILES:
        report = profile(build_network(name))
        ref = REFERENCE_BUDGETS[name]
        rows.append({"profile": name, "params": report.total_params,
                     "macs": report.total_macs,
                     "reference_params": ref[0], "reference_macs": ref[1]})
    if args.format == "json":
        print(json.dumps({"schema_version": SCHEMA_VERSION,
                          "input_extent": 224, "profiles": rows}, indent=2))
        return 0
    print(f"{'profile':8} {'params':>10} {'ref':>10} {'macs':>12} {'ref':>12}")
    for r in rows:
        print(f"{r['profile']:8} {r['params']:>10,} {r['reference_params']:>10,} "
              f"{r['macs']:>12,} {r['reference_macs']:>12,}")
    return 0


def _cmd_profile(args) -> int:
    net = build_network(args.profile, 0, args.input_extent)
    report = profile(net, count_classifier=args.count_classifier,
                     count_bias=args.count_bias)
    if args.format == "json":
        print(report.to_json())
    elif args.format == "csv":
        print(report.to_csv(), end="")
    else:
        print(report.to_text(full=args.full))
    return 0


def _cmd_compare(args) -> int:
    doc = conv_swap_summary(args.profile, args.input_extent)
    if args.format == "json":
        print(json.dumps(doc, indent=2))
        return 0
    print(f"profile {doc['profile']}  input {doc['input_extent']}")
    for arm in SWAP_ARMS:
        a = doc["arms"][arm]
        print(f"{arm:30} {a['params']:>10,} params {a['macs']:>13,} macs")
    print(f"dilated-vs-separable mac factor: "
          f"{doc['macs_ratio_dilated_vs_separable']:.3f}")
    return 0


def _cmd_schedule(args) -> int:
    milestones = tuple(int(m) for m in args.milestones.split(",") if m.strip())
    sched = LrSchedule(args.eta_min, args.eta_max, args.period,
                       milestones, args.mode)
    table = schedule_table(sched, args.epochs)
    if args.format == "json":
        print(json.dumps({"schema_version": SCHEMA_VERSION, "mode": sched.mode,
                          "rates": table}, indent=2))
    elif args.format == "csv":
        print("epoch,lr")
        for e, lr in enumerate(table):
            print(f"{e},{lr}")
    else:
        for e, lr in enumerate(table):
            print(f"epoch {e:3d}  lr {lr:.6f}")
    return 0


def _cmd_gridding(args) -> int:
    rates = tuple(int(r) for r in args.rates.split(",") if r.strip())
    coverage = gridding_probe(rates, use_hff=not args.no_hff, kernel=args.kernel)
    if args.format == "json":
        print(json.dumps({"schema_version": SCHEMA_VERSION, "rates": rates,
                          "hff": not args.no_hff, "kernel": args.kernel,
                          "coverage": coverage}, indent=2))
    else:
        fused = "fused" if not args.no_hff else "unfused"
        print(f"rates {rates} {fused}: coverage {coverage:.4f} "
              f"of the receptive field")
    return 0


def _cmd_train(args) -> int:
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      train_size=args.train_size, eval_size=args.eval_size,
                      seed=args.seed)
    log = None
    if args.format == "text":
        log = lambda r: print(f"epoch {r['epoch']:3d}  lr {r['lr']:.4f}  "
                              f"loss {r['loss']:.4f}  accuracy {r['accuracy']:.4f}")
    result = train_toy(args.mode, cfg, log=log)
    if args.format == "json":
        print(json.dumps({"schema_version": SCHEMA_VERSION, "mode": result.mode,
                          "seed": result.seed,
                          "final_accuracy": result.final_accuracy,
                          "history": result.history}, indent=2))
    elif args.format == "csv":
        print(history_to_csv(result.history), end="")
    else:
        print(f"final accuracy {result.final_accuracy:.4f} ({result.mode})")
    return 0


def _cmd_verify(args) -> int:
    results = run_suites(args.suite)
    for r in results:
        print(r.line())
    failed = sum(1 for r in results if not r.passed)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


_COMMANDS = {
    "summary": _cmd_summary,
    "profile": _cmd_profile,
    "compare-convs": _cmd_compare,
    "schedule": _cmd_schedule,
    "probe-gridding": _cmd_gridding,
    "train-toy": _cmd_train,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
