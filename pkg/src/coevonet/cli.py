"""Command-line interface: a thin client over the service endpoints.

Subcommands map one-to-one onto service operations:

    run        simulate one parameter setting and print its outcome measures
    sweep      run a parameter grid into a JSONL record file (resumable)
    aggregate  collapse run records into a per-combo CSV table
    fit        train a surrogate model on an aggregated table
    heatmap    render phase-diagram images/CSVs from a trained surrogate
    serve      start the HTTP service itself

Without ``--server`` everything executes in-process (same code path as the
HTTP service, no network involved); with ``--server URL`` the same commands
talk to a remote instance, in which case file paths are interpreted on the
server.  Results go to stdout as one JSON line; progress and diagnostics go
to stderr.  Exit status is 0 on success, 1 when the service reports an
error or a sweep finishes with failed runs, 2 for bad arguments.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from .client import ServiceClient, ServiceError
from .graph import MEASURES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coevonet",
        description="Adaptive-network co-evolution experiments.",
    )
    parser.add_argument(
        "--server",
        metavar="URL",
        default=None,
        help="talk to a running service at URL instead of executing in-process",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-q", "--quiet", action="store_true",
        help="suppress progress and summary chatter on stderr",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", parents=[common], help="simulate one parameter setting",
    )
    p_run.add_argument("--n", type=int, required=True, help="number of nodes")
    p_run.add_argument("--c", type=float, required=True, help="conformity rate")
    p_run.add_argument("--h", type=float, required=True, help="homophily rate")
    p_run.add_argument("--a", type=float, required=True, help="novelty-seeking rate")
    p_run.add_argument("--theta-h", type=float, required=True, help="homophily tolerance")
    p_run.add_argument("--theta-a", type=float, required=True, help="novelty threshold")
    p_run.add_argument("--noise-sigma", type=float, default=0.1)
    p_run.add_argument("--dt", type=float, default=0.1)
    p_run.add_argument("--t-end", type=float, default=100.0)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument(
        "--snapshot-every", type=int, default=0, metavar="STEPS",
        help="also write a JSONL trajectory snapshot every STEPS steps",
    )
    p_run.add_argument("--snapshot-out", metavar="PATH", default=None)
    p_run.set_defaults(handler=cmd_run)

    p_sweep = sub.add_parser(
        "sweep", parents=[common], help="run a parameter grid to a record file",
    )
    p_sweep.add_argument("--spec", required=True, metavar="JSON",
                         help="sweep spec file (axis value lists, replicates, base_seed)")
    p_sweep.add_argument("--out", required=True, metavar="JSONL",
                         help="record sink; an existing one is resumed")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--no-resume", action="store_true",
                         help="discard any existing records in the sink first")
    p_sweep.set_defaults(handler=cmd_sweep)

    p_agg = sub.add_parser(
        "aggregate", parents=[common], help="aggregate run records to CSV",
    )
    p_agg.add_argument("--records", required=True, metavar="JSONL")
    p_agg.add_argument("--out", required=True, metavar="CSV")
    p_agg.set_defaults(handler=cmd_aggregate)

    p_fit = sub.add_parser(
        "fit", parents=[common], help="train a surrogate on aggregated results",
    )
    p_fit.add_argument("--table", required=True, metavar="CSV")
    p_fit.add_argument("--n", type=int, required=True,
                       help="network size whose rows to fit")
    p_fit.add_argument("--out", required=True, metavar="JSON",
                       help="where to write the trained model")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--epochs", type=int, default=None)
    p_fit.add_argument("--batch-size", type=int, default=None)
    p_fit.add_argument("--learning-rate", type=float, default=None)
    p_fit.add_argument("--hidden", type=int, nargs="+", default=None,
                       metavar="WIDTH", help="hidden layer widths")
    p_fit.set_defaults(handler=cmd_fit)

    p_map = sub.add_parser(
        "heatmap", parents=[common],
        help="render (h, a) phase diagrams from a surrogate",
    )
    p_map.add_argument("--model", required=True, metavar="JSON")
    p_map.add_argument("--out-dir", required=True, metavar="DIR")
    p_map.add_argument("--c", type=float, required=True)
    p_map.add_argument("--theta-h", type=float, required=True)
    p_map.add_argument("--theta-a", type=float, required=True)
    p_map.add_argument("--resolution", type=int, default=60)
    p_map.add_argument("--measure", action="append", choices=MEASURES,
                       default=None,
                       help="measure to render (repeatable; default: all five)")
    p_map.set_defaults(handler=cmd_heatmap)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(handler=cmd_serve)

    return parser


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _note(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


def cmd_run(client: ServiceClient, args) -> int:
    result = client.run(
        {
            "params": {
                "n": args.n, "c": args.c, "h": args.h, "a": args.a,
                "theta_h": args.theta_h, "theta_a": args.theta_a,
                "noise_sigma": args.noise_sigma, "dt": args.dt,
                "t_end": args.t_end,
            },
            "seed": args.seed,
            "snapshot_interval": args.snapshot_every,
            "snapshot_path": args.snapshot_out,
        }
    )
    _emit(result["outcome"])
    _note(args, f"run finished in {result['elapsed_seconds']:.2f}s (seed {result['seed']})")
    return 0


def cmd_sweep(client: ServiceClient, args) -> int:
    with open(args.spec) as fh:
        spec = json.load(fh)
    result = client.sweep(
        {
            "spec": spec,
            "out_path": args.out,
            "workers": args.workers,
            "resume": not args.no_resume,
            "quiet": args.quiet,
        }
    )
    _emit(result)
    if result["failed"]:
        print(
            f"{result['failed']} of {result['total']} runs failed; "
            f"rerun the same command to retry them",
            file=sys.stderr,
        )
        return 1
    _note(args, f"{result['completed']} runs completed, "
                f"{result['skipped']} already present -> {args.out}")
    return 0


def cmd_aggregate(client: ServiceClient, args) -> int:
    result = client.aggregate({"records_path": args.records, "out_path": args.out})
    _emit(result)
    for note in result["warnings"]:
        print(f"warning: {note}", file=sys.stderr)
    _note(args, f"{result['rows']} combos -> {args.out}")
    return 0


def cmd_fit(client: ServiceClient, args) -> int:
    config = {}
    if args.epochs is not None:
        config["epochs"] = args.epochs
    if args.batch_size is not None:
        config["batch_size"] = args.batch_size
    if args.learning_rate is not None:
        config["learning_rate"] = args.learning_rate
    if args.hidden is not None:
        config["hidden"] = args.hidden
    payload = {
        "table_path": args.table,
        "network_size": args.n,
        "out_path": args.out,
        "seed": args.seed,
    }
    if config:
        payload["config"] = config
    result = client.fit(payload)
    _emit(result)
    _note(args, f"model for n={args.n} trained on {result['rows']} rows "
                f"(best epoch {result['best_epoch']}) -> {args.out}")
    return 0


def cmd_heatmap(client: ServiceClient, args) -> int:
    payload = {
        "model_path": args.model,
        "out_dir": args.out_dir,
        "c": args.c,
        "theta_h": args.theta_h,
        "theta_a": args.theta_a,
        "resolution": args.resolution,
    }
    if args.measure:
        payload["measures"] = args.measure
    result = client.heatmap(payload)
    _emit(result)
    _note(args, f"{len(result['files'])} files -> {args.out_dir}")
    return 0


def cmd_serve(client: ServiceClient, args) -> int:
    import uvicorn

    uvicorn.run("coevonet.service:app", host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        return args.handler(None, args)
    try:
        with ServiceClient(server=args.server) as client:
            return args.handler(client, args)
    except ServiceError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"error: cannot reach the service: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
