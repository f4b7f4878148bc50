"""Command-line entry point.

Subcommands:

* ``generate`` — write a Zipf-distributed binary trace
* ``attack``   — size and write a slot-saturation attack trace
* ``run``      — drive schemes over traces, write metric/counter reports
* ``bench``    — throughput comparison over an in-memory stream
* ``theory``   — print closed-form attack and wrap-split numbers

Failures exit nonzero and print one JSON object ``{"error": <class>,
"detail": <message>}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import coupon_expect, hyper_mean, hyper_pmf, hyper_var
from .experiment import (
    ALL_APPS,
    SCHEMES,
    ExperimentSpec,
    bench_throughput,
    resolve_widths,
    run_experiment,
)
from .snapshot import SnapshotError
from .traffic import (
    ROUND_ROBIN,
    SEQUENTIAL,
    TraceError,
    ZipfConfig,
    gen_attack,
    gen_zipf,
    plan_attack,
    read_trace,
    write_trace,
)


def _fail(code: str, detail: str) -> int:
    print(json.dumps({"error": code, "detail": detail}), file=sys.stderr)
    return 1


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = ZipfConfig(
        skew=args.zipf, flows=args.flows, packets=args.packets, seed=args.seed
    )
    trace = gen_zipf(cfg)
    write_trace(args.out, trace)
    print(f"wrote {len(trace)} packets over {cfg.flows} flows to {args.out}")
    return 0


def cmd_attack(args: argparse.Namespace) -> int:
    plan = plan_attack(
        args.width,
        args.fraction,
        packets_per_flow=args.packets_per_flow,
        interleave=args.interleave,
    )
    trace = gen_attack(plan, args.seed)
    write_trace(args.out, trace)
    print(
        f"targets {plan.targets}/{plan.width} slots: "
        f"{plan.flows} flows x {plan.packets_per_flow} packets "
        f"(expected flows {plan.expected_flows:.1f}) -> {args.out}"
    )
    return 0


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    file_values = {}
    if getattr(args, "config", None):
        file_values = json.loads(Path(args.config).read_text())
    merged = dict(file_values)
    overrides = {
        "schemes": tuple(args.schemes.split(",")) if args.schemes else None,
        "rows": args.rows,
        "width": args.width,
        "memory_bytes": args.memory_bytes,
        "counter_bits": args.counter_bits,
        "shared_bits": args.shared_bits,
        "merge_mode": args.merge_mode,
        "benign": args.benign,
        "attack": args.attack,
        "attack_fraction": args.attack_fraction,
        "interleave": args.interleave,
        "snapshot_interval": args.snapshot_interval,
        "apps": tuple(args.apps.split(",")) if args.apps else None,
        "threshold": args.threshold,
        "threshold_fraction": args.threshold_fraction,
        "seed": args.seed,
        "experiment_id": args.experiment_id,
    }
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if "schemes" in merged:
        merged["schemes"] = tuple(merged["schemes"])
    if "apps" in merged:
        merged["apps"] = tuple(merged["apps"])
    if merged.get("width") and file_values.get("memory_bytes") and args.width:
        merged["memory_bytes"] = None
    return ExperimentSpec(**merged)


def cmd_run(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    result = run_experiment(spec)
    paths = result.save(args.out)
    print(f"{len(result.metric_rows)} metric rows -> {paths['metrics_csv']}")
    print(f"{len(result.counter_rows)} counter rows -> {paths['counters_csv']}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    if args.trace:
        trace = read_trace(args.trace)
    else:
        trace = gen_zipf(
            ZipfConfig(skew=1.0, flows=args.flows, packets=args.packets, seed=spec.seed)
        )
    results = bench_throughput(spec, trace, runs=args.runs)
    print(f"{'scheme':<12} {'runs':>5} {'packets':>9} {'mean Mpps':>10} {'std':>8}")
    for r in results:
        print(
            f"{r.scheme:<12} {r.runs:>5} {r.packets:>9} "
            f"{r.mean_mpps:>10.4f} {r.std_mpps:>8.4f}"
        )
    if args.out:
        rows = [r.__dict__ for r in results]
        Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_theory(args: argparse.Namespace) -> int:
    if args.theory_cmd == "coupon":
        width = args.width
        if args.m is not None:
            targets = args.m
        else:
            targets = round(width * args.fraction)
        expected = coupon_expect(width, targets)
        print(f"width={width} targets={targets} expected_flows={expected:.6g}")
        return 0
    pmf = {
        i: hyper_pmf(args.s1, args.s2, args.n, i)
        for i in range(max(0, args.n - args.s2), min(args.n, args.s1) + 1)
    }
    print(f"wrap-split pmf for sides ({args.s1}, {args.s2}), draws {args.n}:")
    for i, p in pmf.items():
        print(f"  P(X1={i}) = {p:.12g}")
    print(f"mean = {hyper_mean(args.s1, args.s2, args.n):.12g}")
    print(f"var  = {hyper_var(args.s1, args.s2, args.n):.12g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siamsketch")
    sub = parser.add_subparsers(dest="cmd", required=True)

    gen = sub.add_parser("generate", help="write a Zipf trace")
    gen.add_argument("--zipf", type=float, required=True, help="skew, 0 = uniform")
    gen.add_argument("--flows", type=int, required=True)
    gen.add_argument("--packets", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    atk = sub.add_parser("attack", help="write a slot-saturation trace")
    atk.add_argument("--width", type=int, required=True)
    atk.add_argument("--fraction", type=float, required=True)
    atk.add_argument("--packets-per-flow", type=int, default=256)
    atk.add_argument("--interleave", choices=(SEQUENTIAL, ROUND_ROBIN), default=SEQUENTIAL)
    atk.add_argument("--seed", type=int, default=0)
    atk.add_argument("--out", required=True)
    atk.set_defaults(func=cmd_attack)

    def add_spec_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON file of spec fields; flags override")
        p.add_argument("--schemes", help=f"comma list of {','.join(SCHEMES)}")
        p.add_argument("--rows", type=int)
        p.add_argument("--width", type=int)
        p.add_argument("--memory-bytes", dest="memory_bytes", type=int)
        p.add_argument("--counter-bits", dest="counter_bits", type=int)
        p.add_argument("--shared-bits", dest="shared_bits", type=int)
        p.add_argument("--merge-mode", dest="merge_mode", choices=("sum", "max"))
        p.add_argument("--benign", help="benign trace path")
        p.add_argument("--attack", help="attack trace path")
        p.add_argument("--attack-fraction", dest="attack_fraction", type=float)
        p.add_argument("--interleave", choices=("shuffle", "append"))
        p.add_argument("--snapshot-interval", dest="snapshot_interval", type=int)
        p.add_argument("--apps", help=f"comma list of {','.join(ALL_APPS)}")
        p.add_argument("--threshold", type=int)
        p.add_argument(
            "--threshold-fraction", dest="threshold_fraction", type=float
        )
        p.add_argument("--seed", type=int)
        p.add_argument("--experiment-id", dest="experiment_id")

    run = sub.add_parser("run", help="run an experiment, write reports")
    add_spec_args(run)
    run.add_argument("--out", required=True, help="report directory")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="throughput comparison")
    add_spec_args(bench)
    bench.add_argument("--trace", help="trace path; default synthetic")
    bench.add_argument("--flows", type=int, default=20000)
    bench.add_argument("--packets", type=int, default=100_000)
    bench.add_argument("--runs", type=int, default=50)
    bench.add_argument("--out", help="JSON output path")
    bench.set_defaults(func=cmd_bench)

    theory = sub.add_parser("theory", help="closed-form numbers")
    tsub = theory.add_subparsers(dest="theory_cmd", required=True)
    coupon = tsub.add_parser("coupon")
    coupon.add_argument("--width", "--w", dest="width", type=int, required=True)
    group = coupon.add_mutually_exclusive_group(required=True)
    group.add_argument("--fraction", type=float)
    group.add_argument("--m", type=int)
    hyper = tsub.add_parser("hyper")
    hyper.add_argument("--s1", type=int, required=True)
    hyper.add_argument("--s2", type=int, required=True)
    hyper.add_argument("--n", type=int, required=True)
    theory.set_defaults(func=cmd_theory)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TraceError, SnapshotError) as exc:
        return _fail(exc.code, str(exc))
    except (ValueError, TypeError) as exc:
        return _fail("bad-arguments", str(exc))
    except OSError as exc:
        return _fail("io-error", str(exc))


if __name__ == "__main__":
    sys.exit(main())
