"""Command-line entry point.

Each command writes one JSON document to stdout and a short human-readable
table to stderr. The exit code is nonzero on any diagnostic or failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import time
from pathlib import Path

from . import errors
from .blockwise import abstraction_stats, blockwise_split
from .delay import CONSISTENT, PAPER_LITERAL, NetParams
from .edgesim.scenario import CHANNEL_SIGMA_DB, Scenario, load_scenario, rate_trace
from .edgesim.simulate import STRATEGIES, simulate, summarize, write_reports_csv, write_summary
from .fixtures import FIXTURES, get_fixture
from .graph import build_split_dag, restructure, to_dot
from .oracle import oracle_optimal
from .profile import load_profile, profile_to_dict, validate_profile
from .randomgen import random_dag_profile, random_net
from .splitter import optimal_split

log = logging.getLogger("dagsplit")

OUT_ENV = "DAGSPLIT_OUT"

# which module owns each error type, for error messages
ERROR_OWNER = {
    errors.ProfileError: "model-profile",
    errors.PartitionError: "delay-model",
    errors.CapacityOverflowError: "split-dag",
    errors.GraphError: "split-dag",
    errors.FlowError: "maxflow",
    errors.SplitError: "splitter",
    errors.BlockError: "blockwise",
}


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _table(rows: list[tuple[str, object]]) -> None:
    width = max((len(k) for k, _ in rows), default=0)
    for k, v in rows:
        print(f"{k:<{width}}  {v}", file=sys.stderr)


def _profile_arg(args):
    if args.profile and args.fixture:
        raise SystemExit("give either --profile or --fixture, not both")
    if args.fixture:
        return get_fixture(args.fixture)
    if args.profile:
        return load_profile(args.profile)
    raise SystemExit("one of --profile or --fixture is required")


def _diagnostics_or_none(p) -> list | None:
    diags = validate_profile(p)
    if not diags:
        return None
    for d in diags:
        print(f"diagnostic: {d}", file=sys.stderr)
    return [{"subject": d.subject, "rule": d.rule, "message": d.message} for d in diags]


def cmd_split(args) -> int:
    p = _profile_arg(args)
    # the split is still computed (the min cut stays exact when a layer runs faster on the device),
    # but any diagnostic makes the exit code nonzero
    diags = _diagnostics_or_none(p) or []
    n = NetParams(args.rate_up, args.rate_down, local_iters=args.iters,
                  weight_mode=args.mode, input_cost=not args.no_input_cost)
    t0 = time.perf_counter()
    if args.blockwise or args.strict_alg3:
        d = blockwise_split(p, n, strict_alg3=args.strict_alg3)
    else:
        d = optimal_split(p, n)
    elapsed = time.perf_counter() - t0
    doc = {"model": p.model_name, **d.to_dict(), "weight_mode": args.mode, "elapsed_s": elapsed,
           "diagnostics": diags}
    if args.blockwise or args.strict_alg3:
        doc["abstraction"] = abstraction_stats(p, n)
    if args.dot:
        Path(args.dot).write_text(to_dot(restructure(build_split_dag(p, n))))
    _emit(doc)
    _table([
        ("model", p.model_name),
        ("method", d.method),
        ("device layers", len(d.partition.device_set)),
        ("server layers", len(d.partition.server_set)),
        ("cut value (us)", d.cut_value_us),
        ("delay (us)", d.delay_us),
    ])
    return 1 if diags else 0


def cmd_validate(args) -> int:
    p = _profile_arg(args)
    diags = _diagnostics_or_none(p) or []
    _emit({"model": p.model_name, "layers": len(p.layers), "blocks": len(p.blocks), "diagnostics": diags})
    _table([("model", p.model_name), ("diagnostics", len(diags))])
    return 1 if diags else 0


def cmd_oracle_check(args) -> int:
    matched = 0
    failures = []
    for seed in range(args.seed_base, args.seed_base + args.seeds):
        rng = random.Random(seed)
        p = random_dag_profile(rng, rng.randint(2, args.max_layers))
        n = random_net(rng, weight_mode=CONSISTENT)
        got = optimal_split(p, n)
        want = oracle_optimal(p, n)
        if got.delay_us == want.delay_us:
            matched += 1
        else:
            failures.append({"seed": seed, "delay_us": got.delay_us, "oracle_delay_us": want.delay_us})
    result = f"{matched}/{args.seeds} match"
    _emit({"seeds": args.seeds, "max_layers": args.max_layers, "matched": matched,
           "failed": len(failures), "failures": failures[:20], "result": result})
    print(result, file=sys.stderr)
    return 0 if matched == args.seeds else 1


def cmd_simulate(args) -> int:
    p = _profile_arg(args)
    diags = _diagnostics_or_none(p)
    if diags:
        _emit({"model": p.model_name, "diagnostics": diags})
        return 1
    if args.scenario:
        sc = load_scenario(args.scenario)
    else:
        sc = Scenario.default(args.band, args.channel, seed=args.seed)
    if args.epochs is not None:
        sc.epochs = args.epochs
    out = Path(args.out or os.environ.get(OUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    strategies = STRATEGIES if args.strategy == "all" else (args.strategy,)
    trace = rate_trace(sc)
    reports = {s: simulate(sc, s, p, trace) for s in strategies}
    write_reports_csv(out / "reports.csv", [r for s in strategies for r in reports[s]])
    summary = summarize(sc, reports)
    summary["model"] = p.model_name
    write_summary(out / "summary.json", summary)
    _emit({**summary, "reports_csv": str(out / "reports.csv"), "summary_json": str(out / "summary.json")})
    _table([(f"total {s} (s)", f"{summary['total_delay_us'][s] / 1e6:.3f}") for s in strategies])
    return 0


def cmd_gen_fixture(args) -> int:
    if args.list:
        _emit({"fixtures": sorted(FIXTURES)})
        return 0
    if not args.name:
        raise SystemExit("fixture name required (or --list)")
    p = get_fixture(args.name)
    doc = profile_to_dict(p)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    else:
        _emit(doc)
    _table([("model", p.model_name), ("layers", len(p.layers)), ("blocks", len(p.blocks))])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dagsplit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def profile_opts(sp):
        sp.add_argument("--profile", help="model profile JSON file")
        sp.add_argument("--fixture", choices=sorted(FIXTURES), help="built-in profile instead of a file")

    sp = sub.add_parser("split", help="compute the delay-optimal partition")
    profile_opts(sp)
    sp.add_argument("--rate-up", type=float, required=True, help="uplink rate R_D, bytes/s")
    sp.add_argument("--rate-down", type=float, required=True, help="downlink rate R_S, bytes/s")
    sp.add_argument("--iters", type=int, default=1, help="local iterations per epoch")
    sp.add_argument("--blockwise", action="store_true", help="abstract passing blocks first")
    sp.add_argument("--strict-alg3", action="store_true",
                    help="blockwise, but abstract nothing unless every block passes")
    sp.add_argument("--dot", help="write the restructured split DAG in Graphviz format")
    sp.add_argument("--mode", choices=(CONSISTENT, PAPER_LITERAL), default=CONSISTENT)
    sp.add_argument("--no-input-cost", action="store_true", help="do not charge transfer of the raw input")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("validate", help="print profile diagnostics")
    profile_opts(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("oracle-check", help="compare min-cut splits to exhaustive search")
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--max-layers", type=int, default=12)
    sp.add_argument("--seed-base", type=int, default=0)
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("simulate", help="run the edge-network simulator")
    profile_opts(sp)
    sp.add_argument("--scenario", help="scenario JSON file (defaults otherwise)")
    sp.add_argument("--strategy", choices=STRATEGIES + ("all",), default="all")
    sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    sp.add_argument("--band", choices=("sub6", "mmwave"), default="mmwave")
    sp.add_argument("--channel", choices=sorted(CHANNEL_SIGMA_DB), default="normal")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epochs", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gen-fixture", help="emit a built-in model profile")
    sp.add_argument("name", nargs="?", choices=sorted(FIXTURES))
    sp.add_argument("--out", help="write to file instead of stdout")
    sp.add_argument("--list", action="store_true")
    sp.set_defaults(func=cmd_gen_fixture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except errors.DagSplitError as exc:
        owner = next((m for cls, m in ERROR_OWNER.items() if isinstance(exc, cls)), "dagsplit")
        print(f"error [{owner}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
