"""Command line: `vpamr run | convergence | reduce-bench`."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import PRESETS, load_config, preset


def _run(args) -> int:
    cfg = load_config(args.config) if args.config else preset(args.preset)
    overrides = {}
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if args.reduction is not None:
        overrides["reduction"] = args.reduction
    if args.no_limiting:
        overrides["limiting"] = False
    if args.snapshot_interval is not None:
        overrides["snapshot_interval"] = args.snapshot_interval
    cfg = cfg.updated(**overrides)

    from .run import run_simulation

    result = run_simulation(cfg)
    print(json.dumps(result.summary(), indent=2))
    return result.status


def _convergence(args) -> int:
    from . import harness

    rows = [r.as_dict() for r in harness.convergence_suite().values()]
    for r in rows:
        print(f"{r['name']:28s} order {r['order']:.3f}  pairwise " + " ".join(f"{o:.2f}" for o in r["pairwise"]))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


def _reduce_bench(args) -> int:
    from . import harness

    eq = harness.reduction_equivalence(args.trials, args.seed)
    print(f"equivalence: {eq.trials} hierarchies, max rel {eq.max_rel:.3e}, "
          f"max abs (small values) {eq.max_abs_small:.3e}, {eq.seconds:.2f} s")
    work = harness.reduction_work(tuple(args.sizes))
    print(f"{'N':>6} {'mask cells':>12} {'subpatch cells':>15} {'mask s':>10} {'subpatch s':>11}")
    for k, N in enumerate(work["N"]):
        print(f"{N:6d} {work['mask'][k]:12d} {work['subpatch'][k]:15d} "
              f"{work['mask_seconds'][k]:10.4f} {work['subpatch_seconds'][k]:11.4f}")
    print(f"exponents: mask {work['mask_exponent']:.3f}, subpatch {work['subpatch_exponent']:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vpamr", description="AMR Vlasov-Poisson 1D+1V solver")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the bump-on-tail problem")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--config", help="INI configuration file")
    src.add_argument("--preset", default="amr1", choices=sorted(PRESETS), help="built-in configuration")
    r.add_argument("--t-end", type=float, dest="t_end")
    r.add_argument("--output-dir", dest="output_dir")
    r.add_argument("--reduction", choices=("mask", "subpatch"))
    r.add_argument("--no-limiting", action="store_true", dest="no_limiting")
    r.add_argument("--snapshot-interval", type=float, dest="snapshot_interval")
    r.set_defaults(func=_run)

    c = sub.add_parser("convergence", help="convergence-order studies")
    c.add_argument("--json", help="also write the results to this file")
    c.set_defaults(func=_convergence)

    b = sub.add_parser("reduce-bench", help="reduction equivalence and work scaling")
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--seed", type=int, default=2024)
    b.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    b.set_defaults(func=_reduce_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return int(args.func(args))
    except (ValueError, OSError) as exc:
        print(f"vpamr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
