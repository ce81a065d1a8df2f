"""Command-line entry point: ``sim run | compare | sweep``.

Command-line flags override the matching scenario-file keys.
"""

from __future__ import annotations

import argparse
import logging
import sys

from manetsim.metrics import emit_csv
from manetsim.runner import compare, run, sweep
from manetsim.scenario import load_scenario, normalize_protocol

log = logging.getLogger("manetsim")


def parse_seeds(text: str) -> list[int]:
    """``"3"`` -> [3]; ``"1..5"`` -> [1, 2, 3, 4, 5]; ``"1,4,9"`` -> [1, 4, 9]."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def parse_nodes(text: str) -> list[int]:
    return parse_seeds(text)


def _load(args):
    cfg = load_scenario(args.scenario)
    if getattr(args, "sim_time", None) is not None:
        cfg = cfg.replace(sim_time=args.sim_time)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("--scenario", required=True)
    r.add_argument("--protocol", type=normalize_protocol)
    r.add_argument("--seed", type=int)
    r.add_argument("--sim-time", type=float)
    r.add_argument("--trace")
    r.add_argument("--out", required=True)

    c = sub.add_parser("compare", help="AODV vs PC-AODV on identical topology and traffic")
    c.add_argument("--scenario", required=True)
    c.add_argument("--seeds", type=parse_seeds, required=True)
    c.add_argument("--sim-time", type=float)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--out", required=True)

    s = sub.add_parser("sweep", help="compare across node counts")
    s.add_argument("--scenario", required=True)
    s.add_argument("--nodes", type=parse_nodes, required=True)
    s.add_argument("--seeds", type=parse_seeds, required=True)
    s.add_argument("--sim-time", type=float)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _load(args)
        if args.command == "run":
            report = run(cfg, args.protocol, args.seed, trace_path=args.trace)
            emit_csv([report], args.out)
            log.info("%s: overhead=%.4f pdr_data=%.4f", report.run_id, report.overhead,
                     report.pdr_data)
        elif args.command == "compare":
            result = compare(cfg, args.seeds, workers=args.jobs)
            emit_csv(result.reports, args.out, extra_rows=[result.delta_row()])
        else:
            reports = sweep(cfg, args.nodes, args.seeds, workers=args.jobs)
            emit_csv(reports, args.out)
    except Exception as exc:  # noqa: BLE001 - any failed run sets the exit code
        print(f"sim: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
