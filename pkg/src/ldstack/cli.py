"""Command-line front end.

Exit status: 0 on success, 1 when an audit or verification fails, 2 on
usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import auditor, instances, numeric, oracle, rotor
from .numeric import Mode
from .schedule import ScheduleError, StationarySource, load_schedule
from .stacker import DEFAULT_HORIZON_CAP, Tiebreak, generate


class UsageError(Exception):
    pass


def _horizon(text: str):
    if text == "unbounded":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a positive integer or 'unbounded'")
    if value < 1:
        raise argparse.ArgumentTypeError("horizon cap must be positive")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ldstack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def schedule_args(sp, steps=True):
        sp.add_argument("--schedule", required=True, type=Path)
        sp.add_argument("--mode", choices=[m.value for m in Mode])
        if steps:
            sp.add_argument("--steps", required=True, type=_nonneg)

    def tiebreak_arg(sp):
        sp.add_argument("--tiebreak", choices=[t.value for t in Tiebreak], default=Tiebreak.FIRST_SEEN.value)

    g = sub.add_parser("generate", help="emit a low-discrepancy sequence")
    schedule_args(g)
    tiebreak_arg(g)
    g.add_argument("--horizon-cap", type=_horizon, default=DEFAULT_HORIZON_CAP)
    g.add_argument("--lookahead", type=_positive)
    g.add_argument("--json", action="store_true", help="print a JSON array instead of one label per line")
    g.add_argument("--trace", type=Path, help="write the per-step trace CSV here")
    g.add_argument("--out", type=Path, help="write the sequence here instead of stdout")

    a = sub.add_parser("audit", help="re-verify a sequence against its schedule")
    schedule_args(a, steps=False)
    a.add_argument("--sequence", required=True, type=Path)
    a.add_argument("--trace", type=Path)

    o = sub.add_parser("oracle", help="exact minimax optimum of a small instance")
    schedule_args(o)
    tiebreak_arg(o)
    o.add_argument("--threads", type=_positive, default=1)

    r = sub.add_parser("rotor", help="extract and verify the periodic sequence")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--schedule", type=Path)
    src.add_argument("--check", type=Path, help="verify an existing rotor JSON file")
    tiebreak_arg(r)

    d = sub.add_parser("demo", help="reproduce the worked examples")
    dsub = d.add_subparsers(dest="demo", required=True)
    t = dsub.add_parser("tightness")
    t.add_argument("--n", type=int, required=True)
    dsub.add_parser("lookahead")
    rnd = dsub.add_parser("random", help="print a random schedule document")
    rnd.add_argument("--seed", type=int, required=True)
    rnd.add_argument("--kind", choices=["stationary", "table"], default="stationary")
    return p


def _read_sequence(path: Path) -> list[str]:
    text = path.read_text()
    if text.lstrip().startswith("["):
        seq = json.loads(text)
        if not all(isinstance(s, str) for s in seq):
            raise UsageError("sequence JSON must be an array of strings")
        return seq
    return [line.strip() for line in text.splitlines() if line.strip()]


def _emit(text: str, path: Path | None = None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_generate(args) -> int:
    sched = load_schedule(args.schedule, args.mode)
    run = generate(sched, args.steps, args.tiebreak, args.horizon_cap, args.lookahead)
    if args.json:
        text = json.dumps(run.sequence) + "\n"
    else:
        text = "".join(s + "\n" for s in run.sequence)
    _emit(text, args.out)
    if args.trace:
        run.trace.write_csv(args.trace)
    return 0


def cmd_audit(args) -> int:
    sched = load_schedule(args.schedule, args.mode)
    seq = _read_sequence(args.sequence)
    trace = None
    if args.trace:
        trace = auditor.Trace.from_csv(args.trace.read_text(), sched.mode)
    report = auditor.audit_bound(trace, seq, sched)
    print(auditor.report_json(report.to_dict()))
    if report.exact and not report.ok:
        return 1
    return 0


def cmd_oracle(args) -> int:
    sched = load_schedule(args.schedule, args.mode)
    result = oracle.minimax_search(sched, args.steps, threads=args.threads, tiebreak=args.tiebreak)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def cmd_rotor(args) -> int:
    if args.check:
        r = rotor.Rotor.from_json(args.check.read_text())
    else:
        sched = load_schedule(args.schedule)
        if not isinstance(sched.source, StationarySource) or sched.mode is not Mode.EXACT:
            raise UsageError("rotor extraction needs an exact stationary schedule")
        r = rotor.extract_rotor(sched.source.dist, args.tiebreak)
        print(r.to_json())
    report = rotor.verify_rotor(r)
    print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.passed else 1


def cmd_demo(args) -> int:
    if args.demo == "tightness":
        res = oracle.tightness_probe(args.n)
        print(f"n = {res.n}")
        print(f"1 - 1/n = {numeric.fmt(res.value)}")
        print(f"horizon-{res.n - 1} optimum = {numeric.fmt(res.oracle.opt_value)}")
        print(f"witness = {' '.join(res.oracle.witness)}")
        print(f"nodes explored = {res.oracle.nodes_explored}")
        print(f"certified = {res.certified}")
        return 0 if res.certified else 1
    if args.demo == "lookahead":
        res = oracle.lookahead_probe()
        pairs = sorted({tuple(sorted(p)) for p in res.pairs.values()})
        print(f"3-prefixes consistent with lookahead 1: {len(res.prefixes)}")
        sizes = sorted({len(p) for p in res.pairs.values()})
        print(f"symbols at D_3 = -3/5 per prefix: {', '.join(map(str, sizes))}")
        print(f"adversarial pairs: {len(pairs)}")
        print(f"min over s_4 of max |D_4|, worst prefix: {numeric.fmt(res.min_forced)}")
        print(f"canonical online sequence: {' '.join(res.canonical_sequence)}")
        print(f"worst D_4 = {numeric.fmt(res.worst_d4)}")
        print(f"full-knowledge optimum max |D| = {numeric.fmt(res.full_knowledge.opt_value)}"
              f" via {' '.join(res.full_knowledge.witness)}")
        print(f"full-knowledge greedy max |D| = {numeric.fmt(res.full_greedy_max)}"
              f" via {' '.join(res.full_greedy_sequence)}")
        ok = res.worst_d4 == Fraction(-11, 10) and res.full_knowledge.opt_value < 1
        return 0 if ok else 1
    sys.stdout.write(instances.random_document(args.seed, args.kind))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "audit": cmd_audit,
    "oracle": cmd_oracle,
    "rotor": cmd_rotor,
    "demo": cmd_demo,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log = logging.getLogger("ldstack")
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ScheduleError, auditor.AuditError, oracle.OracleLimitError,
            rotor.RotorError, OSError, ValueError) as exc:
        print(f"ldstack: error: {exc}", file=sys.stderr)
        return 2
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
