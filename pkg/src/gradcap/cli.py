"""`gradcap` command line: run, trace, explore and check `.gcap` programs."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .ast import Program, validate_program
from .explore import explore_exhaustive
from .parser import ParseError, parse_program
from .runtime import (
    EXIT_OK,
    EXIT_STEP_LIMIT,
    EXIT_USAGE,
    Reason,
    RoundRobin,
    RunOutcome,
    SeededRandom,
    exit_code,
    exit_code_for,
    run,
)

SCHEDULES = ("round-robin", "random", "exhaustive")


class UsageError(Exception):
    pass


def corpus_dir() -> Path:
    return Path(str(resources.files("gradcap") / "corpus"))


def resolve(path: str) -> Path:
    """Find `path` on disk, falling back to the bundled corpus for `corpus/...`."""
    p = Path(path)
    if p.exists():
        return p
    parts = p.parts
    if parts and parts[0] == "corpus":
        bundled = corpus_dir().joinpath(*parts[1:])
        if bundled.exists():
            return bundled
    raise UsageError(f"no such file: {path}")


def load(path: str) -> Program:
    file = resolve(path)
    try:
        program = parse_program(file.read_text(encoding="utf-8"), str(path))
    except ParseError as e:
        raise UsageError(str(e)) from None
    diags = validate_program(program)
    if diags:
        raise UsageError("\n".join(str(d) for d in diags))
    return program


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def human_summary(outcome: RunOutcome) -> str:
    parts = [f"outcome={outcome.reason.value}", f"steps={outcome.steps}"]
    for aid, a in outcome.actors.items():
        status = a.status.value
        if a.fault is not None:
            status += f"({a.fault.kind} at line {a.fault.line})"
        parts.append(f"actor{aid}={status}")
    return " ".join(parts)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gradcap", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="path to a .gcap program (corpus/NAME.gcap uses the bundled corpus)")
    common.add_argument("--schedule", choices=SCHEDULES, default="round-robin")
    common.add_argument("--seed", type=int, default=0, help="seed for --schedule random")
    common.add_argument("--max-steps", type=int, default=100_000)
    common.add_argument("--json", action="store_true", help="print the outcome as JSON")
    common.add_argument("--trace", action="store_true", help="print one JSON line per step")
    common.add_argument("--literal-lifo", action="store_true", help="push messages on the queue head")
    common.add_argument("--fail-fast", action="store_true", help="stop at the first fault")
    common.add_argument("--node-limit", type=int, default=200_000, help="state budget for exhaustive exploration")

    sub.add_parser("run", parents=[common], help="run a program")
    sub.add_parser("trace", parents=[common], help="run a program, printing every step")
    sub.add_parser("explore", parents=[common], help="enumerate every interleaving")
    sub.add_parser("check", parents=[common], help="parse and validate only")
    sub.add_parser("corpus", help="list the bundled conformance corpus")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        if args.command == "corpus":
            for f in sorted(corpus_dir().glob("*.gcap")):
                print(f"corpus/{f.name}")
            return EXIT_OK
        if args.max_steps < 1:
            raise UsageError("--max-steps must be at least 1")
        program = load(args.input)
    except UsageError as e:
        print(f"gradcap: {e}", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "check":
        print(f"{args.input}: ok")
        return EXIT_OK
    if args.command == "explore" or args.schedule == "exhaustive":
        return _explore(program, args)
    return _run(program, args, trace=args.trace or args.command == "trace")


def _run(program: Program, args, trace: bool) -> int:
    policy = SeededRandom(args.seed) if args.schedule == "random" else RoundRobin()
    emit = None
    if trace:
        def emit(_store, event):
            print(_dumps(event.to_json()))

    outcome, _ = run(
        program,
        policy,
        args.max_steps,
        lifo=args.literal_lifo,
        fail_fast=args.fail_fast,
        on_step=emit,
    )
    print(_dumps(outcome.summary()) if args.json else human_summary(outcome))
    return exit_code(outcome)


def _explore(program: Program, args) -> int:
    result = explore_exhaustive(program, args.max_steps, args.node_limit, lifo=args.literal_lifo)
    codes = set()
    rows = []
    for s in sorted(result.summaries):
        code = _summary_code(s)
        codes.add(code)
        rows.append({
            "reason": s.reason,
            "exit_code": code,
            "store_hash": s.store_hash,
            "actors": {
                str(aid): {"status": status, **({"fault": kind, "line": line} if kind else {})}
                for aid, status, kind, line in s.actors
            },
        })
    if not result.complete:
        print(f"gradcap: exploration budget exceeded after {result.nodes} nodes", file=sys.stderr)
        codes.add(EXIT_STEP_LIMIT)
    nonzero = codes - {EXIT_OK}
    code = min(nonzero) if nonzero else EXIT_OK
    if args.json:
        print(_dumps({
            "interleavings": result.interleavings,
            "nodes": result.nodes,
            "complete": result.complete,
            "exit_code": code,
            "outcomes": rows,
        }))
    else:
        print(f"interleavings={result.interleavings} distinct_outcomes={len(rows)} complete={result.complete}")
        for row in rows:
            actors = " ".join(
                f"actor{aid}={a['status']}" + (f"({a['fault']} at line {a['line']})" if "fault" in a else "")
                for aid, a in row["actors"].items()
            )
            print(f"  {row['reason']} {actors} store={row['store_hash']}")
    return code


def _summary_code(s) -> int:
    return exit_code_for([kind for _, _, kind, _ in s.actors if kind], Reason(s.reason))


if __name__ == "__main__":
    sys.exit(main())
