"""Command-line driver: check, project, amend, run, verify, implements.

Exit codes: 0 when the command succeeds (or a property holds), 1 when a check
fails (unprojectable input, counterexample, exhausted search), 2 on usage or
parse errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import amendment, cc, projection, sp, syntax, verifier

OK = 0
FAIL = 1
USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chorkit", description="Choreographic programming toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="well-formedness and projectability")
    p_check.add_argument("file")

    p_project = sub.add_parser("project", help="compile to a process network")
    p_project.add_argument("file")
    p_project.add_argument("--process", help="only show this process's behaviour")

    p_amend = sub.add_parser("amend", help="repair an unprojectable choreography")
    p_amend.add_argument("file")
    p_amend.add_argument("-o", "--output", help="write the amended source here")

    p_run = sub.add_parser("run", help="execute a choreography")
    p_run.add_argument("file")
    p_run.add_argument("--state", help="initial state file")
    mode = p_run.add_mutually_exclusive_group(required=True)
    mode.add_argument("--all", action="store_true", help="enumerate all runs")
    mode.add_argument("--seed", type=int, help="one random run with this seed")
    p_run.add_argument("--steps", type=int, default=25)

    p_verify = sub.add_parser("verify", help="bounded correspondence checks")
    p_verify.add_argument(
        "kind",
        choices=["naive", "amend-complete", "amend-sound", "intermediate", "epp"],
    )
    p_verify.add_argument("file")
    p_verify.add_argument("--state", help="initial state file")
    p_verify.add_argument("--depth", type=int, default=verifier.DEFAULT_DEPTH)
    p_verify.add_argument("--bound", type=int, default=verifier.DEFAULT_SEARCH_BOUND)
    p_verify.add_argument("--json", action="store_true", help="machine-readable report")

    p_impl = sub.add_parser("implements", help="check a program against a function table")
    p_impl.add_argument("file")
    p_impl.add_argument("--table", required=True)
    p_impl.add_argument("--inputs", required=True, help="comma-separated input processes")
    p_impl.add_argument("--output", required=True, help="output process")
    p_impl.add_argument("--bound", type=int, default=50)
    p_impl.add_argument("--json", action="store_true", help="machine-readable report")

    return parser


def _load_program(path: str) -> cc.ChorProgram | None:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None
    try:
        unit = syntax.parse_source(text)
    except syntax.ParseError as exc:
        for d in exc.diagnostics:
            print(f"{path}: {d.text()}", file=sys.stderr)
        return None
    return unit.to_program()


def _load_state(path: str | None) -> cc.State | None:
    if path is None:
        return cc.State()
    try:
        return syntax.parse_state_text(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None
    except syntax.ParseError as exc:
        for d in exc.diagnostics:
            print(f"{path}: {d.text()}", file=sys.stderr)
        return None


def _one_line(term: cc.Choreography, limit: int = 72) -> str:
    text = " ".join(syntax.render_chor(term).split())
    return text if len(text) <= limit else text[: limit - 3] + "..."


def _inline_state(s: cc.State) -> str:
    bindings = [f"{p}.{x} = {v}" for (p, x), v in s.items()]
    return ", ".join(bindings) if bindings else "(all zero)"


def _cmd_check(args) -> int:
    prog = _load_program(args.file)
    if prog is None:
        return USAGE
    problems = cc.wf_violations(prog)
    if problems:
        for problem in problems:
            print(f"not well-formed: {problem}", file=sys.stderr)
        return FAIL
    failures = projection.project_failures(prog)
    if failures:
        for f in failures:
            print(
                f"cannot project for {f.process} (in {f.site}): {_one_line(f.term)}",
                file=sys.stderr,
            )
        return FAIL
    print("ok: well-formed and projectable")
    return OK


def _cmd_project(args) -> int:
    prog = _load_program(args.file)
    if prog is None:
        return USAGE
    try:
        compiled = projection.epp(prog)
    except cc.IllFormedError as exc:
        print(f"not well-formed: {exc}", file=sys.stderr)
        return FAIL
    except projection.UnprojectableError as exc:
        for f in exc.failures:
            print(
                f"cannot project for {f.process} (in {f.site}): {_one_line(f.term)}",
                file=sys.stderr,
            )
        return FAIL
    if args.process is not None:
        print(syntax.render_behaviour(compiled.net.get(args.process)))
    else:
        print(syntax.render_sp_program(compiled))
    return OK


def _cmd_amend(args) -> int:
    prog = _load_program(args.file)
    if prog is None:
        return USAGE
    try:
        repaired = amendment.amend_program(prog)
    except cc.IllFormedError as exc:
        print(f"not well-formed: {exc}", file=sys.stderr)
        return FAIL
    text = syntax.render_program(repaired)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return OK


def _cmd_run(args) -> int:
    prog = _load_program(args.file)
    if prog is None:
        return USAGE
    state = _load_state(args.state)
    if state is None:
        return USAGE
    try:
        if args.all:
            entries = cc.traces(prog.procedures, prog.main, state, args.steps)
            memo: dict = {}

            def dead(c0, s0):
                key = (c0, s0)
                if key not in memo:
                    memo[key] = not cc._enabled(prog.procedures, c0, s0)
                return memo[key]

            shown = 0
            for tl, c0, s0 in entries:
                if not dead(c0, s0):
                    continue
                shown += 1
                pretty = ", ".join(cc.label_text(t) for t in tl) or "(empty)"
                print(f"run {shown}: {pretty}")
                print(f"  final state: {_inline_state(s0)}")
            if shown == 0:
                print(f"no run finishes within {args.steps} steps")
        else:
            rng = random.Random(args.seed)
            c0, s0 = prog.main, state
            fired: list[cc.TransitionLabel] = []
            for _ in range(args.steps):
                options = cc._enabled(prog.procedures, c0, s0)
                if not options:
                    break
                t, c0, s0 = options[rng.randrange(len(options))]
                fired.append(t)
                print(cc.label_text(t))
            print(f"final state: {_inline_state(s0)}")
    except cc.IllFormedError as exc:
        print(f"not well-formed: {exc}", file=sys.stderr)
        return FAIL
    return OK


def _cmd_verify(args) -> int:
    prog = _load_program(args.file)
    if prog is None:
        return USAGE
    state = _load_state(args.state)
    if state is None:
        return USAGE
    try:
        if args.kind == "naive":
            report = verifier.check_naive_correspondence(prog, state, args.depth)
        elif args.kind == "amend-complete":
            report = verifier.check_amend_complete(prog, state, args.depth, args.bound)
        elif args.kind == "amend-sound":
            report = verifier.check_amend_sound(prog, state, args.depth, args.bound)
        elif args.kind == "intermediate":
            report = verifier.check_intermediate_formulation(
                prog, state, args.depth, args.bound
            )
        else:
            report = verifier.check_epp_correspondence(prog, state, args.depth)
    except cc.IllFormedError as exc:
        print(f"not well-formed: {exc}", file=sys.stderr)
        return FAIL
    except projection.UnprojectableError as exc:
        for f in exc.failures:
            print(
                f"cannot project for {f.process} (in {f.site}): {_one_line(f.term)}",
                file=sys.stderr,
            )
        return FAIL
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True) if args.json else report.text())
    return OK if report.holds else FAIL


def _cmd_implements(args) -> int:
    prog = _load_program(args.file)
    if prog is None:
        return USAGE
    try:
        table = syntax.parse_table_text(Path(args.table).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error: cannot read {args.table}: {exc}", file=sys.stderr)
        return USAGE
    except syntax.ParseError as exc:
        for d in exc.diagnostics:
            print(f"{args.table}: {d.text()}", file=sys.stderr)
        return USAGE
    inputs = [p for p in args.inputs.split(",") if p]
    try:
        report = verifier.check_implements(prog, table, inputs, args.output, args.bound)
    except (cc.IllFormedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True) if args.json else report.text())
    return OK if report.holds else FAIL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code not in (0, None) else OK
    handlers = {
        "check": _cmd_check,
        "project": _cmd_project,
        "amend": _cmd_amend,
        "run": _cmd_run,
        "verify": _cmd_verify,
        "implements": _cmd_implements,
    }
    return handlers[args.command](args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
