"""Command-line front end: ``modfault analyze FILE``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analyzer import AnalysisError, AnalysisSummary, analyze
from .faults import InvalidSite, enumerate_sites
from .oracle import cross_validate
from .parser import ParseError, parse
from .report import Report, render_html, render_summary
from .terms import Fault, FaultType, SiteId, Verdict

EXIT_CLEAN, EXIT_ERROR, EXIT_ATTACK = 0, 1, 2


def exit_status(summary: AnalysisSummary) -> int:
    if summary.count(Verdict.ERROR):
        return EXIT_ERROR
    return EXIT_ATTACK if summary.count(Verdict.ATTACK) else EXIT_CLEAN


def _types(text: str) -> tuple[FaultType, ...]:
    names = [x.strip() for x in text.split(",") if x.strip()]
    try:
        types = tuple(FaultType(n) for n in names)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"fault types are zeroing and randomizing, got {text!r}") from None
    if not types:
        raise argparse.ArgumentTypeError("at least one fault type is required")
    return types


def _positive(text: str) -> int:
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return k


def _count(text: str) -> int:
    k = int(text)
    if k < 0:
        raise argparse.ArgumentTypeError("must not be negative")
    return k


class _ArgParser(argparse.ArgumentParser):
    # argparse exits with 2, which is reserved for "attacks found"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _ArgParser(prog="modfault", description="Symbolic fault-injection analysis.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgParser)
    a = sub.add_parser("analyze", help="enumerate fault plans and classify them")
    a.add_argument("file", type=Path)
    a.add_argument("--faults", type=_positive, default=1, metavar="K",
                   help="faults per plan (default 1)")
    a.add_argument("--types", type=_types, default=(FaultType.ZEROING, FaultType.RANDOMIZING),
                   help="comma-separated fault types (default zeroing,randomizing)")
    a.add_argument("--transient", action="store_true",
                   help="also fault single reads of values")
    a.add_argument("--protect-conditions", action="store_true",
                   help="verification conditions cannot be faulted")
    a.add_argument("--require", action="append", default=[], metavar="TYPE@SITE",
                   help="pin a fault into every plan, e.g. zeroing@s19: (repeatable)")
    a.add_argument("--oracle-trials", type=_count, default=0, metavar="N",
                   help="numeric trials per plan for cross-validation (default 0, off)")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", type=Path, default=None, metavar="DIR",
                   help="output directory (default: next to the input)")
    return ap


def _required(specs: list[str], program, transient: bool, protect: bool) -> list[Fault]:
    catalog = enumerate_sites(program, transient, protect)
    timing = {s.id: s.timing for s in catalog.sites(True)}
    out = []
    for spec in specs:
        kind, sep, where = spec.partition("@")
        if not sep:
            raise ValueError(f"--require expects TYPE@SITE, got {spec!r}")
        ftype = FaultType(kind)
        sid = SiteId.parse(where)
        if sid not in timing:
            raise InvalidSite(f"{sid} is not a fault site under the chosen options")
        out.append(Fault(sid, ftype, timing[sid]))
    return out


def run_analyze(args) -> int:
    try:
        source = args.file.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"modfault: cannot read {args.file}: {exc.strerror}", file=sys.stderr)
        return EXIT_ERROR
    try:
        program = parse(source)
    except ParseError as exc:
        print(f"{args.file}:{exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        req = _required(args.require, program, args.transient, args.protect_conditions)
        summary = analyze(program, args.faults, args.types, args.transient,
                          args.protect_conditions, req)
    except (AnalysisError, InvalidSite, ValueError) as exc:
        print(f"modfault: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for w in summary.warnings:
        print(f"modfault: warning: {w}", file=sys.stderr)
    validation = None
    if args.oracle_trials:
        validation = cross_validate(summary, args.oracle_trials, args.seed)
    report = Report(args.file.name, summary, validation)
    out_dir = args.out or args.file.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    text = render_summary(report)
    (out_dir / f"{args.file.name}.report.html").write_text(render_html(report), encoding="utf-8")
    (out_dir / f"{args.file.name}.summary.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return exit_status(summary)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, or a flag error already reported
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    if args.command == "analyze":
        return run_analyze(args)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
