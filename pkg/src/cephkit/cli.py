"""Operator command line: analyze, batch, prompt, export-pairs, convert, validate, serve.

Exit codes are a scripting contract: 0 success, 1 validation/quarantine
failures, 2 usage errors, 3 I/O errors. Machine output goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import analyze_case
from .dialogue import DialogueGateway, serialize_training_pairs
from .ingest import (
    IngestError,
    batch_process,
    load_norms,
    load_thresholds,
    parse_any,
    parse_landmarks_csv,
    parse_landmarks_json,
    parse_landmarks_ordered_txt,
    validate_case,
    write_landmarks_csv,
    write_landmarks_json,
    write_landmarks_ordered_txt,
)
from .report import FORMAT_MARKDOWN, FORMAT_TEXT, LANGUAGES, render_report
from .steiner import MissingCalibration

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _read_file(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def _load_norms_arg(path: str | None):
    if path is None:
        return None
    try:
        return load_norms(_read_file(path))
    except IngestError as exc:
        print(f"error: bad norm file {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_FAILURES)


def _load_thresholds_arg(path: str | None):
    if path is None:
        return None
    try:
        return load_thresholds(_read_file(path))
    except IngestError as exc:
        print(f"error: bad threshold file {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_FAILURES)


def _parse_and_validate(path: str):
    data = _read_file(path)
    try:
        case = parse_any(Path(path))
        problems = validate_case(case)
    except (IngestError, MissingCalibration) as exc:
        code = exc.code if isinstance(exc, IngestError) else "PARSE_ERROR"
        print(f"error: {code}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_FAILURES)
    if problems:
        for code, detail in problems:
            print(f"error: {code}: {detail}", file=sys.stderr)
        raise SystemExit(EXIT_FAILURES)
    return case


def cmd_analyze(args) -> int:
    case = _parse_and_validate(args.file)
    analysis = analyze_case(
        case, norms=_load_norms_arg(args.norms), thresholds=_load_thresholds_arg(args.thresholds)
    )
    report_fmt = FORMAT_MARKDOWN if args.format == "markdown" else FORMAT_TEXT
    report = render_report(
        list(analysis.findings), args.lang, report_fmt, results=list(analysis.results)
    )

    if args.format == "json":
        from .ingest import _analysis_record

        record = _analysis_record(analysis)
        record["report"] = report
        sys.stdout.write(json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
        return EXIT_OK

    out = []
    out.append(f"case: {analysis.case.case_id}")
    out.append("measurements:")
    grades = {d.id: d for d in analysis.deviations}
    for r in analysis.results:
        line = f"  {r.id:13s} {r.value:12.4f} {r.unit}"
        if r.id in grades:
            d = grades[r.id]
            line += f"   z={d.z:+.3f} {d.grade}"
        out.append(line)
    if analysis.skipped:
        out.append("skipped:")
        for sk in analysis.skipped:
            out.append(f"  {sk.id}: {sk.code} ({sk.detail})")
    c = analysis.classification
    out.append(
        f"classification: sagittal={c.sagittal or 'unavailable'} "
        f"vertical={c.vertical or 'unavailable'}"
    )
    out.append("")
    out.append(report)
    sys.stdout.write("\n".join(out))
    return EXIT_OK


def cmd_batch(args) -> int:
    input_dir = Path(args.dir)
    if not input_dir.is_dir():
        print(f"error: not a directory: {args.dir}", file=sys.stderr)
        return EXIT_IO
    summary = batch_process(
        input_dir,
        args.out,
        quarantine_dir=args.quarantine,
        norms=_load_norms_arg(args.norms),
        thresholds=_load_thresholds_arg(args.thresholds),
    )
    sys.stdout.write(
        f"inputs: {summary.inputs}\nanalyzed: {summary.analyzed}\n"
        f"quarantined: {len(summary.quarantined)}\n"
    )
    for record in summary.quarantined:
        print(f"quarantine: {record.path}: {record.reason}: {record.detail}", file=sys.stderr)
    return EXIT_FAILURES if summary.quarantined else EXIT_OK


def cmd_prompt(args) -> int:
    case = _parse_and_validate(args.file)
    analysis = analyze_case(case)
    from .report import build_prompt

    try:
        sample = build_prompt(list(analysis.results), args.lang, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURES
    sys.stdout.write(sample.text + "\n")
    return EXIT_OK


def cmd_export_pairs(args) -> int:
    input_dir = Path(args.dir)
    if not input_dir.is_dir():
        print(f"error: not a directory: {args.dir}", file=sys.stderr)
        return EXIT_IO
    analyses = []
    failures = 0
    for path in sorted(p for p in input_dir.iterdir() if p.suffix.lower() in (".json", ".txt", ".csv")):
        try:
            case = parse_any(path)
            if validate_case(case):
                raise IngestError("INVALID", "failed validation")
            analyses.append(analyze_case(case))
        except (IngestError, MissingCalibration) as exc:
            failures += 1
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
    gateway = DialogueGateway(lambda _id: None)
    pairs = gateway.export_training_pairs(analyses, seed=args.seed, language=args.lang)
    blob = serialize_training_pairs(pairs)
    try:
        Path(args.out).write_bytes(blob)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(f"pairs: {len(pairs)}\n")
    return EXIT_FAILURES if failures else EXIT_OK


_PARSERS = {
    "json": parse_landmarks_json,
    "isbi19": parse_landmarks_ordered_txt,
    "csv": parse_landmarks_csv,
}
_WRITERS = {
    "json": write_landmarks_json,
    "csv": write_landmarks_csv,
    "isbi19": write_landmarks_ordered_txt,
}


def cmd_convert(args) -> int:
    data = _read_file(args.infile)
    try:
        case = _PARSERS[args.from_format](data, path=Path(args.infile))
        blob = _WRITERS[args.to_format](case)
    except (IngestError, MissingCalibration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURES
    try:
        Path(args.outfile).write_bytes(blob)
    except OSError as exc:
        print(f"error: cannot write {args.outfile}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_validate(args) -> int:
    data = _read_file(args.file)
    try:
        case = parse_any(Path(args.file))
    except (IngestError, MissingCalibration) as exc:
        code = exc.code if isinstance(exc, IngestError) else "PARSE_ERROR"
        sys.stdout.write(f"{code}\t{exc}\n")
        return EXIT_FAILURES
    problems = validate_case(case)
    if problems:
        for code, detail in problems:
            sys.stdout.write(f"{code}\t{detail}\n")
        return EXIT_FAILURES
    sys.stdout.write(f"OK\t{case.case_id}\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import DEFAULT_BIND_ADDR, ServiceSettings, create_app, parse_bind_addr

    addr = args.addr or os.environ.get("CEPH_BIND_ADDR", DEFAULT_BIND_ADDR)
    try:
        host, port = parse_bind_addr(addr)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    app = create_app(ServiceSettings.from_env())
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cephkit",
        description="Deterministic cephalometric measurement and diagnostic workbench.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze one landmark file and print the report")
    p.add_argument("file")
    p.add_argument("--lang", choices=LANGUAGES, default="en")
    p.add_argument("--format", choices=("text", "markdown", "json"), default="text")
    p.add_argument("--norms", metavar="PATH")
    p.add_argument("--thresholds", metavar="PATH")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("batch", help="process a directory of landmark files")
    p.add_argument("dir")
    p.add_argument("--out", required=True)
    p.add_argument("--quarantine", metavar="DIR")
    p.add_argument("--norms", metavar="PATH")
    p.add_argument("--thresholds", metavar="PATH")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("prompt", help="emit the instruction prompt for one case")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lang", choices=LANGUAGES, default="en")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("export-pairs", help="export (prompt, report) training pairs")
    p.add_argument("dir")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lang", choices=LANGUAGES, default="en")
    p.set_defaults(func=cmd_export_pairs)

    p = sub.add_parser("convert", help="convert between landmark file formats")
    p.add_argument("infile")
    p.add_argument("outfile")
    p.add_argument("--from", dest="from_format", choices=("json", "isbi19", "csv"), required=True)
    p.add_argument("--to", dest="to_format", choices=("json", "csv", "isbi19"), required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", help="lint one landmark file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP service until interrupted")
    p.add_argument("--addr", metavar="HOST:PORT")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
