"""Command-line front-end: ``qbank convert | validate | inspect | bundle``."""

from __future__ import annotations

import argparse
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from .aiken import parse_aiken
from .convert import ConversionError, ConversionPolicy, convert
from .gift import parse_gift
from .mediapack import DEFAULT_MEDIA_FOLDER, MediaError, bundle_gift_media, collect_media_refs, unbundle_gift_media
from .model import BODY_KINDS, CapabilityError, Format, MultipleChoice, QuestionBank, Severity, decode_source
from .moodlexml import parse_moodlexml

EXIT_OK = 0
EXIT_PROBLEMS = 1
EXIT_FAILURE = 2

PARSERS = {Format.AIKEN: parse_aiken, Format.GIFT: parse_gift, Format.MOODLEXML: parse_moodlexml}
_ZIP_MAGIC = b"PK\x03\x04"


class UsageError(Exception):
    pass


class Loaded:
    def __init__(self, label: str, bank: QuestionBank, payloads: dict[str, bytes]):
        self.label = label
        self.bank = bank
        self.payloads = payloads


def detect_format(path: str, given: Optional[str]) -> Format:
    suffix = Path(path).suffix.lower() if path != "-" else ""
    if suffix == ".zip":
        return Format.GIFT
    if given:
        return Format(given)
    if suffix == ".xml":
        return Format.MOODLEXML
    if path == "-":
        raise UsageError("--from is required when reading standard input")
    raise UsageError(f"cannot tell the format of {path}; pass --from aiken|gift|moodlexml")


def load(path: str, given: Optional[str]) -> Loaded:
    fmt = detect_format(path, given)
    label = "<stdin>" if path == "-" else path
    try:
        data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {label}: {exc.strerror or exc}") from exc
    if fmt is Format.GIFT and data.startswith(_ZIP_MAGIC):
        bank, refs = unbundle_gift_media(data)
        return Loaded(label, bank, {r.name: r.payload for r in refs if r.payload is not None})
    try:
        text = decode_source(data)
    except UnicodeDecodeError as exc:
        raise UsageError(f"{label} is not UTF-8 text: {exc}") from exc
    return Loaded(label, PARSERS[fmt](text), {})


def _print_diagnostics(loaded: Loaded, verbose: int, stream) -> None:
    for d in loaded.bank.diagnostics:
        if d.severity is Severity.INFO and verbose < 1:
            continue
        print(d.format(loaded.label), file=stream)


def _write(output, dest: Optional[str]) -> None:
    data = output if isinstance(output, bytes) else output.encode("utf-8")
    if dest is None or dest == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        Path(dest).write_bytes(data)


def cmd_validate(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for path in args.inputs:
        loaded = load(path, args.from_format)
        _print_diagnostics(loaded, args.verbose, sys.stdout)
        if loaded.bank.errors:
            status = EXIT_PROBLEMS
    return status


def cmd_inspect(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for path in args.inputs:
        loaded = load(path, args.from_format)
        bank = loaded.bank
        kinds = Counter(q.kind for q in bank)
        print(f"{loaded.label}: {len(bank)} question(s)")
        for kind in BODY_KINDS:
            line = f"  {kind}: {kinds.get(kind, 0)}"
            if kind == "multichoice" and kinds.get(kind):
                single = sum(1 for q in bank if isinstance(q.body, MultipleChoice) and q.body.single)
                line += f" (single {single}, multiple {kinds[kind] - single})"
            print(line)
        refs = collect_media_refs(bank)
        uses = sum(len(r.referenced_from) for r in refs)
        print(f"  media: {len(refs)} file(s), {uses} reference(s)")
        if bank.errors:
            print(f"  errors: {len(bank.errors)}")
            status = EXIT_PROBLEMS
    return status


def cmd_convert(args: argparse.Namespace) -> int:
    loaded = load(args.input, args.from_format)
    _print_diagnostics(loaded, args.verbose, sys.stderr)
    policy = ConversionPolicy.lossy() if args.lossy else ConversionPolicy.strict()
    try:
        output, report = convert(
            loaded.bank,
            args.to_format,
            policy,
            media_dir=args.media_dir,
            media_payloads=loaded.payloads,
            media_folder=args.media_folder,
        )
    except (ConversionError, CapabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _write(output, args.output)
    for line in report.lines():
        print(line, file=sys.stderr)
    if isinstance(output, bytes) and args.output and not args.output.lower().endswith(".zip"):
        print("note: output is a GIFT-with-media zip archive", file=sys.stderr)
    return EXIT_PROBLEMS if report.skipped or loaded.bank.errors else EXIT_OK


def cmd_bundle(args: argparse.Namespace) -> int:
    loaded = load(args.input, args.from_format)
    _print_diagnostics(loaded, args.verbose, sys.stderr)
    archive = bundle_gift_media(
        loaded.bank,
        args.media_dir,
        payloads=loaded.payloads,
        media_folder=args.media_folder,
    )
    _write(archive, args.output)
    return EXIT_PROBLEMS if loaded.bank.errors else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbank", description="Convert and check Aiken, GIFT and Moodle XML question banks.")
    sub = parser.add_subparsers(dest="command", required=True)
    formats = [f.value for f in Format]

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--from", dest="from_format", choices=formats, help="input format (optional for .xml and .zip)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="also show info diagnostics")

    media = argparse.ArgumentParser(add_help=False)
    media.add_argument("--media-dir", default=os.environ.get("QBANK_MEDIA_DIR"), help="folder holding referenced images (env QBANK_MEDIA_DIR)")
    media.add_argument("--media-folder", default=DEFAULT_MEDIA_FOLDER, help="folder name for images inside zip archives")

    p = sub.add_parser("convert", parents=[common, media], help="convert a bank to another format")
    p.add_argument("--to", dest="to_format", choices=formats, required=True)
    p.add_argument("input", help="input file, or - for standard input")
    p.add_argument("-o", "--output", help="output file (default: standard output)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", action="store_true", help="fail if any question cannot be converted (default)")
    mode.add_argument("--lossy", action="store_true", help="skip questions the target cannot hold")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", parents=[common], help="print diagnostics for one or more files")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("inspect", parents=[common], help="count questions by kind and media")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("bundle", parents=[common, media], help="pack a bank and its images into a GIFT-with-media zip")
    p.add_argument("input")
    p.add_argument("-o", "--output", help="zip file to write (default: standard output)")
    p.set_defaults(func=cmd_bundle)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_FAILURE
    try:
        return args.func(args)
    except (UsageError, MediaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
