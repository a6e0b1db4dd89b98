"""Command-line front end: infer, prune, validate, gen, check, bench.

Exit codes: 0 success, 1 validation or soundness-check failure, 2 usage
and format errors.  Documents read from files or `-` (stdin) and write to
files or `-` (stdout); stats and diagnostics go to stderr so piped XML
stays clean.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import IO, Iterable

from .doc import SaxEvent, XmlSyntaxError, iter_events, parse_xml, serialize, serialize_event
from .dtd import DtdError, parse_dtd
from .grammar import (
    GrammarFormatError,
    Invalid,
    grammar_to_text,
    is_streamable,
    validate_tree,
)
from .inference import (
    Projector,
    infer_projector,
    parse_projector_text,
    projector_to_text,
)
from .oracle import GenConfig, OracleError, check_soundness, generate_document
from .pruner import (
    InvalidDocumentError,
    PruneStats,
    UnresolvableTagError,
    prune_stream,
    prune_tree,
)
from .xpath import QueryEll, QuerySyntaxError, approximate_to_ell, parse_query

_USAGE_ERRORS = (DtdError, GrammarFormatError, QuerySyntaxError, XmlSyntaxError, OracleError)
_DATA_ERRORS = (InvalidDocumentError, UnresolvableTagError)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xmlprojector",
        description="Prune XML documents down to what a set of XPath queries can observe.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dtd(p, required=True):
        p.add_argument("--dtd", required=required, help="DTD file defining the schema")
        p.add_argument("--root", help="root element (default: first declared)")

    def add_queries(p):
        p.add_argument(
            "--query",
            action="append",
            default=[],
            metavar="XPATH",
            help="query; repeatable, results are unioned",
        )
        p.add_argument("--queries", help="batch file, one XPath per line, # comments")

    infer = sub.add_parser("infer", help="infer a projector from DTD and queries")
    add_dtd(infer)
    add_queries(infer)
    infer.add_argument(
        "--emit-grammar",
        action="store_true",
        help="emit the imported grammar instead of a projector (queries ignored)",
    )
    infer.add_argument("-o", "--output", default="-", help="projector file (default stdout)")
    infer.set_defaults(func=_cmd_infer)

    prune = sub.add_parser("prune", help="prune a document with a projector or infer one first")
    add_dtd(prune, required=False)
    add_queries(prune)
    prune.add_argument("--projector", help="projector file from `infer`")
    prune.add_argument("-i", "--input", default="-", help="document (default stdin)")
    prune.add_argument("-o", "--output", default="-", help="pruned document (default stdout)")
    prune.add_argument("--policy", choices=("strict", "drop"), default="strict",
                       help="what to do with tags the grammar cannot resolve")
    prune.add_argument("--stats", action="store_true", help="print a stats line to stderr")
    prune.set_defaults(func=_cmd_prune)

    validate = sub.add_parser("validate", help="check a document against the DTD")
    add_dtd(validate)
    validate.add_argument("-i", "--input", default="-", help="document (default stdin)")
    validate.set_defaults(func=_cmd_validate)

    gen = sub.add_parser("gen", help="generate a random valid document")
    add_dtd(gen)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--max-depth", type=int, default=12)
    gen.add_argument("--max-star-repeat", type=int, default=3)
    gen.add_argument("-o", "--output", default="-")
    gen.set_defaults(func=_cmd_gen)

    check = sub.add_parser("check", help="verify pruning soundness on generated documents")
    add_dtd(check)
    add_queries(check)
    check.add_argument("--n", type=int, default=100, help="number of documents")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--max-depth", type=int, default=12)
    check.add_argument("--dump-dir", default=".", help="where to write counterexamples")
    check.set_defaults(func=_cmd_check)

    bench = sub.add_parser("bench", help="time pruning against a parse-only baseline")
    add_dtd(bench, required=False)
    add_queries(bench)
    bench.add_argument("--projector", help="projector file from `infer`")
    bench.add_argument("-i", "--input", required=True, help="document file (not stdin)")
    bench.add_argument("-o", "--output", help="write pruned output (default: discard)")
    bench.add_argument("--policy", choices=("strict", "drop"), default="strict")
    bench.set_defaults(func=_cmd_bench)

    return parser


# ---------------------------------------------------------------------------
# Shared plumbing


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_queries(args) -> list[QueryEll]:
    texts = list(args.query)
    if args.queries:
        for line in _read_text(args.queries).splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                texts.append(line)
    return [approximate_to_ell(parse_query(t)) for t in texts]


def _load_projector(args) -> Projector:
    if args.projector:
        if args.dtd or args.query or args.queries:
            raise GrammarFormatError("--projector excludes --dtd/--query/--queries")
        return parse_projector_text(_read_text(args.projector))
    if not args.dtd:
        raise GrammarFormatError("need either --projector or --dtd with queries")
    grammar = parse_dtd(_read_text(args.dtd), root=args.root)
    queries = _load_queries(args)
    if not queries:
        raise QuerySyntaxError("no queries given (use --query or --queries)")
    return infer_projector(queries, grammar)


def _open_in(path: str) -> IO[bytes]:
    return sys.stdin.buffer if path == "-" else open(path, "rb")


def _open_out(path: str) -> IO[str]:
    if path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def _close(fh, path: str) -> None:
    if path != "-":
        fh.close()


def _write_events(events: Iterable[SaxEvent], fh: IO[str], flush_every: int = 2048) -> None:
    buffer: list[str] = []
    for event in events:
        buffer.append(serialize_event(event))
        if len(buffer) >= flush_every:
            fh.write("".join(buffer))
            buffer.clear()
    fh.write("".join(buffer))


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_infer(args) -> int:
    grammar = parse_dtd(_read_text(args.dtd), root=args.root)
    out = _open_out(args.output)
    try:
        if args.emit_grammar:
            out.write(grammar_to_text(grammar))
            return 0
        queries = _load_queries(args)
        if not queries:
            raise QuerySyntaxError("no queries given (use --query/--queries or --emit-grammar)")
        projector = infer_projector(queries, grammar)
        out.write(projector_to_text(projector))
        print(
            f"kept {len(projector.kept)} of {len(grammar.rules)} rules "
            f"({len(projector.dropped)} dropped)",
            file=sys.stderr,
        )
        return 0
    finally:
        _close(out, args.output)


def _cmd_prune(args) -> int:
    projector = _load_projector(args)
    stats = PruneStats()
    src = _open_in(args.input)
    out = _open_out(args.output)
    try:
        if is_streamable(projector.grammar):
            events = prune_stream(
                iter_events(src), projector, policy=args.policy, stats=stats
            )
            _write_events(events, out)
        else:
            print("grammar is not streamable; pruning in memory", file=sys.stderr)
            doc = parse_xml(src)
            out.write(serialize(prune_tree(doc, projector)))
        if args.stats:
            print(stats.line(), file=sys.stderr)
        return 0
    finally:
        _close(src, args.input)
        _close(out, args.output)


def _cmd_validate(args) -> int:
    grammar = parse_dtd(_read_text(args.dtd), root=args.root)
    src = _open_in(args.input)
    try:
        doc = parse_xml(src)
    finally:
        _close(src, args.input)
    result = validate_tree(doc, grammar)
    if isinstance(result, Invalid):
        print(f"invalid at {result.path}: {result.reason}")
        return 1
    print(f"valid ({len(result)} nodes typed)")
    return 0


def _cmd_gen(args) -> int:
    grammar = parse_dtd(_read_text(args.dtd), root=args.root)
    cfg = GenConfig(seed=args.seed, max_depth=args.max_depth, max_star_repeat=args.max_star_repeat)
    doc = generate_document(grammar, cfg)
    out = _open_out(args.output)
    try:
        out.write(serialize(doc))
        out.write("\n")
    finally:
        _close(out, args.output)
    return 0


def _cmd_check(args) -> int:
    grammar = parse_dtd(_read_text(args.dtd), root=args.root)
    texts = list(args.query)
    if args.queries:
        for line in _read_text(args.queries).splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                texts.append(line)
    if not texts:
        raise QuerySyntaxError("no queries given (use --query or --queries)")
    cfg = GenConfig(seed=args.seed, max_depth=args.max_depth)
    report = check_soundness(grammar, texts, args.n, cfg)
    doc_paths: dict[int, str] = {}
    for i, failure in enumerate(report.failures):
        path = os.path.join(args.dump_dir, f"counterexample_{failure.seed}.xml")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(failure.document)
        doc_paths[i] = path
    for line in report.lines(doc_paths):
        print(line)
    return 0 if report.passed else 1


def _cmd_bench(args) -> int:
    if args.input == "-":
        raise GrammarFormatError("bench needs a real input file, not stdin")
    projector = _load_projector(args)
    if not is_streamable(projector.grammar):
        raise GrammarFormatError("bench requires a streamable grammar")

    t0 = time.perf_counter()
    with open(args.input, "rb") as src:
        for _ in iter_events(src):
            pass
    parse_seconds = time.perf_counter() - t0

    stats = PruneStats()
    out_path = args.output or os.devnull
    t0 = time.perf_counter()
    with open(args.input, "rb") as src, open(out_path, "w", encoding="utf-8") as out:
        _write_events(
            prune_stream(iter_events(src), projector, policy=args.policy, stats=stats), out
        )
    prune_seconds = time.perf_counter() - t0

    ratio = prune_seconds / parse_seconds if parse_seconds > 0 else float("inf")
    print(f"parse_seconds={parse_seconds:.3f} prune_seconds={prune_seconds:.3f} ratio={ratio:.3f}")
    print(stats.line())
    return 0


if __name__ == "__main__":
    sys.exit(main())
