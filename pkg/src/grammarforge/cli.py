"""grammarforge command line interface.

Subcommands: check, schema, conflicts, parse, tokens, print.  Grammar
files are given explicitly or discovered as *.mc files under --path
directories; package-qualified extends references resolve against that
set.  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

import argparse
import json
import sys
from pathlib import Path

from .composition import CompositionConfig, StartDecl, bind, parse_config
from .errors import GrammarForgeError, has_errors
from .grammar_model import load_grammar_set, validate_grammar
from .lexing import CharQueue, EOF, build_lexer, lex_at
from .parse_engine import analyze_conflicts, ast_from_json, ast_to_json, parse
from .schema import derive_schema, schema_to_json
from .traversal import pretty_print

USAGE_EXIT = 2
DOMAIN_EXIT = 1


class _UsageError(Exception):
    pass


def build_arg_parser():
    parser = argparse.ArgumentParser(
        prog="grammarforge",
        description="Modular textual-DSL workbench: grammar checking, schema "
        "derivation, composed parsing, and pretty printing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_file=True, file_help="input file"):
        p.add_argument(
            "--path",
            action="append",
            default=[],
            metavar="DIR",
            help="directory searched recursively for *.mc grammar files",
        )
        p.add_argument("--json-errors", action="store_true", help="emit errors as JSON")
        if with_file:
            p.add_argument("file", nargs="?", help=file_help)

    p = sub.add_parser("check", help="validate a grammar file")
    common(p, file_help="grammar file to check")

    p = sub.add_parser("schema", help="emit the derived schema as JSON")
    p.add_argument("--grammar", metavar="QNAME", help="fully qualified grammar name")
    common(p, file_help="grammar file (alternative to --grammar)")

    p = sub.add_parser("conflicts", help="report overlapping decision points")
    p.add_argument("--grammar", metavar="QNAME")
    common(p, file_help="grammar file (alternative to --grammar)")

    p = sub.add_parser("parse", help="parse input with a composed language")
    p.add_argument("--config", metavar="FILE", help="composition config file")
    p.add_argument("--grammar", metavar="QNAME", help="grammar for single-grammar parse")
    p.add_argument("--start", metavar="QPROD", help="start production")
    p.add_argument("--compact", action="store_true", help="compact AST JSON")
    common(p, file_help="input text file")

    p = sub.add_parser("tokens", help="dump the token stream of an input")
    p.add_argument("--grammar", metavar="QNAME", required=True)
    p.add_argument("--start", metavar="QPROD", required=True)
    common(p, file_help="input text file")

    p = sub.add_parser("print", help="pretty-print an AST JSON file back to text")
    p.add_argument("--config", metavar="FILE", help="composition config file")
    p.add_argument("--grammar", metavar="QNAME")
    p.add_argument("--start", metavar="QPROD")
    common(p, file_help="AST JSON file")

    return parser


def _require_file(value, what):
    if not value:
        raise _UsageError(f"missing {what}")
    path = Path(value)
    if not path.is_file():
        raise _UsageError(f"{what} {value!r} does not exist")
    return path


def _load_grammars(args, extra_files=()):
    files = [Path(f) for f in extra_files]
    for directory in args.path:
        root = Path(directory)
        if not root.is_dir():
            raise _UsageError(f"--path {directory!r} is not a directory")
        files.extend(sorted(root.rglob("*.mc")))
    unique = []
    seen = set()
    for f in files:
        key = f.resolve()
        if key not in seen:
            seen.add(key)
            unique.append(f)
    diagnostics = []
    grammar_set = load_grammar_set(unique, diagnostics=diagnostics)
    return grammar_set, diagnostics


def _pick_grammar(args, grammar_set, file_path):
    if getattr(args, "grammar", None):
        grammar = grammar_set.get(args.grammar)
        if grammar is None:
            raise _UsageError(f"grammar {args.grammar!r} not found in search paths")
        return grammar
    if file_path is not None:
        for grammar in grammar_set.values():
            if grammar.source_path == str(file_path):
                return grammar
    raise _UsageError("give a grammar file or --grammar QNAME")


def _validated(grammar_set):
    diagnostics = []
    for grammar in grammar_set.values():
        diagnostics.extend(validate_grammar(grammar, grammar_set))
    return diagnostics


def _composed_from_args(args):
    if args.config:
        config_path = _require_file(args.config, "config file")
        config = parse_config(
            config_path.read_text(encoding="utf-8"), source_path=str(config_path)
        )
    elif args.grammar and args.start:
        start = args.start
        if "." in start:
            grammar_fq, _, production = start.rpartition(".")
            if grammar_fq != args.grammar:
                raise _UsageError("--start does not belong to --grammar")
        else:
            production = start
        config = CompositionConfig(
            start=StartDecl(grammar_fq=args.grammar, production=production, alias="main")
        )
    else:
        raise _UsageError("give --config FILE or --grammar QNAME with --start QPROD")
    grammar_set, load_diags = _load_grammars(args)
    validation = _validated(grammar_set)
    for diag in load_diags + validation:
        print(diag.render(), file=sys.stderr)
    if has_errors(validation):
        raise GrammarForgeError("grammar validation failed")
    return bind(config, grammar_set)


def cmd_check(args):
    file_path = _require_file(args.file, "grammar file")
    grammar_set, diagnostics = _load_grammars(args, [file_path])
    grammar = _pick_grammar(args, grammar_set, file_path)
    diagnostics = list(diagnostics)
    diagnostics.extend(validate_grammar(grammar, grammar_set))
    for diag in diagnostics:
        print(diag.render())
    return DOMAIN_EXIT if has_errors(diagnostics) else 0


def cmd_schema(args):
    file_path = _require_file(args.file, "grammar file") if args.file else None
    grammar_set, _ = _load_grammars(args, [file_path] if file_path else [])
    grammar = _pick_grammar(args, grammar_set, file_path)
    diagnostics = validate_grammar(grammar, grammar_set)
    if has_errors(diagnostics):
        for diag in diagnostics:
            print(diag.render(), file=sys.stderr)
        return DOMAIN_EXIT
    print(schema_to_json(derive_schema(grammar, grammar_set)))
    return 0


def cmd_conflicts(args):
    file_path = _require_file(args.file, "grammar file") if args.file else None
    grammar_set, _ = _load_grammars(args, [file_path] if file_path else [])
    grammar = _pick_grammar(args, grammar_set, file_path)
    diagnostics = validate_grammar(grammar, grammar_set)
    if has_errors(diagnostics):
        for diag in diagnostics:
            print(diag.render(), file=sys.stderr)
        return DOMAIN_EXIT
    for report in analyze_conflicts(grammar, grammar_set):
        print(report.render())
    return 0


def cmd_parse(args):
    input_path = _require_file(args.file, "input file")
    composed = _composed_from_args(args)
    node = parse(composed, input_path.read_text(encoding="utf-8"))
    print(ast_to_json(node, compact=args.compact))
    return 0


def cmd_tokens(args):
    input_path = _require_file(args.file, "input file")
    grammar_set, _ = _load_grammars(args)
    grammar = _pick_grammar(args, grammar_set, None)
    start = args.start.rpartition(".")[2]
    from .grammar_model import effective_entries

    entries = effective_entries(grammar, grammar_set)
    entry = entries.get(start)
    if entry is None or entry.kind != "production":
        raise _UsageError(f"--start {args.start!r} is not a production of {args.grammar}")
    lexer = build_lexer(grammar, grammar_set)
    queue = CharQueue(input_path.read_text(encoding="utf-8"))
    pos = 0
    while True:
        tok = lex_at(lexer, queue, pos)
        print(f"{tok.kind} {json.dumps(tok.text)} {tok.start_pos}..{tok.end_pos}")
        if tok.kind == EOF:
            return 0
        queue.consume(tok)
        pos = tok.end_pos


def cmd_print(args):
    ast_path = _require_file(args.file, "AST JSON file")
    composed = _composed_from_args(args)
    node = ast_from_json(ast_path.read_text(encoding="utf-8"))
    print(pretty_print(node, composed))
    return 0


_COMMANDS = {
    "check": cmd_check,
    "schema": cmd_schema,
    "conflicts": cmd_conflicts,
    "parse": cmd_parse,
    "tokens": cmd_tokens,
    "print": cmd_print,
}


def main(argv=None):
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return USAGE_EXIT
    except GrammarForgeError as err:
        if getattr(args, "json_errors", False):
            print(json.dumps(err.payload(), sort_keys=True), file=sys.stderr)
        else:
            where = f" at offset {err.pos}" if err.pos is not None else ""
            print(f"error[{err.code}]{where}: {err.message}", file=sys.stderr)
        return DOMAIN_EXIT


if __name__ == "__main__":
    sys.exit(main())
