"""Grammar definition files: model, parser, renderer, validation, loading.

A grammar file holds lexer rules, productions, external nonterminals, and
interface declarations, plus an extends list for grammar inheritance.  The
parser here is a hand-written recursive descent over a small token scanner;
the same scanner is reused by the composition-config parser.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import patterns
from .errors import (
    CyclicInheritanceError,
    Diagnostic,
    DuplicateNameError,
    ERROR_LEVEL,
    GrammarSyntaxError,
    UnresolvedSupergrammarError,
    WARNING_LEVEL,
)


class ValueType(Enum):
    TEXT = "Text"
    INT = "Int"


class BlockCardinality(Enum):
    ONE = "One"
    OPTIONAL = "Optional"
    STAR = "Star"
    PLUS = "Plus"


class SelectorKind(Enum):
    GLOBAL_VARIABLE = "GlobalVariable"
    LOCAL_ATTRIBUTE = "LocalAttribute"


@dataclass
class EmbedSelector:
    kind: SelectorKind
    name: str


@dataclass
class AstScriptAction:
    target_variable: str
    source_attribute: str


@dataclass
class Keyword:
    text: str
    pos: tuple = field(default=None, compare=False)


@dataclass
class LexerRef:
    rule_name: str
    label: str = None
    pos: tuple = field(default=None, compare=False)


@dataclass
class NonterminalRef:
    rule_name: str
    label: str = None
    selector: EmbedSelector = None
    pos: tuple = field(default=None, compare=False)


@dataclass
class Block:
    alternatives: list  # list of lists of rhs nodes, each non-empty
    cardinality: BlockCardinality = BlockCardinality.ONE
    pos: tuple = field(default=None, compare=False)


@dataclass
class Script:
    action: AstScriptAction
    pos: tuple = field(default=None, compare=False)


@dataclass
class LexerRuleDef:
    name: str
    pattern: str
    value_type: ValueType = ValueType.TEXT
    regex: object = None  # patterns AST; None only for the predefined STRING rule
    pos: tuple = field(default=None, compare=False)


@dataclass
class ProductionDef:
    name: str
    rhs: Block
    implements_list: list = field(default_factory=list)
    ast_scripts: list = field(default_factory=list)
    pos: tuple = field(default=None, compare=False)


@dataclass
class ExternalDecl:
    name: str
    required_interface: str = None
    handwritten: bool = False
    pos: tuple = field(default=None, compare=False)


@dataclass
class InterfaceDecl:
    name: str
    required_attributes: list = field(default_factory=list)  # (name, type name)
    pos: tuple = field(default=None, compare=False)


@dataclass
class GrammarDef:
    package_path: list
    name: str
    extends_list: list = field(default_factory=list)
    lexer_rules: list = field(default_factory=list)
    productions: list = field(default_factory=list)
    externals: list = field(default_factory=list)
    interfaces: list = field(default_factory=list)
    source_path: str = field(default=None, compare=False)

    @property
    def fq_name(self):
        return ".".join(self.package_path + [self.name])

    def production(self, name):
        for p in self.productions:
            if p.name == name:
                return p
        return None

    def lexer_rule(self, name):
        for r in self.lexer_rules:
            if r.name == name:
                return r
        return None

    def external(self, name):
        for e in self.externals:
            if e.name == name:
                return e
        return None

    def interface(self, name):
        for i in self.interfaces:
            if i.name == name:
                return i
        return None


PREDEFINED_IDENT = LexerRuleDef(
    name="IDENT",
    pattern=patterns.render(patterns.ident_pattern()),
    value_type=ValueType.TEXT,
    regex=patterns.ident_pattern(),
)
# STRING cannot be written in the pattern dialect (it needs a negated
# class); it is matched by a dedicated scanner in the lexing module.
PREDEFINED_STRING = LexerRuleDef(
    name="STRING",
    pattern='"..."',
    value_type=ValueType.TEXT,
    regex=None,
)
PREDEFINED_LEXER_RULES = {"IDENT": PREDEFINED_IDENT, "STRING": PREDEFINED_STRING}


def lower_first(name):
    return name[0].lower() + name[1:] if name else name


# ---------------------------------------------------------------------------
# token scanner (shared with the composition-config parser)

_SINGLE_OPS = set("{}();,:|?*+=/<>.")


@dataclass
class Tok:
    kind: str  # "ident", "string", "char", "op", "eof"
    text: str
    line: int
    col: int


class TokenScanner:
    def __init__(self, text, file="<input>"):
        self.text = text
        self.file = file
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens = []
        self._scan_all()
        self.index = 0

    def _error(self, message, line=None, col=None):
        raise GrammarSyntaxError(
            message, file=self.file, line=line or self.line, col=col or self.col
        )

    def _advance(self, n=1):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _skip_trivia(self):
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance()
            elif self.text.startswith("//", self.pos):
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            elif self.text.startswith("/*", self.pos):
                start_line, start_col = self.line, self.col
                self._advance(2)
                while self.pos < len(self.text) and not self.text.startswith("*/", self.pos):
                    self._advance()
                if self.pos >= len(self.text):
                    self._error("unterminated block comment", start_line, start_col)
                self._advance(2)
            else:
                return

    def _scan_all(self):
        while True:
            self._skip_trivia()
            line, col = self.line, self.col
            if self.pos >= len(self.text):
                self.tokens.append(Tok("eof", "", line, col))
                return
            c = self.text[self.pos]
            if c.isalpha() or c == "_":
                start = self.pos
                while self.pos < len(self.text) and (
                    self.text[self.pos].isalnum() or self.text[self.pos] == "_"
                ):
                    self._advance()
                self.tokens.append(Tok("ident", self.text[start : self.pos], line, col))
            elif c == '"':
                end = patterns.match_string_literal(self.text, self.pos)
                if end < 0:
                    self._error("unterminated string literal")
                raw = self.text[self.pos : end]
                self._advance(end - self.pos)
                self.tokens.append(Tok("string", patterns.unescape_string(raw), line, col))
            elif c == "'":
                start = self.pos
                self._advance()
                if self.pos < len(self.text) and self.text[self.pos] == "\\":
                    self._advance(2)
                else:
                    self._advance()
                if self.pos >= len(self.text) or self.text[self.pos] != "'":
                    self._error("unterminated character literal", line, col)
                self._advance()
                body = self.text[start + 1 : self.pos - 1]
                self.tokens.append(Tok("char", patterns.unescape_char(body), line, col))
            elif self.text.startswith("..", self.pos):
                self._advance(2)
                self.tokens.append(Tok("op", "..", line, col))
            elif c in _SINGLE_OPS:
                self._advance()
                self.tokens.append(Tok("op", c, line, col))
            else:
                self._error(f"unexpected character {c!r}")

    # parser-side cursor helpers

    def peek(self, offset=0):
        i = min(self.index + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def next(self):
        tok = self.tokens[self.index]
        if tok.kind != "eof":
            self.index += 1
        return tok

    def at_op(self, text):
        tok = self.peek()
        return tok.kind == "op" and tok.text == text

    def at_word(self, text):
        tok = self.peek()
        return tok.kind == "ident" and tok.text == text

    def expect_op(self, text):
        tok = self.peek()
        if not self.at_op(text):
            self.fail(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return self.next()

    def expect_ident(self, what="identifier"):
        tok = self.peek()
        if tok.kind != "ident":
            self.fail(f"expected {what}, found {tok.text or 'end of input'!r}", tok)
        return self.next()

    def expect_word(self, text):
        tok = self.peek()
        if not self.at_word(text):
            self.fail(f"expected '{text}', found {tok.text or 'end of input'!r}", tok)
        return self.next()

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise GrammarSyntaxError(message, file=self.file, line=tok.line, col=tok.col)

    def parse_qname(self, what="qualified name"):
        parts = [self.expect_ident(what).text]
        while self.at_op("."):
            self.next()
            parts.append(self.expect_ident(what).text)
        return parts


# ---------------------------------------------------------------------------
# grammar file parser


def parse_grammar(text, source_path=None):
    """Parse one grammar definition file into a GrammarDef."""
    scanner = TokenScanner(text, file=source_path or "<input>")
    parser = _GrammarParser(scanner, source_path)
    return parser.parse_file()


class _GrammarParser:
    def __init__(self, scanner, source_path):
        self.s = scanner
        self.source_path = source_path

    def parse_file(self):
        package_path = []
        if self.s.at_word("package"):
            self.s.next()
            package_path = self.s.parse_qname("package name")
            self.s.expect_op(";")
        self.s.expect_word("grammar")
        name = self.s.expect_ident("grammar name").text
        extends_list = []
        if self.s.at_word("extends"):
            self.s.next()
            extends_list.append(".".join(self.s.parse_qname("supergrammar name")))
            while self.s.at_op(","):
                self.s.next()
                extends_list.append(".".join(self.s.parse_qname("supergrammar name")))
        self.s.expect_op("{")
        grammar = GrammarDef(
            package_path=package_path,
            name=name,
            extends_list=extends_list,
            source_path=self.source_path,
        )
        while not self.s.at_op("}"):
            if self.s.peek().kind == "eof":
                self.s.fail("missing '}' at end of grammar")
            self._parse_item(grammar)
        self.s.next()
        tail = self.s.peek()
        if tail.kind != "eof":
            self.s.fail("content after closing '}'", tail)
        self._check_names(grammar)
        _classify_refs(grammar)
        return grammar

    def _parse_item(self, grammar):
        if self.s.at_word("ident"):
            grammar.lexer_rules.append(self._parse_lexrule())
        elif self.s.at_word("external"):
            grammar.externals.append(self._parse_external())
        elif self.s.at_word("interface"):
            grammar.interfaces.append(self._parse_interface())
        else:
            grammar.productions.append(self._parse_production())

    def _parse_lexrule(self):
        start = self.s.next()
        name = self.s.expect_ident("lexer rule name").text
        regex = self._parse_regex_alt()
        value_type = ValueType.TEXT
        if self.s.at_op(":"):
            self.s.next()
            self.s.expect_word("int")
            value_type = ValueType.INT
        self.s.expect_op(";")
        if not patterns.can_match_nonempty(regex):
            self.s.fail(
                f"pattern of lexer rule {name} never matches a non-empty string",
                start,
            )
        return LexerRuleDef(
            name=name,
            pattern=patterns.render(regex),
            value_type=value_type,
            regex=regex,
            pos=(start.line, start.col),
        )

    def _parse_regex_alt(self):
        options = [self._parse_regex_seq()]
        while self.s.at_op("|"):
            self.s.next()
            options.append(self._parse_regex_seq())
        return options[0] if len(options) == 1 else patterns.RxAlt(tuple(options))

    def _parse_regex_seq(self):
        parts = [self._parse_regex_rep()]
        while self.s.peek().kind == "char" or self.s.at_op("("):
            parts.append(self._parse_regex_rep())
        return parts[0] if len(parts) == 1 else patterns.RxSeq(tuple(parts))

    def _parse_regex_rep(self):
        atom = self._parse_regex_atom()
        if self.s.at_op("?"):
            self.s.next()
            return patterns.RxRepeat(atom, 0, False)
        if self.s.at_op("*"):
            self.s.next()
            return patterns.RxRepeat(atom, 0, True)
        if self.s.at_op("+"):
            self.s.next()
            return patterns.RxRepeat(atom, 1, True)
        return atom

    def _parse_regex_atom(self):
        tok = self.s.peek()
        if tok.kind == "char":
            self.s.next()
            if self.s.at_op(".."):
                self.s.next()
                hi = self.s.peek()
                if hi.kind != "char":
                    self.s.fail("expected character literal after '..'")
                self.s.next()
                if hi.text < tok.text:
                    self.s.fail(f"empty character range '{tok.text}'..'{hi.text}'", tok)
                return patterns.RxRange(tok.text, hi.text)
            return patterns.RxChar(tok.text)
        if self.s.at_op("("):
            self.s.next()
            inner = self._parse_regex_alt()
            self.s.expect_op(")")
            return inner
        self.s.fail(f"expected pattern, found {tok.text or 'end of input'!r}")

    def _parse_external(self):
        start = self.s.next()
        name = self.s.expect_ident("external name").text
        required = None
        handwritten = False
        if self.s.at_op("/"):
            self.s.next()
            required = ".".join(self.s.parse_qname("interface name"))
            handwritten = True
        self.s.expect_op(";")
        return ExternalDecl(
            name=name,
            required_interface=required,
            handwritten=handwritten,
            pos=(start.line, start.col),
        )

    def _parse_interface(self):
        start = self.s.next()
        name = self.s.expect_ident("interface name").text
        attrs = []
        if self.s.at_op("="):
            self.s.next()
            self.s.expect_word("ast")
            attrs.append(self._parse_attr())
            while self.s.at_op(","):
                self.s.next()
                attrs.append(self._parse_attr())
        self.s.expect_op(";")
        seen = set()
        for attr_name, _ in attrs:
            if attr_name in seen:
                self.s.fail(f"duplicate interface attribute {attr_name!r}", start)
            seen.add(attr_name)
        return InterfaceDecl(name=name, required_attributes=attrs, pos=(start.line, start.col))

    def _parse_attr(self):
        name = self.s.expect_ident("attribute name").text
        self.s.expect_op(":")
        type_name = self.s.expect_ident("attribute type").text
        return (name, type_name)

    def _parse_production(self):
        start = self.s.peek()
        name = self.s.expect_ident("production name").text
        implements = []
        if self.s.at_word("implements"):
            self.s.next()
            implements.append(self.s.expect_ident("interface name").text)
            while self.s.at_op(","):
                self.s.next()
                implements.append(self.s.expect_ident("interface name").text)
        self.s.expect_op("=")
        rhs = self._parse_alts((start.line, start.col))
        self.s.expect_op(";")
        scripts = []
        _collect_scripts(rhs, scripts)
        return ProductionDef(
            name=name,
            rhs=rhs,
            implements_list=implements,
            ast_scripts=scripts,
            pos=(start.line, start.col),
        )

    def _parse_alts(self, pos):
        alternatives = [self._parse_seq()]
        while self.s.at_op("|"):
            self.s.next()
            alternatives.append(self._parse_seq())
        return Block(alternatives=alternatives, cardinality=BlockCardinality.ONE, pos=pos)

    def _parse_seq(self):
        elems = [self._parse_elem()]
        while self._at_elem_start():
            elems.append(self._parse_elem())
        return elems

    def _at_elem_start(self):
        tok = self.s.peek()
        if tok.kind in ("string", "ident"):
            return True
        return tok.kind == "op" and tok.text == "("

    def _parse_elem(self):
        tok = self.s.peek()
        if tok.kind == "string":
            self.s.next()
            if not tok.text:
                self.s.fail("empty keyword terminal", tok)
            return Keyword(text=tok.text, pos=(tok.line, tok.col))
        if tok.kind == "op" and tok.text == "(":
            self.s.next()
            block = self._parse_alts((tok.line, tok.col))
            self.s.expect_op(")")
            if self.s.at_op("?"):
                self.s.next()
                block.cardinality = BlockCardinality.OPTIONAL
            elif self.s.at_op("*"):
                self.s.next()
                block.cardinality = BlockCardinality.STAR
            elif self.s.at_op("+"):
                self.s.next()
                block.cardinality = BlockCardinality.PLUS
            return block
        if tok.kind == "ident" and tok.text == "astscript":
            return self._parse_script()
        label = None
        name_tok = self.s.expect_ident("rule reference")
        if self.s.at_op(":"):
            self.s.next()
            label = name_tok.text
            name_tok = self.s.expect_ident("rule reference")
        selector = None
        if self.s.at_op("<"):
            self.s.next()
            kind = SelectorKind.LOCAL_ATTRIBUTE
            if self.s.at_word("global"):
                self.s.next()
                kind = SelectorKind.GLOBAL_VARIABLE
            sel_name = self.s.expect_ident("selector name").text
            self.s.expect_op(">")
            selector = EmbedSelector(kind=kind, name=sel_name)
        return NonterminalRef(
            rule_name=name_tok.text,
            label=label,
            selector=selector,
            pos=(name_tok.line, name_tok.col),
        )

    def _parse_script(self):
        start = self.s.next()
        self.s.expect_op("{")
        self.s.expect_word("set")
        self.s.expect_op("(")
        target = self.s.expect_ident("variable name").text
        self.s.expect_op(",")
        source = self.s.expect_ident("attribute name").text
        self.s.expect_op(")")
        self.s.expect_op(";")
        self.s.expect_op("}")
        action = AstScriptAction(target_variable=target, source_attribute=source)
        return Script(action=action, pos=(start.line, start.col))

    def _check_names(self, grammar):
        seen = {}
        groups = [
            ("lexer rule", grammar.lexer_rules),
            ("production", grammar.productions),
            ("external", grammar.externals),
            ("interface", grammar.interfaces),
        ]
        for what, decls in groups:
            for decl in decls:
                if decl.name in seen:
                    raise DuplicateNameError(
                        f"{what} {decl.name!r} collides with {seen[decl.name]} of the same name",
                        file=self.s.file,
                        line=decl.pos[0] if decl.pos else None,
                        col=decl.pos[1] if decl.pos else None,
                    )
                seen[decl.name] = what
        extends_seen = set()
        for super_name in grammar.extends_list:
            if super_name in extends_seen:
                raise DuplicateNameError(
                    f"duplicate supergrammar {super_name!r} in extends list",
                    file=self.s.file,
                )
            extends_seen.add(super_name)


def _collect_scripts(node, out):
    if isinstance(node, Script):
        out.append(node.action)
    elif isinstance(node, Block):
        for alt in node.alternatives:
            for elem in alt:
                _collect_scripts(elem, out)


def _looks_like_lexer_name(name):
    return name[0].isupper() and name == name.upper()


def _classify_refs(grammar):
    """Rewrite references to local or conventionally named lexer rules.

    Names declared in this file decide directly; undeclared all-caps names
    are taken as (inherited or predefined) lexer rules.  Final resolution
    happens against the full hierarchy during validation and derivation.
    """
    local_lexer = {r.name for r in grammar.lexer_rules} | set(PREDEFINED_LEXER_RULES)
    local_lexer -= {p.name for p in grammar.productions}
    local_other = (
        {p.name for p in grammar.productions}
        | {e.name for e in grammar.externals}
        | {i.name for i in grammar.interfaces}
    )

    def rewrite(seq):
        for i, elem in enumerate(seq):
            if isinstance(elem, Block):
                for alt in elem.alternatives:
                    rewrite(alt)
            elif isinstance(elem, NonterminalRef) and elem.selector is None:
                name = elem.rule_name
                is_lexer = name in local_lexer or (
                    name not in local_other and _looks_like_lexer_name(name)
                )
                if is_lexer:
                    seq[i] = LexerRef(rule_name=name, label=elem.label, pos=elem.pos)

    for production in grammar.productions:
        for alt in production.rhs.alternatives:
            rewrite(alt)


# ---------------------------------------------------------------------------
# rendering (debug serializer; parse -> render -> parse is a fixpoint)


def render_grammar(grammar):
    out = []
    if grammar.package_path:
        out.append(f"package {'.'.join(grammar.package_path)};")
        out.append("")
    header = f"grammar {grammar.name}"
    if grammar.extends_list:
        header += " extends " + ", ".join(grammar.extends_list)
    out.append(header + " {")
    for rule in grammar.lexer_rules:
        suffix = " : int" if rule.value_type is ValueType.INT else ""
        out.append(f"  ident {rule.name} {rule.pattern}{suffix};")
    for ext in grammar.externals:
        tail = f" / {ext.required_interface}" if ext.required_interface else ""
        out.append(f"  external {ext.name}{tail};")
    for iface in grammar.interfaces:
        if iface.required_attributes:
            attrs = ", ".join(f"{n}:{t}" for n, t in iface.required_attributes)
            out.append(f"  interface {iface.name} = ast {attrs};")
        else:
            out.append(f"  interface {iface.name};")
    for production in grammar.productions:
        impl = ""
        if production.implements_list:
            impl = " implements " + ", ".join(production.implements_list)
        body = " | ".join(_render_seq(alt) for alt in production.rhs.alternatives)
        out.append(f"  {production.name}{impl} = {body} ;")
    out.append("}")
    return "\n".join(out) + "\n"


_BLOCK_SUFFIX = {
    BlockCardinality.ONE: "",
    BlockCardinality.OPTIONAL: "?",
    BlockCardinality.STAR: "*",
    BlockCardinality.PLUS: "+",
}


def _render_seq(seq):
    return " ".join(_render_elem(e) for e in seq)


def _render_elem(elem):
    if isinstance(elem, Keyword):
        return patterns.escape_string(elem.text)
    if isinstance(elem, (LexerRef, NonterminalRef)):
        text = f"{elem.label}:{elem.rule_name}" if elem.label else elem.rule_name
        selector = getattr(elem, "selector", None)
        if selector is not None:
            prefix = "global " if selector.kind is SelectorKind.GLOBAL_VARIABLE else ""
            text += f"<{prefix}{selector.name}>"
        return text
    if isinstance(elem, Block):
        body = " | ".join(_render_seq(alt) for alt in elem.alternatives)
        return f"( {body} ){_BLOCK_SUFFIX[elem.cardinality]}"
    if isinstance(elem, Script):
        a = elem.action
        return f"astscript {{ set({a.target_variable},{a.source_attribute}); }}"
    raise TypeError(f"not an rhs node: {elem!r}")


# ---------------------------------------------------------------------------
# hierarchy resolution


def hierarchy(grammar, grammar_set):
    """The grammar and its transitive supergrammars, override order first.

    Depth-first over the extends lists, so a name collision between
    supergrammars resolves to the first one listed.
    """
    ordered = []
    seen = set()

    def visit(g):
        if g.fq_name in seen:
            return
        seen.add(g.fq_name)
        ordered.append(g)
        for super_name in g.extends_list:
            super_g = grammar_set.get(super_name)
            if super_g is None:
                raise UnresolvedSupergrammarError(
                    f"supergrammar {super_name!r} of {g.fq_name} is not loaded",
                    file=g.source_path,
                )
            visit(super_g)

    visit(grammar)
    return ordered


@dataclass
class Entry:
    kind: str  # "production" | "lexer" | "external" | "interface"
    grammar_fq: str
    decl: object


def effective_entries(grammar, grammar_set):
    """Visible names after inheritance: own declarations shadow supergrammars.

    Predefined lexer rules appear last, under their own names, unless
    shadowed.  Iteration order is hierarchy order then declaration order.
    """
    table = {}
    for g in hierarchy(grammar, grammar_set):
        for kind, decls in (
            ("production", g.productions),
            ("lexer", g.lexer_rules),
            ("external", g.externals),
            ("interface", g.interfaces),
        ):
            for decl in decls:
                if decl.name not in table:
                    table[decl.name] = Entry(kind=kind, grammar_fq=g.fq_name, decl=decl)
    for name, rule in PREDEFINED_LEXER_RULES.items():
        if name not in table:
            table[name] = Entry(kind="lexer", grammar_fq=None, decl=rule)
    return table


# ---------------------------------------------------------------------------
# validation


def validate_grammar(grammar, grammar_set):
    """Cross-reference checks over a grammar within its hierarchy.

    Returns diagnostics; an empty list means the grammar is well-formed.
    """
    diags = []
    file = grammar.source_path or "<input>"

    def report(level, code, message, pos=None):
        line, col = pos or (0, 0)
        diags.append(Diagnostic(level, code, message, file=file, line=line, col=col))

    try:
        entries = effective_entries(grammar, grammar_set)
    except UnresolvedSupergrammarError as err:
        report(ERROR_LEVEL, err.code, err.message)
        return diags

    for rule in grammar.lexer_rules:
        if rule.name != rule.name.upper():
            report(
                WARNING_LEVEL,
                "LexerRuleCase",
                f"lexer rule {rule.name!r} is not upper-case",
                rule.pos,
            )

    lexer_env = {
        name: e.decl.value_type for name, e in entries.items() if e.kind == "lexer"
    }
    global_vars = _script_targets(grammar, grammar_set)

    for iface in grammar.interfaces:
        for attr_name, type_name in iface.required_attributes:
            if resolve_value_type(type_name, lexer_env) is None:
                report(
                    ERROR_LEVEL,
                    "UnresolvedType",
                    f"interface {iface.name}: attribute {attr_name!r} has "
                    f"unknown type {type_name!r}",
                    iface.pos,
                )

    for production in grammar.productions:
        for iface_name in production.implements_list:
            entry = entries.get(iface_name)
            if entry is None or entry.kind != "interface":
                report(
                    ERROR_LEVEL,
                    "UnknownInterface",
                    f"production {production.name} implements unknown "
                    f"interface {iface_name!r}",
                    production.pos,
                )
        _check_rhs(production, entries, global_vars, report)
        _check_reference_kinds(production, entries, lexer_env, report)

    _check_override_attr_types(grammar, grammar_set, lexer_env, report)
    return diags


def resolve_value_type(type_name, lexer_env):
    """Map an attribute type spelling to a value type.

    Accepts the literal spellings Text and Int and the name of any visible
    lexer rule (including the predefined ones).
    """
    if type_name == "Text":
        return ValueType.TEXT
    if type_name == "Int":
        return ValueType.INT
    return lexer_env.get(type_name)


def _script_targets(grammar, grammar_set):
    targets = set()
    for g in hierarchy(grammar, grammar_set):
        for production in g.productions:
            for action in production.ast_scripts:
                targets.add(action.target_variable)
    return targets


def _check_rhs(production, entries, global_vars, report):
    def walk(seq, labels):
        for elem in seq:
            if isinstance(elem, Keyword):
                continue
            if isinstance(elem, Script):
                if elem.action.source_attribute not in labels:
                    report(
                        ERROR_LEVEL,
                        "AstScriptSource",
                        f"astscript in {production.name} reads "
                        f"{elem.action.source_attribute!r} before any such label",
                        elem.pos,
                    )
                continue
            if isinstance(elem, Block):
                inner = set()
                for alt in elem.alternatives:
                    branch = set(labels)
                    walk(alt, branch)
                    inner |= branch
                labels |= inner
                continue
            name = elem.rule_name
            entry = entries.get(name)
            if entry is None:
                report(
                    ERROR_LEVEL,
                    "UnknownNonterminal",
                    f"production {production.name} references unknown name {name!r}",
                    elem.pos,
                )
            if isinstance(elem, NonterminalRef) and elem.selector is not None:
                if entry is not None and entry.kind != "external":
                    report(
                        ERROR_LEVEL,
                        "InvalidSelector",
                        f"selector on {name!r} in {production.name}, which is "
                        f"not an external nonterminal",
                        elem.pos,
                    )
                sel = elem.selector
                if sel.kind is SelectorKind.LOCAL_ATTRIBUTE and sel.name not in labels:
                    report(
                        ERROR_LEVEL,
                        "UnresolvedSelector",
                        f"selector attribute {sel.name!r} in {production.name} "
                        f"is not a preceding label",
                        elem.pos,
                    )
                if sel.kind is SelectorKind.GLOBAL_VARIABLE and sel.name not in global_vars:
                    report(
                        ERROR_LEVEL,
                        "UnresolvedSelector",
                        f"selector variable {sel.name!r} in {production.name} "
                        f"is never set by an astscript",
                        elem.pos,
                    )
            if elem.label:
                labels.add(elem.label)

    for alt in production.rhs.alternatives:
        walk(alt, set())


def reference_name(elem):
    """Attribute or composition name a reference fills."""
    return elem.label or lower_first(elem.rule_name)


def production_attr_types(production, entries, lexer_env):
    """Name -> value type for all lexer references of one production.

    Also used to detect one name being filled with conflicting value types
    or with both tokens and subtrees.
    """
    attr_types = {}
    comp_names = set()
    conflicts = []

    def walk(seq):
        for elem in seq:
            if isinstance(elem, Block):
                for alt in elem.alternatives:
                    walk(alt)
                continue
            if isinstance(elem, (LexerRef, NonterminalRef)):
                name = reference_name(elem)
                entry = entries.get(elem.rule_name)
                is_lexer = isinstance(elem, LexerRef) or (
                    entry is not None and entry.kind == "lexer"
                )
                if is_lexer:
                    value_type = lexer_env.get(elem.rule_name)
                    if value_type is None:
                        continue
                    if name in comp_names:
                        conflicts.append((name, "mixed", elem.pos))
                    elif name in attr_types and attr_types[name] is not value_type:
                        conflicts.append((name, "type", elem.pos))
                    else:
                        attr_types[name] = value_type
                else:
                    if name in attr_types:
                        conflicts.append((name, "mixed", elem.pos))
                    comp_names.add(name)

    for alt in production.rhs.alternatives:
        walk(alt)
    return attr_types, comp_names, conflicts


def _check_reference_kinds(production, entries, lexer_env, report):
    _, _, conflicts = production_attr_types(production, entries, lexer_env)
    for name, kind, pos in conflicts:
        if kind == "mixed":
            report(
                ERROR_LEVEL,
                "DuplicateName",
                f"name {name!r} in {production.name} is used for both an "
                f"attribute and a composition",
                pos,
            )
        else:
            report(
                ERROR_LEVEL,
                "AttributeTypeConflict",
                f"attribute {name!r} in {production.name} is filled with "
                f"conflicting value types",
                pos,
            )


def _check_override_attr_types(grammar, grammar_set, lexer_env, report):
    """An overriding production may not change an inherited attribute's type."""
    supers = hierarchy(grammar, grammar_set)[1:]
    if not supers:
        return
    entries = effective_entries(grammar, grammar_set)
    for production in grammar.productions:
        own_attrs, _, _ = production_attr_types(production, entries, lexer_env)
        for super_g in supers:
            super_prod = super_g.production(production.name)
            if super_prod is None:
                continue
            super_entries = effective_entries(super_g, grammar_set)
            super_env = {
                name: e.decl.value_type
                for name, e in super_entries.items()
                if e.kind == "lexer"
            }
            super_attrs, _, _ = production_attr_types(super_prod, super_entries, super_env)
            for name, value_type in super_attrs.items():
                if name in own_attrs and own_attrs[name] is not value_type:
                    report(
                        ERROR_LEVEL,
                        "AttributeTypeConflict",
                        f"override {production.name} changes inherited "
                        f"attribute {name!r} from {value_type.value} to "
                        f"{own_attrs[name].value}",
                        production.pos,
                    )


# ---------------------------------------------------------------------------
# loading grammar sets


def load_grammar_set(root_paths, diagnostics=None):
    """Load grammar files into a map keyed by fully qualified name.

    All extends references must resolve inside the returned map and the
    inheritance graph must be acyclic.
    """
    grammar_set = {}
    for path in root_paths:
        path = Path(path)
        grammar = parse_grammar(path.read_text(encoding="utf-8"), source_path=str(path))
        fq = grammar.fq_name
        if fq in grammar_set:
            raise DuplicateNameError(
                f"grammar {fq!r} is defined by both "
                f"{grammar_set[fq].source_path} and {path}",
                file=str(path),
            )
        grammar_set[fq] = grammar
        expected_suffix = Path(*grammar.package_path, grammar.name + ".mc")
        if diagnostics is not None and not str(path).endswith(str(expected_suffix)):
            diagnostics.append(
                Diagnostic(
                    WARNING_LEVEL,
                    "PackagePath",
                    f"file path does not mirror package path of {fq}",
                    file=str(path),
                )
            )

    for grammar in grammar_set.values():
        for super_name in grammar.extends_list:
            if super_name not in grammar_set:
                raise UnresolvedSupergrammarError(
                    f"supergrammar {super_name!r} of {grammar.fq_name} not found",
                    file=grammar.source_path,
                )

    _check_acyclic(grammar_set)
    return grammar_set


def _check_acyclic(grammar_set):
    state = {}  # fq -> "visiting" | "done"

    def visit(fq, trail):
        if state.get(fq) == "done":
            return
        if state.get(fq) == "visiting":
            cycle = " -> ".join(trail[trail.index(fq) :] + [fq])
            raise CyclicInheritanceError(f"cyclic grammar inheritance: {cycle}")
        state[fq] = "visiting"
        for super_name in grammar_set[fq].extends_list:
            visit(super_name, trail + [fq])
        state[fq] = "done"

    for fq in grammar_set:
        visit(fq, [])
