"""Interpretive recursive-descent parse engine.

Grammars are executed directly (no generated code), which is what allows
fragments to be rebound at configuration time.  Alternatives are decided
by one-token prediction against precomputed first sets; where prediction
is ambiguous the engine falls back to ordered choice with backtracking to
a queue mark.  Token consumption inside a speculative region is
provisional and is committed only when the region succeeds, so the
committed queue position always reflects settled parse progress; that is
the precondition for switching lexers at external nonterminals.
"""

import json
from dataclasses import dataclass

from .analysis import GrammarAnalysis, WILDCARD, kind_matches
from .errors import (
    EmbeddingInSpeculationError,
    InterfaceNotSatisfiedError,
    LexError,
    NoViableAlternativeError,
    ParseError,
    UnboundExternalError,
)
from .grammar_model import (
    Block,
    BlockCardinality,
    Keyword,
    NonterminalRef,
    Script,
    SelectorKind,
    reference_name,
)
from .lexing import CharQueue, EOF, Token, lex_at
from .schema import Cardinality, TypeKind, ValueType

UNLEXABLE = "<unlexable>"


@dataclass
class AstNode:
    type_name: str
    attributes: dict
    children: dict  # composition name -> AstNode or list of AstNode
    span: tuple


def ast_equal(a, b):
    """Structural equality, ignoring source spans."""
    if a.type_name != b.type_name or a.attributes != b.attributes:
        return False
    if a.children.keys() != b.children.keys():
        return False
    for name, value in a.children.items():
        other = b.children[name]
        if isinstance(value, list) != isinstance(other, list):
            return False
        left = value if isinstance(value, list) else [value]
        right = other if isinstance(other, list) else [other]
        if len(left) != len(right):
            return False
        if not all(ast_equal(x, y) for x, y in zip(left, right)):
            return False
    return True


@dataclass
class FragmentCtx:
    alias: str
    grammar_fq: str
    lexer: object
    analysis: object


def describe_token(tok):
    if tok.kind == EOF:
        return "end of input"
    if tok.kind == UNLEXABLE:
        return "unlexable input"
    return f"{tok.text!r}"


class _SpanFrame:
    __slots__ = ("first_start", "last_end")

    def __init__(self):
        self.first_start = None
        self.last_end = None


class _NodeBuilder:
    def __init__(self, node_type):
        self.node_type = node_type
        self.attrs = {}
        self.children = {}
        self.raw_texts = {}
        self._attr_specs = {a.name: a for a in node_type.attributes}
        self._comp_specs = {c.name: c for c in node_type.compositions}

    def add_attr(self, name, value, raw_text):
        self.raw_texts[name] = raw_text
        spec = self._attr_specs.get(name)
        if spec is not None and spec.cardinality is Cardinality.LIST:
            self.attrs.setdefault(name, []).append(value)
        else:
            self.attrs[name] = value

    def add_child(self, name, node):
        spec = self._comp_specs.get(name)
        if spec is not None and spec.cardinality is Cardinality.LIST:
            self.children.setdefault(name, []).append(node)
        else:
            self.children[name] = node

    def raw(self, name):
        return self.raw_texts.get(name)

    def snapshot(self):
        attrs = {k: list(v) if isinstance(v, list) else v for k, v in self.attrs.items()}
        children = {
            k: list(v) if isinstance(v, list) else v for k, v in self.children.items()
        }
        return attrs, children, dict(self.raw_texts)

    def restore(self, snap):
        self.attrs, self.children, self.raw_texts = snap

    def finish(self, span):
        attrs = {}
        for spec in self.node_type.attributes:
            if spec.cardinality is Cardinality.LIST:
                attrs[spec.name] = self.attrs.get(spec.name, [])
            elif spec.name in self.attrs:
                attrs[spec.name] = self.attrs[spec.name]
            elif spec.cardinality is Cardinality.ONE:
                raise RuntimeError(
                    f"attribute {spec.name} of {self.node_type.fq_name} not filled"
                )
        children = {}
        for spec in self.node_type.compositions:
            if spec.cardinality is Cardinality.LIST:
                children[spec.name] = self.children.get(spec.name, [])
            elif spec.name in self.children:
                children[spec.name] = self.children[spec.name]
            elif spec.cardinality is Cardinality.ONE:
                raise RuntimeError(
                    f"composition {spec.name} of {self.node_type.fq_name} not filled"
                )
        return AstNode(self.node_type.fq_name, attrs, children, span)


class ParseSession:
    """One parse of one input over a composed language.

    With record_events=True the queue logs lex/consume/reset events;
    with record_tokens=True every committed token is logged together with
    the fragment alias whose lexer produced it.
    """

    def __init__(self, composed, text, record_events=False, record_tokens=False):
        self.composed = composed
        self.queue = CharQueue(text, record_events=record_events)
        self.globals = {}
        self.cursor = 0
        self.pending = []
        self.token_log = [] if record_tokens else None
        self._frames = []

    def fragment_ctx(self, alias):
        grammar_fq = self.composed.fragments[alias]
        return FragmentCtx(
            alias,
            grammar_fq,
            self.composed.lexers[grammar_fq],
            self.composed.analyses[grammar_fq],
        )

    def run(self):
        _, start_production = self.composed.start
        ctx = self.fragment_ctx(self.composed.start_alias)
        node = self._production(ctx, start_production)
        tok = self._peek(ctx)
        if tok.kind != EOF:
            raise ParseError(
                f"expected end of input, found {describe_token(tok)}",
                pos=tok.start_pos,
                expected=(EOF,),
                found=tok,
            )
        return node

    # -- token plumbing ----------------------------------------------------

    def _peek(self, ctx):
        return lex_at(ctx.lexer, self.queue, self.cursor)

    def _decision_token(self, ctx):
        """Lookahead for prediction; tolerates text this lexer cannot lex.

        At a decision point, unlexable input means the token belongs to a
        differently lexed region (e.g. an upcoming embedded fragment); it
        matches no first set.  A genuine lex error resurfaces at the next
        committed match.
        """
        try:
            return self._peek(ctx)
        except LexError as err:
            pos = err.pos if err.pos is not None else self.cursor
            return Token(UNLEXABLE, "", None, pos, pos)

    def _advance(self, ctx, tok):
        self.cursor = tok.end_pos
        for frame in self._frames:
            if frame.first_start is None:
                frame.first_start = tok.start_pos
            frame.last_end = tok.end_pos
        if self.queue.marks:
            self.pending.append(tok)
        else:
            self.queue.consume(tok)
        if self.token_log is not None:
            self.token_log.append((ctx.alias, tok))

    def _match(self, ctx, kind):
        tok = self._peek(ctx)
        if tok.kind != kind:
            raise ParseError(
                f"expected {kind!r}, found {describe_token(tok)}",
                pos=tok.start_pos,
                expected=(kind,),
                found=tok,
            )
        self._advance(ctx, tok)
        return tok

    def _flush_pending(self):
        for tok in self.pending:
            self.queue.consume(tok)
        self.pending.clear()

    def _speculate(self, attempt, builder=None):
        """Run attempt under a queue mark; roll everything back on failure."""
        saved_cursor = self.cursor
        saved_pending = len(self.pending)
        saved_globals = dict(self.globals)
        saved_frames = [(f.first_start, f.last_end) for f in self._frames]
        saved_log = len(self.token_log) if self.token_log is not None else 0
        snap = builder.snapshot() if builder is not None else None
        self.queue.push_mark(self.cursor)
        try:
            attempt()
        except (ParseError, LexError):
            self.queue.pop_mark()
            self.cursor = saved_cursor
            del self.pending[saved_pending:]
            self.globals = saved_globals
            for frame, (first_start, last_end) in zip(self._frames, saved_frames):
                frame.first_start = first_start
                frame.last_end = last_end
            if self.token_log is not None:
                del self.token_log[saved_log:]
            if builder is not None:
                builder.restore(snap)
            return False
        self.queue.pop_mark()
        if not self.queue.marks:
            self._flush_pending()
        return True

    # -- grammar interpretation ---------------------------------------------

    def _production(self, ctx, name):
        grammar_fq, prod = ctx.analysis.production_entry(name)
        node_type = self.composed.schema.types[f"{grammar_fq}.{name}"]
        builder = _NodeBuilder(node_type)
        frame = _SpanFrame()
        self._frames.append(frame)
        entry_cursor = self.cursor
        try:
            self._block(ctx, prod.rhs, builder)
        finally:
            self._frames.pop()
        if frame.first_start is None:
            span = (entry_cursor, entry_cursor)
        else:
            span = (frame.first_start, frame.last_end)
        return builder.finish(span)

    def _seq(self, ctx, seq, builder):
        for elem in seq:
            self._element(ctx, elem, builder)

    def _element(self, ctx, elem, builder):
        if isinstance(elem, Keyword):
            self._match(ctx, elem.text)
        elif isinstance(elem, Script):
            raw = builder.raw(elem.action.source_attribute)
            if raw is not None:
                self.globals[elem.action.target_variable] = raw
        elif isinstance(elem, Block):
            self._block(ctx, elem, builder)
        else:
            entry = ctx.analysis.entry(elem.rule_name)
            if entry is None:
                raise ParseError(
                    f"unresolved reference {elem.rule_name!r}", pos=self.cursor
                )
            if entry.kind == "lexer":
                tok = self._match(ctx, elem.rule_name)
                builder.add_attr(reference_name(elem), tok.mapped_value, tok.text)
            elif entry.kind == "production":
                child = self._production(ctx, elem.rule_name)
                builder.add_child(reference_name(elem), child)
            elif entry.kind == "interface":
                child = self._interface(ctx, elem)
                builder.add_child(reference_name(elem), child)
            else:
                child = self._external(ctx, elem, entry.decl, builder)
                builder.add_child(reference_name(elem), child)

    def _block(self, ctx, block, builder):
        info = ctx.analysis.block_info(block)
        card = block.cardinality
        if card is BlockCardinality.ONE:
            self.predict(ctx, block, info, builder)
        elif card is BlockCardinality.OPTIONAL:
            self._optional(ctx, block, info, builder)
        elif card is BlockCardinality.PLUS:
            self.predict(ctx, block, info, builder)
            self._iterate(ctx, block, info, builder)
        else:
            self._iterate(ctx, block, info, builder)

    def _candidates(self, info, kind):
        return [
            i
            for i in range(len(info.alt_firsts))
            if kind_matches(kind, info.alt_firsts[i]) or info.alt_nullable[i]
        ]

    def predict(self, ctx, block, info, builder):
        """Pick and parse one alternative; returns the chosen index.

        Unique one-token prediction parses committed; otherwise candidates
        are attempted in declaration order and the first that parses wins.
        """
        tok = self._decision_token(ctx)
        candidates = self._candidates(info, tok.kind)
        if not candidates:
            expected = sorted(set().union(*info.alt_firsts) - {WILDCARD})
            raise NoViableAlternativeError(
                f"no alternative matches {describe_token(tok)}",
                pos=tok.start_pos,
                expected=expected,
                found=tok,
            )
        for index in candidates[:-1]:
            attempt = lambda i=index: self._seq(ctx, block.alternatives[i], builder)
            if self._speculate(attempt, builder):
                return index
        last = candidates[-1]
        self._seq(ctx, block.alternatives[last], builder)
        return last

    def _optional(self, ctx, block, info, builder):
        tok = self._decision_token(ctx)
        if not (kind_matches(tok.kind, info.content_first) or info.content_nullable):
            return
        if kind_matches(tok.kind, info.follow):
            # The token would also be legal after the block: attempt
            # greedily, skip on failure.
            self._speculate(lambda: self.predict(ctx, block, info, builder), builder)
        else:
            self.predict(ctx, block, info, builder)

    def _iterate(self, ctx, block, info, builder):
        while True:
            tok = self._decision_token(ctx)
            if not kind_matches(tok.kind, info.content_first):
                break
            before = self.cursor
            if kind_matches(tok.kind, info.follow):
                ok = self._speculate(
                    lambda: self.predict(ctx, block, info, builder), builder
                )
                if not ok:
                    break
            else:
                self.predict(ctx, block, info, builder)
            if self.cursor == before:
                break

    def _interface(self, ctx, elem):
        name = elem.rule_name
        implementors = ctx.analysis.implementors(name)
        tok = self._decision_token(ctx)
        candidates = [
            p
            for p in implementors
            if kind_matches(tok.kind, ctx.analysis.first[p]) or ctx.analysis.nullable[p]
        ]
        if not candidates:
            firsts = [ctx.analysis.first[p] for p in implementors]
            expected = sorted(set().union(frozenset(), *firsts) - {WILDCARD})
            raise NoViableAlternativeError(
                f"no implementation of {name} matches {describe_token(tok)}",
                pos=tok.start_pos,
                expected=expected,
                found=tok,
            )
        result = []
        for prod_name in candidates[:-1]:
            attempt = lambda p=prod_name: result.append(self._production(ctx, p))
            if self._speculate(attempt):
                return result[-1]
        return self._production(ctx, candidates[-1])

    def _external(self, ctx, elem, decl, builder):
        """Switch to the bound fragment's parser/lexer pair and back."""
        if self.queue.marks:
            raise EmbeddingInSpeculationError(
                f"external {decl.name} reached during speculative parsing; "
                f"the embedding point must be predictable with one token",
                pos=self.cursor,
            )
        key = None
        selector = getattr(elem, "selector", None)
        if selector is not None:
            if selector.kind is SelectorKind.GLOBAL_VARIABLE:
                key = self.globals.get(selector.name)
            else:
                key = builder.raw(selector.name)
            if key is None:
                raise UnboundExternalError(
                    f"selector {selector.name!r} for external {decl.name} has no value",
                    pos=self.queue.committed_pos,
                    external=decl.name,
                )
        self.cursor = self.queue.reset_for_embedding()
        binding = self.composed.lookup_binding(ctx.alias, decl.name, key)
        if binding is None:
            if key is None:
                message = f"external {decl.name} has no binding"
            else:
                message = f"external {decl.name} has no binding registered under {key!r}"
            raise UnboundExternalError(
                message, pos=self.cursor, external=decl.name, key=key
            )
        child_ctx = self.fragment_ctx(binding.alias)
        child = self._production(child_ctx, binding.production)
        # Reverse switch: the host lexer resumes at the committed position.
        self.cursor = self.queue.reset_for_embedding()
        if binding.iface_fq is not None and not binding.structural:
            if not self.composed.schema.implements(child.type_name, binding.iface_fq):
                raise InterfaceNotSatisfiedError(
                    f"embedded node {child.type_name} does not implement "
                    f"{binding.iface_fq}",
                    pos=child.span[0],
                )
        return child


def parse(composed, text):
    """Parse input text with the composed language's start production."""
    return ParseSession(composed, text).run()


def parse_production(composed, alias, production_name, text):
    """Parse text against one production of one bound fragment."""
    session = ParseSession(composed, text)
    ctx = session.fragment_ctx(alias)
    node = session._production(ctx, production_name)
    tok = session._peek(ctx)
    if tok.kind != EOF:
        raise ParseError(
            f"expected end of input, found {describe_token(tok)}",
            pos=tok.start_pos,
            expected=(EOF,),
            found=tok,
        )
    return node


# ---------------------------------------------------------------------------
# conflict analysis


@dataclass(frozen=True)
class ConflictReport:
    grammar: str
    production: str
    site: str  # "alternatives" or "interface <name>"
    alternative_indexes: tuple
    overlap: tuple

    def render(self):
        indexes = ",".join(str(i) for i in self.alternative_indexes)
        overlap = ",".join(self.overlap)
        return (
            f"{self.production} [{self.site}] alternatives {indexes} "
            f"overlap on {overlap}"
        )


def _first_overlap(a, b):
    if WILDCARD in a and WILDCARD in b:
        return {WILDCARD}
    if WILDCARD in a:
        return set(b)
    if WILDCARD in b:
        return set(a)
    return set(a & b)


def analyze_conflicts(grammar, grammar_set):
    """Decision points whose alternatives overlap on one-token lookahead.

    Externals count as wildcard; interface references are decision points
    over their implementing productions.
    """
    analysis = GrammarAnalysis(grammar, grammar_set)
    reports = []

    def check_alternatives(prod_name, site, firsts):
        overlap = set()
        indexes = set()
        for i in range(len(firsts)):
            for j in range(i + 1, len(firsts)):
                inter = _first_overlap(firsts[i], firsts[j])
                if inter:
                    overlap |= inter
                    indexes |= {i, j}
        if indexes:
            reports.append(
                ConflictReport(
                    grammar=grammar.fq_name,
                    production=prod_name,
                    site=site,
                    alternative_indexes=tuple(sorted(indexes)),
                    overlap=tuple(sorted(overlap)),
                )
            )

    def walk(prod_name, block):
        if len(block.alternatives) > 1:
            info = analysis.block_info(block)
            check_alternatives(prod_name, "alternatives", info.alt_firsts)
        for alt in block.alternatives:
            for elem in alt:
                if isinstance(elem, Block):
                    walk(prod_name, elem)
                elif isinstance(elem, NonterminalRef):
                    entry = analysis.entry(elem.rule_name)
                    if entry is not None and entry.kind == "interface":
                        implementors = analysis.implementors(elem.rule_name)
                        if len(implementors) > 1:
                            firsts = [analysis.first[p] for p in implementors]
                            check_alternatives(
                                prod_name, f"interface {elem.rule_name}", firsts
                            )

    for name, (_, prod) in analysis.productions.items():
        walk(name, prod.rhs)
    return reports


# ---------------------------------------------------------------------------
# AST serialization and conformance


def _node_payload(node):
    children = {}
    for name, value in node.children.items():
        if isinstance(value, list):
            children[name] = [_node_payload(c) for c in value]
        else:
            children[name] = _node_payload(value)
    return {
        "type": node.type_name,
        "attributes": dict(node.attributes),
        "children": children,
        "span": list(node.span),
    }


def ast_to_json(node, compact=False):
    """Canonical AST JSON: sorted keys, parse-ordered arrays."""
    payload = _node_payload(node)
    if compact:
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return json.dumps(payload, sort_keys=True, indent=2)


def ast_from_json(text):
    return _node_from_payload(json.loads(text))


def _node_from_payload(payload):
    children = {}
    for name, value in payload["children"].items():
        if isinstance(value, list):
            children[name] = [_node_from_payload(c) for c in value]
        else:
            children[name] = _node_from_payload(value)
    return AstNode(
        type_name=payload["type"],
        attributes=dict(payload["attributes"]),
        children=children,
        span=tuple(payload["span"]),
    )


def _child_conforms(schema, child_fq, target):
    """Nominal conformance, or structural satisfaction of an interface.

    Handwritten interfaces have no implements relation in any grammar;
    a child conforms when it carries the interface's required attributes,
    which is exactly what the binder verified.
    """
    if schema.conforms_to(child_fq, target):
        return True
    target_node = schema.types.get(target)
    if target_node is None or target_node.kind is not TypeKind.INTERFACE:
        return False
    available = schema.all_attributes(child_fq)
    for required in target_node.attributes:
        have = available.get(required.name)
        if have is None or have.value_type is not required.value_type:
            return False
    return True


def validate_ast(node, schema):
    """Schema conformance check; returns a list of violation messages."""
    problems = []

    def check(node, path):
        node_type = schema.types.get(node.type_name)
        if node_type is None:
            problems.append(f"{path}: unknown type {node.type_name}")
            return
        attr_specs = schema.all_attributes(node.type_name)
        comp_specs = schema.all_compositions(node.type_name)
        for name, value in node.attributes.items():
            spec = attr_specs.get(name)
            if spec is None:
                problems.append(f"{path}: unknown attribute {name}")
                continue
            values = value if isinstance(value, list) else [value]
            if spec.cardinality is Cardinality.LIST and not isinstance(value, list):
                problems.append(f"{path}: attribute {name} should be a list")
            if spec.cardinality is not Cardinality.LIST and isinstance(value, list):
                problems.append(f"{path}: attribute {name} should be scalar")
            if spec.min_one and isinstance(value, list) and not value:
                problems.append(f"{path}: attribute {name} requires at least one value")
            for v in values:
                if spec.value_type is ValueType.INT and not isinstance(v, int):
                    problems.append(f"{path}: attribute {name} expects Int")
                if spec.value_type is ValueType.TEXT and not isinstance(v, str):
                    problems.append(f"{path}: attribute {name} expects Text")
        for spec in node_type.attributes:
            if spec.cardinality is Cardinality.ONE and spec.name not in node.attributes:
                problems.append(f"{path}: missing attribute {spec.name}")
            if spec.cardinality is Cardinality.LIST and spec.name not in node.attributes:
                problems.append(f"{path}: missing list attribute {spec.name}")
        for name, value in node.children.items():
            spec = comp_specs.get(name)
            if spec is None:
                problems.append(f"{path}: unknown composition {name}")
                continue
            children = value if isinstance(value, list) else [value]
            if spec.cardinality is Cardinality.LIST and not isinstance(value, list):
                problems.append(f"{path}: composition {name} should be a list")
            if spec.cardinality is not Cardinality.LIST and isinstance(value, list):
                problems.append(f"{path}: composition {name} should be scalar")
            if spec.min_one and isinstance(value, list) and not value:
                problems.append(f"{path}: composition {name} requires at least one child")
            for child in children:
                if not _child_conforms(schema, child.type_name, spec.target):
                    problems.append(
                        f"{path}: child {name} of type {child.type_name} does not "
                        f"conform to {spec.target}"
                    )
                if not (node.span[0] <= child.span[0] and child.span[1] <= node.span[1]):
                    problems.append(f"{path}: child {name} span escapes parent span")
                check(child, f"{path}.{name}")
        for spec in node_type.compositions:
            if spec.cardinality is Cardinality.ONE and spec.name not in node.children:
                problems.append(f"{path}: missing composition {spec.name}")
            if spec.cardinality is Cardinality.LIST and spec.name not in node.children:
                problems.append(f"{path}: missing list composition {spec.name}")

    check(node, "$")
    return problems
