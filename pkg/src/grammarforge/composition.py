"""Language combination: the configuration DSL and the binder.

A composition config names a start production and maps external
nonterminals of bound fragments to productions of other fragments,
optionally registered under selector keys.  Binding builds lexers and
schemas for every involved grammar (reusing cached instances, so no
fragment is rebuilt) and verifies interface constraints up front.
"""

from dataclasses import dataclass, field

from .analysis import EOF_MARK, GrammarAnalysis, WILDCARD
from .errors import (
    Diagnostic,
    DuplicateAliasError,
    InterfaceNotSatisfiedError,
    MissingStartError,
    UnresolvedBindingError,
    WARNING_LEVEL,
)
from .grammar_model import (
    Block,
    NonterminalRef,
    TokenScanner,
    ValueType,
    effective_entries,
    resolve_value_type,
)
from .lexing import build_lexer
from .schema import (
    AttributeSpec,
    Cardinality,
    NodeType,
    Schema,
    TypeKind,
    derive_schema,
)


@dataclass
class StartDecl:
    grammar_fq: str
    production: str
    alias: str


@dataclass
class EmbeddingDecl:
    source_grammar_fq: str
    source_production: str
    alias: str
    target_alias: str
    target_external: str
    key: str = None  # registration name for selector dispatch


@dataclass
class HandwrittenInterfaceDef:
    qname: str
    required_attributes: list = field(default_factory=list)  # (name, ValueType)


@dataclass
class CompositionConfig:
    start: StartDecl = None
    embeddings: list = field(default_factory=list)
    interface_defs: list = field(default_factory=list)


def parse_config(text, source_path=None):
    """Parse a combination config; see the grammar in the README."""
    s = TokenScanner(text, file=source_path or "<config>")
    config = CompositionConfig()
    aliases = set()
    binding_keys = set()
    if s.peek().kind == "eof":
        s.fail("empty configuration")
    while s.peek().kind != "eof":
        if s.at_word("interface"):
            s.next()
            qname = ".".join(s.parse_qname("interface name"))
            attrs = []
            if s.at_op("="):
                s.next()
                attrs.append(_parse_config_attr(s))
                while s.at_op(","):
                    s.next()
                    attrs.append(_parse_config_attr(s))
            s.expect_op(";")
            if any(d.qname == qname for d in config.interface_defs):
                s.fail(f"interface {qname} declared twice")
            config.interface_defs.append(
                HandwrittenInterfaceDef(qname=qname, required_attributes=attrs)
            )
            continue
        qprod = s.parse_qname("qualified production")
        if len(qprod) < 2:
            s.fail("expected grammar-qualified production name")
        grammar_fq = ".".join(qprod[:-1])
        production = qprod[-1]
        alias_tok = s.expect_ident("alias")
        if alias_tok.text in aliases:
            raise DuplicateAliasError(
                f"alias {alias_tok.text!r} declared twice",
                file=s.file,
                line=alias_tok.line,
                col=alias_tok.col,
            )
        aliases.add(alias_tok.text)
        if s.at_op("<"):
            s.expect_op("<")
            s.expect_op("<")
            s.expect_word("start")
            s.expect_op(">")
            s.expect_op(">")
            s.expect_op(";")
            if config.start is not None:
                s.fail("more than one start declaration")
            config.start = StartDecl(
                grammar_fq=grammar_fq, production=production, alias=alias_tok.text
            )
            continue
        s.expect_word("in")
        target_alias = s.expect_ident("target alias").text
        s.expect_op(".")
        target_external = s.expect_ident("external name").text
        key = None
        if s.at_word("when"):
            s.next()
            key_tok = s.peek()
            if key_tok.kind != "string":
                s.fail("expected string literal after 'when'")
            s.next()
            key = key_tok.text
        s.expect_op(";")
        binding_key = (target_alias, target_external, key)
        if binding_key in binding_keys:
            raise DuplicateAliasError(
                f"external {target_external} of {target_alias} already bound "
                f"under key {key!r}",
                file=s.file,
                line=alias_tok.line,
                col=alias_tok.col,
            )
        binding_keys.add(binding_key)
        config.embeddings.append(
            EmbeddingDecl(
                source_grammar_fq=grammar_fq,
                source_production=production,
                alias=alias_tok.text,
                target_alias=target_alias,
                target_external=target_external,
                key=key,
            )
        )
    return config


_CONFIG_TYPE_ENV = {"IDENT": ValueType.TEXT, "STRING": ValueType.TEXT}


def _parse_config_attr(s):
    name = s.expect_ident("attribute name").text
    s.expect_op(":")
    type_tok = s.expect_ident("attribute type")
    value_type = resolve_value_type(type_tok.text, _CONFIG_TYPE_ENV)
    if value_type is None:
        s.fail(f"unknown attribute type {type_tok.text!r}", type_tok)
    return (name, value_type)


# ---------------------------------------------------------------------------
# binding


@dataclass
class Binding:
    alias: str
    grammar_fq: str
    production: str
    iface_fq: str = None
    structural: bool = False


@dataclass
class ComposedLanguage:
    grammar_set: dict
    schema: Schema
    start: tuple  # (grammar fq, production name)
    start_alias: str
    fragments: dict  # alias -> grammar fq
    binding_table: dict  # (target alias, external, key) -> Binding
    lexers: dict  # grammar fq -> LexerInstance
    analyses: dict  # grammar fq -> GrammarAnalysis
    grammar_schemas: dict  # grammar fq -> per-grammar Schema
    warnings: list = field(default_factory=list)

    def lookup_binding(self, alias, external, key):
        return self.binding_table.get((alias, external, key))


def bind(config, grammar_set):
    """Combine loaded grammars into an executable composed language."""
    if config.start is None:
        raise MissingStartError("configuration has no start declaration")

    fragments = {}
    for decl in [config.start] + config.embeddings:
        grammar_fq = (
            decl.grammar_fq if isinstance(decl, StartDecl) else decl.source_grammar_fq
        )
        if grammar_fq not in grammar_set:
            raise UnresolvedBindingError(
                f"grammar {grammar_fq!r} referenced by alias {decl.alias!r} "
                f"is not loaded"
            )
        fragments[decl.alias] = grammar_fq

    entry_tables = {
        fq: effective_entries(grammar_set[fq], grammar_set)
        for fq in set(fragments.values())
    }

    def require_production(grammar_fq, name, alias):
        entry = entry_tables[grammar_fq].get(name)
        if entry is None or entry.kind != "production":
            raise UnresolvedBindingError(
                f"{grammar_fq} has no production {name!r} (alias {alias!r})"
            )
        return entry

    require_production(config.start.grammar_fq, config.start.production, config.start.alias)
    for emb in config.embeddings:
        require_production(emb.source_grammar_fq, emb.source_production, emb.alias)

    grammar_schemas = {}
    merged_types = {}
    for fq in dict.fromkeys(fragments.values()):
        schema = derive_schema(grammar_set[fq], grammar_set)
        grammar_schemas[fq] = schema
        merged_types.update(schema.types)
    for iface_def in config.interface_defs:
        package, _, name = iface_def.qname.rpartition(".")
        merged_types[iface_def.qname] = NodeType(
            name=name,
            package=package,
            kind=TypeKind.INTERFACE,
            attributes=[
                AttributeSpec(attr_name, value_type, Cardinality.ONE)
                for attr_name, value_type in iface_def.required_attributes
            ],
        )
    merged = Schema(types=merged_types, root_grammar=config.start.grammar_fq)

    binding_table = {}
    binding_modes = {}
    for emb in config.embeddings:
        target_grammar_fq = fragments.get(emb.target_alias)
        if target_grammar_fq is None:
            raise UnresolvedBindingError(
                f"embedding {emb.alias!r} targets unknown alias {emb.target_alias!r}"
            )
        ext_entry = entry_tables[target_grammar_fq].get(emb.target_external)
        if ext_entry is None or ext_entry.kind != "external":
            raise UnresolvedBindingError(
                f"{target_grammar_fq} has no external nonterminal "
                f"{emb.target_external!r}"
            )
        mode = "default" if emb.key is None else "keyed"
        mode_key = (emb.target_alias, emb.target_external)
        if binding_modes.setdefault(mode_key, mode) != mode:
            raise UnresolvedBindingError(
                f"external {emb.target_external} of {emb.target_alias} mixes "
                f"keyed and default bindings"
            )
        iface_fq, structural = _verify_binding(
            emb, ext_entry.decl, target_grammar_fq, entry_tables, merged, config
        )
        binding_table[(emb.target_alias, emb.target_external, emb.key)] = Binding(
            alias=emb.alias,
            grammar_fq=emb.source_grammar_fq,
            production=emb.source_production,
            iface_fq=iface_fq,
            structural=structural,
        )

    lexers = {}
    follow_roots = {fq: {} for fq in set(fragments.values())}
    follow_roots[config.start.grammar_fq].setdefault(config.start.production, set()).add(
        EOF_MARK
    )
    for emb in config.embeddings:
        follow_roots[emb.source_grammar_fq].setdefault(
            emb.source_production, set()
        ).add(WILDCARD)
    analyses = {}
    for fq in set(fragments.values()):
        grammar = grammar_set[fq]
        lexers[fq] = build_lexer(grammar, grammar_set)
        analyses[fq] = GrammarAnalysis(
            grammar, grammar_set, schema=merged, follow_roots=follow_roots[fq]
        )

    composed = ComposedLanguage(
        grammar_set=grammar_set,
        schema=merged,
        start=(config.start.grammar_fq, config.start.production),
        start_alias=config.start.alias,
        fragments=fragments,
        binding_table=binding_table,
        lexers=lexers,
        analyses=analyses,
        grammar_schemas=grammar_schemas,
    )
    composed.warnings.extend(
        _unbound_external_warnings(composed, entry_tables)
    )
    return composed


def _external_required_interface_fq(ext, entries):
    name = ext.required_interface
    if "." not in name:
        entry = entries.get(name)
        if entry is not None and entry.kind == "interface":
            return f"{entry.grammar_fq}.{name}", False
        return name, True
    return name, True


def _verify_binding(emb, ext, target_grammar_fq, entry_tables, merged, config):
    """Check that the bound production satisfies the external's interface.

    Grammar-declared interfaces check the declared implements relation plus
    attributes; handwritten ones are checked structurally against the
    config's interface definition.
    """
    if not ext.required_interface:
        return None, False
    iface_fq, handwritten = _external_required_interface_fq(
        ext, entry_tables[target_grammar_fq]
    )
    source_entry = entry_tables[emb.source_grammar_fq][emb.source_production]
    source_type_fq = f"{source_entry.grammar_fq}.{emb.source_production}"
    available = merged.all_attributes(source_type_fq)

    if handwritten:
        iface_def = next(
            (d for d in config.interface_defs if d.qname == iface_fq), None
        )
        required = iface_def.required_attributes if iface_def else []
        for attr_name, value_type in required:
            have = available.get(attr_name)
            if have is None or have.value_type is not value_type:
                raise InterfaceNotSatisfiedError(
                    f"{source_type_fq} bound to {emb.target_external} lacks "
                    f"attribute {attr_name}:{value_type.value} required by "
                    f"{iface_fq}"
                )
        return iface_fq, True

    short_name = iface_fq.rpartition(".")[2]
    declares = any(
        node.kind is TypeKind.INTERFACE and node.name == short_name
        for node in (
            merged.types[t] for t in merged.supertype_closure(source_type_fq)
        )
    )
    if not declares:
        raise InterfaceNotSatisfiedError(
            f"{source_type_fq} bound to {emb.target_external} does not "
            f"implement interface {short_name}"
        )
    iface_node = merged.types.get(iface_fq)
    for required in iface_node.attributes if iface_node else []:
        have = available.get(required.name)
        if have is None or have.value_type is not required.value_type:
            raise InterfaceNotSatisfiedError(
                f"{source_type_fq} bound to {emb.target_external} lacks "
                f"attribute {required.name}:{required.value_type.value} "
                f"required by {iface_fq}"
            )
    return iface_fq, False


def _unbound_external_warnings(composed, entry_tables):
    """Flag externals without bindings, noting reachability from the start."""
    reachable = set()  # (alias, external name)
    visited = set()

    def visit(alias, production_name):
        if (alias, production_name) in visited:
            return
        visited.add((alias, production_name))
        grammar_fq = composed.fragments[alias]
        entries = entry_tables[grammar_fq]
        entry = entries.get(production_name)
        if entry is None or entry.kind != "production":
            return
        analysis = composed.analyses[grammar_fq]

        def walk(block):
            for alt in block.alternatives:
                for elem in alt:
                    if isinstance(elem, Block):
                        walk(elem)
                    elif isinstance(elem, NonterminalRef):
                        ref = entries.get(elem.rule_name)
                        if ref is None:
                            continue
                        if ref.kind == "production":
                            visit(alias, elem.rule_name)
                        elif ref.kind == "interface":
                            for impl in analysis.implementors(elem.rule_name):
                                visit(alias, impl)
                        elif ref.kind == "external":
                            reachable.add((alias, elem.rule_name))
                            for (a, e, _), binding in composed.binding_table.items():
                                if a == alias and e == elem.rule_name:
                                    visit(binding.alias, binding.production)

        walk(entry.decl.rhs)

    visit(composed.start_alias, composed.start[1])

    warnings = []
    bound = {(a, e) for (a, e, _) in composed.binding_table}
    for alias, grammar_fq in composed.fragments.items():
        for name, entry in entry_tables[grammar_fq].items():
            if entry.kind != "external" or (alias, name) in bound:
                continue
            where = "reachable from start" if (alias, name) in reachable else "unreachable"
            warnings.append(
                Diagnostic(
                    WARNING_LEVEL,
                    "UnboundExternal",
                    f"external {name} of fragment {alias!r} has no binding "
                    f"({where})",
                )
            )
    return warnings
