"""Abstract-syntax schema derivation.

Each production becomes a concrete node type named after it; lexer
references become attributes, nonterminal references become compositions
with inferred cardinalities.  Inheritance merges supergrammar schemas:
unoverridden types are carried over unchanged, overriding productions get
the supergrammar types as supertypes, and collisions between supergrammars
resolve in extends-list order.
"""

import json
import weakref
from dataclasses import dataclass, field
from enum import Enum

from .errors import MissingInterfaceAttributeError, UnresolvedTypeError
from .grammar_model import (
    Block,
    BlockCardinality,
    Keyword,
    LexerRef,
    NonterminalRef,
    Script,
    ValueType,
    effective_entries,
    hierarchy,
    lower_first,
    reference_name,
    resolve_value_type,
)

ANY_NODE = "AnyNode"


class Cardinality(Enum):
    ONE = "One"
    OPTIONAL = "Optional"
    LIST = "List"


class TypeKind(Enum):
    CONCRETE = "Concrete"
    INTERFACE = "Interface"
    EXTERNAL_SLOT = "ExternalSlot"


@dataclass
class AttributeSpec:
    name: str
    value_type: ValueType
    cardinality: Cardinality
    min_one: bool = False


@dataclass
class CompositionSpec:
    name: str
    target: str  # type fq name, interface fq name, or ANY_NODE
    cardinality: Cardinality
    min_one: bool = False


@dataclass
class NodeType:
    name: str
    package: str  # fully qualified name of the defining grammar
    kind: TypeKind
    attributes: list = field(default_factory=list)
    compositions: list = field(default_factory=list)
    supertypes: list = field(default_factory=list)
    interfaces: list = field(default_factory=list)
    defining_production: tuple = None  # (grammar fq, production name)

    @property
    def fq_name(self):
        return f"{self.package}.{self.name}"


@dataclass
class Schema:
    types: dict
    root_grammar: str

    def supertype_closure(self, fq):
        """fq plus all transitive supertypes and implemented interfaces."""
        seen = []
        stack = [fq]
        while stack:
            current = stack.pop(0)
            if current in seen or current not in self.types:
                continue
            seen.append(current)
            node = self.types[current]
            stack.extend(node.supertypes)
            stack.extend(node.interfaces)
        return seen

    def implements(self, fq, iface_fq):
        return iface_fq in self.supertype_closure(fq)

    def conforms_to(self, fq, target):
        if target == ANY_NODE:
            return True
        return target in self.supertype_closure(fq)

    def all_attributes(self, fq):
        """Own attributes plus inherited ones, nearest definition first."""
        merged = {}
        for type_fq in self.supertype_closure(fq):
            for attr in self.types[type_fq].attributes:
                merged.setdefault(attr.name, attr)
        return merged

    def all_compositions(self, fq):
        merged = {}
        for type_fq in self.supertype_closure(fq):
            for comp in self.types[type_fq].compositions:
                merged.setdefault(comp.name, comp)
        return merged


# ---------------------------------------------------------------------------
# cardinality inference


def _occurrences(production, name):
    """All references filling `name`, with their enclosing block chains."""
    found = []

    def walk(seq, chain):
        for elem in seq:
            if isinstance(elem, Block):
                for index, alt in enumerate(elem.alternatives):
                    walk(alt, chain + [(elem, index)])
            elif isinstance(elem, (LexerRef, NonterminalRef)):
                if reference_name(elem) == name:
                    found.append((elem, chain))

    for index, alt in enumerate(production.rhs.alternatives):
        walk(alt, [(production.rhs, index)])
    return found


def infer_cardinality(production, name):
    """Merged cardinality of all references named `name` in the production.

    List when any occurrence repeats (under * or +) or the name is filled
    from more than one position; Optional when the single occurrence can be
    skipped; One otherwise.
    """
    occurrences = _occurrences(production, name)
    if not occurrences:
        raise ValueError(f"{name!r} does not label a reference in {production.name}")
    if len(occurrences) > 1:
        return Cardinality.LIST
    _, chain = occurrences[0]
    for block, _ in chain:
        if block.cardinality in (BlockCardinality.STAR, BlockCardinality.PLUS):
            return Cardinality.LIST
    for block, _ in chain:
        if block.cardinality is BlockCardinality.OPTIONAL:
            return Cardinality.OPTIONAL
        if len(block.alternatives) > 1:
            return Cardinality.OPTIONAL
    return Cardinality.ONE


def _min_count(production, name):
    """Guaranteed occurrence count on every path (0 or 1 is enough here)."""

    def seq_count(seq):
        return sum(elem_count(e) for e in seq)

    def elem_count(elem):
        if isinstance(elem, (LexerRef, NonterminalRef)):
            return 1 if reference_name(elem) == name else 0
        if isinstance(elem, Block):
            inner = min(seq_count(alt) for alt in elem.alternatives)
            if elem.cardinality in (BlockCardinality.OPTIONAL, BlockCardinality.STAR):
                return 0
            return inner
        return 0

    return min(seq_count(alt) for alt in production.rhs.alternatives)


# ---------------------------------------------------------------------------
# derivation

_memo = {}  # id(grammar) -> (weakref to grammar, set snapshot, Schema)


def _memo_get(grammar, grammar_set):
    entry = _memo.get(id(grammar))
    if entry is None:
        return None
    ref, snapshot, schema = entry
    if ref() is not grammar:
        del _memo[id(grammar)]
        return None
    for fq, g_ref in snapshot:
        if grammar_set.get(fq) is not g_ref():
            return None
    return schema


def _memo_put(grammar, grammar_set, schema):
    snapshot = tuple(
        (g.fq_name, weakref.ref(g)) for g in hierarchy(grammar, grammar_set)
    )
    _memo[id(grammar)] = (weakref.ref(grammar), snapshot, schema)


def derive_schema(grammar, grammar_set):
    """Derive the abstract-syntax schema for a grammar and its hierarchy.

    Results are cached per grammar object so that rebinding a composed
    language reuses identical Schema values.
    """
    cached = _memo_get(grammar, grammar_set)
    if cached is not None:
        return cached

    types = {}
    for super_name in grammar.extends_list:
        super_schema = derive_schema(grammar_set[super_name], grammar_set)
        types.update(super_schema.types)

    entries = effective_entries(grammar, grammar_set)
    lexer_env = {
        name: e.decl.value_type for name, e in entries.items() if e.kind == "lexer"
    }
    grammar_fq = grammar.fq_name

    for iface in grammar.interfaces:
        attrs = []
        for attr_name, type_name in iface.required_attributes:
            value_type = resolve_value_type(type_name, lexer_env)
            if value_type is None:
                raise UnresolvedTypeError(
                    f"interface {iface.name}: unknown attribute type {type_name!r}",
                    file=grammar.source_path,
                )
            attrs.append(AttributeSpec(attr_name, value_type, Cardinality.ONE))
        node = NodeType(
            name=iface.name, package=grammar_fq, kind=TypeKind.INTERFACE, attributes=attrs
        )
        types[node.fq_name] = node

    for ext in grammar.externals:
        slot = NodeType(name=ext.name, package=grammar_fq, kind=TypeKind.EXTERNAL_SLOT)
        types[slot.fq_name] = slot
        if ext.required_interface:
            iface_fq = _external_interface_fq(ext, entries, grammar_fq)
            if iface_fq not in types:
                # Handwritten interface: declared outside any grammar, its
                # required attributes arrive with the composition config.
                package, _, name = iface_fq.rpartition(".")
                types[iface_fq] = NodeType(
                    name=name, package=package or grammar_fq, kind=TypeKind.INTERFACE
                )

    for production in grammar.productions:
        node = _derive_production_type(production, grammar, grammar_set, entries, types)
        types[node.fq_name] = node

    schema = Schema(types=types, root_grammar=grammar_fq)
    _check_interface_attributes(schema, grammar)
    _memo_put(grammar, grammar_set, schema)
    return schema


def _external_interface_fq(ext, entries, grammar_fq):
    name = ext.required_interface
    if "." not in name:
        entry = entries.get(name)
        if entry is not None and entry.kind == "interface":
            return f"{entry.grammar_fq}.{name}"
    return name


def effective_type_fq(name, grammar, grammar_set):
    """Fully qualified node type instantiated for `name` in this hierarchy."""
    entries = effective_entries(grammar, grammar_set)
    entry = entries.get(name)
    if entry is None or entry.grammar_fq is None:
        return None
    return f"{entry.grammar_fq}.{name}"


def _derive_production_type(production, grammar, grammar_set, entries, types):
    grammar_fq = grammar.fq_name
    supertypes = []
    for super_name in grammar.extends_list:
        super_fq = effective_type_fq(production.name, grammar_set[super_name], grammar_set)
        if super_fq is not None and super_fq in types and super_fq not in supertypes:
            supertypes.append(super_fq)

    interfaces = []
    for iface_name in production.implements_list:
        entry = entries.get(iface_name)
        if entry is None or entry.kind != "interface":
            raise UnresolvedTypeError(
                f"production {production.name} implements unknown interface "
                f"{iface_name!r}",
                file=grammar.source_path,
            )
        iface_fq = f"{entry.grammar_fq}.{iface_name}"
        if iface_fq not in interfaces:
            interfaces.append(iface_fq)

    attributes = []
    compositions = []
    for name, ref in _first_references(production):
        cardinality = infer_cardinality(production, name)
        min_one = cardinality is Cardinality.LIST and _min_count(production, name) >= 1
        entry = entries.get(ref.rule_name)
        if entry is None:
            raise UnresolvedTypeError(
                f"production {production.name} references unknown name "
                f"{ref.rule_name!r}",
                file=grammar.source_path,
            )
        if entry.kind == "lexer":
            attributes.append(
                AttributeSpec(name, entry.decl.value_type, cardinality, min_one)
            )
        elif entry.kind == "production":
            target = f"{entry.grammar_fq}.{ref.rule_name}"
            compositions.append(CompositionSpec(name, target, cardinality, min_one))
        elif entry.kind == "interface":
            target = f"{entry.grammar_fq}.{ref.rule_name}"
            compositions.append(CompositionSpec(name, target, cardinality, min_one))
        else:  # external slot: composition typed AnyNode or the interface
            ext = entry.decl
            if ext.required_interface:
                ext_entries = effective_entries(grammar_set[entry.grammar_fq], grammar_set)
                target = _external_interface_fq(ext, ext_entries, entry.grammar_fq)
            else:
                target = ANY_NODE
            compositions.append(CompositionSpec(name, target, cardinality, min_one))

    return NodeType(
        name=production.name,
        package=grammar_fq,
        kind=TypeKind.CONCRETE,
        attributes=attributes,
        compositions=compositions,
        supertypes=supertypes,
        interfaces=interfaces,
        defining_production=(grammar_fq, production.name),
    )


def _first_references(production):
    """(name, first reference) pairs in left-to-right discovery order."""
    seen = {}

    def walk(seq):
        for elem in seq:
            if isinstance(elem, Block):
                for alt in elem.alternatives:
                    walk(alt)
            elif isinstance(elem, (LexerRef, NonterminalRef)):
                seen.setdefault(reference_name(elem), elem)

    for alt in production.rhs.alternatives:
        walk(alt)
    return list(seen.items())


def _check_interface_attributes(schema, grammar):
    """Every concrete type implementing an interface carries its attributes.

    Interfaces themselves never receive computed attributes; only their
    declared requirements are enforced.
    """
    for node in schema.types.values():
        if node.kind is not TypeKind.CONCRETE:
            continue
        for iface_fq in schema.supertype_closure(node.fq_name):
            iface = schema.types.get(iface_fq)
            if iface is None or iface.kind is not TypeKind.INTERFACE:
                continue
            available = schema.all_attributes(node.fq_name)
            for required in iface.attributes:
                have = available.get(required.name)
                if have is None or have.value_type is not required.value_type:
                    raise MissingInterfaceAttributeError(
                        f"type {node.fq_name} implements {iface_fq} but lacks "
                        f"attribute {required.name}:{required.value_type.value}",
                        file=grammar.source_path,
                    )


# ---------------------------------------------------------------------------
# serialization


def schema_to_json(schema):
    """Deterministic JSON: map keys sorted, arrays in declaration order."""
    types = {}
    for fq, node in schema.types.items():
        entry = {
            "kind": node.kind.value,
            "attributes": [_attr_json(a) for a in node.attributes],
            "compositions": [_comp_json(c) for c in node.compositions],
            "supertypes": list(node.supertypes),
            "interfaces": list(node.interfaces),
        }
        types[fq] = entry
    payload = {"rootGrammar": schema.root_grammar, "types": types}
    return json.dumps(payload, indent=2, sort_keys=True)


def _attr_json(attr):
    entry = {
        "name": attr.name,
        "valueType": attr.value_type.value,
        "cardinality": attr.cardinality.value,
    }
    if attr.min_one:
        entry["minOne"] = True
    return entry


def _comp_json(comp):
    entry = {
        "name": comp.name,
        "target": comp.target,
        "cardinality": comp.cardinality.value,
    }
    if comp.min_one:
        entry["minOne"] = True
    return entry


def schema_from_json(text):
    payload = json.loads(text)
    types = {}
    for fq, entry in payload["types"].items():
        package, _, name = fq.rpartition(".")
        kind = TypeKind(entry["kind"])
        node = NodeType(
            name=name,
            package=package,
            kind=kind,
            attributes=[
                AttributeSpec(
                    a["name"],
                    ValueType(a["valueType"]),
                    Cardinality(a["cardinality"]),
                    a.get("minOne", False),
                )
                for a in entry["attributes"]
            ],
            compositions=[
                CompositionSpec(
                    c["name"],
                    c["target"],
                    Cardinality(c["cardinality"]),
                    c.get("minOne", False),
                )
                for c in entry["compositions"]
            ],
            supertypes=list(entry["supertypes"]),
            interfaces=list(entry["interfaces"]),
            defining_production=(package, name) if kind is TypeKind.CONCRETE else None,
        )
        types[fq] = node
    return Schema(types=types, root_grammar=payload["rootGrammar"])
