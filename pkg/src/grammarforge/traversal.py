"""Modular tree traversal and pretty printing.

Visitor fragments are written per grammar and combined without touching
each other; dispatch prefers the exact node type and falls back along the
supertype chain, so a fragment written for a supergrammar still handles
overriding subgrammar nodes.  The pretty printer is the reference visitor:
it replays a node through its defining production.
"""

from dataclasses import dataclass, field

from .errors import DuplicateFragmentError, UnprintableNodeError
from .grammar_model import (
    Block,
    BlockCardinality,
    Keyword,
    LexerRef,
    Script,
    reference_name,
)
from .patterns import escape_string


@dataclass
class VisitorFragment:
    grammar_name: str  # fully qualified grammar name
    handlers: dict = field(default_factory=dict)  # type name -> (pre, post)

    def on(self, type_name, pre=None, post=None):
        self.handlers[type_name] = (pre, post)
        return self


_NO_HANDLER = (None, None)


class CombinedVisitor:
    def __init__(self, fragments, schema=None):
        self.fragments = list(fragments)
        self.schema = schema
        self._by_grammar = {f.grammar_name: f for f in fragments}
        self._dispatch = {}

    def _exact(self, type_fq):
        package, _, name = type_fq.rpartition(".")
        fragment = self._by_grammar.get(package)
        if fragment is None:
            return None
        return fragment.handlers.get(name)

    def resolve(self, type_fq):
        """Handler for a node type, exact match first, then supertypes
        depth-first in declaration order."""
        cached = self._dispatch.get(type_fq)
        if cached is not None:
            return cached

        def search(fq, seen):
            if fq in seen:
                return None
            seen.add(fq)
            handler = self._exact(fq)
            if handler is not None:
                return handler
            if self.schema is None:
                return None
            node_type = self.schema.types.get(fq)
            if node_type is None:
                return None
            for super_fq in node_type.supertypes:
                handler = search(super_fq, seen)
                if handler is not None:
                    return handler
            return None

        handler = search(type_fq, set()) or _NO_HANDLER
        self._dispatch[type_fq] = handler
        return handler


def combine(fragments, schema=None):
    """Merge per-grammar visitor fragments into one dispatching visitor."""
    seen = set()
    for fragment in fragments:
        if fragment.grammar_name in seen:
            raise DuplicateFragmentError(
                f"two visitor fragments for grammar {fragment.grammar_name}"
            )
        seen.add(fragment.grammar_name)
    return CombinedVisitor(fragments, schema)


def traverse(node, visitor):
    """Depth-first walk: pre, children in declaration order, post."""
    pre, post = visitor.resolve(node.type_name)
    if pre is not None:
        pre(node)
    for value in node.children.values():
        children = value if isinstance(value, list) else [value]
        for child in children:
            traverse(child, visitor)
    if post is not None:
        post(node)


# ---------------------------------------------------------------------------
# pretty printing


class _PrintState:
    """Tracks how many values of each attribute/composition were emitted."""

    def __init__(self, node):
        self.values = {}
        for name, value in node.attributes.items():
            self.values[name] = value if isinstance(value, list) else [value]
        for name, value in node.children.items():
            entry = value if isinstance(value, list) else [value]
            self.values[name] = entry
        self.index = {name: 0 for name in self.values}
        self.consumed = 0

    def clone(self):
        twin = object.__new__(_PrintState)
        twin.values = self.values
        twin.index = dict(self.index)
        twin.consumed = self.consumed
        return twin

    def adopt(self, trial):
        self.index = trial.index
        self.consumed = trial.consumed

    def take(self, name):
        values = self.values.get(name)
        if values is None:
            return None, False
        i = self.index[name]
        if i >= len(values):
            return None, False
        self.index[name] = i + 1
        self.consumed += 1
        return values[i], True

    def exhausted(self):
        return all(self.index[name] == len(vals) for name, vals in self.values.items())


def pretty_print(node, composed):
    """Reconstruct concrete text for a node; the result reparses equally.

    Keywords and values are emitted following the defining production left
    to right; optional and repeated groups emit as long as the node still
    holds values for them.
    """
    text = _print_node(node, composed)
    return text


def _print_node(node, composed):
    node_type = composed.schema.types.get(node.type_name)
    if node_type is None or node_type.defining_production is None:
        raise UnprintableNodeError(
            f"node type {node.type_name} has no defining production"
        )
    grammar_fq, production_name = node_type.defining_production
    grammar = composed.grammar_set.get(grammar_fq)
    production = grammar.production(production_name) if grammar else None
    if production is None:
        raise UnprintableNodeError(
            f"defining production of {node.type_name} is not loaded"
        )
    state = _PrintState(node)
    tokens = _emit_block(production.rhs, state, composed)
    if tokens is None:
        raise UnprintableNodeError(
            f"no alternative of {production_name} matches the contents of "
            f"a {node.type_name} node"
        )
    if not state.exhausted():
        raise UnprintableNodeError(
            f"node {node.type_name} holds values its production cannot emit"
        )
    return " ".join(tokens)


def _attempt(emit, state):
    trial = state.clone()
    out = emit(trial)
    if out is not None:
        state.adopt(trial)
    return out


def _emit_choice(block, state, composed):
    for alt in block.alternatives:
        out = _attempt(lambda st: _emit_seq(alt, st, composed), state)
        if out is not None:
            return out
    return None


def _emit_block(block, state, composed):
    card = block.cardinality
    if card is BlockCardinality.ONE:
        return _emit_choice(block, state, composed)
    if card is BlockCardinality.OPTIONAL:
        return _emit_present_only(block, state, composed) or []
    out = []
    if card is BlockCardinality.PLUS:
        first = _emit_choice(block, state, composed)
        if first is None:
            return None
        out.extend(first)
    while True:
        more = _emit_present_only(block, state, composed)
        if not more:
            break
        out.extend(more)
    return out


def _emit_present_only(block, state, composed):
    """Emit one round of an optional/repeated group iff it consumes values.

    Groups holding only keywords have no presence witness in the tree, so
    they emit nothing.
    """
    before = state.consumed
    trial = state.clone()
    out = _emit_choice(block, trial, composed)
    if out is None or trial.consumed == before:
        return None
    state.adopt(trial)
    return out


def _emit_seq(seq, state, composed):
    out = []
    for elem in seq:
        piece = _emit_elem(elem, state, composed)
        if piece is None:
            return None
        out.extend(piece)
    return out


def _emit_elem(elem, state, composed):
    if isinstance(elem, Keyword):
        return [elem.text]
    if isinstance(elem, Script):
        return []
    if isinstance(elem, Block):
        return _emit_block(elem, state, composed)
    value, ok = state.take(reference_name(elem))
    if not ok:
        return None
    if isinstance(elem, LexerRef):
        if elem.rule_name == "STRING":
            return [escape_string(value)]
        return [str(value)]
    if hasattr(value, "type_name"):
        return [_print_node(value, composed)]
    # Reference classified as nonterminal but filled with a token value.
    return [str(value)]
