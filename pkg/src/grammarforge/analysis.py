"""Token-level static analysis of a grammar hierarchy.

Computes nullability, first sets, and follow sets over the effective
productions of one grammar (after inheritance), and annotates every block
with the data the parse engine needs for one-token prediction: per
alternative first sets and the set of tokens that may legally follow the
block.  External nonterminals contribute a wildcard, since anything can
start an embedded fragment.
"""

from dataclasses import dataclass

from .grammar_model import (
    Block,
    BlockCardinality,
    Keyword,
    LexerRef,
    NonterminalRef,
    Script,
    effective_entries,
)
from .schema import derive_schema

WILDCARD = "<any>"
EOF_MARK = "EOF"


def kind_matches(token_kind, token_set):
    return token_kind in token_set or WILDCARD in token_set


@dataclass
class BlockInfo:
    alt_firsts: list
    alt_nullable: list
    content_first: frozenset
    content_nullable: bool
    follow: frozenset


class GrammarAnalysis:
    """Prediction tables for one grammar resolved against its hierarchy.

    follow_roots maps production names to the token sets that may follow
    them from the outside: {EOF} for a composed start production, wildcard
    for productions bound into foreign external slots.
    """

    def __init__(self, grammar, grammar_set, schema=None, follow_roots=None):
        self.grammar = grammar
        self.grammar_set = grammar_set
        self.schema = schema if schema is not None else derive_schema(grammar, grammar_set)
        self.entries = effective_entries(grammar, grammar_set)
        self.productions = {
            name: (e.grammar_fq, e.decl)
            for name, e in self.entries.items()
            if e.kind == "production"
        }
        self._implementor_cache = {}
        self.nullable = {}
        self.first = {}
        self.follow = {}
        self._block_infos = {}
        self._compute_nullable()
        self._compute_first()
        self._compute_follow(follow_roots or {})
        self._annotate_blocks()

    def entry(self, name):
        return self.entries.get(name)

    def production_entry(self, name):
        return self.productions[name]

    def type_fq(self, name):
        grammar_fq, _ = self.productions[name]
        return f"{grammar_fq}.{name}"

    def implementors(self, iface_name):
        """Effective productions whose node type implements the interface."""
        cached = self._implementor_cache.get(iface_name)
        if cached is not None:
            return cached
        entry = self.entries.get(iface_name)
        result = []
        if entry is not None and entry.kind == "interface":
            iface_fq = f"{entry.grammar_fq}.{iface_name}"
            for name in self.productions:
                if self.schema.implements(self.type_fq(name), iface_fq):
                    result.append(name)
        self._implementor_cache[iface_name] = result
        return result

    def block_info(self, block):
        return self._block_infos[id(block)]

    # -- nullability ------------------------------------------------------

    def _compute_nullable(self):
        for name in self.productions:
            self.nullable[name] = False
        changed = True
        while changed:
            changed = False
            for name, (_, prod) in self.productions.items():
                value = self._block_nullable(prod.rhs)
                if value and not self.nullable[name]:
                    self.nullable[name] = True
                    changed = True

    def _block_nullable(self, block):
        if block.cardinality in (BlockCardinality.OPTIONAL, BlockCardinality.STAR):
            return True
        return any(self._seq_nullable(alt) for alt in block.alternatives)

    def _seq_nullable(self, seq):
        return all(self._elem_nullable(e) for e in seq)

    def _elem_nullable(self, elem):
        if isinstance(elem, (Keyword, LexerRef)):
            return False
        if isinstance(elem, Script):
            return True
        if isinstance(elem, Block):
            return self._block_nullable(elem)
        entry = self.entries.get(elem.rule_name)
        if entry is None or entry.kind in ("lexer", "external"):
            return False
        if entry.kind == "interface":
            return any(self.nullable.get(p, False) for p in self.implementors(elem.rule_name))
        return self.nullable.get(elem.rule_name, False)

    # -- first sets -------------------------------------------------------

    def _compute_first(self):
        for name in self.productions:
            self.first[name] = frozenset()
        changed = True
        while changed:
            changed = False
            for name, (_, prod) in self.productions.items():
                value = self._block_first(prod.rhs)
                if not value <= self.first[name]:
                    self.first[name] = self.first[name] | value
                    changed = True

    def _block_first(self, block):
        out = set()
        for alt in block.alternatives:
            out |= self._seq_first(alt)
        return frozenset(out)

    def _seq_first(self, seq):
        out = set()
        for elem in seq:
            out |= self._elem_first(elem)
            if not self._elem_nullable(elem):
                break
        return frozenset(out)

    def _elem_first(self, elem):
        if isinstance(elem, Keyword):
            return frozenset((elem.text,))
        if isinstance(elem, LexerRef):
            return frozenset((elem.rule_name,))
        if isinstance(elem, Script):
            return frozenset()
        if isinstance(elem, Block):
            return self._block_first(elem)
        entry = self.entries.get(elem.rule_name)
        if entry is None:
            return frozenset()
        if entry.kind == "lexer":
            return frozenset((elem.rule_name,))
        if entry.kind == "external":
            return frozenset((WILDCARD,))
        if entry.kind == "interface":
            out = set()
            for p in self.implementors(elem.rule_name):
                out |= self.first.get(p, frozenset())
            return frozenset(out)
        return self.first.get(elem.rule_name, frozenset())

    # -- follow sets ------------------------------------------------------

    def _compute_follow(self, follow_roots):
        seeds = {name: set() for name in self.productions}
        edges = []  # (container production, target production)
        for name, tokens in follow_roots.items():
            if name in seeds:
                seeds[name] |= set(tokens)

        def on_ref(container, target, suffix_first, suffix_flows):
            seeds[target] |= suffix_first
            if suffix_flows:
                edges.append((container, target))

        for name, (_, prod) in self.productions.items():
            self._walk_production(prod, name, on_ref=on_ref)

        self.follow = {name: frozenset(tokens) for name, tokens in seeds.items()}
        changed = True
        while changed:
            changed = False
            for container, target in edges:
                flowed = self.follow[container]
                if not flowed <= self.follow[target]:
                    self.follow[target] = self.follow[target] | flowed
                    changed = True

    def _annotate_blocks(self):
        for name, (_, prod) in self.productions.items():
            prod_follow = self.follow.get(name, frozenset())

            def on_block(block, suffix_first, suffix_flows, prod_follow=prod_follow):
                follow = set(suffix_first)
                if suffix_flows:
                    follow |= prod_follow
                self._block_infos[id(block)] = BlockInfo(
                    alt_firsts=[self._seq_first(alt) for alt in block.alternatives],
                    alt_nullable=[self._seq_nullable(alt) for alt in block.alternatives],
                    content_first=self._block_first(block),
                    content_nullable=any(
                        self._seq_nullable(alt) for alt in block.alternatives
                    ),
                    follow=frozenset(follow),
                )

            self._walk_production(prod, name, on_block=on_block)

    def _walk_production(self, prod, name, on_ref=None, on_block=None):
        """Visit elements with the first set of their suffix.

        suffix_flows means the production's own follow set reaches past the
        suffix, so it belongs to the element's follow as well.
        """

        def walk_seq(seq, tail_first, tail_flows):
            suffixes = []
            suffix_first = frozenset(tail_first)
            suffix_flows = tail_flows
            for elem in reversed(seq):
                suffixes.append((elem, suffix_first, suffix_flows))
                if self._elem_nullable(elem):
                    suffix_first = self._elem_first(elem) | suffix_first
                else:
                    suffix_first = self._elem_first(elem)
                    suffix_flows = False
            for elem, sf, sfl in reversed(suffixes):
                self._visit_elem(elem, name, sf, sfl, walk_seq, on_ref, on_block)

        walk_seq([prod.rhs], frozenset(), True)

    def _visit_elem(self, elem, container, suffix_first, suffix_flows, walk_seq, on_ref, on_block):
        if isinstance(elem, Block):
            if on_block is not None:
                on_block(elem, suffix_first, suffix_flows)
            if elem.cardinality in (BlockCardinality.STAR, BlockCardinality.PLUS):
                # Content may be followed by another iteration or the exit.
                inner_first = self._block_first(elem) | suffix_first
                inner_flows = suffix_flows
            else:
                inner_first = suffix_first
                inner_flows = suffix_flows
            for alt in elem.alternatives:
                walk_seq(alt, inner_first, inner_flows)
            return
        if isinstance(elem, NonterminalRef) and on_ref is not None:
            entry = self.entries.get(elem.rule_name)
            if entry is None:
                return
            targets = []
            if entry.kind == "production":
                targets = [elem.rule_name]
            elif entry.kind == "interface":
                targets = self.implementors(elem.rule_name)
            for target in targets:
                on_ref(container, target, set(suffix_first), suffix_flows)
