"""Independent ordered-choice recognizer and random grammar generator.

The oracle interprets a grammar directly over token-kind sequences with
textbook ordered-choice semantics: alternatives tried in order, first
success commits; repetitions are greedy, each iteration rolled back as a
whole if it fails; no prediction, no first sets, no engine code.
"""

import random

from grammarforge.grammar_model import (
    Block,
    BlockCardinality,
    GrammarDef,
    Keyword,
    NonterminalRef,
    ProductionDef,
    Script,
)

ALPHABET = ["a", "b", "c", "d", "e", "f"]


def accepts(grammar, start, kinds):
    """True iff the start production derives exactly the token sequence."""
    productions = {p.name: p for p in grammar.productions}

    def match_block(block, i):
        card = block.cardinality
        if card is BlockCardinality.ONE:
            return match_choice(block, i)
        if card is BlockCardinality.OPTIONAL:
            j = match_choice(block, i)
            return i if j is None else j
        if card is BlockCardinality.PLUS:
            i = match_choice(block, i)
            if i is None:
                return None
        while True:
            j = match_choice(block, i)
            if j is None or j == i:
                return i
            i = j

    def match_choice(block, i):
        for alt in block.alternatives:
            j = match_seq(alt, i)
            if j is not None:
                return j
        return None

    def match_seq(seq, i):
        for elem in seq:
            i = match_elem(elem, i)
            if i is None:
                return None
        return i

    def match_elem(elem, i):
        if isinstance(elem, Script):
            return i
        if isinstance(elem, Block):
            return match_block(elem, i)
        if isinstance(elem, Keyword):
            if i < len(kinds) and kinds[i] == elem.text:
                return i + 1
            return None
        name = elem.rule_name
        if isinstance(elem, NonterminalRef) and name in productions:
            return match_block(productions[name].rhs, i)
        if i < len(kinds) and kinds[i] == name:
            return i + 1
        return None

    end = match_block(productions[start].rhs, 0)
    return end == len(kinds)


def random_grammar(rng, index):
    """Small keyword-only grammar: no left recursion, repetition contents
    always start with a keyword so loops make progress."""
    alphabet = ALPHABET[: rng.randint(2, 4)]
    count = rng.randint(1, 4)
    names = [f"Rule{i}" for i in range(count)]

    def gen_block(depth, owner, cardinality):
        n_alts = rng.randint(1, 3)
        alts = []
        for _ in range(n_alts):
            seq = gen_seq(depth, owner)
            if cardinality in (BlockCardinality.STAR, BlockCardinality.PLUS):
                seq.insert(0, Keyword(text=rng.choice(alphabet)))
            alts.append(seq)
        return Block(alternatives=alts, cardinality=cardinality)

    def gen_seq(depth, owner):
        return [gen_elem(depth, owner) for _ in range(rng.randint(1, 3))]

    def gen_elem(depth, owner):
        roll = rng.random()
        deeper = names[owner + 1 :]
        if depth > 0 and roll < 0.3:
            cardinality = rng.choice(list(BlockCardinality))
            return gen_block(depth - 1, owner, cardinality)
        if deeper and roll < 0.5:
            return NonterminalRef(rule_name=rng.choice(deeper))
        return Keyword(text=rng.choice(alphabet))

    productions = []
    for i, name in enumerate(names):
        body = gen_block(2, i, BlockCardinality.ONE)
        productions.append(ProductionDef(name=name, rhs=body))
    return (
        GrammarDef(
            package_path=["oracle", "gen"],
            name=f"Sample{index}",
            productions=productions,
        ),
        alphabet,
    )


def exhaustive_strings(alphabet, budget):
    """All token strings in length order until the budget is exhausted."""
    out = [[]]
    frontier = [[]]
    while frontier:
        grown = []
        for prefix in frontier:
            for kind in alphabet:
                candidate = prefix + [kind]
                if len(candidate) > 8:
                    continue
                out.append(candidate)
                grown.append(candidate)
                if len(out) >= budget:
                    return out
        frontier = grown
    return out


def derived_samples(rng, grammar, start, count):
    """Token strings sampled by randomized derivation, capped at 8 tokens."""
    productions = {p.name: p for p in grammar.productions}
    samples = []

    def emit_block(block, out):
        card = block.cardinality
        repeats = 1
        if card is BlockCardinality.OPTIONAL:
            repeats = rng.randint(0, 1)
        elif card is BlockCardinality.STAR:
            repeats = rng.randint(0, 2)
        elif card is BlockCardinality.PLUS:
            repeats = rng.randint(1, 2)
        for _ in range(repeats):
            alt = rng.choice(block.alternatives)
            for elem in alt:
                if len(out) > 8:
                    return
                emit_elem(elem, out)

    def emit_elem(elem, out):
        if isinstance(elem, Keyword):
            out.append(elem.text)
        elif isinstance(elem, Block):
            emit_block(elem, out)
        elif isinstance(elem, NonterminalRef) and elem.rule_name in productions:
            emit_block(productions[elem.rule_name].rhs, out)

    for _ in range(count):
        out = []
        emit_block(productions[start].rhs, out)
        if len(out) <= 8:
            samples.append(out)
    return samples
