"""Per-grammar lexers over a shared character queue.

All lexers of a composed language read the same buffer.  Lexing is
speculative and position-addressed; only parser-driven consumption moves
the committed position.  That makes the embedding switch cheap: the next
lexer simply re-reads from the committed position, and the re-lexed span
is bounded by the lookahead the previous parser used.
"""

import weakref
from dataclasses import dataclass, field

from . import patterns
from .errors import ConsumeBehindCommitError, LexError
from .grammar_model import (
    Block,
    Keyword,
    PREDEFINED_LEXER_RULES,
    ValueType,
    hierarchy,
)

EOF = "EOF"


@dataclass(frozen=True)
class Token:
    kind: str  # lexer rule name, keyword text, or EOF
    text: str
    mapped_value: object
    start_pos: int
    end_pos: int


class CharQueue:
    """Shared input buffer with a committed consumption pointer.

    The buffer is never physically shortened; `committed_pos` is the
    logical removal point.  `marks` hold saved cursor positions for
    backtracking; while any mark is active, consumption is provisional.
    """

    def __init__(self, buffer, record_events=False):
        self.buffer = buffer
        self.committed_pos = 0
        self.marks = []
        self.max_lexed_end = 0
        self.events = [] if record_events else None

    def _record(self, *event):
        if self.events is not None:
            self.events.append(event)

    @property
    def in_speculation(self):
        return bool(self.marks)

    def push_mark(self, cursor):
        self.marks.append(cursor)

    def pop_mark(self):
        return self.marks.pop()

    def note_lex(self, request_pos, end_pos):
        if end_pos > self.max_lexed_end:
            self.max_lexed_end = end_pos
        self._record("lex", request_pos, end_pos, self.committed_pos)

    def consume(self, token):
        if token.start_pos < self.committed_pos:
            raise ConsumeBehindCommitError(
                f"token at {token.start_pos} starts before committed position "
                f"{self.committed_pos}",
                pos=token.start_pos,
            )
        self.committed_pos = token.end_pos
        self._record("consume", token.start_pos, token.end_pos)

    def reset_for_embedding(self):
        """Discard lookahead; the next lexer re-reads from committed_pos."""
        previous_lookahead_end = self.max_lexed_end
        self._record("reset", self.committed_pos, previous_lookahead_end)
        self.max_lexed_end = self.committed_pos
        return self.committed_pos


def consume(queue, token):
    queue.consume(token)


def reset_for_embedding(queue):
    return queue.reset_for_embedding()


# ---------------------------------------------------------------------------
# lexer construction


@dataclass
class _CompiledRule:
    name: str
    value_type: ValueType
    matcher: object  # (text, pos) -> end offset or -1
    unescape: bool = False


@dataclass
class LexerInstance:
    grammar_name: str
    rules: list  # LexerRuleDef, own rules first, predefined last
    keywords: frozenset
    compiled: list = field(default_factory=list)
    keywords_by_length: list = field(default_factory=list)


_memo = {}  # id(grammar) -> (weakref, snapshot, LexerInstance)


def build_lexer(grammar, grammar_set):
    """One lexer per grammar: own rules shadow inherited ones, predefined
    IDENT and STRING come last, keywords are the union over the hierarchy.
    """
    entry = _memo.get(id(grammar))
    if entry is not None:
        ref, snapshot, lexer = entry
        if ref() is grammar and all(grammar_set.get(fq) is r() for fq, r in snapshot):
            return lexer

    chain = hierarchy(grammar, grammar_set)
    rules = []
    seen = set()
    for g in chain:
        for rule in g.lexer_rules:
            if rule.name not in seen:
                seen.add(rule.name)
                rules.append(rule)
    for name, rule in PREDEFINED_LEXER_RULES.items():
        if name not in seen:
            rules.append(rule)

    keywords = set()
    for g in chain:
        for production in g.productions:
            _collect_keywords(production.rhs, keywords)

    compiled = []
    for rule in rules:
        if rule.regex is None:
            compiled.append(
                _CompiledRule(
                    rule.name,
                    rule.value_type,
                    patterns.match_string_literal,
                    unescape=True,
                )
            )
        else:
            nfa = patterns.compile_pattern(rule.regex)
            compiled.append(_CompiledRule(rule.name, rule.value_type, nfa.match_longest))

    lexer = LexerInstance(
        grammar_name=grammar.fq_name,
        rules=rules,
        keywords=frozenset(keywords),
        compiled=compiled,
        keywords_by_length=sorted(keywords, key=len, reverse=True),
    )
    snapshot = tuple((g.fq_name, weakref.ref(g)) for g in chain)
    _memo[id(grammar)] = (weakref.ref(grammar), snapshot, lexer)
    return lexer


def _collect_keywords(block, keywords):
    for alt in block.alternatives:
        for elem in alt:
            if isinstance(elem, Keyword):
                keywords.add(elem.text)
            elif isinstance(elem, Block):
                _collect_keywords(elem, keywords)


# ---------------------------------------------------------------------------
# lexing


def skip_trivia(text, pos):
    """Skip whitespace and both comment forms; returns the next offset."""
    while pos < len(text):
        c = text[pos]
        if c in " \t\r\n":
            pos += 1
        elif text.startswith("//", pos):
            while pos < len(text) and text[pos] != "\n":
                pos += 1
        elif text.startswith("/*", pos):
            end = text.find("*/", pos + 2)
            if end < 0:
                raise LexError("unterminated block comment", pos=pos)
            pos = end + 2
        else:
            break
    return pos


def lex_at(lexer, queue, pos):
    """Produce the token at pos without consuming anything.

    Longest match wins; among rules of equal length the first listed wins.
    An IDENT-shaped match equal to a keyword is reserved: it lexes as that
    keyword.  Keywords that no rule can match (punctuation) are matched
    literally.
    """
    if pos < queue.committed_pos:
        raise LexError(
            f"lexing at {pos} behind committed position {queue.committed_pos}",
            pos=pos,
        )
    text = queue.buffer
    start = skip_trivia(text, pos)
    if start >= len(text):
        queue.note_lex(pos, start)
        return Token(EOF, "", None, start, start)

    best_rule = None
    best_end = -1
    for rule in lexer.compiled:
        end = rule.matcher(text, start)
        if end > start and end > best_end:
            best_rule = rule
            best_end = end

    kw_end = -1
    kw_text = None
    for kw in lexer.keywords_by_length:
        if text.startswith(kw, start):
            kw_text = kw
            kw_end = start + len(kw)
            break

    if best_rule is None and kw_text is None:
        raise LexError(f"no token matches input at offset {start}", pos=start)

    if kw_text is not None and kw_end > best_end:
        queue.note_lex(pos, kw_end)
        return Token(kw_text, kw_text, kw_text, start, kw_end)

    matched = text[start:best_end]
    if best_rule.name == "IDENT" and matched in lexer.keywords:
        queue.note_lex(pos, best_end)
        return Token(matched, matched, matched, start, best_end)

    if best_rule.unescape:
        value = patterns.unescape_string(matched)
    elif best_rule.value_type is ValueType.INT:
        value = int(matched)
    else:
        value = matched
    queue.note_lex(pos, best_end)
    return Token(best_rule.name, matched, value, start, best_end)
