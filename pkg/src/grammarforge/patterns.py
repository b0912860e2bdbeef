"""Character-pattern engine for lexer rules.

Patterns come from grammar files in a small dialect: quoted single
characters, quoted ranges ('a'..'z'), grouping, alternation, and the
?/*/+ suffixes.  They are compiled to a Thompson NFA; matching is a
frontier simulation that reports the longest accepting prefix.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class RxChar:
    ch: str


@dataclass(frozen=True)
class RxRange:
    lo: str
    hi: str


@dataclass(frozen=True)
class RxSeq:
    parts: tuple


@dataclass(frozen=True)
class RxAlt:
    options: tuple


@dataclass(frozen=True)
class RxRepeat:
    inner: object
    min_count: int  # 0 for ? and *, 1 for +
    unbounded: bool  # False only for ?


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'"}
_REVERSE_ESCAPES = {"\n": "\\n", "\t": "\\t", "\r": "\\r", "\\": "\\\\", "'": "\\'"}


def escape_char(ch):
    return _REVERSE_ESCAPES.get(ch, ch)


def unescape_char(body):
    """Decode the contents of a quoted character literal."""
    if body.startswith("\\") and len(body) == 2:
        return _ESCAPES.get(body[1], body[1])
    return body


def render(rx):
    """Deterministic source form; parsing it back yields an equal tree."""
    if isinstance(rx, RxChar):
        return f"'{escape_char(rx.ch)}'"
    if isinstance(rx, RxRange):
        return f"'{escape_char(rx.lo)}'..'{escape_char(rx.hi)}'"
    if isinstance(rx, RxSeq):
        return " ".join(_render_tight(p, seq_ctx=True) for p in rx.parts)
    if isinstance(rx, RxAlt):
        return " | ".join(render(o) for o in rx.options)
    if isinstance(rx, RxRepeat):
        suffix = "?" if not rx.unbounded else ("+" if rx.min_count else "*")
        return _render_tight(rx.inner, seq_ctx=False) + suffix
    raise TypeError(f"not a pattern node: {rx!r}")


def _render_tight(rx, seq_ctx):
    needs_parens = isinstance(rx, RxAlt) or (seq_ctx and False)
    if isinstance(rx, (RxAlt, RxSeq)) or (not seq_ctx and isinstance(rx, RxRepeat)):
        needs_parens = True
    text = render(rx)
    return f"({text})" if needs_parens else text


def can_match_nonempty(rx):
    if isinstance(rx, (RxChar, RxRange)):
        return True
    if isinstance(rx, RxSeq):
        return any(can_match_nonempty(p) for p in rx.parts)
    if isinstance(rx, RxAlt):
        return any(can_match_nonempty(o) for o in rx.options)
    if isinstance(rx, RxRepeat):
        return can_match_nonempty(rx.inner)
    return False


class Nfa:
    """Thompson-construction NFA over character predicates."""

    def __init__(self):
        self.eps = []  # state -> list of targets
        self.edges = []  # state -> list of (lo, hi, target)
        self.start = self._new_state()
        self.accept = None

    def _new_state(self):
        self.eps.append([])
        self.edges.append([])
        return len(self.eps) - 1

    def _compile(self, rx, entry):
        """Wire rx between entry and a fresh exit state; return the exit."""
        if isinstance(rx, RxChar):
            exit_ = self._new_state()
            self.edges[entry].append((rx.ch, rx.ch, exit_))
            return exit_
        if isinstance(rx, RxRange):
            exit_ = self._new_state()
            self.edges[entry].append((rx.lo, rx.hi, exit_))
            return exit_
        if isinstance(rx, RxSeq):
            cur = entry
            for part in rx.parts:
                cur = self._compile(part, cur)
            return cur
        if isinstance(rx, RxAlt):
            exit_ = self._new_state()
            for option in rx.options:
                branch_in = self._new_state()
                self.eps[entry].append(branch_in)
                branch_out = self._compile(option, branch_in)
                self.eps[branch_out].append(exit_)
            return exit_
        if isinstance(rx, RxRepeat):
            inner_in = self._new_state()
            exit_ = self._new_state()
            self.eps[entry].append(inner_in)
            inner_out = self._compile(rx.inner, inner_in)
            self.eps[inner_out].append(exit_)
            if rx.unbounded:
                self.eps[inner_out].append(inner_in)
            if rx.min_count == 0:
                self.eps[entry].append(exit_)
            return exit_
        raise TypeError(f"not a pattern node: {rx!r}")

    def _closure(self, states):
        stack = list(states)
        seen = set(states)
        while stack:
            s = stack.pop()
            for t in self.eps[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    def match_longest(self, text, pos):
        """Return the end offset of the longest match at pos, or -1."""
        frontier = self._closure({self.start})
        best = pos if self.accept in frontier else -1
        i = pos
        n = len(text)
        while frontier and i < n:
            ch = text[i]
            nxt = set()
            for s in frontier:
                for lo, hi, t in self.edges[s]:
                    if lo <= ch <= hi:
                        nxt.add(t)
            if not nxt:
                break
            frontier = self._closure(nxt)
            i += 1
            if self.accept in frontier:
                best = i
        return best


def compile_pattern(rx):
    nfa = Nfa()
    nfa.accept = nfa._compile(rx, nfa.start)
    return nfa


def ident_pattern():
    """Predefined IDENT: letter or underscore, then letters/digits/underscores."""
    head = RxAlt((RxRange("a", "z"), RxRange("A", "Z"), RxChar("_")))
    tail = RxAlt((RxRange("a", "z"), RxRange("A", "Z"), RxRange("0", "9"), RxChar("_")))
    return RxSeq((head, RxRepeat(tail, 0, True)))


def match_string_literal(text, pos):
    """Match a double-quoted string with backslash escapes; no newlines."""
    if pos >= len(text) or text[pos] != '"':
        return -1
    i = pos + 1
    while i < len(text):
        c = text[i]
        if c == '"':
            return i + 1
        if c == "\n":
            return -1
        if c == "\\" and i + 1 < len(text):
            i += 2
        else:
            i += 1
    return -1


_STRING_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


def unescape_string(token_text):
    """Decode the body of a matched string literal (quotes included)."""
    body = token_text[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            out.append(_STRING_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def escape_string(value):
    out = ['"']
    for c in value:
        if c == '"':
            out.append('\\"')
        elif c == "\\":
            out.append("\\\\")
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == "\r":
            out.append("\\r")
        else:
            out.append(c)
    out.append('"')
    return "".join(out)
