"""Error types and diagnostics shared by all grammarforge modules.

Every error carries a stable machine-readable ``code`` used in diagnostic
lines and in ``--json-errors`` CLI output.
"""

from dataclasses import dataclass


class GrammarForgeError(Exception):
    code = "Error"

    def __init__(self, message, *, file=None, line=None, col=None, pos=None):
        super().__init__(message)
        self.message = message
        self.file = file
        self.line = line
        self.col = col
        self.pos = pos

    def payload(self):
        data = {"code": self.code, "message": self.message}
        for key in ("file", "line", "col", "pos"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        return data


class GrammarSyntaxError(GrammarForgeError):
    code = "SyntaxError"


class DuplicateNameError(GrammarForgeError):
    code = "DuplicateName"


class UnresolvedSupergrammarError(GrammarForgeError):
    code = "UnresolvedSupergrammar"


class CyclicInheritanceError(GrammarForgeError):
    code = "CyclicInheritance"


class MissingInterfaceAttributeError(GrammarForgeError):
    code = "MissingInterfaceAttribute"


class UnresolvedTypeError(GrammarForgeError):
    code = "UnresolvedType"


class LexError(GrammarForgeError):
    code = "LexError"


class ConsumeBehindCommitError(GrammarForgeError):
    code = "ConsumeBehindCommit"


class ParseError(GrammarForgeError):
    """Raised on input that does not match the composed language.

    Also used as the internal backtracking signal: speculative regions
    catch it at their queue mark and roll back.
    """

    code = "ParseError"

    def __init__(self, message, *, pos=None, expected=(), found=None):
        super().__init__(message, pos=pos)
        self.expected = tuple(expected)
        self.found = found


class NoViableAlternativeError(ParseError):
    code = "NoViableAlternative"


class UnboundExternalError(GrammarForgeError):
    # Deliberately not a ParseError: a missing binding is a configuration
    # fault and must escape speculative backtracking.
    code = "UnboundExternal"

    def __init__(self, message, *, pos=None, external=None, key=None):
        super().__init__(message, pos=pos)
        self.external = external
        self.key = key


class EmbeddingInSpeculationError(GrammarForgeError):
    code = "EmbeddingInSpeculation"


class InterfaceNotSatisfiedError(GrammarForgeError):
    code = "InterfaceNotSatisfied"


class UnresolvedBindingError(GrammarForgeError):
    code = "UnresolvedBinding"


class MissingStartError(GrammarForgeError):
    code = "MissingStart"


class DuplicateAliasError(GrammarForgeError):
    code = "DuplicateAlias"


class DuplicateFragmentError(GrammarForgeError):
    code = "DuplicateFragment"


class UnprintableNodeError(GrammarForgeError):
    code = "UnprintableNode"


ERROR_LEVEL = "ERROR"
WARNING_LEVEL = "WARNING"


@dataclass(frozen=True)
class Diagnostic:
    level: str
    code: str
    message: str
    file: str = "<input>"
    line: int = 0
    col: int = 0

    def render(self):
        return f"{self.level} {self.file}:{self.line}:{self.col} {self.code} {self.message}"


def has_errors(diagnostics):
    return any(d.level == ERROR_LEVEL for d in diagnostics)
