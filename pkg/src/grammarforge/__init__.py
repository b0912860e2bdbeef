"""grammarforge: a modular textual-DSL composition workbench.

Parses MontiCore-style grammar definitions, derives typed abstract-syntax
schemas, and composes independently developed language fragments at
configuration time: grammar inheritance, language embedding over a shared
character queue with per-grammar lexers, combined visitors, and
round-trippable pretty printing.
"""

from .errors import (
    ConsumeBehindCommitError,
    CyclicInheritanceError,
    Diagnostic,
    DuplicateAliasError,
    DuplicateFragmentError,
    DuplicateNameError,
    EmbeddingInSpeculationError,
    GrammarForgeError,
    GrammarSyntaxError,
    InterfaceNotSatisfiedError,
    LexError,
    MissingInterfaceAttributeError,
    MissingStartError,
    NoViableAlternativeError,
    ParseError,
    UnboundExternalError,
    UnprintableNodeError,
    UnresolvedBindingError,
    UnresolvedSupergrammarError,
    UnresolvedTypeError,
)
from .grammar_model import (
    GrammarDef,
    load_grammar_set,
    parse_grammar,
    render_grammar,
    validate_grammar,
)
from .schema import (
    ANY_NODE,
    Cardinality,
    Schema,
    derive_schema,
    infer_cardinality,
    schema_from_json,
    schema_to_json,
)
from .lexing import (
    CharQueue,
    LexerInstance,
    Token,
    build_lexer,
    consume,
    lex_at,
    reset_for_embedding,
)
from .parse_engine import (
    AstNode,
    ConflictReport,
    ParseSession,
    analyze_conflicts,
    ast_equal,
    ast_from_json,
    ast_to_json,
    parse,
    parse_production,
    validate_ast,
)
from .composition import (
    ComposedLanguage,
    CompositionConfig,
    EmbeddingDecl,
    HandwrittenInterfaceDef,
    StartDecl,
    bind,
    parse_config,
)
from .traversal import (
    CombinedVisitor,
    VisitorFragment,
    combine,
    pretty_print,
    traverse,
)

__all__ = [
    "ANY_NODE",
    "AstNode",
    "Cardinality",
    "CharQueue",
    "CombinedVisitor",
    "ComposedLanguage",
    "CompositionConfig",
    "ConflictReport",
    "ConsumeBehindCommitError",
    "CyclicInheritanceError",
    "Diagnostic",
    "DuplicateAliasError",
    "DuplicateFragmentError",
    "DuplicateNameError",
    "EmbeddingDecl",
    "EmbeddingInSpeculationError",
    "GrammarDef",
    "GrammarForgeError",
    "GrammarSyntaxError",
    "HandwrittenInterfaceDef",
    "InterfaceNotSatisfiedError",
    "LexError",
    "LexerInstance",
    "MissingInterfaceAttributeError",
    "MissingStartError",
    "NoViableAlternativeError",
    "ParseError",
    "ParseSession",
    "Schema",
    "StartDecl",
    "Token",
    "UnboundExternalError",
    "UnprintableNodeError",
    "UnresolvedBindingError",
    "UnresolvedSupergrammarError",
    "UnresolvedTypeError",
    "VisitorFragment",
    "analyze_conflicts",
    "ast_equal",
    "ast_from_json",
    "ast_to_json",
    "bind",
    "build_lexer",
    "combine",
    "consume",
    "derive_schema",
    "infer_cardinality",
    "lex_at",
    "load_grammar_set",
    "parse",
    "parse_config",
    "parse_grammar",
    "parse_production",
    "pretty_print",
    "render_grammar",
    "reset_for_embedding",
    "schema_from_json",
    "schema_to_json",
    "traverse",
    "validate_ast",
    "validate_grammar",
]
