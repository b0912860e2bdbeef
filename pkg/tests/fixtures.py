"""Shared grammar texts and composition helpers for the test suite."""

from grammarforge import parse_grammar
from grammarforge.composition import CompositionConfig, StartDecl, bind, parse_config

BOOKSTORE = """
package mc.examples.bookstore;

grammar Bookstore {
  // Token "ID" is reflected as int in the abstract syntax.
  ident ID ('0'..'9')+ : int;

  Bookstore = "bookstore" name:IDENT "{" ( Book | Journal )* "}" ;
  Book = "book" id:ID title:STRING "by"
         authors:Person ("," authors:Person)* ";" ;
  Journal = "journal" id:ID title:STRING ";" ;
  Person = forename:IDENT lastname:IDENT ;
}
"""

EXTENDED_BOOKSTORE = """
package mc.examples.bookstore2;

grammar ExtendedBookstore extends mc.examples.bookstore.Bookstore {
  Journal = "journal" id:ID title:STRING "editors"
            editors:Person ("," editors:Person)* ";" ;
}
"""

ITEM_BOOKSTORE = """
package mc.examples.itemstore;

grammar Itemstore {
  ident ID ('0'..'9')+ : int;
  interface Item = ast title:STRING ;

  Bookstore = "bookstore" name:IDENT "{" ( Item )* "}" ;
  Book implements Item = "book" id:ID title:STRING "by"
       authors:Person ("," authors:Person)* ";" ;
  Journal implements Item = "journal" id:ID title:STRING ";" ;
  Person = forename:IDENT lastname:IDENT ;
}
"""

AUDIO_EXTENSION = """
package mc.examples.audiostore;

grammar Audiostore extends mc.examples.itemstore.Itemstore {
  AudioBook implements Item = "audiobook" id:ID title:STRING
            speaker:Person ";" ;
}
"""

AUDIO_STANDALONE = """
package mc.examples.audio;

grammar Audio {
  ident ID ('0'..'9')+ : int;
  AudioBook = "audiobook" id:ID title:STRING speaker:Person ";" ;
  Person = forename:IDENT lastname:IDENT ;
}
"""

COMBINED_STORE = """
package mc.examples.combined;

grammar CombinedStore extends mc.examples.itemstore.Itemstore, mc.examples.audio.Audio {
  AudioBook implements Item = "audiobook" id:ID title:STRING
            speaker:Person ";" ;
}
"""

EXTERNAL_BOOKSTORE = """
package mc.examples.bookstore;

grammar Bookstore {
  ident ID ('0'..'9')+ : int;
  external Bookentry;
  external Journalentry / example.IJournalEntry;

  Bookstore = "bookstore" name:IDENT "{" ( Book | Journal )* "}" ;
  Book = "book" id:ID title:STRING "by"
         authors:Person ("," authors:Person)* Bookentry ";" ;
  Journal = "journal" id:ID title:STRING Journalentry ";" ;
  Person = forename:IDENT lastname:IDENT ;
}
"""

BIBTEX = """
package mc.examples.bibtex;

grammar Bibtex {
  BibtexBook = "@book" "{" key:IDENT "}" ;
  BibtexJournal = "@journal" "{" key:IDENT "}" ;
}
"""

PLAIN_REFS = """
package mc.examples.plain;

grammar Plain {
  PlainBook = "entry" key:IDENT ;
  PlainJournal = "entry" key:IDENT ;
}
"""

COMBINE_CONFIG = """
// rule Bookstore of grammar mc.examples.bookstore.Bookstore starts the parse
mc.examples.bookstore.Bookstore.Bookstore bst <<start>>;
mc.examples.bibtex.Bibtex.BibtexBook bibBook in bst.Bookentry;
mc.examples.bibtex.Bibtex.BibtexJournal bibJrn in bst.Journalentry;
interface example.IJournalEntry = key:Text;
"""

SELECTOR_BOOKSTORE = """
package mc.examples.bookstore;

grammar Bookstore {
  ident ID ('0'..'9')+ : int;
  external Bookentry;
  external Journalentry / example.IJournalEntry;

  Bookstore = "bookstore" name:IDENT booktype:IDENT astscript { set(bt,booktype); }
              "{" ( Book | Journal )* "}" ;
  Book = "book" id:ID title:STRING "by"
         authors:Person ("," authors:Person)* Bookentry<global bt> ";" ;
  Journal = "journal" id:ID title:STRING jt:IDENT Journalentry<jt> ";" ;
  Person = forename:IDENT lastname:IDENT ;
}
"""

SELECTOR_CONFIG = """
mc.examples.bookstore.Bookstore.Bookstore bst <<start>>;
mc.examples.bibtex.Bibtex.BibtexBook bibBook in bst.Bookentry when "bibtex";
mc.examples.plain.Plain.PlainBook plBook in bst.Bookentry when "plain";
mc.examples.bibtex.Bibtex.BibtexJournal bibJrn in bst.Journalentry when "bibtex";
mc.examples.plain.Plain.PlainJournal plJrn in bst.Journalentry when "plain";
interface example.IJournalEntry = key:Text;
"""

BOOKSTORE_INPUT = (
    'bookstore Store { book 12 "DSL Engineering" by Ann Smith , Bob Lee ; '
    'journal 7 "SoSyM" ; }'
)


def grammar_set(*texts):
    grammars = [parse_grammar(t) for t in texts]
    return {g.fq_name: g for g in grammars}


def single_composed(text, start_production):
    """Composed language over one grammar, started at one production."""
    gs = grammar_set(text)
    (fq,) = gs.keys()
    config = CompositionConfig(
        start=StartDecl(grammar_fq=fq, production=start_production, alias="main")
    )
    return bind(config, gs)


def composed_from(config_text, *grammar_texts):
    gs = grammar_set(*grammar_texts)
    return bind(parse_config(config_text), gs)


def bookstore_composed():
    return single_composed(BOOKSTORE, "Bookstore")


def extended_composed():
    gs = grammar_set(BOOKSTORE, EXTENDED_BOOKSTORE)
    config = CompositionConfig(
        start=StartDecl(
            grammar_fq="mc.examples.bookstore2.ExtendedBookstore",
            production="Bookstore",
            alias="main",
        )
    )
    return bind(config, gs)


def embedded_composed():
    return composed_from(COMBINE_CONFIG, EXTERNAL_BOOKSTORE, BIBTEX)


def selector_composed():
    return composed_from(SELECTOR_CONFIG, SELECTOR_BOOKSTORE, BIBTEX, PLAIN_REFS)
